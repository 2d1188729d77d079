//! Line-oriented parser for network description files.
//!
//! ```text
//! # full-line or trailing comment
//! node 1 mu=1.0
//! node 2 mu=1.5
//! class a lambda=0.5 path=1,2
//! ```
//!
//! `node` lines declare an id and a service rate, `class` lines declare a
//! name, an arrival rate and a comma-separated itinerary. Order of lines does
//! not matter; itineraries are resolved after the whole file is read.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{ClassSpec, ModelError, NetworkSpec, NodeId, NodeSpec};
use crate::scalar::Scalar;

/// Parse failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("expected `node` or `class`, got `{0}`")]
    UnknownKeyword(String),
    #[error("expected {0}")]
    Missing(&'static str),
    #[error("unexpected trailing token `{0}`")]
    Trailing(String),
    #[error("expected `{key}=...`, got `{got}`")]
    WrongKey { key: &'static str, got: String },
    #[error("invalid node id `{0}`")]
    BadNodeId(String),
    #[error("invalid number `{0}`")]
    BadNumber(String),
    #[error("empty itinerary")]
    EmptyPath,
    #[error(transparent)]
    Model(ModelError),
}

/// Parses a network description; see the module doc for the format.
pub fn parse_network<T: Scalar>(text: &str) -> Result<NetworkSpec<T>, ParseError> {
    let mut nodes: Vec<NodeSpec<T>> = Vec::new();
    let mut classes: Vec<(ClassSpec<T>, usize, usize)> = Vec::new();
    let mut node_lines: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut class_lines: BTreeMap<String, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let body = match raw.find('#') {
            Some(cut) => &raw[..cut],
            None => raw,
        };
        let toks = tokens(body);
        let Some(&(kw_col, keyword)) = toks.first() else {
            continue;
        };
        let fail = |col: usize, kind: ParseErrorKind| ParseError {
            line: line_no,
            col,
            kind,
        };
        match keyword {
            "node" => {
                let &(id_col, id_tok) = toks
                    .get(1)
                    .ok_or_else(|| fail(body.len() + 1, ParseErrorKind::Missing("node id")))?;
                let id: u32 = id_tok
                    .parse()
                    .map_err(|_| fail(id_col, ParseErrorKind::BadNodeId(id_tok.into())))?;
                let &(mu_col, mu_tok) = toks
                    .get(2)
                    .ok_or_else(|| fail(body.len() + 1, ParseErrorKind::Missing("`mu=...`")))?;
                let mu: T = parse_kv(mu_tok, "mu").map_err(|k| fail(mu_col, k))?;
                if let Some(&(col, tok)) = toks.get(3) {
                    return Err(fail(col, ParseErrorKind::Trailing(tok.into())));
                }
                let node = NodeSpec::new(NodeId(id), mu).map_err(|e| {
                    let col = match &e {
                        ModelError::BadServiceRate(_) => mu_col,
                        _ => id_col,
                    };
                    fail(col, ParseErrorKind::Model(e))
                })?;
                if node_lines.insert(node.id(), line_no).is_some() {
                    return Err(fail(
                        id_col,
                        ParseErrorKind::Model(ModelError::DuplicateNode(node.id())),
                    ));
                }
                nodes.push(node);
            }
            "class" => {
                let &(name_col, name) = toks
                    .get(1)
                    .ok_or_else(|| fail(body.len() + 1, ParseErrorKind::Missing("class name")))?;
                let &(lam_col, lam_tok) = toks
                    .get(2)
                    .ok_or_else(|| fail(body.len() + 1, ParseErrorKind::Missing("`lambda=...`")))?;
                let lambda: T = parse_kv(lam_tok, "lambda").map_err(|k| fail(lam_col, k))?;
                let &(path_col, path_tok) = toks
                    .get(3)
                    .ok_or_else(|| fail(body.len() + 1, ParseErrorKind::Missing("`path=...`")))?;
                let itinerary = parse_path(path_tok).map_err(|k| fail(path_col, k))?;
                if let Some(&(col, tok)) = toks.get(4) {
                    return Err(fail(col, ParseErrorKind::Trailing(tok.into())));
                }
                let class = ClassSpec::new(name, lambda, itinerary).map_err(|e| {
                    let col = match &e {
                        ModelError::BadArrivalRate(_) => lam_col,
                        ModelError::EmptyItinerary(_) | ModelError::RepeatedNode { .. } => path_col,
                        _ => name_col,
                    };
                    fail(col, ParseErrorKind::Model(e))
                })?;
                if class_lines
                    .insert(class.name().to_owned(), line_no)
                    .is_some()
                {
                    return Err(fail(
                        name_col,
                        ParseErrorKind::Model(ModelError::DuplicateClass(class.name().into())),
                    ));
                }
                classes.push((class, line_no, path_col));
            }
            other => {
                return Err(fail(kw_col, ParseErrorKind::UnknownKeyword(other.into())));
            }
        }
    }

    // Itineraries may reference nodes declared later, so check them now that
    // the whole file is in; errors point at the offending `path=` token.
    for (class, line, path_col) in &classes {
        for &node in class.itinerary() {
            if !node_lines.contains_key(&node) {
                return Err(ParseError {
                    line: *line,
                    col: *path_col,
                    kind: ParseErrorKind::Model(ModelError::UnknownNode {
                        class: class.name().into(),
                        node,
                    }),
                });
            }
        }
    }

    NetworkSpec::new(nodes, classes.into_iter().map(|(c, _, _)| c).collect()).map_err(|e| {
        // Whole-document errors (no nodes / no classes) have no useful column.
        ParseError {
            line: 0,
            col: 0,
            kind: ParseErrorKind::Model(e),
        }
    })
}

/// Splits a line into `(1-based column, token)` pairs on whitespace.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_kv<T: Scalar>(tok: &str, key: &'static str) -> Result<T, ParseErrorKind> {
    let (k, v) = tok.split_once('=').ok_or(ParseErrorKind::WrongKey {
        key,
        got: tok.into(),
    })?;
    if k != key {
        return Err(ParseErrorKind::WrongKey {
            key,
            got: tok.into(),
        });
    }
    let x: f64 = v.parse().map_err(|_| ParseErrorKind::BadNumber(v.into()))?;
    T::from_f64(x).ok_or(ParseErrorKind::BadNumber(v.into()))
}

fn parse_path(tok: &str) -> Result<Vec<NodeId>, ParseErrorKind> {
    let (k, v) = tok.split_once('=').ok_or(ParseErrorKind::WrongKey {
        key: "path",
        got: tok.into(),
    })?;
    if k != "path" {
        return Err(ParseErrorKind::WrongKey {
            key: "path",
            got: tok.into(),
        });
    }
    if v.is_empty() {
        return Err(ParseErrorKind::EmptyPath);
    }
    v.split(',')
        .map(|part| {
            part.parse::<u32>()
                .map(NodeId)
                .map_err(|_| ParseErrorKind::BadNodeId(part.into()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GOOD: &str = "\
# three nodes, two classes
node 1 mu=1.0
node 2 mu=1.5   # inline comment
node 3 mu=2.0

class alpha lambda=0.3 path=1,3
class beta  lambda=0.4 path=2,3
";

    #[test]
    fn parses_a_full_description() {
        let net: NetworkSpec<f64> = parse_network(GOOD).unwrap();
        assert_eq!(net.nodes().len(), 3);
        assert_eq!(net.classes().len(), 2);
        assert_relative_eq!(net.node(NodeId(2)).unwrap().mu(), 1.5);
        let beta = net.class("beta").unwrap();
        assert_relative_eq!(beta.lambda(), 0.4);
        assert_eq!(beta.itinerary(), &[NodeId(2), NodeId(3)]);
    }

    #[test]
    fn forward_references_are_allowed() {
        let net: NetworkSpec<f64> =
            parse_network("class a lambda=0.1 path=1\nnode 1 mu=1\n").unwrap();
        assert_eq!(net.classes()[0].itinerary(), &[NodeId(1)]);
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_network::<f64>("node 1 mu=1\nnode x mu=1\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 6));
        assert_eq!(err.kind, ParseErrorKind::BadNodeId("x".into()));
        assert_eq!(err.to_string(), "line 2, column 6: invalid node id `x`");

        let err = parse_network::<f64>("node 1 mu=fast\n").unwrap_err();
        assert_eq!((err.line, err.col), (1, 8));
        assert_eq!(err.kind, ParseErrorKind::BadNumber("fast".into()));

        let err = parse_network::<f64>("node 1 mu=1\nqueue 2 mu=1\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 1));
        assert_eq!(err.kind, ParseErrorKind::UnknownKeyword("queue".into()));

        let err = parse_network::<f64>("node 1\n").unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.kind, ParseErrorKind::Missing("`mu=...`"));

        let err = parse_network::<f64>("node 1 rate=1\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::WrongKey {
                key: "mu",
                got: "rate=1".into()
            }
        );

        let err = parse_network::<f64>("node 1 mu=1 extra\n").unwrap_err();
        assert_eq!((err.line, err.col), (1, 13));
        assert_eq!(err.kind, ParseErrorKind::Trailing("extra".into()));
    }

    #[test]
    fn reports_semantic_errors_with_positions() {
        let err = parse_network::<f64>("node 1 mu=1\nnode 1 mu=2\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 6));
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::DuplicateNode(NodeId(1)))
        );

        let err = parse_network::<f64>("node 1 mu=1\nclass a lambda=0.1 path=1,2\n").unwrap_err();
        assert_eq!((err.line, err.col), (2, 20));
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::UnknownNode {
                class: "a".into(),
                node: NodeId(2)
            })
        );

        let err = parse_network::<f64>("node 1 mu=-2\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::BadServiceRate(NodeId(1)))
        );

        let err = parse_network::<f64>("node 1 mu=1\nclass a lambda=0 path=1\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::BadArrivalRate("a".into()))
        );

        let err = parse_network::<f64>("node 1 mu=1\n# only a node\n").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Model(ModelError::NoClasses));
    }

    #[test]
    fn blank_and_comment_lines_are_skipped() {
        let net: NetworkSpec<f64> =
            parse_network("\n\n# header\n   \nnode 1 mu=1\nclass a lambda=0.5 path=1\n").unwrap();
        assert_eq!(net.nodes().len(), 1);
    }

    #[test]
    fn rejects_repeated_node_in_path() {
        let err = parse_network::<f64>("node 1 mu=1\nclass a lambda=0.1 path=1,1\n").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::Model(ModelError::RepeatedNode {
                class: "a".into(),
                node: NodeId(1)
            })
        );
    }
}
