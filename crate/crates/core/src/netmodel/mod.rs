//! Network description, traffic equations and admissibility checks.
//!
//! A network is a set of exponential-server FCFS nodes plus a set of packet
//! classes. Each class is a Poisson source with a fixed itinerary: an ordered,
//! duplicate-free list of nodes the class visits before leaving the network.

mod parse;

pub use parse::{parse_network, ParseError, ParseErrorKind};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

/// Identifier of a queueing node, unique within a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Structural problems in a network description.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("node id must be positive")]
    ZeroNodeId,
    #[error("node {0}: service rate must be finite and positive")]
    BadServiceRate(NodeId),
    #[error("class `{0}`: arrival rate must be finite and positive")]
    BadArrivalRate(String),
    #[error("class `{0}`: itinerary must visit at least one node")]
    EmptyItinerary(String),
    #[error("class `{class}`: node {node} appears twice in the itinerary")]
    RepeatedNode { class: String, node: NodeId },
    #[error("duplicate node id {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate class name `{0}`")]
    DuplicateClass(String),
    #[error("class `{class}` routes through unknown node {node}")]
    UnknownNode { class: String, node: NodeId },
    #[error("network has no nodes")]
    NoNodes,
    #[error("network has no classes")]
    NoClasses,
}

/// One exponential-server FCFS node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSpec<T> {
    id: NodeId,
    mu: T,
}

impl<T: Scalar> NodeSpec<T> {
    pub fn new(id: NodeId, mu: T) -> Result<Self, ModelError> {
        if id.0 == 0 {
            return Err(ModelError::ZeroNodeId);
        }
        if !mu.is_finite() || mu <= T::zero() {
            return Err(ModelError::BadServiceRate(id));
        }
        Ok(Self { id, mu })
    }

    pub fn id(&self) -> NodeId {
        self.id
    }

    /// Service rate.
    pub fn mu(&self) -> T {
        self.mu
    }
}

/// One packet class: a Poisson source and the ordered list of nodes it visits.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec<T> {
    name: String,
    lambda: T,
    itinerary: Vec<NodeId>,
}

impl<T: Scalar> ClassSpec<T> {
    pub fn new(
        name: impl Into<String>,
        lambda: T,
        itinerary: Vec<NodeId>,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if !lambda.is_finite() || lambda <= T::zero() {
            return Err(ModelError::BadArrivalRate(name));
        }
        if itinerary.is_empty() {
            return Err(ModelError::EmptyItinerary(name));
        }
        let mut seen = BTreeSet::new();
        for &node in &itinerary {
            if !seen.insert(node) {
                return Err(ModelError::RepeatedNode { class: name, node });
            }
        }
        Ok(Self {
            name,
            lambda,
            itinerary,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Exogenous arrival rate.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Nodes visited, in order.
    pub fn itinerary(&self) -> &[NodeId] {
        &self.itinerary
    }
}

/// A validated network: unique node ids, unique class names, every itinerary
/// confined to declared nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec<T> {
    nodes: Vec<NodeSpec<T>>,
    classes: Vec<ClassSpec<T>>,
}

impl<T: Scalar> NetworkSpec<T> {
    pub fn new(nodes: Vec<NodeSpec<T>>, classes: Vec<ClassSpec<T>>) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::NoNodes);
        }
        if classes.is_empty() {
            return Err(ModelError::NoClasses);
        }
        let mut ids = BTreeSet::new();
        for node in &nodes {
            if !ids.insert(node.id) {
                return Err(ModelError::DuplicateNode(node.id));
            }
        }
        let mut names = BTreeSet::new();
        for class in &classes {
            if !names.insert(class.name.clone()) {
                return Err(ModelError::DuplicateClass(class.name.clone()));
            }
            for &node in &class.itinerary {
                if !ids.contains(&node) {
                    return Err(ModelError::UnknownNode {
                        class: class.name.clone(),
                        node,
                    });
                }
            }
        }
        Ok(Self { nodes, classes })
    }

    pub fn nodes(&self) -> &[NodeSpec<T>] {
        &self.nodes
    }

    pub fn classes(&self) -> &[ClassSpec<T>] {
        &self.classes
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeSpec<T>> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn class(&self, name: &str) -> Option<&ClassSpec<T>> {
        self.classes.iter().find(|c| c.name == name)
    }
}

/// Per-class and aggregate arrival rates and loads at every node.
///
/// Built by [`solve_traffic`]. Node loads are stored as the sum of the class
/// loads, so `rho(j) == sum_c rho_c(j)` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution<T> {
    class_rates: BTreeMap<(String, NodeId), T>,
    node_rates: BTreeMap<NodeId, T>,
    node_loads: BTreeMap<NodeId, T>,
    node_mus: BTreeMap<NodeId, T>,
}

impl<T: Scalar> FlowSolution<T> {
    /// Arrival rate of one class at one node; zero off the class itinerary.
    pub fn class_node_rate(&self, class: &str, node: NodeId) -> T {
        self.class_rates
            .get(&(class.to_owned(), node))
            .copied()
            .unwrap_or_else(T::zero)
    }

    /// Load contributed by one class at one node.
    pub fn class_node_load(&self, class: &str, node: NodeId) -> T {
        match self.node_mus.get(&node) {
            Some(&mu) => self.class_node_rate(class, node) / mu,
            None => T::zero(),
        }
    }

    /// Total arrival rate at a node, all classes combined.
    pub fn node_rate(&self, node: NodeId) -> T {
        self.node_rates.get(&node).copied().unwrap_or_else(T::zero)
    }

    /// Total load at a node, all classes combined.
    pub fn node_load(&self, node: NodeId) -> T {
        self.node_loads.get(&node).copied().unwrap_or_else(T::zero)
    }
}

/// Solves the traffic equations for deterministic itineraries: a class feeds
/// a node at its full exogenous rate iff the node lies on the itinerary.
pub fn solve_traffic<T: Scalar>(net: &NetworkSpec<T>) -> FlowSolution<T> {
    let mut class_rates = BTreeMap::new();
    let mut node_rates: BTreeMap<NodeId, T> = BTreeMap::new();
    let mut node_loads: BTreeMap<NodeId, T> = BTreeMap::new();
    let mut node_mus = BTreeMap::new();
    for node in net.nodes() {
        node_rates.insert(node.id(), T::zero());
        node_loads.insert(node.id(), T::zero());
        node_mus.insert(node.id(), node.mu());
    }
    for class in net.classes() {
        for &node in class.itinerary() {
            class_rates.insert((class.name().to_owned(), node), class.lambda());
            let mu = node_mus[&node];
            *node_rates.get_mut(&node).unwrap() = node_rates[&node] + class.lambda();
            *node_loads.get_mut(&node).unwrap() = node_loads[&node] + class.lambda() / mu;
        }
    }
    FlowSolution {
        class_rates,
        node_rates,
        node_loads,
        node_mus,
    }
}

/// A node whose total arrival rate reaches or exceeds its service rate.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityViolation {
    pub node: NodeId,
    pub lambda: f64,
    pub mu: f64,
}

impl fmt::Display for StabilityViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {}: lambda={} >= mu={}",
            self.node, self.lambda, self.mu
        )
    }
}

/// Flags every node with `lambda >= mu`. Strict inequality is required; a
/// critically loaded node is reported as a violation.
pub fn check_stability<T: Scalar>(
    flow: &FlowSolution<T>,
    net: &NetworkSpec<T>,
) -> Vec<StabilityViolation> {
    let mut out = Vec::new();
    for node in net.nodes() {
        let lambda = flow.node_rate(node.id());
        if lambda >= node.mu() {
            out.push(StabilityViolation {
                node: node.id(),
                lambda: lambda.to_f64_lossy(),
                mu: node.mu().to_f64_lossy(),
            });
        }
    }
    out
}

/// Why a pair of itineraries can let one packet pass another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OvertakeKind {
    /// The shared nodes appear in opposite relative order.
    OrderReversed,
    /// The named class visits the shared nodes with a detour in between.
    NonContiguous { class: String },
}

/// A class pair whose itineraries fail the shared-segment criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OvertakeViolation {
    pub class_a: String,
    pub class_b: String,
    /// Shared nodes, in the order the first class visits them.
    pub nodes: Vec<NodeId>,
    pub kind: OvertakeKind,
}

impl fmt::Display for OvertakeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        match &self.kind {
            OvertakeKind::OrderReversed => write!(
                f,
                "classes `{}` and `{}` traverse shared nodes {} in opposite order",
                self.class_a,
                self.class_b,
                nodes.join(",")
            ),
            OvertakeKind::NonContiguous { class } => write!(
                f,
                "class `{class}` visits shared nodes {} non-contiguously \
                 (pair `{}`/`{}`)",
                nodes.join(","),
                self.class_a,
                self.class_b
            ),
        }
    }
}

/// Conservative shared-segment check: for every class pair, the common nodes
/// must appear in the same relative order and form a contiguous run of each
/// itinerary. Sufficient for an overtake-free network, not necessary; an
/// empty result certifies the network, a violation only withdraws the
/// certificate.
pub fn check_overtake_free<T: Scalar>(net: &NetworkSpec<T>) -> Vec<OvertakeViolation> {
    let mut out = Vec::new();
    let classes = net.classes();
    for (i, a) in classes.iter().enumerate() {
        for b in &classes[i + 1..] {
            let pos_b: BTreeMap<NodeId, usize> = b
                .itinerary()
                .iter()
                .enumerate()
                .map(|(k, &n)| (n, k))
                .collect();
            // Shared nodes with their positions, in a's visiting order.
            let shared: Vec<(usize, usize, NodeId)> = a
                .itinerary()
                .iter()
                .enumerate()
                .filter_map(|(k, &n)| pos_b.get(&n).map(|&kb| (k, kb, n)))
                .collect();
            if shared.len() < 2 {
                continue;
            }
            let nodes: Vec<NodeId> = shared.iter().map(|&(_, _, n)| n).collect();
            let ordered = shared.windows(2).all(|w| w[0].1 < w[1].1);
            if !ordered {
                out.push(OvertakeViolation {
                    class_a: a.name().to_owned(),
                    class_b: b.name().to_owned(),
                    nodes,
                    kind: OvertakeKind::OrderReversed,
                });
                continue;
            }
            let contiguous_a = shared.windows(2).all(|w| w[1].0 == w[0].0 + 1);
            let contiguous_b = shared.windows(2).all(|w| w[1].1 == w[0].1 + 1);
            if !contiguous_a {
                out.push(OvertakeViolation {
                    class_a: a.name().to_owned(),
                    class_b: b.name().to_owned(),
                    nodes: nodes.clone(),
                    kind: OvertakeKind::NonContiguous {
                        class: a.name().to_owned(),
                    },
                });
            }
            if !contiguous_b {
                out.push(OvertakeViolation {
                    class_a: a.name().to_owned(),
                    class_b: b.name().to_owned(),
                    nodes,
                    kind: OvertakeKind::NonContiguous {
                        class: b.name().to_owned(),
                    },
                });
            }
        }
    }
    out
}
