//! Closed-form age-of-information results for a class crossing an
//! overtake-free path of exponential FCFS nodes.
//!
//! The central quantity is the expected product of a packet's end-to-end
//! sojourn time and the gap to the next same-class departure; the
//! time-average age and its one-sided limits follow from it by renewal
//! arguments.

use thiserror::Error;

use crate::netmodel::{FlowSolution, NetworkSpec, NodeId};
use crate::scalar::Scalar;

/// Loads closer to saturation than this are rejected rather than evaluated.
pub const SATURATION_EPS: f64 = 1e-12;

/// Domain violations for the closed-form operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgeError {
    #[error("service rate must be finite and positive, got {0}")]
    InvalidServiceRate(f64),
    #[error("arrival rate must be finite and positive, got {0}")]
    InvalidArrivalRate(f64),
    #[error("class load must be positive, got {0}")]
    InvalidClassLoad(f64),
    #[error("class load {rho_c} exceeds the node load {rho}")]
    ClassLoadExceedsTotal { rho_c: f64, rho: f64 },
    #[error("node load {rho} is within {SATURATION_EPS} of saturation")]
    Saturated { rho: f64 },
    #[error("path must visit at least one node")]
    EmptyPath,
    #[error("tandem must have at least one node")]
    EmptyTandem,
    #[error("node load {rho_c} x rate {mu} does not reproduce the class rate {lambda_c}")]
    InconsistentFlow { rho_c: f64, mu: f64, lambda_c: f64 },
    #[error("class `{0}` not found in the network")]
    UnknownClass(String),
}

fn check_rate<T: Scalar>(x: T, err: fn(f64) -> AgeError) -> Result<(), AgeError> {
    if !x.is_finite() || x <= T::zero() {
        return Err(err(x.to_f64_lossy()));
    }
    Ok(())
}

fn check_load_triple<T: Scalar>(rho_c: T, rho: T, mu: T) -> Result<(), AgeError> {
    check_rate(mu, AgeError::InvalidServiceRate)?;
    if !rho_c.is_finite() || rho_c <= T::zero() {
        return Err(AgeError::InvalidClassLoad(rho_c.to_f64_lossy()));
    }
    if rho_c > rho {
        return Err(AgeError::ClassLoadExceedsTotal {
            rho_c: rho_c.to_f64_lossy(),
            rho: rho.to_f64_lossy(),
        });
    }
    if !rho.is_finite() || T::one() - rho < T::from_f64_lossy(SATURATION_EPS) {
        return Err(AgeError::Saturated {
            rho: rho.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Expected product of a tagged packet's waiting time at a node and the
/// interarrival gap behind the previous same-class packet there, for class
/// load `rho_c` inside total load `rho` at service rate `mu`.
///
/// The cross term vanishes smoothly as `rho_c -> rho`, so the single-class
/// case needs no special handling.
pub fn waiting_arrival_correlation<T: Scalar>(rho_c: T, rho: T, mu: T) -> Result<T, AgeError> {
    check_load_triple(rho_c, rho, mu)?;
    let one = T::one();
    let excess = rho - rho_c;
    let om_excess = one - excess;
    let direct = rho_c * (one - rho * excess) / ((one - rho) * om_excess.powi(3));
    let cross = excess / (rho_c * om_excess);
    Ok((direct + cross) / (mu * mu))
}

/// Load profile along one class's path: per node the service rate, the total
/// load and the share contributed by the class itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLoad<T> {
    pub node: NodeId,
    pub mu: T,
    pub rho: T,
    pub rho_c: T,
}

/// Validated inputs for the path-level operations: a class arrival rate and
/// the load profile at every node it visits, all strictly inside the stable
/// region.
#[derive(Debug, Clone, PartialEq)]
pub struct PathLoads<T> {
    lambda_c: T,
    nodes: Vec<NodeLoad<T>>,
}

impl<T: Scalar> PathLoads<T> {
    pub fn new(lambda_c: T, nodes: Vec<NodeLoad<T>>) -> Result<Self, AgeError> {
        check_rate(lambda_c, AgeError::InvalidArrivalRate)?;
        if nodes.is_empty() {
            return Err(AgeError::EmptyPath);
        }
        for n in &nodes {
            check_load_triple(n.rho_c, n.rho, n.mu)?;
            // rho_c must be this class's own share: rho_c * mu == lambda_c.
            let residual = (n.rho_c * n.mu - lambda_c).abs();
            if residual > T::from_f64_lossy(1e-9) * lambda_c {
                return Err(AgeError::InconsistentFlow {
                    rho_c: n.rho_c.to_f64_lossy(),
                    mu: n.mu.to_f64_lossy(),
                    lambda_c: lambda_c.to_f64_lossy(),
                });
            }
        }
        Ok(Self { lambda_c, nodes })
    }

    /// Load profile for one class of a network, taken from a traffic solution.
    pub fn for_class(
        net: &NetworkSpec<T>,
        flow: &FlowSolution<T>,
        class: &str,
    ) -> Result<Self, AgeError> {
        let spec = net
            .class(class)
            .ok_or_else(|| AgeError::UnknownClass(class.to_owned()))?;
        let nodes = spec
            .itinerary()
            .iter()
            .map(|&id| NodeLoad {
                node: id,
                mu: net.node(id).expect("itinerary nodes exist").mu(),
                rho: flow.node_load(id),
                rho_c: flow.class_node_load(class, id),
            })
            .collect();
        Self::new(spec.lambda(), nodes)
    }

    /// Profile of a line of `n` identical nodes carrying a single class.
    pub fn homogeneous(n: u32, lambda: T, mu: T) -> Result<Self, AgeError> {
        if n == 0 {
            return Err(AgeError::EmptyTandem);
        }
        check_rate(mu, AgeError::InvalidServiceRate)?;
        let rho = lambda / mu;
        let nodes = (1..=n)
            .map(|i| NodeLoad {
                node: NodeId(i),
                mu,
                rho,
                rho_c: rho,
            })
            .collect();
        Self::new(lambda, nodes)
    }

    pub fn lambda_c(&self) -> T {
        self.lambda_c
    }

    pub fn nodes(&self) -> &[NodeLoad<T>] {
        &self.nodes
    }
}

/// Expected product of end-to-end sojourn time and inter-departure gap for
/// the class described by `loads`: per node the waiting correlation plus
/// `1/(mu lambda_c)`, summed along the path.
pub fn sojourn_interdeparture_product<T: Scalar>(loads: &PathLoads<T>) -> Result<T, AgeError> {
    let lam = loads.lambda_c();
    loads
        .nodes()
        .iter()
        .map(|n| {
            waiting_arrival_correlation(n.rho_c, n.rho, n.mu).map(|w| w + (n.mu * lam).recip())
        })
        .sum()
}

/// Contribution of one node to the left age limit, split into the waiting
/// part `lambda_c * E[W A]` and the service part `1/mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeAgeTerm<T> {
    pub node: NodeId,
    pub waiting: T,
    pub service: T,
}

/// Age results for one class at the path output.
///
/// `h` is the time-average age of the freshest delivered packet; `h_left`
/// and `h_right` are the averages of the sawtooth's lower and upper corner
/// values, sitting `1/lambda_c` below and above `h`. `peak` is the mean of
/// the age peaks themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeReport<T> {
    pub h: T,
    pub h_left: T,
    pub h_right: T,
    pub peak: T,
    /// Expected sojourn x inter-departure product the limits derive from.
    pub e_sd: T,
    pub per_node_terms: Vec<NodeAgeTerm<T>>,
}

/// Full age report for the class described by `loads`.
pub fn age_path<T: Scalar>(loads: &PathLoads<T>) -> Result<AgeReport<T>, AgeError> {
    let lam = loads.lambda_c();
    let mut per_node_terms = Vec::with_capacity(loads.nodes().len());
    let mut e_sd = T::zero();
    for n in loads.nodes() {
        let w = waiting_arrival_correlation(n.rho_c, n.rho, n.mu)?;
        e_sd = e_sd + w + (n.mu * lam).recip();
        per_node_terms.push(NodeAgeTerm {
            node: n.node,
            waiting: lam * w,
            service: n.mu.recip(),
        });
    }
    let h_left = lam * e_sd;
    let h = h_left + lam.recip();
    let h_right = h + lam.recip();
    let peak = peak_age_path(loads);
    Ok(AgeReport {
        h,
        h_left,
        h_right,
        peak,
        e_sd,
        per_node_terms,
    })
}

/// Mean peak age at the path output: one interarrival period plus the mean
/// sojourn time through every node. Exact for a single node; along longer
/// paths it treats per-node delays as independent, which matches the
/// product-form stationary law node by node.
pub fn peak_age_path<T: Scalar>(loads: &PathLoads<T>) -> T {
    let mut peak = loads.lambda_c().recip();
    for n in loads.nodes() {
        peak = peak + (n.mu * (T::one() - n.rho)).recip();
    }
    peak
}

/// Time-average age after `n` identical exponential nodes in series fed by
/// one Poisson class: `n rho^2/(mu - lambda) + n/mu + 1/lambda`.
pub fn tandem_age<T: Scalar>(n: u32, lambda: T, mu: T) -> Result<T, AgeError> {
    if n == 0 {
        return Err(AgeError::EmptyTandem);
    }
    check_rate(mu, AgeError::InvalidServiceRate)?;
    check_rate(lambda, AgeError::InvalidArrivalRate)?;
    let rho = lambda / mu;
    if T::one() - rho < T::from_f64_lossy(SATURATION_EPS) {
        return Err(AgeError::Saturated {
            rho: rho.to_f64_lossy(),
        });
    }
    let nf = T::from_u32(n).expect("tandem length fits in scalar");
    Ok(nf * rho * rho / (mu - lambda) + nf / mu + lambda.recip())
}

/// Time-average ages `(h_a, h_b)` for the two-source merge: class a crosses
/// nodes 1 then 3, class b crosses nodes 2 then 3, with the shared node 3
/// serving both.
pub fn two_class_ages<T: Scalar>(
    lambda_a: T,
    lambda_b: T,
    mu1: T,
    mu2: T,
    mu3: T,
) -> Result<(T, T), AgeError> {
    check_rate(lambda_a, AgeError::InvalidArrivalRate)?;
    check_rate(lambda_b, AgeError::InvalidArrivalRate)?;
    check_rate(mu1, AgeError::InvalidServiceRate)?;
    check_rate(mu2, AgeError::InvalidServiceRate)?;
    check_rate(mu3, AgeError::InvalidServiceRate)?;
    let eps = T::from_f64_lossy(SATURATION_EPS);
    let one = T::one();
    for (lam, mu) in [(lambda_a, mu1), (lambda_b, mu2), (lambda_a + lambda_b, mu3)] {
        let rho = lam / mu;
        if one - rho < eps {
            return Err(AgeError::Saturated {
                rho: rho.to_f64_lossy(),
            });
        }
    }
    let side = |lam_own: T, lam_other: T, mu_in: T| {
        let rho_in = lam_own / mu_in;
        let rho_own = lam_own / mu3;
        let rho_other = lam_other / mu3;
        let rho3 = rho_own + rho_other;
        let shared = rho_own * (one - rho3 * rho_other)
            / ((one - rho3) * (one - rho_other).powi(3))
            + rho_other / (rho_own * (one - rho_other));
        rho_in * rho_in / (mu_in - lam_own)
            + lam_own * shared / (mu3 * mu3)
            + mu_in.recip()
            + mu3.recip()
            + lam_own.recip()
    };
    Ok((side(lambda_a, lambda_b, mu1), side(lambda_b, lambda_a, mu2)))
}
