//! Discrete-event simulation of the network, used as an independent check on
//! the closed-form results.
//!
//! A run consists of independent replications (parallelised, deterministic
//! for a fixed master seed regardless of thread count); per class the run
//! reports age estimates with Student-t confidence intervals across
//! replications, plus departure-process and sojourn statistics.

mod engine;
mod estimators;
mod streams;

pub use estimators::{estimate_age_sawtooth, interdeparture_stats, sojourn_stats};

use rayon::prelude::*;
use thiserror::Error;

use crate::netmodel::{
    check_overtake_free, check_stability, solve_traffic, NetworkSpec, NodeId, OvertakeViolation,
    StabilityViolation,
};
use crate::scalar::Scalar;
use crate::stats;

use engine::ResolvedNet;

/// Fewer post-warm-up departures than this in any replication is treated as
/// a configuration error rather than silently producing noise.
pub const MIN_DEPARTURES_PER_CLASS: u64 = 100;

/// Simulation failures, from inadmissible networks to under-sampled runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("network is unstable: {}", join(.0))]
    Unstable(Vec<StabilityViolation>),
    #[error("network is not certified overtake-free: {}", join(.0))]
    NotOvertakeFree(Vec<OvertakeViolation>),
    #[error("simulation horizon must be finite and positive")]
    BadHorizon,
    #[error("warm-up fraction must lie in [0, 1)")]
    BadWarmupFraction,
    #[error("at least one replication is required")]
    NoReplications,
    #[error("probe node {0} does not exist")]
    UnknownProbeNode(NodeId),
    #[error(
        "class `{class}` produced {got} post-warm-up departures in replication {replication}, \
         fewer than the required {need}; increase the horizon"
    )]
    TooFewDepartures {
        class: String,
        replication: u32,
        got: u64,
        need: u64,
    },
    #[error("need at least {need} departure records, got {have}")]
    TooFewSamples { have: usize, need: usize },
    #[error("departure times are not strictly increasing")]
    UnorderedExits,
    #[error(
        "class `{class}` overtaking: a packet generated at {generated} left after one \
         generated at {previous}"
    )]
    OvertakingDetected {
        class: String,
        generated: f64,
        previous: f64,
    },
    #[error(
        "class `{class}` packet imbalance: {entered} entered, {exited} exited, {queued} queued"
    )]
    PacketImbalance {
        class: String,
        entered: u64,
        exited: u64,
        queued: u64,
    },
}

fn join<D: std::fmt::Display>(items: &[D]) -> String {
    items
        .iter()
        .map(D::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Run parameters. `horizon` is the simulated time span of one replication;
/// departures before `warmup_fraction * horizon` are discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub horizon: T,
    pub warmup_fraction: T,
    pub replications: u32,
    pub master_seed: u64,
    /// Node at which waiting x interarrival products are sampled, if any.
    pub wa_probe: Option<NodeId>,
}

impl<T: Scalar> SimConfig<T> {
    pub fn new(horizon: T, master_seed: u64) -> Self {
        Self {
            horizon,
            warmup_fraction: T::from_f64_lossy(0.1),
            replications: 10,
            master_seed,
            wa_probe: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !self.horizon.is_finite() || self.horizon <= T::zero() {
            return Err(SimError::BadHorizon);
        }
        if !self.warmup_fraction.is_finite()
            || self.warmup_fraction < T::zero()
            || self.warmup_fraction >= T::one()
        {
            return Err(SimError::BadWarmupFraction);
        }
        if self.replications == 0 {
            return Err(SimError::NoReplications);
        }
        Ok(())
    }
}

/// Point estimate with a 95% confidence half-width across replications.
/// The half-width is NaN when only one replication was run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub ci_half: T,
}

/// Per-class simulation output.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSimStats<T> {
    pub class: String,
    pub h: Estimate<T>,
    pub h_left: Estimate<T>,
    pub h_right: Estimate<T>,
    /// Inter-departure gap mean and second moment, averaged over replications.
    pub d_mean: T,
    pub d_m2: T,
    pub sojourn_mean: T,
    /// Mean waiting x interarrival product at the probe node, if probed and
    /// the class visits that node.
    pub wa_mean: Option<T>,
    /// Total post-warm-up departures across replications.
    pub departures: u64,
}

/// Whole-run simulation output, classes in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats<T> {
    pub classes: Vec<ClassSimStats<T>>,
    pub replications: u32,
}

struct RepClassSummary<T> {
    h_left: T,
    h: T,
    h_right: T,
    d_mean: T,
    d_m2: T,
    sojourn: T,
    wa_mean: Option<T>,
    departures: u64,
}

fn admit<T: Scalar>(net: &NetworkSpec<T>, cfg: &SimConfig<T>) -> Result<ResolvedNet<T>, SimError> {
    cfg.validate()?;
    let flow = solve_traffic(net);
    let unstable = check_stability(&flow, net);
    if !unstable.is_empty() {
        return Err(SimError::Unstable(unstable));
    }
    let overtaking = check_overtake_free(net);
    if !overtaking.is_empty() {
        return Err(SimError::NotOvertakeFree(overtaking));
    }
    ResolvedNet::new(net, cfg.wa_probe)
}

fn summarize_rep<T: Scalar>(
    run: &engine::RepRun<T>,
    rnet: &ResolvedNet<T>,
    replication: u32,
) -> Result<Vec<RepClassSummary<T>>, SimError> {
    run.departures
        .iter()
        .enumerate()
        .map(|(c, records)| {
            let got = records.len() as u64;
            if got < MIN_DEPARTURES_PER_CLASS {
                return Err(SimError::TooFewDepartures {
                    class: rnet.class_names[c].clone(),
                    replication,
                    got,
                    need: MIN_DEPARTURES_PER_CLASS,
                });
            }
            let (h_left, h, h_right) = estimate_age_sawtooth(records)?;
            let (d_mean, d_m2) = interdeparture_stats(records)?;
            let sojourn = sojourn_stats(records)?;
            let wa = &run.wa_products[c];
            let wa_mean = if wa.is_empty() {
                None
            } else {
                Some(stats::mean(wa))
            };
            Ok(RepClassSummary {
                h_left,
                h,
                h_right,
                d_mean,
                d_m2,
                sojourn,
                wa_mean,
                departures: got,
            })
        })
        .collect()
}

fn aggregate<T: Scalar>(
    rnet: &ResolvedNet<T>,
    reps: Vec<Vec<RepClassSummary<T>>>,
    replications: u32,
) -> SimStats<T> {
    let estimate = |xs: &[T]| Estimate {
        mean: stats::mean(xs),
        ci_half: stats::ci_half_width_95(xs),
    };
    let classes = rnet
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let per_rep: Vec<&RepClassSummary<T>> = reps.iter().map(|r| &r[c]).collect();
            let collect = |f: fn(&RepClassSummary<T>) -> T| -> Vec<T> {
                per_rep.iter().map(|r| f(r)).collect()
            };
            let wa: Vec<T> = per_rep.iter().filter_map(|r| r.wa_mean).collect();
            ClassSimStats {
                class: name.clone(),
                h: estimate(&collect(|r| r.h)),
                h_left: estimate(&collect(|r| r.h_left)),
                h_right: estimate(&collect(|r| r.h_right)),
                d_mean: stats::mean(&collect(|r| r.d_mean)),
                d_m2: stats::mean(&collect(|r| r.d_m2)),
                sojourn_mean: stats::mean(&collect(|r| r.sojourn)),
                wa_mean: if wa.len() == per_rep.len() {
                    Some(stats::mean(&wa))
                } else {
                    None
                },
                departures: per_rep.iter().map(|r| r.departures).sum(),
            }
        })
        .collect();
    SimStats {
        classes,
        replications,
    }
}

/// Simulates the network. Replications run in parallel; the result is a pure
/// function of the network and the config.
pub fn simulate<T: Scalar>(
    net: &NetworkSpec<T>,
    cfg: &SimConfig<T>,
) -> Result<SimStats<T>, SimError> {
    let rnet = admit(net, cfg)?;
    let reps: Vec<Vec<RepClassSummary<T>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let run = engine::run_replication(
                &rnet,
                cfg.horizon,
                cfg.warmup_fraction,
                cfg.master_seed,
                r,
                &mut |_, _, _| {},
            )?;
            summarize_rep(&run, &rnet, r)
        })
        .collect::<Result<_, _>>()?;
    Ok(aggregate(&rnet, reps, cfg.replications))
}

/// Like [`simulate`] but sequential, invoking `on_departure(class, generated,
/// exited)` for every delivered packet, warm-up included, in exit order
/// within each replication.
pub fn simulate_traced<T: Scalar>(
    net: &NetworkSpec<T>,
    cfg: &SimConfig<T>,
    mut on_departure: impl FnMut(&str, T, T),
) -> Result<SimStats<T>, SimError> {
    let rnet = admit(net, cfg)?;
    let mut reps = Vec::with_capacity(cfg.replications as usize);
    for r in 0..cfg.replications {
        let run = {
            let names = &rnet.class_names;
            let mut hook = |class: usize, gen: T, exit: T| on_departure(&names[class], gen, exit);
            engine::run_replication(
                &rnet,
                cfg.horizon,
                cfg.warmup_fraction,
                cfg.master_seed,
                r,
                &mut hook,
            )?
        };
        reps.push(summarize_rep(&run, &rnet, r)?);
    }
    Ok(aggregate(&rnet, reps, cfg.replications))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{parse_network, ClassSpec, NodeSpec};
    use approx::assert_relative_eq;

    fn mm1(lambda: f64) -> NetworkSpec<f64> {
        NetworkSpec::new(
            vec![NodeSpec::new(NodeId(1), 1.0).unwrap()],
            vec![ClassSpec::new("a", lambda, vec![NodeId(1)]).unwrap()],
        )
        .unwrap()
    }

    fn quick_cfg(seed: u64) -> SimConfig<f64> {
        SimConfig {
            replications: 4,
            ..SimConfig::new(20_000.0, seed)
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::<f64>::new(0.0, 1);
        assert_eq!(cfg.validate(), Err(SimError::BadHorizon));
        cfg.horizon = 100.0;
        cfg.warmup_fraction = 1.0;
        assert_eq!(cfg.validate(), Err(SimError::BadWarmupFraction));
        cfg.warmup_fraction = 0.1;
        cfg.replications = 0;
        assert_eq!(cfg.validate(), Err(SimError::NoReplications));
        cfg.replications = 2;
        assert_eq!(cfg.validate(), Ok(()));
    }

    #[test]
    fn unstable_network_is_rejected_before_running() {
        let err = simulate(&mm1(1.5), &quick_cfg(1)).unwrap_err();
        assert!(matches!(err, SimError::Unstable(_)));
        assert!(err.to_string().contains("node 1"));
    }

    #[test]
    fn overtaking_topology_is_rejected_before_running() {
        let net: NetworkSpec<f64> = parse_network(
            "node 1 mu=2\nnode 2 mu=2\n\
             class a lambda=0.2 path=1,2\nclass b lambda=0.2 path=2,1\n",
        )
        .unwrap();
        assert!(matches!(
            simulate(&net, &quick_cfg(1)),
            Err(SimError::NotOvertakeFree(_))
        ));
    }

    #[test]
    fn unknown_probe_node_is_rejected() {
        let mut cfg = quick_cfg(1);
        cfg.wa_probe = Some(NodeId(9));
        assert_eq!(
            simulate(&mm1(0.5), &cfg).unwrap_err(),
            SimError::UnknownProbeNode(NodeId(9))
        );
    }

    #[test]
    fn short_horizon_reports_too_few_departures() {
        let cfg = SimConfig::new(50.0, 1);
        assert!(matches!(
            simulate(&mm1(0.5), &cfg),
            Err(SimError::TooFewDepartures { .. })
        ));
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let net = mm1(0.5);
        let a = simulate(&net, &quick_cfg(11)).unwrap();
        let b = simulate(&net, &quick_cfg(11)).unwrap();
        assert_eq!(a, b);
        let c = simulate(&net, &quick_cfg(12)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn traced_run_matches_untraced_and_lists_every_departure() {
        let net = mm1(0.5);
        let cfg = quick_cfg(3);
        let mut count = 0_u64;
        let mut last_exit = f64::NEG_INFINITY;
        let mut max_exit = 0.0_f64;
        let traced = simulate_traced(&net, &cfg, |class, gen, exit| {
            assert_eq!(class, "a");
            assert!(gen < exit);
            if exit < last_exit {
                // Replications restart the clock.
                assert!(max_exit <= cfg.horizon);
            }
            last_exit = exit;
            max_exit = max_exit.max(exit);
            count += 1;
        })
        .unwrap();
        let untraced = simulate(&net, &cfg).unwrap();
        assert_eq!(traced, untraced);
        // The trace covers warm-up departures the stats exclude.
        let post_warmup: u64 = traced.classes[0].departures;
        assert!(count > post_warmup);
    }

    #[test]
    fn estimates_track_the_closed_form_on_a_single_queue() {
        let net = mm1(0.5);
        let cfg = SimConfig {
            replications: 5,
            ..SimConfig::new(100_000.0, 7)
        };
        let stats = simulate(&net, &cfg).unwrap();
        let class = &stats.classes[0];
        // Closed form: h = 3.5, h_left = 1.5, h_right = 5.5 at rho = 0.5.
        assert_relative_eq!(class.h.mean, 3.5, max_relative = 0.03);
        assert_relative_eq!(class.h_left.mean, 1.5, max_relative = 0.05);
        assert_relative_eq!(class.h_right.mean, 5.5, max_relative = 0.03);
        assert_relative_eq!(class.d_mean, 2.0, max_relative = 0.03);
        assert_relative_eq!(class.sojourn_mean, 2.0, max_relative = 0.05);
        assert!(class.h.ci_half > 0.0 && class.h.ci_half < 0.5);
        assert!(class.wa_mean.is_none());
    }

    #[test]
    fn probe_collects_waiting_interarrival_products() {
        let net = mm1(0.5);
        let mut cfg = SimConfig {
            replications: 4,
            ..SimConfig::new(50_000.0, 5)
        };
        cfg.wa_probe = Some(NodeId(1));
        let stats = simulate(&net, &cfg).unwrap();
        // Single class owning the queue: E[W A] = 1 at rho = 0.5, mu = 1.
        let wa = stats.classes[0].wa_mean.expect("probe set");
        assert_relative_eq!(wa, 1.0, max_relative = 0.1);
    }

    #[test]
    fn f32_simulation_runs() {
        let net = NetworkSpec::new(
            vec![NodeSpec::new(NodeId(1), 1.0_f32).unwrap()],
            vec![ClassSpec::new("a", 0.5_f32, vec![NodeId(1)]).unwrap()],
        )
        .unwrap();
        let cfg = SimConfig {
            replications: 3,
            ..SimConfig::new(20_000.0_f32, 2)
        };
        let stats = simulate(&net, &cfg).unwrap();
        assert!((stats.classes[0].h.mean - 3.5).abs() < 0.5);
    }
}
