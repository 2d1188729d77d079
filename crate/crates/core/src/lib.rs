//! Age of information at the output of overtake-free paths in networks of
//! exponential FCFS queues.
//!
//! The crate has three layers:
//!
//! * [`netmodel`]: network descriptions, the traffic equations, stability
//!   and overtake-freeness checks;
//! * [`analytic`]: exact expressions for the time-average age, its one-sided
//!   limits and the mean peak age of each class;
//! * [`simcore`]: a discrete-event simulator with matching empirical
//!   estimators, used to cross-check the closed forms.
//!
//! Everything is generic over the floating-point type through [`Scalar`];
//! the `*64` aliases below fix `f64` for the common case.

pub mod analytic;
pub mod netmodel;
pub mod scalar;
pub mod simcore;
pub mod stats;

pub use scalar::Scalar;

pub type NetworkSpec64 = netmodel::NetworkSpec<f64>;
pub type NodeSpec64 = netmodel::NodeSpec<f64>;
pub type ClassSpec64 = netmodel::ClassSpec<f64>;
pub type FlowSolution64 = netmodel::FlowSolution<f64>;
pub type PathLoads64 = analytic::PathLoads<f64>;
pub type AgeReport64 = analytic::AgeReport<f64>;
pub type SimConfig64 = simcore::SimConfig<f64>;
pub type SimStats64 = simcore::SimStats<f64>;
