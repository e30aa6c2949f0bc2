//! Monte Carlo densities of the time-averaged variance under OU-driven and
//! CIR (Heston) stochastic volatility, computed with Malliavin weights, and
//! European call prices obtained three independent ways.
//!
//! Pipeline: [`model`] validates parameters, [`path`] simulates volatility
//! paths on a [`grid`] from counter-based [`rng`] streams, [`malliavin_ou`]
//! and [`malliavin_cir`] turn each path into a weight, [`ensemble`] runs many
//! paths in parallel, [`density`] and [`pricing`] reduce the ensemble, and
//! [`battery`] bundles the end-to-end checks. [`pipeline`] holds the stages
//! shared by the command-line tool and the battery.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod density;
pub mod ensemble;
pub mod grid;
pub mod malliavin_cir;
pub mod malliavin_ou;
pub mod model;
pub mod oracle;
pub mod path;
pub mod pipeline;
pub mod pricing;
pub mod quad;
pub mod report;
pub mod rng;
pub mod stats;
