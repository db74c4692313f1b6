//! Numerical engine for expected-utility portfolio optimization in a market
//! with default risk.
//!
//! The market carries `n` risky assets driven by a Brownian motion and `p`
//! default indicators with stochastic intensities; a default makes the prices
//! jump by a relative size `beta`. On top of a path simulator the crate
//! provides:
//!
//! - the closed-form log-utility optimal strategy and value ([`log_strategy`]),
//! - a regression Monte Carlo solver for backward stochastic differential
//!   equations driven by the Brownian and compensated-default martingales
//!   ([`bsde`]), with the power- and exponential-utility optimizing drivers
//!   ([`drivers`]),
//! - a finite-state regime filter producing the partial-information
//!   coefficient estimates and innovation processes ([`filtering`]),
//! - Hodges indifference prices and the insider information price
//!   ([`pricing`]),
//! - independent closed-form / brute-force oracles used by the test suites
//!   ([`oracle`]).
//!
//! Everything is deterministic given the model, grid, and seed: each path owns
//! a counter-based random stream and reductions use fixed pairwise order.
//!
//! The crate is `no_std`-compatible (with `alloc`); all file IO and the CLI
//! live in the companion `defport-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// Numeric style: index loops run over several parallel arrays, driver
// signatures mirror the generator arguments, and `!(x > 0.0)` rejects NaN.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::too_many_arguments)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod bsde;
pub mod drivers;
pub mod error;
pub mod filtering;
pub mod linalg;
pub mod log_strategy;
pub mod model;
pub mod oracle;
pub mod paths;
pub mod pricing;
pub mod rng;
pub mod stats;

pub use error::{EngineError, Result};
pub use model::{Bounds, CoeffField, HiddenRegimeSpec, ModelSpec};
pub use paths::{simulate_paths, wealth_path, Controls, PathBundle, StrategyKind, WealthPath};
