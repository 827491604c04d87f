//! Divisible-load scheduling on single-level tree networks, with a neural
//! surrogate for the optimal processing time.
//!
//! - [`dlt`]: exact closed-form solver, timeline simulator, linear-system oracle.
//! - [`data`]: seeded configuration sampler, 16 engineered features,
//!   stratified splits, z-score normalization, dataset files.
//! - [`nn`]: dense ReLU network with dropout, backprop, Adam, early stopping.
//! - [`model`]: deployable bundle (weights + normalization) and prediction.
//! - [`eval`]: metrics, stratified and residual analyses, feature importance,
//!   plot tables.
//! - [`hybrid`]: ML estimate with exact fallback above a time threshold.
//!
//! ```
//! use dlt_surrogate::dlt::{solve_optimal, TimeRates};
//!
//! let rates = TimeRates::new(1.0, vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
//! let alloc = solve_optimal(&rates, 1.0).unwrap();
//! assert!((alloc.t_star - 4.0 / 7.0).abs() < 1e-12);
//! ```
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example solve_network`
//! is a good place to start.

pub mod config_text;
pub mod data;
pub mod dlt;
pub mod error;
pub mod eval;
pub mod hybrid;
pub mod model;
pub mod nn;

pub use error::{Error, Result};
