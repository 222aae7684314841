//! Chernoff-type tail bounds on the scaled relative entropy `n·D(p̂‖p)` of a
//! multinomial empirical distribution.
//!
//! The moment generating function of `n·D(p̂‖p)` is bounded on `[0, 1]`,
//! uniformly over the true probability vector, by a degree-`n` polynomial
//! `G_{k,n}(λ)` ([`gkn`]). Minimizing `exp(-λt)·G_{k,n}(λ)` gives the exact
//! Chernoff bound, and closed-form plug-in choices of `λ` give cheaper
//! variants ([`tail_bounds`]). Bounds are inverted into critical values and
//! confidence bounds on single coordinates of the simplex ([`inversion`]).
//! The [`oracle`] module holds brute-force ground truth (exact enumeration
//! and Monte Carlo) used by the property suite in [`verify`].
//!
//! All logarithms are natural; deviations are measured in nats.
//!
//! ```
//! use klchernoff::{critical_value, CriticalValueQuery, ExperimentShape, TailBounds};
//!
//! let shape = ExperimentShape::new(6, 100)?;
//! let bounds = TailBounds::new(shape)?;
//! let exact = bounds.exact(12.0)?;
//! assert!(exact.value < bounds.lambda_one(12.0)?.value);
//!
//! let t = critical_value(&CriticalValueQuery::new(shape, 0.05))?;
//! assert!((bounds.exact(t)?.value - 0.05).abs() < 1e-9);
//! # Ok::<(), klchernoff::Error>(())
//! ```

pub mod data;
pub mod error;
pub mod gkn;
pub mod inversion;
pub mod oracle;
pub mod report;
pub mod special;
pub mod tail_bounds;
pub mod verify;

pub use data::FrequencyTable;
pub use error::{Error, Result};
pub use gkn::{ExperimentShape, GknEvaluator};
pub use inversion::{critical_value, CoordinateCI, CriticalValueQuery};
pub use oracle::ProbVector;
pub use tail_bounds::{BoundResult, Method, TailBounds, TailQuery};
