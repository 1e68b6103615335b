//! Numerical laboratory for the stationary inhomogeneous Allen–Cahn equation
//!
//! ```text
//!     ε Δu − W'(u)/ε = f,      W(t) = (1 − t²)² / 2
//! ```
//!
//! on flat boxes of dimension 1, 2 or 3, together with the geometric-measure
//! quantities attached to a solution: the energy and discrepancy measures,
//! the diffuse mean curvature, density ratios, the almost-monotonicity
//! identity and its slab-weighted variant, the first variation of the
//! associated varifold, and integer quantization of layer energy.
//!
//! Inner loops run data-parallel through rayon when the `parallel` feature is
//! enabled (the default). Every reduction is performed over fixed-size chunks
//! combined in index order, so results are bitwise identical regardless of
//! the thread count or whether the feature is enabled at all.

// Index loops over parallel `[f64; 3]` arrays read better than zipped iterators,
// and `!(x > 0.0)` deliberately rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exec;
pub mod fields;
pub mod measures;
pub mod monotonicity;
pub mod phasefield;
pub mod proofdevices;
pub mod quad;
pub mod quantization;
pub mod scenarios;

pub use error::{Error, Result};
pub use fields::{Boundary, Grid, Region, ScalarField, VectorField};
pub use measures::{AnalysisParams, DensityFields, NormReport};
pub use phasefield::{Constants, LayerSpec, PhaseFieldState};

/// Energy of the 1-d heteroclinic `tanh`, `∫ (tanh')² = 4/3`.
///
/// This is the quantization unit for layer energy. It also equals
/// `σ = ∫_{−1}^{1} √(2W)` for this particular potential.
pub const ALPHA: f64 = 4.0 / 3.0;
