//! Fourier decay, subsequence selection and Calderón–Zygmund tools for
//! weighted ergodic averages on ℤ.
//!
//! Fourier convention: μ̂(γ) = Σⱼ μ(j) e(jγ) with e(x) = exp(2πi x).

pub mod error;
pub mod czmax;
pub mod dynsys;
pub mod families;
pub mod measure;
pub mod phase;
pub mod scalar;
pub mod selection;
pub mod sum;
pub mod threshold;
pub mod supnorm;
pub mod weyl;

pub use error::{Error, Result};
pub use families::{MeasureFamily, RhoSpec, RotationVariant};
pub use measure::{FiniteFn, WeightedMeasure};
pub use phase::Frequency;
pub use scalar::{Exact, Real};
pub use selection::{SelectionConfig, SelectionState, StallReport};
pub use supnorm::{SupBracket, SupLimits};

/// Double-precision measure, the default everywhere.
pub type Measure = WeightedMeasure<f64>;
/// Single-precision measure.
pub type Measure32 = WeightedMeasure<f32>;
pub type Bracket = SupBracket<f64>;
pub type Complex = num_complex::Complex<f64>;

/// Crate version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
