//! Operators on Hermite-coefficient kernel matrices: weighted classes,
//! constructive factorizations and singular-value analysis.

pub mod error;
pub mod factorization;
pub mod generators;
pub mod hermite;
pub mod io;
pub mod kernel_ops;
pub mod linalg;
pub mod multiindex;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
pub use hermite::CoeffVector;
pub use kernel_ops::KernelMatrix;
pub use multiindex::{GradedIndexMap, MultiIndex};
pub use weights::{ClassEstimate, ClassKind, WeightSpec};
