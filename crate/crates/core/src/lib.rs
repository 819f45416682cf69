#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chaos;
pub mod error;
pub mod hopping;
pub mod moments;
pub mod scalar;
pub mod spectral;

pub use chaos::{
    ChaosBasis, Family, GalerkinMatrix, GalerkinSpace, QuadratureRule, SymEigen, TripleTensor,
};
pub use error::{Error, Result};
pub use moments::{MomentProfile, Observable, PointStats, Statistic};
pub use num_complex::Complex64;
pub use spectral::{PeriodicGrid, Tensor};
