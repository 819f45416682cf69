//! Orthonormal polynomial chaos: bases, Gauss rules and Galerkin operators.

mod basis;
mod galerkin;
mod quadrature;

pub use basis::{chaos_dimension, ChaosBasis, Family};
pub use galerkin::{
    assemble_triple_tensor, assemble_weighted_matrix, build_basis, checked_recip,
    galerkin_nonlinear, gauss_rule, moments_from_coeffs, project_function, CoefficientMoments,
    GalerkinMatrix, GalerkinSpace, SymEigen, TripleTensor, SINGULAR_THRESHOLD,
};
pub use quadrature::QuadratureRule;
