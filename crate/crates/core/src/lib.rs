//! Finite-truncation workbench for group-algebra convolution operators.
//!
//! Groups and word-metric balls live in [`group`], the group algebra in
//! [`algebra`], truncated operators and their norm/modulus/range probes in
//! [`operator`], dense spectral tools in [`spectral`], tracial matrix algebras
//! in [`nclp`], and the experiment drivers in [`probe`].

pub mod algebra;
pub mod error;
pub mod exponent;
pub mod expr;
pub mod group;
pub mod lp;
pub mod nclp;
pub mod operator;
pub mod probe;
pub mod sparse;
pub mod spectral;

pub use algebra::{Coefficient, ElementTerm, GaussianRational, GroupAlgebraElement};
pub use error::{Error, Result};
pub use exponent::Exponent;
pub use expr::parse_element_expr;
pub use group::{BallIndex, Family, Group, GroupElement};
pub use operator::{
    assemble, assemble_extended, injectivity_modulus_est, opnorm_est, range_distance_l1, NormBounds,
    RangeDistance, Side, TruncatedOperator,
};
pub use nclp::{mat_nclp_norm, TracialMatrixAlgebra};
pub use probe::ExperimentRecord;
pub use sparse::SparseMatrix;
pub use spectral::{eig_herm, func_calc, nc_lp_norm_group, trace_state, SpectralDecomposition};
