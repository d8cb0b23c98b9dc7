//! Norms and norm attainment for operators built from two orthogonal
//! projections.
//!
//! A pair of orthogonal projections decomposes the space into four
//! intersection subspaces plus two identified copies of a generic part, on
//! which the pair is parametrized by an angle operator H with spectrum in
//! (0,1). Every operator in the algebra they generate is four scalars plus a
//! 2x2 matrix of functions of H; its norm has a closed form in the scalars
//! and the symbol, and whether that norm is attained by a unit vector is
//! decided by where the symbol's spectral data peaks and how much spectral
//! mass sits there.
//!
//! Module map:
//! - [`densekernel`]: dense complex matrices, Jacobi eigensolver, SVD oracle.
//! - [`exprlang`]: the expression language for symbol functions.
//! - [`halmos`]: canonical decomposition of a concrete projection pair.
//! - [`symbolcalc`]: spectral models, elements, and the norm formula.
//! - [`attain`]: maximizer sets and the attainment verdict.
//! - [`skew`]: skew projections and the worked operator families.
//! - [`verify`]: randomized brute-force oracles.
//! - [`cli`]: the `projnorm` command-line front end.

pub mod attain;
pub mod cli;
pub mod densekernel;
pub mod exprlang;
pub mod halmos;
pub mod skew;
pub mod symbolcalc;
pub mod verify;

pub use attain::{decide_attainment, is_eigenvalue, kernel_nontrivial, lambda_max, AttainmentVerdict};
pub use densekernel::{
    check_orthogonal_projection, hermitian_eig, largest_singular_value, orthonormal_range,
    ComplexMatrix, EigenSystem,
};
pub use exprlang::Expr;
pub use halmos::{decompose, extract_symbol, reconstruct, HalmosDecomposition};
pub use skew::{analyze_skew, SkewAnalysis};
pub use symbolcalc::{build_element, SpectralModel, WStarElement};
