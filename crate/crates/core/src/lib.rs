//! Exact structure-constant engine for A-infinity algebras, their
//! bimodules and bimodule morphisms, infinity-inner-products, Hochschild
//! cochain operations, and the inner-product-diagram chain complex.
//!
//! Everything is finite and exact: structures are presented by finitely
//! many structure constants over `Z`, `Q`, or `Z/p`, relation systems are
//! verified on all basis words up to a caller-chosen bound, and all graded
//! signs are derived mechanically from the Koszul rule and the suspension
//! sign.

pub mod graded;
pub mod scalar;
pub mod tensor;

pub use graded::{GradedBasis, TensorWord, Vector, WordCtx};
pub use scalar::{Ring, Scalar, Sign};
