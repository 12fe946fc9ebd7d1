//! Numerical differential geometry of thin shells around hypersurfaces.
//!
//! The library computes the intrinsic and extrinsic geometry of a
//! parametrized hypersurface `M^n ⊂ ℝ^{n+1}`, the three intrinsic vector
//! Laplacians (Bochner, Hodge, deformation), and the tangential trace of
//! the ambient Bochner Laplacian on a thin shell around the surface
//! under a family of boundary-condition profiles. Everything is exact
//! to floating point: derivatives come from truncated Taylor arithmetic
//! ([`jet`]), and every closed-form identity is cross-checkable against
//! an independent route (offset-surface finite differences, an exterior
//! calculus Hodge Laplacian, and a Cartesian stencil oracle).
//!
//! Modules:
//! - [`jet`]: order-4 multivariate Taylor arithmetic.
//! - [`expr`]: parser/evaluator for analytic scalar expressions.
//! - [`geometry`]: charts, first/second fundamental forms, curvature.
//! - [`fields`]: tangential vector fields and intrinsic operators.
//! - [`shell`]: Fermi-coordinate shell metric, boundary profiles, and
//!   the ambient Laplacian decomposition.
//! - [`oracle`]: closest-point projection and the Cartesian
//!   finite-difference Laplacian used as an independent check.
//! - [`sample`]: deterministic low-discrepancy sampling of chart boxes.

pub mod analytic;
pub mod expr;
pub mod fields;
pub mod geometry;
pub mod jet;
pub mod oracle;
pub mod sample;
pub mod shell;
pub mod tensor;

pub use jet::{Jet, JetError, JetPoint, JetSpace};
