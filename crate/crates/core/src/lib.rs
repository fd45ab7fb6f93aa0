//! Numerical toolkit for Hardy-Sobolev inequalities with a singular weight
//! `|x|^{-s}` measured from a `k`-dimensional subspace of `R^n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`exponents`]: Hardy-Sobolev conjugates and admissibility predicates.
//! * [`special_fn`]: log-gamma, Beta and sphere measures.
//! * [`closed_forms`]: extremal family, sharp constant, Beta integral
//!   identities, explicit solution families, Kelvin transform.
//! * [`quadrature`]: adaptive Gauss-Kronrod integration in radial and
//!   cylindrical reduction; the independent oracle for the closed forms.
//! * [`cylinder_grid`]: finite differences on the `(rho, r)` quadrant.
//! * [`minimizer`]: normalized gradient flow for the Rayleigh quotient.
//! * [`asymptotics`]: decay fits and local sup/mean ratios.

pub mod asymptotics;
pub mod closed_forms;
pub mod cylinder_grid;
pub mod error;
pub mod exponents;
pub mod minimizer;
pub mod quadrature;
pub mod special_fn;

pub use asymptotics::{DecayFit, DecayMode, DecayReport, RayDirection, RaySamples};
pub use closed_forms::{ExtremalParams, Prop4Params, SharpConstant};
pub use cylinder_grid::{CylGrid, Grading};
pub use error::{HsError, Result};
pub use exponents::{Conjugate, ExponentContext, ExponentReport};
pub use minimizer::{FlowScheme, InitMode, MinimizeOptions, MinimizeResult};
pub use quadrature::{CylindricalDomain, Extent, QuadratureResult};
