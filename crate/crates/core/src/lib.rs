//! Spectral Galerkin solver and inequality diagnostics for regularized
//! double-phase parabolic equations with variable exponents on the unit box.

pub mod diagnostics;
pub mod error;
pub mod exponent_model;
pub mod field;
pub mod flux;
pub mod galerkin;
pub mod par;
pub mod quadrature;
pub mod varexp;

pub use error::{Error, Result};
pub use exponent_model::{DerivedExponents, ExponentData, ValidationReport};
pub use field::{FieldSpec, Jet, ScalarField};
pub use flux::{FluxParams, PointCoefficients};
pub use galerkin::{EigenBasis, Forcing, SolverConfig, SpectralState, Trajectory};
pub use quadrature::{QuadratureGrid, SpaceRule, TimeRule};
pub use varexp::SampledField;
