//! Model parameterization, validation, derived quantities and regime
//! classification.

mod derived;
mod environment;
mod law;
mod params;
mod regime;
mod truncate;

pub use derived::{
    derive, derive_with_tol, minimize_phi, phi, BpreQuantities, DerivedQuantities, PHI_TOL,
};
pub use environment::{b_line_environment, bpre_environment, Environment, WeightedPmf};
pub use law::{JointOffspringLaw, SupportPoint, NORMALIZATION_TOL};
pub use params::{
    validate, validate_with, CellType, DaughterTypePair, ModelParams, ValidatedModel,
    ValidationMode,
};
pub use regime::{
    classify, classify_with_tol, BpreClass, Comparison, Kappa, RegimeReport, BOUNDARY_TOL,
};
pub use truncate::truncate;
