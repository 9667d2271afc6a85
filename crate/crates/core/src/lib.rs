//! Simulation and exact analysis of a two-type host-parasite branching model.
//!
//! Cells of type A divide into daughter pairs AA, AB or BB; B-cells only
//! produce B-cells. Each parasite in a dividing cell sends a random pair of
//! offspring counts into the two daughters, drawn from a finite-support
//! joint law that depends on the mother's type and the daughter pair.

// `!(x > 0.0)` is how NaN gets rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundled;
pub mod error;
pub mod io;
pub mod mc;
pub mod model;
pub mod oracle;
pub mod pmf;
pub mod sim;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    classify, derive, validate, CellType, DaughterTypePair, DerivedQuantities, ModelParams,
    RegimeReport, ValidatedModel,
};
pub use pmf::PmfVector;
