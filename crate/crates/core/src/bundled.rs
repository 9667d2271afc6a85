//! Reference models shipped with the library.

use crate::io::parse_model_str;
use crate::model::{validate_with, ModelParams, ValidatedModel, ValidationMode};

/// A model file compiled into the binary.
#[derive(Debug, Clone, Copy)]
pub struct BundledModel {
    pub name: &'static str,
    pub description: &'static str,
    pub json: &'static str,
    pub mode: ValidationMode,
}

pub const M1: BundledModel = BundledModel {
    name: "m1",
    description: "supercritical A-line, L trivial",
    json: include_str!("../models/m1.json"),
    mode: ValidationMode::Strict,
};

pub const M2: BundledModel = BundledModel {
    name: "m2",
    description: "strongly subcritical A-line, almost sure extinction of A-parasites",
    json: include_str!("../models/m2.json"),
    mode: ValidationMode::Strict,
};

pub const M3: BundledModel = BundledModel {
    name: "m3",
    description:
        "supercritical A-line with mu_B > gamma and B_sslog < 0 (Yaglom regime for B-cells)",
    json: include_str!("../models/m3.json"),
    mode: ValidationMode::Strict,
};

pub const GW_B: BundledModel = BundledModel {
    name: "gw_b",
    description: "M1 with a B-law whose sum has law {0: 1/4, 2: 3/4}",
    json: include_str!("../models/gw_b.json"),
    mode: ValidationMode::Strict,
};

pub const EDGE_SINGLE_A_LINE: BundledModel = BundledModel {
    name: "edge_single_a_line",
    description: "p_AA = 0, p_AB = 1, mu_0A(AB) = 0.9",
    json: include_str!("../models/edge_single_a_line.json"),
    mode: ValidationMode::Strict,
};

pub const DETERMINISTIC_LINE: BundledModel = BundledModel {
    name: "deterministic_line",
    description:
        "single A-line keeping one parasite, unit sharing in B-cells (structural checks only)",
    json: include_str!("../models/deterministic_line.json"),
    mode: ValidationMode::StructuralOnly,
};

pub const ALL: [BundledModel; 6] = [M1, M2, M3, GW_B, EDGE_SINGLE_A_LINE, DETERMINISTIC_LINE];

impl BundledModel {
    pub fn params(&self) -> ModelParams {
        parse_model_str(self.name, self.json)
            .unwrap_or_else(|e| panic!("bundled model {} does not parse: {e}", self.name))
    }

    pub fn model(&self) -> ValidatedModel {
        validate_with(&self.params(), self.mode)
            .unwrap_or_else(|e| panic!("bundled model {} is invalid: {e}", self.name))
    }
}

pub fn by_name(name: &str) -> Option<BundledModel> {
    ALL.iter().copied().find(|m| m.name == name)
}

pub fn m1_params() -> ModelParams {
    M1.params()
}

pub fn m1() -> ValidatedModel {
    M1.model()
}

pub fn m2() -> ValidatedModel {
    M2.model()
}

pub fn m3() -> ValidatedModel {
    M3.model()
}

pub fn gw_b() -> ValidatedModel {
    GW_B.model()
}

pub fn edge_single_a_line() -> ValidatedModel {
    EDGE_SINGLE_A_LINE.model()
}

pub fn deterministic_line() -> ValidatedModel {
    DETERMINISTIC_LINE.model()
}
