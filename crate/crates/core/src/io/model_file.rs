use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelParams;

/// Parses a model file. Syntax and schema errors carry the line and column
/// reported by the JSON parser.
pub fn parse_model_str(source_name: &str, text: &str) -> Result<ModelParams> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn read_model_file(path: &Path) -> Result<ModelParams> {
    let text = std::fs::read_to_string(path)?;
    parse_model_str(&path.display().to_string(), &text)
}

/// Pretty JSON in the model-file schema. Floats are written in shortest
/// round-trip form, so parsing the output gives back identical parameters.
pub fn to_model_json(params: &ModelParams) -> String {
    let mut s = serde_json::to_string_pretty(params).expect("model parameters serialize");
    s.push('\n');
    s
}

pub fn write_model_file(path: &Path, params: &ModelParams) -> Result<()> {
    std::fs::write(path, to_model_json(params))?;
    Ok(())
}
