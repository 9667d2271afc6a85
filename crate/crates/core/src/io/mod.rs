//! Model files, CSV tables and run metadata.

mod meta;
mod model_file;
mod table;

pub use meta::{params_hash, RunMetadata, TOOL_VERSION};
pub use model_file::{parse_model_str, read_model_file, to_model_json, write_model_file};
pub use table::{fmt_f64, CsvTable};
