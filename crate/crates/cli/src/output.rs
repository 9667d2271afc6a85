use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use hpbranch_core::io::{CsvTable, RunMetadata};
use serde_json::{json, Map, Value};

use crate::Format;

/// Where results go: stdout, or `<stem>.<ext>` files in an output directory.
pub struct Sink {
    pub dir: Option<PathBuf>,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, format: Format) -> Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)
                .with_context(|| format!("cannot create output directory {}", d.display()))?;
        }
        Ok(Self { dir, format })
    }

    fn write_file(&self, name: &str, body: &str) -> Result<()> {
        let dir = self.dir.as_ref().expect("file output needs a directory");
        let path = dir.join(name);
        fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))
    }

    fn stdout(body: &str) -> Result<()> {
        let mut out = std::io::stdout().lock();
        out.write_all(body.as_bytes())?;
        out.flush()?;
        Ok(())
    }

    /// A table with its metadata. CSV output puts a one-line comment before
    /// the header and the full metadata in a JSON sidecar (stderr when
    /// printing to stdout); JSON output is one document.
    pub fn table(&self, stem: &str, table: &CsvTable, meta: &RunMetadata) -> Result<()> {
        self.table_csv(
            stem,
            &table.to_csv_string(Some(&meta.comment_line())),
            table,
            meta,
        )
    }

    /// Like [`Sink::table`] with the CSV text already rendered.
    pub fn table_csv(
        &self,
        stem: &str,
        csv: &str,
        table: &CsvTable,
        meta: &RunMetadata,
    ) -> Result<()> {
        match (self.format, &self.dir) {
            (Format::Csv, Some(_)) => {
                self.write_file(&format!("{stem}.csv"), csv)?;
                self.write_file(&format!("{stem}.json"), &meta.to_json())
            }
            (Format::Csv, None) => {
                Self::stdout(csv)?;
                eprint!("{}", meta.to_json());
                Ok(())
            }
            (Format::Json, _) => {
                let doc = json!({ "metadata": meta, "rows": rows_json(table) });
                self.document(stem, &doc)
            }
        }
    }

    /// A report: text for CSV format (plus a JSON copy when writing files),
    /// the JSON document otherwise.
    pub fn report(&self, stem: &str, text: &str, doc: &Value) -> Result<()> {
        match (self.format, &self.dir) {
            (Format::Csv, Some(_)) => {
                self.write_file(&format!("{stem}.txt"), text)?;
                self.write_file(&format!("{stem}.json"), &pretty(doc))
            }
            (Format::Csv, None) => Self::stdout(text),
            (Format::Json, _) => self.document(stem, doc),
        }
    }

    fn document(&self, stem: &str, doc: &Value) -> Result<()> {
        match &self.dir {
            Some(_) => self.write_file(&format!("{stem}.json"), &pretty(doc)),
            None => Self::stdout(&pretty(doc)),
        }
    }

    /// Writes an extra file when an output directory is set.
    pub fn extra(&self, name: &str, body: &str) -> Result<()> {
        if self.dir.is_some() {
            self.write_file(name, body)?;
        }
        Ok(())
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON value serializes");
    s.push('\n');
    s
}

fn cell_json(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    if let Ok(i) = s.parse::<i64>() {
        return i.into();
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => x.into(),
        _ => s.into(),
    }
}

/// Table rows as objects keyed by column name, with numbers typed.
fn rows_json(table: &CsvTable) -> Value {
    table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .header
                .iter()
                .cloned()
                .zip(row.iter().map(|c| cell_json(c)))
                .collect();
            Value::Object(obj)
        })
        .collect()
}
