//! CSV writing with a fixed numeric format.

use std::fs::File;
use std::path::Path;

use crate::error::CliError;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub struct Table {
    writer: csv::Writer<File>,
    width: usize,
}

impl Table {
    pub fn create(path: &Path, header: &[String]) -> Result<Table, CliError> {
        let file = File::create(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        writer.write_record(header)?;
        Ok(Table {
            writer,
            width: header.len(),
        })
    }

    pub fn row(&mut self, fields: Vec<String>) -> Result<(), CliError> {
        debug_assert_eq!(fields.len(), self.width);
        self.writer.write_record(&fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.writer.flush().map_err(|e| CliError::Csv(e.into()))
    }
}

pub fn header(fixed: &[&str], per_pipe: &str, n: usize, trailing: &[&str]) -> Vec<String> {
    fixed
        .iter()
        .map(|s| s.to_string())
        .chain((1..=n).map(|j| format!("{per_pipe}_{j}")))
        .chain(trailing.iter().map(|s| s.to_string()))
        .collect()
}
