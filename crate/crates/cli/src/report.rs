//! CSV reports with a leading `#` comment line carrying the tool version and
//! the config digest.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::CliError;

pub struct Report {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(columns: &[&'static str]) -> Self {
        Report {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Header comment plus CSV body.
    pub fn render(&self, digest: &str) -> Result<String, CliError> {
        let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns)?;
        for row in &self.rows {
            writer.write_record(row)?;
        }
        let body = writer.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(format!(
            "# sgrif {} config={digest} generated={stamp}\n{}",
            env!("CARGO_PKG_VERSION"),
            String::from_utf8(body).expect("fields are UTF-8")
        ))
    }

    pub fn write(&self, path: &Path, digest: &str) -> Result<(), CliError> {
        fs::write(path, self.render(digest)?).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// The report without its comment lines.
pub fn body(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// Fixed-precision number for report cells.
pub fn num(v: f64) -> String {
    format!("{v:.6}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_body() {
        let mut r = Report::new(&["image_id", "value"]);
        r.push(vec!["a,b".into(), num(0.5)]);
        let text = r.render("abc").unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# sgrif "));
        assert_eq!(body(&text), "image_id,value\n\"a,b\",0.500000\n");
        assert_eq!(opt_num(None), "");
    }
}
