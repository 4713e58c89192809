//! Series input and report output.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use spectral_fic::periodogram::TimeSeries;

/// Reads a one-column numeric CSV with an optional header line.
pub fn ingest_csv(path: &Path) -> Result<TimeSeries> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_series(&text)
}

pub fn parse_series(text: &str) -> Result<TimeSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| anyhow!("parse error at row {row}: {e}"))?;
        if rec.len() != 1 {
            bail!(
                "parse error at row {row}: expected one column, found {}",
                rec.len()
            );
        }
        let cell = &rec[0];
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => bail!("parse error at row {row}: non-finite value {v}"),
            Err(_) if row == 1 => continue,
            Err(_) => bail!("parse error at row {row}: '{cell}' is not a number"),
        }
    }
    if values.is_empty() {
        bail!("input contains no numeric values");
    }
    Ok(TimeSeries::new(values)?)
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(self.path(name), text).with_context(|| format!("cannot write {name}"))
    }

    pub fn write_with<F>(&self, name: &str, f: F) -> Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        fs::write(self.path(name), buf).with_context(|| format!("cannot write {name}"))
    }

    /// Long-format rows (focus, candidate, metric, value).
    pub fn write_long_csv(&self, name: &str, rows: &[[String; 4]]) -> Result<()> {
        self.write_with(name, |buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["focus", "candidate", "metric", "value"])?;
            for r in rows {
                w.write_record(r)?;
            }
            w.flush()?;
            Ok(())
        })
    }
}
