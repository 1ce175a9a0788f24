//! Result files: a versioned JSON document or an RFC 4180 CSV table.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lhv::TallyRecord;
use crate::report::InequalityReport;

pub const SCHEMA_VERSION: u32 = 1;
/// Directory for result files when no explicit path is given.
pub const OUTPUT_DIR_ENV: &str = "BELLSTRONG_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Unsupported(format!("unknown format `{other}`"))),
        }
    }
}

/// Envelope of every JSON result. `config` echoes the fully resolved
/// configuration, defaults and seed included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub result: T,
}

impl<T> Document<T> {
    pub fn new(command: &str, config: serde_json::Value, result: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config,
            result,
        }
    }
}

/// Result of `simulate`: the recorded counts and the estimate built from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub counts_file: Option<PathBuf>,
    pub counts: Vec<TallyRecord>,
    pub report: InequalityReport,
}

/// Fifteen significant digits, written as the shortest decimal that reads
/// back to the rounded value.
pub fn fmt_num(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    // Avoid "-0".
    if rounded == 0.0 {
        return "0".into();
    }
    rounded.to_string()
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> std::result::Result<Vec<u8>, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| e.into_error().into())
    }

    pub fn parse(bytes: &[u8]) -> std::result::Result<Self, csv::Error> {
        let mut r = csv::Reader::from_reader(bytes);
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

/// Writes through a temporary file in the target directory, then renames
/// it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Explicit path, else `<$BELLSTRONG_OUTPUT_DIR>/<command>.<ext>`, else
/// `None` for standard output.
pub fn output_path(explicit: Option<PathBuf>, command: &str, format: Format) -> Option<PathBuf> {
    explicit.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_formatting() {
        assert_eq!(fmt_num(-1.5), "-1.5");
        assert_eq!(fmt_num(2.0 * std::f64::consts::SQRT_2), "2.82842712474619");
        assert_eq!(fmt_num(-0.0), "0");
        assert_eq!(fmt_num(1e-20), "0.00000000000000000001");
        assert_eq!(fmt_opt(None), "");
        for x in [0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, -7.25e-9] {
            let once = fmt_num(x);
            assert_eq!(fmt_num(once.parse().unwrap()), once);
        }
    }

    #[test]
    fn csv_round_trip_with_quoting() {
        let mut t = CsvTable::new(&["name", "config"]);
        t.push(vec!["a,b".into(), r#"{"k":"v \"q\""}"#.into()]);
        let bytes = t.to_bytes().unwrap();
        let back = CsvTable::parse(&bytes).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert_eq!(back.column("name").unwrap(), vec!["a,b"]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("nested").join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
