//! Per-check iteration traces and their CSV form.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Version written on the first line of every CSV this crate emits.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Homogeneous,
    Direct,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Homogeneous => "homogeneous",
            Engine::Direct => "direct",
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "homogeneous" => Ok(Engine::Homogeneous),
            "direct" => Ok(Engine::Direct),
            _ => Err(format!("unknown engine {s:?}")),
        }
    }
}

/// One row of a trace. `tau` and `kappa` are 1 and 0 for the direct engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub engine: Engine,
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub tau: f64,
    pub kappa: f64,
    pub fp_residual: f64,
}

/// Writes `schema_version,<v>` followed by a headed CSV body.
pub(crate) fn write_versioned_csv<T: Serialize>(
    writer: impl Write,
    rows: impl IntoIterator<Item = T>,
) -> Result<()> {
    let mut writer = writer;
    writeln!(writer, "schema_version,{CSV_SCHEMA_VERSION}")?;
    let mut csv = csv::Writer::from_writer(writer);
    for row in rows {
        csv.serialize(row)?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_versioned_csv`].
pub(crate) fn read_versioned_csv<T: for<'de> Deserialize<'de>>(
    reader: impl std::io::Read,
) -> Result<Vec<T>> {
    let mut reader = BufReader::new(reader);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let version = first
        .trim_end()
        .strip_prefix("schema_version,")
        .ok_or_else(|| Error::Format("missing schema_version line".into()))?;
    if version != CSV_SCHEMA_VERSION.to_string() {
        return Err(Error::Format(format!("unsupported schema_version {version}")));
    }
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|row| row.map_err(Error::from))
        .collect()
}

pub fn write_trace_csv(path: impl AsRef<Path>, records: &[TraceRecord]) -> Result<()> {
    write_versioned_csv(File::create(path)?, records)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>> {
    read_versioned_csv(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_csv_round_trips() {
        let records = vec![
            TraceRecord {
                engine: Engine::Homogeneous,
                iteration: 25,
                primal: 0.5,
                dual: 1e-3,
                gap: 2.0,
                tau: 0.25,
                kappa: 0.0,
                fp_residual: 1e-2,
            },
            TraceRecord {
                engine: Engine::Direct,
                iteration: 50,
                primal: f64::INFINITY,
                dual: 0.1,
                gap: 0.0,
                tau: 1.0,
                kappa: 0.0,
                fp_residual: 3.5,
            },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &records).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("schema_version,1"));
        assert_eq!(
            lines.next(),
            Some("engine,iteration,primal,dual,gap,tau,kappa,fp_residual")
        );
        assert_eq!(read_trace_csv(&path).unwrap(), records);
    }

    #[test]
    fn rejects_unversioned_csv() {
        let body = "engine,iteration\nhomogeneous,1\n";
        let err = read_versioned_csv::<TraceRecord>(body.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }
}
