//! Boundary JSON and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use steklame_core::geometry::{Boundary, FourierBoundary, FourierSeries, SupportBoundary};

use crate::error::{CliError, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeriesFile {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FourierCoeffs {
    x: SeriesFile,
    y: SeriesFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportCoeffs {
    p: SeriesFile,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum BoundaryFile {
    Fourier { order: usize, coeffs: FourierCoeffs },
    Support { order: usize, coeffs: SupportCoeffs },
}

fn series(order: usize, s: SeriesFile, name: &str) -> Result<FourierSeries> {
    if s.a.len() != order || s.b.len() != order {
        return Err(CliError::Config(format!(
            "series {name} must have {order} cosine and sine coefficients"
        )));
    }
    Ok(FourierSeries::new(s.a0, s.a, s.b)?)
}

/// Parses a boundary from its JSON value.
pub fn boundary_from_value(v: serde_json::Value) -> Result<Boundary> {
    let file: BoundaryFile =
        serde_json::from_value(v).map_err(|e| CliError::Config(format!("invalid boundary: {e}")))?;
    Ok(match file {
        BoundaryFile::Fourier { order, coeffs } => {
            let x = series(order, coeffs.x, "x")?;
            let y = series(order, coeffs.y, "y")?;
            FourierBoundary::new(x, y)?.into()
        }
        BoundaryFile::Support { order, coeffs } => SupportBoundary::new(series(order, coeffs.p, "p")?)?.into(),
    })
}

pub fn boundary_from_json(text: &str) -> Result<Boundary> {
    let v: serde_json::Value =
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid boundary JSON: {e}")))?;
    boundary_from_value(v)
}

pub fn read_boundary(path: &Path) -> Result<Boundary> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })?;
    boundary_from_value(v)
}

/// 17 significant digits, which reproduces every `f64` exactly.
pub fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn series_json(s: &FourierSeries) -> String {
    let list = |v: &[f64]| v.iter().map(|x| exact(*x)).collect::<Vec<_>>().join(", ");
    format!(
        "{{\"a0\": {}, \"a\": [{}], \"b\": [{}]}}",
        exact(s.a0),
        list(&s.a),
        list(&s.b)
    )
}

pub fn boundary_to_json(b: &Boundary) -> String {
    let mut out = String::new();
    match b {
        Boundary::Fourier(f) => {
            let _ = write!(
                out,
                "{{\n  \"type\": \"fourier\",\n  \"order\": {},\n  \"coeffs\": {{\n    \"x\": {},\n    \"y\": {}\n  }}\n}}\n",
                f.order(),
                series_json(f.x()),
                series_json(f.y())
            );
        }
        Boundary::Support(s) => {
            let _ = write!(
                out,
                "{{\n  \"type\": \"support\",\n  \"order\": {},\n  \"coeffs\": {{\n    \"p\": {}\n  }}\n}}\n",
                s.order(),
                series_json(s.support())
            );
        }
    }
    out
}

pub fn write_boundary(path: &Path, b: &Boundary) -> Result<()> {
    fs::write(path, boundary_to_json(b)).map_err(|e| CliError::io(path, e))
}

/// Short digest identifying a run configuration.
pub fn config_hash<T: serde::Serialize>(config: &T) -> String {
    let text = serde_json::to_string(config).unwrap_or_default();
    hex::encode(&Sha256::digest(text.as_bytes())[..8])
}

/// First line of every CSV file.
pub fn metadata_line(hash: &str) -> String {
    format!("# steklame {} config={hash}", env!("CARGO_PKG_VERSION"))
}

/// CSV writer that starts with the metadata comment and a header row.
pub struct CsvOut {
    writer: csv::Writer<Box<dyn Write>>,
    trailer: Vec<String>,
}

impl CsvOut {
    /// Writes to `path`, or to standard output when `None`.
    pub fn create(path: Option<&Path>, hash: &str, header: &[&str]) -> Result<Self> {
        let mut sink: Box<dyn Write> = match path {
            Some(p) => Box::new(fs::File::create(p).map_err(|e| CliError::io(p, e))?),
            None => Box::new(std::io::stdout()),
        };
        writeln!(sink, "{}", metadata_line(hash)).map_err(|e| CliError::io(path.unwrap_or(Path::new("-")), e))?;
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(header)?;
        Ok(Self { writer, trailer: Vec::new() })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    /// Trailing `# ...` line, written after the last row.
    pub fn comment(&mut self, text: &str) -> Result<()> {
        self.trailer.push(text.to_string());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let mut inner = self
            .writer
            .into_inner()
            .map_err(|e| CliError::io("-", e.into_error()))?;
        for line in &self.trailer {
            writeln!(inner, "# {line}").map_err(|e| CliError::io("-", e))?;
        }
        inner.flush().map_err(|e| CliError::io("-", e))
    }
}

/// Rows of a CSV file written by [`CsvOut`], comments skipped.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}
