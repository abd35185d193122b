//! File formats.
//!
//! - density: CSV `x,rho`, one row per cell center, uniform spacing;
//! - path: long-form CSV `t,x,rho`;
//! - reports and run manifests: JSON.
//!
//! Numbers are written with 17 significant digits. Files are written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::measures::DensityMeasure;
use crate::transport::MeasurePath;

/// Relative tolerance on the spacing of density files.
pub const SPACING_TOLERANCE: f64 = 1e-9;

/// `x` with 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// In-memory CSV table with a fixed header.
#[derive(Debug, Clone)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::param(
                "row",
                format!("{} fields for {} columns", row.len(), self.header.len()),
            ));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }
}

/// Table `x,rho` of a density.
pub fn density_table(rho: &DensityMeasure) -> Table {
    let mut t = Table::new(&["x", "rho"]);
    for (i, &r) in rho.values().iter().enumerate() {
        t.rows.push(vec![num(rho.grid().center(i)), num(r)]);
    }
    t
}

pub fn write_density_csv(path: &Path, rho: &DensityMeasure) -> Result<()> {
    density_table(rho).write(path)
}

/// Parses a density CSV. The grid is rebuilt from the cell centers, which must
/// be increasing with uniform spacing; values are renormalized to unit mass.
pub fn parse_density_csv(text: &str) -> Result<DensityMeasure> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "rho" {
        return Err(Error::Parse(format!(
            "density file needs the header `x,rho`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let (mut xs, mut vs) = (Vec::new(), Vec::new());
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec[k]
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: `{}`: {e}", line + 2, &rec[k])))
        };
        xs.push(field(0)?);
        vs.push(field(1)?);
    }
    if xs.len() < 2 {
        return Err(Error::Parse("density file needs at least two rows".into()));
    }
    let n = xs.len();
    let h = (xs[n - 1] - xs[0]) / (n - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::Parse("x must be increasing".into()));
    }
    for (i, w) in xs.windows(2).enumerate() {
        let d = w[1] - w[0];
        if (d - h).abs() > SPACING_TOLERANCE * h.max(w[0].abs().max(w[1].abs())) {
            return Err(Error::Parse(format!(
                "non-uniform spacing at row {}: {d} vs {h}",
                i + 3
            )));
        }
    }
    let grid = Grid::new(xs[0] - 0.5 * h, xs[n - 1] + 0.5 * h, n)?;
    DensityMeasure::new(grid, vs)
}

pub fn read_density_csv(path: &Path) -> Result<DensityMeasure> {
    parse_density_csv(&fs::read_to_string(path)?)
}

/// Long-form table `t,x,rho` of a path.
pub fn path_table(path: &MeasurePath) -> Table {
    let mut t = Table::new(&["t", "x", "rho"]);
    for (&time, s) in path.times().iter().zip(path.states()) {
        for (i, &r) in s.values().iter().enumerate() {
            t.rows.push(vec![num(time), num(s.grid().center(i)), num(r)]);
        }
    }
    t
}

pub fn write_path_csv(file: &Path, path: &MeasurePath) -> Result<()> {
    path_table(path).write(file)
}

/// Pretty-printed JSON, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_round_trip_is_exact() {
        let g = Grid::new(-3.0, 5.0, 64).unwrap();
        let rho = DensityMeasure::gaussian(g, 1.0, 0.8).unwrap();
        let text = String::from_utf8(density_table(&rho).to_bytes().unwrap()).unwrap();
        assert!(text.starts_with("x,rho\n"));
        let back = parse_density_csv(&text).unwrap();
        assert!(back.grid().same_as(&g));
        for (a, b) in back.values().iter().zip(rho.values()) {
            assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_density_csv("x,p\n0,1\n1,1\n").is_err());
        assert!(parse_density_csv("x,rho\n0,1\n1,1\n2.5,1\n").is_err());
        assert!(parse_density_csv("x,rho\n0,1\n").is_err());
        assert!(parse_density_csv("x,rho\n0,1\n1,abc\n").is_err());
    }

    #[test]
    fn seventeen_digits() {
        let s = num(0.1);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
        assert_eq!(s.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_json(&p, &serde_json::json!({"a": 1})).unwrap();
        write_json(&p, &serde_json::json!({"a": 2})).unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["a"], 2);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
