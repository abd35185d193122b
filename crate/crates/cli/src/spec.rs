//! Named measures: `gauss:m,s`, `uniform:a,b`, `file:path`.

use std::path::PathBuf;

use wgflow::io::read_density_csv;
use wgflow::{DensityMeasure, Grid};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum MeasureSpec {
    Gauss { mean: f64, std: f64 },
    Uniform { a: f64, b: f64 },
    File(PathBuf),
}

impl MeasureSpec {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = |reason: &str| CliError::Measure {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected gauss:m,s, uniform:a,b or file:path"))?;
        let pair = || -> Result<(f64, f64), CliError> {
            let v: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(&e.to_string()))?;
            match v[..] {
                [a, b] if a.is_finite() && b.is_finite() => Ok((a, b)),
                _ => Err(bad("expected two finite numbers")),
            }
        };
        match kind.trim() {
            "gauss" => {
                let (mean, std) = pair()?;
                if !(std > 0.0) {
                    return Err(bad("standard deviation must be positive"));
                }
                Ok(MeasureSpec::Gauss { mean, std })
            }
            "uniform" => {
                let (a, b) = pair()?;
                if !(b > a) {
                    return Err(bad("need a < b"));
                }
                Ok(MeasureSpec::Uniform { a, b })
            }
            "file" if !rest.is_empty() => Ok(MeasureSpec::File(PathBuf::from(rest))),
            _ => Err(bad("expected gauss:m,s, uniform:a,b or file:path")),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<DensityMeasure, CliError> {
        Ok(match self {
            MeasureSpec::Gauss { mean, std } => DensityMeasure::gaussian(grid, *mean, *std)?,
            MeasureSpec::Uniform { a, b } => DensityMeasure::uniform(grid, *a, *b)?,
            MeasureSpec::File(p) => {
                let rho = read_density_csv(p)?;
                rho.grid().ensure_same(&grid)?;
                rho
            }
        })
    }

    fn file_grid(&self) -> Result<Option<Grid>, CliError> {
        match self {
            MeasureSpec::File(p) => Ok(Some(*read_density_csv(p)?.grid())),
            _ => Ok(None),
        }
    }
}

/// Builds all measures on one grid: that of the density files if any are
/// given (they must agree), otherwise `fallback`.
pub fn build_all(specs: &[&str], fallback: Grid) -> Result<Vec<DensityMeasure>, CliError> {
    let parsed: Vec<MeasureSpec> = specs.iter().map(|s| MeasureSpec::parse(s)).collect::<Result<_, _>>()?;
    let mut grid = None;
    for p in &parsed {
        if let Some(g) = p.file_grid()? {
            match grid {
                None => grid = Some(g),
                Some(prev) => prev.ensure_same(&g)?,
            }
        }
    }
    let grid = grid.unwrap_or(fallback);
    parsed.iter().map(|p| p.build(grid)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_three_forms() {
        assert_eq!(
            MeasureSpec::parse("gauss:0,1").unwrap(),
            MeasureSpec::Gauss { mean: 0.0, std: 1.0 }
        );
        assert_eq!(
            MeasureSpec::parse("uniform:-1, 2").unwrap(),
            MeasureSpec::Uniform { a: -1.0, b: 2.0 }
        );
        assert_eq!(
            MeasureSpec::parse("file:a/b.csv").unwrap(),
            MeasureSpec::File(PathBuf::from("a/b.csv"))
        );
    }

    #[test]
    fn rejects_malformed_specs() {
        for s in ["gauss", "gauss:1", "gauss:0,-1", "uniform:2,1", "beta:1,2", "file:", "gauss:a,b"] {
            assert!(MeasureSpec::parse(s).is_err(), "{s}");
        }
    }
}
