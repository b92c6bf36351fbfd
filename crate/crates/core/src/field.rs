//! Complex radial fields sampled on a `RadialGrid`, with CSV and JSON
//! persistence.
//!
//! CSV columns are exactly `r, re, im` in that order. The JSON record carries
//! `{d, c, r_max, n, scheme, samples}` plus the graded ratio when needed to
//! reconstruct the grid.

use crate::error::{Error, Result};
use crate::grid::{GridScheme, RadialGrid};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

/// Behavior of the field as r -> 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OriginBehavior {
    /// Smooth at the origin (σ = 0).
    Regular,
    /// Leading indicial behavior a r^{-sigma}.
    Indicial { sigma: f64 },
}

#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    origin: Option<OriginBehavior>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Mismatch {
                reason: format!(
                    "sample count {} does not match node count {}",
                    values.len(),
                    grid.len()
                ),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Mismatch {
                reason: format!("non-finite sample at node {bad}"),
            });
        }
        Ok(Self {
            grid,
            values,
            origin: None,
        })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn from_real_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn zero(grid: Arc<RadialGrid>) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::ZERO; n],
            origin: None,
        }
    }

    pub fn with_origin(mut self, origin: OriginBehavior) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn origin_behavior(&self) -> Option<OriginBehavior> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    pub fn has_finite_values(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
            origin: self.origin,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Write `r, re, im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "r,re,im")?;
        for (&r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(f, "{:.17e},{:.17e},{:.17e}", r, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_csv(grid: Arc<RadialGrid>, path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut values = Vec::new();
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            if i == 0 {
                continue; // header
            }
            let mut cols = line.split(',');
            let _r: f64 = parse_col(&mut cols, i)?;
            let re: f64 = parse_col(&mut cols, i)?;
            let im: f64 = parse_col(&mut cols, i)?;
            values.push(Complex64::new(re, im));
        }
        Self::new(grid, values)
    }

    pub fn to_json_record(&self) -> FieldRecord {
        let p = self.grid.params();
        FieldRecord {
            d: p.d,
            c: p.c,
            r_max: self.grid.r_max(),
            n: self.grid.len(),
            scheme: self.grid.scheme(),
            samples: self.values.iter().map(|v| [v.re, v.im]).collect(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, &self.to_json_record())?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let rec: FieldRecord = serde_json::from_reader(f)?;
        rec.into_field()
    }
}

fn parse_col<'a>(cols: &mut impl Iterator<Item = &'a str>, row: usize) -> Result<f64> {
    let tok = cols.next().ok_or_else(|| Error::Mismatch {
        reason: format!("csv row {row}: missing column"),
    })?;
    tok.trim().parse().map_err(|e| Error::Mismatch {
        reason: format!("csv row {row}: {e}"),
    })
}

/// Serialized field: grid descriptor plus `[re, im]` sample pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct FieldRecord {
    pub d: u32,
    pub c: f64,
    pub r_max: f64,
    pub n: usize,
    #[serde(flatten)]
    pub scheme: GridScheme,
    pub samples: Vec<[f64; 2]>,
}

impl FieldRecord {
    pub fn into_field(self) -> Result<RadialField> {
        let params = crate::params::ProblemParams::new(self.d, self.c)?;
        let grid = RadialGrid::build(params, self.r_max, self.n, self.scheme)?;
        RadialField::new(
            grid,
            self.samples
                .into_iter()
                .map(|[re, im]| Complex64::new(re, im))
                .collect(),
        )
    }
}
