//! Time grids and tabulated `D_e(t)` series with a CSV writer.

use std::fmt::Write as _;
use std::io;

use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, points: usize, spacing: Spacing) -> Result<Self> {
        let grid = Self { t_min, t_max, points, spacing };
        grid.validate()?;
        Ok(grid)
    }

    pub fn linear(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        Self::new(t_min, t_max, points, Spacing::Linear)
    }

    pub fn log(t_min: f64, t_max: f64, points: usize) -> Result<Self> {
        Self::new(t_min, t_max, points, Spacing::Log)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !self.t_min.is_finite() || !self.t_max.is_finite() || self.t_min < 0.0 {
            return bad(format!("time range [{}, {}] must be finite and non-negative", self.t_min, self.t_max));
        }
        if self.points == 0 {
            return bad("time grid needs at least one point".into());
        }
        if self.points > 1 && self.t_max <= self.t_min {
            return bad(format!("t_max ({}) must exceed t_min ({})", self.t_max, self.t_min));
        }
        if self.spacing == Spacing::Log && self.t_min <= 0.0 {
            return bad("log spacing needs t_min > 0".into());
        }
        Ok(())
    }

    /// Grid points; endpoints are hit exactly and points are formed as
    /// `t_min + i (t_max − t_min) / (points − 1)` (or its log analogue).
    pub fn times(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.t_min];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    return self.t_max;
                }
                match self.spacing {
                    Spacing::Linear => self.t_min + (i as f64) * (self.t_max - self.t_min) / last,
                    Spacing::Log => {
                        let (a, b) = (self.t_min.ln(), self.t_max.ln());
                        (a + (i as f64) * (b - a) / last).exp()
                    }
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub aux: Vec<f64>,
}

/// Rows of `(t, D_e analytic, D_e numeric, auxiliary columns...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSeries {
    pub aux_columns: Vec<String>,
    pub rows: Vec<SeriesRow>,
}

impl DecoherenceSeries {
    pub fn new(aux_columns: Vec<String>) -> Self {
        Self { aux_columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: SeriesRow) -> Result<()> {
        if row.aux.len() != self.aux_columns.len() {
            return Err(Error::DimensionMismatch { expected: self.aux_columns.len(), got: row.aux.len() });
        }
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(Error::InvalidParameter(format!("times must increase strictly ({} after {})", row.t, last.t)));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn analytic(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.analytic).collect()
    }

    pub fn numeric(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.numeric).collect()
    }

    pub fn aux(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.aux_columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.aux[k]).collect())
    }

    /// Largest `|analytic − numeric|` over all rows.
    pub fn max_discrepancy(&self) -> f64 {
        self.rows.iter().map(|r| (r.analytic - r.numeric).abs()).fold(0.0, f64::max)
    }

    /// CSV text: header, then one line per row, 17 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,de_analytic,de_numeric");
        for c in &self.aux_columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            write_float(&mut out, row.t);
            for v in [row.analytic, row.numeric].iter().chain(&row.aux) {
                out.push(',');
                write_float(&mut out, *v);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

pub(crate) fn write_float(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}
