//! Axis-aligned boxes used as the compact set for bounds and root searches.

use serde::Serialize;

use crate::error::{Error, Result};

/// Closed box `[lo_1, hi_1] x ... x [lo_n, hi_n]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidBox("box has no axes".into()));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() {
                return Err(Error::InvalidBox(format!(
                    "axis {i} has a non-finite bound"
                )));
            }
            if l > h {
                return Err(Error::InvalidBox(format!("axis {i}: lo {l} > hi {h}")));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    /// Box of half-width `half` centred on `center`.
    pub fn around(center: &[f64], half: f64) -> Result<Self> {
        Self::new(
            center.iter().map(|c| c - half).collect(),
            center.iter().map(|c| c + half).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    /// `max(|lo_i|, |hi_i|)`, the largest magnitude coordinate `i` takes on the box.
    pub fn abs_max(&self, i: usize) -> f64 {
        self.lo[i].abs().max(self.hi[i].abs())
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= l - slack && *v <= h + slack)
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Distance from `x` to the box boundary (0 when outside).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(v, (l, h))| (v - l).min(h - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    /// Centres of a uniform `g^n` cell grid.
    pub fn cell_centers(&self, g: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                let w = (self.hi[i] - self.lo[i]) / g as f64;
                (0..g).map(|j| self.lo[i] + w * (j as f64 + 0.5)).collect()
            })
            .collect();
        cartesian(&axes)
    }

    /// `g` equally spaced points per axis including both endpoints.
    pub fn lattice_points(&self, g: usize) -> Vec<Vec<f64>> {
        let g = g.max(2);
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                let w = (self.hi[i] - self.lo[i]) / (g - 1) as f64;
                (0..g)
                    .map(|j| {
                        if j == g - 1 {
                            self.hi[i]
                        } else {
                            self.lo[i] + w * j as f64
                        }
                    })
                    .collect()
            })
            .collect();
        cartesian(&axes)
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(axes.len())];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}
