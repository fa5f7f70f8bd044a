use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{parse_poly, variable_names, MultiPoly};

/// A square system `f_1 = ... = f_n = 0` in `n` variables with a
/// distinguished equation `ell` whose gradient ideal drives the bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    polys: Vec<MultiPoly>,
    degrees: Vec<u32>,
    ell: usize,
}

impl PolySystem {
    /// `ell` is 0-based.
    pub fn new(polys: Vec<MultiPoly>, ell: usize) -> Result<Self> {
        let n = polys.len();
        if n == 0 {
            return Err(Error::InvalidSystem("system has no equations".into()));
        }
        let mut degrees = Vec::with_capacity(n);
        for (i, p) in polys.iter().enumerate() {
            if p.nvars() != n {
                return Err(Error::InvalidSystem(format!(
                    "equation {} has {} variables, expected {n}",
                    i + 1,
                    p.nvars()
                )));
            }
            match p.total_degree() {
                Some(d) => degrees.push(d),
                None => {
                    return Err(Error::InvalidSystem(format!(
                        "equation {} is identically zero",
                        i + 1
                    )))
                }
            }
        }
        if ell >= n {
            return Err(Error::IndexOutOfRange {
                index: ell,
                nvars: n,
            });
        }
        Ok(Self {
            polys,
            degrees,
            ell,
        })
    }

    /// Parses one expression per equation over `x1..xn`, with named scalar
    /// parameters substituted.
    pub fn parse(exprs: &[&str], ell: usize, params: &[(String, f64)]) -> Result<Self> {
        let vars = variable_names(exprs.len());
        let polys = exprs
            .iter()
            .map(|s| parse_poly(s, &vars, params))
            .collect::<Result<Vec<_>>>()?;
        Self::new(polys, ell)
    }

    pub fn dim(&self) -> usize {
        self.polys.len()
    }

    pub fn polys(&self) -> &[MultiPoly] {
        &self.polys
    }

    /// Per-equation total degrees `m_i`, in equation order.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// Whether `m_1 <= m_2 <= ... <= m_n` holds in the given equation order.
    pub fn degrees_sorted(&self) -> bool {
        self.degrees.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn with_ell(&self, ell: usize) -> Result<Self> {
        Self::new(self.polys.clone(), ell)
    }

    pub fn distinguished(&self) -> &MultiPoly {
        &self.polys[self.ell]
    }

    pub fn equations(&self) -> EquationSet {
        EquationSet::new(self.polys.clone(), self.dim())
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval(x).abs())
            .fold(0.0, f64::max)
    }
}

/// `m` polynomial equations in `nvars` unknowns with a precomputed symbolic
/// Jacobian. Square for ordinary solves, tall for deflated systems.
#[derive(Clone, Debug)]
pub struct EquationSet {
    nvars: usize,
    polys: Vec<MultiPoly>,
    jac: Vec<Vec<MultiPoly>>,
}

impl EquationSet {
    pub fn new(polys: Vec<MultiPoly>, nvars: usize) -> Self {
        let jac = polys
            .iter()
            .map(|p| (0..nvars).map(|j| p.derivative(j)).collect())
            .collect();
        Self { nvars, polys, jac }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn polys(&self) -> &[MultiPoly] {
        &self.polys
    }

    pub fn jacobian_polys(&self) -> &[Vec<MultiPoly>] {
        &self.jac
    }

    pub fn values(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.polys.len(), self.polys.iter().map(|p| p.eval(x)))
    }

    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.polys.len(), self.nvars, |i, j| self.jac[i][j].eval(x))
    }

    pub fn residual(&self, x: &[f64]) -> f64 {
        self.polys
            .iter()
            .map(|p| p.eval(x).abs())
            .fold(0.0, f64::max)
    }
}
