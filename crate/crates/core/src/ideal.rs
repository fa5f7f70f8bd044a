//! Membership of `m^k` in the gradient ideal of the distinguished equation.
//!
//! For each monomial `M_s` of degree `k` we look for homogeneous cofactors
//! `h_j` of degree `k - m_ell + 1` with `sum_j h_j * df_ell/dx_j = M_s`. All
//! shifted generators `x^beta * df_ell/dx_j` form the columns of a Macaulay
//! matrix; the minimum-norm least-squares solution for every target is read
//! off one SVD.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{numerical_rank, pinv_apply};
use crate::poly::{Exponent, MultiPoly};
use crate::system::PolySystem;

/// Number of exponent vectors in `Z^n_{>=0}` of total degree `k`, i.e.
/// `binomial(k + n - 1, n - 1)`.
pub fn mu(n: usize, k: u32) -> u64 {
    assert!(n >= 1, "mu needs at least one variable");
    let top = k as u64 + n as u64 - 1;
    let r = (n as u64 - 1).min(k as u64);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeIndex {
    Finite(u64),
    Infinite,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeReport {
    pub difference_vectors: Vec<Vec<i64>>,
    pub index: LatticeIndex,
}

impl LatticeReport {
    pub fn passes(&self) -> bool {
        self.index == LatticeIndex::Finite(1)
    }
}

/// Index of the integer span of `v_1 - v_j` (top-degree exponents of `f`)
/// inside `{alpha in Z^n : sum alpha_i = 0}`.
pub fn lattice_necessary_check(f: &MultiPoly) -> LatticeReport {
    let n = f.nvars();
    let top: Vec<Vec<i64>> = match f.total_degree() {
        Some(m) => f
            .homogeneous_part(m)
            .support()
            .rev()
            .map(|e| e.entries().iter().map(|&v| v as i64).collect())
            .collect(),
        None => Vec::new(),
    };
    let diffs: Vec<Vec<i64>> = top
        .iter()
        .skip(1)
        .map(|v| top[0].iter().zip(v).map(|(a, b)| a - b).collect())
        .collect();
    if n == 1 {
        // the zero-sum lattice in one variable is {0}
        let index = if top.is_empty() {
            LatticeIndex::Infinite
        } else {
            LatticeIndex::Finite(1)
        };
        return LatticeReport {
            difference_vectors: diffs,
            index,
        };
    }
    if top.len() < 2 {
        return LatticeReport {
            difference_vectors: diffs,
            index: LatticeIndex::Infinite,
        };
    }
    // Coordinates in the basis e_i - e_n of the zero-sum lattice are the
    // first n - 1 entries.
    let rows: Vec<Vec<i128>> = diffs
        .iter()
        .map(|d| d[..n - 1].iter().map(|&v| v as i128).collect())
        .collect();
    let index = match echelon_pivots(rows, n - 1) {
        Some(pivots) if pivots.len() == n - 1 => {
            LatticeIndex::Finite(pivots.iter().map(|p| p.unsigned_abs()).product::<u128>() as u64)
        }
        _ => LatticeIndex::Infinite,
    };
    LatticeReport {
        difference_vectors: diffs,
        index,
    }
}

/// Integer row echelon form by unimodular row operations; returns the pivot
/// entries. The span's index in `Z^cols` (full rank) is their product.
fn echelon_pivots(mut rows: Vec<Vec<i128>>, cols: usize) -> Option<Vec<i128>> {
    let mut pivots = Vec::new();
    let mut r0 = 0;
    for c in 0..cols {
        loop {
            // bring the smallest nonzero |entry| in column c to row r0
            let best = (r0..rows.len())
                .filter(|&r| rows[r][c] != 0)
                .min_by_key(|&r| rows[r][c].unsigned_abs());
            let Some(b) = best else { break };
            rows.swap(r0, b);
            let mut done = true;
            for r in r0 + 1..rows.len() {
                if rows[r][c] != 0 {
                    let q = rows[r][c] / rows[r0][c];
                    let (head, tail) = rows.split_at_mut(r);
                    for (dst, src) in tail[0][c..cols].iter_mut().zip(&head[r0][c..cols]) {
                        *dst -= q * src;
                    }
                    if rows[r][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                pivots.push(rows[r0][c]);
                r0 += 1;
                break;
            }
        }
        if r0 == rows.len() {
            break;
        }
    }
    Some(pivots)
}

/// True iff every variable has a pure power `x_i^b` (b >= 1) in the support.
pub fn convenient_check(f: &MultiPoly) -> bool {
    (0..f.nvars()).all(|i| {
        f.support().any(|e| {
            let v = e.entries();
            v[i] >= 1 && v.iter().enumerate().all(|(j, &x)| j == i || x == 0)
        })
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertifyOptions {
    /// Largest accepted coefficient residual per monomial.
    pub tol: f64,
    /// Relative singular-value cutoff for the pseudo-inverse.
    pub rcond: f64,
    /// Largest `k` tried by [`minimal_k`].
    pub cap: u32,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            rcond: 1e-10,
            cap: 20,
        }
    }
}

/// Cofactor representation of every degree-`k` monomial.
#[derive(Clone, Debug, Serialize)]
pub struct IdealCertificate {
    #[serde(serialize_with = "one_based")]
    pub ell: usize,
    pub k: u32,
    pub mu: u64,
    pub cofactor_degree: u32,
    pub monomials: Vec<Exponent>,
    /// `cofactors[s][j]` multiplies `df_ell/dx_j` in the representation of
    /// `monomials[s]`.
    pub cofactors: Vec<Vec<MultiPoly>>,
    pub residuals: Vec<f64>,
    pub residual: f64,
    pub rank: usize,
}

fn one_based<S: Serializer>(v: &usize, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(*v as u64 + 1)
}

pub fn certify_ideal_power(
    sys: &PolySystem,
    k: u32,
    opts: &CertifyOptions,
) -> Result<IdealCertificate> {
    let f = sys.distinguished();
    let n = sys.dim();
    let m = sys.degrees()[sys.ell()];
    if k + 1 < m {
        return Err(Error::DegreeMismatch { k, min_k: m - 1 });
    }
    let d = k + 1 - m;
    let grads: Vec<MultiPoly> = (0..n).map(|j| f.derivative(j)).collect();
    let shifts = Exponent::all_of_degree(n, d);
    let targets = Exponent::all_of_degree(n, k);

    let mut columns = Vec::with_capacity(n * shifts.len());
    for g in &grads {
        for b in &shifts {
            columns.push(g.mul_monomial(b, 1.0));
        }
    }
    let mut row_of: BTreeMap<Exponent, usize> = BTreeMap::new();
    for e in targets
        .iter()
        .chain(columns.iter().flat_map(|c| c.support()))
    {
        let next = row_of.len();
        row_of.entry(e.clone()).or_insert(next);
    }
    let mut a = DMatrix::<f64>::zeros(row_of.len(), columns.len());
    for (c, col) in columns.iter().enumerate() {
        for (e, v) in col.terms() {
            a[(row_of[e], c)] = v;
        }
    }

    let svd = a.clone().svd(true, true);
    let rank = numerical_rank(&svd.singular_values, opts.rcond);
    let mut cofactors = Vec::with_capacity(targets.len());
    let mut residuals = Vec::with_capacity(targets.len());
    for t in &targets {
        let mut rhs = DVector::zeros(row_of.len());
        rhs[row_of[t]] = 1.0;
        let mut h = pinv_apply(&svd, &rhs, opts.rcond);
        let hmax = h.amax();
        h.apply(|v| {
            if v.abs() <= 1e-14 * hmax {
                *v = 0.0
            }
        });
        let res = (&a * &h - &rhs).amax();
        if !(res <= opts.tol) {
            return Err(Error::NotInIdeal {
                monomial: t.entries().to_vec(),
                residual: res,
            });
        }
        residuals.push(res);
        let row: Vec<MultiPoly> = (0..n)
            .map(|j| {
                MultiPoly::from_terms(
                    n,
                    shifts
                        .iter()
                        .enumerate()
                        .map(|(bi, b)| (b.clone(), h[j * shifts.len() + bi])),
                )
                .expect("shift exponents have length n")
            })
            .collect();
        cofactors.push(row);
    }
    let residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(IdealCertificate {
        ell: sys.ell(),
        k,
        mu: mu(n, k),
        cofactor_degree: d,
        monomials: targets,
        cofactors,
        residuals,
        residual,
        rank,
    })
}

/// Smallest certified `k <= opts.cap`, with its certificate.
pub fn minimal_certificate(sys: &PolySystem, opts: &CertifyOptions) -> Option<IdealCertificate> {
    let m = sys.degrees()[sys.ell()];
    let start = m.saturating_sub(1).max(1);
    (start..=opts.cap).find_map(|k| certify_ideal_power(sys, k, opts).ok())
}

pub fn minimal_k(sys: &PolySystem, opts: &CertifyOptions) -> Option<u32> {
    minimal_certificate(sys, opts).map(|c| c.k)
}

/// Re-expands `M_s - sum_j h_j df/dx_j` with polynomial arithmetic and
/// returns the largest coefficient magnitude over all `s`.
pub fn reexpand_residual(cert: &IdealCertificate, f_ell: &MultiPoly) -> f64 {
    let n = f_ell.nvars();
    let grads: Vec<MultiPoly> = (0..n).map(|j| f_ell.derivative(j)).collect();
    cert.monomials
        .iter()
        .zip(&cert.cofactors)
        .map(|(m, hs)| {
            let mut r = MultiPoly::monomial(m.clone(), 1.0);
            for (h, g) in hs.iter().zip(&grads) {
                r = &r - &(h * g);
            }
            r.max_abs_coeff()
        })
        .fold(0.0, f64::max)
}
