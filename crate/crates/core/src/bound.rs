//! Safe perturbation magnitude `t* = 1 / (||phi|| * C * mu^2)`.
//!
//! `C` is the largest, over the certified monomials `M_s`, of
//! `sum_j sum_{|beta| <= k'-k-1} max_K |h_j^(s) x^beta|`. The maximum over
//! `K` is replaced by a coefficient bound, which can only overestimate `C`
//! and so only shrinks `t*`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ideal::{minimal_certificate, CertifyOptions, IdealCertificate};
use crate::poly::{Exponent, MultiPoly};
use crate::region::IntervalBox;
use crate::system::PolySystem;

/// Scalar direction `phi` distributed into the equations as
/// `(phi_1, ..., phi_n)^T = F (phi, 0, ..., 0)^T`.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationSpec {
    phi: MultiPoly,
    f: DMatrix<f64>,
}

/// Largest accepted condition number of `F`.
pub const DEFAULT_F_COND_LIMIT: f64 = 1e12;

impl PerturbationSpec {
    pub fn new(phi: MultiPoly, f: DMatrix<f64>) -> Result<Self> {
        let n = phi.nvars();
        if f.nrows() != n || f.ncols() != n {
            return Err(Error::InvalidPerturbation(format!(
                "F must be {n}x{n}, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        let s = f.singular_values();
        let cond = s.max() / s.min();
        if !(cond.is_finite() && cond <= DEFAULT_F_COND_LIMIT) {
            return Err(Error::InvalidPerturbation(format!(
                "F is singular or badly conditioned (cond {cond:.3e})"
            )));
        }
        Ok(Self { phi, f })
    }

    /// `F` with first column equal to the indicator of `rows` (0-based), the
    /// remaining columns completing it to an invertible matrix.
    pub fn on_rows(phi: MultiPoly, rows: &[usize]) -> Result<Self> {
        let n = phi.nvars();
        if rows.is_empty() {
            return Err(Error::InvalidPerturbation("no target rows".into()));
        }
        if let Some(&r) = rows.iter().find(|&&r| r >= n) {
            return Err(Error::IndexOutOfRange { index: r, nvars: n });
        }
        let pivot = *rows.iter().min().expect("nonempty");
        let mut f = DMatrix::zeros(n, n);
        for &r in rows {
            f[(r, 0)] = 1.0;
        }
        let others = (0..n).filter(|&i| i != pivot);
        for (col, i) in (1..n).zip(others) {
            f[(i, col)] = 1.0;
        }
        Self::new(phi, f)
    }

    pub fn phi(&self) -> &MultiPoly {
        &self.phi
    }

    pub fn f_matrix(&self) -> &DMatrix<f64> {
        &self.f
    }

    /// Per-equation perturbation `F_i1 * phi`.
    pub fn direction(&self) -> Vec<MultiPoly> {
        (0..self.f.nrows())
            .map(|i| self.phi.scale(self.f[(i, 0)]))
            .collect()
    }

    pub fn k_prime(&self) -> Option<u32> {
        self.phi.total_degree()
    }

    /// Requires `supp phi` inside `{k + 1 <= |alpha| <= k'}`.
    pub fn check_window(&self, k: u32) -> Result<()> {
        match self.phi.min_degree() {
            None => Err(Error::InvalidPerturbation("phi is zero".into())),
            Some(lo) if lo < k + 1 => Err(Error::InvalidPerturbation(format!(
                "phi has a term of degree {lo}, outside m^{}",
                k + 1
            ))),
            Some(_) => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CEstimate {
    /// Coefficient-bound value, used in `t*`.
    pub rigorous: f64,
    /// Grid-sampled value (32 points per axis), a lower estimate.
    pub sampled: f64,
}

pub const C_SAMPLE_GRID: usize = 32;

/// All `x^beta` with `|beta| <= max_deg`.
fn shifts_up_to(n: usize, max_deg: i64) -> Vec<Exponent> {
    (0..=max_deg.max(-1))
        .flat_map(|d| Exponent::all_of_degree(n, d as u32))
        .collect()
}

pub fn compute_c(cert: &IdealCertificate, region: &IntervalBox, k: u32, k_prime: u32) -> CEstimate {
    let n = region.dim();
    let betas = shifts_up_to(n, k_prime as i64 - k as i64 - 1);
    let samples = region.lattice_points(C_SAMPLE_GRID);
    let mut rigorous = 0.0f64;
    let mut sampled = 0.0f64;
    for hs in &cert.cofactors {
        let mut row_rig = 0.0;
        let mut row_smp = 0.0;
        for h in hs {
            if h.is_zero() {
                continue;
            }
            for b in &betas {
                let p = h.mul_monomial(b, 1.0);
                row_rig += p.coeff_bound_on_box(region);
                row_smp += samples.iter().map(|x| p.eval(x).abs()).fold(0.0, f64::max);
            }
        }
        rigorous = rigorous.max(row_rig);
        sampled = sampled.max(row_smp);
    }
    CEstimate { rigorous, sampled }
}

pub fn compute_bound(norm_phi: f64, c: f64, mu: u64) -> Result<f64> {
    if !(norm_phi > 0.0) {
        return Err(Error::NonPositive(format!("||phi|| = {norm_phi}")));
    }
    if !(c > 0.0) {
        return Err(Error::NonPositive(format!("C = {c}")));
    }
    if mu == 0 {
        return Err(Error::NonPositive("mu = 0".into()));
    }
    let mu = mu as f64;
    Ok(1.0 / (norm_phi * c * mu * mu))
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub norm_phi: f64,
    pub c: f64,
    pub c_sampled: f64,
    pub mu: u64,
    pub t_star: f64,
    pub k: u32,
    pub k_prime: u32,
    #[serde(rename = "box")]
    pub region: IntervalBox,
    pub certificate: IdealCertificate,
}

/// Certifies the smallest `k`, checks the support window and assembles `t*`.
pub fn bound_report(
    sys: &PolySystem,
    pert: &PerturbationSpec,
    region: &IntervalBox,
    opts: &CertifyOptions,
) -> Result<BoundReport> {
    if region.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: region.dim(),
        });
    }
    let cert = minimal_certificate(sys, opts).ok_or_else(|| Error::NotInIdeal {
        monomial: Vec::new(),
        residual: f64::INFINITY,
    })?;
    bound_from_certificate(pert, region, cert)
}

pub fn bound_from_certificate(
    pert: &PerturbationSpec,
    region: &IntervalBox,
    cert: IdealCertificate,
) -> Result<BoundReport> {
    pert.check_window(cert.k)?;
    let k_prime = pert.k_prime().expect("window check rejects zero phi");
    let norm_phi = pert.phi().weighted_norm();
    let c = compute_c(&cert, region, cert.k, k_prime);
    let t_star = compute_bound(norm_phi, c.rigorous, cert.mu)?;
    Ok(BoundReport {
        norm_phi,
        c: c.rigorous,
        c_sampled: c.sampled,
        mu: cert.mu,
        t_star,
        k: cert.k,
        k_prime,
        region: region.clone(),
        certificate: cert,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma1Path {
    /// Every `|a_ij| < 1/mu^2`.
    Hypothesis,
    /// Hypothesis failed; decided by `det(id + A)`.
    Determinant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma1Verdict {
    pub invertible: bool,
    pub decided_by: Lemma1Path,
}

/// Invertibility of `id + A` via the entrywise `1/mu^2` criterion, falling back
/// to a determinant test.
pub fn lemma1_invertible(a: &DMatrix<f64>) -> Lemma1Verdict {
    assert!(a.is_square(), "lemma1_invertible needs a square matrix");
    let mu = a.nrows() as f64;
    if a.iter().all(|v| v.abs() < 1.0 / (mu * mu)) {
        return Lemma1Verdict {
            invertible: true,
            decided_by: Lemma1Path::Hypothesis,
        };
    }
    let m = DMatrix::identity(a.nrows(), a.ncols()) + a;
    let scale = m
        .row_iter()
        .map(|r| r.norm())
        .product::<f64>()
        .max(f64::MIN_POSITIVE);
    let det = m.determinant();
    Lemma1Verdict {
        invertible: det.abs() > 1e-12 * scale,
        decided_by: Lemma1Path::Determinant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::certify_ideal_power;

    fn kearfott() -> PolySystem {
        PolySystem::parse(&["x1^2 - x2^2 - 1", "x1^2 + x2^2 - 2"], 1, &[]).unwrap()
    }

    #[test]
    fn kearfott_constant_is_five_halves() {
        let cert = certify_ideal_power(&kearfott(), 1, &CertifyOptions::default()).unwrap();
        let k = IntervalBox::cube(2, -2.0, 2.0).unwrap();
        let c = compute_c(&cert, &k, 1, 3);
        assert!((c.rigorous - 2.5).abs() < 1e-12);
        assert!(c.sampled <= c.rigorous + 1e-12);
    }

    #[test]
    fn degenerate_window_uses_cofactors_alone() {
        let cert = certify_ideal_power(&kearfott(), 1, &CertifyOptions::default()).unwrap();
        let k = IntervalBox::cube(2, -2.0, 2.0).unwrap();
        // k' = k + 1: only beta = 0, so C = max_s sum_j |h| = 1/2
        assert!((compute_c(&cert, &k, 1, 2).rigorous - 0.5).abs() < 1e-15);
    }

    #[test]
    fn bound_arithmetic() {
        assert_eq!(compute_bound(3.0, 2.5, 2).unwrap(), 1.0 / 30.0);
        assert_eq!(compute_bound(2.0, 0.5, 3).unwrap(), 1.0 / 9.0);
        assert_eq!(compute_bound(1.0, 1.0, 1).unwrap(), 1.0);
        assert!(compute_bound(0.0, 1.0, 1).is_err());
        assert!(compute_bound(1.0, -1.0, 1).is_err());
        assert!(compute_bound(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn lemma1_cases() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(
            lemma1_invertible(&z),
            Lemma1Verdict {
                invertible: true,
                decided_by: Lemma1Path::Hypothesis
            }
        );
        let a = DMatrix::from_element(2, 2, 0.24);
        let det: f64 = (DMatrix::identity(2, 2) + &a).determinant();
        assert!((det - 1.48).abs() < 1e-12);
        assert!(lemma1_invertible(&a).invertible);
        let neg = -DMatrix::<f64>::identity(2, 2);
        assert_eq!(
            lemma1_invertible(&neg),
            Lemma1Verdict {
                invertible: false,
                decided_by: Lemma1Path::Determinant
            }
        );
    }

    #[test]
    fn perturbation_rows_build_invertible_f() {
        let phi = MultiPoly::parse(2, "x1*x2^2").unwrap();
        let p = PerturbationSpec::on_rows(phi.clone(), &[1]).unwrap();
        assert!(p.direction()[0].is_zero());
        assert_eq!(p.direction()[1], phi);
        let both = PerturbationSpec::on_rows(phi.clone(), &[0, 1]).unwrap();
        assert_eq!(both.direction()[0], phi);
        assert_eq!(both.direction()[1], phi);
        assert!(PerturbationSpec::new(phi.clone(), DMatrix::zeros(2, 2)).is_err());
        assert!(PerturbationSpec::on_rows(phi, &[2]).is_err());
    }

    #[test]
    fn window_check() {
        let p =
            PerturbationSpec::on_rows(MultiPoly::parse(2, "x1*x2^2 + x1").unwrap(), &[0]).unwrap();
        assert!(p.check_window(1).is_err());
        let q = PerturbationSpec::on_rows(MultiPoly::parse(2, "x1*x2^2").unwrap(), &[0]).unwrap();
        assert!(q.check_window(1).is_ok());
        assert!(q.check_window(2).is_ok());
        assert!(q.check_window(3).is_err());
    }

    #[test]
    fn kearfott_report() {
        let pert =
            PerturbationSpec::on_rows(MultiPoly::parse(2, "x1*x2^2").unwrap(), &[0]).unwrap();
        let k = IntervalBox::cube(2, -2.0, 2.0).unwrap();
        let r = bound_report(&kearfott(), &pert, &k, &CertifyOptions::default()).unwrap();
        assert_eq!(r.norm_phi, 3.0);
        assert_eq!(r.mu, 2);
        assert_eq!(r.k_prime, 3);
        assert!((r.t_star - 1.0 / 30.0).abs() < 1e-15);
    }
}
