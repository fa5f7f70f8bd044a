//! Continuation of roots along `f + tau * d`, `tau` in `[0, t]`.
//!
//! `d` is either the distributed perturbation `F (phi, 0, ..., 0)^T` or a
//! general difference `F_sys - f`. Each step is an Euler predictor on
//! `J(x, tau) x' = -d(x)` followed by a Newton corrector at the new `tau`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::bound::PerturbationSpec;
use crate::error::{Error, Result};
use crate::linalg::{inverse_condition, newton_step};
use crate::poly::MultiPoly;
use crate::region::IntervalBox;
use crate::rootfind::{solve_equations, RootClass, SolveOptions};
use crate::system::{EquationSet, PolySystem};

/// `f_i + tau * (F (phi, 0, ..., 0)^T)_i`.
pub fn deformed_system(sys: &PolySystem, pert: &PerturbationSpec, tau: f64) -> Result<PolySystem> {
    if pert.phi().nvars() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: pert.phi().nvars(),
        });
    }
    let polys = sys
        .polys()
        .iter()
        .zip(pert.direction())
        .map(|(f, d)| f + &d.scale(tau))
        .collect();
    PolySystem::new(polys, sys.ell())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackOptions {
    /// First step as a fraction of `|tau1 - tau0|`.
    pub initial_step: f64,
    pub min_step: f64,
    pub corrector_iter: usize,
    pub corrector_tol: f64,
    /// Largest accepted `sigma_max / sigma_min` of the corrector Jacobian.
    pub cond_limit: f64,
    pub max_steps: usize,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            initial_step: 0.01,
            min_step: 1e-12,
            corrector_iter: 20,
            corrector_tol: 1e-11,
            cond_limit: 1e12,
            max_steps: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Completed,
    CrashSuspected,
    LeftBox,
    SingularJacobian,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPoint {
    pub tau: f64,
    pub x: Vec<f64>,
    pub jf_value: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackReport {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub path: Vec<PathPoint>,
    pub status: TrackStatus,
    pub min_abs_jf: f64,
    pub max_residual: f64,
    pub rejected_steps: usize,
}

impl TrackReport {
    pub fn end_tau(&self) -> f64 {
        self.path.last().map_or(0.0, |p| p.tau)
    }

    /// Linear interpolation of the path at `tau`, clamped to its ends.
    pub fn position_at(&self, tau: f64) -> Vec<f64> {
        let p = &self.path;
        let increasing = p.last().is_none_or(|l| l.tau >= p[0].tau);
        let before = |a: f64, b: f64| if increasing { a <= b } else { a >= b };
        if p.len() == 1 || before(tau, p[0].tau) {
            return p[0].x.clone();
        }
        for w in p.windows(2) {
            if before(tau, w[1].tau) {
                let span = w[1].tau - w[0].tau;
                let s = if span == 0.0 {
                    1.0
                } else {
                    (tau - w[0].tau) / span
                };
                return w[0]
                    .x
                    .iter()
                    .zip(&w[1].x)
                    .map(|(a, b)| a + s * (b - a))
                    .collect();
            }
        }
        p[p.len() - 1].x.clone()
    }
}

/// `base + tau * direction` with symbolic Jacobians for both parts.
#[derive(Clone, Debug)]
pub struct Homotopy {
    base: EquationSet,
    direction: EquationSet,
}

impl Homotopy {
    pub fn new(base: &PolySystem, direction: Vec<MultiPoly>) -> Result<Self> {
        let n = base.dim();
        if direction.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: direction.len(),
            });
        }
        if let Some(p) = direction.iter().find(|p| p.nvars() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.nvars(),
            });
        }
        Ok(Self {
            base: base.equations(),
            direction: EquationSet::new(direction, n),
        })
    }

    pub fn from_perturbation(sys: &PolySystem, pert: &PerturbationSpec) -> Result<Self> {
        Self::new(sys, pert.direction())
    }

    /// Joins `sys` at `tau = 0` to `target` at `tau = 1`.
    pub fn between(sys: &PolySystem, target: &PolySystem) -> Result<Self> {
        if target.dim() != sys.dim() {
            return Err(Error::DimensionMismatch {
                expected: sys.dim(),
                got: target.dim(),
            });
        }
        let diff = target
            .polys()
            .iter()
            .zip(sys.polys())
            .map(|(g, f)| g - f)
            .collect();
        Self::new(sys, diff)
    }

    pub fn dim(&self) -> usize {
        self.base.nvars()
    }

    pub fn at(&self, tau: f64) -> EquationSet {
        let polys = self
            .base
            .polys()
            .iter()
            .zip(self.direction.polys())
            .map(|(f, d)| f + &d.scale(tau))
            .collect();
        EquationSet::new(polys, self.dim())
    }

    fn values(&self, x: &[f64], tau: f64) -> DVector<f64> {
        self.base.values(x) + self.direction.values(x) * tau
    }

    fn jacobian(&self, x: &[f64], tau: f64) -> nalgebra::DMatrix<f64> {
        self.base.jacobian(x) + self.direction.jacobian(x) * tau
    }

    fn residual(&self, x: &[f64], tau: f64) -> f64 {
        self.values(x, tau).amax()
    }

    fn jf(&self, x: &[f64], tau: f64) -> f64 {
        self.jacobian(x, tau).determinant()
    }

    fn conditioned(&self, x: &[f64], tau: f64, opts: &TrackOptions) -> bool {
        inverse_condition(&self.jacobian(x, tau)) * opts.cond_limit >= 1.0
    }

    /// Newton at fixed `tau`. `None` on divergence, slow contraction or an
    /// ill-conditioned Jacobian.
    fn correct(&self, x0: &[f64], tau: f64, opts: &TrackOptions) -> Option<Vec<f64>> {
        let mut x = x0.to_vec();
        let mut prev = f64::INFINITY;
        for _ in 0..opts.corrector_iter {
            let r = self.residual(&x, tau);
            if r <= opts.corrector_tol {
                return Some(x);
            }
            let j = self.jacobian(&x, tau);
            if inverse_condition(&j) * opts.cond_limit < 1.0 {
                return None;
            }
            let d = newton_step(&j, &self.values(&x, tau));
            let size = d.norm();
            if !size.is_finite() || (prev.is_finite() && size > 0.5 * prev) {
                // settled at rounding level or not contracting
                return (self.residual(&x, tau) <= 1e2 * opts.corrector_tol).then_some(x);
            }
            prev = size;
            for (xi, di) in x.iter_mut().zip(d.iter()) {
                *xi -= di;
            }
        }
        (self.residual(&x, tau) <= opts.corrector_tol).then_some(x)
    }

    /// Tracks `x0` from `tau0` to `tau1` (either direction).
    pub fn track(
        &self,
        x0: &[f64],
        tau0: f64,
        tau1: f64,
        region: &IntervalBox,
        opts: &TrackOptions,
    ) -> Result<TrackReport> {
        if x0.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x0.len(),
            });
        }
        if region.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: region.dim(),
            });
        }
        let span = (tau1 - tau0).abs();
        let sign = (tau1 - tau0).signum();
        let mut x = x0.to_vec();
        let mut tau = tau0;
        let mut h = span * opts.initial_step;
        let first_jf = self.jf(&x, tau);
        let mut path = vec![PathPoint {
            tau,
            x: x.clone(),
            jf_value: first_jf,
            step: 0.0,
        }];
        let mut min_abs_jf = first_jf.abs();
        let mut max_residual = self.residual(&x, tau);
        let mut rejected = 0;
        let mut status = TrackStatus::Completed;
        let mut steps = 0;
        while span > 0.0 && (tau1 - tau) * sign > 0.0 {
            steps += 1;
            if steps > opts.max_steps {
                status = TrackStatus::SingularJacobian;
                break;
            }
            if !self.conditioned(&x, tau, opts) {
                status = TrackStatus::SingularJacobian;
                break;
            }
            let remaining = (tau1 - tau).abs();
            let last = h >= remaining;
            let hs = h.min(remaining);
            let next_tau = if last { tau1 } else { tau + sign * hs };
            let xdot = newton_step(&self.jacobian(&x, tau), &(-self.direction.values(&x)));
            let predicted: Vec<f64> = x
                .iter()
                .zip(xdot.iter())
                .map(|(a, v)| a + sign * hs * v)
                .collect();
            let allowed = 0.5 * hs * xdot.norm() + 1e-8;
            let corrected = self.correct(&predicted, next_tau, opts).filter(|c| {
                let moved: f64 = c
                    .iter()
                    .zip(&predicted)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                moved <= allowed
            });
            match corrected {
                Some(c) => {
                    x = c;
                    tau = next_tau;
                    let jf = self.jf(&x, tau);
                    min_abs_jf = min_abs_jf.min(jf.abs());
                    max_residual = max_residual.max(self.residual(&x, tau));
                    path.push(PathPoint {
                        tau,
                        x: x.clone(),
                        jf_value: jf,
                        step: hs,
                    });
                    if !region.contains(&x, 1e-9) {
                        status = TrackStatus::LeftBox;
                        break;
                    }
                    h = (2.0 * hs).min(span * 0.1).max(hs);
                }
                None => {
                    rejected += 1;
                    h = hs * 0.5;
                    if h < opts.min_step {
                        status = TrackStatus::SingularJacobian;
                        break;
                    }
                }
            }
        }
        if status == TrackStatus::Completed {
            let polished = self.correct(&x, tau, opts).unwrap_or(x.clone());
            if self.residual(&polished, tau) <= self.residual(&x, tau) {
                x = polished;
                if let Some(p) = path.last_mut() {
                    p.x = x.clone();
                    p.jf_value = self.jf(&x, tau);
                }
            }
        }
        Ok(TrackReport {
            start: x0.to_vec(),
            end: x,
            path,
            status,
            min_abs_jf,
            max_residual,
            rejected_steps: rejected,
        })
    }
}

pub fn track_path(
    sys: &PolySystem,
    pert: &PerturbationSpec,
    root: &[f64],
    t: f64,
    region: &IntervalBox,
    opts: &TrackOptions,
) -> Result<TrackReport> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be >= 0, got {t}")));
    }
    Homotopy::from_perturbation(sys, pert)?.track(root, 0.0, t, region, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrashSuspect {
    Collision {
        first: usize,
        second: usize,
        tau: f64,
        distance: f64,
    },
    Singular {
        path: usize,
        min_abs_jf: f64,
        status: TrackStatus,
    },
}

pub const CRASH_RESAMPLE: usize = 201;
pub const DEFAULT_SINGULAR_JF: f64 = 1e-6;

/// Closest approach of every pair of paths on a shared `tau` grid.
pub fn min_separation(reports: &[TrackReport]) -> Option<(usize, usize, f64, f64)> {
    if reports.len() < 2 {
        return None;
    }
    let (lo, hi) = reports
        .iter()
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), r| {
            let (a, b) = (r.path[0].tau, r.end_tau());
            (lo.max(a.min(b)), hi.min(a.max(b)))
        });
    if lo > hi {
        return None;
    }
    let grid: Vec<f64> = (0..CRASH_RESAMPLE)
        .map(|i| lo + (hi - lo) * i as f64 / (CRASH_RESAMPLE - 1) as f64)
        .collect();
    let samples: Vec<Vec<Vec<f64>>> = reports
        .iter()
        .map(|r| grid.iter().map(|t| r.position_at(*t)).collect())
        .collect();
    let mut best: Option<(usize, usize, f64, f64)> = None;
    for a in 0..reports.len() {
        for b in a + 1..reports.len() {
            for (g, tau) in grid.iter().enumerate() {
                let d = samples[a][g]
                    .iter()
                    .zip(&samples[b][g])
                    .map(|(p, q)| (p - q).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if best.is_none_or(|(_, _, _, bd)| d < bd) {
                    best = Some((a, b, *tau, d));
                }
            }
        }
    }
    best
}

/// Pairs of paths closer than `radius` somewhere on the shared grid, and
/// paths whose `|jf|` fell below `singular_jf` or that stopped on a
/// singular Jacobian.
pub fn detect_crash(reports: &[TrackReport], radius: f64, singular_jf: f64) -> Vec<CrashSuspect> {
    let mut out = Vec::new();
    for (i, r) in reports.iter().enumerate() {
        if r.min_abs_jf < singular_jf || r.status == TrackStatus::SingularJacobian {
            out.push(CrashSuspect::Singular {
                path: i,
                min_abs_jf: r.min_abs_jf,
                status: r.status,
            });
        }
    }
    if reports.len() < 2 {
        return out;
    }
    let n = reports.len();
    for a in 0..n {
        for b in a + 1..n {
            if let Some((_, _, tau, d)) = min_separation(&[reports[a].clone(), reports[b].clone()])
            {
                if d < radius {
                    out.push(CrashSuspect::Collision {
                        first: a,
                        second: b,
                        tau,
                        distance: d,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub t: f64,
    pub t_star: Option<f64>,
    pub warning: Option<String>,
    pub count_start: usize,
    pub count_end: usize,
    pub count_resolved: usize,
    pub bijection: bool,
    pub unmatched_tracked: Vec<usize>,
    pub unmatched_resolved: Vec<usize>,
    pub min_separation: Option<f64>,
    pub max_reverse_error: f64,
    pub crashes: Vec<CrashSuspect>,
    pub tracks: Vec<TrackReport>,
    pub resolved: Vec<Vec<f64>>,
}

impl InvarianceReport {
    pub fn holds(&self) -> bool {
        self.count_start == self.count_end && self.bijection && self.crashes.is_empty()
    }
}

/// One-to-one greedy matching of `a` to `b` by increasing distance within
/// `radius`. Returns the unmatched indices of each side.
pub fn match_points(a: &[Vec<f64>], b: &[Vec<f64>], radius: f64) -> (Vec<usize>, Vec<usize>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            let d = p
                .iter()
                .zip(q)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt();
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut used_a = vec![false; a.len()];
    let mut used_b = vec![false; b.len()];
    for (_, i, j) in pairs {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
        }
    }
    let free = |u: Vec<bool>| {
        u.iter()
            .enumerate()
            .filter(|(_, m)| !**m)
            .map(|(i, _)| i)
            .collect()
    };
    (free(used_a), free(used_b))
}

/// Tracks every simple root of `sys` in `region` to `tau = t`, re-solves the
/// deformed system independently and compares.
pub fn verify_invariance(
    sys: &PolySystem,
    pert: &PerturbationSpec,
    t: f64,
    region: &IntervalBox,
    t_star: Option<f64>,
    solve: &SolveOptions,
    track: &TrackOptions,
) -> Result<InvarianceReport> {
    let h = Homotopy::from_perturbation(sys, pert)?;
    verify_homotopy(&h, t, region, t_star, solve, track)
}

pub fn verify_homotopy(
    h: &Homotopy,
    t: f64,
    region: &IntervalBox,
    t_star: Option<f64>,
    solve: &SolveOptions,
    track: &TrackOptions,
) -> Result<InvarianceReport> {
    if region.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            got: region.dim(),
        });
    }
    let warning = t_star
        .filter(|ts| t >= *ts)
        .map(|ts| format!("t = {t} is not below the bound t* = {ts}"));
    let simple_roots = |eqs: &EquationSet| -> Vec<Vec<f64>> {
        solve_equations(eqs, region, solve)
            .roots
            .into_iter()
            .filter(|r| r.class == RootClass::Simple)
            .map(|r| r.x)
            .collect()
    };
    let start = simple_roots(&h.at(0.0));
    let tracks: Vec<TrackReport> = start
        .par_iter()
        .map(|x| h.track(x, 0.0, t, region, track))
        .collect::<Result<_>>()?;
    let reverse: Vec<f64> = tracks
        .par_iter()
        .filter(|r| r.status == TrackStatus::Completed)
        .map(|r| {
            h.track(&r.end, t, 0.0, region, track).map(|back| {
                back.end
                    .iter()
                    .zip(&r.start)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
        })
        .collect::<Result<_>>()?;
    let resolved = simple_roots(&h.at(t));
    let ends: Vec<Vec<f64>> = tracks
        .iter()
        .filter(|r| r.status == TrackStatus::Completed)
        .map(|r| r.end.clone())
        .collect();
    let (unmatched_tracked, unmatched_resolved) =
        match_points(&ends, &resolved, solve.dedup_radius);
    let bijection =
        ends.len() == tracks.len() && unmatched_tracked.is_empty() && unmatched_resolved.is_empty();
    let crashes = detect_crash(&tracks, solve.dedup_radius, DEFAULT_SINGULAR_JF);
    Ok(InvarianceReport {
        t,
        t_star,
        warning,
        count_start: start.len(),
        count_end: ends.len(),
        count_resolved: resolved.len(),
        bijection,
        unmatched_tracked,
        unmatched_resolved,
        min_separation: min_separation(&tracks).map(|s| s.3),
        max_reverse_error: reverse.into_iter().fold(0.0, f64::max),
        crashes,
        tracks,
        resolved,
    })
}
