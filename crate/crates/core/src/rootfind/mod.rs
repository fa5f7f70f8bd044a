//! Real roots in a box by multistart damped Newton, with deflation for
//! multiple roots and simple/multiple classification through `jf`.

pub mod deflate;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::newton_step;
use crate::region::IntervalBox;
use crate::system::{EquationSet, PolySystem};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveOptions {
    /// Grid starts per axis.
    pub grid: usize,
    pub random_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Endpoints with residual above this are discarded.
    pub accept_tol: f64,
    /// Distinct roots are at least this far apart.
    pub dedup_radius: f64,
    /// Slow or singular endpoints within this radius are merged before deflation.
    pub cluster_radius: f64,
    /// Threshold on [`relative_jf`] at or below which a root is multiple.
    pub singular_tol: f64,
    /// Iteration count from which an endpoint is treated as slow.
    pub slow_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grid: 16,
            random_starts: 64,
            seed: 0,
            max_iter: 100,
            accept_tol: 1e-8,
            dedup_radius: 1e-6,
            cluster_radius: 1e-4,
            singular_tol: 1e-6,
            slow_iter: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RootClass {
    Simple,
    Multiple,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Root {
    pub x: Vec<f64>,
    pub residual: f64,
    pub jf_value: f64,
    /// `|jf|` over the product of per-equation gradient term scales.
    pub jf_relative: f64,
    /// 1 for simple roots; a provisional 2 for multiple roots until probed.
    pub multiplicity_estimate: u32,
    pub cluster_members: usize,
    pub class: RootClass,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    pub starts: usize,
    pub iterations: usize,
    pub converged: usize,
    pub no_convergence: usize,
    pub merges: usize,
    pub cluster_candidates: usize,
    pub deflated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    #[serde(rename = "box")]
    pub region: IntervalBox,
    pub diagnostics: SolveDiagnostics,
}

impl RootSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.roots.iter().map(|r| r.x.clone()).collect()
    }

    pub fn simple(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.class == RootClass::Simple)
    }

    pub fn multiple(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.class == RootClass::Multiple)
    }
}

pub fn jacobian_det(sys: &PolySystem, x: &[f64]) -> Result<f64> {
    if x.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: x.len(),
        });
    }
    Ok(sys.equations().jacobian(x).determinant())
}

/// `(jf(x), |jf(x)| / prod_i s_i(x))` where `s_i` is the Euclidean norm of the
/// vector `(sum_alpha |c_alpha d_j x^alpha|)_j` for equation `i`. Unlike the
/// gradient norm, `s_i` does not vanish when the terms of a gradient cancel,
/// so the ratio is small exactly when `J` is numerically singular. Defined as
/// 0 when some `s_i` is 0.
pub fn relative_jf(eqs: &EquationSet, x: &[f64]) -> (f64, f64) {
    let det = eqs.jacobian(x).determinant();
    let scale: f64 = eqs
        .jacobian_polys()
        .iter()
        .map(|row| {
            row.iter()
                .map(|d| d.eval_abs(x).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .product();
    let rel = if scale > 0.0 { det.abs() / scale } else { 0.0 };
    (det, rel)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct Endpoint {
    x: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

fn merit(eqs: &EquationSet, x: &[f64]) -> f64 {
    eqs.values(x).norm_squared()
}

/// Damped Newton with Armijo backtracking on `||F||^2 / 2`. Abandons the
/// start once it wanders a full diameter outside the box.
fn damped_newton(eqs: &EquationSet, x0: &[f64], region: &IntervalBox, max_iter: usize) -> Endpoint {
    let far = region.diameter().max(1.0);
    let mut x = x0.to_vec();
    let mut m = merit(eqs, &x);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        if m == 0.0 {
            converged = true;
            break;
        }
        let g = eqs.values(&x);
        let d = newton_step(&eqs.jacobian(&x), &g);
        let mut lambda = 1.0;
        let mut accepted = None;
        while lambda > 1e-10 {
            let cand: Vec<f64> = x
                .iter()
                .zip(d.iter())
                .map(|(a, s)| a - lambda * s)
                .collect();
            let mc = merit(eqs, &cand);
            if mc.is_finite() && mc <= (1.0 - 1e-4 * lambda) * m {
                accepted = Some((cand, mc));
                break;
            }
            lambda *= 0.5;
        }
        let Some((cand, mc)) = accepted else {
            // stagnation: converged to rounding level or stuck
            converged = m.sqrt() < 1e-6;
            break;
        };
        let step = lambda * d.norm();
        x = cand;
        m = mc;
        if !region.contains(&x, far) {
            break;
        }
        if step <= 1e-14 * (1.0 + DVector::from_column_slice(&x).norm()) {
            converged = true;
            break;
        }
    }
    Endpoint {
        residual: eqs.residual(&x),
        x,
        iterations,
        converged,
    }
}

fn polish(eqs: &EquationSet, x: &[f64], steps: usize) -> Vec<f64> {
    let mut x = x.to_vec();
    let mut r = eqs.residual(&x);
    for _ in 0..steps {
        let d = newton_step(&eqs.jacobian(&x), &eqs.values(&x));
        let cand: Vec<f64> = x.iter().zip(d.iter()).map(|(a, s)| a - s).collect();
        let rc = eqs.residual(&cand);
        if !(rc < r) {
            break;
        }
        x = cand;
        r = rc;
    }
    x
}

fn starts(region: &IntervalBox, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let mut out = region.cell_centers(opts.grid.max(1));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_starts {
        out.push(
            (0..region.dim())
                .map(|i| {
                    let (lo, hi) = (region.lo()[i], region.hi()[i]);
                    if hi > lo {
                        rng.gen_range(lo..hi)
                    } else {
                        lo
                    }
                })
                .collect(),
        );
    }
    out
}

/// Greedy merge: each point joins the first representative within `radius`.
/// Returns `(representative index, member count)` in first-seen order, where
/// the representative is the member with the smallest residual.
fn merge(points: &[(Vec<f64>, f64)], radius: f64) -> Vec<(usize, usize)> {
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for (i, (x, r)) in points.iter().enumerate() {
        match groups
            .iter_mut()
            .find(|(rep, _)| dist(&points[*rep].0, x) <= radius)
        {
            Some(g) => {
                g.1 += 1;
                if *r < points[g.0].1 {
                    g.0 = i;
                }
            }
            None => groups.push((i, 1)),
        }
    }
    groups
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

pub fn find_roots(sys: &PolySystem, region: &IntervalBox, opts: &SolveOptions) -> Result<RootSet> {
    if region.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: region.dim(),
        });
    }
    Ok(solve_equations(&sys.equations(), region, opts))
}

pub(crate) fn solve_equations(
    eqs: &EquationSet,
    region: &IntervalBox,
    opts: &SolveOptions,
) -> RootSet {
    let rel_jf = |x: &[f64]| relative_jf(eqs, x);
    let starts = starts(region, opts);
    let endpoints: Vec<Endpoint> = starts
        .par_iter()
        .map(|s| damped_newton(eqs, s, region, opts.max_iter))
        .collect();

    let mut diag = SolveDiagnostics {
        starts: starts.len(),
        iterations: endpoints.iter().map(|e| e.iterations).sum(),
        ..Default::default()
    };
    let inside = |x: &[f64]| region.contains(x, 1e-9);
    let mut regular = Vec::new();
    let mut slow = Vec::new();
    for e in &endpoints {
        if !e.converged && e.residual > 1e-6 {
            diag.no_convergence += 1;
            continue;
        }
        if !inside(&e.x) {
            continue;
        }
        let (_, rel) = rel_jf(&e.x);
        if e.iterations >= opts.slow_iter || rel <= opts.singular_tol {
            slow.push((e.x.clone(), e.residual));
        } else if e.residual <= opts.accept_tol {
            regular.push((e.x.clone(), e.residual));
        }
    }
    diag.converged = regular.len() + slow.len();
    diag.cluster_candidates = slow.len();

    let mut found: Vec<(Vec<f64>, usize)> = Vec::new();
    let groups = merge(&regular, opts.dedup_radius);
    diag.merges += regular.len() - groups.len();
    for (rep, count) in groups {
        found.push((polish(eqs, &regular[rep].0, 8), count));
    }

    let clusters = merge(&slow, opts.cluster_radius);
    diag.merges += slow.len() - clusters.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9_7f4a_7c15);
    for (rep, count) in clusters {
        let x0 = polish(eqs, &slow[rep].0, 8);
        if rel_jf(&x0).1 > opts.singular_tol {
            found.push((x0, count));
            continue;
        }
        let refined = deflate::refine(eqs, &x0, &mut rng)
            .filter(|x| eqs.residual(x) <= eqs.residual(&x0).max(opts.accept_tol))
            .unwrap_or(x0);
        diag.deflated += 1;
        found.push((refined, count));
    }

    // final dedup across both pools, keeping the better residual
    let scored: Vec<(Vec<f64>, f64)> = found
        .iter()
        .map(|(x, _)| (x.clone(), eqs.residual(x)))
        .collect();
    let mut roots: Vec<Root> = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    for (i, (x, r)) in scored.iter().enumerate() {
        if *r > opts.accept_tol || !inside(x) {
            continue;
        }
        if let Some(k) = roots
            .iter()
            .position(|q| dist(&q.x, x) <= opts.dedup_radius)
        {
            members[k] += found[i].1;
            diag.merges += 1;
            if *r < roots[k].residual {
                roots[k].x = x.clone();
                roots[k].residual = *r;
            }
            continue;
        }
        roots.push(Root {
            x: x.clone(),
            residual: *r,
            jf_value: 0.0,
            jf_relative: 0.0,
            multiplicity_estimate: 1,
            cluster_members: 0,
            class: RootClass::Simple,
        });
        members.push(found[i].1);
    }
    for (root, m) in roots.iter_mut().zip(members) {
        root.cluster_members = m;
        let (d, rel) = rel_jf(&root.x);
        root.jf_value = d;
        root.jf_relative = rel;
        classify(root, opts.singular_tol);
    }
    roots.sort_by(|a, b| lex_cmp(&a.x, &b.x));
    RootSet {
        roots,
        region: region.clone(),
        diagnostics: diag,
    }
}

fn classify(root: &mut Root, tol: f64) {
    if root.jf_relative <= tol {
        root.class = RootClass::Multiple;
        root.multiplicity_estimate = root.multiplicity_estimate.max(2);
    } else {
        root.class = RootClass::Simple;
        root.multiplicity_estimate = 1;
    }
}

/// Indices of simple and multiple roots.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QjfPartition {
    pub simple: Vec<usize>,
    pub multiple: Vec<usize>,
}

/// Re-evaluates `jf` for every root and reclassifies: a root lies in `Q_jf`
/// when its relative `jf` is at most `tol`.
pub fn classify_q_jf(sys: &PolySystem, roots: &mut RootSet, tol: f64) -> QjfPartition {
    let eqs = sys.equations();
    let mut part = QjfPartition::default();
    for (i, r) in roots.roots.iter_mut().enumerate() {
        (r.jf_value, r.jf_relative) = relative_jf(&eqs, &r.x);
        classify(r, tol);
        match r.class {
            RootClass::Simple => part.simple.push(i),
            RootClass::Multiple => part.multiple.push(i),
        }
    }
    part
}

/// Whether every sign-flip generator maps the root set into itself within
/// `radius`. Generators are per-coordinate patterns of `1` and `-1`.
pub fn check_group_invariance(
    roots: &RootSet,
    generators: &[Vec<i8>],
    radius: f64,
) -> Result<bool> {
    let n = roots.region.dim();
    for g in generators {
        if g.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.len(),
            });
        }
        if g.iter().any(|s| *s != 1 && *s != -1) {
            return Err(Error::InvalidArgument(format!(
                "sign pattern {g:?} has entries other than 1 and -1"
            )));
        }
    }
    let pts = roots.points();
    Ok(generators.iter().all(|g| {
        pts.iter().all(|x| {
            let img: Vec<f64> = x.iter().zip(g).map(|(v, s)| v * f64::from(*s)).collect();
            pts.iter().any(|y| dist(y, &img) <= radius)
        })
    }))
}
