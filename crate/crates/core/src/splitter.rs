//! Splitting multiple roots by deformations `f + H`, multiplicity probes, and
//! a sampled check of the ball conditions for a general perturbation `F`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::inverse_condition;
use crate::poly::{Exponent, MultiPoly};
use crate::region::IntervalBox;
use crate::rootfind::{find_roots, relative_jf, RootClass, RootSet, SolveOptions};
use crate::system::PolySystem;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Deformation {
    pub h: Vec<MultiPoly>,
    pub magnitude: f64,
    /// Allowed exponents per equation.
    pub support: Vec<Vec<Exponent>>,
    pub seed: Option<u64>,
}

impl Deformation {
    /// A fixed deformation; its support is the support of each `H_i`.
    pub fn explicit(h: Vec<MultiPoly>, magnitude: f64) -> Self {
        let support = h.iter().map(|p| p.support().cloned().collect()).collect();
        Self {
            h,
            magnitude,
            support,
            seed: None,
        }
    }

    /// Coefficients uniform in `[-magnitude, magnitude]` on the declared support.
    pub fn random(
        nvars: usize,
        support: Vec<Vec<Exponent>>,
        magnitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if support.len() != nvars {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                got: support.len(),
            });
        }
        if let Some(e) = support.iter().flatten().find(|e| e.len() != nvars) {
            return Err(Error::DimensionMismatch {
                expected: nvars,
                got: e.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = support
            .iter()
            .map(|s| {
                s.iter().fold(MultiPoly::zero(nvars), |acc, e| {
                    let c = rng.gen_range(-magnitude..=magnitude);
                    &acc + &MultiPoly::monomial(e.clone(), c)
                })
            })
            .collect();
        Ok(Self {
            h,
            magnitude,
            support,
            seed: Some(seed),
        })
    }

    pub fn zero(nvars: usize) -> Self {
        Self::explicit(vec![MultiPoly::zero(nvars); nvars], 0.0)
    }

    pub fn is_within_support(&self) -> bool {
        self.h
            .iter()
            .zip(&self.support)
            .all(|(p, s)| p.support().all(|e| s.contains(e)))
    }
}

pub fn apply_deformation(sys: &PolySystem, def: &Deformation) -> Result<PolySystem> {
    if def.h.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: def.h.len(),
        });
    }
    if let Some(p) = def.h.iter().find(|p| p.nvars() != sys.dim()) {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: p.nvars(),
        });
    }
    let polys = sys.polys().iter().zip(&def.h).map(|(f, h)| f + h).collect();
    PolySystem::new(polys, sys.ell())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeOptions {
    pub seeds: usize,
    pub magnitudes: Vec<f64>,
    /// Starts per axis in the local box.
    pub local_grid: usize,
    pub max_radius: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            seeds: 8,
            magnitudes: vec![1e-2, 1e-3],
            local_grid: 5,
            max_radius: 0.25,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    /// Largest real-splitting count seen.
    pub count: usize,
    /// Whether every trial agreed.
    pub stable: bool,
    pub counts: Vec<usize>,
    pub radius: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Simple roots of `sys + h` within `radius` of `root`.
pub fn count_split_roots(
    sys: &PolySystem,
    root: &[f64],
    h: &[MultiPoly],
    radius: f64,
    solve: &SolveOptions,
) -> Result<usize> {
    let def = Deformation::explicit(h.to_vec(), 0.0);
    let deformed = apply_deformation(sys, &def)?;
    let local = IntervalBox::around(root, radius)?;
    let found = find_roots(&deformed, &local, solve)?;
    Ok(found
        .simple()
        .filter(|r| dist(&r.x, root) <= radius)
        .count())
}

/// Random linear deformations vanishing at `root`, each row scaled by the
/// magnitude of that equation's gradient terms there.
fn probe_deformation(sys: &PolySystem, root: &[f64], magnitude: f64, seed: u64) -> Vec<MultiPoly> {
    let n = sys.dim();
    let eqs = sys.equations();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    eqs.jacobian_polys()
        .iter()
        .map(|row| {
            let scale = row
                .iter()
                .map(|d| d.eval_abs(root).powi(2))
                .sum::<f64>()
                .sqrt()
                .max(1.0);
            (0..n).fold(MultiPoly::zero(n), |acc, j| {
                let c = rng.gen_range(-1.0..1.0) * magnitude * scale;
                let lin = &MultiPoly::var(n, j) - &MultiPoly::constant(n, root[j]);
                &acc + &lin.scale(c)
            })
        })
        .collect()
}

/// Estimates the real multiplicity of `root` by counting how many simple
/// roots appear nearby under small random deformations.
pub fn multiplicity_probe(
    sys: &PolySystem,
    root: &[f64],
    radius: f64,
    opts: &ProbeOptions,
) -> Result<ProbeResult> {
    if root.len() != sys.dim() {
        return Err(Error::DimensionMismatch {
            expected: sys.dim(),
            got: root.len(),
        });
    }
    let radius = radius.min(opts.max_radius);
    let trials: Vec<(f64, u64)> = opts
        .magnitudes
        .iter()
        .flat_map(|m| (0..opts.seeds as u64).map(move |s| (*m, s)))
        .collect();
    let counts: Vec<usize> = trials
        .par_iter()
        .map(|(m, s)| {
            let seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(*s);
            let h = probe_deformation(sys, root, *m, seed);
            let solve = SolveOptions {
                grid: opts.local_grid,
                random_starts: 16,
                seed,
                ..SolveOptions::default()
            };
            count_split_roots(sys, root, &h, radius, &solve)
        })
        .collect::<Result<_>>()?;
    let count = counts.iter().copied().max().unwrap_or(0);
    Ok(ProbeResult {
        count,
        stable: counts.iter().all(|c| *c == count),
        counts,
        radius,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitOptions {
    pub solve: SolveOptions,
    pub probe: ProbeOptions,
    pub probe_multiplicities: bool,
    /// Largest distance at which a new root is attributed to an old one.
    pub cluster_radius: f64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        Self {
            solve: SolveOptions::default(),
            probe: ProbeOptions::default(),
            probe_multiplicities: true,
            cluster_radius: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterAssignment {
    pub before: usize,
    pub multiplicity: u32,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitReport {
    pub before: RootSet,
    pub after: RootSet,
    pub probes: Vec<Option<ProbeResult>>,
    pub clusters: Vec<ClusterAssignment>,
    pub stray: Vec<usize>,
    pub expected: u32,
    pub simple_after: usize,
    pub conserved: bool,
}

/// Pairs each new root with an old root by increasing distance, letting old
/// root `j` absorb at most `capacity[j]` new roots. Leftovers within `radius`
/// go to their nearest old root; the rest are stray.
pub fn assign_clusters(
    before: &[Vec<f64>],
    capacity: &[u32],
    after: &[Vec<f64>],
    radius: f64,
) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in after.iter().enumerate() {
        for (j, b) in before.iter().enumerate() {
            let d = dist(a, b);
            if d <= radius {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut owner = vec![None; after.len()];
    let mut left: Vec<u32> = capacity.to_vec();
    for &(_, i, j) in &pairs {
        if owner[i].is_none() && left[j] > 0 {
            owner[i] = Some(j);
            left[j] -= 1;
        }
    }
    for &(_, i, j) in &pairs {
        if owner[i].is_none() {
            owner[i] = Some(j);
        }
    }
    let stray = owner
        .iter()
        .enumerate()
        .filter(|(_, o)| o.is_none())
        .map(|(i, _)| i)
        .collect();
    (owner, stray)
}

fn nearest_other(points: &[Vec<f64>], i: usize) -> f64 {
    points
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, p)| dist(p, &points[i]))
        .fold(f64::INFINITY, f64::min)
}

pub fn split_multiple_roots(
    sys: &PolySystem,
    def: &Deformation,
    region: &IntervalBox,
    opts: &SplitOptions,
) -> Result<SplitReport> {
    let mut before = find_roots(sys, region, &opts.solve)?;
    let points = before.points();
    let mut probes = Vec::with_capacity(before.len());
    for i in 0..before.len() {
        if before.roots[i].class == RootClass::Multiple && opts.probe_multiplicities {
            let radius = 0.4 * nearest_other(&points, i);
            let p = multiplicity_probe(sys, &points[i], radius, &opts.probe)?;
            before.roots[i].multiplicity_estimate = p.count.max(2) as u32;
            probes.push(Some(p));
        } else {
            probes.push(None);
        }
    }
    let deformed = apply_deformation(sys, def)?;
    let after = find_roots(&deformed, region, &opts.solve)?;
    if let Some(bad) = after.multiple().next() {
        return Err(Error::SplitFailed {
            point: bad.x.clone(),
        });
    }
    let capacity: Vec<u32> = before
        .roots
        .iter()
        .map(|r| r.multiplicity_estimate)
        .collect();
    let (owner, stray) = assign_clusters(&points, &capacity, &after.points(), opts.cluster_radius);
    let clusters = before
        .roots
        .iter()
        .enumerate()
        .map(|(j, r)| ClusterAssignment {
            before: j,
            multiplicity: r.multiplicity_estimate,
            members: (0..after.len()).filter(|i| owner[*i] == Some(j)).collect(),
        })
        .collect::<Vec<_>>();
    let expected: u32 = capacity.iter().sum();
    let simple_after = after.simple().count();
    let conserved = expected as usize == simple_after
        && stray.is_empty()
        && clusters
            .iter()
            .all(|c| c.members.len() == c.multiplicity as usize);
    Ok(SplitReport {
        before,
        after,
        probes,
        clusters,
        stray,
        expected,
        simple_after,
        conserved,
    })
}

/// Draws deformations from `support` at `magnitude` with successive seeds
/// until one leaves no multiple root in `region`.
pub fn find_splitting_deformation(
    sys: &PolySystem,
    support: &[Vec<Exponent>],
    magnitude: f64,
    region: &IntervalBox,
    seeds: std::ops::Range<u64>,
    solve: &SolveOptions,
) -> Result<Deformation> {
    let mut last = None;
    for seed in seeds {
        let def = Deformation::random(sys.dim(), support.to_vec(), magnitude, seed)?;
        let roots = find_roots(&apply_deformation(sys, &def)?, region, solve)?;
        let bad = roots.multiple().next().map(|r| r.x.clone());
        match bad {
            None => return Ok(def),
            Some(x) => last = Some(x),
        }
    }
    Err(Error::SplitFailed {
        point: last.unwrap_or_default(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KovOptions {
    pub samples: usize,
    pub seed: u64,
    /// Smallest accepted `sigma_min / sigma_max` of a sampled Jacobian.
    pub rank_tol: f64,
    pub solve: SolveOptions,
}

impl Default for KovOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            rank_tol: 1e-14,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KovReport {
    pub r: f64,
    pub samples: usize,
    /// Largest component of `J_f(y)^{-1} (F - f)(x)` over sampled pairs.
    pub eps_f: f64,
    /// Largest component of `J_F(y)^{-1} (F - f)(x)` over sampled pairs.
    pub eps_big_f: f64,
    pub epsilon: f64,
    /// Smallest `r - |x|` over roots of `f` in the open ball.
    pub boundary_distance: Option<f64>,
    pub roots_in_ball: usize,
    pub pass: bool,
}

/// Uniform point in the ball of radius `r` about the origin.
fn ball_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    loop {
        // Box-Muller normals for the direction, then radius r U^(1/n)
        let mut g = Vec::with_capacity(n);
        while g.len() < n {
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen();
            let m = (-2.0 * u1.ln()).sqrt();
            let a = 2.0 * std::f64::consts::PI * u2;
            g.push(m * a.cos());
            g.push(m * a.sin());
        }
        g.truncate(n);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            let rad = r * rng.gen::<f64>().powf(1.0 / n as f64);
            return g.into_iter().map(|v| v * rad / norm).collect();
        }
    }
}

/// Monte-Carlo estimate of the ball conditions for replacing `sys` by `target`
/// on `B_r = {|x| < r}`.
pub fn check_kov_conditions(
    sys: &PolySystem,
    target: &PolySystem,
    r: f64,
    opts: &KovOptions,
) -> Result<KovReport> {
    let n = sys.dim();
    if target.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target.dim(),
        });
    }
    if !(r > 0.0) {
        return Err(Error::NonPositive(format!("ball radius {r}")));
    }
    let f = sys.equations();
    let big_f = target.equations();
    let diff: Vec<MultiPoly> = target
        .polys()
        .iter()
        .zip(sys.polys())
        .map(|(g, p)| g - p)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..opts.samples)
        .map(|_| (ball_point(&mut rng, n, r), ball_point(&mut rng, n, r)))
        .collect();
    let per_pair: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(x, y)| {
            let d = nalgebra::DVector::from_iterator(n, diff.iter().map(|p| p.eval(x)));
            let mut out = [0.0; 2];
            for (k, eqs) in [&f, &big_f].into_iter().enumerate() {
                let j = eqs.jacobian(y);
                if inverse_condition(&j) < opts.rank_tol {
                    return Err(Error::RankDeficient { point: y.clone() });
                }
                let v = j
                    .lu()
                    .solve(&d)
                    .ok_or_else(|| Error::RankDeficient { point: y.clone() })?;
                out[k] = v.amax();
            }
            Ok((out[0], out[1]))
        })
        .collect::<Result<_>>()?;
    let eps_f = per_pair.iter().map(|p| p.0).fold(0.0, f64::max);
    let eps_big_f = per_pair.iter().map(|p| p.1).fold(0.0, f64::max);
    let epsilon = eps_f.max(eps_big_f);

    let bounding = IntervalBox::cube(n, -r, r)?;
    let roots = find_roots(sys, &bounding, &opts.solve)?;
    let dists: Vec<f64> = roots
        .roots
        .iter()
        .map(|q| r - q.x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .filter(|d| *d > 0.0)
        .collect();
    let boundary_distance = dists.iter().copied().reduce(f64::min);
    Ok(KovReport {
        r,
        samples: opts.samples,
        eps_f,
        eps_big_f,
        epsilon,
        boundary_distance,
        roots_in_ball: dists.len(),
        pass: boundary_distance.is_none_or(|b| epsilon < b),
    })
}

/// Whether every root of `roots` is simple under [`relative_jf`] at `tol`.
pub fn all_simple(sys: &PolySystem, roots: &RootSet, tol: f64) -> bool {
    let eqs = sys.equations();
    roots.roots.iter().all(|r| relative_jf(&eqs, &r.x).1 > tol)
}
