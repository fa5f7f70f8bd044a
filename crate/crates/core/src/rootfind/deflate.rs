//! Deflation for isolated multiple roots.
//!
//! At a root where `J` drops rank, the augmented system
//! `G(x) = 0, J(x) v = 0, h . v = 1` in the unknowns `(x, v)` has a root of
//! lower multiplicity. Repeating this a few times yields a regular root that
//! Gauss-Newton finds quadratically.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{inverse_condition, lstsq_min_norm, null_vector};
use crate::poly::MultiPoly;
use crate::system::EquationSet;

pub const MAX_LEVELS: usize = 3;

/// Builds `(G, J v, h . v - 1)` over `nvars + nvars` unknowns.
pub fn deflated_set(eqs: &EquationSet, h: &[f64]) -> EquationSet {
    let n = eqs.nvars();
    let total = 2 * n;
    let mut polys: Vec<MultiPoly> = eqs.polys().iter().map(|p| p.embed(total)).collect();
    for row in eqs.jacobian_polys() {
        let mut acc = MultiPoly::zero(total);
        for (j, d) in row.iter().enumerate() {
            acc = &acc + &(&d.embed(total) * &MultiPoly::var(total, n + j));
        }
        polys.push(acc);
    }
    let mut norm = MultiPoly::constant(total, -1.0);
    for (j, hj) in h.iter().enumerate() {
        norm = &norm + &MultiPoly::var(total, n + j).scale(*hj);
    }
    polys.push(norm);
    EquationSet::new(polys, total)
}

fn gauss_newton(eqs: &EquationSet, mut x: Vec<f64>, max_iter: usize) -> Vec<f64> {
    let mut best = eqs.residual(&x);
    for _ in 0..max_iter {
        let g = eqs.values(&x);
        let j = eqs.jacobian(&x);
        let (dx, _) = lstsq_min_norm(&j, &g, 1e-12);
        let cand: Vec<f64> = x.iter().zip(dx.iter()).map(|(a, d)| a - d).collect();
        let r = eqs.residual(&cand);
        if !r.is_finite() || r > 2.0 * best + 1e-300 {
            break;
        }
        let small = dx.norm() <= 1e-15 * (1.0 + DVector::from_column_slice(&x).norm());
        x = cand;
        best = best.min(r);
        if small || r == 0.0 {
            break;
        }
    }
    x
}

/// Refines an approximate multiple root of `eqs` (in `eqs.nvars()` unknowns).
/// Returns the refined point, or `None` when the iteration diverges.
pub fn refine(eqs: &EquationSet, x0: &[f64], rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let n = eqs.nvars();
    let mut current = eqs.clone();
    let mut point = x0.to_vec();
    for _ in 0..MAX_LEVELS {
        let j = current.jacobian(&point);
        let v = null_vector(&j);
        let h: Vec<f64> = (0..current.nvars())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let hv: f64 = h.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        if hv.abs() < 1e-8 {
            return None;
        }
        let lifted: Vec<f64> = point
            .iter()
            .copied()
            .chain(v.iter().map(|vi| vi / hv))
            .collect();
        let next = deflated_set(&current, &h);
        let refined = gauss_newton(&next, lifted, 60);
        if refined.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let regular = inverse_condition(&next.jacobian(&refined)) > 1e-8;
        current = next;
        point = refined;
        if regular {
            break;
        }
    }
    point.truncate(n);
    Some(point)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn double_root_recovered_to_machine_precision() {
        let f1 = MultiPoly::parse(2, "x1^2 - x2^2 - 1").unwrap();
        let f2 = MultiPoly::parse(2, "x1^4 + x2^2 - 1").unwrap();
        let eqs = EquationSet::new(vec![f1, f2], 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = refine(&eqs, &[1.0 + 3e-5, 2e-4], &mut rng).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12, "{x:?}");
        assert!(x[1].abs() < 1e-12, "{x:?}");
    }

    #[test]
    fn augmented_system_shape() {
        let eqs = EquationSet::new(vec![MultiPoly::parse(1, "x1^2").unwrap()], 1);
        let d = deflated_set(&eqs, &[1.0]);
        assert_eq!(d.nvars(), 2);
        assert_eq!(d.len(), 3);
        // x^2 = 0, 2 x v = 0, v = 1
        assert_eq!(d.residual(&[0.0, 1.0]), 0.0);
    }
}
