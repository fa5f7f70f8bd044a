use proptest::prelude::*;
use rootshift::{Exponent, IntervalBox, MultiPoly};

/// Sparse polynomials with small integer coefficients, so sums and
/// derivatives are exact in floating point.
fn sparse_poly(n: usize) -> impl Strategy<Value = MultiPoly> {
    prop::collection::vec((prop::collection::vec(0u32..5, n), -9i32..=9), 0..8).prop_map(
        move |terms| {
            MultiPoly::from_terms(
                n,
                terms.into_iter().map(|(e, c)| (Exponent::new(e), c as f64)),
            )
            .unwrap()
        },
    )
}

fn point(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    #[test]
    fn partial_is_linear(p in sparse_poly(3), q in sparse_poly(3), i in 0usize..3) {
        let lhs = (&p + &q).partial(i).unwrap();
        let rhs = &p.partial(i).unwrap() + &q.partial(i).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn partial_matches_central_difference(p in sparse_poly(2), x in point(2), i in 0usize..2) {
        let h = 1e-6;
        let mut hi = x.clone();
        let mut lo = x.clone();
        hi[i] += h;
        lo[i] -= h;
        let fd = (p.evaluate(&hi).unwrap() - p.evaluate(&lo).unwrap()) / (2.0 * h);
        let exact = p.partial(i).unwrap().evaluate(&x).unwrap();
        // absolute floor for derivatives that vanish at x
        let scale = exact.abs().max(p.partial(i).unwrap().max_abs_coeff()).max(1.0);
        prop_assert!((fd - exact).abs() <= 1e-5 * scale, "fd {fd} exact {exact}");
    }

    #[test]
    fn weighted_norm_is_absolutely_homogeneous(p in sparse_poly(3), c in -50.0f64..50.0) {
        let lhs = p.scale(c).weighted_norm();
        let rhs = c.abs() * p.weighted_norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
    }

    #[test]
    fn box_bound_dominates_samples(
        p in sparse_poly(2),
        lo in prop::collection::vec(-3.0f64..0.0, 2),
        width in prop::collection::vec(0.0f64..3.0, 2),
    ) {
        let hi: Vec<f64> = lo.iter().zip(&width).map(|(l, w)| l + w).collect();
        let region = IntervalBox::new(lo, hi).unwrap();
        let bound = p.coeff_bound_on_box(&region);
        for x in region.lattice_points(100) {
            let v = p.evaluate(&x).unwrap().abs();
            prop_assert!(v <= bound * (1.0 + 1e-12), "|p| = {v} exceeds bound {bound} at {x:?}");
        }
    }
}
