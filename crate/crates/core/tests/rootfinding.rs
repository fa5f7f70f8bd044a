mod common;

use common::*;
use proptest::prelude::*;
use rootshift::rootfind::{
    check_group_invariance, classify_q_jf, find_roots, jacobian_det, RootClass, SolveOptions,
};
use rootshift::{MultiPoly, PolySystem};

fn assert_root_invariants(sys: &PolySystem, set: &rootshift::rootfind::RootSet) {
    for r in &set.roots {
        let limit = match r.class {
            RootClass::Simple => 1e-10,
            RootClass::Multiple => 1e-8,
        };
        assert!(
            sys.residual(&r.x) <= limit,
            "residual {} at {:?}",
            sys.residual(&r.x),
            r.x
        );
        assert_eq!(r.multiplicity_estimate == 1, r.class == RootClass::Simple);
    }
    for (i, a) in set.roots.iter().enumerate() {
        for b in &set.roots[i + 1..] {
            assert!(dist(&a.x, &b.x) > 1e-6);
        }
    }
}

#[test]
fn fixture_root_counts() {
    let opts = SolveOptions::default();
    let cases = [
        (hyperbola_circle(), square(), 4),
        (cones(), cube(), 16),
        (quartic_touch(), square(), 2),
        (cubic_product_system(0.0), cube(), 16),
    ];
    for (sys, region, count) in cases {
        let set = find_roots(&sys, &region, &opts).unwrap();
        assert_eq!(set.len(), count);
        assert_root_invariants(&sys, &set);
    }
}

#[test]
fn cones_first_listed_root() {
    let set = find_roots(&cones(), &cube(), &SolveOptions::default()).unwrap();
    let first = [0.62830967308983, 0.91412675198426];
    let found = set.points();
    for z in [0.76883755100759, -0.76883755100759] {
        let target = vec![first[0], first[1], z];
        assert!(worst_match(&[target], &found) <= 1e-8);
    }
}

#[test]
fn cubic_product_has_eight_simple_and_eight_triple_roots() {
    let sys = cubic_product_system(0.0);
    let mut set = find_roots(&sys, &cube(), &SolveOptions::default()).unwrap();
    let part = classify_q_jf(&sys, &mut set, 1e-6);
    assert_eq!((part.simple.len(), part.multiple.len()), (8, 8));
    let simple: Vec<Vec<f64>> = part
        .simple
        .iter()
        .map(|&i| set.roots[i].x.clone())
        .collect();
    let multiple: Vec<Vec<f64>> = part
        .multiple
        .iter()
        .map(|&i| set.roots[i].x.clone())
        .collect();
    assert!(worst_match(&cubic_simple_roots(), &simple) <= 1e-8);
    assert!(worst_match(&cubic_triple_roots(), &multiple) <= 1e-6);
}

#[test]
fn quartic_touch_roots_are_multiple() {
    let sys = quartic_touch();
    let mut set = find_roots(&sys, &square(), &SolveOptions::default()).unwrap();
    let part = classify_q_jf(&sys, &mut set, 1e-6);
    assert_eq!(part.multiple.len(), 2);
    assert!(part.simple.is_empty());
}

#[test]
fn same_seed_same_roots() {
    let opts = SolveOptions {
        seed: 42,
        ..SolveOptions::default()
    };
    let a = find_roots(&cones(), &cube(), &opts).unwrap();
    let b = find_roots(&cones(), &cube(), &opts).unwrap();
    assert_eq!(a.points(), b.points());
    assert_eq!(a.diagnostics.starts, b.diagnostics.starts);
}

#[test]
fn sign_groups() {
    let opts = SolveOptions::default();
    let cones_roots = find_roots(&cones(), &cube(), &opts).unwrap();
    assert!(
        check_group_invariance(&cones_roots, &[vec![-1, -1, 1], vec![1, 1, -1]], 1e-6).unwrap()
    );
    // a single flip of x1 is not a symmetry of the cones
    assert!(!check_group_invariance(&cones_roots, &[vec![-1, 1, 1]], 1e-6).unwrap());
    let cubic = find_roots(&cubic_product_system(0.0), &cube(), &opts).unwrap();
    let flips = [vec![-1, 1, 1], vec![1, -1, 1], vec![1, 1, -1]];
    assert!(check_group_invariance(&cubic, &flips, 1e-6).unwrap());
}

fn random_system() -> impl Strategy<Value = PolySystem> {
    prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 10), 2).prop_map(|rows| {
        let vars = [
            "1", "x1", "x2", "x1^2", "x1*x2", "x2^2", "x1^3", "x1^2*x2", "x1*x2^2", "x2^3",
        ];
        let polys = rows
            .iter()
            .map(|c| {
                let src: Vec<String> = c
                    .iter()
                    .zip(vars)
                    .map(|(c, v)| format!("({c:e})*{v}"))
                    .collect();
                MultiPoly::parse(2, &src.join(" + ")).unwrap()
            })
            .collect();
        PolySystem::new(polys, 0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn jacobian_det_matches_finite_differences(sys in random_system(), x in prop::collection::vec(-1.0f64..1.0, 2)) {
        let h = 1e-6;
        let column = |j: usize| -> Vec<f64> {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi[j] += h;
            lo[j] -= h;
            sys.polys()
                .iter()
                .map(|p| (p.evaluate(&hi).unwrap() - p.evaluate(&lo).unwrap()) / (2.0 * h))
                .collect()
        };
        let (c0, c1) = (column(0), column(1));
        let fd = c0[0] * c1[1] - c1[0] * c0[1];
        let exact = jacobian_det(&sys, &x).unwrap();
        let scale = (c0[0] * c1[1]).abs() + (c1[0] * c0[1]).abs();
        prop_assert!((fd - exact).abs() <= 1e-5 * scale.max(1.0), "fd {fd} exact {exact}");
    }
}
