mod common;

use common::*;
use rootshift::bound::PerturbationSpec;
use rootshift::homotopy::{
    deformed_system, detect_crash, track_path, verify_invariance, Homotopy, TrackOptions,
    TrackStatus, DEFAULT_SINGULAR_JF,
};
use rootshift::rootfind::SolveOptions;
use rootshift::{MultiPoly, PolySystem};

fn deformed_residual(sys: &PolySystem, pert: &PerturbationSpec, tau: f64, x: &[f64]) -> f64 {
    deformed_system(sys, pert, tau).unwrap().residual(x)
}

#[test]
fn kearfott_root_follows_the_one_row_perturbation() {
    let sys = hyperbola_circle();
    let pert = cubic_perturbation(&[0]);
    let r = track_path(
        &sys,
        &pert,
        &HYPERBOLA_CIRCLE_ROOT,
        0.033,
        &square(),
        &TrackOptions::default(),
    )
    .unwrap();
    assert_eq!(r.status, TrackStatus::Completed);
    assert!(dist(&r.end, &[1.22054232589618, 0.71433635683474]) <= 1e-8);
    for p in &r.path {
        assert!(deformed_residual(&sys, &pert, p.tau, &p.x) <= 1e-9);
    }
}

#[test]
fn cones_root_follows_the_perturbation() {
    let sys = cones();
    let pert = cones_perturbation();
    let r = track_path(
        &sys,
        &pert,
        &[0.62830967308983, 0.91412675198426, 0.76883755100759],
        0.1,
        &cube(),
        &TrackOptions::default(),
    )
    .unwrap();
    assert_eq!(r.status, TrackStatus::Completed);
    assert!(
        dist(
            &r.end,
            &[0.63087661393950, 0.91351892559324, 0.77060795720733]
        ) <= 1e-8
    );
    for p in &r.path {
        assert!(deformed_residual(&sys, &pert, p.tau, &p.x) <= 1e-9);
    }
}

#[test]
fn invariance_on_fixtures() {
    let cases = [
        (
            hyperbola_circle(),
            cubic_perturbation(&[0]),
            0.033,
            square(),
            4,
        ),
        (
            hyperbola_circle(),
            cubic_perturbation(&[0, 1]),
            0.033,
            square(),
            4,
        ),
        (cones(), cones_perturbation(), 0.1, cube(), 16),
    ];
    for (sys, pert, t, region, count) in cases {
        let r = verify_invariance(
            &sys,
            &pert,
            t,
            &region,
            None,
            &SolveOptions::default(),
            &TrackOptions::default(),
        )
        .unwrap();
        assert!(r.holds());
        assert_eq!(
            (r.count_start, r.count_end, r.count_resolved),
            (count, count, count)
        );
        assert!(r.unmatched_tracked.is_empty() && r.unmatched_resolved.is_empty());
        assert!(r.max_reverse_error <= 1e-7);
        assert!(detect_crash(&r.tracks, 1e-3, DEFAULT_SINGULAR_JF).is_empty());
    }
}

#[test]
fn zero_parameter_keeps_counts() {
    let r = verify_invariance(
        &quartic_touch(),
        &cubic_perturbation(&[1]),
        0.0,
        &square(),
        None,
        &SolveOptions::default(),
        &TrackOptions::default(),
    )
    .unwrap();
    assert_eq!(r.count_start, r.count_end);
}

#[test]
fn warning_when_not_below_the_bound() {
    let r = verify_invariance(
        &hyperbola_circle(),
        &cubic_perturbation(&[0]),
        0.05,
        &square(),
        Some(1.0 / 30.0),
        &SolveOptions::default(),
        &TrackOptions::default(),
    )
    .unwrap();
    assert!(r.warning.is_some());
}

#[test]
fn single_path_has_no_collision() {
    let r = track_path(
        &hyperbola_circle(),
        &cubic_perturbation(&[0]),
        &HYPERBOLA_CIRCLE_ROOT,
        0.033,
        &square(),
        &TrackOptions::default(),
    )
    .unwrap();
    assert!(detect_crash(&[r], 1e-3, DEFAULT_SINGULAR_JF).is_empty());
}

#[test]
fn fold_past_the_turning_point_is_flagged() {
    // x1^2 - (0.1 - tau) = 0: the two roots meet at tau = 0.1
    let base = PolySystem::parse(&["x1^2 - 0.1"], 0, &[]).unwrap();
    let h = Homotopy::new(&base, vec![MultiPoly::constant(1, 1.0)]).unwrap();
    let region = rootshift::IntervalBox::cube(1, -1.0, 1.0).unwrap();
    let reports: Vec<_> = [0.1f64.sqrt(), -(0.1f64.sqrt())]
        .iter()
        .map(|&x| {
            h.track(&[x], 0.0, 0.2, &region, &TrackOptions::default())
                .unwrap()
        })
        .collect();
    assert!(reports
        .iter()
        .all(|r| r.status == TrackStatus::SingularJacobian));
    assert!(!detect_crash(&reports, 1e-3, DEFAULT_SINGULAR_JF).is_empty());
}
