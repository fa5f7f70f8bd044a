#![allow(dead_code, clippy::approx_constant)]

use rootshift::bound::PerturbationSpec;
use rootshift::poly::{parse_poly, variable_names};
use rootshift::splitter::Deformation;
use rootshift::{IntervalBox, MultiPoly, PolySystem};

pub const HYPERBOLA_CIRCLE: [&str; 2] = ["x1^2 - x2^2 - 1", "x1^2 + x2^2 - 2"];

pub const QUARTIC_TOUCH: [&str; 2] = ["x1^2 - x2^2 - 1", "x1^4 + x2^2 - 1"];

pub const CONES: [&str; 3] = [
    "(x1^2 + x2^2/4 - x3^2)*(x1^2/4 + x2^2 - x3^2) - x3^4/81",
    "(x1 + x2)^2 + 36*(x1 - x2)^2 - 9*x3^2",
    "x1^2/4 + x2^2 + x3^2/9 - 1",
];

/// Product of four twisted cubics; `t` scales the linear terms.
pub const CUBIC_PRODUCT: &str = "((x1-x2)^3 - t*(x1-x2) - x3^2*(x1+x2-x3))\
    *((-x1-x2)^3 - t*(-x1-x2) - x3^2*(-x1+x2-x3))\
    *((-x1+x2)^3 - t*(-x1+x2) - x3^2*(-x1-x2-x3))\
    *((x1+x2)^3 - t*(x1+x2) - x3^2*(x1-x2-x3))";

pub const CONE_ELLIPSOID: [&str; 2] = ["x1^2 + x2^2 - x3^2/2", "x1^2 + x2^2/9 + x3^2/4 - 1"];

pub fn square() -> IntervalBox {
    IntervalBox::cube(2, -2.0, 2.0).unwrap()
}

pub fn cube() -> IntervalBox {
    IntervalBox::cube(3, -2.0, 2.0).unwrap()
}

pub fn hyperbola_circle() -> PolySystem {
    PolySystem::parse(&HYPERBOLA_CIRCLE, 1, &[]).unwrap()
}

/// `x1 x2^2` added to the equations listed in `rows` (0-based).
pub fn cubic_perturbation(rows: &[usize]) -> PerturbationSpec {
    PerturbationSpec::on_rows(MultiPoly::parse(2, "x1*x2^2").unwrap(), rows).unwrap()
}

pub fn cones() -> PolySystem {
    PolySystem::parse(&CONES, 1, &[]).unwrap()
}

pub fn cones_perturbation() -> PerturbationSpec {
    PerturbationSpec::on_rows(MultiPoly::parse(3, "x2^2").unwrap(), &[1]).unwrap()
}

pub fn quartic_touch() -> PolySystem {
    PolySystem::parse(&QUARTIC_TOUCH, 0, &[]).unwrap()
}

/// `H = (0, t (x1 - 2))`.
pub fn quartic_deformation(t: f64) -> Deformation {
    let h2 = parse_poly("t*(x1 - 2)", &variable_names(2), &[("t".into(), t)]).unwrap();
    Deformation::explicit(vec![MultiPoly::zero(2), h2], t)
}

pub fn cubic_product(t: f64) -> MultiPoly {
    parse_poly(CUBIC_PRODUCT, &variable_names(3), &[("t".into(), t)]).unwrap()
}

pub fn cubic_product_system(t: f64) -> PolySystem {
    let vars = variable_names(3);
    let mut polys = vec![cubic_product(t)];
    polys.extend(
        CONE_ELLIPSOID
            .iter()
            .map(|s| parse_poly(s, &vars, &[]).unwrap()),
    );
    PolySystem::new(polys, 1).unwrap()
}

/// `H_1` turning the unperturbed cubic product into the one at `t`.
pub fn cubic_product_deformation(t: f64) -> Deformation {
    let h1 = &cubic_product(t) - &cubic_product(0.0);
    Deformation::explicit(vec![h1, MultiPoly::zero(3), MultiPoly::zero(3)], t)
}

/// Binary sextic and its square-power companion, all coefficients 1.
pub fn sextic_pair() -> PolySystem {
    PolySystem::parse(
        &["x1^6 + x1^3*x2^3 + x2^6", "x1^12 + x1^6*x2^6 + x2^12"],
        0,
        &[],
    )
    .unwrap()
}

/// All sign combinations of `base` over the coordinates in `flip`.
pub fn orbit(base: &[f64], flip: &[usize]) -> Vec<Vec<f64>> {
    (0..1usize << flip.len())
        .map(|mask| {
            let mut p = base.to_vec();
            for (bit, &i) in flip.iter().enumerate() {
                if mask >> bit & 1 == 1 {
                    p[i] = -p[i];
                }
            }
            p
        })
        .collect()
}

/// Orbit of `(a, b, +-c)` together with `(-a, -b, +-c)`.
pub fn paired_orbit(base: [f64; 3]) -> Vec<Vec<f64>> {
    let neg = [-base[0], -base[1], base[2]];
    let mut out = orbit(&base, &[2]);
    out.extend(orbit(&neg, &[2]));
    out
}

/// First-quadrant root of the hyperbola-circle system as printed.
pub const HYPERBOLA_CIRCLE_ROOT: [f64; 2] = [1.22474487139159, 0.70710678118655];

pub fn hyperbola_circle_roots() -> Vec<Vec<f64>> {
    orbit(&HYPERBOLA_CIRCLE_ROOT, &[0, 1])
}

pub fn one_row_roots() -> Vec<Vec<f64>> {
    let mut v = orbit(&[1.22054232589618, 0.71433635683474], &[1]);
    v.extend(orbit(&[-1.22879457180552, 0.70004564158438], &[1]));
    v
}

pub fn both_rows_roots() -> Vec<Vec<f64>> {
    let mut v = orbit(&[1.21652265747566, 0.70710678118655], &[1]);
    v.extend(orbit(&[-1.23302265747566, 0.70710678118655], &[1]));
    v
}

pub fn cones_roots() -> Vec<Vec<f64>> {
    [
        [0.62830967308983, 0.91412675198426, 0.76883755100759],
        [0.49635596537865, 0.91441703848857, 0.95929271740718],
        [1.11731818404380, 0.76796989195429, 0.93973420474984],
        [1.22450432822695, 0.66467487192937, 1.28459776563576],
    ]
    .into_iter()
    .flat_map(paired_orbit)
    .collect()
}

pub fn cones_perturbed_roots() -> Vec<Vec<f64>> {
    [
        [0.63087661393950, 0.91351892559324, 0.77060795720733],
        [0.49896002229193, 0.91405620623649, 0.95934810309529],
        [1.11568183127565, 0.76857206607484, 0.93967783245553],
        [1.22357424633595, 0.66527556809517, 1.28379297777855],
    ]
    .into_iter()
    .flat_map(paired_orbit)
    .collect()
}

/// Split roots of the quartic-touch system for `t` in `{0.5, 0.025, 0.0125}`.
pub fn quartic_split_roots(t: f64) -> Vec<Vec<f64>> {
    let (a, b) = match t {
        0.5 => (
            [1.07123233675477, 0.38410769233261],
            [-1.20970135357686, 0.68071827127359],
        ),
        0.025 => (
            [1.00412951827050, 0.09097301502177],
            [-1.01237171332486, 0.15778620326351],
        ),
        0.0125 => (
            [1.00207398824224, 0.06443817123186],
            [-1.00621769007449, 0.11168724107454],
        ),
        _ => panic!("no reference roots for t = {t}"),
    };
    let mut v = orbit(&a, &[1]);
    v.extend(orbit(&b, &[1]));
    v
}

pub const ALL_SIGNS: [usize; 3] = [0, 1, 2];

pub fn cubic_simple_roots() -> Vec<Vec<f64>> {
    orbit(
        &[0.25926718242254, 1.21300057180546, 1.75418919109753],
        &ALL_SIGNS,
    )
}

pub fn cubic_triple_roots() -> Vec<Vec<f64>> {
    orbit(
        &[0.68824720161168, 0.68824720161168, 1.37649440322337],
        &ALL_SIGNS,
    )
}

/// The three listed orbits born from the triple roots at `t = 0.5`.
pub fn cubic_split_orbits() -> Vec<Vec<Vec<f64>>> {
    vec![
        cubic_triple_roots(),
        orbit(
            &[0.78897550317143, 0.32932116069209, 1.20907797224513],
            &ALL_SIGNS,
        ),
        orbit(
            &[0.44474589932680, 1.07278013064881, 1.64234961179579],
            &ALL_SIGNS,
        ),
    ]
}

pub fn cubic_shifted_simple_roots() -> Vec<Vec<f64>> {
    orbit(
        &[0.27142016486929, 1.20645760731621, 1.74883324771051],
        &ALL_SIGNS,
    )
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Largest distance from a reference point to its nearest computed point.
pub fn worst_match(reference: &[Vec<f64>], found: &[Vec<f64>]) -> f64 {
    reference
        .iter()
        .map(|r| {
            found
                .iter()
                .map(|f| dist(r, f))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
