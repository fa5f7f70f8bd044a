//! Sparse multivariate polynomials with `f64` coefficients.
//!
//! Terms are kept in a `BTreeMap` keyed by [`Exponent`], whose ordering is
//! graded lexicographic, so iteration and serialization are deterministic.
//! Zero coefficients are never stored.

mod parse;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::region::IntervalBox;

pub use parse::{parse_poly, variable_names};

/// Exponent vector `alpha` of a monomial `x^alpha`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `|alpha| = alpha_1 + ... + alpha_n`.
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn product(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Evaluates `x^alpha`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(e, _)| **e > 0)
            .map(|(e, v)| v.powi(*e as i32))
            .product()
    }

    /// Appends zero exponents for extra trailing variables.
    pub fn extended(&self, nvars: usize) -> Exponent {
        let mut e = self.0.clone();
        e.resize(nvars, 0);
        Exponent(e)
    }

    /// All exponent vectors in `n` variables of total degree exactly `k`,
    /// in descending lexicographic order (`x1^k` first).
    pub fn all_of_degree(n: usize, k: u32) -> Vec<Exponent> {
        fn rec(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Exponent>) {
            if n == 1 {
                prefix.push(k);
                out.push(Exponent(prefix.clone()));
                prefix.pop();
                return;
            }
            for first in (0..=k).rev() {
                prefix.push(first);
                rec(n - 1, k - first, prefix, out);
                prefix.pop();
            }
        }
        let mut out = Vec::new();
        if n == 0 {
            if k == 0 {
                out.push(Exponent(Vec::new()));
            }
            return out;
        }
        rec(n, k, &mut Vec::with_capacity(n), &mut out);
        out
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One term of the JSON polynomial encoding `{coeff, exp}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub exp: Vec<u32>,
}

/// Sparse polynomial in `nvars` real variables.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    terms: BTreeMap<Exponent, f64>,
}

impl MultiPoly {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        Self::monomial(Exponent::zero(nvars), c)
    }

    /// The coordinate polynomial `x_i` (0-based).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(Exponent::unit(nvars, i), 1.0)
    }

    pub fn monomial(exp: Exponent, coeff: f64) -> Self {
        let nvars = exp.len();
        let mut terms = BTreeMap::new();
        if coeff != 0.0 {
            terms.insert(exp, coeff);
        }
        Self { nvars, terms }
    }

    /// Builds a polynomial from possibly repeated terms; repeats are summed and
    /// cancelled terms dropped.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponent, f64)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.len() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: e.len(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    /// Parses an expression such as `x1^2 - x2^2 - 1` over `x1..x{nvars}`.
    pub fn parse(nvars: usize, src: &str) -> Result<Self> {
        parse_poly(src, &variable_names(nvars), &[])
    }

    fn add_term(&mut self, e: Exponent, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == 0.0 {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exponent, f64)> + '_ {
        self.terms.iter().map(|(e, c)| (e, *c))
    }

    pub fn coeff(&self, e: &Exponent) -> f64 {
        self.terms.get(e).copied().unwrap_or(0.0)
    }

    /// `supp p = { alpha : p_alpha != 0 }`.
    pub fn support(&self) -> impl DoubleEndedIterator<Item = &Exponent> + '_ {
        self.terms.keys()
    }

    /// Total degree, `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::degree).max()
    }

    /// Smallest `|alpha|` over the support, `None` for the zero polynomial.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Exponent::degree).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.total_degree() == self.min_degree()
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> MultiPoly {
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| e.degree() == d)
                .map(|(e, c)| (e.clone(), *c))
                .collect(),
        }
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Evaluates at `x` with compensated summation over the terms.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.nvars {
            return Err(Error::DimensionMismatch {
                expected: self.nvars,
                got: x.len(),
            });
        }
        Ok(self.eval(x))
    }

    /// Unchecked [`evaluate`](Self::evaluate) for hot loops.
    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.nvars);
        neumaier_sum(self.terms.iter().map(|(e, c)| c * e.eval(x)))
    }

    /// `sum |c_alpha| |x^alpha|`, the magnitude scale of the terms at `x`.
    pub(crate) fn eval_abs(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| (c * e.eval(x)).abs()).sum()
    }

    /// Formal partial derivative with respect to `x_i` (0-based).
    pub fn partial(&self, i: usize) -> Result<MultiPoly> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange {
                index: i,
                nvars: self.nvars,
            });
        }
        Ok(self.derivative(i))
    }

    pub(crate) fn derivative(&self, i: usize) -> MultiPoly {
        let mut out = MultiPoly::zero(self.nvars);
        for (e, c) in &self.terms {
            let k = e.0[i];
            if k == 0 {
                continue;
            }
            let mut d = e.0.clone();
            d[i] -= 1;
            out.add_term(Exponent(d), c * k as f64);
        }
        out
    }

    /// `||p|| = sum over the support of |alpha| * |p_alpha|`.
    pub fn weighted_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| e.degree() as f64 * c.abs())
            .sum()
    }

    /// Upper bound for `max_{x in K} |p(x)|`:
    /// `sum |p_alpha| * prod_i max(|lo_i|, |hi_i|)^alpha_i`.
    pub fn coeff_bound_on_box(&self, region: &IntervalBox) -> f64 {
        assert_eq!(region.dim(), self.nvars, "box dimension mismatch");
        let radii: Vec<f64> = (0..self.nvars).map(|i| region.abs_max(i)).collect();
        self.terms
            .iter()
            .map(|(e, c)| c.abs() * e.eval(&radii))
            .sum()
    }

    pub fn scale(&self, s: f64) -> MultiPoly {
        if s == 0.0 {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    /// Multiplies by `coeff * x^exp`.
    pub fn mul_monomial(&self, exp: &Exponent, coeff: f64) -> MultiPoly {
        assert_eq!(exp.len(), self.nvars);
        if coeff == 0.0 {
            return MultiPoly::zero(self.nvars);
        }
        MultiPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.product(exp), c * coeff))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::constant(self.nvars, 1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Same polynomial viewed in `nvars >= self.nvars()` variables.
    pub fn embed(&self, nvars: usize) -> MultiPoly {
        assert!(nvars >= self.nvars);
        MultiPoly {
            nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.extended(nvars), *c))
                .collect(),
        }
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .rev()
            .map(|(e, c)| Term {
                coeff: *c,
                exp: e.0.clone(),
            })
            .collect()
    }

    fn check_same_ring(&self, other: &MultiPoly) {
        assert_eq!(
            self.nvars, other.nvars,
            "polynomials live in different variable counts"
        );
    }
}

impl Serialize for MultiPoly {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let terms = self.to_terms();
        let mut seq = serializer.serialize_seq(Some(terms.len()))?;
        for t in &terms {
            seq.serialize_element(t)?;
        }
        seq.end()
    }
}

/// Neumaier's compensated summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        self.check_same_ring(rhs);
        let mut out = MultiPoly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea.product(eb), ca * cb);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: MultiPoly) -> MultiPoly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&MultiPoly> for MultiPoly {
            type Output = MultiPoly;
            fn $m(self, rhs: &MultiPoly) -> MultiPoly {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(-1.0)
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().rev().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if idx == 0 {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            let vars: Vec<String> =
                e.0.iter()
                    .enumerate()
                    .filter(|(_, k)| **k > 0)
                    .map(|(i, k)| {
                        if *k == 1 {
                            format!("x{}", i + 1)
                        } else {
                            format!("x{}^{}", i + 1, k)
                        }
                    })
                    .collect();
            if vars.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{mag}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, s: &str) -> MultiPoly {
        MultiPoly::parse(n, s).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn evaluates_kearfott_f1_at_root() {
        let f1 = p(2, "x1^2 - x2^2 - 1");
        let v = f1.evaluate(&[1.22474487139159, 0.70710678118655]).unwrap();
        assert!(v.abs() < 1e-12, "{v}");
    }

    #[test]
    fn zero_polynomial_evaluates_to_zero() {
        assert_eq!(MultiPoly::zero(3).evaluate(&[1.0, -2.0, 7.5]).unwrap(), 0.0);
    }

    #[test]
    fn all_ones_symmetry() {
        let f = p(2, "x1^5 + x1^2*x2^3 + x2^5");
        assert_eq!(f.evaluate(&[1.0, 1.0]).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_checks_dimension() {
        let f = p(2, "x1 + x2");
        assert_eq!(
            f.evaluate(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                got: 1
            })
        );
    }

    #[test]
    fn partials_of_quintic() {
        let f = p(2, "x1^5 + x1^2*x2^3 + x2^5");
        assert_eq!(f.partial(0).unwrap(), p(2, "5*x1^4 + 2*x1*x2^3"));
        assert_eq!(f.partial(1).unwrap(), p(2, "3*x1^2*x2^2 + 5*x2^4"));
        assert!(p(2, "7").partial(0).unwrap().is_zero());
        assert!(matches!(
            f.partial(2),
            Err(Error::IndexOutOfRange { index: 2, nvars: 2 })
        ));
    }

    #[test]
    fn weighted_norms() {
        assert_eq!(p(2, "x1*x2^2").weighted_norm(), 3.0);
        assert_eq!(p(3, "x2^2").weighted_norm(), 2.0);
        assert_eq!(MultiPoly::zero(2).weighted_norm(), 0.0);
    }

    #[test]
    fn coefficient_bounds() {
        let k = IntervalBox::cube(2, -2.0, 2.0).unwrap();
        assert_eq!(p(2, "x1").coeff_bound_on_box(&k), 2.0);
        assert_eq!(p(2, "1/2 + 0*x1").coeff_bound_on_box(&k), 0.5);
        let half_sum = p(2, "x1/2 + x2/2");
        // corners are where |x1/2 + x2/2| peaks for a linear form
        let corner_max = [[-2.0, -2.0], [-2.0, 2.0], [2.0, -2.0], [2.0, 2.0]]
            .iter()
            .map(|c| half_sum.evaluate(c).unwrap().abs())
            .fold(0.0, f64::max);
        assert_eq!(corner_max, 2.0);
        assert_eq!(half_sum.coeff_bound_on_box(&k), corner_max);
    }

    #[test]
    fn support_and_degree() {
        let s: Vec<_> = p(2, "x1*x2^2").support().cloned().collect();
        assert_eq!(s, vec![Exponent::new(vec![1, 2])]);
        assert_eq!(p(2, "x1^4 + x2^2").total_degree(), Some(4));
        assert_eq!(MultiPoly::zero(2).support().count(), 0);
        assert_eq!(MultiPoly::zero(2).total_degree(), None);
    }

    #[test]
    fn cancellation_keeps_canonical_form() {
        let a = p(2, "x1 + x2");
        let d = &a - &a;
        assert!(d.is_zero());
        assert_eq!(d.len(), 0);
    }

    #[test]
    fn graded_lex_order() {
        let f = p(2, "1 + x2 + x1 + x1*x2 + x2^3");
        let order: Vec<Vec<u32>> = f.terms().map(|(e, _)| e.entries().to_vec()).collect();
        assert_eq!(
            order,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1], vec![0, 3]]
        );
    }

    #[test]
    fn degree_k_monomials() {
        let ms = Exponent::all_of_degree(3, 2);
        assert_eq!(ms.len(), 6);
        assert_eq!(ms[0], Exponent::new(vec![2, 0, 0]));
        assert_eq!(Exponent::all_of_degree(2, 0), vec![Exponent::zero(2)]);
    }

    #[test]
    fn display_round_trips_through_parser() {
        let f = p(3, "(x1 - 2*x2)^3 - x3/4 + 0.5");
        let g = p(3, &f.to_string());
        assert_eq!(f, g);
    }
}
