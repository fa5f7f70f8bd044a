//! JSON system files.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use rootshift::bound::PerturbationSpec;
use rootshift::poly::{parse_poly, variable_names, Term};
use rootshift::splitter::{apply_deformation, Deformation};
use rootshift::{Exponent, IntervalBox, MultiPoly, PolySystem};
use serde::{Deserialize, Serialize};

/// A polynomial given either as an expression or as a list of terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolyInput {
    Expr(String),
    Terms(Vec<Term>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationInput {
    pub phi: PolyInput,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<Vec<f64>>>,
    /// 1-based rows receiving `phi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeformationInput {
    /// One entry per equation; may use the parameter `t`.
    #[serde(rename = "H")]
    pub h: Vec<PolyInput>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoxInput {
    /// The same interval on every axis.
    Uniform([f64; 2]),
    Intervals(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallInput {
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variables: Option<Vec<String>>,
    pub polynomials: Vec<PolyInput>,
    /// 1-based index of the distinguished equation.
    #[serde(default = "first")]
    pub ell: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deformation: Option<DeformationInput>,
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub region: Option<BoxInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball: Option<BallInput>,
}

fn first() -> usize {
    1
}

/// A validated system file.
#[derive(Clone, Debug)]
pub struct Problem {
    pub variables: Vec<String>,
    pub system: PolySystem,
    pub perturbation: Option<PerturbationSpec>,
    deformation: Option<Vec<PolyInput>>,
    pub region: Option<IntervalBox>,
    pub ball_r: Option<f64>,
}

pub fn load(path: &Path) -> Result<Problem> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let file: SystemFile = serde_json::from_str(&text)
        .map_err(|e| anyhow!("schema error in {}: {e}", path.display()))?;
    file.validate()
        .with_context(|| format!("schema error in {}", path.display()))
}

impl SystemFile {
    pub fn validate(&self) -> Result<Problem> {
        let n = self.n;
        if self.polynomials.is_empty() {
            bail!("polynomials: must contain at least one polynomial");
        }
        if n == 0 {
            bail!("n: must be at least 1");
        }
        if self.polynomials.len() != n {
            bail!(
                "polynomials: expected {n} polynomials, got {}",
                self.polynomials.len()
            );
        }
        let variables = match &self.variables {
            Some(v) if v.len() != n => bail!("variables: expected {n} names, got {}", v.len()),
            Some(v) => v.clone(),
            None => variable_names(n),
        };
        if !(1..=n).contains(&self.ell) {
            bail!("ell: must lie in 1..={n}, got {}", self.ell);
        }
        let polys = self
            .polynomials
            .iter()
            .enumerate()
            .map(|(i, p)| to_poly(p, &variables, &[]).with_context(|| format!("polynomials[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let system = PolySystem::new(polys, self.ell - 1).context("polynomials")?;

        let perturbation = self
            .perturbation
            .as_ref()
            .map(|p| perturbation(p, &variables, self.ell))
            .transpose()
            .context("perturbation")?;

        let deformation = match &self.deformation {
            Some(d) if d.h.len() != n => {
                bail!("deformation.H: expected {n} entries, got {}", d.h.len())
            }
            Some(d) => {
                // dry run so syntax errors surface at load time
                for (i, h) in d.h.iter().enumerate() {
                    to_poly(h, &variables, &[("t".into(), 0.0)])
                        .with_context(|| format!("deformation.H[{i}]"))?;
                }
                Some(d.h.clone())
            }
            None => None,
        };

        let region = match &self.region {
            None => None,
            Some(BoxInput::Uniform([lo, hi])) => {
                Some(IntervalBox::cube(n, *lo, *hi).context("box")?)
            }
            Some(BoxInput::Intervals(iv)) => {
                if iv.len() != n {
                    bail!("box: expected {n} intervals, got {}", iv.len());
                }
                let lo = iv.iter().map(|i| i[0]).collect();
                let hi = iv.iter().map(|i| i[1]).collect();
                Some(IntervalBox::new(lo, hi).context("box")?)
            }
        };
        let ball_r = match &self.ball {
            Some(b) if !(b.r > 0.0) => bail!("ball.r: must be positive, got {}", b.r),
            Some(b) => Some(b.r),
            None => None,
        };

        Ok(Problem {
            variables,
            system,
            perturbation,
            deformation,
            region,
            ball_r,
        })
    }
}

fn to_poly(p: &PolyInput, vars: &[String], params: &[(String, f64)]) -> Result<MultiPoly> {
    let n = vars.len();
    match p {
        PolyInput::Expr(s) => Ok(parse_poly(s, vars, params)?),
        PolyInput::Terms(terms) => {
            for (j, t) in terms.iter().enumerate() {
                if t.exp.len() != n {
                    bail!(
                        "term {j}: exponent has {} entries, expected {n}",
                        t.exp.len()
                    );
                }
                if !t.coeff.is_finite() {
                    bail!("term {j}: coefficient is not finite");
                }
            }
            Ok(MultiPoly::from_terms(
                n,
                terms
                    .iter()
                    .map(|t| (Exponent::new(t.exp.clone()), t.coeff)),
            )?)
        }
    }
}

fn perturbation(p: &PerturbationInput, vars: &[String], ell: usize) -> Result<PerturbationSpec> {
    let n = vars.len();
    let phi = to_poly(&p.phi, vars, &[]).context("phi")?;
    match (&p.f, &p.rows) {
        (Some(_), Some(_)) => bail!("give either F or rows, not both"),
        (Some(f), None) => {
            if f.len() != n || f.iter().any(|r| r.len() != n) {
                bail!("F: must be a {n}x{n} matrix");
            }
            let m = DMatrix::from_fn(n, n, |i, j| f[i][j]);
            Ok(PerturbationSpec::new(phi, m)?)
        }
        (None, rows) => {
            let rows = rows.clone().unwrap_or_else(|| vec![ell]);
            if let Some(r) = rows.iter().find(|r| !(1..=n).contains(*r)) {
                bail!("rows: {r} is outside 1..={n}");
            }
            let rows: Vec<usize> = rows.iter().map(|r| r - 1).collect();
            Ok(PerturbationSpec::on_rows(phi, &rows)?)
        }
    }
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn has_deformation(&self) -> bool {
        self.deformation.is_some()
    }

    /// The deformation with its parameter `t` substituted.
    pub fn deformation(&self, t: f64) -> Result<Option<Deformation>> {
        let Some(h) = &self.deformation else {
            return Ok(None);
        };
        let params = [("t".to_string(), t)];
        let polys = h
            .iter()
            .enumerate()
            .map(|(i, p)| {
                to_poly(p, &self.variables, &params).with_context(|| format!("deformation.H[{i}]"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(Deformation::explicit(polys, t)))
    }

    /// The system moved to parameter `t`: along the perturbation when one is
    /// given, otherwise by the deformation.
    pub fn system_at(&self, t: Option<f64>) -> Result<PolySystem> {
        let Some(t) = t else {
            return Ok(self.system.clone());
        };
        if let Some(p) = &self.perturbation {
            return Ok(rootshift::homotopy::deformed_system(&self.system, p, t)?);
        }
        match self.deformation(t)? {
            Some(d) => Ok(apply_deformation(&self.system, &d)?),
            None => bail!("--t needs a perturbation or a deformation in the input file"),
        }
    }

    /// Canonical form: every polynomial as a term list.
    pub fn to_file(&self) -> SystemFile {
        let terms = |p: &MultiPoly| PolyInput::Terms(p.to_terms());
        let n = self.dim();
        SystemFile {
            n,
            variables: Some(self.variables.clone()),
            polynomials: self.system.polys().iter().map(terms).collect(),
            ell: self.system.ell() + 1,
            perturbation: self.perturbation.as_ref().map(|p| PerturbationInput {
                phi: terms(p.phi()),
                f: Some(
                    (0..n)
                        .map(|i| (0..n).map(|j| p.f_matrix()[(i, j)]).collect())
                        .collect(),
                ),
                rows: None,
            }),
            deformation: self.deformation.clone().map(|h| DeformationInput { h }),
            region: self.region.as_ref().map(|b| {
                BoxInput::Intervals(b.lo().iter().zip(b.hi()).map(|(l, h)| [*l, *h]).collect())
            }),
            ball: self.ball_r.map(|r| BallInput { r }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture(name: &str) -> Problem {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("fixtures")
            .join(name);
        load(&path).unwrap()
    }

    fn from_json(text: &str) -> Result<Problem> {
        serde_json::from_str::<SystemFile>(text)?.validate()
    }

    #[test]
    fn kearfott_fixture() {
        let p = fixture("kearfott.json");
        assert_eq!(p.dim(), 2);
        assert_eq!(p.system.degrees(), &[2, 2]);
        assert_eq!(p.system.ell(), 1);
        assert_eq!(p.perturbation.unwrap().phi().weighted_norm(), 3.0);
    }

    #[test]
    fn cones_fixture_is_three_dimensional() {
        let p = fixture("sys3d.json");
        assert_eq!(p.dim(), 3);
        assert_eq!(p.region.unwrap().dim(), 3);
    }

    #[test]
    fn canonical_form_round_trips() {
        for name in [
            "kearfott.json",
            "kearfott_both.json",
            "sys3d.json",
            "mult2d.json",
            "mult3d.json",
            "system6.json",
        ] {
            let p = fixture(name);
            let text = serde_json::to_string(&p.to_file()).unwrap();
            let q = from_json(&text).unwrap();
            assert_eq!(p.system, q.system, "{name}");
            assert_eq!(p.region, q.region, "{name}");
            assert_eq!(
                p.perturbation.as_ref().map(|x| x.direction()),
                q.perturbation.as_ref().map(|x| x.direction()),
                "{name}"
            );
            assert_eq!(
                p.deformation(0.5).unwrap().map(|d| d.h),
                q.deformation(0.5).unwrap().map(|d| d.h),
                "{name}"
            );
        }
    }

    #[test]
    fn schema_errors_name_the_field() {
        let cases = [
            (r#"{"n": 2, "polynomials": []}"#, "polynomials"),
            (
                r#"{"n": 2, "polynomials": ["x1"]}"#,
                "expected 2 polynomials",
            ),
            (r#"{"n": 2, "polynomials": ["x1", "x2"], "ell": 3}"#, "ell"),
            (r#"{"n": 2, "polynomials": ["x1", "x3"]}"#, "polynomials[1]"),
            (
                r#"{"n": 2, "polynomials": [[{"coeff": 1, "exp": [1]}], "x2"]}"#,
                "exponent has 1 entries",
            ),
            (
                r#"{"n": 2, "polynomials": ["x1", "x2"], "perturbation": {"phi": "x1^2", "rows": [1], "F": [[1, 0], [0, 1]]}}"#,
                "either F or rows",
            ),
            (
                r#"{"n": 2, "polynomials": ["x1", "x2"], "deformation": {"H": ["t"]}}"#,
                "deformation.H",
            ),
            (
                r#"{"n": 2, "polynomials": ["x1", "x2"], "box": [[0, 1]]}"#,
                "box",
            ),
            (
                r#"{"n": 2, "polynomials": ["x1", "x2"], "ball": {"r": -1}}"#,
                "ball.r",
            ),
        ];
        for (text, needle) in cases {
            let err = format!("{:#}", from_json(text).unwrap_err());
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err =
            serde_json::from_str::<SystemFile>(r#"{"n": 1, "polynomials": ["x1"], "bogus": 1}"#)
                .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn deformation_parameter_is_substituted() {
        let p = fixture("mult2d.json");
        let d = p.deformation(0.5).unwrap().unwrap();
        assert_eq!(d.h[1], MultiPoly::parse(2, "0.5*x1 - 1").unwrap());
        assert!(d.h[0].is_zero());
    }
}
