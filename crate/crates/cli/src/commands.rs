//! One function per subcommand.

use anyhow::{bail, Context, Result};
use rootshift::bound::bound_report;
use rootshift::homotopy::{verify_homotopy, verify_invariance, Homotopy, TrackOptions};
use rootshift::ideal::{
    certify_ideal_power, convenient_check, lattice_necessary_check, minimal_certificate,
    CertifyOptions,
};
use rootshift::rootfind::{classify_q_jf, find_roots, SolveOptions};
use rootshift::splitter::{check_kov_conditions, split_multiple_roots, KovOptions, SplitOptions};
use rootshift::IntervalBox;
use serde_json::{json, Value};

use crate::input::Problem;
use crate::output::{paths_table, roots_table, Table};

/// Settings shared by all subcommands.
#[derive(Clone, Debug)]
pub struct Job {
    pub t: Option<f64>,
    pub region: Option<IntervalBox>,
    pub ball_r: Option<f64>,
    pub tol: Option<f64>,
    pub seed: u64,
    pub grid: Option<usize>,
}

pub struct Outcome {
    pub result: Value,
    pub verified: bool,
    pub table: Option<Table>,
}

impl Job {
    fn region(&self, p: &Problem) -> Result<IntervalBox> {
        let region = self
            .region
            .clone()
            .or_else(|| p.region.clone())
            .context("no box given: pass --box or set \"box\" in the input file")?;
        if region.dim() != p.dim() {
            bail!(
                "box has {} axes but the system has {} variables",
                region.dim(),
                p.dim()
            );
        }
        Ok(region)
    }

    fn t(&self) -> Result<f64> {
        self.t.context("this command needs --t")
    }

    fn solve(&self) -> SolveOptions {
        let mut o = SolveOptions {
            seed: self.seed,
            ..SolveOptions::default()
        };
        if let Some(g) = self.grid {
            o.grid = g;
        }
        if let Some(tol) = self.tol {
            o.singular_tol = tol;
        }
        o
    }

    fn certify(&self) -> CertifyOptions {
        let mut o = CertifyOptions::default();
        if let Some(tol) = self.tol {
            o.tol = tol;
        }
        o
    }
}

fn value<T: serde::Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub fn check_ideal(p: &Problem, job: &Job, k: Option<u32>, cap: Option<u32>) -> Result<Outcome> {
    let mut opts = job.certify();
    if let Some(c) = cap {
        opts.cap = c;
    }
    let f = p.system.distinguished();
    let cert = match k {
        Some(k) => match certify_ideal_power(&p.system, k, &opts) {
            Ok(c) => Some(c),
            Err(rootshift::Error::NotInIdeal { .. }) => None,
            Err(e) => return Err(e.into()),
        },
        None => minimal_certificate(&p.system, &opts),
    };
    let result = json!({
        "ell": p.system.ell() + 1,
        "convenient": convenient_check(f),
        "lattice": value(&lattice_necessary_check(f))?,
        "requested_k": k,
        "cap": opts.cap,
        "certified_k": cert.as_ref().map(|c| c.k),
        "certificate": value(&cert)?,
    });
    Ok(Outcome {
        verified: cert.is_some(),
        result,
        table: None,
    })
}

pub fn bound(p: &Problem, job: &Job) -> Result<Outcome> {
    let pert = p
        .perturbation
        .as_ref()
        .context("bound needs a perturbation in the input file")?;
    let report = bound_report(&p.system, pert, &job.region(p)?, &job.certify())?;
    let mut result = value(&report)?;
    if let Some(t) = job.t {
        result["t_below_bound"] = json!(t < report.t_star);
    }
    Ok(Outcome {
        result,
        verified: true,
        table: None,
    })
}

pub fn solve(p: &Problem, job: &Job) -> Result<Outcome> {
    let sys = p.system_at(job.t)?;
    let region = job.region(p)?;
    let mut set = find_roots(&sys, &region, &job.solve())?;
    if let Some(tol) = job.tol {
        classify_q_jf(&sys, &mut set, tol);
    }
    Ok(Outcome {
        table: Some(roots_table(&set, None)),
        result: value(&set)?,
        verified: true,
    })
}

pub fn track(p: &Problem, job: &Job) -> Result<Outcome> {
    let t = job.t()?;
    let region = job.region(p)?;
    let opts = TrackOptions::default();
    let report = match &p.perturbation {
        Some(pert) => {
            let t_star = bound_report(&p.system, pert, &region, &job.certify())
                .ok()
                .map(|b| b.t_star);
            verify_invariance(&p.system, pert, t, &region, t_star, &job.solve(), &opts)?
        }
        None => {
            let target = p.system_at(Some(t))?;
            let h = Homotopy::between(&p.system, &target)?;
            verify_homotopy(&h, 1.0, &region, None, &job.solve(), &opts)?
        }
    };
    Ok(Outcome {
        verified: report.holds(),
        table: Some(paths_table(&report.tracks, p.dim())),
        result: value(&report)?,
    })
}

pub fn split(p: &Problem, job: &Job) -> Result<Outcome> {
    let t = job.t()?;
    let def = p
        .deformation(t)?
        .context("split needs a deformation in the input file")?;
    let mut opts = SplitOptions {
        solve: job.solve(),
        ..SplitOptions::default()
    };
    opts.probe.seed = job.seed;
    let report = split_multiple_roots(&p.system, &def, &job.region(p)?, &opts)?;
    let mut owner = vec![String::from("stray"); report.after.len()];
    for c in &report.clusters {
        for &m in &c.members {
            owner[m] = c.before.to_string();
        }
    }
    let lookup = |i: usize| owner[i].clone();
    Ok(Outcome {
        verified: report.conserved && report.stray.is_empty(),
        table: Some(roots_table(&report.after, Some(("cluster", &lookup)))),
        result: value(&report)?,
    })
}

pub fn check_kov(p: &Problem, job: &Job) -> Result<Outcome> {
    let t = job.t()?;
    let r = job
        .ball_r
        .or(p.ball_r)
        .context("no ball radius given: pass --ball-r or set \"ball\" in the input file")?;
    let target = p.system_at(Some(t))?;
    let opts = KovOptions {
        seed: job.seed,
        solve: job.solve(),
        ..KovOptions::default()
    };
    let report = check_kov_conditions(&p.system, &target, r, &opts)?;
    Ok(Outcome {
        verified: report.pass,
        result: value(&report)?,
        table: None,
    })
}

/// Certificate, bound, roots, and (when `--t` is given) invariance or splitting.
pub fn report(p: &Problem, job: &Job) -> Result<Outcome> {
    let ideal = check_ideal(p, job, None, None)?;
    let mut verdicts = serde_json::Map::new();
    verdicts.insert("certified".into(), json!(ideal.verified));
    let mut result = json!({ "system": value(&p.to_file())?, "ideal": ideal.result });

    if p.perturbation.is_some() {
        result["bound"] = match bound(p, job) {
            Ok(o) => o.result,
            Err(e) => json!({ "error": format!("{e:#}") }),
        };
    }
    let region = job.region(p)?;
    let mut set = find_roots(&p.system, &region, &job.solve())?;
    let part = classify_q_jf(&p.system, &mut set, job.solve().singular_tol);
    let mut roots = value(&set)?;
    roots["partition"] = value(&part)?;
    result["roots"] = roots;

    if job.t.is_some() {
        if p.perturbation.is_some() {
            let o = track(p, job)?;
            verdicts.insert("invariance".into(), json!(o.verified));
            result["invariance"] = o.result;
        } else if p.has_deformation() && !part.multiple.is_empty() {
            match split(p, job) {
                Ok(o) => {
                    verdicts.insert("split".into(), json!(o.verified));
                    result["split"] = o.result;
                }
                Err(e) => {
                    verdicts.insert("split".into(), json!(false));
                    result["split"] = json!({ "error": format!("{e:#}") });
                }
            }
        }
    }
    let verified = verdicts.values().all(|v| v.as_bool() == Some(true));
    result["verdicts"] = Value::Object(verdicts);
    Ok(Outcome {
        result,
        verified,
        table: None,
    })
}
