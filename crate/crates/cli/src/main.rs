#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use rootshift::IntervalBox;
use serde_json::json;

use commands::{Job, Outcome};
use output::{Envelope, Format};

/// Perturbation bounds, root tracking and multiple-root splitting for real
/// polynomial systems.
#[derive(Parser, Debug)]
#[command(name = "rootshift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certify that the gradient ideal of the distinguished equation contains m^k.
    CheckIdeal {
        #[command(flatten)]
        common: Common,
        /// Ideal power to certify; the smallest certifiable one when omitted.
        #[arg(long)]
        k: Option<u32>,
        /// Largest power tried when searching.
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Compute the admissible perturbation size t*.
    Bound(Common),
    /// Find the real roots in the box, optionally of the system moved to --t.
    Solve(Common),
    /// Track every simple root to --t and compare with an independent solve.
    Track(Common),
    /// Split multiple roots with the file's deformation at --t.
    Split(Common),
    /// Sampled ball conditions for replacing the system by its version at --t.
    CheckKov(Common),
    /// Certificate, bound, roots and, with --t, invariance or splitting.
    Report(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON system file.
    input: PathBuf,
    /// Perturbation or deformation parameter.
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// Box as `lo,hi` for every axis or `lo1,hi1,...,loN,hiN`.
    #[arg(long = "box", allow_hyphen_values = true, value_delimiter = ',')]
    region: Option<Vec<f64>>,
    /// Ball radius for check-kov.
    #[arg(long)]
    ball_r: Option<f64>,
    /// Certificate residual tolerance (check-ideal, bound) or relative jf
    /// threshold for multiple roots (solve, track, split, check-kov, report).
    #[arg(long)]
    tol: Option<f64>,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Newton starts per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::CheckIdeal { common, .. } => common,
            Command::Bound(c)
            | Command::Solve(c)
            | Command::Track(c)
            | Command::Split(c)
            | Command::CheckKov(c)
            | Command::Report(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Command::CheckIdeal { .. } => "check-ideal",
            Command::Bound(_) => "bound",
            Command::Solve(_) => "solve",
            Command::Track(_) => "track",
            Command::Split(_) => "split",
            Command::CheckKov(_) => "check-kov",
            Command::Report(_) => "report",
        }
    }
}

fn parse_box(v: &[f64], n: usize) -> Result<IntervalBox> {
    let b = match v.len() {
        2 => IntervalBox::cube(n, v[0], v[1])?,
        l if l == 2 * n => IntervalBox::new(
            v.iter().step_by(2).copied().collect(),
            v.iter().skip(1).step_by(2).copied().collect(),
        )?,
        l => bail!("--box: expected 2 or {} numbers, got {l}", 2 * n),
    };
    Ok(b)
}

fn job(c: &Common, n: usize) -> Result<Job> {
    if let Some(tol) = c.tol {
        if !(tol > 0.0) {
            bail!("--tol must be positive, got {tol}");
        }
    }
    if let Some(r) = c.ball_r {
        if !(r > 0.0) {
            bail!("--ball-r must be positive, got {r}");
        }
    }
    if c.grid == Some(0) {
        bail!("--grid must be at least 1");
    }
    Ok(Job {
        t: c.t,
        region: c.region.as_deref().map(|v| parse_box(v, n)).transpose()?,
        ball_r: c.ball_r,
        tol: c.tol,
        seed: c.seed,
        grid: c.grid,
    })
}

fn run(cli: &Cli) -> Result<bool> {
    let common = cli.command.common();
    let problem = input::load(&common.input)?;
    let job = job(common, problem.dim())?;
    let outcome: Outcome = match &cli.command {
        Command::CheckIdeal { k, cap, .. } => commands::check_ideal(&problem, &job, *k, *cap)?,
        Command::Bound(_) => commands::bound(&problem, &job)?,
        Command::Solve(_) => commands::solve(&problem, &job)?,
        Command::Track(_) => commands::track(&problem, &job)?,
        Command::Split(_) => commands::split(&problem, &job)?,
        Command::CheckKov(_) => commands::check_kov(&problem, &job)?,
        Command::Report(_) => commands::report(&problem, &job)?,
    };
    let out = common.out.as_deref();
    match common.format {
        Format::Json => output::write_json(
            &Envelope {
                command: cli.command.name(),
                input: common.input.display().to_string(),
                seed: job.seed,
                t: job.t,
                verified: outcome.verified,
                result: outcome.result,
            },
            out,
        )?,
        Format::Csv => match &outcome.table {
            Some(t) => output::write_csv(t, out)?,
            None => bail!("--format csv is available for solve, track and split"),
        },
    }
    Ok(outcome.verified)
}

fn report_error(kind: &str, message: &str) {
    eprintln!(
        "{}",
        json!({ "error": { "kind": kind, "message": message } })
    );
}

/// Certification and verification failures exit with 2, everything else with 1.
fn classify(e: &anyhow::Error) -> (&'static str, u8) {
    use rootshift::Error as E;
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::NotInIdeal { .. }
                | E::NonPositive(_)
                | E::SplitFailed { .. }
                | E::RankDeficient { .. } => ("verification", 2),
                _ => ("input", 1),
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("usage", 1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            report_error("usage", e.to_string().trim());
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            report_error(
                "verification",
                &format!("{} did not verify; see the report", cli.command.name()),
            );
            ExitCode::from(2)
        }
        Err(e) => {
            let (kind, code) = classify(&e);
            report_error(kind, &format!("{e:#}"));
            ExitCode::from(code)
        }
    }
}
