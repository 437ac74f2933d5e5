//! Command-line driver. Every command returns a [`Report`]; `main` prints it
//! as JSON and maps the outcome to the exit code.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cantor::{
    chord_bounds_check, stage_measure_check, stage_norm_analysis, write_trend_csv, StageNorm, CONSTRUCT_LIMIT,
};
use crate::error::{Error, Result};
use crate::extremal::{classify_molecules, extreme_molecules, write_classification_csv};
use crate::free_ball::{ball_equals_hull_with, HULL_TOL};
use crate::grid::{alpha_certificate, nocufe_sequence, sna_approximate, write_nocufe_csv, GridSpace};
use crate::io::load_space;
use crate::metric::NormP;
use crate::random::{random_map, rng};
use crate::scalar::{fmt_scalar, Rational, Scalar};

/// Largest chord-bound violation still counted as a pass.
pub const CHORD_TOL: f64 = 1e-12;
/// Agreement required between brute-force and closed-form stage norms.
pub const STAGE_NORM_TOL: f64 = 1e-9;
/// Agreement required between the closed form and the distances in the
/// non-uniformity table.
pub const NOCUFE_TOL: f64 = 1e-12;
/// Stages up to which exact measures are printed.
pub const EXACT_PRINT_LIMIT: u32 = 6;

#[derive(Parser, Debug)]
#[command(name = "freelip", version, about = "Extremal structure of Lipschitz-free spaces over finite metric spaces")]
pub struct Cli {
    /// Worker threads for pair scans (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Include wall-clock time in the report (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify every molecule of a space and test B = co(extreme molecules).
    Analyze {
        /// JSON space file.
        space: PathBuf,
        /// Exact rational arithmetic (also FREELIP_EXACT=1).
        #[arg(long)]
        exact: bool,
        /// LP tolerance for the hull test in float mode.
        #[arg(long, default_value_t = HULL_TOL)]
        tol: f64,
        /// Directory for CSV side files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fat Cantor stage measures, chord bounds and stage-norm trend.
    Cantor {
        #[arg(long, default_value_t = 5)]
        stage: u32,
        /// Samples for the chord-bound check.
        #[arg(long, default_value_t = 100_000)]
        grid: usize,
        /// Equispaced samples added to the endpoints in the stage-norm scan.
        #[arg(long, default_value_t = 64)]
        norm_grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Computations on the dyadic grid spaces.
    Grid {
        /// Norm of the plane: 1, 2 or inf.
        #[arg(long, value_parser = parse_norm)]
        p: NormP,
        #[arg(long)]
        depth: u32,
        #[arg(long, value_enum)]
        run: GridRun,
        #[arg(long, default_value = "0.2")]
        eps: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random maps in the approximation batch.
        #[arg(long, default_value_t = 20)]
        count: usize,
        /// Target dimension of the random maps (1: scalar, 2: Euclidean plane).
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GridRun {
    Sna,
    Alpha,
    Nocufe,
}

fn parse_norm(s: &str) -> std::result::Result<NormP, String> {
    NormP::parse(s).map_err(|e| e.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

impl Report {
    fn new(command: &str, inputs: Value, results: Value, checks: Vec<(&str, bool)>) -> Self {
        let checks: Vec<Check> = checks.into_iter().map(|(n, p)| Check { name: n.to_string(), passed: p }).collect();
        let passed = checks.iter().all(|c| c.passed);
        Self { command: command.to_string(), inputs, results, checks, passed, wall_time_ms: None }
    }
}

/// Input problems exit with 2, failed mathematics with 1.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::ConsistencyViolation { .. }
        | Error::CertificateViolation(_)
        | Error::NoWitness { .. }
        | Error::SolverFailure(_)
        | Error::GapViolation { .. }
        | Error::MemberNotExposed(..)
        | Error::NotAttaining(..)
        | Error::NotExtreme(..)
        | Error::DegenerateLocal(..)
        | Error::BadFunctional(_) => 1,
        _ => 2,
    }
}

fn exact_requested(flag: bool) -> bool {
    flag || std::env::var("FREELIP_EXACT").is_ok_and(|v| v == "1")
}

fn create_out(out: &Option<PathBuf>) -> Result<()> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn csv_file(dir: &Path, name: &str) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(dir.join(name))?))
}

pub fn run(cli: Cli) -> Result<Report> {
    if let Some(j) = cli.jobs {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global();
    }
    let start = Instant::now();
    let mut report = match cli.command {
        Command::Analyze { space, exact, tol, out } => {
            create_out(&out)?;
            if exact_requested(exact) {
                analyze::<Rational>(&space, 0.0, out.as_deref())?
            } else {
                analyze::<f64>(&space, tol, out.as_deref())?
            }
        }
        Command::Cantor { stage, grid, norm_grid, out } => {
            create_out(&out)?;
            cantor(stage, grid, norm_grid, out.as_deref())?
        }
        Command::Grid { p, depth, run, eps, seed, count, dim, exact, out } => {
            create_out(&out)?;
            let inputs = json!({"p": p, "depth": depth, "run": run, "eps": eps, "seed": seed, "count": count, "dim": dim});
            match run {
                GridRun::Alpha => grid_alpha(p, depth, inputs)?,
                GridRun::Nocufe => grid_nocufe(p, depth, inputs, out.as_deref())?,
                GridRun::Sna => {
                    if exact_requested(exact) {
                        grid_sna::<Rational>(p, depth, &eps, seed, count, dim, inputs)?
                    } else {
                        grid_sna::<f64>(p, depth, &eps, seed, count, dim, inputs)?
                    }
                }
            }
        }
    };
    if cli.timing {
        report.wall_time_ms = Some(start.elapsed().as_millis());
    }
    Ok(report)
}

fn analyze<S: Scalar>(path: &Path, tol: f64, out: Option<&Path>) -> Result<Report> {
    let space = load_space::<S>(path)?;
    let reports = classify_molecules(&space)?;
    let extreme = extreme_molecules(&reports);
    let hull = ball_equals_hull_with(&space, &extreme, tol)?;
    if let Some(dir) = out {
        write_classification_csv(&space, &reports, csv_file(dir, "classification.csv")?)?;
    }
    let label = |i: usize| space.label(i).to_string();
    let results = json!({
        "points": space.len(),
        "base": label(space.base()),
        "classes": reports.len(),
        "extreme_classes": extreme.len(),
        "strongly_exposed_classes": reports.iter().filter(|r| r.is_strongly_exposed).count(),
        "ambiguous_classes": reports.iter().filter(|r| r.ambiguous).count(),
        "extreme": extreme.iter().map(|m| [label(m.x), label(m.y)]).collect::<Vec<_>>(),
        "hull": {
            "holds": hull.holds,
            "checked": hull.checked,
            "violator": hull.violator.map(|m| [label(m.x), label(m.y)]),
        },
    });
    let inputs = json!({"space": path.display().to_string(), "exact": S::EXACT, "tol": tol});
    let consistent = reports.iter().all(|r| r.ambiguous || r.is_extreme == r.is_strongly_exposed);
    Ok(Report::new("analyze", inputs, results, vec![("classification_consistent", consistent), ("ball_equals_hull", hull.holds)]))
}

fn cantor(stage: u32, grid: usize, norm_grid: usize, out: Option<&Path>) -> Result<Report> {
    let measures = stage_measure_check(stage);
    let chord = chord_bounds_check(grid)?;
    let norms: Vec<StageNorm> =
        (0..=stage.min(CONSTRUCT_LIMIT)).map(|n| stage_norm_analysis(n, norm_grid)).collect::<Result<_>>()?;
    if let Some(dir) = out {
        write_trend_csv(&norms, csv_file(dir, "trend.csv")?)?;
    }
    let measures_ok = measures.iter().all(|m| m.residual == Rational::from_ratio(0, 1) && m.measure > Rational::from_ratio(0, 1))
        && measures.windows(2).all(|w| w[1].measure < w[0].measure)
        && measures.iter().all(|m| m.constructed.as_ref().is_none_or(|c| *c == m.measure));
    let chord_ok = chord.lower_violation <= CHORD_TOL && chord.upper_violation <= CHORD_TOL;
    let norms_ok = norms.iter().all(|r| (r.brute - r.closed_form).abs() <= STAGE_NORM_TOL && r.brute > 1.0)
        && norms.windows(2).all(|w| w[1].brute < w[0].brute);
    let argmax_ok = norms.iter().all(|r| r.argmax_is_components);
    let results = json!({
        "measures": measures.iter().map(|m| json!({
            "n": m.n,
            // exact terms have about 2^{n+1} bits; print them only while short
            "measure": (m.n <= EXACT_PRINT_LIMIT).then(|| fmt_scalar(&m.measure)),
            "measure_f64": m.measure.to_f64_lossy(),
            "residual_is_zero": m.residual.is_zero(),
            "constructed": m.constructed.as_ref().map(fmt_scalar),
        })).collect::<Vec<_>>(),
        "chord": chord,
        "stage_norms": norms.iter().map(|r| json!({
            "n": r.n,
            "ell": fmt_scalar(&r.ell),
            "brute": r.brute,
            "closed_form": r.closed_form,
            "attaining": r.attaining,
            "argmax_is_components": r.argmax_is_components,
        })).collect::<Vec<_>>(),
    });
    let inputs = json!({"stage": stage, "grid": grid, "norm_grid": norm_grid});
    Ok(Report::new(
        "cantor",
        inputs,
        results,
        vec![("stage_measures", measures_ok), ("chord_bounds", chord_ok), ("stage_norms", norms_ok), ("argmax_components", argmax_ok)],
    ))
}

fn grid_alpha(p: NormP, depth: u32, inputs: Value) -> Result<Report> {
    if p != NormP::One {
        return Err(Error::WrongNorm("1"));
    }
    let grid = GridSpace::<Rational>::new(p, depth)?;
    let cert = alpha_certificate(&grid)?;
    let bound_ok = cert.max_cross <= cert.bound;
    let checks = vec![("alpha_certificate", cert.passed), ("cross_values_within_bound", bound_ok), ("ball_equals_hull", cert.hull.holds)];
    Ok(Report::new("grid", inputs, serde_json::to_value(&cert)?, checks))
}

fn grid_nocufe(p: NormP, depth: u32, inputs: Value, out: Option<&Path>) -> Result<Report> {
    if p != NormP::Two {
        return Err(Error::WrongNorm("2"));
    }
    let grid = GridSpace::<f64>::new(p, depth)?;
    let rows = nocufe_sequence(&grid)?;
    if let Some(dir) = out {
        write_nocufe_csv(&rows, csv_file(dir, "nocufe.csv")?)?;
    }
    let checks = vec![
        ("formula_matches_distances", rows.iter().all(|r| r.residual <= NOCUFE_TOL)),
        ("ratio_strictly_decreasing", rows.windows(2).all(|w| w[1].ratio < w[0].ratio)),
        ("strongly_exposed", rows.iter().all(|r| r.strongly_exposed)),
    ];
    Ok(Report::new("grid", inputs, json!({ "rows": rows }), checks))
}

fn grid_sna<S: Scalar>(p: NormP, depth: u32, eps: &str, seed: u64, count: usize, dim: usize, inputs: Value) -> Result<Report> {
    let eps = S::parse_str(eps).ok_or_else(|| Error::Parse(format!("bad epsilon {eps:?}")))?;
    let target = match dim {
        1 => NormP::Inf,
        2 => NormP::Two,
        _ => return Err(Error::InvalidParameter("dim must be 1 or 2".into())),
    };
    let grid = GridSpace::<S>::new(p, depth)?;
    let mut r = rng(seed);
    let mut runs = Vec::with_capacity(count);
    let mut all_ok = true;
    let mut no_witness = 0;
    for index in 0..count {
        let f = random_map(&mut r, grid.space(), dim, target)?;
        match sna_approximate(&grid, &f, &eps) {
            Ok(res) => {
                all_ok &= res.certificate.passed;
                runs.push(json!({"index": index, "certificate": res.certificate}));
            }
            Err(e @ Error::NoWitness { .. }) => {
                all_ok = false;
                no_witness += 1;
                runs.push(json!({"index": index, "error": e.to_string()}));
            }
            Err(e) => return Err(e),
        }
    }
    let results = json!({"exact": S::EXACT, "runs": runs, "no_witness": no_witness});
    Ok(Report::new("grid", inputs, results, vec![("sna_certificates", all_ok)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> Result<Report> {
        run(Cli::try_parse_from(std::iter::once("freelip").chain(args.iter().copied())).unwrap())
    }

    #[test]
    fn grid_alpha_report() {
        let r = run_args(&["grid", "--p", "1", "--depth", "3", "--run", "alpha"]).unwrap();
        assert!(r.passed);
        assert_eq!(r.results["bound"], "2/3");
        assert_eq!(r.results["max_cross"], "1/2");
    }

    #[test]
    fn grid_alpha_wrong_norm() {
        let e = run_args(&["grid", "--p", "2", "--depth", "3", "--run", "alpha"]).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn grid_sna_is_deterministic() {
        let args = ["grid", "--p", "1", "--depth", "3", "--run", "sna", "--eps", "0.2", "--seed", "7", "--count", "4"];
        let a = serde_json::to_string(&run_args(&args).unwrap()).unwrap();
        let b = serde_json::to_string(&run_args(&args).unwrap()).unwrap();
        assert_eq!(a, b);
        let r = run_args(&args).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn cantor_single_row() {
        let r = run_args(&["cantor", "--stage", "0", "--grid", "1000"]).unwrap();
        assert!(r.passed);
        assert_eq!(r.results["measures"].as_array().unwrap().len(), 1);
        assert_eq!(r.results["measures"][0]["measure"], "1/2");
    }
}
