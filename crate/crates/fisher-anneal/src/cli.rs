//! The `fa` command line.
//!
//! Exit codes: 0 success, 2 configuration error, 3 certification
//! infeasible, 4 runtime numerical failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use fisher_anneal_core::curvature::{
    check_prop62, corollary63_lambda, interval_certificate, lambda_certificate, log_spaced, AlphaProfile,
    CurvatureReport, GammaField, HessianField, UnderdampedParams,
};
use fisher_anneal_core::measure::fit_decay_rate;
use fisher_anneal_core::model::{uniform_grid, JScaling, PotentialSpec, QuadraticJ, Schedule};
use serde_json::json;

use crate::config::Config;
use crate::experiments::{self, compare_scenarios, run_scenario, run_with_oracle, Metric};
use crate::output::{self, ArtifactPaths};
use crate::runner::Runner;
use crate::{AppError, ExitCode};

/// Flags people commonly reach for, mapped to the spelling `fa` uses.
const FLAG_ALIASES: [(&str, &str); 11] = [
    ("--stepsize", "--h"),
    ("--step-size", "--h"),
    ("--dt", "--h"),
    ("--nsteps", "--steps"),
    ("--n-steps", "--steps"),
    ("--iterations", "--steps"),
    ("--num-particles", "--particles"),
    ("--m", "--particles"),
    ("--k", "--bins"),
    ("--workers", "--threads"),
    ("--jobs", "--threads"),
];

#[derive(Parser, Debug)]
#[command(
    name = "fa",
    version,
    args_override_self = true,
    about = "Annealed, non-reversible and underdamped Langevin experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario and write its divergence series, verdict and plot.
    Simulate(RunArgs),
    /// Certify a curvature rate λ for one of the dynamics families.
    Certify(CertifyArgs),
    /// Run a quadratic scenario next to its exact Gaussian law.
    Oracle(RunArgs),
    /// Fit a power-law decay rate to a column of a series CSV.
    Fit(FitArgs),
    /// Compare two scenarios with batch-means error bars.
    Compare(CompareArgs),
    /// List the named scenarios.
    ListPresets,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Named scenario.
    #[arg(long)]
    preset: Option<String>,
    /// JSON manifest; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (defaults to $FA_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    particles: Option<usize>,
    /// Step size.
    #[arg(long = "h")]
    h: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// Schedule constant (C in C/log t, or the friction base).
    #[arg(long)]
    c: Option<f64>,
    #[arg(long = "record-every")]
    record_every: Option<u64>,
    /// Output file stem.
    #[arg(long)]
    name: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker cap; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Also write an SVG log-log plot.
    #[arg(long)]
    plot: bool,
}

impl RunArgs {
    fn config(&self) -> Result<Config, AppError> {
        let file = match &self.config {
            Some(p) => Config::from_file(p)?,
            None => Config::default(),
        };
        let flags = Config {
            preset: self.preset.clone(),
            name: self.name.clone(),
            c: self.c,
            particles: self.particles,
            steps: self.steps,
            h: self.h,
            t0: self.t0,
            bins: self.bins,
            record_every: self.record_every,
            seed: self.seed,
            out: self.out.clone(),
            threads: self.threads,
            plot: self.plot.then_some(true),
            ..Config::default()
        };
        Ok(file.overlay(flags))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CertFamily {
    Overdamped,
    NonreversibleDiag,
    JDrift,
    Underdamped,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long, value_enum)]
    family: CertFamily,
    /// Potential preset (fig1a, ex52, ...).
    #[arg(long)]
    preset: Option<String>,
    /// β = C / log t.
    #[arg(long)]
    c: Option<f64>,
    /// Constant β instead of C / log t.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "t-range", default_value = "3:100", allow_hyphen_values = true)]
    t_range: String,
    #[arg(long = "t-points", default_value_t = 50)]
    t_points: usize,
    /// Spatial box `lo:hi` applied to every axis.
    #[arg(long = "x-range", allow_hyphen_values = true)]
    x_range: Option<String>,
    /// Total number of spatial grid points.
    #[arg(long = "grid-points", default_value_t = 200)]
    grid_points: usize,
    /// Lower curvature bound of V (underdamped).
    #[arg(long)]
    lmin: Option<f64>,
    /// Upper curvature bound of V (underdamped).
    #[arg(long)]
    lmax: Option<f64>,
    /// Constant friction (underdamped).
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    z1: Option<f64>,
    #[arg(long)]
    z2: Option<f64>,
    /// Mixed second derivative of c (j-drift).
    #[arg(long)]
    c12: Option<f64>,
    /// Constant coefficient of J (nonreversible-diag).
    #[arg(long)]
    jc: Option<f64>,
    /// Constant diagonal diffusion profile (nonreversible-diag).
    #[arg(long)]
    alpha: Option<f64>,
    /// Also write the report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value = "kl")]
    column: String,
    /// Fit window `lo:hi`; defaults to the decay window of the series.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum MetricArg {
    MeanDist,
    Kl,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Named pair; `ex52-race` compares the J-drift and plain runs.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value = "mean-dist")]
    metric: MetricArg,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    for a in args.iter().skip(1).filter_map(|a| a.to_str()) {
        let flag = a.split('=').next().unwrap_or(a);
        if let Some((_, good)) = FLAG_ALIASES.iter().find(|(bad, _)| *bad == flag) {
            eprintln!("error: unknown flag `{flag}`; did you mean `{good}`?");
            return ExitCode::Config as i32;
        }
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(&a),
        Command::Certify(a) => certify(&a),
        Command::Oracle(a) => oracle(&a),
        Command::Fit(a) => fit(&a),
        Command::Compare(a) => compare(&a),
        Command::ListPresets => list_presets(),
    };
    match result {
        Ok(code) => code as i32,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code() as i32
        }
    }
}

fn resolve_seed(seed: Option<u64>) -> Result<u64, AppError> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("FA_SEED") {
        Ok(v) => {
            v.trim().parse().map_err(|_| AppError::Config(format!("FA_SEED must be an unsigned integer, got `{v}`")))
        }
        Err(_) => Ok(0),
    }
}

fn parse_range(s: &str, what: &str) -> Result<[f64; 2], AppError> {
    let bad = || AppError::Config(format!("{what} must look like `lo:hi`, got `{s}`"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(AppError::Config(format!("{what} needs lo < hi, got `{s}`")));
    }
    Ok([lo, hi])
}

fn print_json(v: &impl serde::Serialize) -> Result<String, AppError> {
    let text = serde_json::to_string_pretty(v)? + "\n";
    print!("{text}");
    Ok(text)
}

fn simulate(a: &RunArgs) -> Result<ExitCode, AppError> {
    let cfg = a.config()?;
    let scenario = cfg.scenario()?;
    let seed = resolve_seed(cfg.seed)?;
    let runner = Runner::new(cfg.threads)?;
    let record = run_scenario(&scenario, seed, &runner)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let paths = ArtifactPaths::new(&dir, &scenario.name);
    output::write_file(&paths.series, &output::series_csv(&record)?)?;
    output::write_file(&paths.verdict, &output::verdict_json(&record)?)?;
    if cfg.plot == Some(true) {
        match output::kl_plot_svg(&record) {
            Some(svg) => output::write_file(&paths.plot, &svg)?,
            None => eprintln!("note: fewer than two positive KL values, no plot written"),
        }
    }
    println!(
        "{}: {} row(s), verdict {}, wrote {}",
        scenario.name,
        record.rows.len(),
        if record.verdict.passed { "pass" } else { "fail" },
        paths.series.display()
    );
    Ok(ExitCode::Success)
}

fn oracle(a: &RunArgs) -> Result<ExitCode, AppError> {
    let cfg = a.config()?;
    let scenario = cfg.scenario()?;
    let seed = resolve_seed(cfg.seed)?;
    let runner = Runner::new(cfg.threads)?;
    let (record, rows) = run_with_oracle(&scenario, seed, &runner)?;
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let paths = ArtifactPaths::new(&dir, &scenario.name);
    output::write_file(&paths.series, &output::series_csv(&record)?)?;
    output::write_file(&paths.oracle, &output::oracle_csv(&rows)?)?;
    let max_diff =
        record.rows.iter().zip(&rows).filter_map(|(r, o)| Some((r.kl? - o.kl_binned?).abs())).fold(0.0, f64::max);
    print_json(&json!({
        "scenario": scenario.name,
        "rows": rows.len(),
        "max_abs_kl_diff": max_diff,
        "series": paths.series,
        "oracle": paths.oracle,
    }))?;
    Ok(ExitCode::Success)
}

fn fit(a: &FitArgs) -> Result<ExitCode, AppError> {
    let mut reader = csv::Reader::from_path(&a.csv)?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h == a.column)
        .ok_or_else(|| AppError::Config(format!("column `{}` not found in {}", a.column, a.csv.display())))?;
    let t_col =
        headers.iter().position(|h| h == "t").ok_or_else(|| AppError::Config("CSV has no `t` column".into()))?;
    let mut series = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<Option<f64>, AppError> {
            match rec.get(i).map(str::trim) {
                None | Some("") => Ok(None),
                Some(v) => v.parse().map(Some).map_err(|_| AppError::Config(format!("non-numeric cell `{v}`"))),
            }
        };
        if let (Some(t), Some(v)) = (parse(t_col)?, parse(col)?) {
            series.push((t, v));
        }
    }
    let window = match &a.window {
        Some(w) => parse_range(w, "--window")?,
        None => {
            let (first, last) = match (series.first(), series.last()) {
                (Some(f), Some(l)) => (f.0, l.0),
                _ => return Err(fisher_anneal_core::Error::InsufficientPoints { found: 0, needed: 5 }.into()),
            };
            experiments::decay_window(first, last)
        }
    };
    print_json(&fit_decay_rate(&series, window)?)?;
    Ok(ExitCode::Success)
}

fn compare(a: &CompareArgs) -> Result<ExitCode, AppError> {
    let (na, nb) = match (&a.preset, &a.a, &a.b) {
        (Some(p), None, None) if p == "ex52-race" => ("ex52-race-j".to_string(), "ex52-race-plain".to_string()),
        (Some(p), None, None) if p == "ex52-race-full" => {
            ("ex52-race-j-full".to_string(), "ex52-race-plain-full".to_string())
        }
        (Some(p), None, None) => return Err(AppError::Config(format!("unknown comparison preset `{p}`"))),
        (None, Some(x), Some(y)) => (x.clone(), y.clone()),
        _ => return Err(AppError::Config("give either --preset or both --a and --b".into())),
    };
    let seed = resolve_seed(a.seed)?;
    let runner = Runner::new(a.threads)?;
    let build = |name: &str| {
        Config { preset: Some(name.to_string()), particles: a.particles, steps: a.steps, ..Config::default() }
            .scenario()
    };
    let (sa, sb) = (build(&na)?, build(&nb)?);
    let ra = run_scenario(&sa, seed, &runner)?;
    let rb = run_scenario(&sb, seed, &runner)?;
    let metric = match a.metric {
        MetricArg::MeanDist => Metric::MeanDist,
        MetricArg::Kl => Metric::Kl,
    };
    let cmp = compare_scenarios(&ra, &rb, metric)?;
    let text =
        print_json(&json!({ "seed": seed, "winner": cmp.winner, "final_time": cmp.final_time, "comparison": cmp }))?;
    if let Some(p) = &a.out {
        output::write_file(p, &text)?;
    }
    Ok(ExitCode::Success)
}

fn list_presets() -> Result<ExitCode, AppError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let mut lines: Vec<String> = experiments::preset_names()
        .iter()
        .map(|name| format!("{name}\t{}", experiments::preset(name).expect("listed presets resolve").description))
        .collect();
    lines.push("ex52-race\tcompare pair: ex52-race-j against ex52-race-plain".into());
    for l in lines {
        // A closed pipe (`fa list-presets | head`) is not an error.
        if writeln!(out, "{l}").is_err() {
            break;
        }
    }
    Ok(ExitCode::Success)
}

fn potential_arg(name: Option<&str>, default: &str) -> Result<PotentialSpec, AppError> {
    let n = name.unwrap_or(default);
    PotentialSpec::preset(n).ok_or_else(|| AppError::Config(format!("unknown potential preset `{n}`")))
}

fn beta_arg(a: &CertifyArgs, default: Schedule) -> Result<Schedule, AppError> {
    let s = match (a.beta, a.c) {
        (Some(_), Some(_)) => return Err(AppError::Config("give at most one of --beta and --c".into())),
        (Some(b), None) => Schedule::constant(b),
        (None, Some(c)) => Schedule::inverse_log(c),
        (None, None) => default,
    };
    s.validate()?;
    Ok(s)
}

fn spatial_grid(a: &CertifyArgs, v: &PotentialSpec, default_half_width: f64) -> Result<Vec<[f64; 2]>, AppError> {
    let d = v.dim();
    let center = v.minimizer().unwrap_or([0.0; 2]);
    let (lo, hi) = match &a.x_range {
        Some(r) => {
            let [l, h] = parse_range(r, "--x-range")?;
            ([l; 2], [h; 2])
        }
        None => (
            [center[0] - default_half_width, center[1] - default_half_width],
            [center[0] + default_half_width, center[1] + default_half_width],
        ),
    };
    let n = if d == 1 { a.grid_points } else { ((a.grid_points as f64).sqrt().ceil() as usize).max(2) };
    if n < 2 {
        return Err(AppError::Config("--grid-points must be at least 2".into()));
    }
    Ok(uniform_grid(d, lo, hi, n))
}

fn certify(a: &CertifyArgs) -> Result<ExitCode, AppError> {
    let [t_lo, t_hi] = parse_range(&a.t_range, "--t-range")?;
    if a.t_points == 0 {
        return Err(AppError::Config("--t-points must be positive".into()));
    }
    let times = if t_lo > 0.0 {
        log_spaced(t_lo, t_hi, a.t_points)
    } else {
        uniform_grid(1, [t_lo, 0.0], [t_hi, 0.0], a.t_points.max(2)).iter().map(|p| p[0]).collect()
    };
    let report = match a.family {
        CertFamily::Overdamped => {
            let v = potential_arg(a.preset.as_deref(), "fig1a")?;
            let field = HessianField::overdamped(v, beta_arg(a, Schedule::inverse_log(4.0))?);
            lambda_certificate(&field, &spatial_grid(a, &v, 6.0)?, &times)?
        }
        CertFamily::NonreversibleDiag => {
            let v = potential_arg(a.preset.as_deref(), "fig3b")?;
            let alpha = a.alpha.unwrap_or(1.0);
            let gamma = match a.jc {
                Some(c) => GammaField::ConstantJ { c: Schedule::constant(c) },
                None => GammaField::Zero,
            };
            let field = HessianField::nonreversible_diag(
                v,
                beta_arg(a, Schedule::inverse_log(4.0))?,
                AlphaProfile::Constant([alpha; 2]),
                gamma,
            );
            lambda_certificate(&field, &spatial_grid(a, &v, 3.0)?, &times)?
        }
        CertFamily::JDrift => {
            let v = potential_arg(a.preset.as_deref(), "ex52")?;
            let c12 = match (a.c12, v.as_quadratic()) {
                (Some(c), _) => c,
                (None, Some(q)) => 0.5 * (q.hessian[1][1] - q.hessian[0][0]),
                (None, None) => return Err(AppError::Config("--c12 is required for non-quadratic potentials".into())),
            };
            let center = v.minimizer().unwrap_or([0.0; 2]);
            let field = HessianField::j_drift(
                v,
                beta_arg(a, Schedule::constant(1.0))?,
                QuadraticJ::off_diagonal(c12, center, JScaling::Fixed),
            )?;
            lambda_certificate(&field, &spatial_grid(a, &v, 0.5)?, &times)?
        }
        CertFamily::Underdamped => certify_underdamped(a, &times)?,
    };
    let text = print_json(&report)?;
    if let Some(p) = &a.out {
        output::write_file(p, &text)?;
    }
    Ok(if report.feasible { ExitCode::Success } else { ExitCode::Infeasible })
}

fn certify_underdamped(a: &CertifyArgs, times: &[f64]) -> Result<CurvatureReport, AppError> {
    let bounds = match (a.lmin, a.lmax) {
        (Some(l), Some(u)) => (l, u),
        (None, None) => {
            let v = potential_arg(a.preset.as_deref(), "fig1a")?;
            if v.dim() != 1 {
                return Err(AppError::Config("the underdamped family needs a one-dimensional potential".into()));
            }
            v.convexity_bounds()
                .ok_or_else(|| AppError::Config("potential has no convexity bounds; pass --lmin and --lmax".into()))?
        }
        _ => return Err(AppError::Config("give both --lmin and --lmax".into())),
    };
    let (lmin, lmax) = bounds;
    let corollary = a.r.is_none() && a.z1.is_none() && a.z2.is_none();
    let params = if corollary {
        UnderdampedParams::corollary63(lmin, lmax)
    } else {
        let r = a.r.unwrap_or(0.5 * lmax);
        UnderdampedParams {
            z1: a.z1.unwrap_or(1.0),
            z2: a.z2.unwrap_or(1.0),
            lmin,
            lmax,
            friction: Schedule::constant(r),
        }
    };
    params.friction.validate()?;
    let cor = if corollary { Some(corollary63_lambda(lmin, lmax)?) } else { None };
    let mut report = interval_certificate(&params, times)?;
    let mut conditions = BTreeMap::new();
    for &t in times {
        for (k, v) in check_prop62(&params, t).to_map() {
            *conditions.entry(k).or_insert(true) &= v;
        }
    }
    report.conditions = conditions;
    if let Some(c) = cor {
        if c.regime_violated {
            report.regime_flags.push(format!("approximation_regime_violated: λ̲/λ̄ = {} > 0.1", c.ratio));
        }
        report.corollary = Some(c);
    }
    Ok(report)
}

/// Default output directory helper for tests and scripts.
pub fn artifact_paths(dir: &Path, name: &str) -> ArtifactPaths {
    ArtifactPaths::new(dir, name)
}
