//! Named scenarios that reproduce the convergence experiments at desk or
//! full scale, and the records they produce.

use fisher_anneal_core::integrate::{Ensemble, InitialLaw, StepPlan};
use fisher_anneal_core::linalg::{self, Mat2, Vec2};
use fisher_anneal_core::measure::{
    discrete_kl, fit_decay_rate, gaussian_bin_masses, reference_masses, DecayFit, DivergenceReport, HistogramGrid,
    ReferenceMeasure, DEFAULT_PADDING,
};
use fisher_anneal_core::model::{DynamicsSpec, JField, JScaling, PotentialSpec, QuadraticJ, ReferenceSpec, Schedule};
use fisher_anneal_core::oracle::{
    gaussian_fisher, gaussian_kl, reference_gaussian, solve_gaussian_oracle, GaussianState,
};
use serde::{Deserialize, Serialize};

use crate::runner::Runner;
use crate::AppError;

/// Number of particle blocks used for batch-means error bars.
pub const BATCH_BLOCKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observers {
    pub kl: bool,
    pub l1: bool,
    pub fisher: bool,
    pub mean_dist: bool,
}

impl Observers {
    pub const DIVERGENCES: Observers = Observers { kl: true, l1: true, fisher: true, mean_dist: true };
    pub const DISTANCE: Observers = Observers { kl: false, l1: false, fisher: false, mean_dist: true };

    fn needs_histogram(&self) -> bool {
        self.kl || self.l1 || self.fisher
    }
}

/// Which coordinates of the state are histogrammed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marginal {
    /// Every state coordinate, against the full reference measure.
    Full,
    /// Position only; for the underdamped family the reference becomes
    /// the position marginal `∝ e^{−V}`.
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub bins: usize,
    pub marginal: Marginal,
    /// Relative padding of the per-snapshot min/max range.
    pub padding: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Expectation {
    /// Log-log KL slope over the decay window is at most `max_slope`, and
    /// the slope of `t·KL` is at most `max_tkl_slope`.
    DecaySlope { max_slope: f64, max_tkl_slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub dynamics: DynamicsSpec,
    pub plan: StepPlan,
    pub particles: usize,
    pub init: InitialLaw,
    pub histogram: HistogramSpec,
    pub observers: Observers,
    pub expected: Option<Expectation>,
}

impl Scenario {
    fn position_dim(&self) -> usize {
        self.dynamics.potential().dim()
    }

    fn histogram_dim(&self) -> usize {
        match self.histogram.marginal {
            Marginal::Full => self.dynamics.state_dim(),
            Marginal::Position => self.position_dim(),
        }
    }

    /// Reference measure matched to the histogrammed coordinates.
    pub fn reference(&self) -> ReferenceSpec {
        match (self.histogram.marginal, &self.dynamics) {
            (Marginal::Position, DynamicsSpec::Underdamped { potential, .. }) => {
                ReferenceSpec::HamiltonianPositionMarginal { potential: *potential }
            }
            _ => self.dynamics.reference(),
        }
    }

    /// Weight matrix `aaᵀ` of the Fisher information on the histogrammed
    /// coordinates, or `None` when the diffusion does not act on them.
    fn fisher_weight(&self, t: f64) -> Option<Mat2> {
        match (&self.dynamics, self.histogram.marginal) {
            (DynamicsSpec::Underdamped { .. }, Marginal::Position) => None,
            (DynamicsSpec::Underdamped { friction, .. }, Marginal::Full) => Some([[0.0, 0.0], [0.0, friction.eval(t)]]),
            (DynamicsSpec::Overdamped { beta, .. } | DynamicsSpec::NonReversible { beta, .. }, _) => {
                Some(linalg::scale(&linalg::identity(self.position_dim()), beta.eval(t)))
            }
        }
    }

    /// `[max(t_end/10, t_burn), t_end]` where the burn-in ends at `3 t₀`, or
    /// halfway through the run when `3 t₀` is already past the end.
    pub fn decay_window(&self) -> [f64; 2] {
        decay_window(self.plan.t0, self.plan.t_end())
    }

    pub fn validate(&self) -> Result<(), AppError> {
        self.dynamics.validate()?;
        self.plan.validate_for(&self.dynamics)?;
        if self.particles == 0 {
            return Err(AppError::Config("particle count must be positive".into()));
        }
        if self.histogram.bins < 2 {
            return Err(AppError::Config("histogram needs at least 2 bins per axis".into()));
        }
        Ok(())
    }
}

pub fn decay_window(t0: f64, t_end: f64) -> [f64; 2] {
    let burn = if 3.0 * t0 < t_end { 3.0 * t0 } else { 0.5 * (t0 + t_end) };
    [(t_end / 10.0).max(burn), t_end]
}

/// One recorded snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub step: u64,
    pub t: f64,
    pub kl: Option<f64>,
    pub l1: Option<f64>,
    pub fisher: Option<f64>,
    pub mean_dist: Option<f64>,
    pub pinsker_ok: Option<bool>,
    /// Mean distance per particle block, for batch-means error bars.
    #[serde(skip)]
    pub dist_blocks: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub fit: Option<DecayFit>,
    pub tkl_fit: Option<DecayFit>,
    pub verdict: Verdict,
}

impl RunRecord {
    pub fn kl_series(&self) -> Vec<(f64, f64)> {
        self.rows.iter().filter_map(|r| r.kl.map(|k| (r.t, k))).collect()
    }
}

struct Observer<'a> {
    scenario: &'a Scenario,
    reference: ReferenceMeasure,
    target: Option<Vec2>,
}

impl<'a> Observer<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self, AppError> {
        Ok(Observer {
            scenario,
            reference: ReferenceMeasure::new(scenario.reference())?,
            target: scenario.dynamics.potential().minimizer(),
        })
    }

    fn histogram(&self, ens: &Ensemble) -> Result<HistogramGrid, AppError> {
        let dim = self.scenario.histogram_dim();
        let coords: Vec<usize> = (0..dim).collect();
        let points = ens.project(&coords);
        let axes =
            HistogramGrid::padded_axes(dim, &points, self.scenario.histogram.bins, self.scenario.histogram.padding)?;
        Ok(HistogramGrid::with_axes(dim, axes, &points)?)
    }

    fn observe(&self, ens: &Ensemble) -> Result<(Row, Option<HistogramGrid>), AppError> {
        let s = self.scenario;
        let t = ens.time();
        let mut row = Row {
            step: ens.step_index,
            t,
            kl: None,
            l1: None,
            fisher: None,
            mean_dist: None,
            pinsker_ok: None,
            dist_blocks: Vec::new(),
        };
        let mut hist = None;
        if s.observers.needs_histogram() {
            let h = self.histogram(ens)?;
            let weight = if s.observers.fisher { s.fisher_weight(t) } else { None };
            let rep = DivergenceReport::evaluate(&h, &self.reference, t, weight.as_ref())?;
            if s.observers.kl {
                row.kl = Some(rep.kl);
            }
            if s.observers.l1 {
                row.l1 = Some(rep.l1);
            }
            row.fisher = rep.fisher;
            row.pinsker_ok = Some(rep.pinsker_ok);
            hist = Some(h);
        }
        if s.observers.mean_dist {
            if let Some(target) = self.target {
                let d = ens.distances_to(&target, s.position_dim());
                row.mean_dist = Some(d.iter().sum::<f64>() / d.len() as f64);
                row.dist_blocks = block_means(&d);
            }
        }
        Ok((row, hist))
    }
}

fn block_means(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < BATCH_BLOCKS {
        return vec![values.iter().sum::<f64>() / n as f64];
    }
    (0..BATCH_BLOCKS)
        .map(|k| {
            let block = &values[k * n / BATCH_BLOCKS..(k + 1) * n / BATCH_BLOCKS];
            block.iter().sum::<f64>() / block.len() as f64
        })
        .collect()
}

fn evaluate_verdict(s: &Scenario, rows: &[Row]) -> (Option<DecayFit>, Option<DecayFit>, Verdict) {
    let mut checks = Vec::new();
    let bad: Vec<f64> = rows.iter().filter(|r| r.pinsker_ok == Some(false)).map(|r| r.t).collect();
    checks.push(Check {
        name: "pinsker".into(),
        passed: bad.is_empty(),
        detail: format!("{} violation(s) over {} row(s)", bad.len(), rows.len()),
    });
    let negative = rows.iter().filter(|r| r.kl.is_some_and(|k| k < 0.0)).count();
    checks.push(Check {
        name: "kl_nonnegative".into(),
        passed: negative == 0,
        detail: format!("{negative} negative value(s)"),
    });

    let series: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.kl.map(|k| (r.t, k))).collect();
    let window = s.decay_window();
    let fit = fit_decay_rate(&series, window).ok();
    let scaled: Vec<(f64, f64)> = series.iter().map(|&(t, k)| (t, t * k)).collect();
    let tkl_fit = fit_decay_rate(&scaled, window).ok();
    if let Some(Expectation::DecaySlope { max_slope, max_tkl_slope }) = s.expected {
        let (passed, detail) = match fit {
            Some(f) => (
                f.slope <= max_slope,
                format!("slope {:.4} over [{:.4}, {:.4}] (bound {max_slope})", f.slope, window[0], window[1]),
            ),
            None => (false, "not enough KL points in the decay window".into()),
        };
        checks.push(Check { name: "decay_slope".into(), passed, detail });
        let (passed, detail) = match tkl_fit {
            Some(f) => (f.slope <= max_tkl_slope, format!("t·KL slope {:.4} (bound {max_tkl_slope})", f.slope)),
            None => (false, "not enough KL points in the decay window".into()),
        };
        checks.push(Check { name: "tkl_bounded".into(), passed, detail });
    }
    let passed = checks.iter().all(|c| c.passed);
    (fit, tkl_fit, Verdict { passed, checks })
}

/// Runs `s` with the given seed on `runner` and evaluates its verdict.
pub fn run_scenario(s: &Scenario, seed: u64, runner: &Runner) -> Result<RunRecord, AppError> {
    s.validate()?;
    let obs = Observer::new(s)?;
    let rows = runner.run(&s.dynamics, &s.plan, s.particles, &s.init, seed, |e| Ok(obs.observe(e)?.0))?;
    let (fit, tkl_fit, verdict) = evaluate_verdict(s, &rows);
    Ok(RunRecord { scenario: s.name.clone(), seed, rows, fit, tkl_fit, verdict })
}

/// One row of the Gaussian oracle aligned with a simulated snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub t: f64,
    pub mean: Vec2,
    pub cov: Mat2,
    /// Continuous KL of the exact law against the reference.
    pub kl_exact: f64,
    /// KL of the exact law binned on the simulated histogram grid.
    pub kl_binned: Option<f64>,
    pub fisher_exact: Option<f64>,
}

/// Runs `s` and the Gaussian oracle for the same dynamics side by side.
pub fn run_with_oracle(s: &Scenario, seed: u64, runner: &Runner) -> Result<(RunRecord, Vec<OracleRow>), AppError> {
    s.validate()?;
    let dim = s.dynamics.state_dim();
    let (m0, c0) = s.init.moments(dim);
    let law = solve_gaussian_oracle(&s.dynamics, &s.plan, &GaussianState::new(dim, m0, c0))?;
    let obs = Observer::new(s)?;
    let hdim = s.histogram_dim();
    let coords: Vec<usize> = (0..hdim).collect();
    let mut k = 0;
    let mut oracle = Vec::with_capacity(law.len());
    let rows = runner.run(&s.dynamics, &s.plan, s.particles, &s.init, seed, |e| {
        let (row, hist) = obs.observe(e)?;
        let (t, state) = &law[k];
        k += 1;
        if (t - e.time()).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(AppError::Core(fisher_anneal_core::Error::MismatchedGrids));
        }
        let marginal = state.marginal(&coords);
        let pi = reference_gaussian(&obs.reference.spec, *t)?;
        let kl_binned = match &hist {
            Some(h) => Some(discrete_kl(
                &gaussian_bin_masses(h, &marginal.mean, &marginal.cov)?,
                &reference_masses(h, &obs.reference, *t)?,
            )?),
            None => None,
        };
        let fisher_exact = match s.fisher_weight(*t) {
            Some(w) => Some(gaussian_fisher(&marginal, &pi, &w)?),
            None => None,
        };
        oracle.push(OracleRow {
            t: *t,
            mean: state.mean,
            cov: state.cov,
            kl_exact: gaussian_kl(&marginal, &pi)?,
            kl_binned,
            fisher_exact,
        });
        Ok(row)
    })?;
    let (fit, tkl_fit, verdict) = evaluate_verdict(s, &rows);
    Ok((RunRecord { scenario: s.name.clone(), seed, rows, fit, tkl_fit, verdict }, oracle))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    MeanDist,
    Kl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Winner {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeComparison {
    pub t: f64,
    pub a: f64,
    pub b: f64,
    /// `b − a`.
    pub diff: f64,
    /// Batch-means standard error of `diff`; zero for metrics without
    /// per-block values.
    pub std_error: f64,
    /// `|diff| / std_error`, infinite when the error is zero and the
    /// difference is not.
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    pub per_time: Vec<TimeComparison>,
    pub final_time: TimeComparison,
    /// Lower metric wins when separated by at least `threshold_sigma`.
    pub winner: Winner,
    pub threshold_sigma: f64,
}

fn batch_stats(blocks: &[f64]) -> (f64, f64) {
    let n = blocks.len() as f64;
    let mean = blocks.iter().sum::<f64>() / n;
    if blocks.len() < 2 {
        return (mean, 0.0);
    }
    let var = blocks.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / (n - 1.0);
    (mean, var / n)
}

/// Per-time and final-time comparison of a metric between two runs.
pub fn compare_scenarios(a: &RunRecord, b: &RunRecord, metric: Metric) -> Result<Comparison, AppError> {
    if a.rows.len() != b.rows.len() || a.rows.iter().zip(&b.rows).any(|(x, y)| x.t != y.t) {
        return Err(AppError::Config(format!(
            "runs `{}` and `{}` were recorded at different times",
            a.scenario, b.scenario
        )));
    }
    let missing = || AppError::Config(format!("metric {metric:?} was not recorded by both runs"));
    let mut per_time = Vec::with_capacity(a.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let ((va, ea), (vb, eb)) = match metric {
            Metric::MeanDist => {
                if x.mean_dist.is_none() || y.mean_dist.is_none() {
                    return Err(missing());
                }
                (batch_stats(&x.dist_blocks), batch_stats(&y.dist_blocks))
            }
            Metric::Kl => ((x.kl.ok_or_else(missing)?, 0.0), (y.kl.ok_or_else(missing)?, 0.0)),
        };
        let diff = vb - va;
        let se = (ea + eb).sqrt();
        let sigma = if diff == 0.0 {
            0.0
        } else if se == 0.0 {
            f64::INFINITY
        } else {
            diff.abs() / se
        };
        per_time.push(TimeComparison { t: x.t, a: va, b: vb, diff, std_error: se, sigma });
    }
    let final_time = *per_time.last().ok_or_else(|| AppError::Config("runs have no recorded rows".into()))?;
    let threshold_sigma = 3.0;
    let winner = if final_time.sigma >= threshold_sigma {
        if final_time.diff > 0.0 {
            Winner::A
        } else {
            Winner::B
        }
    } else {
        Winner::Tie
    };
    Ok(Comparison {
        a: a.scenario.clone(),
        b: b.scenario.clone(),
        metric,
        per_time,
        final_time,
        winner,
        threshold_sigma,
    })
}

/// Problem size of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Particles reduced 10× and steps 5× from the full runs.
    Desk,
    /// The original problem sizes.
    Full,
}

const ONE_D: [&str; 4] = ["fig1a", "fig1b", "fig2a", "fig2b"];
const TWO_D: [&str; 3] = ["fig3a", "fig3b", "fig3c"];
const UNDERDAMPED_FULL: [&str; 4] = ["fig6a", "fig6b", "fig7a", "fig7b"];
const UNDERDAMPED_X: [&str; 4] = ["fig8a", "fig8b", "fig9a", "fig9b"];
/// Constants `C` of `β = C / log t` offered as `-cN` variants.
const C_VALUES: [u32; 3] = [2, 4, 8];
const DEFAULT_C: f64 = 4.0;
/// Constant `β` of the friction `r = β + 1/log t`.
const DEFAULT_FRICTION_BASE: f64 = 1.0;
/// Temperature constant of the two-dimensional runs, which the published
/// setup leaves unstated.
const DEFAULT_C_2D: f64 = 2.0;

fn annealed_plan(scale: Scale, h: f64) -> StepPlan {
    match scale {
        Scale::Desk => StepPlan { h, n_steps: 2000, t0: std::f64::consts::E, record_every: 20 },
        Scale::Full => StepPlan { h, n_steps: 10_000, t0: std::f64::consts::E, record_every: 100 },
    }
}

fn particles(scale: Scale) -> usize {
    match scale {
        Scale::Desk => 100_000,
        Scale::Full => 1_000_000,
    }
}

fn divergence_scenario(
    name: String,
    description: String,
    dynamics: DynamicsSpec,
    plan: StepPlan,
    m: usize,
    marginal: Marginal,
) -> Scenario {
    Scenario {
        name,
        description,
        dynamics,
        plan,
        particles: m,
        init: InitialLaw::StandardNormal,
        histogram: HistogramSpec { bins: 50, marginal, padding: DEFAULT_PADDING },
        observers: Observers::DIVERGENCES,
        expected: None,
    }
}

fn overdamped(fig: &str, c: f64, scale: Scale) -> Scenario {
    let v = PotentialSpec::preset(fig).expect("known figure");
    let two_d = v.dim() == 2;
    let plan = annealed_plan(scale, if two_d { 0.001 } else { 0.002 });
    let mut s = divergence_scenario(
        String::new(),
        format!("overdamped annealing on {fig} with β = {c}/log t"),
        DynamicsSpec::Overdamped { potential: v, beta: Schedule::inverse_log(c) },
        plan,
        particles(scale),
        Marginal::Full,
    );
    if !two_d && v.convexity_bounds().is_some() {
        s.expected = Some(Expectation::DecaySlope { max_slope: -0.7, max_tkl_slope: 0.1 });
    }
    s
}

fn underdamped(fig: &str, base: f64, scale: Scale, marginal: Marginal) -> Scenario {
    let v = PotentialSpec::preset(fig).expect("known figure");
    let what = match marginal {
        Marginal::Full => "(x, v)",
        Marginal::Position => "x only",
    };
    divergence_scenario(
        String::new(),
        format!("underdamped dynamics on {fig} with r = {base} + 1/log t, KL in {what}"),
        DynamicsSpec::Underdamped { potential: v, friction: Schedule::shifted(base, 1.0) },
        annealed_plan(scale, 0.002),
        particles(scale),
        marginal,
    )
}

/// The two sides of the annealed race of the non-reversible example:
/// `(J-drift, plain overdamped)`.
pub fn ex52_race(scale: Scale) -> (Scenario, Scenario) {
    let v = PotentialSpec::preset("ex52").expect("ex52");
    let beta = Schedule::hyperbolic(1.0);
    let (m, plan) = match scale {
        Scale::Desk => (2000, StepPlan { h: 5e-4, n_steps: 30_000, t0: 0.0, record_every: 300 }),
        Scale::Full => (10_000, StepPlan { h: 5e-5, n_steps: 300_000, t0: 0.0, record_every: 3000 }),
    };
    let suffix = if scale == Scale::Full { "-full" } else { "" };
    let base = |name: &str, description: &str, dynamics| Scenario {
        name: format!("{name}{suffix}"),
        description: description.into(),
        dynamics,
        plan,
        particles: m,
        init: InitialLaw::StandardNormal,
        histogram: HistogramSpec { bins: 50, marginal: Marginal::Full, padding: DEFAULT_PADDING },
        observers: Observers::DISTANCE,
        expected: None,
    };
    let j = JField::Quadratic(QuadraticJ::off_diagonal(-0.95, [0.0, 0.0], JScaling::InverseBeta));
    (
        base(
            "ex52-race-j",
            "J-drift dynamics with c = (b − a) x₁x₂ / (2β) and β = 1/(1 + t)",
            DynamicsSpec::NonReversible { potential: v, beta, j },
        ),
        base(
            "ex52-race-plain",
            "overdamped dynamics with β = 1/(1 + t)",
            DynamicsSpec::Overdamped { potential: v, beta },
        ),
    )
}

/// Constant-temperature run used to compare against the Gaussian oracle.
pub fn fig1a_oracle(scale: Scale) -> Scenario {
    let mut s = overdamped("fig1a", DEFAULT_C, scale);
    s.dynamics =
        DynamicsSpec::Overdamped { potential: PotentialSpec::preset("fig1a").unwrap(), beta: Schedule::constant(0.5) };
    s.description = "overdamped dynamics on fig1a at constant β = 0.5".into();
    s.expected = None;
    s
}

/// Frozen-temperature run: the KL settles at the binning and sampling floor.
pub fn fig1a_frozen(scale: Scale) -> Scenario {
    let mut s = overdamped("fig1a", DEFAULT_C, scale);
    s.dynamics = DynamicsSpec::Overdamped {
        potential: PotentialSpec::preset("fig1a").unwrap(),
        beta: Schedule::constant(DEFAULT_C),
    };
    s.description = "overdamped dynamics on fig1a with β frozen at C / log t₀ = 4".into();
    s.init = InitialLaw::Gaussian { mean: [1.0, 0.0], cov: [[16.0, 0.0], [0.0, 1.0]] };
    s.expected = None;
    s
}

/// Every preset name accepted by [`preset`].
pub fn preset_names() -> Vec<String> {
    let mut names = Vec::new();
    for scale in ["desk", "full"] {
        for fig in ONE_D {
            names.push(format!("{fig}-{scale}"));
            for c in C_VALUES {
                names.push(format!("{fig}-{scale}-c{c}"));
            }
        }
        for fig in TWO_D.iter().chain(&UNDERDAMPED_FULL).chain(&UNDERDAMPED_X) {
            names.push(format!("{fig}-{scale}"));
        }
    }
    names.extend(
        ["fig1a-oracle", "fig1a-frozen", "ex52-race-j", "ex52-race-plain", "ex52-race-j-full", "ex52-race-plain-full"]
            .map(String::from),
    );
    names
}

/// Looks up a named scenario, e.g. `fig1a-desk`, `fig1a-desk-c8`,
/// `fig8b-full` or `ex52-race-j`.
pub fn preset(name: &str) -> Option<Scenario> {
    let mut s = match name {
        "fig1a-oracle" => fig1a_oracle(Scale::Desk),
        "fig1a-frozen" => fig1a_frozen(Scale::Desk),
        "ex52-race-j" => ex52_race(Scale::Desk).0,
        "ex52-race-plain" => ex52_race(Scale::Desk).1,
        "ex52-race-j-full" => ex52_race(Scale::Full).0,
        "ex52-race-plain-full" => ex52_race(Scale::Full).1,
        _ => {
            let mut parts = name.splitn(3, '-');
            let fig = parts.next()?;
            let scale = match parts.next()? {
                "desk" => Scale::Desk,
                "full" => Scale::Full,
                _ => return None,
            };
            let c = match parts.next() {
                None => None,
                Some(tag) => Some(tag.strip_prefix('c')?.parse::<u32>().ok().filter(|c| C_VALUES.contains(c))? as f64),
            };
            if ONE_D.contains(&fig) {
                overdamped(fig, c.unwrap_or(DEFAULT_C), scale)
            } else if c.is_some() {
                return None;
            } else if TWO_D.contains(&fig) {
                overdamped(fig, DEFAULT_C_2D, scale)
            } else if UNDERDAMPED_FULL.contains(&fig) {
                underdamped(fig, DEFAULT_FRICTION_BASE, scale, Marginal::Full)
            } else if UNDERDAMPED_X.contains(&fig) {
                underdamped(fig, DEFAULT_FRICTION_BASE, scale, Marginal::Position)
            } else {
                return None;
            }
        }
    };
    s.name = name.to_string();
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str) -> Scenario {
        let mut s = preset(name).unwrap();
        s.particles = 5000;
        s.plan.n_steps = 200;
        s
    }

    #[test]
    fn every_listed_preset_resolves() {
        let names = preset_names();
        for n in &names {
            let s = preset(n).unwrap_or_else(|| panic!("{n}"));
            assert_eq!(&s.name, n);
            s.validate().unwrap();
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len(), "names are unique");
        for bad in ["fig1a", "fig3a-desk-c4", "fig1a-desk-c3", "fig1a-huge", "nope-desk"] {
            assert!(preset(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn desk_factors() {
        let d = preset("fig1a-desk").unwrap();
        let p = preset("fig1a-full").unwrap();
        assert_eq!(p.particles / d.particles, 10);
        assert_eq!(p.plan.n_steps / d.plan.n_steps, 5);
        let (j, _) = ex52_race(Scale::Desk);
        let (jp, _) = ex52_race(Scale::Full);
        assert_eq!(jp.particles / j.particles, 5);
        assert_eq!(jp.plan.n_steps / j.plan.n_steps, 10);
        assert!((j.plan.h / jp.plan.h - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_records_initial_row_only() {
        let mut s = small("fig1a-desk");
        s.plan.n_steps = 0;
        let r = run_scenario(&s, 3, &Runner::new(Some(1)).unwrap()).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].t, s.plan.t0);
    }

    #[test]
    fn records_are_reproducible() {
        let s = small("fig8b-desk");
        let a = run_scenario(&s, 9, &Runner::new(Some(1)).unwrap()).unwrap();
        let b = run_scenario(&s, 9, &Runner::new(Some(3)).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(a.rows.iter().all(|r| r.fisher.is_none() && r.kl.is_some()));
        let c = run_scenario(&s, 10, &Runner::new(Some(1)).unwrap()).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn identical_runs_tie_with_zero_error() {
        let mut s = preset("ex52-race-j").unwrap();
        s.particles = 200;
        s.plan.n_steps = 600;
        let r = Runner::new(Some(2)).unwrap();
        let a = run_scenario(&s, 4, &r).unwrap();
        let cmp = compare_scenarios(&a, &a.clone(), Metric::MeanDist).unwrap();
        assert_eq!(cmp.winner, Winner::Tie);
        assert!(cmp.per_time.iter().all(|c| c.diff == 0.0 && c.sigma == 0.0));
        let mut shorter = a.clone();
        shorter.rows.pop();
        assert!(compare_scenarios(&a, &shorter, Metric::MeanDist).is_err());
        assert!(compare_scenarios(&a, &a, Metric::Kl).is_err());
    }

    #[test]
    fn decay_window_rules() {
        assert_eq!(decay_window(1.0, 100.0), [10.0, 100.0]);
        assert_eq!(decay_window(1.0, 20.0), [3.0, 20.0]);
        assert_eq!(decay_window(3.0, 7.0), [5.0, 7.0]);
    }

    #[test]
    fn oracle_rows_align_with_simulation() {
        let s = small("fig1a-oracle");
        let (rec, oracle) = run_with_oracle(&s, 1, &Runner::new(Some(2)).unwrap()).unwrap();
        assert_eq!(rec.rows.len(), oracle.len());
        for (r, o) in rec.rows.iter().zip(&oracle) {
            assert_eq!(r.t, o.t);
            assert!(o.kl_binned.unwrap() >= 0.0 && o.kl_exact >= 0.0);
        }
        let mut bad = small("fig2a-desk");
        bad.plan.n_steps = 0;
        assert!(matches!(
            run_with_oracle(&bad, 1, &Runner::new(Some(1)).unwrap()),
            Err(AppError::Core(fisher_anneal_core::Error::NotQuadratic))
        ));
    }
}
