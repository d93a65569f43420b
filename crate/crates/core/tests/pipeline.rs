//! End-to-end checks through the public API: sample, step, bin, and compare
//! against references computed independently in the test.

use fisher_anneal_core::curvature::{lambda_certificate, HessianField};
use fisher_anneal_core::integrate::{run_trajectory, Ensemble, InitialLaw, Noise, StepPlan};
use fisher_anneal_core::measure::{
    discrete_kl, fit_decay_rate, gaussian_bin_masses, histogram_kl, Axis, DivergenceReport, HistogramGrid,
    ReferenceMeasure,
};
use fisher_anneal_core::model::{DynamicsSpec, PotentialSpec, QuadraticForm, ReferenceSpec, Schedule};
use fisher_anneal_core::oracle::{solve_gaussian_oracle, GaussianState};

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn ou(beta: f64) -> DynamicsSpec {
    DynamicsSpec::Overdamped { potential: PotentialSpec::preset("fig1a").unwrap(), beta: Schedule::constant(beta) }
}

#[test]
fn ensemble_moments_track_the_gaussian_oracle() {
    let spec = ou(0.5);
    let plan = StepPlan::new(0.002, 1500, std::f64::consts::E, 500).unwrap();
    let m = 40_000;
    let sim = run_trajectory(&spec, &plan, m, &InitialLaw::StandardNormal, 3, |e| Ok(e.moments())).unwrap();
    let exact =
        solve_gaussian_oracle(&spec, &plan, &GaussianState::new(1, [0.0; 2], [[1.0, 0.0], [0.0, 0.0]])).unwrap();
    assert_eq!(sim.len(), exact.len());
    for ((mean, cov), (t, g)) in sim.iter().zip(&exact) {
        let se_mean = (g.cov[0][0] / m as f64).sqrt();
        let se_var = g.cov[0][0] * (2.0 / m as f64).sqrt();
        assert!((mean[0] - g.mean[0]).abs() < 5.0 * se_mean, "t = {t}: {} vs {}", mean[0], g.mean[0]);
        // Euler-Maruyama bias in the variance is O(h), well below the noise here.
        assert!((cov[0][0] - g.cov[0][0]).abs() < 5.0 * se_var + 0.01, "t = {t}: {} vs {}", cov[0][0], g.cov[0][0]);
    }
    // Closed form with drift −(x − 1)/4 and unit noise: the mean relaxes to 1
    // at rate 1/4 and the variance to 2 at rate 1/2.
    for (t, g) in &exact {
        let s = t - plan.t0;
        let mean = 1.0 - (-0.25 * s).exp();
        let var = 2.0 - (-0.5 * s).exp();
        assert!((g.mean[0] - mean).abs() < 1e-9 && (g.cov[0][0] - var).abs() < 1e-9, "t = {t}: {g:?}");
    }
}

#[test]
fn standard_normal_samples_against_binned_reference() {
    let spec = DynamicsSpec::Overdamped {
        potential: PotentialSpec::Quadratic(QuadraticForm::one_dim(1.0, 0.0)),
        beta: Schedule::constant(1.0),
    };
    let plan = StepPlan::new(0.01, 0, 0.0, 1).unwrap();
    let ens = Ensemble::sample(1, 100_000, &InitialLaw::StandardNormal, &plan, 8).unwrap();
    let axis = Axis { lo: -5.0, hi: 5.0, bins: 50 };
    let hist = HistogramGrid::with_axes(1, [axis, axis], &ens.states).unwrap();
    let reference = ReferenceMeasure::new(spec.reference()).unwrap();
    let kl = histogram_kl(&hist, &reference, 0.0).unwrap();
    assert!(kl < 0.01, "{kl}");

    // Exact Gaussian bin masses from the error function.
    let w = axis.width();
    let exact: Vec<f64> =
        (0..50).map(|i| normal_cdf(-5.0 + (i + 1) as f64 * w) - normal_cdf(-5.0 + i as f64 * w)).collect();
    let binned = gaussian_bin_masses(&hist, &[0.0, 0.0], &[[1.0, 0.0], [0.0, 0.0]]).unwrap();
    let total: f64 = exact.iter().sum();
    for (a, b) in binned.iter().zip(&exact) {
        assert!((a - b / total).abs() < 1e-9, "{a} vs {b}");
    }
    let direct = discrete_kl(&hist.masses(), &binned).unwrap();
    assert!((direct - kl).abs() < 5e-3, "{direct} vs {kl}");

    let report = DivergenceReport::evaluate(&hist, &reference, 0.0, None).unwrap();
    assert!(report.pinsker_ok && report.l1 <= (2.0 * report.kl).sqrt());
}

#[test]
fn unit_gaussian_normalization() {
    let reference = ReferenceMeasure::new(ReferenceSpec::Annealed {
        potential: PotentialSpec::Quadratic(QuadraticForm::one_dim(1.0, 0.0)),
        beta: Schedule::constant(1.0),
    })
    .unwrap();
    let z = reference.normalization_constant(0.0).unwrap();
    assert!((z - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6, "{z}");
}

#[test]
fn suppressed_noise_gives_the_deterministic_drift_step() {
    let spec = DynamicsSpec::Overdamped {
        potential: PotentialSpec::preset("fig1a").unwrap(),
        beta: Schedule::inverse_log(4.0),
    };
    let plan = StepPlan::new(0.002, 1, std::f64::consts::E, 1).unwrap();
    let mut ens = Ensemble::from_states(1, vec![[2.0, 0.0]; 3], &plan, 0).with_noise(Noise::Suppressed);
    ens.advance(&spec, 1).unwrap();
    for s in &ens.states {
        assert!((s[0] - 1.9995).abs() < 1e-15, "{}", s[0]);
    }
}

#[test]
fn annealed_kl_decays_and_the_certificate_holds() {
    let v = PotentialSpec::preset("fig1a").unwrap();
    let beta = Schedule::inverse_log(4.0);
    let spec = DynamicsSpec::Overdamped { potential: v, beta };
    let plan = StepPlan::new(0.002, 2000, std::f64::consts::E, 100).unwrap();
    let reference = ReferenceMeasure::new(spec.reference()).unwrap();
    let series = run_trajectory(&spec, &plan, 50_000, &InitialLaw::StandardNormal, 21, |e| {
        let hist = HistogramGrid::from_points(1, &e.states, 50)?;
        Ok((e.time(), histogram_kl(&hist, &reference, e.time())?))
    })
    .unwrap();
    let fit = fit_decay_rate(&series, [4.7, 6.8]).unwrap();
    assert!(fit.slope < -0.7, "{fit:?}");

    let grid: Vec<[f64; 2]> = (0..200).map(|i| [-5.0 + 12.0 * i as f64 / 199.0, 0.0]).collect();
    let rep = lambda_certificate(&HessianField::overdamped(v, beta), &grid, &[3.0, 10.0, 100.0]).unwrap();
    assert!(rep.lambda.unwrap() >= 0.25 - 1e-9);
}
