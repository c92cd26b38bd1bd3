//! Acceptance suite. Prints one line per criterion and exits non-zero if any fails.
//!
//! Run with `cargo test -p decolab --test acceptance` (add `--release` for
//! realistic timings; the PDE criterion carries a wall-clock budget).

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use decolab::continuous::pde::{evolve_master_pde, fit_offdiagonal_decay, l2_distance, CouplingModel, MasterEquationGrid};
use decolab::continuous::{
    de_plane_wave_oracle, de_plane_wave_erf, de_plane_wave_erf_z, de_plane_wave_reduction_z, gaussian_momentum_de,
    gaussian_momentum_kernel, gaussian_position_de, gaussian_position_kernel, gaussian_position_kernel_normalized,
    plane_wave_kernel, GaussianMomentumParams, GaussianPositionParams, PlaneWaveParams, SigmaForm,
};
use decolab::mach_zehnder::{
    coherence_from_dephasing, default_phase_grid, estimate_de, intensities, monte_carlo_protocol, Blocker,
    MeasurementConfig, Shots, TwoPathDensity,
};
use decolab::scenario::{figure2_series, figure_text};
use decolab::spin_bath::{brute_force_evolve, reduced_density, time_average_stats, Environment, SpinBathParams};
use decolab::spin_boson::{analytic_rho, de_analytic, integrate_master, SpinBosonParams, StepControl};
use decolab::stern_gerlach::{de_timeline, SGModelParams};
use decolab::{decoherence_continuous, decoherence_finite, DensityMatrix, PureState};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn random_pure(n: usize, rng: &mut ChaCha8Rng) -> PureState {
    PureState::normalized((0..n).map(|_| complex_gaussian(rng)).collect()).unwrap()
}

fn random_mixed(n: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let a = DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng));
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    DensityMatrix::new(rho / tr).unwrap()
}

fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| complex_gaussian(rng)).qr().q()
}

fn within_budget(elapsed: Duration, budget: Duration) -> String {
    format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64())
}

fn measure_identities() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pure = (0..1000)
        .map(|_| {
            let n = rng.random_range(2..=8);
            decoherence_finite(&random_pure(n, &mut rng).projector()).unwrap().abs()
        })
        .fold(0.0, f64::max);
    let mixed = (2..=8)
        .map(|n| (decoherence_finite(&DensityMatrix::maximally_mixed(n).unwrap()).unwrap() - 1.0).abs())
        .fold(0.0, f64::max);
    let invariance = (0..100)
        .map(|_| {
            let n = rng.random_range(2..=8);
            let rho = random_mixed(n, &mut rng);
            let u = random_unitary(n, &mut rng);
            (decoherence_finite(&rho.conjugate_by(&u).unwrap()).unwrap() - decoherence_finite(&rho).unwrap()).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(1);
    outcome(
        pure <= 1e-12 && mixed <= 1e-12 && invariance <= 1e-12 && elapsed < budget,
        format!("pure {pure:.1e}, mixed {mixed:.1e}, unitary {invariance:.1e}, {}", within_budget(elapsed, budget)),
    )
}

fn spin_bath() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut brute = 0.0f64;
    for _ in 0..20 {
        let levels = rng.random_range(2..=3);
        let spins = rng.random_range(1..=10);
        let env = Environment::random_product(levels, spins, (-1.0, 1.0), &mut rng);
        let alphas = random_pure(levels, &mut rng).amplitudes().iter().copied().collect();
        let energies = (0..levels).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = SpinBathParams::new(alphas, energies, env).unwrap();
        let t = rng.random_range(0.0..20.0);
        brute = brute.max(reduced_density(&p, t).max_abs_diff(&brute_force_evolve(&p, t).unwrap()));
    }
    let brute_elapsed = start.elapsed();

    // Twelve equally weighted environment states.
    let (k, horizon, samples) = (12, 1e4, 100_001);
    let mut worst_mean = 0.0f64;
    let mut worst_sq = 0.0f64;
    for _ in 0..20 {
        let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let p = SpinBathParams::equal_superposition_qubit(Environment::zurek_flat(&g)).unwrap();
        let (mean, sq) = time_average_stats(&p, 0, 1, horizon, samples);
        worst_mean = worst_mean.max(mean.norm());
        worst_sq = worst_sq.max((sq - 1.0 / k as f64).abs());
    }
    // For comparison only: twelve independent spins have 2^12 environment states.
    let g: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let spins = SpinBathParams::equal_superposition_qubit(Environment::zurek_product(&g)).unwrap();
    let (_, spins_sq) = time_average_stats(&spins, 0, 1, horizon, samples);
    let budget = Duration::from_secs(30);
    outcome(
        brute <= 1e-10 && brute_elapsed < budget && worst_mean <= 0.05 && worst_sq <= 0.02,
        format!(
            "brute force {brute:.1e} ({}), 12 equal-weight states: max |<z>| {worst_mean:.1e}, max |<|z|^2> - 1/12| {worst_sq:.4} \
             (12 product spins: <|z|^2> {spins_sq:.1e})",
            within_budget(brute_elapsed, budget)
        ),
    )
}

fn spin_boson() -> Outcome {
    let start = Instant::now();
    let p = SpinBosonParams::equal_superposition(1.0, 0.5).unwrap();
    let traj = integrate_master(&p, 4.0, StepControl::default()).unwrap();
    let mut rho_err = 0.0f64;
    let mut de_err = 0.0f64;
    for (t, state) in traj.times.iter().zip(&traj.states) {
        rho_err = rho_err.max(state.max_abs_diff(&analytic_rho(&p, *t).unwrap()));
        de_err = de_err.max((decoherence_finite(state).unwrap() - (1.0 - (-4.0 * 0.5 * t).exp())).abs());
    }
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(5);
    outcome(
        rho_err <= 1e-6 && de_err <= 1e-6 && elapsed < budget,
        format!("rho {rho_err:.1e}, D_e {de_err:.1e}, {}", within_budget(elapsed, budget)),
    )
}

/// Short-time width with `sqrt(2σ)L = z` at `t = 1`.
fn plane_wave_at(z: f64) -> PlaneWaveParams {
    let gamma = 0.01;
    let sigma = z * z / 2.0;
    let lambda_t = (4.0 * PI * gamma / sigma).sqrt();
    PlaneWaveParams::new(1.0, 1.0, lambda_t, gamma).unwrap().with_sigma_form(SigmaForm::ShortTime)
}

fn plane_wave() -> Outcome {
    let p3 = plane_wave_at(3.0);
    let oracle = de_plane_wave_oracle(&p3, 1.0).unwrap();
    let quadrature_2d = decoherence_continuous(&plane_wave_kernel(&p3, 1.0)).unwrap();
    let reduction = de_plane_wave_reduction_z(3.0);
    let anchor = (oracle - 0.7324).abs() <= 2e-3 && (quadrature_2d - reduction).abs() <= 1e-6 && (oracle - reduction).abs() <= 1e-9;

    let zs: Vec<f64> = (0..=170).map(|i| 3.0 + 0.1 * i as f64).collect();
    let gap = zs
        .iter()
        .map(|&z| (de_plane_wave_erf(&plane_wave_at(z), 1.0).unwrap() - de_plane_wave_oracle(&plane_wave_at(z), 1.0).unwrap()).abs())
        .fold(0.0, f64::max);

    let curve: Vec<f64> = (1..=400).map(|i| 0.05 * i as f64).collect();
    let monotone = |f: &dyn Fn(f64) -> f64| curve.windows(2).all(|w| f(w[1]) > f(w[0]));
    let monotone_both = monotone(&de_plane_wave_erf_z) && monotone(&de_plane_wave_reduction_z);
    let far = de_plane_wave_erf_z(1e6).min(de_plane_wave_reduction_z(1e6));

    // At t = τ_D the short-time width gives z = √2.
    let tau = plane_wave_at(2f64.sqrt());
    let at_tau_erf = de_plane_wave_erf(&tau, tau.tau_d()).unwrap();
    let at_tau_oracle = de_plane_wave_oracle(&tau, tau.tau_d()).unwrap();
    let naive = 1.0 - (-1.0f64).exp();
    outcome(
        anchor && gap <= 0.03 && monotone_both && far > 1.0 - 1e-5 && at_tau_erf < naive && at_tau_oracle < naive,
        format!(
            "oracle(3) {oracle:.6} (2-D quadrature {quadrature_2d:.6}), max gap z>=3 {gap:.4}, monotone {monotone_both}, \
             D_e(z=1e6) {far:.7}, at tau_D {at_tau_erf:.4}/{at_tau_oracle:.4} < {naive:.4}"
        ),
    )
}

fn gaussians() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut momentum = 0.0f64;
    let mut position = 0.0f64;
    for _ in 0..50 {
        let sigma = rng.random_range(0.5..2.0);
        let mass = rng.random_range(0.5..5.0);
        let temperature = rng.random_range(0.5..5.0);
        let gamma = rng.random_range(1e-3..5e-2);

        let pm = GaussianMomentumParams::new(sigma, mass, temperature, gamma).unwrap();
        let ratio: f64 = rng.random_range(0.0..10.0);
        let t = (ratio * mass * sigma * sigma / (16.0 * temperature * gamma)).cbrt();
        let quad = decoherence_continuous(&gaussian_momentum_kernel(&pm, t)).unwrap();
        momentum = momentum.max((quad - gaussian_momentum_de(&pm, t).unwrap()).abs());

        let pp = GaussianPositionParams::new(sigma, mass, temperature, gamma).unwrap();
        let t = rng.random_range(0.0..10.0) * pp.tau_d();
        let quad = decoherence_continuous(&gaussian_position_kernel(&pp, t)).unwrap();
        position = position.max((quad - gaussian_position_de(&pp, t).unwrap()).abs());
    }
    let fig2 = figure2_series().unwrap();
    let row = fig2.times().iter().position(|&t| t == 1.0).unwrap();
    let target = 1.0 - 0.5f64.sqrt();
    let fig2_err = (fig2.analytic()[row] - target).abs().max((fig2.numeric()[row] - target).abs());
    outcome(
        momentum <= 1e-6 && position <= 1e-6 && fig2_err <= 1e-6,
        format!("momentum model {momentum:.1e}, position model {position:.1e}, D_e(tau_D) error {fig2_err:.1e}"),
    )
}

fn pde_oracle() -> Outcome {
    let start = Instant::now();
    let p = GaussianPositionParams::new(1.0, 1e4, 50.0, 1e-6).unwrap();
    let t = 1.0;
    let grid = MasterEquationGrid::new(8.0 * p.sigma, 256, 0.01, p.mass, p.gamma).unwrap();
    let initial = gaussian_position_kernel_normalized(&p, 0.0);
    let sol = match evolve_master_pde(&grid, &initial, t, CouplingModel::PositionCoupling { temperature: p.temperature }) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("integration failed: {e}")),
    };
    let dist = l2_distance(&sol.kernel, &gaussian_position_kernel_normalized(&p, t)).unwrap();
    let kappa = fit_offdiagonal_decay(&initial, &sol.kernel).unwrap() / t;
    let rate_err = (kappa / p.decoherence_rate() - 1.0).abs();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(120);
    outcome(
        dist <= 1e-3 && sol.trace_drift() <= 1e-4 && rate_err <= 1e-2 && elapsed < budget,
        format!(
            "256^2, {} steps: L2 {dist:.1e}, trace drift {:.1e}, decay rate {kappa:.5} vs {:.5}, {}",
            sol.steps,
            sol.trace_drift(),
            p.decoherence_rate(),
            within_budget(elapsed, budget)
        ),
    )
}

/// `D_e` at the flattest point among values between 10% and 90% of the final value.
fn plateau(values: &[f64]) -> f64 {
    let last = *values.last().unwrap();
    (1..values.len() - 1)
        .filter(|&i| values[i] > 0.1 * last && values[i] < 0.9 * last)
        .min_by(|&i, &j| (values[i + 1] - values[i - 1]).total_cmp(&(values[j + 1] - values[j - 1])))
        .map_or(f64::NAN, |i| values[i])
}

fn stern_gerlach() -> Outcome {
    let gamma = 1e-9;
    let lambda_t = (4.0 * PI * gamma / 1e-4).sqrt();
    let times: Vec<f64> = (0..=228).map(|i| 1e-2 * 10f64.powf(i as f64 / 24.0)).collect();
    let mut pass = true;
    let mut detail = Vec::new();
    for weight in [0.5, 0.7] {
        let p = SGModelParams::new(10.0, 0.3, 1.0, 1.0, gamma, lambda_t, weight).unwrap();
        let series = match de_timeline(&p, &times) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("p = {weight}: {e}")),
        };
        let expected = 2.0 * weight * (1.0 - weight);
        let (a, n) = (&series.analytic(), &series.numeric());
        let plateaus = (plateau(a), plateau(n));
        let monotone = [a, n].iter().all(|v| v.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        let last = n.last().unwrap().min(*a.last().unwrap());
        let t_ratio = times.last().unwrap() / p.tau_slow();
        let ok = (plateaus.0 - expected).abs() <= 0.02
            && (plateaus.1 - expected).abs() <= 0.02
            && monotone
            && last >= 0.99
            && series.max_discrepancy() <= 1e-5;
        pass &= ok;
        detail.push(format!(
            "p={weight}: plateau {:.4}/{:.4} (2p(1-p) = {expected:.2}), monotone {monotone}, D_e(t = {t_ratio:.0} tau_slow) {last:.4}",
            plateaus.0, plateaus.1
        ));
    }
    outcome(pass, detail.join("; "))
}

fn record(rho: &TwoPathDensity, blocker: Blocker, phase: f64) -> decolab::mach_zehnder::IntensityRecord {
    intensities(rho, MeasurementConfig { blocker, phase, shots: Shots::Infinite, seed: 0 }).unwrap()
}

fn mach_zehnder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut identity = 0.0f64;
    for _ in 0..1000 {
        let rho11: f64 = rng.random_range(0.0..=1.0);
        let bound = (rho11 * (1.0 - rho11)).sqrt();
        let rho = TwoPathDensity::new(rho11, 1.0 - rho11, rng.random_range(0.0..=bound), rng.random_range(-PI..PI)).unwrap();
        let i_diff = record(&rho, Blocker::BothOpen, rho.theta()).difference();
        let est = estimate_de(&record(&rho, Blocker::BlockLower, 0.0), &record(&rho, Blocker::BlockUpper, 0.0), i_diff).unwrap();
        identity = identity.max((est.raw - rho.de()).abs());
    }

    let noisy = TwoPathDensity::new(0.5, 0.5, 0.25, 0.0).unwrap();
    let mc = monte_carlo_protocol(&noisy, Shots::Finite(1_000_000), 200, 20_240_601, &default_phase_grid()).unwrap();
    let mc_err = (mc.mean - 0.75).abs();

    let mut cross = 0.0f64;
    for gamma in [0.0, 0.05, 0.5, 2.0] {
        let sb = SpinBosonParams::equal_superposition(1.3, gamma).unwrap();
        for i in 0..=40 {
            let t = 0.1 * i as f64;
            let rho = coherence_from_dephasing(gamma, 1.3, t).unwrap();
            let i_diff = record(&rho, Blocker::BothOpen, rho.theta()).difference();
            let est = estimate_de(&record(&rho, Blocker::BlockLower, 0.0), &record(&rho, Blocker::BlockUpper, 0.0), i_diff).unwrap();
            cross = cross.max((rho.de() - de_analytic(&sb, t)).abs()).max((est.raw - de_analytic(&sb, t)).abs());
        }
    }
    outcome(
        identity <= 1e-12 && mc_err <= 0.005 && cross <= 1e-12,
        format!(
            "identity {identity:.1e}, 200 x 1e6 shots: mean {:.5} (sd {:.4}), spin-boson cross-check {cross:.1e}",
            mc.mean, mc.std_dev
        ),
    )
}

fn figures_deterministic() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return outcome(false, format!("temp dir: {e}")),
    };
    let mut detail = Vec::new();
    let mut pass = true;
    for which in [1u8, 2] {
        let mut runs = Vec::new();
        for run in 0..2 {
            let path = dir.path().join(format!("fig{which}-{run}.dat"));
            let status = Command::new(env!("CARGO_BIN_EXE_decolab"))
                .args(["figures", &which.to_string(), "--out"])
                .arg(&path)
                .status();
            match (status, std::fs::read(&path)) {
                (Ok(s), Ok(bytes)) if s.success() => runs.push(bytes),
                _ => return outcome(false, format!("figure {which} run {run} failed")),
            }
        }
        let in_process = figure_text(which).unwrap();
        let same = runs[0] == runs[1] && runs[0] == in_process && !runs[0].is_empty();
        pass &= same;
        detail.push(format!("figure {which}: {} bytes, identical {same}", runs[0].len()));
    }
    outcome(pass, detail.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("measure identities", measure_identities),
        ("spin bath", spin_bath),
        ("spin boson", spin_boson),
        ("plane wave", plane_wave),
        ("Gaussian packets", gaussians),
        ("master-equation PDE", pde_oracle),
        ("Stern-Gerlach", stern_gerlach),
        ("Mach-Zehnder", mach_zehnder),
        ("figure data", figures_deterministic),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let Outcome { pass, detail } = check();
        if !pass {
            failures += 1;
        }
        println!("criterion {}: {} {name}: {detail}", i + 1, if pass { "PASS" } else { "FAIL" });
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
