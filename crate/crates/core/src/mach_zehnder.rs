//! Measuring `D_e` of a two-path state in a Mach-Zehnder interferometer.
//!
//! Intensities are detection probabilities per source quanton. Blocking one
//! path gives equal intensities at both detectors whose sum is the other
//! path's population; with both paths open the detector difference is a
//! fringe of amplitude `2|ρ12|`. Together they determine `2(1 − tr ρ²)`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};

const POPULATION_TOL: f64 = 1e-12;

/// Two-path reduced state with `ρ12 = c e^{−iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPathDensity {
    rho11: f64,
    rho22: f64,
    coherence: f64,
    theta: f64,
}

impl TwoPathDensity {
    /// Fails unless `ρ11, ρ22 ≥ 0`, `ρ11 + ρ22 = 1` and `0 ≤ c ≤ sqrt(ρ11 ρ22)`.
    pub fn new(rho11: f64, rho22: f64, coherence: f64, theta: f64) -> Result<Self> {
        if !(rho11 >= 0.0 && rho22 >= 0.0) || (rho11 + rho22 - 1.0).abs() > POPULATION_TOL {
            return Err(Error::Unphysical(format!("populations ({rho11}, {rho22}) must be non-negative and sum to 1")));
        }
        let bound = (rho11 * rho22).sqrt();
        if !(coherence >= 0.0) || coherence > bound * (1.0 + POPULATION_TOL) + POPULATION_TOL {
            return Err(Error::Unphysical(format!("coherence {coherence} outside [0, {bound}]")));
        }
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("phase must be finite, got {theta}")));
        }
        Ok(Self { rho11, rho22, coherence, theta })
    }

    pub fn rho11(&self) -> f64 {
        self.rho11
    }

    pub fn rho22(&self) -> f64 {
        self.rho22
    }

    pub fn coherence(&self) -> f64 {
        self.coherence
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `2(1 − ρ11² − ρ22² − 2c²)`.
    pub fn de(&self) -> f64 {
        2.0 * (1.0 - self.rho11 * self.rho11 - self.rho22 * self.rho22 - 2.0 * self.coherence * self.coherence)
    }

    pub fn to_density_matrix(&self) -> DensityMatrix {
        let off = Complex64::from_polar(self.coherence, -self.theta);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(self.rho11, 0.0), off, off.conj(), Complex64::new(self.rho22, 0.0)],
        );
        DensityMatrix::new(m).expect("2x2")
    }
}

/// Equal-weight two-path state with `c = ½e^{−2γt}` and `θ = ω_s t`, the
/// pure-dephasing qubit read as an interferometer.
pub fn coherence_from_dephasing(gamma: f64, omega_s: f64, t: f64) -> Result<TwoPathDensity> {
    if !(gamma >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("need gamma >= 0 and t >= 0 (got {gamma}, {t})")));
    }
    TwoPathDensity::new(0.5, 0.5, 0.5 * (-2.0 * gamma * t).exp(), omega_s * t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Blocker {
    BothOpen,
    /// Removes the upper arm; the detectors see path 2 only.
    BlockUpper,
    /// Removes the lower arm; the detectors see path 1 only.
    BlockLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shots {
    Infinite,
    Finite(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementConfig {
    pub blocker: Blocker,
    pub phase: f64,
    pub shots: Shots,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityRecord {
    pub i_d1: f64,
    pub i_d2: f64,
    pub config: MeasurementConfig,
}

impl IntensityRecord {
    pub fn total(&self) -> f64 {
        self.i_d1 + self.i_d2
    }

    pub fn difference(&self) -> f64 {
        self.i_d1 - self.i_d2
    }
}

/// Detection probabilities `(P(D1), P(D2))` per source quanton.
pub fn detection_probabilities(rho: &TwoPathDensity, blocker: Blocker, phase: f64) -> (f64, f64) {
    match blocker {
        Blocker::BothOpen => {
            let fringe = 2.0 * rho.coherence * (phase - rho.theta).cos();
            (0.5 * (1.0 + fringe), 0.5 * (1.0 - fringe))
        }
        Blocker::BlockLower => (0.5 * rho.rho11, 0.5 * rho.rho11),
        Blocker::BlockUpper => (0.5 * rho.rho22, 0.5 * rho.rho22),
    }
}

fn sample_counts<R: Rng>(p1: f64, p2: f64, shots: u64, rng: &mut R) -> (u64, u64) {
    let p1 = p1.clamp(0.0, 1.0);
    let n1 = Binomial::new(shots, p1).expect("valid probability").sample(rng);
    let rest = shots - n1;
    let conditional = if p1 < 1.0 { (p2 / (1.0 - p1)).clamp(0.0, 1.0) } else { 0.0 };
    let n2 = Binomial::new(rest, conditional).expect("valid probability").sample(rng);
    (n1, n2)
}

fn measure_with<R: Rng>(rho: &TwoPathDensity, cfg: MeasurementConfig, rng: &mut R) -> IntensityRecord {
    let (p1, p2) = detection_probabilities(rho, cfg.blocker, cfg.phase);
    let (i_d1, i_d2) = match cfg.shots {
        Shots::Infinite => (p1, p2),
        Shots::Finite(n) => {
            let (n1, n2) = sample_counts(p1, p2, n, rng);
            (n1 as f64 / n as f64, n2 as f64 / n as f64)
        }
    };
    IntensityRecord { i_d1, i_d2, config: cfg }
}

/// Detector intensities; finite-shot runs draw per-quanton outcomes from a
/// generator seeded with `cfg.seed`.
pub fn intensities(rho: &TwoPathDensity, cfg: MeasurementConfig) -> Result<IntensityRecord> {
    if cfg.shots == Shots::Finite(0) {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(measure_with(rho, cfg, &mut rng))
}

fn tolerance_for(shots: Shots) -> f64 {
    match shots {
        Shots::Infinite => 1e-9,
        Shots::Finite(n) => 6.0 / (n as f64).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    pub raw: f64,
    /// `raw` clamped to `[0, 1]`.
    pub clamped: f64,
    /// False if `raw` lies outside `[−δ, 1 + δ]`.
    pub valid: bool,
    pub i_av1: f64,
    pub i_av2: f64,
    pub i_diff_max: f64,
}

/// `2[1 − I_av1² − I_av2² − ½ I_diff_max²]` where `I_av1` (`I_av2`) is the
/// summed intensity with the lower (upper) path blocked.
///
/// Fails with [`Error::NormalizationFailure`] if `I_av1 + I_av2` is not 1
/// within a shot-count-dependent tolerance.
pub fn estimate_de(block_lower: &IntensityRecord, block_upper: &IntensityRecord, i_diff_max: f64) -> Result<EstimateReport> {
    let i_av1 = block_lower.total();
    let i_av2 = block_upper.total();
    let tol = tolerance_for(block_lower.config.shots).max(tolerance_for(block_upper.config.shots));
    let sum = i_av1 + i_av2;
    if (sum - 1.0).abs() > tol {
        return Err(Error::NormalizationFailure { sum, tol });
    }
    let raw = 2.0 * (1.0 - i_av1 * i_av1 - i_av2 * i_av2 - 0.5 * i_diff_max * i_diff_max);
    Ok(EstimateReport {
        raw,
        clamped: raw.clamp(0.0, 1.0),
        valid: raw >= -tol && raw <= 1.0 + tol,
        i_av1,
        i_av2,
        i_diff_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScan {
    pub phi_star: f64,
    pub i_diff_max: f64,
    /// Set when no fringe rises above the noise floor; `phi_star` is then arbitrary.
    pub zero_amplitude: bool,
}

fn parabolic_vertex(phis: &[f64], values: &[f64], k: usize, wrap: bool) -> f64 {
    let n = phis.len();
    let (l, r) = if wrap {
        ((k + n - 1) % n, (k + 1) % n)
    } else if k == 0 || k + 1 == n {
        return phis[k];
    } else {
        (k - 1, k + 1)
    };
    let (x0, x2) = (unwrap_near(phis[l], phis[k]), unwrap_near(phis[r], phis[k]));
    let (x1, y0, y1, y2) = (phis[k], values[l], values[k], values[r]);
    let denom = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if denom == 0.0 {
        return x1;
    }
    let num = (x0 - x1).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    x1 - 0.5 * num / denom
}

fn unwrap_near(x: f64, reference: f64) -> f64 {
    x - TAU * ((x - reference) / TAU).round()
}

fn scan_with<R: Rng>(rho: &TwoPathDensity, phi_grid: &[f64], shots: Shots, rng: &mut R) -> PhaseScan {
    let diff2: Vec<f64> = phi_grid
        .iter()
        .map(|&phase| {
            let cfg = MeasurementConfig { blocker: Blocker::BothOpen, phase, shots, seed: 0 };
            measure_with(rho, cfg, rng).difference().powi(2)
        })
        .collect();
    let k = diff2.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("non-empty grid");
    let span = phi_grid.last().unwrap() - phi_grid[0];
    let step = if phi_grid.len() > 1 { span / (phi_grid.len() - 1) as f64 } else { TAU };
    let wrap = phi_grid.len() > 2 && (span + step - TAU).abs() < 1e-9 * TAU;
    let phi_star = parabolic_vertex(phi_grid, &diff2, k, wrap).rem_euclid(TAU);
    let cfg = MeasurementConfig { blocker: Blocker::BothOpen, phase: phi_star, shots, seed: 0 };
    let i_diff_max = measure_with(rho, cfg, rng).difference().abs();
    let floor = match shots {
        Shots::Infinite => 1e-20,
        Shots::Finite(n) => 16.0 / n as f64,
    };
    PhaseScan { phi_star, i_diff_max, zero_amplitude: diff2[k] <= floor }
}

/// Uniform grid of `n` phases covering `[0, 2π)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| TAU * i as f64 / n as f64).collect()
}

/// Maximizes `I_diff²` over `phi_grid` with parabolic refinement, then
/// measures `|I_diff|` at the refined phase.
pub fn phase_scan(rho: &TwoPathDensity, phi_grid: &[f64], shots: Shots, seed: u64) -> Result<PhaseScan> {
    if phi_grid.is_empty() {
        return Err(Error::InvalidParameter("phase grid is empty".into()));
    }
    if shots == Shots::Finite(0) {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(scan_with(rho, phi_grid, shots, &mut rng))
}

/// Full protocol: both blocked runs, a phase scan, and the estimate.
pub fn run_protocol(rho: &TwoPathDensity, phi_grid: &[f64], shots: Shots, seed: u64) -> Result<EstimateReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    protocol_with(rho, phi_grid, shots, &mut rng)
}

fn protocol_with<R: Rng>(rho: &TwoPathDensity, phi_grid: &[f64], shots: Shots, rng: &mut R) -> Result<EstimateReport> {
    let blocked = |blocker, rng: &mut R| measure_with(rho, MeasurementConfig { blocker, phase: 0.0, shots, seed: 0 }, rng);
    let lower = blocked(Blocker::BlockLower, rng);
    let upper = blocked(Blocker::BlockUpper, rng);
    let scan = scan_with(rho, phi_grid, shots, rng);
    estimate_de(&lower, &upper, scan.i_diff_max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloSummary {
    pub true_de: f64,
    pub mean: f64,
    pub std_dev: f64,
    /// Empirical 2.5% and 97.5% quantiles of the raw estimates.
    pub interval: (f64, f64),
    /// Standard deviation predicted by propagating binomial counting noise.
    pub predicted_std_dev: f64,
    pub estimates: Vec<f64>,
}

/// Binomial error propagation for the estimator at `shots` quantons per run.
pub fn predicted_std_dev(rho: &TwoPathDensity, shots: u64) -> f64 {
    let n = shots as f64;
    let (a, b) = (rho.rho11, rho.rho22);
    let d = 2.0 * rho.coherence;
    let (p1, p2) = (0.5 * (1.0 + d), 0.5 * (1.0 - d));
    let var_a = a * (1.0 - a) / n;
    let var_b = b * (1.0 - b) / n;
    let var_d = 4.0 * p1 * p2 / n;
    (16.0 * a * a * var_a + 16.0 * b * b * var_b + 4.0 * d * d * var_d).sqrt()
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Repeats [`run_protocol`] `trials` times. Trial `k` draws from stream `k`
/// of a generator seeded with `seed`, so results do not depend on scheduling.
pub fn monte_carlo_protocol(rho: &TwoPathDensity, shots: Shots, trials: usize, seed: u64, phi_grid: &[f64]) -> Result<MonteCarloSummary> {
    if trials == 0 || shots == Shots::Finite(0) {
        return Err(Error::InvalidParameter("need at least one trial and one shot".into()));
    }
    let estimates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            protocol_with(rho, phi_grid, shots, &mut rng).map(|r| r.raw)
        })
        .collect::<Result<_>>()?;
    let m = trials as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let var = if trials > 1 { estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0) } else { 0.0 };
    let mut sorted = estimates.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(MonteCarloSummary {
        true_de: rho.de(),
        mean,
        std_dev: var.sqrt(),
        interval: (quantile(&sorted, 0.025), quantile(&sorted, 0.975)),
        predicted_std_dev: match shots {
            Shots::Infinite => 0.0,
            Shots::Finite(n) => predicted_std_dev(rho, n),
        },
        estimates,
    })
}

/// Phase grid used by the command-line protocol and the Monte Carlo defaults.
pub fn default_phase_grid() -> Vec<f64> {
    phase_grid(256)
}
