//! Pure-dephasing spin-boson model.
//!
//! `∂ρ/∂t = −(iω_s/2)[σ_z, ρ] + γ σ_z ρ σ_z − γ ρ` (ħ = 1). Off-diagonal
//! elements decay as `e^{−2γt}`, populations are frozen.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::density::{validate_density, DensityMatrix, PureState, Tolerances};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBosonParams {
    pub omega_s: f64,
    pub gamma: f64,
    initial: DensityMatrix,
}

impl SpinBosonParams {
    pub fn new(omega_s: f64, gamma: f64, initial: DensityMatrix) -> Result<Self> {
        if !(gamma >= 0.0) || !omega_s.is_finite() {
            return Err(Error::InvalidParameter(format!("need gamma >= 0 and finite omega_s (got {gamma}, {omega_s})")));
        }
        if initial.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: initial.dim() });
        }
        let report = validate_density(&initial, &Tolerances::default());
        if !report.is_valid() {
            return Err(Error::InvalidDensity(report.to_string()));
        }
        Ok(Self { omega_s, gamma, initial })
    }

    /// Starts from `(|↑⟩ + |↓⟩)/√2`.
    pub fn equal_superposition(omega_s: f64, gamma: f64) -> Result<Self> {
        Self::new(omega_s, gamma, equal_superposition_state())
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }
}

fn equal_superposition_state() -> DensityMatrix {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PureState::new(vec![h, h]).expect("normalized").projector()
}

/// Closed-form reduced state for the equal-superposition initial condition.
pub fn analytic_rho(p: &SpinBosonParams, t: f64) -> Result<DensityMatrix> {
    if p.initial.max_abs_diff(&equal_superposition_state()) > 1e-10 {
        return Err(Error::Unsupported("closed form requires the equal-superposition initial state".into()));
    }
    let off = Complex64::from_polar(0.5 * (-2.0 * p.gamma * t).exp(), -p.omega_s * t);
    let half = Complex64::new(0.5, 0.0);
    DensityMatrix::new(DMatrix::from_row_slice(2, 2, &[half, off, off.conj(), half]))
}

/// `1 − e^{−4γt}`.
pub fn de_analytic(p: &SpinBosonParams, t: f64) -> f64 {
    -(-4.0 * p.gamma * t).exp_m1()
}

fn generator(p: &SpinBosonParams, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    // [σ_z, ρ]_jk = (s_j − s_k) ρ_jk and (σ_z ρ σ_z)_jk = s_j s_k ρ_jk with s = (+1, −1).
    let s = [1.0, -1.0];
    DMatrix::from_fn(2, 2, |j, k| {
        let commutator = Complex64::new(0.0, -0.5 * p.omega_s * (s[j] - s[k]));
        let dephasing = p.gamma * (s[j] * s[k] - 1.0);
        rho[(j, k)] * (commutator + dephasing)
    })
}

fn rk4_step(p: &SpinBosonParams, rho: &DMatrix<Complex64>, h: f64) -> DMatrix<Complex64> {
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let k1 = generator(p, rho);
    let k2 = generator(p, &(rho + &k1 * half));
    let k3 = generator(p, &(rho + &k2 * half));
    let k4 = generator(p, &(rho + &k3 * full));
    let two = Complex64::new(2.0, 0.0);
    rho + (k1 + k2 * two + k3 * two + k4) * Complex64::new(h / 6.0, 0.0)
}

/// Step control for [`integrate_master`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    /// Number of output samples including `t = 0` and `t = t_end`.
    pub output_points: usize,
    /// Target for the Richardson error estimate (max elementwise).
    pub tol: f64,
    pub initial_substeps: usize,
    pub max_refinements: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { output_points: 101, tol: 1e-9, initial_substeps: 1, max_refinements: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// RK4 steps per output interval of the accepted run.
    pub substeps: usize,
    /// Richardson estimate of the max elementwise error of the accepted run.
    pub error_estimate: f64,
}

/// Fixed-step RK4 with `substeps` steps per output interval.
pub fn integrate_fixed(p: &SpinBosonParams, t_end: f64, output_points: usize, substeps: usize) -> Trajectory {
    assert!(output_points >= 2 && substeps >= 1);
    let interval = t_end / (output_points - 1) as f64;
    let h = interval / substeps as f64;
    let mut rho = p.initial.matrix().clone();
    let mut times = Vec::with_capacity(output_points);
    let mut states = Vec::with_capacity(output_points);
    times.push(0.0);
    states.push(p.initial.clone());
    for k in 1..output_points {
        for _ in 0..substeps {
            rho = rk4_step(p, &rho, h);
        }
        times.push(interval * k as f64);
        states.push(DensityMatrix::new(rho.clone()).expect("2x2"));
    }
    Trajectory { times, states, substeps, error_estimate: f64::NAN }
}

/// Integrates the master equation on `[0, t_end]`, doubling the step count
/// until the Richardson estimate (`|y_h − y_{2h}| / 15`) is below `control.tol`.
pub fn integrate_master(p: &SpinBosonParams, t_end: f64, control: StepControl) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be positive, got {t_end}")));
    }
    let mut substeps = control.initial_substeps.max(1);
    let mut coarse = integrate_fixed(p, t_end, control.output_points, substeps);
    let mut previous_error = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..control.max_refinements {
        substeps *= 2;
        let mut fine = integrate_fixed(p, t_end, control.output_points, substeps);
        let diff = fine
            .states
            .iter()
            .zip(&coarse.states)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        let estimate = diff / 15.0;
        if estimate < control.tol {
            fine.error_estimate = estimate;
            return Ok(fine);
        }
        if estimate >= previous_error {
            stalled += 1;
            if stalled >= 2 {
                return Err(Error::StepControl(format!("error estimate stalled at {estimate:.3e}")));
            }
        } else {
            stalled = 0;
        }
        previous_error = estimate;
        coarse = fine;
    }
    Err(Error::StepControl(format!(
        "tolerance {:.1e} not reached after {} refinements (estimate {previous_error:.3e})",
        control.tol, control.max_refinements
    )))
}
