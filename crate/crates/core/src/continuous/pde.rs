//! Finite-difference integration of the high-temperature master equation in
//! the position representation (ħ = 1):
//!
//! ```text
//! ∂ρ/∂t = (i/2m)(∂²_x − ∂²_x')ρ − γ(x − x')(∂_x − ∂_x')ρ − Λ(x − x')²ρ
//! ```
//!
//! The `Λ` term is applied exactly in a Strang split; the kinetic and
//! friction terms are advanced with RK4 on fourth-order central differences.
//! Only the lower triangle is evolved, the upper triangle is its conjugate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::thermal_wavelength;
use crate::error::{Error, Result};
use crate::kernel::{grid_inner, trapezoid_weights, ContinuousKernel, GridSamples, KernelRule};

/// How the environment enters; both forms reduce to the same `Λ(x − x')²` term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingModel {
    /// `Λ = 4πγ / λ_T²`; `λ_T = ∞` switches the decoherence term off.
    MomentumCoupling { lambda_t: f64 },
    /// `Λ = 2mγT`.
    PositionCoupling { temperature: f64 },
}

impl CouplingModel {
    pub fn decoherence_coefficient(&self, mass: f64, gamma: f64) -> f64 {
        match *self {
            CouplingModel::MomentumCoupling { lambda_t } => 4.0 * PI * gamma / (lambda_t * lambda_t),
            CouplingModel::PositionCoupling { temperature } => 2.0 * mass * gamma * temperature,
        }
    }

    /// Momentum-coupling form with the thermal wavelength of `(mass, temperature)`.
    pub fn momentum_at_temperature(mass: f64, temperature: f64) -> Self {
        CouplingModel::MomentumCoupling { lambda_t: thermal_wavelength(mass, temperature) }
    }
}

/// Square grid `[−X, X]²` with `points` samples per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterEquationGrid {
    pub half_width: f64,
    pub points: usize,
    /// Requested step; the actual step divides `t_end` evenly and never exceeds it.
    pub dt: f64,
    pub mass: f64,
    pub gamma: f64,
    /// Fraction of the RK4 imaginary-axis limit allowed.
    pub stability_factor: f64,
}

/// Fraction of `∫∫|ρ|²` allowed within three grid points of the boundary.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;
const BOUNDARY_BAND: usize = 3;

impl MasterEquationGrid {
    pub fn new(half_width: f64, points: usize, dt: f64, mass: f64, gamma: f64) -> Result<Self> {
        if !(half_width > 0.0) || points < 9 || !(dt > 0.0) || !(mass > 0.0) || !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bad grid: X={half_width}, points={points}, dt={dt}, m={mass}, gamma={gamma}"
            )));
        }
        Ok(Self { half_width, points, dt, mass, gamma, stability_factor: 0.9 })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.half_width + self.spacing() * i as f64
    }

    /// Largest stable step: `factor · 2√2 / ρ(L)`, where `ρ(L)` bounds the
    /// spectral radius of the discretized kinetic plus friction operator.
    pub fn stability_limit(&self) -> f64 {
        let h = self.spacing();
        let kinetic = 16.0 / (3.0 * self.mass * h * h);
        // Max |symbol| of the fourth-order first-derivative stencil is ≈ 1.3722/h.
        let friction = 2.0 * self.gamma * (2.0 * self.half_width) * 1.3722 / h;
        self.stability_factor * 2.0 * 2f64.sqrt() / (kinetic + friction)
    }
}

#[derive(Debug, Clone)]
pub struct PdeSolution {
    pub kernel: ContinuousKernel,
    pub steps: usize,
    pub dt: f64,
    pub initial_trace: f64,
    pub final_trace: f64,
}

impl PdeSolution {
    pub fn trace_drift(&self) -> f64 {
        (self.final_trace - self.initial_trace).abs()
    }
}

struct Workspace {
    n: usize,
    h: f64,
    xs: Vec<f64>,
    kinetic: Complex64,
    gamma: f64,
}

impl Workspace {
    fn get(&self, rho: &[Complex64], i: isize, j: isize) -> Complex64 {
        let n = self.n as isize;
        if i < 0 || j < 0 || i >= n || j >= n {
            return Complex64::new(0.0, 0.0);
        }
        let (i, j) = (i as usize, j as usize);
        if i >= j {
            rho[i * self.n + j]
        } else {
            rho[j * self.n + i].conj()
        }
    }

    // Lower-triangle right-hand side; the upper triangle is left untouched.
    fn rhs(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.n;
        let h = self.h;
        let d2 = 1.0 / (12.0 * h * h);
        let d1 = 1.0 / (12.0 * h);
        out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            let ii = i as isize;
            for (j, slot) in row.iter_mut().enumerate().take(i + 1) {
                let jj = j as isize;
                let c = self.get(rho, ii, jj);
                let xm2 = self.get(rho, ii - 2, jj);
                let xm1 = self.get(rho, ii - 1, jj);
                let xp1 = self.get(rho, ii + 1, jj);
                let xp2 = self.get(rho, ii + 2, jj);
                let ym2 = self.get(rho, ii, jj - 2);
                let ym1 = self.get(rho, ii, jj - 1);
                let yp1 = self.get(rho, ii, jj + 1);
                let yp2 = self.get(rho, ii, jj + 2);
                let lap_x = (-xm2 + xm1 * 16.0 - c * 30.0 + xp1 * 16.0 - xp2) * d2;
                let lap_y = (-ym2 + ym1 * 16.0 - c * 30.0 + yp1 * 16.0 - yp2) * d2;
                let dx = (xm2 - xm1 * 8.0 + xp1 * 8.0 - xp2) * d1;
                let dy = (ym2 - ym1 * 8.0 + yp1 * 8.0 - yp2) * d1;
                let r = self.xs[i] - self.xs[j];
                *slot = self.kinetic * (lap_x - lap_y) - (dx - dy) * (self.gamma * r);
            }
        });
    }
}

fn apply_decoherence(rho: &mut [Complex64], xs: &[f64], lambda: f64, dt: f64) {
    let n = xs.len();
    rho.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for j in 0..=i {
            let r = xs[i] - xs[j];
            row[j] *= (-lambda * r * r * dt).exp();
        }
    });
}

fn mirror(lower: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut full = lower.to_vec();
    for i in 0..n {
        for j in (i + 1)..n {
            full[i * n + j] = lower[j * n + i].conj();
        }
    }
    full
}

fn boundary_fraction(values: &[Complex64], n: usize) -> f64 {
    let mut edge = 0.0;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            let w = values[i * n + j].norm_sqr();
            total += w;
            let near = |k: usize| k < BOUNDARY_BAND || k >= n - BOUNDARY_BAND;
            if near(i) || near(j) {
                edge += w;
            }
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

fn diagonal_trace(values: &[Complex64], n: usize, h: f64) -> f64 {
    trapezoid_weights(n, h).iter().enumerate().map(|(i, w)| w * values[i * n + i].re).sum()
}

fn check_boundary(values: &[Complex64], n: usize) -> Result<()> {
    let fraction = boundary_fraction(values, n);
    if fraction > BOUNDARY_TOLERANCE {
        return Err(Error::BoundaryContamination { fraction });
    }
    Ok(())
}

/// Evolves `initial` (sampled onto the grid) to `t_end`.
///
/// Fails with [`Error::StabilityViolation`] if the requested step exceeds the
/// stability limit, and with [`Error::BoundaryContamination`] if the kernel
/// carries weight near the grid edge at the start or end.
pub fn evolve_master_pde(
    grid: &MasterEquationGrid,
    initial: &ContinuousKernel,
    t_end: f64,
    model: CouplingModel,
) -> Result<PdeSolution> {
    if !(t_end >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_end must be non-negative, got {t_end}")));
    }
    let limit = grid.stability_limit();
    if grid.dt > limit {
        return Err(Error::StabilityViolation { dt: grid.dt, limit });
    }
    let n = grid.points;
    let h = grid.spacing();
    let xs: Vec<f64> = (0..n).map(|i| grid.coordinate(i)).collect();
    let lambda = model.decoherence_coefficient(grid.mass, grid.gamma);

    let mut rho: Vec<Complex64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            if i >= j {
                initial.eval(xs[i], xs[j])
            } else {
                initial.eval(xs[j], xs[i]).conj()
            }
        })
        .collect();
    check_boundary(&rho, n)?;
    let initial_trace = diagonal_trace(&rho, n, h);

    let steps = if t_end == 0.0 { 0 } else { (t_end / grid.dt).ceil().max(1.0) as usize };
    let dt = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let ws = Workspace { n, h, xs: xs.clone(), kinetic: Complex64::new(0.0, 0.5 / grid.mass), gamma: grid.gamma };

    let zero = Complex64::new(0.0, 0.0);
    let mut k1 = vec![zero; n * n];
    let mut k2 = vec![zero; n * n];
    let mut k3 = vec![zero; n * n];
    let mut k4 = vec![zero; n * n];
    let mut stage = vec![zero; n * n];
    let combine = |stage: &mut [Complex64], base: &[Complex64], k: &[Complex64], a: f64| {
        stage.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..=i {
                row[j] = base[i * n + j] + k[i * n + j] * a;
            }
        });
    };
    for _ in 0..steps {
        apply_decoherence(&mut rho, &xs, lambda, 0.5 * dt);
        ws.rhs(&rho, &mut k1);
        combine(&mut stage, &rho, &k1, 0.5 * dt);
        ws.rhs(&stage, &mut k2);
        combine(&mut stage, &rho, &k2, 0.5 * dt);
        ws.rhs(&stage, &mut k3);
        combine(&mut stage, &rho, &k3, dt);
        ws.rhs(&stage, &mut k4);
        rho.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for j in 0..=i {
                let k = i * n + j;
                row[j] += (k1[k] + (k2[k] + k3[k]) * 2.0 + k4[k]) * (dt / 6.0);
            }
        });
        apply_decoherence(&mut rho, &xs, lambda, 0.5 * dt);
    }

    let values = mirror(&rho, n);
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::StabilityViolation { dt, limit });
    }
    check_boundary(&values, n)?;
    let final_trace = diagonal_trace(&values, n, h);
    let kernel = ContinuousKernel::from_grid((-grid.half_width, grid.half_width), GridSamples { n, values })?;
    Ok(PdeSolution { kernel, steps, dt, initial_trace, final_trace })
}

/// `sqrt(∫∫|a − b|²)` on the grid of `a`, with `b` sampled at the grid points.
pub fn l2_distance(a: &ContinuousKernel, b: &ContinuousKernel) -> Result<f64> {
    let KernelRule::Grid(ga) = a.rule() else {
        return Err(Error::Unsupported("l2_distance needs a grid kernel as first argument".into()));
    };
    let (lo, _) = a.domain();
    let h = a.grid_spacing().expect("grid");
    let n = ga.n;
    let diff = GridSamples {
        n,
        values: (0..n * n)
            .into_par_iter()
            .map(|k| ga.values[k] - b.eval(lo + h * (k / n) as f64, lo + h * (k % n) as f64))
            .collect(),
    };
    Ok(grid_inner(&diff, &diff, h).re.max(0.0).sqrt())
}

/// Least-squares fit of `ln|ρ_t(x,−x)| − ln|ρ_0(x,−x)| = c − κ (2x)²` along the
/// anti-diagonal; returns `κ`. Points below `1e-12` of the peak are skipped.
pub fn fit_offdiagonal_decay(initial: &ContinuousKernel, evolved: &ContinuousKernel) -> Result<f64> {
    let KernelRule::Grid(g) = evolved.rule() else {
        return Err(Error::Unsupported("fit_offdiagonal_decay needs a grid kernel".into()));
    };
    let (lo, _) = evolved.domain();
    let h = evolved.grid_spacing().expect("grid");
    let n = g.n;
    let peak0 = (0..n).map(|i| initial.eval(lo + h * i as f64, -(lo + h * i as f64)).norm()).fold(0.0, f64::max);
    let peak = (0..n).map(|i| g.at(i, n - 1 - i).norm()).fold(0.0, f64::max);
    let mut points = Vec::new();
    for i in 0..n {
        let x = lo + h * i as f64;
        let a0 = initial.eval(x, -x).norm();
        let at = g.at(i, n - 1 - i).norm();
        if a0 > 1e-12 * peak0 && at > 1e-12 * peak {
            points.push((4.0 * x * x, (at / a0).ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InvalidParameter("too few anti-diagonal points above threshold".into()));
    }
    let m = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let (mx, my) = (sx / m, sy / m);
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |acc, p| (acc.0 + (p.0 - mx) * (p.1 - my), acc.1 + (p.0 - mx).powi(2)));
    Ok(-sxy / sxx)
}
