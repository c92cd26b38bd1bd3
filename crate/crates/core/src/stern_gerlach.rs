//! Spin ⊗ position decoherence in a Stern-Gerlach geometry.
//!
//! The state is a 2×2 block matrix of position kernels. [`two_timescale_state`]
//! is a phenomenological model: a Gaussian packet splits into two packets
//! at `±d(t)/2` correlated with `|±⟩`; the spin coherence dies on the fast
//! scale set by `d(t)` and the packets themselves decohere on the slow scale
//! set by their width.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{trapezoid_weights, ContinuousKernel, Separable};
use crate::series::{DecoherenceSeries, SeriesRow};

/// Tolerance on `tr ρ_{++} + tr ρ_{−−} = 1`.
pub const BLOCK_TRACE_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HybridBlockState {
    pp: ContinuousKernel,
    pm: ContinuousKernel,
    mp: ContinuousKernel,
    mm: ContinuousKernel,
}

impl HybridBlockState {
    /// Checks a common domain, the block Hermiticity relation on a spot grid,
    /// and unit total trace.
    pub fn new(pp: ContinuousKernel, pm: ContinuousKernel, mp: ContinuousKernel, mm: ContinuousKernel) -> Result<Self> {
        let domain = pp.domain();
        if [&pm, &mp, &mm].iter().any(|k| k.domain() != domain) {
            return Err(Error::InvalidState("blocks must share one domain".into()));
        }
        let (lo, hi) = domain;
        let n = 17;
        let h = (hi - lo) / (n - 1) as f64;
        let scale = [&pp, &mm]
            .iter()
            .flat_map(|k| (0..n).map(move |i| k.eval(lo + h * i as f64, lo + h * i as f64).norm()))
            .fold(0.0, f64::max)
            .max(1e-300);
        for i in 0..n {
            for j in 0..n {
                let (x, xp) = (lo + h * i as f64, lo + h * j as f64);
                let dev = (mp.eval(x, xp) - pm.eval(xp, x).conj()).norm();
                if dev > 1e-10 * scale {
                    return Err(Error::InvalidState(format!("ρ_−+ is not the adjoint of ρ_+− (deviation {dev:.3e})")));
                }
            }
        }
        let total = pp.trace()? + mm.trace()?;
        if (total - 1.0).abs() > BLOCK_TRACE_TOL {
            return Err(Error::InvalidState(format!("block traces sum to {total}, expected 1")));
        }
        Ok(Self { pp, pm, mp, mm })
    }

    /// Builds `ρ_−+(x,x') = conj(ρ_+−(x',x))` from `ρ_+−`.
    pub fn from_upper(pp: ContinuousKernel, pm: ContinuousKernel, mm: ContinuousKernel) -> Result<Self> {
        let source = pm.clone();
        let mp = ContinuousKernel::analytic(move |x, xp| source.eval(xp, x).conj(), pm.domain())
            .with_quadrature(*pm.quadrature());
        Self::new(pp, pm, mp, mm)
    }

    pub fn block(&self, s: usize, sp: usize) -> &ContinuousKernel {
        match (s, sp) {
            (0, 0) => &self.pp,
            (0, 1) => &self.pm,
            (1, 0) => &self.mp,
            (1, 1) => &self.mm,
            _ => panic!("spin index out of range"),
        }
    }

    /// Smallest eigenvalue of the `2n × 2n` Nyström discretization
    /// `sqrt(w_i w_j) ρ_{ss'}(x_i, x_j)` on a uniform trapezoid grid.
    pub fn min_eigenvalue(&self, n: usize) -> f64 {
        let (lo, hi) = self.pp.domain();
        let h = (hi - lo) / (n - 1) as f64;
        let w = trapezoid_weights(n, h);
        let m = DMatrix::from_fn(2 * n, 2 * n, |a, b| {
            let (s, i) = (a / n, a % n);
            let (sp, j) = (b / n, b % n);
            self.block(s, sp).eval(lo + h * i as f64, lo + h * j as f64) * (w[i] * w[j]).sqrt()
        });
        let herm = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `1 − ∫∫(|ρ_{++}|² + |ρ_{−−}|²) − 2∫∫|ρ_{+−}|²`.
pub fn block_de(state: &HybridBlockState) -> Result<f64> {
    let diag = state.pp.hilbert_schmidt_sq()? + state.mm.hilbert_schmidt_sq()?;
    let off = state.pm.hilbert_schmidt_sq()?;
    Ok(1.0 - diag - 2.0 * off)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SGModelParams {
    /// Field gradient times magnetic moment.
    pub epsilon: f64,
    /// Level splitting.
    pub lambda: f64,
    pub mass: f64,
    /// Initial packet `(πσ²)^{−1/4} e^{−x²/2σ²}`.
    pub sigma: f64,
    pub gamma: f64,
    pub lambda_t: f64,
    /// Weight of `|+⟩` in the initial spin state `√p|+⟩ + √(1−p)|−⟩`.
    pub spin_up_weight: f64,
}

impl SGModelParams {
    pub fn new(epsilon: f64, lambda: f64, mass: f64, sigma: f64, gamma: f64, lambda_t: f64, spin_up_weight: f64) -> Result<Self> {
        for (name, v) in [("epsilon", epsilon), ("mass", mass), ("sigma", sigma), ("lambda_t", lambda_t)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(gamma >= 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("need gamma >= 0 and finite lambda (got {gamma}, {lambda})")));
        }
        if !(0.0..=1.0).contains(&spin_up_weight) {
            return Err(Error::InvalidParameter(format!("spin_up_weight must lie in [0, 1], got {spin_up_weight}")));
        }
        Ok(Self { epsilon, lambda, mass, sigma, gamma, lambda_t, spin_up_weight })
    }

    /// `Λ = 4πγ / λ_T²`.
    pub fn decoherence_rate(&self) -> f64 {
        4.0 * PI * self.gamma / (self.lambda_t * self.lambda_t)
    }

    /// `d(t) = ε t² / m`.
    pub fn separation(&self, t: f64) -> f64 {
        self.epsilon * t * t / self.mass
    }

    /// `λ_T² / (4πγ d(t)²)`.
    pub fn tau_fast(&self, t: f64) -> f64 {
        1.0 / (self.decoherence_rate() * self.separation(t).powi(2))
    }

    /// `λ_T² / (16πγσ²)`.
    pub fn tau_slow(&self) -> f64 {
        1.0 / (4.0 * self.decoherence_rate() * self.sigma * self.sigma)
    }

    /// `exp(−∫₀ᵗ dt'/τ_fast(t')) = exp(−Λ ε² t⁵ / 5m²)`.
    pub fn suppression(&self, t: f64) -> f64 {
        (-self.decoherence_rate() * (self.epsilon / self.mass).powi(2) * t.powi(5) / 5.0).exp()
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")))
    }
}

/// Block state of the two-packet model at time `t`.
///
/// `ρ_{ss'}(x,x') = a_s a_{s'} χ_{ss'} ψ_s(x) ψ_{s'}*(x') e^{−Λt((x − c_s) − (x' − c_{s'}))²}`
/// with `ψ_s(x) = φ(x − c_s) e^{i s ε t x}`, `c_± = ±d(t)/2`, `χ_{±±} = 1` and
/// `χ_{+−} = S(t) e^{2iλt}`.
pub fn two_timescale_state(p: &SGModelParams, t: f64) -> Result<HybridBlockState> {
    build_two_packet(p, t, false)
}

/// Same state after the spin-conditional translation `x → x − c_s`, so every
/// block lives on `[−12σ, 12σ]` whatever the separation.
///
/// The translation is unitary on spin ⊗ position: traces, Hilbert-Schmidt
/// norms and the spectrum are those of [`two_timescale_state`]. The lab-frame
/// kernels lose all resolution once `d(t)/σ` approaches `1/f64::EPSILON`; these do not.
pub fn two_timescale_state_comoving(p: &SGModelParams, t: f64) -> Result<HybridBlockState> {
    build_two_packet(p, t, true)
}

fn build_two_packet(p: &SGModelParams, t: f64, comoving: bool) -> Result<HybridBlockState> {
    check_time(t)?;
    let s2 = p.sigma * p.sigma;
    let kappa = p.decoherence_rate() * t;
    let half_d = 0.5 * p.separation(t);
    let kick = p.epsilon * t;
    let amps = [p.spin_up_weight.sqrt(), (1.0 - p.spin_up_weight).sqrt()];
    let signs = [1.0, -1.0];
    let coherence = Complex64::from_polar(p.suppression(t), 2.0 * p.lambda * t);
    let x_max = if comoving { 12.0 * p.sigma } else { half_d + 12.0 * p.sigma };
    let domain = (-x_max, x_max);
    let norm = 1.0 / (PI * s2).sqrt();

    let block = |s: usize, sp: usize| -> ContinuousKernel {
        // ks·c_s − ks'·c_s' vanishes for every block, so the comoving frame carries no constant phase.
        let (cs, csp) = if comoving { (0.0, 0.0) } else { (signs[s] * half_d, signs[sp] * half_d) };
        let (ks, ksp) = (signs[s] * kick, signs[sp] * kick);
        let chi = if s == sp { Complex64::new(1.0, 0.0) } else if s == 0 { coherence } else { coherence.conj() };
        let weight = amps[s] * amps[sp];
        let prefactor = chi * weight * norm;
        let kernel = ContinuousKernel::analytic(
            move |x, xp| {
                let (u, v) = (x - cs, xp - csp);
                let envelope = (-(u * u + v * v) / (2.0 * s2) - kappa * (u - v).powi(2)).exp();
                prefactor * Complex64::from_polar(envelope, ks * x - ksp * xp)
            },
            domain,
        );
        // In shifted coordinates R = u + v, r = u − v the modulus squared factorizes.
        let w2 = (weight * norm * chi.norm()).powi(2);
        let a_rel = 1.0 / (2.0 * s2) + 2.0 * kappa;
        let center_half = 10.0 * (2.0 * s2).sqrt();
        let relative_half = 10.0 / a_rel.sqrt();
        let kernel = if s == sp { kernel.with_diagonal_support(cs - 12.0 * p.sigma, cs + 12.0 * p.sigma) } else { kernel };
        kernel.with_separable(Separable {
            center: Arc::new(move |big_r| w2 * (-big_r * big_r / (2.0 * s2)).exp()),
            center_range: (-center_half, center_half),
            relative: Arc::new(move |r| (-a_rel * r * r).exp()),
            relative_range: (-relative_half, relative_half),
        })
    };
    HybridBlockState::new(block(0, 0), block(0, 1), block(1, 0), block(1, 1))
}

/// `1 − (p² + (1−p)² + 2p(1−p)S²) / sqrt(1 + t/τ_slow)` for the two-packet model.
pub fn closed_form_de(p: &SGModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let w = p.spin_up_weight;
    let s = p.suppression(t);
    let purity = (w * w + (1.0 - w).powi(2) + 2.0 * w * (1.0 - w) * s * s) / (1.0 + t / p.tau_slow()).sqrt();
    Ok(1.0 - purity)
}

/// `D_e` on the given times: closed form in the analytic column, block
/// quadrature of the comoving state in the numeric column, with
/// `suppression` and `separation`.
pub fn de_timeline(p: &SGModelParams, times: &[f64]) -> Result<DecoherenceSeries> {
    let rows: Vec<Result<SeriesRow>> = times
        .par_iter()
        .map(|&t| {
            let analytic = closed_form_de(p, t)?;
            let numeric = block_de(&two_timescale_state_comoving(p, t)?)?;
            Ok(SeriesRow { t, analytic, numeric, aux: vec![p.suppression(t), p.separation(t)] })
        })
        .collect();
    let mut series = DecoherenceSeries::new(vec!["suppression".into(), "separation".into()]);
    for row in rows {
        series.push(row?)?;
    }
    Ok(series)
}

/// First time at which `values` reaches `level`, linearly interpolated.
pub fn first_crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    if values.first().is_some_and(|&v| v >= level) {
        return times.first().copied();
    }
    times.windows(2).zip(values.windows(2)).find_map(|(t, v)| {
        (v[0] < level && v[1] >= level).then(|| t[0] + (level - v[0]) / (v[1] - v[0]) * (t[1] - t[0]))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(center: f64, sigma: f64) -> impl Fn(f64) -> Complex64 + Send + Sync + Clone + 'static {
        let norm = (PI * sigma * sigma).powf(-0.25);
        move |x: f64| Complex64::new(norm * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp(), 0.0)
    }

    fn scaled(psi: impl Fn(f64) -> Complex64 + Send + Sync + Clone + 'static, phi: impl Fn(f64) -> Complex64 + Send + Sync + 'static, c: Complex64) -> ContinuousKernel {
        ContinuousKernel::analytic(move |x, xp| c * psi(x) * phi(xp).conj(), (-12.0, 12.0))
    }

    fn zero() -> ContinuousKernel {
        ContinuousKernel::analytic(|_, _| Complex64::new(0.0, 0.0), (-12.0, 12.0))
    }

    #[test]
    fn pure_product_has_zero_measure() {
        let g = gaussian(0.0, 1.0);
        let state = HybridBlockState::from_upper(scaled(g.clone(), g, Complex64::new(1.0, 0.0)), zero(), zero()).unwrap();
        assert!(block_de(&state).unwrap().abs() < 1e-9);
    }

    #[test]
    fn incoherent_mixture_of_pure_blocks() {
        for p in [0.5, 0.7, 0.9] {
            let (a, b) = (gaussian(-3.0, 1.0), gaussian(3.0, 1.0));
            let state = HybridBlockState::from_upper(
                scaled(a.clone(), a, Complex64::new(p, 0.0)),
                zero(),
                scaled(b.clone(), b, Complex64::new(1.0 - p, 0.0)),
            )
            .unwrap();
            assert!((block_de(&state).unwrap() - 2.0 * p * (1.0 - p)).abs() < 1e-8, "p={p}");
        }
    }

    #[test]
    fn spin_matrix_times_fixed_packet_matches_finite_purity() {
        let g = gaussian(0.5, 0.8);
        let m = [[0.6, 0.1], [0.1, 0.4]];
        let im = Complex64::new(0.15, 0.2);
        let state = HybridBlockState::from_upper(
            scaled(g.clone(), g.clone(), Complex64::new(m[0][0], 0.0)),
            scaled(g.clone(), g.clone(), im),
            scaled(g.clone(), g, Complex64::new(m[1][1], 0.0)),
        )
        .unwrap();
        let expected = 1.0 - (0.36 + 0.16 + 2.0 * im.norm_sqr());
        assert!((block_de(&state).unwrap() - expected).abs() < 1e-10);
    }

    #[test]
    fn rejects_broken_blocks() {
        let g = gaussian(0.0, 1.0);
        let half = scaled(g.clone(), g.clone(), Complex64::new(0.5, 0.0));
        assert!(HybridBlockState::from_upper(half.clone(), zero(), zero()).is_err());
        let off = scaled(g.clone(), g.clone(), Complex64::new(0.0, 0.3));
        assert!(HybridBlockState::new(half.clone(), off.clone(), off, half).is_err());
    }

    fn params(p: f64) -> SGModelParams {
        // Λ = 1e-4, τ_slow = 2500.
        let gamma = 1e-9;
        let lambda_t = (4.0 * PI * gamma / 1e-4).sqrt();
        SGModelParams::new(10.0, 0.3, 1.0, 1.0, gamma, lambda_t, p).unwrap()
    }

    #[test]
    fn time_scales() {
        let p = params(0.5);
        assert!((p.decoherence_rate() - 1e-4).abs() < 1e-16);
        assert!((p.tau_slow() - 2500.0).abs() < 1e-9);
        let t = 1.0;
        assert!(p.separation(t) > 2.0 * p.sigma);
        assert!(p.tau_fast(t) < p.tau_slow());
        assert_eq!(p.suppression(0.0), 1.0);
    }

    #[test]
    fn model_state_matches_closed_form_and_is_positive() {
        let p = params(0.7);
        for t in [0.0, 0.5, 2.0, 5.0, 300.0] {
            let state = two_timescale_state(&p, t).unwrap();
            let numeric = block_de(&state).unwrap();
            assert!((numeric - closed_form_de(&p, t).unwrap()).abs() < 1e-8, "t={t}");
        }
        assert!(block_de(&two_timescale_state(&p, 0.0).unwrap()).unwrap().abs() < 1e-9);
        let state = two_timescale_state(&p, 1.0).unwrap();
        assert!(state.min_eigenvalue(48) > -1e-10);
    }

    #[test]
    fn comoving_frame_is_unitarily_equivalent() {
        let p = params(0.7);
        for t in [0.0, 0.3, 1.0, 4.0, 300.0] {
            let lab = block_de(&two_timescale_state(&p, t).unwrap()).unwrap();
            let moving = block_de(&two_timescale_state_comoving(&p, t).unwrap()).unwrap();
            assert!((lab - moving).abs() < 1e-10, "t={t}");
        }
        let t = 0.4;
        let lab = two_timescale_state(&p, t).unwrap().min_eigenvalue(40);
        let moving = two_timescale_state_comoving(&p, t).unwrap();
        assert!(moving.min_eigenvalue(40) > -1e-10 && lab > -1e-10);
        // Lab-frame coordinates cannot resolve σ at this separation.
        let far = 3e7;
        assert!(p.separation(far) * f64::EPSILON > p.sigma);
        let d = block_de(&two_timescale_state_comoving(&p, far).unwrap()).unwrap();
        assert!((d - closed_form_de(&p, far).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn zero_coupling_gives_flat_timeline() {
        let mut p = params(0.5);
        p.gamma = 0.0;
        let series = de_timeline(&p, &[0.0, 1.0, 10.0, 1e3]).unwrap();
        assert!(series.numeric().iter().all(|d| d.abs() < 1e-9));
    }

    #[test]
    fn crossing_interpolates() {
        let t = [0.0, 1.0, 2.0];
        let v = [0.0, 0.2, 0.6];
        assert!((first_crossing(&t, &v, 0.4).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(first_crossing(&t, &v, 0.9), None);
    }
}
