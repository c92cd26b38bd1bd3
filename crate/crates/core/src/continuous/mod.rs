//! Free-particle decoherence (ħ = k_B = 1).
//!
//! Three closed forms for the continuous measure `1 − ∫∫|ρ|²`:
//! a plane wave confined to `[−L, L]`, and a Gaussian packet under
//! momentum-type and position-type environment couplings. Each is paired
//! with a kernel that [`crate::kernel::decoherence_continuous`] can integrate
//! numerically, and [`pde`] integrates the master equation directly.

pub mod pde;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use libm::erf;

use crate::error::{Error, Result};
use crate::kernel::{ContinuousKernel, Separable};
use crate::quadrature::adaptive_gk;

/// Thermal de Broglie wavelength `sqrt(2π / (m T))`.
pub fn thermal_wavelength(mass: f64, temperature: f64) -> f64 {
    (2.0 * PI / (mass * temperature)).sqrt()
}

/// `γ t` below which the closed forms are meant to apply.
pub const DECOHERENCE_REGIME_LIMIT: f64 = 0.1;

pub fn in_decoherence_regime(gamma: f64, t: f64) -> bool {
    gamma * t <= DECOHERENCE_REGIME_LIMIT
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be non-negative, got {t}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaForm {
    /// `σ = (π/λ_T²)(1 − e^{−4γt})`.
    #[default]
    Exact,
    /// `σ ≈ 4πγt/λ_T²`, valid for `γt ≪ 1`.
    ShortTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneWaveParams {
    pub k: f64,
    pub half_width: f64,
    pub lambda_t: f64,
    pub gamma: f64,
    pub sigma_form: SigmaForm,
}

impl PlaneWaveParams {
    pub fn new(k: f64, half_width: f64, lambda_t: f64, gamma: f64) -> Result<Self> {
        check_positive("L", half_width)?;
        check_positive("lambda_T", lambda_t)?;
        if !(gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self { k, half_width, lambda_t, gamma, sigma_form: SigmaForm::Exact })
    }

    pub fn with_sigma_form(mut self, form: SigmaForm) -> Self {
        self.sigma_form = form;
        self
    }

    /// `λ_T² / (4πγL²)`.
    pub fn tau_d(&self) -> f64 {
        self.lambda_t.powi(2) / (4.0 * PI * self.gamma * self.half_width.powi(2))
    }
}

/// Gaussian width parameter σ(t) of the off-diagonal factor `e^{−σ(x−x')²}`.
pub fn sigma_of_t(p: &PlaneWaveParams, t: f64) -> f64 {
    let scale = PI / p.lambda_t.powi(2);
    match p.sigma_form {
        SigmaForm::Exact => -scale * (-4.0 * p.gamma * t).exp_m1(),
        SigmaForm::ShortTime => 4.0 * scale * p.gamma * t,
    }
}

/// `ρ(x,x',t) = (1/2L) exp(i e^{−2γt} k (x−x')) e^{−σ(x−x')²}` on `[−L, L]`.
pub fn plane_wave_kernel(p: &PlaneWaveParams, t: f64) -> ContinuousKernel {
    let sigma = sigma_of_t(p, t);
    let winding = (-2.0 * p.gamma * t).exp() * p.k;
    let norm = 1.0 / (2.0 * p.half_width);
    ContinuousKernel::analytic(
        move |x, xp| {
            let u = x - xp;
            Complex64::from_polar(norm * (-sigma * u * u).exp(), winding * u)
        },
        (-p.half_width, p.half_width),
    )
}

/// `1 − (√π / 2z) erf(z)` with `z = sqrt(2σ) L`.
pub fn de_plane_wave_erf_z(z: f64) -> f64 {
    if z < 1e-4 {
        // erf(z)/z = (2/√π)(1 − z²/3 + z⁴/10 − …)
        return z * z / 3.0 - z.powi(4) / 10.0;
    }
    1.0 - PI.sqrt() / (2.0 * z) * erf(z)
}

/// Exact value of `1 − (1/4L²) ∫_{−2L}^{2L} (2L − |u|) e^{−2σu²} du` in terms of
/// `z = sqrt(2σ) L`: `1 − (√π/2z) erf(2z) + (1 − e^{−4z²})/(4z²)`.
pub fn de_plane_wave_reduction_z(z: f64) -> f64 {
    if z < 1e-3 {
        return 2.0 * z * z / 3.0 - 8.0 * z.powi(4) / 15.0;
    }
    let z2 = z * z;
    1.0 - PI.sqrt() / (2.0 * z) * erf(2.0 * z) - (-4.0 * z2).exp_m1() / (4.0 * z2)
}

fn plane_wave_z(p: &PlaneWaveParams, t: f64) -> f64 {
    (2.0 * sigma_of_t(p, t)).sqrt() * p.half_width
}

/// Closed form with the erf argument `sqrt(2σ) L`; defined as 0 at `t = 0`.
pub fn de_plane_wave_erf(p: &PlaneWaveParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(de_plane_wave_erf_z(plane_wave_z(p, t)))
}

/// Exact measure of the plane-wave kernel via adaptive quadrature of the
/// triangular-window reduction of the double integral.
pub fn de_plane_wave_oracle(p: &PlaneWaveParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let sigma = sigma_of_t(p, t);
    let l = p.half_width;
    let integral = adaptive_gk(|u| (2.0 * l - u.abs()) * (-2.0 * sigma * u * u).exp(), -2.0 * l, 2.0 * l, 1e-12, 1e-10)?;
    Ok(1.0 - integral / (4.0 * l * l))
}

/// Gaussian packet `(πσ²)^{−1/4} e^{−x²/2σ²}` under the momentum-type coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMomentumParams {
    pub sigma: f64,
    pub mass: f64,
    pub temperature: f64,
    pub gamma: f64,
}

/// Coefficients of `ρ = (πc)^{−1/2} exp(i b r R / c) e^{−R²/4c} e^{−(a − b²/c) r²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl GaussianCoefficients {
    /// `a c − b²`; equals `¼ + 4Tγt³/(mσ²)`.
    pub fn determinant(&self) -> f64 {
        self.a * self.c - self.b * self.b
    }
}

impl GaussianMomentumParams {
    pub fn new(sigma: f64, mass: f64, temperature: f64, gamma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("mass", mass)?;
        if !(temperature >= 0.0) || !(gamma >= 0.0) {
            return Err(Error::InvalidParameter("temperature and gamma must be non-negative".into()));
        }
        Ok(Self { sigma, mass, temperature, gamma })
    }

    pub fn coefficients(&self, t: f64) -> GaussianCoefficients {
        let s2 = self.sigma * self.sigma;
        GaussianCoefficients {
            a: 1.0 / (4.0 * s2),
            b: t / (2.0 * self.mass * s2),
            c: s2 + (t / (self.sigma * self.mass)).powi(2) + 16.0 * self.temperature * self.gamma * t.powi(3) / self.mass,
        }
    }

    /// `16 T γ t³ / (m σ²)`.
    pub fn spread_ratio(&self, t: f64) -> f64 {
        16.0 * self.temperature * self.gamma * t.powi(3) / (self.mass * self.sigma * self.sigma)
    }
}

pub fn gaussian_momentum_de(p: &GaussianMomentumParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(1.0 - 1.0 / (1.0 + p.spread_ratio(t)).sqrt())
}

/// Kernel built from `(a, b, c)`; the half-width of its square domain covers
/// seven widths along both the diagonal and anti-diagonal.
pub fn gaussian_kernel_from_coefficients(co: GaussianCoefficients) -> ContinuousKernel {
    let GaussianCoefficients { a, b, c } = co;
    let relative = a - b * b / c;
    let half = 7.0 * c.sqrt().max(1.0 / relative.sqrt());
    let norm = 1.0 / (PI * c).sqrt();
    ContinuousKernel::analytic(
        move |x, xp| {
            let (big_r, r) = (x + xp, x - xp);
            Complex64::from_polar(norm * (-big_r * big_r / (4.0 * c) - relative * r * r).exp(), b * r * big_r / c)
        },
        (-half, half),
    )
}

pub fn gaussian_momentum_kernel(p: &GaussianMomentumParams, t: f64) -> ContinuousKernel {
    gaussian_kernel_from_coefficients(p.coefficients(t))
}

/// Gaussian packet under the position (Caldeira-Leggett) coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPositionParams {
    pub sigma: f64,
    pub mass: f64,
    pub temperature: f64,
    pub gamma: f64,
}

impl GaussianPositionParams {
    pub fn new(sigma: f64, mass: f64, temperature: f64, gamma: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("mass", mass)?;
        check_positive("temperature", temperature)?;
        check_positive("gamma", gamma)?;
        Ok(Self { sigma, mass, temperature, gamma })
    }

    /// `2 m γ T`: the coefficient of `(x − x')²` in the off-diagonal decay exponent.
    pub fn decoherence_rate(&self) -> f64 {
        2.0 * self.mass * self.gamma * self.temperature
    }

    /// `1 / (8 m γ T σ²)`.
    pub fn tau_d(&self) -> f64 {
        1.0 / (8.0 * self.mass * self.gamma * self.temperature * self.sigma * self.sigma)
    }
}

pub fn gaussian_position_de(p: &GaussianPositionParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(1.0 - 1.0 / (1.0 + t / p.tau_d()).sqrt())
}

fn position_kernel_with_prefactor(p: &GaussianPositionParams, t: f64, prefactor: f64) -> ContinuousKernel {
    let s2 = p.sigma * p.sigma;
    let kappa = p.decoherence_rate() * t;
    let half = 8.0 * p.sigma;
    let center = move |big_r: f64| prefactor * prefactor * (-big_r * big_r / (2.0 * s2)).exp();
    let relative = move |r: f64| (-2.0 * r * r * (kappa + 1.0 / (4.0 * s2))).exp();
    ContinuousKernel::analytic(
        move |x, xp| {
            let (big_r, r) = (x + xp, x - xp);
            Complex64::new(prefactor * (-kappa * r * r - (big_r * big_r + r * r) / (4.0 * s2)).exp(), 0.0)
        },
        (-half, half),
    )
    .with_separable(Separable {
        center: Arc::new(center),
        center_range: (-2.0 * half, 2.0 * half),
        relative: Arc::new(relative),
        relative_range: (-2.0 * half, 2.0 * half),
    })
}

/// Kernel with the printed prefactor `1/sqrt(2πσ²)`, whose trace is `1/√2`.
pub fn gaussian_position_kernel(p: &GaussianPositionParams, t: f64) -> ContinuousKernel {
    position_kernel_with_prefactor(p, t, 1.0 / (2.0 * PI * p.sigma * p.sigma).sqrt())
}

/// Unit-trace version of [`gaussian_position_kernel`].
pub fn gaussian_position_kernel_normalized(p: &GaussianPositionParams, t: f64) -> ContinuousKernel {
    position_kernel_with_prefactor(p, t, 1.0 / (PI * p.sigma * p.sigma).sqrt())
}

/// Gaussian kernel of the free packet (no environment) at time `t`.
pub fn free_gaussian_kernel(sigma: f64, mass: f64, t: f64) -> ContinuousKernel {
    let s2 = sigma * sigma;
    gaussian_kernel_from_coefficients(GaussianCoefficients {
        a: 1.0 / (4.0 * s2),
        b: t / (2.0 * mass * s2),
        c: s2 + (t / (sigma * mass)).powi(2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::decoherence_continuous;
    use crate::quadrature::QuadratureSpec;

    // Reference values from an independent 30-digit quadrature of the
    // triangular-window integral.
    const ORACLE_Z3: f64 = 0.732_368_802_626_858_4;
    const ERF_Z3: f64 = 0.704_597_550_580_159_6;
    const ERF_Z_SQRT2: f64 = 0.401_855_993_338_695_9;
    const ORACLE_Z_SQRT2: f64 = 0.498_340_692_528_897_85;

    fn params_for_z(z: f64) -> PlaneWaveParams {
        // L = 1, λ_T chosen so that the short-time σ at t = 1 gives the requested z.
        let sigma = z * z / 2.0;
        let gamma = 0.01;
        let lambda_t = (4.0 * PI * gamma / sigma).sqrt();
        PlaneWaveParams::new(3.0, 1.0, lambda_t, gamma).unwrap().with_sigma_form(SigmaForm::ShortTime)
    }

    #[test]
    fn sigma_forms() {
        let p = PlaneWaveParams::new(1.0, 1.0, 0.5, 0.2).unwrap();
        assert_eq!(sigma_of_t(&p, 0.0), 0.0);
        let t = 0.005 / 0.2;
        let exact = sigma_of_t(&p, t);
        let short = sigma_of_t(&p.with_sigma_form(SigmaForm::ShortTime), t);
        assert!(((short - exact) / exact).abs() < 0.02);
        assert!((sigma_of_t(&p, 1e4) - PI / 0.25).abs() < 1e-12);
    }

    #[test]
    fn erf_form_values() {
        assert_eq!(de_plane_wave_erf_z(0.0), 0.0);
        assert!((de_plane_wave_erf_z(3.0) - ERF_Z3).abs() < 1e-12);
        assert!((de_plane_wave_erf_z(2f64.sqrt()) - ERF_Z_SQRT2).abs() < 1e-12);
        let p = params_for_z(2f64.sqrt());
        assert!((p.tau_d() - 1.0).abs() < 1e-12);
        assert!((de_plane_wave_erf(&p, p.tau_d()).unwrap() - ERF_Z_SQRT2).abs() < 1e-12);
        // Series branch joins the direct evaluation.
        assert!((de_plane_wave_erf_z(1e-4 * (1.0 - 1e-9)) - de_plane_wave_erf_z(1e-4 * (1.0 + 1e-9))).abs() < 1e-14);
    }

    #[test]
    fn oracle_values() {
        let p = params_for_z(3.0);
        assert!((de_plane_wave_oracle(&p, 1.0).unwrap() - ORACLE_Z3).abs() < 1e-9);
        assert!((de_plane_wave_reduction_z(3.0) - ORACLE_Z3).abs() < 1e-12);
        assert!((de_plane_wave_reduction_z(2f64.sqrt()) - ORACLE_Z_SQRT2).abs() < 1e-12);
        assert_eq!(de_plane_wave_oracle(&p, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn small_width_limits_differ_by_a_factor_of_two() {
        // oracle → 4σL²/3 and the closed form → 2σL²/3.
        let z = 0.05;
        let sigma_l2 = z * z / 2.0;
        let p = params_for_z(z);
        let oracle = de_plane_wave_oracle(&p, 1.0).unwrap();
        assert!((oracle / (4.0 * sigma_l2 / 3.0) - 1.0).abs() < 1e-2);
        assert!((de_plane_wave_erf_z(z) / (2.0 * sigma_l2 / 3.0) - 1.0).abs() < 1e-2);
        assert!((de_plane_wave_reduction_z(1e-3 * (1.0 - 1e-9)) - de_plane_wave_reduction_z(1e-3 * (1.0 + 1e-9))).abs() < 1e-13);
    }

    #[test]
    fn plane_wave_kernel_properties() {
        let p = PlaneWaveParams::new(2.5, 1.0, 0.8, 0.3).unwrap();
        let k0 = plane_wave_kernel(&p, 0.0);
        assert!(decoherence_continuous(&k0).unwrap().abs() < 1e-6);
        let t = 0.4;
        let k = plane_wave_kernel(&p, t);
        assert!((k.trace().unwrap() - 1.0).abs() < 1e-12);
        assert!(k.hermiticity_deviation(21) < 1e-15);
        // |ρ| depends on x − x' only; the phase winds with e^{−2γt} k.
        assert!((k.eval(0.3, 0.1).norm() - k.eval(-0.5, -0.7).norm()).abs() < 1e-15);
        let winding = k.eval(0.2, 0.0).arg() / 0.2;
        assert!((winding - (-2.0 * 0.3 * t).exp() * 2.5).abs() < 1e-12);
    }

    #[test]
    fn gaussian_identity_and_closed_forms() {
        let p = GaussianMomentumParams::new(0.7, 2.0, 3.0, 0.05).unwrap();
        for t in [0.0, 0.1, 0.9, 2.0] {
            let co = p.coefficients(t);
            let expected = 0.25 + 4.0 * 3.0 * 0.05 * t * t * t / (2.0 * 0.49);
            assert!((co.determinant() - expected).abs() < 1e-12);
        }
        assert_eq!(gaussian_momentum_de(&p, 0.0).unwrap(), 0.0);
        let t1 = (2.0f64 * 0.49 / (16.0 * 3.0 * 0.05)).cbrt();
        assert!((gaussian_momentum_de(&p, t1).unwrap() - 0.292_893_218_813_452_5).abs() < 1e-12);

        let q = GaussianPositionParams::new(0.5, 1.0, 2.0, 0.1).unwrap();
        assert_eq!(gaussian_position_de(&q, 0.0).unwrap(), 0.0);
        assert!((gaussian_position_de(&q, q.tau_d()).unwrap() - 0.292_893_218_813_452_5).abs() < 1e-15);
        assert!((q.decoherence_rate() - 4.0 * PI * q.gamma / thermal_wavelength(q.mass, q.temperature).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn printed_position_kernel_has_trace_one_over_root_two() {
        let q = GaussianPositionParams::new(0.8, 1.0, 1.0, 0.2).unwrap();
        let k = gaussian_position_kernel(&q, 0.3);
        assert!((k.trace().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-10);
        let n = gaussian_position_kernel_normalized(&q, 0.3);
        assert!((n.trace().unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn quadrature_reproduces_gaussian_closed_forms() {
        let p = GaussianMomentumParams::new(1.1, 1.5, 2.0, 0.02).unwrap();
        let spec = QuadratureSpec::default().with_tol(1e-9);
        for t in [0.5, 1.5, 3.0] {
            let k = gaussian_momentum_kernel(&p, t).with_quadrature(spec);
            let numeric = decoherence_continuous(&k).unwrap();
            assert!((numeric - gaussian_momentum_de(&p, t).unwrap()).abs() < 1e-6, "t={t}");
        }
        let q = GaussianPositionParams::new(0.6, 1.0, 1.0, 0.3).unwrap();
        for t in [0.2, 1.0, 4.0] {
            let k = gaussian_position_kernel(&q, t).with_quadrature(spec);
            let numeric = decoherence_continuous(&k).unwrap();
            assert!((numeric - gaussian_position_de(&q, t).unwrap()).abs() < 1e-6, "t={t}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(PlaneWaveParams::new(1.0, -1.0, 1.0, 0.1).is_err());
        assert!(GaussianMomentumParams::new(0.0, 1.0, 1.0, 0.1).is_err());
        assert!(GaussianPositionParams::new(1.0, 1.0, 0.0, 0.1).is_err());
        let p = PlaneWaveParams::new(1.0, 1.0, 1.0, 0.1).unwrap();
        assert!(de_plane_wave_erf(&p, -1.0).is_err());
    }
}
