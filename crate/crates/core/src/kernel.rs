//! Continuous-variable density kernels ρ(x, x') and the continuous
//! decoherence measure `1 − ∫∫|ρ|²` on unit-trace kernels.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_gk, composite_rule, gauss_legendre, QuadratureSpec};

pub type KernelFn = Arc<dyn Fn(f64, f64) -> Complex64 + Send + Sync>;
pub type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Declares `|ρ(x,x')|² = center(x + x') · relative(x − x')`.
///
/// The ranges bound the support of each profile; outside them the profile is
/// treated as zero.
#[derive(Clone)]
pub struct Separable {
    pub center: ProfileFn,
    pub center_range: (f64, f64),
    pub relative: ProfileFn,
    pub relative_range: (f64, f64),
}

/// Samples on the uniform grid `x_i = x_min + i h`, `i = 0..n`, row-major in (x, x').
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples {
    pub n: usize,
    pub values: Vec<Complex64>,
}

impl GridSamples {
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.n + j]
    }
}

#[derive(Clone)]
pub enum KernelRule {
    Analytic(KernelFn),
    Grid(GridSamples),
}

#[derive(Clone)]
pub struct ContinuousKernel {
    rule: KernelRule,
    domain: (f64, f64),
    quadrature: QuadratureSpec,
    separable: Option<Separable>,
    diagonal_support: Option<(f64, f64)>,
}

impl fmt::Debug for ContinuousKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match &self.rule {
            KernelRule::Analytic(_) => "analytic".to_string(),
            KernelRule::Grid(g) => format!("grid {}x{}", g.n, g.n),
        };
        f.debug_struct("ContinuousKernel")
            .field("rule", &rule)
            .field("domain", &self.domain)
            .field("quadrature", &self.quadrature)
            .field("separable", &self.separable.is_some())
            .finish()
    }
}

impl ContinuousKernel {
    pub fn analytic<F>(f: F, domain: (f64, f64)) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Self { rule: KernelRule::Analytic(Arc::new(f)), domain, quadrature: QuadratureSpec::default(), separable: None, diagonal_support: None }
    }

    /// Rank-one kernel `ψ(x) ψ*(x')`.
    pub fn pure<F>(psi: F, domain: (f64, f64)) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        Self::analytic(move |x, xp| psi(x) * psi(xp).conj(), domain)
    }

    pub fn from_grid(domain: (f64, f64), samples: GridSamples) -> Result<Self> {
        if samples.n < 2 || samples.values.len() != samples.n * samples.n {
            return Err(Error::DimensionMismatch { expected: samples.n * samples.n, got: samples.values.len() });
        }
        Ok(Self { rule: KernelRule::Grid(samples), domain, quadrature: QuadratureSpec::default(), separable: None, diagonal_support: None })
    }

    pub fn with_quadrature(mut self, spec: QuadratureSpec) -> Self {
        self.quadrature = spec;
        self
    }

    pub fn with_separable(mut self, separable: Separable) -> Self {
        self.separable = Some(separable);
        self
    }

    /// Restricts the trace integral to `[lo, hi]`, outside of which
    /// `ρ(x, x)` is declared negligible.
    pub fn with_diagonal_support(mut self, lo: f64, hi: f64) -> Self {
        self.diagonal_support = Some((lo, hi));
        self
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quadrature
    }

    pub fn rule(&self) -> &KernelRule {
        &self.rule
    }

    pub fn grid_spacing(&self) -> Option<f64> {
        match &self.rule {
            KernelRule::Grid(g) => Some((self.domain.1 - self.domain.0) / (g.n - 1) as f64),
            KernelRule::Analytic(_) => None,
        }
    }

    /// Evaluates ρ(x, x'); grid kernels are interpolated bilinearly and
    /// vanish outside the domain.
    pub fn eval(&self, x: f64, xp: f64) -> Complex64 {
        match &self.rule {
            KernelRule::Analytic(f) => f(x, xp),
            KernelRule::Grid(g) => {
                let (lo, hi) = self.domain;
                if x < lo || x > hi || xp < lo || xp > hi {
                    return Complex64::new(0.0, 0.0);
                }
                let h = (hi - lo) / (g.n - 1) as f64;
                let u = ((x - lo) / h).min((g.n - 1) as f64);
                let v = ((xp - lo) / h).min((g.n - 1) as f64);
                let i = (u.floor() as usize).min(g.n - 2);
                let j = (v.floor() as usize).min(g.n - 2);
                let (fu, fv) = (u - i as f64, v - j as f64);
                g.at(i, j) * ((1.0 - fu) * (1.0 - fv))
                    + g.at(i + 1, j) * (fu * (1.0 - fv))
                    + g.at(i, j + 1) * ((1.0 - fu) * fv)
                    + g.at(i + 1, j + 1) * (fu * fv)
            }
        }
    }

    /// Samples the kernel on an `n`-point uniform grid over its domain.
    pub fn sample_grid(&self, n: usize) -> GridSamples {
        let (lo, hi) = self.domain;
        let h = (hi - lo) / (n - 1) as f64;
        let values = (0..n * n)
            .into_par_iter()
            .map(|k| self.eval(lo + h * (k / n) as f64, lo + h * (k % n) as f64))
            .collect();
        GridSamples { n, values }
    }

    fn trace_with_panels(&self, f: &KernelFn, panels: usize) -> f64 {
        let reference = gauss_legendre(self.quadrature.order);
        let (lo, hi) = match self.diagonal_support {
            Some((a, b)) => (a.max(self.domain.0), b.min(self.domain.1)),
            None => self.domain,
        };
        if hi <= lo {
            return 0.0;
        }
        let (xs, ws) = composite_rule(lo, hi, panels, &reference);
        xs.iter().zip(&ws).map(|(&x, w)| w * f(x, x).re).sum()
    }

    fn hs_with_panels(&self, f: &KernelFn, panels: usize) -> f64 {
        let reference = gauss_legendre(self.quadrature.order);
        let (xs, ws) = composite_rule(self.domain.0, self.domain.1, panels, &reference);
        // |ρ(x,x')| = |ρ(x',x)|: sum the lower triangle once and double it.
        (0..xs.len())
            .into_par_iter()
            .map(|i| {
                let mut row = 0.5 * ws[i] * f(xs[i], xs[i]).norm_sqr();
                for j in 0..i {
                    row += ws[j] * f(xs[i], xs[j]).norm_sqr();
                }
                2.0 * ws[i] * row
            })
            .sum()
    }

    /// `∫ρ(x,x) dx`.
    pub fn trace(&self) -> Result<f64> {
        match &self.rule {
            KernelRule::Analytic(f) => {
                let spec = self.quadrature.with_tol(self.quadrature.tol * 1e-2);
                spec.converge(|p| self.trace_with_panels(f, p))
            }
            KernelRule::Grid(g) => {
                let h = self.grid_spacing().unwrap();
                Ok(trapezoid_weights(g.n, h).iter().enumerate().map(|(i, w)| w * g.at(i, i).re).sum())
            }
        }
    }

    /// `∫∫|ρ(x,x')|² dx dx'` of the kernel as given (not renormalized).
    pub fn hilbert_schmidt_sq(&self) -> Result<f64> {
        if let Some(sep) = &self.separable {
            return separable_hs(sep, self.quadrature.tol * 1e-2);
        }
        match &self.rule {
            KernelRule::Analytic(f) => {
                let spec = self.quadrature.with_tol(self.quadrature.tol * 1e-2);
                spec.converge(|p| self.hs_with_panels(f, p))
            }
            KernelRule::Grid(g) => Ok(grid_inner(g, g, self.grid_spacing().unwrap()).re),
        }
    }

    /// Largest |ρ(x,x') − conj(ρ(x',x))| over an `n`-point spot-check grid.
    pub fn hermiticity_deviation(&self, n: usize) -> f64 {
        let (lo, hi) = self.domain;
        let h = (hi - lo) / (n - 1) as f64;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                let (x, xp) = (lo + h * i as f64, lo + h * j as f64);
                dev = dev.max((self.eval(x, xp) - self.eval(xp, x).conj()).norm());
            }
        }
        dev
    }
}

/// Trapezoid weights on an `n`-point grid with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}

/// `∫∫ a(x,x')* b(x,x') dx dx'` for samples on a common grid.
pub fn grid_inner(a: &GridSamples, b: &GridSamples, h: f64) -> Complex64 {
    assert_eq!(a.n, b.n);
    let w = trapezoid_weights(a.n, h);
    (0..a.n)
        .into_par_iter()
        .map(|i| {
            let mut row = Complex64::new(0.0, 0.0);
            for j in 0..a.n {
                row += a.at(i, j).conj() * b.at(i, j) * w[j];
            }
            row * w[i]
        })
        .sum()
}

fn separable_hs(sep: &Separable, tol: f64) -> Result<f64> {
    let center = adaptive_gk(|u| (sep.center)(u), sep.center_range.0, sep.center_range.1, tol, tol)?;
    let relative = adaptive_gk(|u| (sep.relative)(u), sep.relative_range.0, sep.relative_range.1, tol, tol)?;
    // dx dx' = ½ dR dr
    Ok(0.5 * center * relative)
}

/// `1 − ∫∫|ρ̂|²` where `ρ̂ = ρ / ∫ρ(x,x)dx` is the unit-trace renormalization.
pub fn decoherence_continuous(kernel: &ContinuousKernel) -> Result<f64> {
    let measure = |trace: f64, hs: f64| -> Result<f64> {
        if trace <= 0.0 || !trace.is_finite() {
            return Err(Error::InvalidDensity(format!("kernel trace {trace} is not positive")));
        }
        Ok(1.0 - hs / (trace * trace))
    };
    match (&kernel.rule, &kernel.separable) {
        (KernelRule::Analytic(f), None) => {
            let mut failure = None;
            let value = kernel.quadrature.converge(|p| {
                match measure(kernel.trace_with_panels(f, p), kernel.hs_with_panels(f, p)) {
                    Ok(v) => v,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                }
            });
            if let Some(e) = failure {
                return Err(e);
            }
            value
        }
        _ => measure(kernel.trace()?, kernel.hilbert_schmidt_sq()?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gaussian_packet(x0: f64, width: f64, k: f64) -> impl Fn(f64) -> Complex64 + Send + Sync {
        let norm = (PI * width * width).powf(-0.25);
        move |x| Complex64::from_polar(norm * (-(x - x0).powi(2) / (2.0 * width * width)).exp(), k * x)
    }

    #[test]
    fn pure_gaussian_kernel_has_zero_decoherence() {
        let k = ContinuousKernel::pure(gaussian_packet(0.3, 1.0, 2.0), (-10.0, 10.0));
        assert!((k.trace().unwrap() - 1.0).abs() < 1e-10);
        assert!(decoherence_continuous(&k).unwrap().abs() < 1e-6);
    }

    #[test]
    fn unnormalized_kernel_is_renormalized() {
        let psi = gaussian_packet(0.0, 0.7, 0.0);
        let k = ContinuousKernel::analytic(move |x, xp| psi(x) * psi(xp).conj() * 3.5, (-8.0, 8.0));
        assert!(decoherence_continuous(&k).unwrap().abs() < 1e-6);
    }

    #[test]
    fn sharply_diagonal_kernel_approaches_full_decoherence() {
        let sigma = 1e6;
        let k = ContinuousKernel::analytic(move |x, xp| Complex64::new((-sigma * (x - xp).powi(2)).exp() / 2.0, 0.0), (-1.0, 1.0))
            .with_quadrature(QuadratureSpec { max_panels: 4096, order: 8, ..Default::default() });
        let grid = ContinuousKernel::from_grid((-1.0, 1.0), k.sample_grid(2001)).unwrap();
        let de = decoherence_continuous(&grid).unwrap();
        assert!(de > 0.99, "{de}");
    }

    #[test]
    fn separable_path_matches_generic_two_dimensional_path() {
        // Mixed Gaussian: ρ ∝ exp(−R²/(4s²) − r²(1/(4s²) + κ)).
        let (s, kappa) = (0.8, 1.3);
        let f = move |x: f64, xp: f64| {
            let (r2, rr2) = ((x + xp).powi(2), (x - xp).powi(2));
            Complex64::new((-r2 / (4.0 * s * s) - rr2 * (1.0 / (4.0 * s * s) + kappa)).exp() / (PI * s * s).sqrt(), 0.0)
        };
        let generic = ContinuousKernel::analytic(f, (-10.0, 10.0)).with_quadrature(QuadratureSpec::default().with_tol(1e-10));
        let separable = generic.clone().with_separable(Separable {
            center: Arc::new(move |r| (-r * r / (2.0 * s * s)).exp() / (PI * s * s)),
            center_range: (-20.0, 20.0),
            relative: Arc::new(move |r| (-2.0 * r * r * (1.0 / (4.0 * s * s) + kappa)).exp()),
            relative_range: (-20.0, 20.0),
        });
        let a = decoherence_continuous(&generic).unwrap();
        let b = decoherence_continuous(&separable).unwrap();
        let expected = 1.0 - 1.0 / (1.0 + 4.0 * s * s * kappa).sqrt();
        assert!((a - expected).abs() < 1e-9, "{a} vs {expected}");
        assert!((b - expected).abs() < 1e-9, "{b} vs {expected}");
    }

    #[test]
    fn grid_kernel_interpolates_and_integrates() {
        let psi = gaussian_packet(0.0, 1.0, 0.0);
        let k = ContinuousKernel::pure(psi, (-9.0, 9.0));
        let g = ContinuousKernel::from_grid((-9.0, 9.0), k.sample_grid(181)).unwrap();
        assert!((g.trace().unwrap() - 1.0).abs() < 1e-10);
        assert!(decoherence_continuous(&g).unwrap().abs() < 1e-10);
        assert!((g.eval(0.0, 0.0) - k.eval(0.0, 0.0)).norm() < 1e-12);
        assert_eq!(g.eval(20.0, 0.0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn zero_kernel_is_rejected() {
        let k = ContinuousKernel::analytic(|_, _| Complex64::new(0.0, 0.0), (-1.0, 1.0));
        assert!(decoherence_continuous(&k).is_err());
    }
}
