//! An `n`-level system coupled diagonally to an environment (pure dephasing,
//! `H = Σ ε_j |s_j⟩⟨s_j| + Σ E_k |e_k⟩⟨e_k| + Σ γ_jk |s_j⟩⟨s_j| ⊗ |e_k⟩⟨e_k|`).
//!
//! The reduced state follows from the coherence factors
//! `z_ij(t) = Σ_k |β_k|² exp(−it(γ_ik − γ_jk))`; [`brute_force_evolve`] builds the
//! full system-environment state instead and traces the environment out.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::density::{partial_trace, BipartitePureState, DensityMatrix, Side, TOL_NORM};
use crate::error::{Error, Result};

/// Largest environment dimension [`brute_force_evolve`] will build.
pub const BRUTE_FORCE_CAP: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum Environment {
    /// `K` environment levels with amplitudes β_k, energies E_k and couplings `couplings[j][k]`.
    Flat { amplitudes: Vec<Complex64>, energies: Vec<f64>, couplings: Vec<Vec<f64>> },
    /// `N` independent two-state spins with amplitudes `(β_m⁰, β_m¹)`.
    /// `couplings[j][m][b]` is the shift of system level `j` when spin `m` is in state `b`.
    Product { amplitudes: Vec<[Complex64; 2]>, couplings: Vec<Vec<[f64; 2]>> },
}

impl Environment {
    /// Equal-weight spins, level `j` shifted by `±g[j][m]` for spin state 0/1.
    pub fn product_symmetric(g: Vec<Vec<f64>>) -> Self {
        let n_spins = g.first().map_or(0, Vec::len);
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Environment::Product {
            amplitudes: vec![[h, h]; n_spins],
            couplings: g.into_iter().map(|row| row.into_iter().map(|x| [x, -x]).collect()).collect(),
        }
    }

    /// Qubit coupled to equal-weight spins through `σ_z ⊗ Σ g_m σ_z^(m)`.
    pub fn zurek_product(g: &[f64]) -> Self {
        Self::product_symmetric(vec![g.to_vec(), g.iter().map(|x| -x).collect()])
    }

    /// Qubit coupled to `K = g.len()` equal-weight environment levels with
    /// `γ_0k = g_k`, `γ_1k = −g_k`.
    pub fn zurek_flat(g: &[f64]) -> Self {
        let k = g.len();
        let amp = Complex64::new(1.0 / (k as f64).sqrt(), 0.0);
        Environment::Flat {
            amplitudes: vec![amp; k],
            energies: vec![0.0; k],
            couplings: vec![g.to_vec(), g.iter().map(|x| -x).collect()],
        }
    }

    /// Random product environment: equal-weight spins, every coupling
    /// `g[j][m][b]` drawn uniformly from `range`.
    pub fn random_product<R: Rng>(n_levels: usize, n_spins: usize, range: (f64, f64), rng: &mut R) -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let couplings = (0..n_levels)
            .map(|_| (0..n_spins).map(|_| [rng.random_range(range.0..range.1), rng.random_range(range.0..range.1)]).collect())
            .collect();
        Environment::Product { amplitudes: vec![[h, h]; n_spins], couplings }
    }

    /// Number of environment basis states.
    pub fn dimension(&self) -> usize {
        match self {
            Environment::Flat { amplitudes, .. } => amplitudes.len(),
            Environment::Product { amplitudes, .. } => 1usize.checked_shl(amplitudes.len() as u32).unwrap_or(usize::MAX),
        }
    }

    /// `1 / Σ_k |β_k|⁴`: the long-time value of `1/⟨|z_ij|²⟩` for non-degenerate couplings.
    pub fn effective_size(&self) -> f64 {
        match self {
            Environment::Flat { amplitudes, .. } => 1.0 / amplitudes.iter().map(|b| b.norm_sqr().powi(2)).sum::<f64>(),
            Environment::Product { amplitudes, .. } => amplitudes
                .iter()
                .map(|[b0, b1]| 1.0 / (b0.norm_sqr().powi(2) + b1.norm_sqr().powi(2)))
                .product(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathParams {
    alphas: Vec<Complex64>,
    energies: Vec<f64>,
    env: Environment,
}

impl SpinBathParams {
    pub fn new(alphas: Vec<Complex64>, energies: Vec<f64>, env: Environment) -> Result<Self> {
        let n = alphas.len();
        if n == 0 {
            return Err(Error::DimensionTooSmall(0));
        }
        if energies.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: energies.len() });
        }
        check_norm("system", alphas.iter().map(|a| a.norm_sqr()).sum())?;
        match &env {
            Environment::Flat { amplitudes, energies, couplings } => {
                let k = amplitudes.len();
                if k == 0 {
                    return Err(Error::InvalidParameter("flat environment needs at least one level".into()));
                }
                if energies.len() != k {
                    return Err(Error::DimensionMismatch { expected: k, got: energies.len() });
                }
                if couplings.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: couplings.len() });
                }
                if let Some(row) = couplings.iter().find(|row| row.len() != k) {
                    return Err(Error::DimensionMismatch { expected: k, got: row.len() });
                }
                check_norm("environment", amplitudes.iter().map(|b| b.norm_sqr()).sum())?;
            }
            Environment::Product { amplitudes, couplings } => {
                let m = amplitudes.len();
                if m == 0 {
                    return Err(Error::InvalidParameter("product environment needs at least one spin".into()));
                }
                if couplings.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: couplings.len() });
                }
                if let Some(row) = couplings.iter().find(|row| row.len() != m) {
                    return Err(Error::DimensionMismatch { expected: m, got: row.len() });
                }
                for [b0, b1] in amplitudes {
                    check_norm("environment spin", b0.norm_sqr() + b1.norm_sqr())?;
                }
            }
        }
        Ok(Self { alphas, energies, env })
    }

    /// Qubit in `(|0⟩ + |1⟩)/√2` with zero level energies.
    pub fn equal_superposition_qubit(env: Environment) -> Result<Self> {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::new(vec![h, h], vec![0.0, 0.0], env)
    }

    pub fn levels(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[Complex64] {
        &self.alphas
    }

    pub fn environment(&self) -> &Environment {
        &self.env
    }
}

fn check_norm(what: &str, norm: f64) -> Result<()> {
    if (norm - 1.0).abs() > TOL_NORM {
        return Err(Error::InvalidState(format!("{what} amplitudes have squared norm {norm}")));
    }
    Ok(())
}

/// Coherence factor `z_ij(t)`.
pub fn z_factor(p: &SpinBathParams, i: usize, j: usize, t: f64) -> Complex64 {
    assert!(i < p.levels() && j < p.levels(), "level index out of range");
    match &p.env {
        Environment::Flat { amplitudes, couplings, .. } => amplitudes
            .iter()
            .enumerate()
            .map(|(k, b)| Complex64::from_polar(b.norm_sqr(), -t * (couplings[i][k] - couplings[j][k])))
            .sum(),
        Environment::Product { amplitudes, couplings } => amplitudes
            .iter()
            .enumerate()
            .map(|(m, [b0, b1])| {
                let d0 = couplings[i][m][0] - couplings[j][m][0];
                let d1 = couplings[i][m][1] - couplings[j][m][1];
                Complex64::from_polar(b0.norm_sqr(), -t * d0) + Complex64::from_polar(b1.norm_sqr(), -t * d1)
            })
            .product(),
    }
}

/// `ρ_ij(t) = α_i α_j* exp(−it(ε_i − ε_j)) z_ij(t)`.
pub fn reduced_density(p: &SpinBathParams, t: f64) -> DensityMatrix {
    let n = p.levels();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(p.alphas[i].norm_sqr(), 0.0);
        for j in 0..i {
            let phase = Complex64::from_polar(1.0, -t * (p.energies[i] - p.energies[j]));
            let v = p.alphas[i] * p.alphas[j].conj() * phase * z_factor(p, i, j, t);
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    DensityMatrix::new(m).expect("square by construction")
}

/// Evolves the full system-environment state and traces out the environment.
pub fn brute_force_evolve(p: &SpinBathParams, t: f64) -> Result<DensityMatrix> {
    let dim = p.env.dimension();
    if dim > BRUTE_FORCE_CAP {
        return Err(Error::SizeCapExceeded { size: dim, cap: BRUTE_FORCE_CAP });
    }
    let n = p.levels();
    let (betas, env_energies, couplings): (Vec<Complex64>, Vec<f64>, DMatrix<f64>) = match &p.env {
        Environment::Flat { amplitudes, energies, couplings } => {
            (amplitudes.clone(), energies.clone(), DMatrix::from_fn(n, dim, |j, k| couplings[j][k]))
        }
        Environment::Product { amplitudes, couplings } => {
            let bit = |k: usize, m: usize| (k >> m) & 1;
            let betas = (0..dim).map(|k| amplitudes.iter().enumerate().map(|(m, b)| b[bit(k, m)]).product()).collect();
            let gammas = DMatrix::from_fn(n, dim, |j, k| couplings[j].iter().enumerate().map(|(m, g)| g[bit(k, m)]).sum());
            (betas, vec![0.0; dim], gammas)
        }
    };
    let psi = DMatrix::from_fn(n, dim, |j, k| {
        p.alphas[j] * betas[k] * Complex64::from_polar(1.0, -t * (p.energies[j] + env_energies[k] + couplings[(j, k)]))
    });
    let state = BipartitePureState::from_matrix(psi)?;
    Ok(partial_trace(&state, Side::A))
}

/// Closed form `n/(n−1) [1 − Σ|α_i|⁴ − Σ_{i≠j} |α_i|²|α_j|² |z_ij(t)|²]`.
pub fn de_closed_form(p: &SpinBathParams, t: f64) -> Result<f64> {
    let n = p.levels();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let w: Vec<f64> = p.alphas.iter().map(|a| a.norm_sqr()).collect();
    let mut purity: f64 = w.iter().map(|x| x * x).sum();
    for i in 0..n {
        for j in 0..i {
            purity += 2.0 * w[i] * w[j] * z_factor(p, i, j, t).norm_sqr();
        }
    }
    Ok(n as f64 / (n as f64 - 1.0) * (1.0 - purity))
}

/// Time averages `(⟨z_ij⟩, ⟨|z_ij|²⟩)` on a uniform `n_samples`-point grid over `[0, T]`.
pub fn time_average_stats(p: &SpinBathParams, i: usize, j: usize, horizon: f64, n_samples: usize) -> (Complex64, f64) {
    assert!(n_samples >= 2, "need at least two samples");
    let dt = horizon / (n_samples - 1) as f64;
    let (sum_z, sum_sq) = (0..n_samples)
        .into_par_iter()
        .map(|s| {
            let z = z_factor(p, i, j, dt * s as f64);
            (z, z.norm_sqr())
        })
        .reduce(|| (Complex64::new(0.0, 0.0), 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let count = n_samples as f64;
    (sum_z / count, sum_sq / count)
}

/// `n/(n−1) [1 − Σ|α_i|⁴ − (1/N) Σ_{i≠j} |α_i|²|α_j|²]` for populations `|α_i|²`
/// and an environment of `N` equally weighted, non-degenerate states.
pub fn asymptotic_de_formula(populations: &[f64], env_size: f64) -> Result<f64> {
    let n = populations.len();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    if env_size <= 0.0 {
        return Err(Error::InvalidParameter(format!("environment size {env_size} must be positive")));
    }
    let sum_sq: f64 = populations.iter().map(|w| w * w).sum();
    let total: f64 = populations.iter().sum();
    let cross = total * total - sum_sq;
    Ok(n as f64 / (n as f64 - 1.0) * (1.0 - sum_sq - cross / env_size))
}

/// Long-time average of the measure, using [`Environment::effective_size`] for `N`.
pub fn asymptotic_de(p: &SpinBathParams) -> Result<f64> {
    let populations: Vec<f64> = p.alphas.iter().map(|a| a.norm_sqr()).collect();
    asymptotic_de_formula(&populations, p.env.effective_size())
}
