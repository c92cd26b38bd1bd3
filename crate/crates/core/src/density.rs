//! Finite-dimensional density matrices, pure states, purity and the
//! normalized purity-deficit decoherence measure.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Numerical tolerances shared by validation and measure evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub herm: f64,
    pub trace: f64,
    pub psd: f64,
    pub quad: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-10,
            trace: 1e-10,
            psd: 1e-8,
            quad: 1e-6,
        }
    }
}

/// Normalization tolerance for state vectors.
pub const TOL_NORM: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Largest |ρ_jk − conj(ρ_kj)|.
    NotHermitian { deviation: f64 },
    /// |tr ρ − 1|.
    TraceNotOne { trace: f64 },
    /// Smallest eigenvalue of the Hermitian part.
    NotPositive { min_eigenvalue: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub dim: usize,
    pub hermiticity_deviation: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_valid() {
            return write!(f, "valid {}x{} density matrix", self.dim, self.dim);
        }
        let parts: Vec<String> = self
            .violations
            .iter()
            .map(|v| match v {
                Violation::NotHermitian { deviation } => format!("non-Hermitian (max deviation {deviation:.3e})"),
                Violation::TraceNotOne { trace } => format!("trace {trace:.12} != 1"),
                Violation::NotPositive { min_eigenvalue } => format!("negative eigenvalue {min_eigenvalue:.3e}"),
            })
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// A square complex matrix intended as a density operator.
///
/// Construction only checks shape; call [`validate_density`] for the
/// physical invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        if matrix.nrows() == 0 {
            return Err(Error::DimensionTooSmall(0));
        }
        Ok(Self { matrix })
    }

    /// Builds a matrix from real entries given row by row.
    pub fn from_real_rows(n: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: rows.len() });
        }
        Self::new(DMatrix::from_row_iterator(n, n, rows.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    /// Builds a matrix from complex entries given row by row.
    pub fn from_row_major(n: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionTooSmall(0));
        }
        Ok(Self { matrix: DMatrix::identity(n, n) / Complex64::new(n as f64, 0.0) })
    }

    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(populations.len(), populations.iter().map(|&p| Complex64::new(p, 0.0)));
        Self::new(DMatrix::from_diagonal(&v))
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: unitary.nrows() });
        }
        Self::new(unitary * &self.matrix * unitary.adjoint())
    }

    /// Largest elementwise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Checks Hermiticity, unit trace and positivity; never fails.
pub fn validate_density(rho: &DensityMatrix, tol: &Tolerances) -> ValidationReport {
    let m = &rho.matrix;
    let n = m.nrows();
    let mut herm = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            herm = herm.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    let trace = m.trace();
    let hermitian_part = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let min_eigenvalue = hermitian_part
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);

    let mut violations = Vec::new();
    if herm > tol.herm {
        violations.push(Violation::NotHermitian { deviation: herm });
    }
    if (trace.re - 1.0).abs() > tol.trace || trace.im.abs() > tol.trace {
        violations.push(Violation::TraceNotOne { trace: trace.re });
    }
    if min_eigenvalue < -tol.psd {
        violations.push(Violation::NotPositive { min_eigenvalue });
    }
    ValidationReport { dim: n, hermiticity_deviation: herm, trace: trace.re, min_eigenvalue, violations }
}

fn require_valid(rho: &DensityMatrix) -> Result<()> {
    let report = validate_density(rho, &Tolerances::default());
    if report.is_valid() {
        Ok(())
    } else {
        Err(Error::InvalidDensity(report.to_string()))
    }
}

// tr ρ² = Σ_jk ρ_jk ρ_kj = Σ_jk |ρ_jk|² for Hermitian ρ.
fn purity_unchecked(rho: &DensityMatrix) -> f64 {
    rho.matrix.iter().map(|z| z.norm_sqr()).sum()
}

/// `tr ρ²`, in `[1/n, 1]` for a valid density matrix.
pub fn purity(rho: &DensityMatrix) -> Result<f64> {
    require_valid(rho)?;
    Ok(purity_unchecked(rho))
}

/// `n/(n−1) · (1 − tr ρ²)`: zero for pure states, one for `I/n`.
pub fn decoherence_finite(rho: &DensityMatrix) -> Result<f64> {
    let n = rho.dim();
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    let p = purity(rho)?;
    Ok(n as f64 / (n as f64 - 1.0) * (1.0 - p))
}

/// A normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionTooSmall(0));
        }
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm_squared();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::InvalidState(format!("squared norm {norm} != 1")));
        }
        Ok(Self { amplitudes: v })
    }

    /// Rescales arbitrary nonzero amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite amplitude vector".into()));
        }
        Ok(Self { amplitudes: v.unscale(norm) })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    /// `|c⟩⟨c|`.
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix { matrix: &self.amplitudes * self.amplitudes.adjoint() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// Pure state of a two-party system, stored as the `n_A × n_B` coefficient matrix ψ_ab.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartitePureState {
    psi: DMatrix<Complex64>,
}

impl BipartitePureState {
    /// `amplitudes` are row-major: index `a * n_b + b`.
    pub fn new(n_a: usize, n_b: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_a == 0 || n_b == 0 {
            return Err(Error::DimensionTooSmall(0));
        }
        if amplitudes.len() != n_a * n_b {
            return Err(Error::DimensionMismatch { expected: n_a * n_b, got: amplitudes.len() });
        }
        Self::from_matrix(DMatrix::from_row_slice(n_a, n_b, &amplitudes))
    }

    pub fn from_matrix(psi: DMatrix<Complex64>) -> Result<Self> {
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > TOL_NORM {
            return Err(Error::InvalidState(format!("squared norm {norm} != 1")));
        }
        Ok(Self { psi })
    }

    pub fn product(a: &PureState, b: &PureState) -> Self {
        Self { psi: a.amplitudes() * b.amplitudes().transpose() }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.psi.nrows(), self.psi.ncols())
    }

    pub fn coefficients(&self) -> &DMatrix<Complex64> {
        &self.psi
    }
}

/// Reduced state of the kept side: `Tr_other |Ψ⟩⟨Ψ|`.
pub fn partial_trace(state: &BipartitePureState, keep: Side) -> DensityMatrix {
    let psi = &state.psi;
    let matrix = match keep {
        // ρ_A[a, a'] = Σ_b ψ_ab conj(ψ_a'b)
        Side::A => psi * psi.adjoint(),
        // ρ_B[b, b'] = Σ_a ψ_ab conj(ψ_ab')
        Side::B => psi.transpose() * psi.map(|z| z.conj()),
    };
    DensityMatrix { matrix }
}

/// Generalized concurrence `E = sqrt(2(1 − tr ρ_A²))`, zero only for product states.
pub fn concurrence_pure(state: &BipartitePureState) -> f64 {
    let rho_a = partial_trace(state, Side::A);
    (2.0 * (1.0 - purity_unchecked(&rho_a))).max(0.0).sqrt()
}
