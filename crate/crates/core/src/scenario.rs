//! Scenario configuration, execution and figure data for the command line.
//!
//! A configuration is a TOML file with a `[scenario]` table (name, time grid,
//! output, seed) and a `[parameters]` table whose keys depend on the scenario.
//! Unknown keys are rejected.

use std::fmt;
use std::io;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::continuous::{
    de_plane_wave_erf, de_plane_wave_erf_z, de_plane_wave_reduction_z, gaussian_momentum_de, gaussian_momentum_kernel,
    gaussian_position_de, gaussian_position_kernel, plane_wave_kernel, GaussianMomentumParams, GaussianPositionParams,
    PlaneWaveParams, SigmaForm,
};
use crate::density::decoherence_finite;
use crate::error::Error;
use crate::kernel::decoherence_continuous;
use crate::mach_zehnder::{coherence_from_dephasing, default_phase_grid, monte_carlo_protocol, Shots};
use crate::quadrature::adaptive_gk;
use crate::series::{write_float, DecoherenceSeries, SeriesRow, Spacing, TimeGrid};
use crate::spin_bath::{brute_force_evolve, de_closed_form, z_factor, Environment, SpinBathParams};
use crate::spin_boson::{analytic_rho, de_analytic, integrate_master, SpinBosonParams, StepControl};
use crate::stern_gerlach::{block_de, closed_form_de, two_timescale_state_comoving, SGModelParams};

/// Failure of a scenario run, mapped to a process exit code.
#[derive(Debug)]
pub enum ScenarioError {
    Config(String),
    Numerical(Error),
    Io(io::Error),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Config(_) => 2,
            ScenarioError::Numerical(_) => 3,
            ScenarioError::Io(_) => 4,
        }
    }
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Config(msg) => write!(f, "configuration error: {msg}"),
            ScenarioError::Numerical(e) => write!(f, "numerical failure: {e}"),
            ScenarioError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

impl From<Error> for ScenarioError {
    fn from(e: Error) -> Self {
        ScenarioError::Numerical(e)
    }
}

impl From<io::Error> for ScenarioError {
    fn from(e: io::Error) -> Self {
        ScenarioError::Io(e)
    }
}

type ScenarioResult<T> = std::result::Result<T, ScenarioError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    #[default]
    Absolute,
    /// Times are multiples of the scenario's characteristic decoherence time.
    TauD,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioHeader {
    name: String,
    #[serde(default)]
    t_min: f64,
    t_max: f64,
    #[serde(default = "default_points")]
    points: usize,
    #[serde(default)]
    scale: Spacing,
    #[serde(default)]
    time_unit: TimeUnit,
    output: Option<PathBuf>,
    #[serde(default)]
    seed: u64,
}

fn default_points() -> usize {
    101
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: ScenarioHeader,
    #[serde(default)]
    parameters: toml::Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Product,
    Flat,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBathConfig {
    pub environment: EnvironmentKind,
    /// Number of spins (product) or environment levels (flat).
    pub size: usize,
    #[serde(default = "default_coupling_min")]
    pub coupling_min: f64,
    #[serde(default = "default_coupling_max")]
    pub coupling_max: f64,
}

fn default_coupling_min() -> f64 {
    0.5
}

fn default_coupling_max() -> f64 {
    1.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBosonConfig {
    pub gamma: f64,
    pub omega_s: f64,
    #[serde(default = "default_ode_tol")]
    pub tol: f64,
}

fn default_ode_tol() -> f64 {
    1e-9
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaFormConfig {
    #[default]
    Exact,
    ShortTime,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaneWaveConfig {
    pub k: f64,
    pub half_width: f64,
    pub lambda_t: f64,
    pub gamma: f64,
    #[serde(default)]
    pub sigma_form: SigmaFormConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianConfig {
    pub sigma: f64,
    pub mass: f64,
    pub temperature: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SternGerlachConfig {
    pub epsilon: f64,
    #[serde(default)]
    pub lambda: f64,
    pub mass: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub lambda_t: f64,
    #[serde(default = "default_weight")]
    pub spin_up_weight: f64,
}

fn default_weight() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachZehnderConfig {
    pub gamma: f64,
    #[serde(default)]
    pub omega_s: f64,
    /// Quantons per measurement; 0 means the infinite-shot limit.
    #[serde(default)]
    pub shots: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

fn default_trials() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    SpinBath(SpinBathConfig),
    SpinBoson(SpinBosonConfig),
    PlaneWave(PlaneWaveConfig),
    GaussMomentum(GaussianConfig),
    GaussPosition(GaussianConfig),
    SternGerlach(SternGerlachConfig),
    MachZehnder(MachZehnderConfig),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SpinBath(_) => "spinbath",
            Scenario::SpinBoson(_) => "spinboson",
            Scenario::PlaneWave(_) => "freeparticle-planewave",
            Scenario::GaussMomentum(_) => "freeparticle-gauss-momentum",
            Scenario::GaussPosition(_) => "freeparticle-gauss-position",
            Scenario::SternGerlach(_) => "sterngerlach",
            Scenario::MachZehnder(_) => "machzehnder",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub grid: TimeGrid,
    pub time_unit: TimeUnit,
    pub output: Option<PathBuf>,
    pub seed: u64,
}

fn typed<T: DeserializeOwned>(name: &str, table: toml::Table) -> ScenarioResult<T> {
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| ScenarioError::Config(format!("[parameters] for {name}: {e}")))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> ScenarioResult<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| ScenarioError::Config(e.to_string()))?;
        let header = raw.scenario;
        let name = header.name.as_str();
        let params = raw.parameters;
        let scenario = match name {
            "spinbath" => Scenario::SpinBath(typed(name, params)?),
            "spinboson" => Scenario::SpinBoson(typed(name, params)?),
            "freeparticle-planewave" => Scenario::PlaneWave(typed(name, params)?),
            "freeparticle-gauss-momentum" => Scenario::GaussMomentum(typed(name, params)?),
            "freeparticle-gauss-position" => Scenario::GaussPosition(typed(name, params)?),
            "sterngerlach" => Scenario::SternGerlach(typed(name, params)?),
            "machzehnder" => Scenario::MachZehnder(typed(name, params)?),
            other => return Err(ScenarioError::Config(format!("unknown scenario '{other}'"))),
        };
        let grid = TimeGrid { t_min: header.t_min, t_max: header.t_max, points: header.points, spacing: header.scale };
        let config = Self { scenario, grid, time_unit: header.time_unit, output: header.output, seed: header.seed };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> ScenarioResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> ScenarioResult<()> {
        self.grid.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
        if self.time_unit == TimeUnit::TauD && matches!(self.scenario, Scenario::SpinBath(_) | Scenario::GaussMomentum(_)) {
            return Err(ScenarioError::Config(format!("time_unit = \"tau_d\" is not defined for {}", self.scenario.name())));
        }
        self.build_models().map(|_| ())
    }

    fn build_models(&self) -> ScenarioResult<Models> {
        let cfg = |e: Error| ScenarioError::Config(e.to_string());
        Ok(match &self.scenario {
            Scenario::SpinBath(c) => {
                if c.size == 0 || !(c.coupling_max > c.coupling_min) {
                    return Err(ScenarioError::Config("spinbath needs size >= 1 and coupling_max > coupling_min".into()));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let g: Vec<f64> = (0..c.size).map(|_| rand::Rng::random_range(&mut rng, c.coupling_min..c.coupling_max)).collect();
                let env = match c.environment {
                    EnvironmentKind::Product => Environment::zurek_product(&g),
                    EnvironmentKind::Flat => Environment::zurek_flat(&g),
                };
                Models::SpinBath(SpinBathParams::equal_superposition_qubit(env).map_err(cfg)?)
            }
            Scenario::SpinBoson(c) => {
                if !(c.tol > 0.0) {
                    return Err(ScenarioError::Config("tol must be positive".into()));
                }
                Models::SpinBoson(SpinBosonParams::equal_superposition(c.omega_s, c.gamma).map_err(cfg)?, c.tol)
            }
            Scenario::PlaneWave(c) => {
                let form = match c.sigma_form {
                    SigmaFormConfig::Exact => SigmaForm::Exact,
                    SigmaFormConfig::ShortTime => SigmaForm::ShortTime,
                };
                let p = PlaneWaveParams::new(c.k, c.half_width, c.lambda_t, c.gamma).map_err(cfg)?.with_sigma_form(form);
                if self.time_unit == TimeUnit::TauD && !(c.gamma > 0.0) {
                    return Err(ScenarioError::Config("tau_d needs gamma > 0".into()));
                }
                Models::PlaneWave(p)
            }
            Scenario::GaussMomentum(c) => {
                Models::GaussMomentum(GaussianMomentumParams::new(c.sigma, c.mass, c.temperature, c.gamma).map_err(cfg)?)
            }
            Scenario::GaussPosition(c) => {
                Models::GaussPosition(GaussianPositionParams::new(c.sigma, c.mass, c.temperature, c.gamma).map_err(cfg)?)
            }
            Scenario::SternGerlach(c) => {
                let p = SGModelParams::new(c.epsilon, c.lambda, c.mass, c.sigma, c.gamma, c.lambda_t, c.spin_up_weight).map_err(cfg)?;
                if self.time_unit == TimeUnit::TauD && !(c.gamma > 0.0) {
                    return Err(ScenarioError::Config("tau_d needs gamma > 0".into()));
                }
                Models::SternGerlach(p)
            }
            Scenario::MachZehnder(c) => {
                if !(c.gamma >= 0.0) || c.trials == 0 {
                    return Err(ScenarioError::Config("machzehnder needs gamma >= 0 and trials >= 1".into()));
                }
                if self.time_unit == TimeUnit::TauD && !(c.gamma > 0.0) {
                    return Err(ScenarioError::Config("tau_d needs gamma > 0".into()));
                }
                Models::MachZehnder(c.clone())
            }
        })
    }
}

enum Models {
    SpinBath(SpinBathParams),
    SpinBoson(SpinBosonParams, f64),
    PlaneWave(PlaneWaveParams),
    GaussMomentum(GaussianMomentumParams),
    GaussPosition(GaussianPositionParams),
    SternGerlach(SGModelParams),
    MachZehnder(MachZehnderConfig),
}

impl Models {
    fn tau_d(&self) -> f64 {
        match self {
            Models::SpinBoson(p, _) => 1.0 / (4.0 * p.gamma),
            Models::PlaneWave(p) => p.tau_d(),
            Models::GaussPosition(p) => p.tau_d(),
            Models::SternGerlach(p) => p.tau_slow(),
            Models::MachZehnder(c) => 1.0 / (4.0 * c.gamma),
            Models::SpinBath(_) | Models::GaussMomentum(_) => f64::NAN,
        }
    }

    fn aux_columns(&self) -> Vec<String> {
        let names: &[&str] = match self {
            Models::SpinBath(_) => &["z_abs"],
            Models::SpinBoson(..) => &["coherence_abs", "max_abs_error"],
            Models::PlaneWave(_) => &["exact_reduction"],
            Models::GaussMomentum(_) => &["gamma_t"],
            Models::GaussPosition(_) => &["t_over_tau_d"],
            Models::SternGerlach(_) => &["suppression", "separation"],
            Models::MachZehnder(_) => &["std_dev", "predicted_std_dev"],
        };
        names.iter().map(|s| s.to_string()).collect()
    }

    /// Returns the row and the tolerance within which it must re-validate.
    fn row(&self, t: f64, index: usize, seed: u64) -> crate::Result<(SeriesRow, f64)> {
        let row = |analytic, numeric, aux| SeriesRow { t, analytic, numeric, aux };
        Ok(match self {
            Models::SpinBath(p) => {
                let numeric = decoherence_finite(&brute_force_evolve(p, t)?)?;
                (row(de_closed_form(p, t)?, numeric, vec![z_factor(p, 0, 1, t).norm()]), 1e-10)
            }
            Models::SpinBoson(p, tol) => {
                let rho = if t == 0.0 {
                    p.initial().clone()
                } else {
                    let control = StepControl { output_points: 2, tol: *tol, ..Default::default() };
                    integrate_master(p, t, control)?.states.pop().expect("final state")
                };
                let err = rho.max_abs_diff(&analytic_rho(p, t)?);
                let numeric = decoherence_finite(&rho)?;
                (row(de_analytic(p, t), numeric, vec![rho.get(0, 1).norm(), err]), 1e-6)
            }
            Models::PlaneWave(p) => {
                let numeric = decoherence_continuous(&plane_wave_kernel(p, t))?;
                let z = (2.0 * crate::continuous::sigma_of_t(p, t)).sqrt() * p.half_width;
                let exact = de_plane_wave_reduction_z(z);
                // The quadrature is checked against the exact reduction, not the erf closed form.
                if (numeric - exact).abs() > 1e-5 {
                    return Err(Error::QuadratureNonConvergence { change: (numeric - exact).abs(), tol: 1e-5 });
                }
                (row(de_plane_wave_erf(p, t)?, numeric, vec![exact]), f64::INFINITY)
            }
            Models::GaussMomentum(p) => {
                let numeric = decoherence_continuous(&gaussian_momentum_kernel(p, t))?;
                (row(gaussian_momentum_de(p, t)?, numeric, vec![p.gamma * t]), 1e-5)
            }
            Models::GaussPosition(p) => {
                let numeric = decoherence_continuous(&gaussian_position_kernel(p, t))?;
                (row(gaussian_position_de(p, t)?, numeric, vec![t / p.tau_d()]), 1e-5)
            }
            Models::SternGerlach(p) => {
                let numeric = block_de(&two_timescale_state_comoving(p, t)?)?;
                (row(closed_form_de(p, t)?, numeric, vec![p.suppression(t), p.separation(t)]), 1e-5)
            }
            Models::MachZehnder(c) => {
                let rho = coherence_from_dephasing(c.gamma, c.omega_s, t)?;
                let shots = if c.shots == 0 { Shots::Infinite } else { Shots::Finite(c.shots) };
                let summary = monte_carlo_protocol(&rho, shots, c.trials, seed.wrapping_add(index as u64), &default_phase_grid())?;
                let tol = if c.shots == 0 { 1e-9 } else { 8.0 * summary.predicted_std_dev / (c.trials as f64).sqrt() + 1e-6 };
                let analytic = -(-4.0 * c.gamma * t).exp_m1();
                (row(analytic, summary.mean, vec![summary.std_dev, summary.predicted_std_dev]), tol)
            }
        })
    }
}

/// Evaluates the scenario on its time grid and re-validates every row
/// against the scenario's closed form.
pub fn run_scenario(config: &ScenarioConfig) -> ScenarioResult<DecoherenceSeries> {
    config.grid.validate().map_err(|e| ScenarioError::Config(e.to_string()))?;
    let models = config.build_models()?;
    let scale = match config.time_unit {
        TimeUnit::Absolute => 1.0,
        TimeUnit::TauD => models.tau_d(),
    };
    let times = config.grid.times();
    let rows: Vec<crate::Result<(SeriesRow, f64)>> = times
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let (mut row, tol) = models.row(t * scale, i, config.seed)?;
            row.t = t;
            Ok((row, tol))
        })
        .collect();
    let mut series = DecoherenceSeries::new(models.aux_columns());
    for result in rows {
        let (row, tol) = result?;
        check_row(&row, tol)?;
        series.push(row)?;
    }
    Ok(series)
}

const RANGE_TOL: f64 = 1e-6;

/// The numeric column may leave `[0, 1]` by as much as its own tolerance
/// (finite-shot estimates scatter around the true value).
fn check_row(row: &SeriesRow, tol: f64) -> crate::Result<()> {
    let numeric_slack = if tol.is_finite() { tol.max(RANGE_TOL) } else { RANGE_TOL };
    for (v, slack) in [(row.analytic, RANGE_TOL), (row.numeric, numeric_slack)] {
        if !(v >= -slack && v <= 1.0 + slack) {
            return Err(Error::Unphysical(format!("D_e = {v} at t = {} lies outside [0, 1]", row.t)));
        }
    }
    let gap = (row.analytic - row.numeric).abs();
    if gap > tol {
        return Err(Error::QuadratureNonConvergence { change: gap, tol });
    }
    Ok(())
}

/// Column labels and comment header of a plot-data file.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureStyle {
    pub title: String,
    pub columns: Vec<String>,
}

/// Writes `series` as whitespace-separated columns with a `#` header.
pub fn emit_figure_data<W: io::Write>(series: &DecoherenceSeries, style: &FigureStyle, mut out: W) -> ScenarioResult<()> {
    if series.is_empty() {
        return Err(ScenarioError::Numerical(Error::EmptySeries));
    }
    let width = 3 + series.aux_columns.len();
    if style.columns.len() != width {
        return Err(ScenarioError::Numerical(Error::DimensionMismatch { expected: width, got: style.columns.len() }));
    }
    let mut text = format!("# {}\n# {}\n", style.title, style.columns.join(" "));
    for row in &series.rows {
        write_float(&mut text, row.t);
        for v in [row.analytic, row.numeric].iter().chain(&row.aux) {
            text.push(' ');
            write_float(&mut text, *v);
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

/// `t/τ_D` grid shared by both figures: 101 points on `[0, 5]`.
pub fn figure_grid() -> Vec<f64> {
    (0..=100).map(|i| (i * 5) as f64 / 100.0).collect()
}

fn plane_wave_oracle_z(z: f64) -> crate::Result<f64> {
    // 1 − (1/4L²)∫(2L − |u|)e^{−2σu²}du with L = 1, 2σ = z².
    let integral = adaptive_gk(|u| (2.0 - u.abs()) * (-z * z * u * u).exp(), -2.0, 2.0, 1e-13, 1e-12)?;
    Ok(1.0 - integral / 4.0)
}

/// Plane-wave curves against `t/τ_D` with the short-time σ, so that
/// `sqrt(2σ)L = sqrt(2t/τ_D)`.
pub fn figure1_series() -> crate::Result<DecoherenceSeries> {
    let mut series = DecoherenceSeries::new(vec!["one_minus_exp".into()]);
    for x in figure_grid() {
        let z = (2.0 * x).sqrt();
        series.push(SeriesRow { t: x, analytic: de_plane_wave_erf_z(z), numeric: plane_wave_oracle_z(z)?, aux: vec![-(-x).exp_m1()] })?;
    }
    Ok(series)
}

pub fn figure1_style() -> FigureStyle {
    FigureStyle {
        title: "plane wave on [-L, L]: erf closed form, exact quadrature, and 1 - exp(-t/tau_D)".into(),
        columns: vec!["t/tau_D".into(), "de_erf_form".into(), "de_quadrature".into(), "one_minus_exp".into()],
    }
}

/// Gaussian packet with position coupling (τ_D = 1): closed form and
/// quadrature of the kernel.
pub fn figure2_series() -> crate::Result<DecoherenceSeries> {
    let p = GaussianPositionParams::new(1.0, 1.0, 1.0, 0.125)?;
    let rows: Vec<crate::Result<SeriesRow>> = figure_grid()
        .par_iter()
        .map(|&x| {
            let t = x * p.tau_d();
            let numeric = decoherence_continuous(&gaussian_position_kernel(&p, t))?;
            Ok(SeriesRow { t: x, analytic: gaussian_position_de(&p, t)?, numeric, aux: vec![] })
        })
        .collect();
    let mut series = DecoherenceSeries::new(vec![]);
    for row in rows {
        series.push(row?)?;
    }
    Ok(series)
}

pub fn figure2_style() -> FigureStyle {
    FigureStyle {
        title: "Gaussian packet, position coupling: closed form and quadrature".into(),
        columns: vec!["t/tau_D".into(), "de_closed_form".into(), "de_quadrature".into()],
    }
}

/// Figure data for figure `which` (1 or 2) as text.
pub fn figure_text(which: u8) -> ScenarioResult<Vec<u8>> {
    let (series, style) = match which {
        1 => (figure1_series()?, figure1_style()),
        2 => (figure2_series()?, figure2_style()),
        other => return Err(ScenarioError::Config(format!("no figure {other}; choose 1 or 2"))),
    };
    let mut buf = Vec::new();
    emit_figure_data(&series, &style, &mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(body: &str) -> ScenarioResult<ScenarioConfig> {
        ScenarioConfig::parse(body)
    }

    #[test]
    fn parses_and_runs_spin_boson() {
        let c = config(
            "[scenario]\nname = \"spinboson\"\nt_max = 4.0\npoints = 100\n[parameters]\ngamma = 0.5\nomega_s = 1.0\n",
        )
        .unwrap();
        let s = run_scenario(&c).unwrap();
        assert_eq!(s.len(), 100);
        assert!(s.max_discrepancy() < 1e-6);
    }

    #[test]
    fn gaussian_position_in_tau_units() {
        let c = config(
            "[scenario]\nname = \"freeparticle-gauss-position\"\nt_max = 2.0\npoints = 3\ntime_unit = \"tau_d\"\n\
             [parameters]\nsigma = 0.7\nmass = 2.0\ntemperature = 3.0\ngamma = 0.01\n",
        )
        .unwrap();
        let s = run_scenario(&c).unwrap();
        assert_eq!(s.rows[1].t, 1.0);
        assert!((s.rows[1].analytic - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!((s.rows[1].numeric - 0.292_893_218_813_452_5).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_configs() {
        let unknown = config("[scenario]\nname = \"nope\"\nt_max = 1.0\n").unwrap_err();
        assert_eq!(unknown.exit_code(), 2);
        let extra = config("[scenario]\nname = \"spinboson\"\nt_max = 1.0\n[parameters]\ngamma = 0.1\nomega_s = 1.0\nfoo = 1\n");
        assert_eq!(extra.unwrap_err().exit_code(), 2);
        let missing = config("[scenario]\nname = \"spinboson\"\nt_max = 1.0\n[parameters]\ngamma = 0.1\n");
        assert_eq!(missing.unwrap_err().exit_code(), 2);
        let header = config("[scenario]\nname = \"spinboson\"\nt_max = 1.0\ncolour = 1\n[parameters]\ngamma = 0.1\nomega_s = 1.0\n");
        assert_eq!(header.unwrap_err().exit_code(), 2);
        let grid = config("[scenario]\nname = \"spinboson\"\nt_max = 0.0\n[parameters]\ngamma = 0.1\nomega_s = 1.0\n");
        assert_eq!(grid.unwrap_err().exit_code(), 2);
        let unit = config("[scenario]\nname = \"spinbath\"\nt_max = 1.0\ntime_unit = \"tau_d\"\n[parameters]\nenvironment = \"flat\"\nsize = 4\n");
        assert_eq!(unit.unwrap_err().exit_code(), 2);
    }

    #[test]
    fn range_slack_follows_row_tolerance() {
        let row = |numeric| SeriesRow { t: 0.0, analytic: 0.0, numeric, aux: vec![] };
        assert!(check_row(&row(-0.004), 0.01).is_ok());
        assert!(check_row(&row(-0.004), f64::INFINITY).is_err());
        assert!(check_row(&row(-5e-7), 1e-6).is_ok());
        assert!(check_row(&row(-5e-6), 1e-5).is_ok());
        assert!(check_row(&SeriesRow { t: 0.0, analytic: -0.004, numeric: 0.0, aux: vec![] }, 0.01).is_err());
    }

    #[test]
    fn figure_points() {
        let grid = figure_grid();
        assert_eq!(grid.len(), 101);
        assert_eq!(grid[20], 1.0);
        let f2 = figure2_series().unwrap();
        assert!((f2.rows[20].analytic - 0.292_893_218_813_452_5).abs() < 1e-12);
        assert!((f2.rows[20].numeric - f2.rows[20].analytic).abs() < 1e-6);
        let f1 = figure1_series().unwrap();
        assert!((f1.rows[20].analytic - 0.401_855_993_338_695_9).abs() < 1e-12);
        assert!((f1.rows[20].numeric - 0.498_340_692_528_897_85).abs() < 1e-10);
    }

    #[test]
    fn empty_series_is_rejected() {
        let err = emit_figure_data(&DecoherenceSeries::new(vec![]), &figure2_style(), Vec::new()).unwrap_err();
        assert!(matches!(err, ScenarioError::Numerical(Error::EmptySeries)));
    }
}
