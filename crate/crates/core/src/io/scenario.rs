use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{parse_json, schema, ComplexDto};
use crate::cv::states::{gaussian, hermite, random_smooth, squeezed, two_peak, Mode};
use crate::cv::{Grid, MeasurementOrder, WaveFunction, DEFAULT_LENGTH, DEFAULT_POINTS};
use crate::error::{Error, Result};
use crate::oracle::DEFAULT_POSTSELECTION_FLOOR;
use crate::photonics::{DEFAULT_COUNT_FLOOR, DEFAULT_PROBABILITY_FLOOR};
use crate::quantum::{ComplexMatrix, DensityMatrix, ObservableSpec, QuantumState};
use crate::random::{random_density, random_observable, random_state, seeded};

/// A complete run description, discriminated by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    DiscreteConditional(DiscreteConditionalScenario),
    DiscreteJoint(DiscreteJointScenario),
    DiscreteNpoint(DiscreteNpointScenario),
    CvConditional(CvConditionalScenario),
    CvJoint(CvJointScenario),
    Experiment(ExperimentScenario),
    Ccr(CcrScenario),
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::DiscreteConditional(_) => "discrete-conditional",
            Scenario::DiscreteJoint(_) => "discrete-joint",
            Scenario::DiscreteNpoint(_) => "discrete-npoint",
            Scenario::CvConditional(_) => "cv-conditional",
            Scenario::CvJoint(_) => "cv-joint",
            Scenario::Experiment(_) => "experiment",
            Scenario::Ccr(_) => "ccr",
        }
    }

    /// Checks everything serde cannot: observable dimensions, grid invariants,
    /// index ranges and numeric ranges.
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::DiscreteConditional(s) => {
                let d = s.state.dim();
                let (a, b) = s.observables()?;
                check_obs_dim("a", &a, d)?;
                check_obs_dim("b", &b, d)?;
                if s.post_selection >= d {
                    return Err(schema("post_selection", format!("outcome {} outside 0..{d}", s.post_selection)));
                }
                if let Some(n) = s.orders {
                    if n < d {
                        return Err(schema("orders", format!("need at least {d} moment orders, got {n}")));
                    }
                }
                if !s.state.is_pure() {
                    return Err(schema("state", "conditional reconstruction needs a pure state"));
                }
                s.state.load()?;
                check_positive("floor", s.floor, true)
            }
            Scenario::DiscreteJoint(s) => {
                let d = s.state.dim();
                check_obs_dim("a", &s.a, d)?;
                check_obs_dim("b", &s.b, d)?;
                s.state.load().map(|_| ())
            }
            Scenario::DiscreteNpoint(s) => {
                if s.observables.is_empty() {
                    return Err(schema("observables", "at least one observable is required"));
                }
                let d = s.state.dim();
                for (i, o) in s.observables.iter().enumerate() {
                    check_obs_dim(&format!("observables[{i}]"), o, d)?;
                }
                if !s.state.is_pure() {
                    return Err(schema("state", "N-point reconstruction needs a pure state"));
                }
                s.state.load().map(|_| ())
            }
            Scenario::CvConditional(s) => {
                let g = s.grid.build()?;
                if s.pixel >= g.points() {
                    return Err(schema("pixel", format!("pixel {} outside 0..{}", s.pixel, g.points())));
                }
                check_positive("floor", s.floor, true)?;
                s.state.load(&g).map(|_| ())
            }
            Scenario::CvJoint(s) => {
                check_positive("floor", s.floor, true)?;
                s.state.load(&s.grid.build()?).map(|_| ())
            }
            Scenario::Experiment(s) => {
                let g = s.grid.build()?;
                s.check(&g)?;
                s.state.load(&g).map(|_| ())
            }
            Scenario::Ccr(s) => {
                let g = s.grid.build()?;
                if let Some(e) = &s.experiment {
                    e.check()?;
                }
                s.state.load(&g).map(|_| ())
            }
        }
    }
}

fn check_obs_dim(field: &str, o: &ObservableDto, d: usize) -> Result<()> {
    let od = o.dim();
    if od != d {
        return Err(schema(field, format!("observable has dimension {od}, state has {d}")));
    }
    o.build(field).map(|_| ())
}

fn check_positive(field: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = v.is_finite() && (v > 0.0 || (allow_zero && v == 0.0));
    if !ok {
        return Err(schema(field, format!("must be {}, got {v}", if allow_zero { "non-negative" } else { "positive" })));
    }
    Ok(())
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let s: Scenario = parse_json(text)?;
    s.validate()?;
    Ok(s)
}

fn default_floor() -> f64 {
    DEFAULT_POSTSELECTION_FLOOR
}

fn default_cv_floor() -> f64 {
    1e-12
}

/// Weak observable `a`, post-selected observable `b` and outcome index. Qubit
/// scenarios default to `a = σ_z`, `b = σ_x`, outcome 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConditionalScenario {
    pub state: StateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<ObservableDto>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<ObservableDto>,
    #[serde(default)]
    pub post_selection: usize,
    /// Number of moment orders `0..orders`; more than `d` switches to least squares.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orders: Option<usize>,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default)]
    pub renormalize: bool,
}

impl DiscreteConditionalScenario {
    pub fn observables(&self) -> Result<(ObservableDto, ObservableDto)> {
        let qubit = self.state.dim() == 2;
        let pick = |o: &Option<ObservableDto>, field: &str, fallback: ObservableDto| match o {
            Some(o) => Ok(o.clone()),
            None if qubit => Ok(fallback),
            None => Err(schema(field, "required unless the state is a qubit")),
        };
        Ok((pick(&self.a, "a", ObservableDto::PauliZ)?, pick(&self.b, "b", ObservableDto::PauliX)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteJointScenario {
    pub state: StateSpec,
    pub a: ObservableDto,
    pub b: ObservableDto,
    #[serde(default)]
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteNpointScenario {
    pub state: StateSpec,
    pub observables: Vec<ObservableDto>,
    #[serde(default)]
    pub renormalize: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvConditionalScenario {
    #[serde(default)]
    pub grid: GridSpec,
    pub state: CvStateSpec,
    #[serde(default)]
    pub order: OrderDto,
    /// Post-selected grid index (momentum for `x-then-p`, position for `p-then-x`).
    pub pixel: usize,
    #[serde(default = "default_cv_floor")]
    pub floor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvJointScenario {
    #[serde(default)]
    pub grid: GridSpec,
    pub state: CvStateSpec,
    #[serde(default)]
    pub order: OrderDto,
    #[serde(default = "default_cv_floor")]
    pub floor: f64,
}

fn default_shards() -> usize {
    1
}

fn default_count_floor() -> u64 {
    DEFAULT_COUNT_FLOOR
}

fn default_probability_floor() -> f64 {
    DEFAULT_PROBABILITY_FLOOR
}

/// Shot-level simulation of the optical k-sweep. `shots: null` uses exact
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentScenario {
    #[serde(default)]
    pub grid: GridSpec,
    pub state: CvStateSpec,
    #[serde(default)]
    pub order: OrderDto,
    pub epsilon: f64,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default = "default_count_floor")]
    pub count_floor: u64,
    #[serde(default = "default_probability_floor")]
    pub probability_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pixels: Option<Vec<usize>>,
    #[serde(default)]
    pub joint: bool,
    /// Also write the raw camera counts of every setting.
    #[serde(default)]
    pub histograms: bool,
}

impl ExperimentScenario {
    fn check(&self, g: &Grid) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < PI / 4.0) {
            return Err(schema("epsilon", format!("coupling must lie in (0, π/4), got {}", self.epsilon)));
        }
        if self.shots == Some(0) {
            return Err(schema("shots", "must be positive or null"));
        }
        if self.shards == 0 || self.shards > crate::photonics::MAX_SHARDS {
            return Err(schema("shards", format!("must lie in 1..={}", crate::photonics::MAX_SHARDS)));
        }
        check_positive("probability_floor", self.probability_floor, true)?;
        if let Some(px) = self.pixels.iter().flatten().find(|&&p| p >= g.points()) {
            return Err(schema("pixels", format!("pixel {px} outside 0..{}", g.points())));
        }
        Ok(())
    }
}

/// Commutator witness. Without `experiment` the joints are exact; with it both
/// measurement orders are simulated and combined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcrScenario {
    #[serde(default)]
    pub grid: GridSpec,
    pub state: CvStateSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<CcrExperiment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CcrExperiment {
    pub epsilon: f64,
    #[serde(default)]
    pub shots: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shards")]
    pub shards: usize,
    #[serde(default = "default_count_floor")]
    pub count_floor: u64,
}

impl CcrExperiment {
    fn check(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < PI / 4.0) {
            return Err(schema("experiment.epsilon", format!("coupling must lie in (0, π/4), got {}", self.epsilon)));
        }
        if self.shots == Some(0) {
            return Err(schema("experiment.shots", "must be positive or null"));
        }
        if self.shards == 0 || self.shards > crate::photonics::MAX_SHARDS {
            return Err(schema("experiment.shards", format!("must lie in 1..={}", crate::photonics::MAX_SHARDS)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderDto {
    #[default]
    XThenP,
    PThenX,
}

impl From<OrderDto> for MeasurementOrder {
    fn from(o: OrderDto) -> Self {
        match o {
            OrderDto::XThenP => MeasurementOrder::XThenP,
            OrderDto::PThenX => MeasurementOrder::PThenX,
        }
    }
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_length() -> f64 {
    DEFAULT_LENGTH
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_length")]
    pub length: f64,
    #[serde(default = "one")]
    pub hbar: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: DEFAULT_POINTS, length: DEFAULT_LENGTH, hbar: 1.0 }
    }
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::with_hbar(self.points, self.length, self.hbar).map_err(|e| schema("grid", e.to_string()))
    }
}

/// Finite-dimensional state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    /// Amplitudes in the computational basis; `normalize` rescales them first.
    Pure {
        amplitudes: Vec<ComplexDto>,
        #[serde(default)]
        normalize: bool,
    },
    /// Row-major density matrix.
    Density { matrix: Vec<Vec<ComplexDto>> },
    Basis { dim: usize, index: usize },
    RandomPure { dim: usize, seed: u64 },
    RandomMixed { dim: usize, seed: u64 },
}

/// A loaded finite-dimensional state.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedState {
    Pure(QuantumState),
    Mixed(DensityMatrix),
}

impl LoadedState {
    pub fn density(&self) -> DensityMatrix {
        match self {
            LoadedState::Pure(s) => s.to_density(),
            LoadedState::Mixed(r) => r.clone(),
        }
    }
}

impl StateSpec {
    pub fn dim(&self) -> usize {
        match self {
            StateSpec::Pure { amplitudes, .. } => amplitudes.len(),
            StateSpec::Density { matrix } => matrix.len(),
            StateSpec::Basis { dim, .. } | StateSpec::RandomPure { dim, .. } | StateSpec::RandomMixed { dim, .. } => *dim,
        }
    }

    pub fn is_pure(&self) -> bool {
        !matches!(self, StateSpec::Density { .. } | StateSpec::RandomMixed { .. })
    }

    pub fn load(&self) -> Result<LoadedState> {
        let wrap = |e: Error| schema("state", e.to_string());
        Ok(match self {
            StateSpec::Pure { amplitudes, normalize } => {
                let v = amplitudes.iter().map(|&z| z.into()).collect();
                LoadedState::Pure(if *normalize { QuantumState::normalized(v) } else { QuantumState::new(v) }.map_err(wrap)?)
            }
            StateSpec::Density { matrix } => LoadedState::Mixed(DensityMatrix::new(square("state.matrix", matrix)?).map_err(wrap)?),
            StateSpec::Basis { dim, index } => LoadedState::Pure(QuantumState::basis(*dim, *index).map_err(wrap)?),
            StateSpec::RandomPure { dim, seed } => {
                check_dim("state.dim", *dim)?;
                LoadedState::Pure(random_state(*dim, &mut seeded(*seed)))
            }
            StateSpec::RandomMixed { dim, seed } => {
                check_dim("state.dim", *dim)?;
                LoadedState::Mixed(random_density(*dim, &mut seeded(*seed)))
            }
        })
    }
}

fn check_dim(field: &str, d: usize) -> Result<()> {
    if d < 2 {
        return Err(schema(field, format!("dimension must be at least 2, got {d}")));
    }
    Ok(())
}

fn square(field: &str, rows: &[Vec<ComplexDto>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(schema(field, "matrix must be square and non-empty"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j].into()))
}

/// Finite-dimensional observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObservableDto {
    PauliX,
    PauliY,
    PauliZ,
    /// Diagonal in the computational basis.
    Diagonal { eigenvalues: Vec<f64> },
    /// Discrete Fourier basis `e^{2πi jk/d}/√d`, fully incompatible with any
    /// diagonal observable. Eigenvalues default to `0, 1, …, d-1`.
    Fourier {
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eigenvalues: Option<Vec<f64>>,
    },
    /// Row-major Hermitian matrix, diagonalized on load.
    Hermitian { matrix: Vec<Vec<ComplexDto>> },
    /// Eigenvalues and row-major unitary whose column `j` is eigenvector `j`.
    Spectral { eigenvalues: Vec<f64>, eigenvectors: Vec<Vec<ComplexDto>> },
    Random { dim: usize, seed: u64 },
}

impl ObservableDto {
    pub fn dim(&self) -> usize {
        match self {
            ObservableDto::PauliX | ObservableDto::PauliY | ObservableDto::PauliZ => 2,
            ObservableDto::Diagonal { eigenvalues } | ObservableDto::Spectral { eigenvalues, .. } => eigenvalues.len(),
            ObservableDto::Fourier { dim, .. } | ObservableDto::Random { dim, .. } => *dim,
            ObservableDto::Hermitian { matrix } => matrix.len(),
        }
    }

    pub fn build(&self, field: &str) -> Result<ObservableSpec> {
        let wrap = |e: Error| schema(field, e.to_string());
        match self {
            ObservableDto::PauliX => Ok(ObservableSpec::pauli_x()),
            ObservableDto::PauliY => Ok(ObservableSpec::pauli_y()),
            ObservableDto::PauliZ => Ok(ObservableSpec::pauli_z()),
            ObservableDto::Diagonal { eigenvalues } => ObservableSpec::diagonal(eigenvalues.clone()).map_err(wrap),
            ObservableDto::Fourier { dim, eigenvalues } => {
                check_dim(field, *dim)?;
                let eig = eigenvalues.clone().unwrap_or_else(|| (0..*dim).map(|i| i as f64).collect());
                if eig.len() != *dim {
                    return Err(schema(field, format!("{} eigenvalues for dimension {dim}", eig.len())));
                }
                let d = *dim as f64;
                let f = DMatrix::from_fn(*dim, *dim, |j, k| Complex64::from_polar(d.sqrt().recip(), 2.0 * PI * (j * k) as f64 / d));
                ObservableSpec::new(eig, f).map_err(wrap)
            }
            ObservableDto::Hermitian { matrix } => ObservableSpec::from_hermitian(&square(field, matrix)?).map_err(wrap),
            ObservableDto::Spectral { eigenvalues, eigenvectors } => {
                ObservableSpec::new(eigenvalues.clone(), square(field, eigenvectors)?).map_err(wrap)
            }
            ObservableDto::Random { dim, seed } => {
                check_dim(field, *dim)?;
                Ok(random_observable(*dim, &mut seeded(*seed)))
            }
        }
    }
}

fn zero() -> f64 {
    0.0
}

/// Continuous-variable wavefunction in position representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CvStateSpec {
    Gaussian {
        #[serde(default = "zero")]
        x0: f64,
        #[serde(default = "zero")]
        p0: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Minimum-uncertainty packet of width `e^{-r}`.
    Squeezed {
        r: f64,
        #[serde(default = "zero")]
        x0: f64,
        #[serde(default = "zero")]
        p0: f64,
    },
    TwoPeak {
        separation: f64,
        #[serde(default = "one")]
        width: f64,
        #[serde(default = "zero")]
        phase: f64,
    },
    Hermite {
        order: usize,
        #[serde(default = "zero")]
        x0: f64,
        #[serde(default = "zero")]
        p0: f64,
        #[serde(default = "one")]
        width: f64,
    },
    RandomSmooth { seed: u64 },
    /// Position samples on the grid.
    Samples {
        amplitudes: Vec<ComplexDto>,
        #[serde(default)]
        normalize: bool,
    },
}

impl CvStateSpec {
    pub fn load(&self, g: &Grid) -> Result<WaveFunction> {
        let w = match *self {
            CvStateSpec::Gaussian { x0, p0, width } => gaussian(g, x0, p0, width),
            CvStateSpec::Squeezed { r, x0, p0 } => squeezed(g, r, x0, p0),
            CvStateSpec::TwoPeak { separation, width, phase } => two_peak(g, separation, width, phase),
            CvStateSpec::Hermite { order, x0, p0, width } => hermite(g, Mode { order, x0, p0, width }),
            CvStateSpec::RandomSmooth { seed } => random_smooth(g, &mut seeded(seed)),
            CvStateSpec::Samples { ref amplitudes, normalize } => {
                if amplitudes.len() != g.points() {
                    return Err(schema(
                        "state.amplitudes",
                        format!("{} samples for a {}-point grid", amplitudes.len(), g.points()),
                    ));
                }
                let v = amplitudes.iter().map(|&z| z.into()).collect();
                if normalize {
                    WaveFunction::normalized(*g, v)
                } else {
                    WaveFunction::new(*g, v)
                }
            }
        };
        w.map_err(|e| schema("state", e.to_string()))
    }
}
