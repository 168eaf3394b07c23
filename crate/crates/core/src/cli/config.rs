//! Run configuration: one JSON document per run. Unknown fields are rejected.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Deserialize;

use crate::fock::Statistics;
use crate::grid::UniformGrid;
use crate::noncommutative::{Boundary, Derivative};
use crate::probability::{Event, FockPredicate, OccupationRange};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    #[serde(default)]
    pub requests: Vec<Request>,
    #[serde(default)]
    pub format: Option<Format>,
    #[serde(default)]
    pub tolerance: ToleranceOverrides,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Replacement route-agreement tolerance. Still multiplied by the
/// environment scale.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub route: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SystemConfig {
    Discrete(DiscreteConfig),
    Grid1d(Grid1dConfig),
    Grid2d(Grid2dConfig),
    Fock(FockConfig),
    Evolve(EvolveConfig),
    Noncomm(NoncommConfig),
}

impl SystemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            SystemConfig::Discrete(_) => "discrete",
            SystemConfig::Grid1d(_) => "grid1d",
            SystemConfig::Grid2d(_) => "grid2d",
            SystemConfig::Fock(_) => "fock",
            SystemConfig::Evolve(_) => "evolve",
            SystemConfig::Noncomm(_) => "noncomm",
        }
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        match c {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn complex_vec(v: &[ComplexSpec]) -> Vec<Complex64> {
    v.iter().map(|&c| c.into()).collect()
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Ce,
    Ap,
    Cp,
}

/// One requested quantity. `event` defaults to Ω; `given` is the
/// conditioning event of a CP.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub quantity: Quantity,
    #[serde(default)]
    pub event: Option<EventSpec>,
    #[serde(default)]
    pub given: Option<EventSpec>,
    /// grid2d: `"x"`, `"y"` or `"xy"`.
    #[serde(default)]
    pub observable: Option<String>,
    /// fock: coefficients `a_j` of `Σ a_j n_j`.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    /// grid2d: condition on the row `Y = at_y` instead of an event.
    #[serde(default)]
    pub at_y: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum EventSpec {
    Omega,
    Indices(Vec<usize>),
    Intervals(Vec<[f64; 2]>),
    Mask(Vec<bool>),
    Product(Vec<EventSpec>),
    Occupation(OccupationSpec),
    Total(RangeSpec),
    Intersect(Vec<EventSpec>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccupationSpec {
    pub mode: usize,
    pub min: u32,
    pub max: u32,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub min: u32,
    pub max: u32,
}

/// What Ω means for the system an event is resolved against.
#[derive(Debug, Clone, Copy)]
pub enum Space {
    Discrete(usize),
    Line,
    Plane,
    Fock,
}

impl EventSpec {
    pub fn resolve(&self, space: Space) -> Result<Event> {
        Ok(match (self, space) {
            (EventSpec::Omega, Space::Discrete(dim)) => Event::full_discrete(dim),
            (EventSpec::Omega, Space::Line) => Event::whole_line(),
            (EventSpec::Omega, Space::Plane) => Event::whole_plane(),
            (EventSpec::Omega, Space::Fock) => Event::fock(FockPredicate::any()),
            (EventSpec::Indices(ix), _) => Event::discrete(ix.iter().copied()),
            (EventSpec::Intervals(list), _) => Event::intervals(list.iter().map(|[lo, hi]| (*lo, *hi)))?,
            (EventSpec::Mask(flags), _) => Event::mask(flags.clone()),
            (EventSpec::Product(axes), _) => {
                Event::product(axes.iter().map(|a| a.resolve(Space::Line)).collect::<Result<_>>()?)?
            }
            (EventSpec::Occupation(o), _) => {
                Event::fock(FockPredicate::any().with_mode(o.mode, OccupationRange::new(o.min, o.max)))
            }
            (EventSpec::Total(r), _) => Event::fock(FockPredicate::any().with_total(OccupationRange::new(r.min, r.max))),
            (EventSpec::Intersect(parts), _) => {
                let mut iter = parts.iter();
                let first = iter.next().ok_or_else(|| Error::InvalidEvent("intersect needs at least one event".into()))?;
                iter.try_fold(first.resolve(space)?, |acc, e| acc.intersect(&e.resolve(space)?))?
            }
        })
    }
}

pub fn resolve_or_omega(spec: &Option<EventSpec>, space: Space) -> Result<Event> {
    spec.as_ref().unwrap_or(&EventSpec::Omega).resolve(space)
}

// ---------------------------------------------------------------- discrete

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    #[serde(default)]
    pub eigenvalues: Option<Vec<f64>>,
    #[serde(default)]
    pub amplitudes: Option<Vec<ComplexSpec>>,
    #[serde(default)]
    pub preset: Option<OscillatorPreset>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum OscillatorPreset {
    HarmonicOscillator(Oscillator),
}

/// Levels `ε_i = (i + ½)ħω`, `i = 0..levels`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Oscillator {
    pub levels: usize,
    #[serde(default = "one")]
    pub hbar_omega: f64,
    pub recipe: Recipe,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Recipe {
    /// All weight on level 0.
    Ground,
    /// `c_n ∝ αⁿ/√(n!)`, truncated.
    Coherent { alpha: ComplexSpec },
    /// Real `c_n ∝ exp(−β ε_n / 2)`, so `|c_n|²` is a Boltzmann weight.
    Thermal { beta: f64 },
}

fn one() -> f64 {
    1.0
}

// ---------------------------------------------------------------- grids

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// `n` cells of width `(hi − lo)/n`, sampled at their centres.
    #[default]
    CellCentered,
    /// `n` points from `lo` to `hi` inclusive.
    Spanning,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    #[serde(default)]
    pub layout: Layout,
}

impl GridSpec {
    pub fn build(&self) -> Result<UniformGrid> {
        match self.layout {
            Layout::CellCentered => UniformGrid::cell_centered(self.lo, self.hi, self.n),
            Layout::Spanning => UniformGrid::spanning(self.lo, self.hi, self.n),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    #[serde(default)]
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub k0: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum State1dSpec {
    Gaussian(GaussianSpec),
    /// Sample file; relative paths resolve against the config file.
    File(PathBuf),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1dConfig {
    /// Required unless the state comes from a file.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    pub state: State1dSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum State2dSpec {
    BivariateNormal { sx: f64, sy: f64, corr: f64 },
    Separable { x: GaussianSpec, y: GaussianSpec },
    Box2d { lx: f64, ly: f64, qx: u32, qy: u32 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid2dConfig {
    pub x: GridSpec,
    pub y: GridSpec,
    pub state: State2dSpec,
    /// Threshold for the reported independence verdict.
    #[serde(default = "independence_tol")]
    pub independence_tolerance: f64,
}

fn independence_tol() -> f64 {
    1e-10
}

// ---------------------------------------------------------------- fock

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum StatisticsKind {
    Boson,
    Fermion,
}

/// Give either `beta` or `temperature` (with `boltzmann`, default 1).
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    pub mode_energies: Vec<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "one")]
    pub boltzmann: f64,
    #[serde(default)]
    pub mu: f64,
    pub statistics: StatisticsKind,
    #[serde(default)]
    pub n_max: Option<u32>,
}

impl FockConfig {
    pub fn statistics(&self) -> Result<Statistics> {
        match (self.statistics, self.n_max) {
            (StatisticsKind::Fermion, None) => Ok(Statistics::Fermion),
            (StatisticsKind::Fermion, Some(_)) => Err(Error::InvalidEnsemble("n_max applies to bosons only".into())),
            (StatisticsKind::Boson, Some(n_max)) => Ok(Statistics::Boson { n_max }),
            (StatisticsKind::Boson, None) => Err(Error::InvalidEnsemble("bosons need n_max".into())),
        }
    }
}

// ---------------------------------------------------------------- evolve

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolvePreset {
    /// `H = [[0,1],[1,0]]`, `Ψ(0) = (1, 0)`, observable `(0, 1)`.
    Rabi,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub start: f64,
    pub stop: f64,
    /// Number of samples, endpoints included.
    pub steps: usize,
}

impl TimeGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.steps == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::InvalidState("time grid needs finite bounds and at least one step".into()));
        }
        if self.steps == 1 {
            return Ok(vec![self.start]);
        }
        let dt = (self.stop - self.start) / (self.steps - 1) as f64;
        Ok((0..self.steps).map(|k| self.start + k as f64 * dt).collect())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    #[serde(default)]
    pub preset: Option<EvolvePreset>,
    #[serde(default)]
    pub hamiltonian: Option<Vec<Vec<ComplexSpec>>>,
    #[serde(default)]
    pub initial: Option<Vec<ComplexSpec>>,
    #[serde(default)]
    pub observable: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub hbar: f64,
    pub times: TimeGrid,
    /// Event of the CE column (default Ω).
    #[serde(default)]
    pub ce_event: Option<EventSpec>,
    /// Event of the AP column (default Ω).
    #[serde(default)]
    pub ap_event: Option<EventSpec>,
    /// Events of the CP column, `P(cp_event | cp_given)` (both default Ω).
    #[serde(default)]
    pub cp_event: Option<EventSpec>,
    #[serde(default)]
    pub cp_given: Option<EventSpec>,
}

// ---------------------------------------------------------------- noncomm

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoncommConfig {
    pub grid: GridSpec,
    pub gaussian: GaussianSpec,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "zero_boundary")]
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub derivative: DerivativeSpec,
    /// Positions for the sharp-conditioning refinement study.
    pub positions: Vec<f64>,
    #[serde(default = "four")]
    pub halvings: usize,
    /// Positions for the quasi-conditional momentum distribution.
    #[serde(default)]
    pub quasi_cp_positions: Vec<f64>,
    /// Emit the full `P(p|x)` vectors, not only their sums.
    #[serde(default)]
    pub include_distribution: bool,
    /// Half-widths for the window-smeared experiment, at each position.
    #[serde(default)]
    pub window_half_widths: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundarySpec {
    Periodic,
    Zero,
}

impl From<BoundarySpec> for Boundary {
    fn from(b: BoundarySpec) -> Self {
        match b {
            BoundarySpec::Periodic => Boundary::Periodic,
            BoundarySpec::Zero => Boundary::Zero,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DerivativeSpec {
    #[default]
    Central,
    Spectral,
}

impl From<DerivativeSpec> for Derivative {
    fn from(d: DerivativeSpec) -> Self {
        match d {
            DerivativeSpec::Central => Derivative::Central,
            DerivativeSpec::Spectral => Derivative::Spectral,
        }
    }
}

fn zero_boundary() -> BoundarySpec {
    BoundarySpec::Zero
}

fn four() -> usize {
    4
}

// ---------------------------------------------------------------- loading

/// A parsed configuration together with the bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub bytes: Vec<u8>,
    pub base_dir: PathBuf,
}

/// Parse failure with the JSON path of the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.line > 0 {
            write!(f, "config error at line {}, column {}", self.line, self.column)?;
        } else {
            write!(f, "config error")?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, " (field `{}`)", self.path)?;
        }
        write!(f, ": {}", self.message)
    }
}

pub fn parse_config(bytes: &[u8]) -> std::result::Result<RunConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError { path, line: inner.line(), column: inner.column(), message: strip_position(&inner.to_string()) }
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn load_config(path: &Path) -> std::result::Result<LoadedConfig, ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError {
        path: String::new(),
        line: 0,
        column: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let config = parse_config(&bytes)?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(LoadedConfig { config, bytes, base_dir })
}
