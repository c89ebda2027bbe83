//! Run configuration: one TOML file per run, every default embedded.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::empirical::{BinSpec, DEFAULT_SEED};
use crate::error::{Error, Result};
use crate::maps::{Family, Interval, MapSpec, Potential, DEFAULT_DERIV_FLOOR};
use crate::numeric::linspace;
use crate::pressure::{Method, Parameter, PressureOptions, DEFAULT_SLOPE_GAP_TOL};
use crate::symbolic::{DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL};

/// Either an explicit list or `{ start, stop, points }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn range(start: f64, stop: f64, points: usize) -> Self {
        Grid::Range { start, stop, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, points } => linspace(*start, *stop, *points),
        }
    }

    fn validate(&self, name: &str, min_points: usize) -> Result<()> {
        let v = self.values();
        if v.len() < min_points {
            return Err(Error::Invalid(format!("{name} needs at least {min_points} points")));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("{name} contains non-finite values")));
        }
        if v.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid(format!("{name} must be strictly increasing")));
        }
        Ok(())
    }
}

/// The `[map]` section. Mirrors [`Family`] with struct variants so that
/// stray keys next to a parameterless family are rejected too.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    Doubling {},
    Tent { slope: f64 },
    PiecewiseLinear { breakpoints: Vec<f64> },
    Chebyshev {},
    MannevillePomeau { gamma: f64 },
}

impl MapConfig {
    pub fn family(&self) -> Family {
        match self {
            MapConfig::Doubling {} => Family::Doubling,
            MapConfig::Tent { slope } => Family::Tent { slope: *slope },
            MapConfig::PiecewiseLinear { breakpoints } => Family::PiecewiseLinear {
                breakpoints: breakpoints.clone(),
            },
            MapConfig::Chebyshev {} => Family::Chebyshev,
            MapConfig::MannevillePomeau { gamma } => Family::MannevillePomeau { gamma: *gamma },
        }
    }
}

/// Base potential `φ` for `q`-families, temperature and dimension runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    Zero,
    /// `log p_i` on branch `i`.
    Bernoulli { probs: Vec<f64> },
    LocallyConstant { values: Vec<f64> },
    Constant { value: f64 },
    /// The constant `−log m` on an `m`-branch map.
    Uniform,
}

impl PotentialConfig {
    pub fn build(&self, map: &MapSpec) -> Result<Potential> {
        let m = map.branch_count();
        let phi = match self {
            PotentialConfig::Zero => Potential::constant(0.0, m),
            PotentialConfig::Bernoulli { probs } => {
                if probs.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
                    return Err(Error::Invalid(format!("probabilities must lie in (0,1]: {probs:?}")));
                }
                Potential::bernoulli(probs)
            }
            PotentialConfig::LocallyConstant { values } => Potential::locally_constant(values.clone()),
            PotentialConfig::Constant { value } => Potential::constant(*value, m),
            PotentialConfig::Uniform => Potential::constant(-(m as f64).ln(), m),
        };
        phi.validate(map)?;
        Ok(phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PressureTask {
    pub parameter: Parameter,
    /// The parameter held fixed (`q` when varying `t`, and vice versa).
    pub fixed: f64,
    pub grid: Grid,
    pub method: Method,
    pub slope_gap_tol: f64,
}

impl Default for PressureTask {
    fn default() -> Self {
        Self {
            parameter: Parameter::T,
            fixed: 0.0,
            grid: Grid::range(-3.0, 3.0, 61),
            method: Method::PeriodicOrbit { period: 12 },
            slope_gap_tol: DEFAULT_SLOPE_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovTask {
    pub t_grid: Grid,
    /// Defaults to `points` values strictly inside the exponent range.
    pub lambda_grid: Option<Grid>,
    pub points: usize,
    pub method: Method,
    pub slope_gap_tol: f64,
}

impl Default for LyapunovTask {
    fn default() -> Self {
        Self {
            t_grid: Grid::range(-10.0, 10.0, 81),
            lambda_grid: None,
            points: 41,
            method: Method::CylinderMatrix { depth: 1 },
            slope_gap_tol: DEFAULT_SLOPE_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemperatureTask {
    pub q_grid: Grid,
    pub bracket: [f64; 2],
    pub method: Method,
}

impl Default for TemperatureTask {
    fn default() -> Self {
        Self {
            q_grid: Grid::range(-5.0, 5.0, 41),
            bracket: [-4.0, 4.0],
            method: Method::CylinderMatrix { depth: 1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimensionTask {
    /// Defaults to `points` values across the validity window.
    pub alpha_grid: Option<Grid>,
    pub points: usize,
}

impl Default for DimensionTask {
    fn default() -> Self {
        Self {
            alpha_grid: None,
            points: 41,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InduceTask {
    pub base: [f64; 2],
    pub max_time: usize,
    pub max_branches: usize,
    pub t_grid: Grid,
    pub truncations: Vec<usize>,
}

impl Default for InduceTask {
    fn default() -> Self {
        Self {
            base: [0.5, 1.0],
            max_time: 20,
            max_branches: 100_000,
            t_grid: Grid::List(vec![0.0, 0.5, 1.0, 2.0]),
            truncations: vec![2, 5, 10, 20],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmpiricalTask {
    pub starts: usize,
    pub n: usize,
    pub bins: BinSpec,
    pub seed: u64,
}

impl Default for EmpiricalTask {
    fn default() -> Self {
        Self {
            starts: 200,
            n: 20_000,
            bins: BinSpec::default(),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyTask {
    pub slope_gap_tol: f64,
}

impl Default for VerifyTask {
    fn default() -> Self {
        Self {
            slope_gap_tol: DEFAULT_SLOPE_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    pub cylinders: u64,
    pub periodic_tol: f64,
    pub power_tol: f64,
    pub deriv_floor: f64,
}

impl Default for Budgets {
    fn default() -> Self {
        let p = PressureOptions::default();
        Self {
            cylinders: DEFAULT_CYLINDER_BUDGET as u64,
            periodic_tol: DEFAULT_PERIODIC_TOL,
            power_tol: p.power_tol,
            deriv_floor: DEFAULT_DERIV_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskConfig {
    pub pressure: PressureTask,
    pub lyapunov: LyapunovTask,
    pub temperature: TemperatureTask,
    pub dimension: DimensionTask,
    pub induce: InduceTask,
    pub empirical: EmpiricalTask,
    pub verify: VerifyTask,
    pub budgets: Budgets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub json: bool,
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            json: false,
            plot: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheConfig {
    pub enabled: bool,
    pub dir: PathBuf,
}

impl Default for CacheConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            dir: PathBuf::from(".thermoform-cache"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: MapConfig,
    pub potential: PotentialConfig,
    pub task: TaskConfig,
    pub output: OutputConfig,
    pub cache: CacheConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            map: MapConfig::Doubling {},
            potential: PotentialConfig::Bernoulli { probs: vec![0.3, 0.7] },
            task: TaskConfig::default(),
            output: OutputConfig::default(),
            cache: CacheConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn build_map(&self) -> Result<MapSpec> {
        Ok(MapSpec::from_family(&self.map.family())?.with_deriv_floor(self.task.budgets.deriv_floor))
    }

    pub fn build_potential(&self, map: &MapSpec) -> Result<Potential> {
        self.potential.build(map)
    }

    pub fn pressure_options(&self) -> PressureOptions {
        PressureOptions {
            budget: self.task.budgets.cylinders as u128,
            periodic_tol: self.task.budgets.periodic_tol,
            power_tol: self.task.budgets.power_tol,
        }
    }

    pub fn induce_base(&self) -> Interval {
        Interval::new(self.task.induce.base[0], self.task.induce.base[1])
    }

    /// Positivity of tolerances, sorted grids, and a buildable map.
    pub fn validate(&self) -> Result<()> {
        let t = &self.task;
        let positive = [
            ("task.pressure.slope_gap_tol", t.pressure.slope_gap_tol),
            ("task.lyapunov.slope_gap_tol", t.lyapunov.slope_gap_tol),
            ("task.verify.slope_gap_tol", t.verify.slope_gap_tol),
            ("task.budgets.periodic_tol", t.budgets.periodic_tol),
            ("task.budgets.power_tol", t.budgets.power_tol),
            ("task.budgets.deriv_floor", t.budgets.deriv_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {v}")));
            }
        }
        t.pressure.grid.validate("task.pressure.grid", 3)?;
        t.lyapunov.t_grid.validate("task.lyapunov.t_grid", 3)?;
        if let Some(g) = &t.lyapunov.lambda_grid {
            g.validate("task.lyapunov.lambda_grid", 1)?;
        }
        t.temperature.q_grid.validate("task.temperature.q_grid", 3)?;
        if let Some(g) = &t.dimension.alpha_grid {
            g.validate("task.dimension.alpha_grid", 1)?;
        }
        t.induce.t_grid.validate("task.induce.t_grid", 1)?;
        if !(t.temperature.bracket[0] < t.temperature.bracket[1]) {
            return Err(Error::Invalid("task.temperature.bracket must be increasing".into()));
        }
        if !(t.induce.base[0] < t.induce.base[1]) {
            return Err(Error::Invalid("task.induce.base must be increasing".into()));
        }
        if t.induce.truncations.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Invalid("task.induce.truncations must be increasing".into()));
        }
        self.build_map()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = RunConfig::default();
        let text = d.to_toml();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), d);
    }

    #[test]
    fn partial_config_fills_defaults() {
        let c = RunConfig::from_toml(
            r#"
            [map]
            family = "piecewise_linear"
            breakpoints = [0.3333333333333333]

            [task.pressure]
            grid = { start = 0.0, stop = 2.0, points = 5 }
            method = { method = "cylinder_matrix", depth = 1 }
            "#,
        )
        .unwrap();
        assert_eq!(c.task.pressure.grid.values(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.build_map().unwrap().branch_count(), 2);
        assert_eq!(c.task.temperature, TemperatureTask::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("[map]\nfamily = \"henon\"\n").is_err());
        assert!(RunConfig::from_toml("[map]\nfamily = \"doubling\"\nslope = 2\n").is_err());
        assert!(RunConfig::from_toml("[task.pressure]\ncolour = 1\n").is_err());
        assert!(RunConfig::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn unsorted_grid_is_rejected() {
        let e = RunConfig::from_toml("[task.pressure]\ngrid = [0.0, 2.0, 1.0]\n");
        assert!(matches!(e, Err(Error::Invalid(_))));
        let e = RunConfig::from_toml("[task.verify]\nslope_gap_tol = -1.0\n");
        assert!(matches!(e, Err(Error::Invalid(_))));
    }
}
