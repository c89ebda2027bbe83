//! Topological pressure by periodic-orbit sums and by cylinder transfer
//! matrices, pressure curves, and first-order phase-transition detection.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSpec, Potential};
use crate::numeric::{log_sum_exp, LogSparseMatrix};
use crate::symbolic::{
    locate_periodic_with, orbit_rest_sum, word_count,
    PeriodicOrbit, DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL,
};

pub const DEFAULT_SLOPE_GAP_TOL: f64 = 0.02;
pub const DEFAULT_CONVEXITY_TOL: f64 = 1e-9;
pub const DEFAULT_POWER_TOL: f64 = 1e-12;
pub const DEFAULT_LINEARITY_TOL: f64 = 1e-6;
const REFINE_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    T,
    Q,
}

impl Parameter {
    pub fn name(self) -> &'static str {
        match self {
            Parameter::T => "t",
            Parameter::Q => "q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    PeriodicOrbit { period: usize },
    CylinderMatrix { depth: usize },
    /// Sampled from a closed-form function, not computed from a map.
    Synthetic,
}

/// `φ = −t·log|Df| + q·base`, with one of `t`, `q` varying.
#[derive(Debug, Clone)]
pub struct PotentialFamily {
    pub parameter: Parameter,
    pub base: Potential,
    /// Value of the parameter that is held fixed.
    pub fixed: f64,
}

impl PotentialFamily {
    /// `t ↦ −t·log|Df|`.
    pub fn geometric(branches: usize) -> Self {
        Self {
            parameter: Parameter::T,
            base: Potential::constant(0.0, branches),
            fixed: 0.0,
        }
    }

    /// `t ↦ −t·log|Df| + q·base`.
    pub fn in_t(base: Potential, q: f64) -> Self {
        Self {
            parameter: Parameter::T,
            base,
            fixed: q,
        }
    }

    /// `q ↦ −t·log|Df| + q·base`.
    pub fn in_q(base: Potential, t: f64) -> Self {
        Self {
            parameter: Parameter::Q,
            base,
            fixed: t,
        }
    }

    pub fn tq(&self, value: f64) -> (f64, f64) {
        match self.parameter {
            Parameter::T => (value, self.fixed),
            Parameter::Q => (self.fixed, value),
        }
    }

    pub fn at(&self, value: f64) -> Potential {
        let (t, q) = self.tq(value);
        Potential::combined(t, q, self.base.clone())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PressureOptions {
    pub budget: u128,
    pub periodic_tol: f64,
    pub power_tol: f64,
}

impl Default for PressureOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_CYLINDER_BUDGET,
            periodic_tol: DEFAULT_PERIODIC_TOL,
            power_tol: DEFAULT_POWER_TOL,
        }
    }
}

#[derive(Debug, Clone)]
enum EngineData {
    Periodic {
        period: usize,
        /// `S_n log|Df|` per orbit.
        log_deriv: Vec<f64>,
        /// `S_n` of the non-geometric part of the base potential.
        rest: Vec<f64>,
        /// First symbol per orbit.
        first: Vec<u8>,
    },
    Matrix {
        states: usize,
        /// `(from, to, log|Df|, base rest)` at the representative of `u·s`.
        edges: Vec<(usize, usize, f64, f64)>,
    },
}

/// Evaluates `P(−t·log|Df| + q·base)` for many `(t, q)` from one set of
/// periodic orbits or cylinder representatives.
#[derive(Debug, Clone)]
pub struct PressureEngine {
    base: Potential,
    base_coef: f64,
    branches: usize,
    options: PressureOptions,
    data: EngineData,
}

impl PressureEngine {
    pub fn new(map: &MapSpec, base: &Potential, method: Method) -> Result<Self> {
        Self::with_options(map, base, method, PressureOptions::default())
    }

    pub fn with_options(
        map: &MapSpec,
        base: &Potential,
        method: Method,
        options: PressureOptions,
    ) -> Result<Self> {
        base.validate(map)?;
        let data = match method {
            Method::PeriodicOrbit { period } => {
                let orbits = locate_periodic_with(map, period, options.budget, options.periodic_tol)?;
                Self::periodic_data(map, base, period, &orbits)?
            }
            Method::CylinderMatrix { depth } => Self::matrix_data(map, base, depth, &options)?,
            Method::Synthetic => {
                return Err(Error::Invalid(
                    "a synthetic curve has no pressure engine".into(),
                ))
            }
        };
        Ok(Self {
            base: base.clone(),
            base_coef: base.geometric_coefficient(),
            branches: map.branch_count(),
            options,
            data,
        })
    }

    /// Engine over a precomputed (for example cached) orbit table.
    pub fn from_orbits(
        map: &MapSpec,
        base: &Potential,
        period: usize,
        orbits: &[PeriodicOrbit],
    ) -> Result<Self> {
        base.validate(map)?;
        let expected = word_count(map.branch_count(), period, u128::MAX, "periodic orbits")?;
        if orbits.len() != expected || orbits.iter().any(|o| o.word.len() != period) {
            return Err(Error::Invalid(format!(
                "orbit table does not cover all words of period {period}"
            )));
        }
        Ok(Self {
            base: base.clone(),
            base_coef: base.geometric_coefficient(),
            branches: map.branch_count(),
            options: PressureOptions::default(),
            data: Self::periodic_data(map, base, period, orbits)?,
        })
    }

    fn periodic_data(
        map: &MapSpec,
        base: &Potential,
        period: usize,
        orbits: &[PeriodicOrbit],
    ) -> Result<EngineData> {
        let rest = orbits
            .par_iter()
            .map(|o| orbit_rest_sum(map, base, o))
            .collect::<Result<Vec<f64>>>()?;
        Ok(EngineData::Periodic {
            period,
            log_deriv: orbits.iter().map(|o| o.birkhoff_log_deriv).collect(),
            rest,
            first: orbits.iter().map(|o| o.word[0]).collect(),
        })
    }

    fn matrix_data(
        map: &MapSpec,
        base: &Potential,
        depth: usize,
        options: &PressureOptions,
    ) -> Result<EngineData> {
        if depth == 0 {
            return Err(Error::Invalid("matrix depth must be at least 1".into()));
        }
        let m = map.branch_count();
        let states = word_count(m, depth, options.budget, "matrix states")?;
        let reps = locate_periodic_with(map, depth + 1, options.budget, options.periodic_tol)?;
        let edges = reps
            .par_iter()
            .enumerate()
            .map(|(idx, orbit)| {
                let from = idx / m;
                let to = idx % states;
                let b = orbit.word[0] as usize;
                let ld = map.log_abs_deriv_on(b, orbit.point)?;
                let rest = base.rest_at(b, orbit.point)?;
                Ok((from, to, ld, rest))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EngineData::Matrix { states, edges })
    }

    pub fn method(&self) -> Method {
        match &self.data {
            EngineData::Periodic { period, .. } => Method::PeriodicOrbit { period: *period },
            EngineData::Matrix { states, .. } => {
                let mut depth = 0;
                let mut s = 1;
                while s < *states {
                    s *= self.branches;
                    depth += 1;
                }
                Method::CylinderMatrix {
                    depth: depth.max(1),
                }
            }
        }
    }

    pub fn base(&self) -> &Potential {
        &self.base
    }

    /// `P(−t·log|Df| + q·base)`.
    pub fn eval(&self, t: f64, q: f64) -> Result<f64> {
        let coef = t + q * self.base_coef;
        match &self.data {
            EngineData::Periodic {
                period,
                log_deriv,
                rest,
                ..
            } => {
                let mut w: Vec<f64> = log_deriv
                    .iter()
                    .zip(rest)
                    .map(|(a, r)| weight(coef, *a, q, *r))
                    .collect();
                Ok(log_sum_exp(&mut w)? / *period as f64)
            }
            EngineData::Matrix { states, edges } => {
                let mut rows = vec![Vec::with_capacity(self.branches); *states];
                for &(from, to, ld, rest) in edges {
                    let w = weight(coef, ld, q, rest);
                    if w.is_nan() || w == f64::INFINITY {
                        return Err(Error::NonFiniteWeight {
                            context: format!("matrix entry {from}->{to}"),
                        });
                    }
                    rows[from].push((to, w));
                }
                let m = LogSparseMatrix { n: *states, rows };
                Ok(m.perron(self.options.power_tol)?.log_radius)
            }
        }
    }

    /// `log(Z_n(base) / Z_{n−1}(base))` restricted to orbits starting in
    /// `base_symbol`; needs the table for period `n` and a second engine for `n−1`.
    fn base_log_sum(&self, t: f64, q: f64, base_symbol: usize) -> Result<f64> {
        let EngineData::Periodic {
            log_deriv,
            rest,
            first,
            ..
        } = &self.data
        else {
            return Err(Error::Invalid("base-cylinder sums need periodic orbits".into()));
        };
        let coef = t + q * self.base_coef;
        let mut w: Vec<f64> = log_deriv
            .iter()
            .zip(rest)
            .zip(first)
            .filter(|(_, &s)| s as usize == base_symbol)
            .map(|((a, r), _)| weight(coef, *a, q, *r))
            .collect();
        log_sum_exp(&mut w)
    }
}

fn weight(coef: f64, log_deriv: f64, q: f64, rest: f64) -> f64 {
    let geo = if coef == 0.0 { 0.0 } else { -coef * log_deriv };
    let r = if q == 0.0 { 0.0 } else { q * rest };
    geo + r
}

/// Periodic-orbit pressure `(1/n)·log Σ_{f^n x = x} exp(S_n φ(x))`.
pub fn pressure_periodic(map: &MapSpec, phi: &Potential, period: usize, base_symbol: usize) -> Result<f64> {
    if base_symbol >= map.branch_count() {
        return Err(Error::Invalid(format!(
            "base symbol {base_symbol} exceeds branch count {}",
            map.branch_count()
        )));
    }
    PressureEngine::new(map, phi, Method::PeriodicOrbit { period })?.eval(0.0, 1.0)
}

/// Gurevich growth-rate estimate `log(Z_n(C_base) / Z_{n−1}(C_base))`.
pub fn gurevich_ratio(map: &MapSpec, phi: &Potential, period: usize, base_symbol: usize) -> Result<f64> {
    if period < 2 {
        return Err(Error::Invalid("the Gurevich ratio needs period at least 2".into()));
    }
    if base_symbol >= map.branch_count() {
        return Err(Error::Invalid(format!(
            "base symbol {base_symbol} exceeds branch count {}",
            map.branch_count()
        )));
    }
    let hi = PressureEngine::new(map, phi, Method::PeriodicOrbit { period })?;
    let lo = PressureEngine::new(map, phi, Method::PeriodicOrbit { period: period - 1 })?;
    Ok(hi.base_log_sum(0.0, 1.0, base_symbol)? - lo.base_log_sum(0.0, 1.0, base_symbol)?)
}

/// Log spectral radius of the depth-`k` cylinder transfer matrix.
pub fn pressure_matrix(map: &MapSpec, phi: &Potential, depth: usize) -> Result<f64> {
    PressureEngine::new(map, phi, Method::CylinderMatrix { depth })?.eval(0.0, 1.0)
}

pub type Evaluator = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kink {
    pub location: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionReport {
    pub kinks: Vec<Kink>,
    pub t_plus_estimate: Option<f64>,
}

#[derive(Clone)]
pub struct PressureCurve {
    pub parameter_name: Parameter,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub method: Method,
    pub left_slopes: Vec<f64>,
    pub right_slopes: Vec<f64>,
    pub transition_report: PhaseTransitionReport,
    evaluator: Option<Evaluator>,
}

impl fmt::Debug for PressureCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PressureCurve")
            .field("parameter_name", &self.parameter_name)
            .field("grid", &self.grid)
            .field("values", &self.values)
            .field("method", &self.method)
            .field("transition_report", &self.transition_report)
            .finish_non_exhaustive()
    }
}

fn check_grid(grid: &[f64], min_points: usize) -> Result<()> {
    if grid.len() < min_points {
        return Err(Error::Invalid(format!(
            "grid needs at least {min_points} points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
        return Err(Error::Invalid("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Derivative at `x0` of the parabola through three points.
fn three_point_derivative(x: [f64; 3], y: [f64; 3], x0: f64) -> f64 {
    let (x1, x2, x3) = (x[0], x[1], x[2]);
    y[0] * (2.0 * x0 - x2 - x3) / ((x1 - x2) * (x1 - x3))
        + y[1] * (2.0 * x0 - x1 - x3) / ((x2 - x1) * (x2 - x3))
        + y[2] * (2.0 * x0 - x1 - x2) / ((x3 - x1) * (x3 - x2))
}

/// Backward and forward differences at each point; three-point one-sided
/// stencils at the two ends.
pub fn one_sided_slopes(grid: &[f64], values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let mut left = vec![f64::NAN; n];
    let mut right = vec![f64::NAN; n];
    for i in 0..n {
        if i > 0 {
            left[i] = (values[i] - values[i - 1]) / (grid[i] - grid[i - 1]);
        }
        if i + 1 < n {
            right[i] = (values[i + 1] - values[i]) / (grid[i + 1] - grid[i]);
        }
    }
    if n >= 3 {
        let d0 = three_point_derivative(
            [grid[0], grid[1], grid[2]],
            [values[0], values[1], values[2]],
            grid[0],
        );
        left[0] = d0;
        right[0] = d0;
        let d1 = three_point_derivative(
            [grid[n - 3], grid[n - 2], grid[n - 1]],
            [values[n - 3], values[n - 2], values[n - 1]],
            grid[n - 1],
        );
        left[n - 1] = d1;
        right[n - 1] = d1;
    } else if n == 2 {
        left[0] = right[0];
        right[1] = left[1];
    }
    (left, right)
}

impl PressureCurve {
    /// Assemble a curve from sampled values, computing slopes and the
    /// transition report with the default gap tolerance.
    pub fn from_samples(
        parameter_name: Parameter,
        grid: Vec<f64>,
        values: Vec<f64>,
        method: Method,
        evaluator: Option<Evaluator>,
    ) -> Result<Self> {
        check_grid(&grid, 3)?;
        if values.len() != grid.len() {
            return Err(Error::Invalid("grid and values differ in length".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteWeight {
                context: format!("pressure value {} at {}", values[i], grid[i]),
            }
            .at(parameter_name.name(), grid[i]));
        }
        let (left_slopes, right_slopes) = one_sided_slopes(&grid, &values);
        let mut curve = Self {
            parameter_name,
            grid,
            values,
            method,
            left_slopes,
            right_slopes,
            transition_report: PhaseTransitionReport::default(),
            evaluator,
        };
        if curve.grid.len() >= 5 {
            curve.transition_report = detect_phase_transitions(&curve, DEFAULT_SLOPE_GAP_TOL);
        }
        Ok(curve)
    }

    /// A curve sampled from a closed-form function, which also serves as its
    /// evaluator for refinement.
    pub fn from_fn(
        parameter_name: Parameter,
        grid: Vec<f64>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let values = grid.iter().map(|&x| f(x)).collect();
        let f = Arc::new(f);
        Self::from_samples(
            parameter_name,
            grid,
            values,
            Method::Synthetic,
            Some(Arc::new(move |x| Ok(f(x)))),
        )
    }

    pub fn evaluator(&self) -> Option<&Evaluator> {
        self.evaluator.as_ref()
    }

    pub fn without_evaluator(mut self) -> Self {
        self.evaluator = None;
        self
    }

    /// Value at `x` from the evaluator when present, else by linear interpolation.
    pub fn value_at(&self, x: f64) -> Result<f64> {
        if let Some(i) = self.grid.iter().position(|&g| g == x) {
            return Ok(self.values[i]);
        }
        if let Some(e) = &self.evaluator {
            return e(x);
        }
        let (lo, hi) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if x < lo || x > hi {
            return Err(Error::Domain {
                x,
                context: format!("curve grid [{lo}, {hi}]"),
            });
        }
        let j = self.grid.partition_point(|&g| g < x);
        let (x0, x1) = (self.grid[j - 1], self.grid[j]);
        let w = (x - x0) / (x1 - x0);
        Ok(self.values[j - 1] * (1.0 - w) + self.values[j] * w)
    }

    /// Largest violation of discrete convexity (0 when convex).
    pub fn convexity_violation(&self) -> f64 {
        self.left_slopes[1..]
            .iter()
            .zip(&self.right_slopes[1..])
            .take(self.grid.len().saturating_sub(2))
            .map(|(l, r)| (l - r).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn is_discretely_convex(&self, tol: f64) -> bool {
        let scale = self.values.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        self.convexity_violation() <= tol * scale
    }

    /// `[λ_inf, λ_sup]` from the end slopes: `−Dp` at the right and left ends.
    pub fn slope_range(&self) -> (f64, f64) {
        let n = self.grid.len();
        (-self.right_slopes[n - 1], -self.left_slopes[0])
    }
}

/// Pressure of `family(x)` at every grid point, each point independent.
pub fn pressure_curve(
    map: &MapSpec,
    family: &PotentialFamily,
    grid: &[f64],
    method: Method,
) -> Result<PressureCurve> {
    let engine = PressureEngine::new(map, &family.base, method)?;
    curve_from_engine(engine, family, grid)
}

/// Per-point results, for callers that keep partial output.
pub fn evaluate_grid(engine: &PressureEngine, family: &PotentialFamily, grid: &[f64]) -> Vec<Result<f64>> {
    grid.par_iter()
        .map(|&x| {
            let (t, q) = family.tq(x);
            engine
                .eval(t, q)
                .map_err(|e| e.at(family.parameter.name(), x))
        })
        .collect()
}

pub fn curve_from_engine(
    engine: PressureEngine,
    family: &PotentialFamily,
    grid: &[f64],
) -> Result<PressureCurve> {
    check_grid(grid, 3)?;
    let values = evaluate_grid(&engine, family, grid)
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let method = engine.method();
    let fam = family.clone();
    let eval: Evaluator = Arc::new(move |x| {
        let (t, q) = fam.tq(x);
        engine.eval(t, q)
    });
    PressureCurve::from_samples(family.parameter, grid.to_vec(), values, method, Some(eval))
}

/// Kinks where `right_slope − left_slope > slope_gap_tol`. Contiguous
/// candidates are merged; the reported slopes come from the cells just
/// outside the cluster and the location from the intersection of the two
/// supporting lines, refined by bisection when an evaluator is attached.
pub fn detect_phase_transitions(curve: &PressureCurve, slope_gap_tol: f64) -> PhaseTransitionReport {
    let g = &curve.grid;
    let v = &curve.values;
    let n = g.len();
    if n < 5 {
        return PhaseTransitionReport::default();
    }
    let cell_slope = |j: usize| (v[j + 1] - v[j]) / (g[j + 1] - g[j]);
    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| curve.right_slopes[i] - curve.left_slopes[i] > slope_gap_tol)
        .collect();
    let mut clusters: Vec<(usize, usize)> = Vec::new();
    for &i in &candidates {
        match clusters.last_mut() {
            Some((_, b)) if *b + 1 == i => *b = i,
            _ => clusters.push((i, i)),
        }
    }
    let mut kinks = Vec::new();
    for (a, b) in clusters {
        let (sl, sr) = (cell_slope(a - 1), cell_slope(b));
        let gap = sr - sl;
        if !(gap > slope_gap_tol) {
            continue;
        }
        let mut lo = (g[a - 1], v[a - 1]);
        let mut hi = (g[b + 1], v[b + 1]);
        if let Some(eval) = &curve.evaluator {
            for _ in 0..REFINE_ROUNDS {
                let mid = 0.5 * (lo.0 + hi.0);
                let Ok(fm) = eval(mid) else { break };
                let dl = (fm - (lo.1 + sl * (mid - lo.0))).abs();
                let dr = (fm - (hi.1 + sr * (mid - hi.0))).abs();
                if dl < dr {
                    lo = (mid, fm);
                } else {
                    hi = (mid, fm);
                }
            }
        }
        let location = ((hi.1 - sr * hi.0) - (lo.1 - sl * lo.0)) / (sl - sr);
        kinks.push(Kink {
            location: location.clamp(lo.0, hi.0),
            left_slope: sl,
            right_slope: sr,
            gap,
        });
    }
    kinks.sort_by(|a, b| a.location.total_cmp(&b.location));
    let t_plus_estimate = if curve.parameter_name == Parameter::T && has_linear_tail(curve) {
        kinks
            .iter()
            .find(|k| k.left_slope < 0.0 && k.location > 0.0)
            .map(|k| k.location)
    } else {
        None
    };
    PhaseTransitionReport {
        kinks,
        t_plus_estimate,
    }
}

fn has_linear_tail(curve: &PressureCurve) -> bool {
    let n = curve.grid.len();
    let start = n - (n / 5).max(3);
    (start.max(1)..n - 1).all(|i| (curve.right_slopes[i] - curve.left_slopes[i]).abs() < DEFAULT_LINEARITY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use std::f64::consts::LN_2;

    fn two_branch() -> MapSpec {
        MapSpec::two_branch_linear(1.0 / 3.0).unwrap()
    }

    #[test]
    fn doubling_periodic_is_exact() {
        let d = MapSpec::doubling();
        for n in [1, 3, 6] {
            for t in [-2.0, 0.0, 2.0] {
                let p = pressure_periodic(&d, &Potential::geometric(t), n, 0).unwrap();
                assert!((p - (1.0 - t) * LN_2).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_branch_periodic_at_one() {
        let p = pressure_periodic(&two_branch(), &Potential::geometric(1.0), 14, 0).unwrap();
        assert!(p.abs() < 1e-6);
    }

    #[test]
    fn chebyshev_topological_entropy() {
        let p = pressure_periodic(&MapSpec::chebyshev(), &Potential::geometric(0.0), 10, 0).unwrap();
        assert!((p - LN_2).abs() < 1e-3);
    }

    #[test]
    fn matrix_examples() {
        let d = MapSpec::doubling();
        assert!(pressure_matrix(&d, &Potential::geometric(1.0), 1).unwrap().abs() < 1e-12);
        let b = Potential::bernoulli(&[0.3, 0.7]);
        assert!(pressure_matrix(&d, &b, 1).unwrap().abs() < 1e-12);
        let m = two_branch();
        for t in [-1.0, 0.0, 0.5, 2.0] {
            let want = (3.0_f64.powf(-t) + 1.5_f64.powf(-t)).ln();
            let p = pressure_matrix(&m, &Potential::geometric(t), 1).unwrap();
            assert!((p - want).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn gurevich_base_independence() {
        let m = two_branch();
        let phi = Potential::geometric(0.7);
        let a = gurevich_ratio(&m, &phi, 10, 0).unwrap();
        let b = gurevich_ratio(&m, &phi, 10, 1).unwrap();
        assert!((a - b).abs() < 1e-9);
        let want = (3.0_f64.powf(-0.7) + 1.5_f64.powf(-0.7)).ln();
        assert!((a - want).abs() < 1e-9);
    }

    #[test]
    fn doubling_curve_values() {
        let d = MapSpec::doubling();
        let c = pressure_curve(
            &d,
            &PotentialFamily::geometric(2),
            &[0.0, 1.0, 2.0],
            Method::PeriodicOrbit { period: 4 },
        )
        .unwrap();
        for (v, w) in c.values.iter().zip([LN_2, 0.0, -LN_2]) {
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_errors_are_tagged() {
        let c = MapSpec::chebyshev();
        let fam = PotentialFamily::in_t(Potential::pointwise(|x| if x > 0.9 { f64::NAN } else { 0.0 }), 1.0);
        let err = pressure_curve(&c, &fam, &[0.0, 1.0, 2.0], Method::PeriodicOrbit { period: 3 }).unwrap_err();
        assert!(matches!(err, Error::AtGridPoint { param: "t", .. }));
        assert!(matches!(err.root(), Error::NonFiniteWeight { .. }));
    }

    #[test]
    fn chebyshev_kink() {
        let c = MapSpec::chebyshev();
        let curve = pressure_curve(
            &c,
            &PotentialFamily::geometric(2),
            &linspace(-3.0, 3.0, 61),
            Method::PeriodicOrbit { period: 16 },
        )
        .unwrap();
        let top = curve
            .transition_report
            .kinks
            .iter()
            .max_by(|a, b| a.gap.total_cmp(&b.gap))
            .unwrap();
        assert!((-1.05..=-0.95).contains(&top.location), "{top:?}");
    }

    #[test]
    fn synthetic_kink() {
        let f = |t: f64| ((1.0 - t) * LN_2).max(-2.0 * t * LN_2);
        let curve = PressureCurve::from_fn(Parameter::T, linspace(-3.0, 3.0, 121), f).unwrap();
        let r = detect_phase_transitions(&curve, DEFAULT_SLOPE_GAP_TOL);
        assert_eq!(r.kinks.len(), 1);
        assert!((r.kinks[0].location + 1.0).abs() <= 0.05);
        assert!((r.kinks[0].gap - LN_2).abs() < 1e-9);
    }

    #[test]
    fn smooth_and_affine_curves_have_no_kinks() {
        let d = MapSpec::doubling();
        let curve = pressure_curve(
            &d,
            &PotentialFamily::geometric(2),
            &linspace(-2.0, 2.0, 21),
            Method::CylinderMatrix { depth: 1 },
        )
        .unwrap();
        assert!(curve.transition_report.kinks.is_empty());
        let sq = PressureCurve::from_fn(Parameter::T, linspace(0.0, 2.0, 101), |t| (1.0 - t).powi(2)).unwrap();
        assert!(detect_phase_transitions(&sq, 0.05).kinks.is_empty());
    }

    #[test]
    fn manneville_pomeau_fixture() {
        let mp = MapSpec::manneville_pomeau(0.5).unwrap();
        let grid = linspace(0.5, 1.5, 11);
        let mut prev = f64::INFINITY;
        for n in [8, 10, 12] {
            let c = pressure_curve(&mp, &PotentialFamily::geometric(2), &grid, Method::PeriodicOrbit { period: n }).unwrap();
            assert!(c.values.iter().all(|&v| v >= 0.0));
            let at = c.value_at(1.25).unwrap();
            assert!(at < prev);
            prev = at;
        }
    }

    #[test]
    fn orbit_measures_are_dominated() {
        let maps = [two_branch(), MapSpec::chebyshev(), MapSpec::tent(3.0).unwrap()];
        let grid = linspace(-2.0, 2.0, 9);
        for m in &maps {
            let c = pressure_curve(m, &PotentialFamily::geometric(m.branch_count()), &grid, Method::PeriodicOrbit { period: 10 }).unwrap();
            for o in locate_periodic_with(m, 5, 1000, 1e-12).unwrap() {
                let lam = o.birkhoff_log_deriv / 5.0;
                for (t, p) in grid.iter().zip(&c.values) {
                    assert!(*p >= -t * lam - 1e-9);
                }
            }
            assert!(c.is_discretely_convex(DEFAULT_CONVEXITY_TOL));
            assert!(c.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        }
    }

    #[test]
    fn methods_agree_on_two_branch() {
        let m = two_branch();
        for t in linspace(-3.0, 3.0, 7) {
            let a = pressure_periodic(&m, &Potential::geometric(t), 14, 0).unwrap();
            let b = pressure_matrix(&m, &Potential::geometric(t), 1).unwrap();
            assert!((a - b).abs() < 1e-6);
        }
    }
}
