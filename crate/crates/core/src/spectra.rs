//! Legendre–Fenchel transforms: the Lyapunov spectrum from a pressure
//! curve, the temperature function, and the dimension spectrum.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSpec, Potential};
use crate::numeric::{bisect_predicate, golden_section_minimize};
use crate::pressure::{one_sided_slopes, Method, PressureCurve, PressureEngine};

pub const DEFAULT_LAMBDA_FLOOR: f64 = 1e-6;
const ARG_TOL: f64 = 1e-10;
const DERIVATIVE_STEP: f64 = 1e-4;
const LINEAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreResult {
    pub value: f64,
    pub t_star: f64,
    /// False when the minimizer sits at an end of the parameter grid.
    pub attained: bool,
    /// The objective is constant over the grid (affine curve).
    pub degenerate: bool,
}

/// `inf_x (v(x) + x·s)` over a sampled convex function, refined by
/// golden-section search in the bracketing cells.
fn legendre_inf(
    grid: &[f64],
    values: &[Option<f64>],
    eval: Option<&(dyn Fn(f64) -> Option<f64> + Sync)>,
    s: f64,
) -> Option<LegendreResult> {
    let obj: Vec<Option<f64>> = grid
        .iter()
        .zip(values)
        .map(|(x, v)| v.map(|v| v + x * s))
        .collect();
    let finite: Vec<usize> = (0..grid.len()).filter(|&i| obj[i].is_some()).collect();
    let (&first, &last) = (finite.first()?, finite.last()?);
    let best = *finite
        .iter()
        .min_by(|&&a, &&b| obj[a].unwrap().total_cmp(&obj[b].unwrap()))?;
    let (lo_v, hi_v) = finite.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &i| {
        let v = obj[i].unwrap();
        (a.min(v), b.max(v))
    });
    let degenerate = hi_v - lo_v <= 1e-12 * (1.0 + lo_v.abs());
    let mut value = obj[best].unwrap();
    let mut arg = grid[best];
    if degenerate {
        return Some(LegendreResult {
            value,
            t_star: arg,
            attained: true,
            degenerate,
        });
    }
    let attained = best != first && best != last;
    if let Some(f) = eval {
        let a = if best > first { grid[best - 1] } else { grid[best] };
        let b = if best < last { grid[best + 1] } else { grid[best] };
        if b > a {
            let g = |x: f64| f(x).map_or(f64::INFINITY, |v| v + x * s);
            let (x, fx) = golden_section_minimize(g, a, b, ARG_TOL);
            if fx < value {
                value = fx;
                arg = x;
            }
        }
    }
    Some(LegendreResult {
        value,
        t_star: arg,
        attained,
        degenerate,
    })
}

fn curve_eval(curve: &PressureCurve) -> Option<impl Fn(f64) -> Option<f64> + Sync + '_> {
    curve.evaluator().map(|e| move |x: f64| e(x).ok().filter(|v| v.is_finite()))
}

/// `L(λ) = (1/λ)·inf_t (p(t) + tλ)`.
pub fn legendre_lyapunov(curve: &PressureCurve, lambda: f64) -> Result<LegendreResult> {
    legendre_lyapunov_with_floor(curve, lambda, DEFAULT_LAMBDA_FLOOR)
}

pub fn legendre_lyapunov_with_floor(curve: &PressureCurve, lambda: f64, floor: f64) -> Result<LegendreResult> {
    let (lo, hi) = curve.slope_range();
    let tol = 1e-9 * lambda.abs().max(1.0);
    if !(lambda >= floor) || lambda < lo - tol || lambda > hi + tol {
        return Err(Error::Domain {
            x: lambda,
            context: format!("exponent range [{lo}, {hi}] (floor {floor})"),
        });
    }
    let values: Vec<Option<f64>> = curve.values.iter().map(|&v| Some(v)).collect();
    let ev = curve_eval(curve);
    let r = legendre_inf(
        &curve.grid,
        &values,
        ev.as_ref().map(|f| f as &(dyn Fn(f64) -> Option<f64> + Sync)),
        lambda,
    )
    .ok_or_else(|| Error::InsufficientData("empty pressure curve".into()))?;
    Ok(LegendreResult {
        value: r.value / lambda,
        ..r
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumKind {
    Lyapunov,
    Dimension,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumDomain {
    pub lower: f64,
    pub upper: f64,
    pub lower_verified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub argmin: f64,
    pub attained: bool,
    /// False where only a lower bound is established.
    pub verified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumCurve {
    pub kind: SpectrumKind,
    pub abscissa_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub domain: SpectrumDomain,
    pub provenance: Vec<Provenance>,
}

impl SpectrumCurve {
    /// Largest positive second difference of the values (0 when concave).
    pub fn concavity_violation(&self) -> f64 {
        let (l, r) = one_sided_slopes(&self.abscissa_grid, &self.values);
        (1..self.values.len().saturating_sub(1))
            .map(|i| (r[i] - l[i]).max(0.0))
            .fold(0.0, f64::max)
    }
}

/// Pointwise Legendre transform; points below `−D⁻p(t⁺)` are flagged as
/// lower bounds when a transition with `t⁺ > 1` was detected.
pub fn lyapunov_spectrum(curve: &PressureCurve, lambda_grid: &[f64]) -> Result<SpectrumCurve> {
    let results = lambda_grid
        .par_iter()
        .map(|&l| legendre_lyapunov(curve, l).map_err(|e| e.at("lambda", l)))
        .collect::<Result<Vec<_>>>()?;
    let threshold = curve
        .transition_report
        .t_plus_estimate
        .filter(|&tp| tp > 1.0)
        .and_then(|tp| {
            curve
                .transition_report
                .kinks
                .iter()
                .find(|k| k.location == tp)
                .map(|k| -k.left_slope)
        });
    let provenance: Vec<Provenance> = results
        .iter()
        .zip(lambda_grid)
        .map(|(r, &l)| Provenance {
            argmin: r.t_star,
            attained: r.attained,
            verified: threshold.is_none_or(|th| l >= th),
        })
        .collect();
    let (lower, upper) = curve.slope_range();
    Ok(SpectrumCurve {
        kind: SpectrumKind::Lyapunov,
        abscissa_grid: lambda_grid.to_vec(),
        values: results.iter().map(|r| r.value).collect(),
        domain: SpectrumDomain {
            lower,
            upper,
            lower_verified: threshold.is_none(),
        },
        provenance,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct TemperatureOptions {
    pub bracket: (f64, f64),
    pub max_abs_t: f64,
    pub scan_step: f64,
    pub root_tol: f64,
    pub normalization_tol: f64,
    /// Pressure values at or below this count as zero.
    pub zero_tol: f64,
    pub flat_slope: f64,
}

impl Default for TemperatureOptions {
    fn default() -> Self {
        Self {
            bracket: (-4.0, 4.0),
            max_abs_t: 64.0,
            scan_step: 0.25,
            root_tol: 1e-13,
            normalization_tol: 1e-6,
            zero_tol: 0.0,
            flat_slope: -1e-3,
        }
    }
}

/// Solves `P(−t·log|Df| + qφ) = 0` for the leftmost `t`.
#[derive(Debug, Clone)]
pub struct TemperatureSolver {
    engine: Arc<PressureEngine>,
    options: TemperatureOptions,
}

impl TemperatureSolver {
    pub fn new(map: &MapSpec, phi: &Potential, method: Method, options: TemperatureOptions) -> Result<Self> {
        let engine = PressureEngine::new(map, phi, method)?;
        Self::from_engine(engine, options)
    }

    pub fn from_engine(engine: PressureEngine, options: TemperatureOptions) -> Result<Self> {
        let p = engine.eval(0.0, 1.0)?;
        if p.abs() > options.normalization_tol {
            return Err(Error::NotNormalized { pressure: p });
        }
        Ok(Self {
            engine: Arc::new(engine),
            options,
        })
    }

    pub fn engine(&self) -> &PressureEngine {
        &self.engine
    }

    pub fn solve(&self, q: f64) -> Result<ExtReal> {
        let o = &self.options;
        let f = |t: f64| self.engine.eval(t, q);
        let (mut lo, mut hi) = o.bracket;
        if !(lo < hi) {
            return Err(Error::Bracket(format!("empty bracket [{lo}, {hi}]")));
        }
        let mut width = hi - lo;
        while f(lo)? <= o.zero_tol && lo > -o.max_abs_t {
            lo = (lo - width).max(-o.max_abs_t);
            width *= 2.0;
        }
        if f(lo)? <= o.zero_tol {
            return Err(Error::Bracket(format!(
                "pressure is not positive at t = {lo}; no leftmost zero within |t| <= {}",
                o.max_abs_t
            )));
        }
        let mut width = hi - lo;
        while f(hi)? > o.zero_tol && hi < o.max_abs_t {
            hi = (hi + width).min(o.max_abs_t);
            width *= 2.0;
        }
        let steps = ((hi - lo) / o.scan_step).ceil() as usize;
        let ts: Vec<f64> = (0..=steps)
            .map(|i| (lo + i as f64 * o.scan_step).min(hi))
            .collect();
        let vals = ts.iter().map(|&t| f(t)).collect::<Result<Vec<f64>>>()?;
        let signs: Vec<i8> = vals
            .iter()
            .filter_map(|&v| {
                if v > o.zero_tol {
                    Some(1)
                } else if v < -o.zero_tol {
                    Some(-1)
                } else {
                    None
                }
            })
            .collect();
        let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
        if changes > 1 {
            return Err(Error::Bracket(format!(
                "pressure changes sign {changes} times for q = {q}"
            )));
        }
        match vals.iter().position(|&v| v <= o.zero_tol) {
            Some(i) => {
                let root = bisect_predicate(|t| Ok(f(t)? <= o.zero_tol), ts[i - 1], ts[i], o.root_tol)?;
                Ok(ExtReal::Finite(root))
            }
            None => {
                let n = ts.len();
                let slope = (vals[n - 1] - vals[n - 2]) / (ts[n - 1] - ts[n - 2]);
                if slope >= o.flat_slope {
                    Ok(ExtReal::Infinite)
                } else {
                    Err(Error::Bracket(format!(
                        "pressure stays positive up to t = {hi} with slope {slope}"
                    )))
                }
            }
        }
    }
}

/// `T_φ(q) = inf{t : P(−t·log|Df| + qφ) = 0}`.
pub fn temperature(map: &MapSpec, phi: &Potential, q: f64, bracket: (f64, f64), method: Method) -> Result<ExtReal> {
    let options = TemperatureOptions {
        bracket,
        ..TemperatureOptions::default()
    };
    TemperatureSolver::new(map, phi, method, options)?.solve(q)
}

pub type TemperatureEvaluator = Arc<dyn Fn(f64) -> Result<ExtReal> + Send + Sync>;

#[derive(Clone)]
pub struct TemperatureCurve {
    pub q_grid: Vec<f64>,
    pub t_values: Vec<ExtReal>,
    pub derivative_estimates: Vec<Option<f64>>,
    pub q_minus: Option<f64>,
    pub q_plus: Option<f64>,
    pub infinite_transition_at_zero: bool,
    pub strictly_convex: bool,
    evaluator: Option<TemperatureEvaluator>,
}

impl fmt::Debug for TemperatureCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TemperatureCurve")
            .field("q_grid", &self.q_grid)
            .field("t_values", &self.t_values)
            .field("derivative_estimates", &self.derivative_estimates)
            .field("q_minus", &self.q_minus)
            .field("q_plus", &self.q_plus)
            .field("infinite_transition_at_zero", &self.infinite_transition_at_zero)
            .field("strictly_convex", &self.strictly_convex)
            .finish_non_exhaustive()
    }
}

impl TemperatureCurve {
    /// Curve from sampled values; derivatives come from the evaluator when
    /// given, else from grid differences.
    pub fn from_values(
        q_grid: Vec<f64>,
        t_values: Vec<ExtReal>,
        evaluator: Option<TemperatureEvaluator>,
    ) -> Result<Self> {
        if q_grid.len() != t_values.len() || q_grid.len() < 3 {
            return Err(Error::Invalid("temperature curve needs at least 3 matching points".into()));
        }
        if q_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Invalid("q grid must be strictly increasing".into()));
        }
        let derivative_estimates = derivatives(&q_grid, &t_values, evaluator.as_ref());
        let mut curve = Self {
            q_grid,
            t_values,
            derivative_estimates,
            q_minus: None,
            q_plus: None,
            infinite_transition_at_zero: false,
            strictly_convex: false,
            evaluator,
        };
        curve.classify();
        Ok(curve)
    }

    pub fn evaluator(&self) -> Option<&TemperatureEvaluator> {
        self.evaluator.as_ref()
    }

    fn finite_range(&self) -> Option<(usize, usize)> {
        let first = self.t_values.iter().position(|v| !v.is_infinite())?;
        let last = self.t_values.iter().rposition(|v| !v.is_infinite())?;
        Some((first, last))
    }

    /// Linear tails, convexity flag and the infinite transition marker.
    fn classify(&mut self) {
        self.infinite_transition_at_zero = self
            .q_grid
            .iter()
            .zip(&self.t_values)
            .any(|(q, v)| *q < 0.0 && v.is_infinite());
        let Some((a, b)) = self.finite_range() else {
            return;
        };
        let g = &self.q_grid[a..=b];
        let v: Vec<f64> = self.t_values[a..=b].iter().map(|x| x.finite().unwrap_or(f64::NAN)).collect();
        if g.len() < 3 {
            return;
        }
        let (l, r) = one_sided_slopes(g, &v);
        let linear: Vec<bool> = (1..g.len() - 1).map(|i| (r[i] - l[i]).abs() < LINEAR_TOL).collect();
        if linear.iter().all(|&x| x) {
            self.strictly_convex = false;
            return;
        }
        self.strictly_convex = !linear.iter().any(|&x| x);
        let lead = linear.iter().take_while(|&&x| x).count();
        if lead >= 2 {
            self.q_minus = Some(g[lead]);
        }
        let trail = linear.iter().rev().take_while(|&&x| x).count();
        if trail >= 2 {
            self.q_plus = Some(g[g.len() - 1 - trail]);
        }
    }

    /// `(−DT(q_hi), −DT(q_lo))`, the window on which the dimension spectrum
    /// is computed; `q_lo`, `q_hi` are `q_minus`, `q_plus` or the finite grid ends.
    pub fn dimension_window(&self) -> Result<(f64, f64)> {
        let (a, b) = self
            .finite_range()
            .ok_or_else(|| Error::InsufficientData("temperature curve has no finite values".into()))?;
        let qi = |q: Option<f64>, dflt: usize| q.and_then(|q| self.q_grid.iter().position(|&g| g == q)).unwrap_or(dflt);
        let (ia, ib) = (qi(self.q_minus, a), qi(self.q_plus, b));
        let d = |i: usize| {
            self.derivative_estimates[i]
                .ok_or_else(|| Error::InsufficientData(format!("no derivative at q = {}", self.q_grid[i])))
        };
        Ok((-d(ib)?, -d(ia)?))
    }

    fn q_window(&self) -> Option<(f64, f64)> {
        let (a, b) = self.finite_range()?;
        Some((
            self.q_minus.unwrap_or(self.q_grid[a]),
            self.q_plus.unwrap_or(self.q_grid[b]),
        ))
    }
}

fn derivatives(q: &[f64], t: &[ExtReal], eval: Option<&TemperatureEvaluator>) -> Vec<Option<f64>> {
    let n = q.len();
    let finite: Vec<Option<f64>> = t.iter().map(|v| v.finite()).collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let ti = finite[i]?;
            if let Some(e) = eval {
                let h = DERIVATIVE_STEP;
                let up = e(q[i] + h).ok().and_then(ExtReal::finite);
                let dn = e(q[i] - h).ok().and_then(ExtReal::finite);
                return match (dn, up) {
                    (Some(a), Some(b)) => Some((b - a) / (2.0 * h)),
                    (None, Some(b)) => Some((b - ti) / h),
                    (Some(a), None) => Some((ti - a) / h),
                    (None, None) => None,
                };
            }
            let prev = (i > 0).then(|| finite[i - 1]).flatten();
            let next = (i + 1 < n).then(|| finite[i + 1]).flatten();
            match (prev, next) {
                (Some(a), Some(b)) => Some((b - a) / (q[i + 1] - q[i - 1])),
                (None, Some(b)) => Some((b - ti) / (q[i + 1] - q[i])),
                (Some(a), None) => Some((ti - a) / (q[i] - q[i - 1])),
                (None, None) => None,
            }
        })
        .collect()
}

/// Temperature at every grid point, with derivative estimates and the
/// linear-tail window.
pub fn temperature_curve(map: &MapSpec, phi: &Potential, q_grid: &[f64], method: Method) -> Result<TemperatureCurve> {
    let solver = TemperatureSolver::new(map, phi, method, TemperatureOptions::default())?;
    temperature_curve_from_solver(solver, q_grid)
}

pub fn temperature_curve_from_solver(solver: TemperatureSolver, q_grid: &[f64]) -> Result<TemperatureCurve> {
    let values = q_grid
        .par_iter()
        .map(|&q| solver.solve(q).map_err(|e| e.at("q", q)))
        .collect::<Result<Vec<_>>>()?;
    let eval: TemperatureEvaluator = Arc::new(move |q| solver.solve(q));
    TemperatureCurve::from_values(q_grid.to_vec(), values, Some(eval))
}

/// `𝔇(α) = inf_q (T(q) + qα)` on the validity window.
pub fn dimension_spectrum(curve: &TemperatureCurve, alpha_grid: &[f64]) -> Result<SpectrumCurve> {
    let (lo, hi) = curve.dimension_window()?;
    let values: Vec<Option<f64>> = curve.t_values.iter().map(|v| v.finite()).collect();
    let ev = curve
        .evaluator
        .as_ref()
        .map(|e| move |q: f64| e(q).ok().and_then(ExtReal::finite));
    let results = alpha_grid
        .par_iter()
        .map(|&a| {
            let tol = 1e-9 * a.abs().max(1.0);
            if a < lo - tol || a > hi + tol {
                return Err(Error::Domain {
                    x: a,
                    context: format!("dimension window [{lo}, {hi}]"),
                }
                .at("alpha", a));
            }
            legendre_inf(
                &curve.q_grid,
                &values,
                ev.as_ref().map(|f| f as &(dyn Fn(f64) -> Option<f64> + Sync)),
                a,
            )
            .ok_or_else(|| Error::InsufficientData("no finite temperature values".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumCurve {
        kind: SpectrumKind::Dimension,
        abscissa_grid: alpha_grid.to_vec(),
        values: results.iter().map(|r| r.value).collect(),
        domain: SpectrumDomain {
            lower: lo,
            upper: hi,
            lower_verified: true,
        },
        provenance: results
            .iter()
            .map(|r| Provenance {
                argmin: r.t_star,
                attained: r.attained,
                verified: true,
            })
            .collect(),
    })
}

/// `(−DT(q), T(q) − q·DT(q))` for grid `q` in the strictly convex window.
pub fn parametric_dimension_spectrum(curve: &TemperatureCurve) -> Vec<(f64, f64)> {
    let Some((qa, qb)) = curve.q_window() else {
        return Vec::new();
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for ((&q, v), d) in curve.q_grid.iter().zip(&curve.t_values).zip(&curve.derivative_estimates) {
        let (Some(t), Some(dt)) = (v.finite(), *d) else {
            continue;
        };
        if q < qa || q > qb {
            continue;
        }
        let pt = (-dt, t - q * dt);
        let dup = out
            .last()
            .is_some_and(|p| (p.0 - pt.0).abs() < 1e-9 && (p.1 - pt.1).abs() < 1e-9);
        if !dup {
            out.push(pt);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnboundedDomainReport {
    /// `α_c = −D⁺T(0)`.
    pub alpha_c: f64,
    /// `𝔇(α) = T(0)` for `α ≥ α_c`.
    pub dimension_beyond: f64,
}

pub fn unbounded_domain_report(curve: &TemperatureCurve) -> Result<UnboundedDomainReport> {
    if !curve.infinite_transition_at_zero {
        return Err(Error::NotApplicable(
            "temperature is finite on the whole grid".into(),
        ));
    }
    let i0 = curve
        .q_grid
        .iter()
        .position(|&q| q.abs() < 1e-12)
        .ok_or_else(|| Error::InsufficientData("q = 0 is not a grid point".into()))?;
    let at = |i: usize| curve.t_values.get(i).and_then(|v| v.finite());
    let t0 = at(i0).ok_or_else(|| Error::InsufficientData("T(0) is not finite".into()))?;
    let g = &curve.q_grid;
    let right = match (at(i0 + 1), at(i0 + 2)) {
        (Some(t1), Some(t2)) => {
            let (h1, h2) = (g[i0 + 1] - g[i0], g[i0 + 2] - g[i0]);
            // one-sided three-point stencil
            -t0 * (h1 + h2) / (h1 * h2) + t1 * h2 / (h1 * (h2 - h1)) - t2 * h1 / (h2 * (h2 - h1))
        }
        (Some(t1), None) => (t1 - t0) / (g[i0 + 1] - g[i0]),
        _ => return Err(Error::InsufficientData("no finite values right of q = 0".into())),
    };
    Ok(UnboundedDomainReport {
        alpha_c: -right,
        dimension_beyond: t0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use crate::pressure::{pressure_curve, Parameter, PotentialFamily};
    use std::f64::consts::LN_2;

    fn bernoulli_t(q: f64) -> f64 {
        (0.3f64.powf(q) + 0.7f64.powf(q)).log2()
    }

    fn cheb(t: f64) -> f64 {
        ((1.0 - t) * LN_2).max(-2.0 * t * LN_2)
    }

    fn two_branch_curve() -> PressureCurve {
        let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
        pressure_curve(&m, &PotentialFamily::geometric(2), &linspace(-10.0, 10.0, 81), Method::CylinderMatrix { depth: 1 }).unwrap()
    }

    #[test]
    fn doubling_legendre_is_degenerate() {
        let d = MapSpec::doubling();
        let c = pressure_curve(&d, &PotentialFamily::geometric(2), &linspace(-2.0, 2.0, 9), Method::CylinderMatrix { depth: 1 }).unwrap();
        let r = legendre_lyapunov(&c, LN_2).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!(r.degenerate);
        let s = lyapunov_spectrum(&c, &[LN_2]).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_branch_acip_exponent() {
        let c = two_branch_curve();
        let r = legendre_lyapunov(&c, 0.636514168294813).unwrap();
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!((r.t_star - 1.0).abs() < 1e-4);
    }

    #[test]
    fn two_branch_spectrum_shape() {
        let c = two_branch_curve();
        let grid = linspace(1.5f64.ln() + 0.01, 3.0f64.ln() - 0.01, 21);
        let s = lyapunov_spectrum(&c, &grid).unwrap();
        let peak = s.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(peak <= 1.0 + 1e-6 && peak > 0.99);
        assert!(s.values[0] < 0.2 && s.values[20] < 0.2);
        assert!((s.values[0] - 0.18166).abs() < 1e-4);
        assert!(s.concavity_violation() < 1e-9);
        assert!(s.domain.lower_verified);
    }

    #[test]
    fn synthetic_chebyshev_spectrum() {
        let c = PressureCurve::from_fn(Parameter::T, linspace(-3.0, 3.0, 61), cheb).unwrap();
        let r = legendre_lyapunov(&c, 1.2 * LN_2).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-9);
        assert!((r.t_star + 1.0).abs() < 1e-6);
        let grid = [1.1 * LN_2, 1.5 * LN_2, 1.9 * LN_2];
        let s = lyapunov_spectrum(&c, &grid).unwrap();
        for (v, k) in s.values.iter().zip([1.1, 1.5, 1.9]) {
            assert!((v - (2.0 - k) / k).abs() < 1e-9);
        }
    }

    #[test]
    fn legendre_rejects_out_of_range() {
        let c = two_branch_curve();
        assert!(matches!(legendre_lyapunov(&c, 2.0), Err(Error::Domain { .. })));
        assert!(matches!(legendre_lyapunov(&c, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn bernoulli_temperature_examples() {
        let d = MapSpec::doubling();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let m = Method::CylinderMatrix { depth: 1 };
        let t1 = temperature(&d, &phi, 1.0, (-4.0, 4.0), m).unwrap().finite().unwrap();
        assert!(t1.abs() < 1e-10);
        let t0 = temperature(&d, &phi, 0.0, (-4.0, 4.0), m).unwrap().finite().unwrap();
        assert!((t0 - 1.0).abs() < 1e-10);
        let t2 = temperature(&d, &phi, 2.0, (-4.0, 4.0), m).unwrap().finite().unwrap();
        assert!((t2 + 0.785875194647).abs() < 1e-10);
    }

    #[test]
    fn unnormalized_potential_is_rejected() {
        let d = MapSpec::doubling();
        let e = temperature(&d, &Potential::bernoulli(&[0.3, 0.3]), 1.0, (-4.0, 4.0), Method::CylinderMatrix { depth: 1 });
        assert!(matches!(e, Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn bernoulli_temperature_curve() {
        let d = MapSpec::doubling();
        let q = linspace(-5.0, 5.0, 41);
        let c = temperature_curve(&d, &Potential::bernoulli(&[0.3, 0.7]), &q, Method::PeriodicOrbit { period: 8 }).unwrap();
        let v: Vec<f64> = c.t_values.iter().map(|x| x.finite().unwrap()).collect();
        for (qq, t) in q.iter().zip(&v) {
            assert!((t - bernoulli_t(*qq)).abs() < 1e-8);
        }
        assert!(v.windows(2).all(|w| w[1] < w[0]));
        assert!(c.strictly_convex);
        assert!(c.q_minus.is_none() && c.q_plus.is_none());
        assert!(!c.infinite_transition_at_zero);
    }

    #[test]
    fn acip_potential_gives_affine_temperature() {
        let d = MapSpec::doubling();
        let q = linspace(-3.0, 3.0, 13);
        let c = temperature_curve(&d, &Potential::bernoulli(&[0.5, 0.5]), &q, Method::CylinderMatrix { depth: 1 }).unwrap();
        for (qq, t) in q.iter().zip(&c.t_values) {
            assert!((t.finite().unwrap() - (1.0 - qq)).abs() < 1e-10);
        }
        assert!(!c.strictly_convex);
        let par = parametric_dimension_spectrum(&c);
        assert_eq!(par.len(), 1);
        assert!((par[0].0 - 1.0).abs() < 1e-8 && (par[0].1 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn manneville_pomeau_infinite_markers() {
        let mp = MapSpec::manneville_pomeau(0.5).unwrap();
        let phi = Potential::constant(-LN_2, 2);
        let c = temperature_curve(&mp, &phi, &[-1.0, -0.5, 0.0, 0.5], Method::PeriodicOrbit { period: 8 }).unwrap();
        assert!(c.t_values[0].is_infinite() && c.t_values[1].is_infinite());
        assert!(c.t_values[2].finite().is_some());
        assert!(c.infinite_transition_at_zero);
        assert!(unbounded_domain_report(&c).is_ok());
    }

    #[test]
    fn bernoulli_dimension_examples() {
        let d = MapSpec::doubling();
        let q = linspace(-5.0, 5.0, 41);
        let c = temperature_curve(&d, &Potential::bernoulli(&[0.3, 0.7]), &q, Method::CylinderMatrix { depth: 1 }).unwrap();
        let i1 = 24;
        let i0 = 20;
        assert_eq!(q[i1], 1.0);
        let a1 = -c.derivative_estimates[i1].unwrap();
        assert!((a1 - 0.881290899231).abs() < 1e-8);
        let a0 = -c.derivative_estimates[i0].unwrap();
        assert!((a0 - 1.125769383498).abs() < 1e-8);
        let s = dimension_spectrum(&c, &[a1, a0]).unwrap();
        assert!((s.values[0] - a1).abs() < 1e-9);
        assert!((s.values[1] - 1.0).abs() < 1e-9);
        let a2 = -c.derivative_estimates[28].unwrap();
        let s2 = dimension_spectrum(&c, &[a2]).unwrap();
        assert!((s2.values[0] - 0.622634316255).abs() < 1e-6);
        let par = parametric_dimension_spectrum(&c);
        assert!((par[i1].0 - 0.881290899231).abs() < 1e-8);
        assert!((par[i1].1 - 0.881290899231).abs() < 1e-8);
        assert!((par[i0].1 - 1.0).abs() < 1e-10);
        assert!(matches!(unbounded_domain_report(&c), Err(Error::NotApplicable(_))));
    }

    #[test]
    fn synthetic_unbounded_domain() {
        let q = linspace(-2.0, 2.0, 9);
        let t: Vec<ExtReal> = q
            .iter()
            .map(|&x| if x < 0.0 { ExtReal::Infinite } else { ExtReal::Finite(1.0 - x) })
            .collect();
        let c = TemperatureCurve::from_values(q, t, None).unwrap();
        let r = unbounded_domain_report(&c).unwrap();
        assert!((r.alpha_c - 1.0).abs() < 1e-12);
        assert_eq!(r.dimension_beyond, 1.0);
    }

    #[test]
    fn dimension_outside_window_is_rejected() {
        let d = MapSpec::doubling();
        let q = linspace(-2.0, 2.0, 9);
        let c = temperature_curve(&d, &Potential::bernoulli(&[0.3, 0.7]), &q, Method::CylinderMatrix { depth: 1 }).unwrap();
        let (lo, hi) = c.dimension_window().unwrap();
        assert!(dimension_spectrum(&c, &[lo - 0.1]).is_err());
        assert!(dimension_spectrum(&c, &[hi + 0.1]).is_err());
    }
}
