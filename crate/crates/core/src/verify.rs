//! The cross-module verification suite, criteria C1 to C10, each checked
//! against a closed form or an independently computed value.

use std::f64::consts::LN_2;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::empirical::{empirical_lyapunov_spectrum, BinSpec};
use crate::equilibria::{bernoulli_measure, check_gibbs};
use crate::error::Result;
use crate::inducing::{
    first_return_scheme, gibbs_branch_weights, induce_potential, induced_pressure, project_measure,
    truncate_and_pressure,
};
use crate::maps::{Interval, MapSpec, Potential};
use crate::numeric::{golden_section_minimize, linspace};
use crate::pressure::{
    detect_phase_transitions, pressure_curve, pressure_matrix, pressure_periodic, Method, PotentialFamily,
    DEFAULT_SLOPE_GAP_TOL,
};
use crate::spectra::{
    dimension_spectrum, legendre_lyapunov, lyapunov_spectrum, parametric_dimension_spectrum, temperature_curve,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub slope_gap_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            slope_gap_tol: DEFAULT_SLOPE_GAP_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub budget_seconds: Option<f64>,
}

struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn le(&mut self, what: &str, value: f64, bound: f64) {
        if !(value <= bound) {
            self.ok = false;
            self.notes.push(format!("{what} = {value:.3e} > {bound:.0e}"));
        }
    }

    fn that(&mut self, what: &str, cond: bool) {
        if !cond {
            self.ok = false;
            self.notes.push(what.to_string());
        }
    }

    fn detail(&self, summary: String) -> String {
        if self.notes.is_empty() {
            summary
        } else {
            format!("{summary}; {}", self.notes.join("; "))
        }
    }
}

fn two_branch() -> MapSpec {
    MapSpec::two_branch_linear(1.0 / 3.0).expect("valid breakpoint")
}

fn two_branch_p(t: f64) -> f64 {
    (3f64.powf(-t) + 1.5f64.powf(-t)).ln()
}

fn c1() -> Result<(Check, String)> {
    let d = MapSpec::doubling();
    let mut c = Check::new();
    let mut worst: f64 = 0.0;
    for t in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        let exact = (1.0 - t) * LN_2;
        let phi = Potential::geometric(t);
        worst = worst.max((pressure_periodic(&d, &phi, 6, 0)? - exact).abs());
        worst = worst.max((pressure_matrix(&d, &phi, 1)? - exact).abs());
    }
    c.le("max error", worst, 1e-10);
    Ok((c, format!("max error {worst:.2e}")))
}

fn c2() -> Result<(Check, String)> {
    let m = two_branch();
    let mut c = Check::new();
    let grid = linspace(-3.0, 3.0, 25);
    let fam = PotentialFamily::geometric(2);
    let per = pressure_curve(&m, &fam, &grid, Method::PeriodicOrbit { period: 14 })?;
    let mat = pressure_curve(&m, &fam, &grid, Method::CylinderMatrix { depth: 1 })?;
    let err = |v: &[f64]| grid.iter().zip(v).map(|(&t, &p)| (p - two_branch_p(t)).abs()).fold(0.0, f64::max);
    let (ep, em) = (err(&per.values), err(&mat.values));
    c.le("periodic error", ep, 1e-6);
    c.le("matrix error", em, 1e-12);
    Ok((c, format!("periodic {ep:.2e}, matrix {em:.2e}")))
}

fn c3() -> Result<(Check, String)> {
    let m = two_branch();
    let mut c = Check::new();
    let curve = pressure_curve(&m, &PotentialFamily::geometric(2), &linspace(-10.0, 10.0, 81), Method::CylinderMatrix { depth: 1 })?;
    let (lo, hi) = (1.5f64.ln(), 3f64.ln());
    let margin = 0.05 * (hi - lo);
    let mut worst: f64 = 0.0;
    for l in linspace(lo + margin, hi - margin, 21) {
        let (_, v) = golden_section_minimize(|t| two_branch_p(t) + t * l, -40.0, 40.0, 1e-12);
        worst = worst.max((legendre_lyapunov(&curve, l)?.value - v / l).abs());
    }
    c.le("Legendre error", worst, 1e-8);
    let h = 1e-5;
    let ts: Vec<f64> = linspace(-4.0, 4.0, 17);
    let lambdas: Vec<f64> = ts
        .iter()
        .map(|&t| -(curve.value_at(t + h).unwrap_or(f64::NAN) - curve.value_at(t - h).unwrap_or(f64::NAN)) / (2.0 * h))
        .collect();
    let spec = lyapunov_spectrum(&curve, &lambdas)?;
    let mut par: f64 = 0.0;
    for ((&t, &l), &lv) in ts.iter().zip(&lambdas).zip(&spec.values) {
        let rhs = curve.value_at(t)? + t * l;
        par = par.max((lv * l - rhs).abs());
    }
    c.le("parametric error", par, 1e-4);
    Ok((c, format!("Legendre {worst:.2e}, parametric {par:.2e}")))
}

fn c4(opts: &VerifyOptions) -> Result<(Check, String)> {
    let mut c = Check::new();
    let curve = pressure_curve(
        &MapSpec::chebyshev(),
        &PotentialFamily::geometric(2),
        &linspace(-3.0, 3.0, 61),
        Method::PeriodicOrbit { period: 18 },
    )?;
    let report = detect_phase_transitions(&curve, opts.slope_gap_tol);
    c.that(&format!("{} kinks reported, expected 1", report.kinks.len()), report.kinks.len() == 1);
    let summary = match report.kinks.first() {
        Some(k) => {
            c.that(
                &format!("kink at {:.4} outside [-1.05, -0.95]", k.location),
                (-1.05..=-0.95).contains(&k.location),
            );
            c.le("right slope error", (k.right_slope + LN_2).abs(), 0.05);
            c.le("left slope error", (k.left_slope + 2.0 * LN_2).abs(), 0.05);
            format!(
                "kink at {:.4}, slopes {:.4} / {:.4}",
                k.location, k.left_slope, k.right_slope
            )
        }
        None => "no kink".into(),
    };
    Ok((c, summary))
}

fn bernoulli_t(q: f64) -> f64 {
    (0.3f64.powf(q) + 0.7f64.powf(q)).log2()
}

fn c5() -> Result<(Check, String)> {
    let mut c = Check::new();
    let q = linspace(-5.0, 5.0, 41);
    let curve = temperature_curve(
        &MapSpec::doubling(),
        &Potential::bernoulli(&[0.3, 0.7]),
        &q,
        Method::CylinderMatrix { depth: 1 },
    )?;
    let v: Vec<f64> = curve.t_values.iter().map(|x| x.finite().unwrap_or(f64::NAN)).collect();
    let err = q.iter().zip(&v).map(|(&q, &t)| (t - bernoulli_t(q)).abs()).fold(0.0, f64::max);
    c.le("closed-form error", err, 1e-8);
    c.le("|T(1)|", v[24].abs(), 1e-10);
    c.le("|T(0) - 1|", (v[20] - 1.0).abs(), 1e-10);
    c.that("T not strictly decreasing", v.windows(2).all(|w| w[1] < w[0]));
    let conv = v
        .windows(3)
        .map(|w| w[0] - 2.0 * w[1] + w[2])
        .fold(f64::INFINITY, f64::min);
    c.le("convexity violation", (-conv).max(0.0), 1e-9);
    Ok((c, format!("max error {err:.2e}")))
}

fn c6() -> Result<(Check, String)> {
    let mut c = Check::new();
    let d = MapSpec::doubling();
    let phi = Potential::bernoulli(&[0.3, 0.7]);
    let mu = bernoulli_measure(&d, &phi)?;
    let own = check_gibbs(&mu, &phi, 0.0, 8)?;
    c.le("C - 1 (own potential)", own.best_constant - 1.0, 1e-9);
    let other = Potential::bernoulli(&[0.5, 0.5]);
    let neg = check_gibbs(&mu, &other, 0.0, 6)?;
    c.that(
        &format!("negative control C = {:.3} < 7", neg.best_constant),
        neg.best_constant >= 7.0,
    );
    Ok((c, format!("C = {:.12}, control C = {:.3}", own.best_constant, neg.best_constant)))
}

fn c7() -> Result<(Check, String)> {
    let mut c = Check::new();
    let d = MapSpec::doubling();
    let s = first_return_scheme(&d, Interval::new(0.5, 1.0), 20, 100_000)?;
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.5, 2.0] {
        let phi = induce_potential(&s, &Potential::geometric(t))?;
        worst = worst.max(induced_pressure(&s, &phi, (1.0 - t) * LN_2)?.abs());
    }
    c.le("induced pressure", worst, 1e-8);
    let phi = induce_potential(&s, &Potential::geometric(1.0))?;
    let w = gibbs_branch_weights(&s, &phi, 0.0)?;
    let mu = project_measure(&s, &w, Some(&phi))?;
    c.le("|h - log 2|", (mu.entropy - LN_2).abs(), 1e-5);
    c.le("|dim - 1|", (mu.dimension() - 1.0).abs(), 1e-5);
    Ok((
        c,
        format!("induced pressure {worst:.2e}, h = {:.8}, dim = {:.8}", mu.entropy, mu.dimension()),
    ))
}

fn c8() -> Result<(Check, String)> {
    let mut c = Check::new();
    let d = MapSpec::doubling();
    let s = first_return_scheme(&d, Interval::new(0.5, 1.0), 20, 100_000)?;
    let ts = linspace(0.0, 2.0, 9);
    let curve = pressure_curve(&d, &PotentialFamily::geometric(2), &linspace(-1.0, 3.0, 17), Method::CylinderMatrix { depth: 1 })?;
    let mut deltas = Vec::new();
    let mut excess: f64 = f64::NEG_INFINITY;
    for n in 1..=20 {
        let r = truncate_and_pressure(&s, n, &ts, &curve)?;
        for (pn, p) in r.p_n_values.iter().zip(&r.p_values) {
            excess = excess.max(pn - p);
        }
        deltas.push(r.delta);
    }
    c.that("delta(N) increases somewhere", deltas.windows(2).all(|w| w[1] <= w[0]));
    c.le("delta(10)", deltas[9], 0.01 - f64::EPSILON);
    c.le("max p_N - p", excess, 1e-9);
    Ok((c, format!("delta(10) = {:.2e}, delta(20) = {:.2e}", deltas[9], deltas[19])))
}

fn c9() -> Result<(Check, String)> {
    let mut c = Check::new();
    let m = two_branch();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::error::Error::Invalid(e.to_string()))?;
    let est = pool.install(|| empirical_lyapunov_spectrum(&m, 200, 20_000, &BinSpec::Auto { count: 5 }))?;
    let curve = pressure_curve(&m, &PotentialFamily::geometric(2), &linspace(-10.0, 10.0, 81), Method::CylinderMatrix { depth: 1 })?;
    let spec = lyapunov_spectrum(&curve, &est.bin_centers)?;
    let worst = est
        .dim_estimates
        .iter()
        .zip(&spec.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    c.that(&format!("{} bins, expected 5", est.bin_centers.len()), est.bin_centers.len() == 5);
    c.le("max bin error", worst, 0.05);
    Ok((c, format!("max bin error {worst:.4}")))
}

fn c10() -> Result<(Check, String)> {
    let mut c = Check::new();
    let q = linspace(-5.0, 5.0, 41);
    let curve = temperature_curve(
        &MapSpec::doubling(),
        &Potential::bernoulli(&[0.3, 0.7]),
        &q,
        Method::CylinderMatrix { depth: 1 },
    )?;
    let par = parametric_dimension_spectrum(&curve);
    let alphas: Vec<f64> = par.iter().map(|p| p.0).collect();
    let mut sorted = alphas.clone();
    sorted.sort_by(f64::total_cmp);
    let spec = dimension_spectrum(&curve, &sorted)?;
    let mut overlap: f64 = 0.0;
    for (a, d) in &par {
        let i = sorted.iter().position(|x| x == a).unwrap_or(0);
        overlap = overlap.max((spec.values[i] - d).abs());
    }
    c.le("parametric mismatch", overlap, 1e-5);
    let a1 = -curve.derivative_estimates[24].unwrap_or(f64::NAN);
    let a0 = -curve.derivative_estimates[20].unwrap_or(f64::NAN);
    let pts = dimension_spectrum(&curve, &[a1, a0])?;
    c.le("|D(-DT(1)) + DT(1)|", (pts.values[0] - a1).abs(), 1e-5);
    c.le("|D(-DT(0)) - 1|", (pts.values[1] - 1.0).abs(), 1e-5);
    let (lo, hi) = curve.dimension_window()?;
    let dense = dimension_spectrum(&curve, &linspace(lo, hi, 101))?;
    let cv = dense.concavity_violation();
    c.le("concavity violation", cv, 1e-9);
    Ok((c, format!("overlap {overlap:.2e}, concavity {cv:.2e}")))
}

type Runner = Box<dyn Fn() -> Result<(Check, String)>>;

pub const CRITERIA: [(&str, &str, Option<f64>); 10] = [
    ("C1", "doubling pressure", Some(1.0)),
    ("C2", "two-branch pressure", Some(10.0)),
    ("C3", "Legendre consistency", None),
    ("C4", "Chebyshev phase transition", Some(30.0)),
    ("C5", "temperature closed form", None),
    ("C6", "Gibbs property", None),
    ("C7", "inducing identities", None),
    ("C8", "truncation", None),
    ("C9", "empirical cross-validation", Some(60.0)),
    ("C10", "dimension spectrum identities", None),
];

/// Runs every criterion in order. A criterion that errors, misses a
/// tolerance or overruns its time budget fails.
pub fn run_suite(opts: &VerifyOptions) -> Vec<CriterionResult> {
    let o = *opts;
    let runners: Vec<Runner> = vec![
        Box::new(c1),
        Box::new(c2),
        Box::new(c3),
        Box::new(move || c4(&o)),
        Box::new(c5),
        Box::new(c6),
        Box::new(c7),
        Box::new(c8),
        Box::new(c9),
        Box::new(c10),
    ];
    CRITERIA
        .iter()
        .zip(runners)
        .map(|(&(id, name, budget), run)| {
            let start = Instant::now();
            let out = run();
            let elapsed = start.elapsed();
            let (mut passed, mut detail) = match out {
                Ok((c, summary)) => (c.ok, c.detail(summary)),
                Err(e) => (false, format!("error: {e}")),
            };
            if let Some(b) = budget {
                if elapsed > Duration::from_secs_f64(b) {
                    passed = false;
                    detail.push_str(&format!("; runtime {:.2}s over {b}s budget", elapsed.as_secs_f64()));
                }
            }
            CriterionResult {
                id: id.into(),
                name: name.into(),
                passed,
                detail,
                seconds: elapsed.as_secs_f64(),
                budget_seconds: budget,
            }
        })
        .collect()
}

pub fn failing_ids(results: &[CriterionResult]) -> Vec<String> {
    results.iter().filter(|r| !r.passed).map(|r| r.id.clone()).collect()
}
