//! First-return inducing schemes on cylinder-union bases, induced
//! potentials and pressure, Abramov projection, and truncation.

use serde::{Deserialize, Serialize};

use crate::equilibria::MeasureApprox;
use crate::error::{Error, Result};
use crate::maps::{Interval, MapSpec, Potential};
use crate::numeric::{bisect_root, kahan_sum, log_sum_exp};
use crate::pressure::PressureCurve;
use crate::symbolic::{
    birkhoff_sum, cylinder_interval, cylinder_intervals, inverse_word, periodic_point, word_from_index,
};

const MAX_BASE_DEPTH: usize = 12;
const DISTORTION_GRID: usize = 64;
const MAX_PREFIXES: usize = 10_000_000;
const TAIL_RATIO: f64 = 0.95;
const TAIL_RELATIVE: f64 = 1e-12;
const VARIATION_DEPTHS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InducedBranch {
    pub domain: Interval,
    pub inducing_time: usize,
    /// `log|DF|` at the representative.
    pub log_deriv: f64,
    pub word: Vec<u8>,
    pub representative: f64,
}

#[derive(Debug, Clone)]
pub struct InducingScheme {
    pub base: Interval,
    /// Depth-`d` words whose cylinders make up the base.
    pub base_words: Vec<Vec<u8>>,
    pub branches: Vec<InducedBranch>,
    pub distortion_bound: f64,
    pub complete_mass: f64,
    pub max_time: usize,
    map: MapSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InducedPotential {
    pub values: Vec<f64>,
    /// Oscillation of `Φ` over refinements of depth `1..=4`.
    pub variation_bound: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub p_n_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub delta: f64,
}

impl InducingScheme {
    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub fn taus(&self) -> Vec<usize> {
        self.branches.iter().map(|b| b.inducing_time).collect()
    }

    /// The first `n` branches, in the scheme's (τ, word) order.
    pub fn truncated(&self, n: usize) -> Result<InducingScheme> {
        if n == 0 || n > self.branches.len() {
            return Err(Error::Invalid(format!(
                "truncation to {n} branches, scheme has {}",
                self.branches.len()
            )));
        }
        let mut s = self.clone();
        s.branches.truncate(n);
        let covered: f64 = s.branches.iter().map(|b| b.domain.len()).sum();
        s.complete_mass = covered / s.base.len();
        Ok(s)
    }

    /// Largest endpoint error of `f^τ(domain) = base` over all branches.
    pub fn branch_image_error(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let mut ends = [b.domain.lo, b.domain.hi].map(|x| forward_word(&self.map, &b.word, x));
                ends.sort_by(f64::total_cmp);
                (ends[0] - self.base.lo).abs().max((ends[1] - self.base.hi).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn forward_word(map: &MapSpec, word: &[u8], x: f64) -> f64 {
    word.iter()
        .fold(x, |z, &s| map.branches[s as usize].forward(z))
}

/// Depth-`d` words whose cylinders tile `base`, for the smallest such `d`.
fn resolve_base(map: &MapSpec, base: Interval) -> Result<(usize, Vec<Vec<u8>>)> {
    let not_markov = Error::NotMarkovBase {
        lo: base.lo,
        hi: base.hi,
    };
    if !(base.lo >= 0.0 && base.hi <= 1.0 && base.len() > 0.0) {
        return Err(not_markov);
    }
    let m = map.branch_count();
    for d in 1..=MAX_BASE_DEPTH {
        if m.pow(d as u32) > 1 << 22 {
            break;
        }
        let cyl = cylinder_intervals(map, d);
        let inside: Vec<usize> = (0..cyl.len())
            .filter(|&i| base.contains_interval(&cyl[i], 1e-12))
            .collect();
        let covered: f64 = inside.iter().map(|&i| cyl[i].len()).sum();
        if !inside.is_empty() && (covered - base.len()).abs() < 1e-12 {
            return Ok((d, inside.into_iter().map(|i| word_from_index(i, m, d)).collect()));
        }
    }
    Err(not_markov)
}

/// First-return branches to `base` with inducing time at most `max_time`,
/// stopping after `max_branches`, ordered by time and then word.
pub fn first_return_scheme(
    map: &MapSpec,
    base: Interval,
    max_time: usize,
    max_branches: usize,
) -> Result<InducingScheme> {
    if max_time == 0 || max_branches == 0 {
        return Err(Error::Invalid("max_time and max_branches must be positive".into()));
    }
    let (d, base_words) = resolve_base(map, base)?;
    let m = map.branch_count();
    let in_base = |w: &[u8]| base_words.iter().any(|b| b.as_slice() == w);
    let mut words: Vec<Vec<u8>> = Vec::new();
    // prefixes whose determined windows are consistent with a first return
    let mut alive: Vec<Vec<u8>> = (0..m as u8).map(|s| vec![s]).collect();
    'outer: for tau in 1..=max_time {
        let mut next = Vec::new();
        for p in &alive {
            let mut hits = 0;
            for v in &base_words {
                let mut full = p.clone();
                full.extend_from_slice(v);
                let first_ok = in_base(&full[..d]);
                let no_early = (1..tau).all(|j| !in_base(&full[j..j + d]));
                if first_ok && no_early {
                    hits += 1;
                }
            }
            if hits == base_words.len() {
                words.push(p.clone());
                if words.len() >= max_branches {
                    break 'outer;
                }
            } else if hits > 0 {
                return Err(Error::NotMarkovBase {
                    lo: base.lo,
                    hi: base.hi,
                });
            }
            if tau < max_time {
                for s in 0..m as u8 {
                    let mut q = p.clone();
                    q.push(s);
                    let l = q.len();
                    let first_ok = l < d || in_base(&q[..d]);
                    let j = l.checked_sub(d);
                    let last_ok = match j {
                        Some(j) if j >= 1 => !in_base(&q[j..]),
                        _ => true,
                    };
                    if first_ok && last_ok {
                        next.push(q);
                    }
                }
            }
        }
        if next.len() > MAX_PREFIXES {
            return Err(Error::Budget {
                what: "return prefixes",
                requested: next.len() as u128,
                limit: MAX_PREFIXES as u128,
            });
        }
        alive = next;
    }
    let mut branches = Vec::with_capacity(words.len());
    for w in words {
        let orbit = periodic_point(map, &w)?;
        let domain = Interval::new(inverse_word(map, &w, base.lo), inverse_word(map, &w, base.hi));
        branches.push(InducedBranch {
            domain,
            inducing_time: w.len(),
            log_deriv: orbit.birkhoff_log_deriv,
            word: w,
            representative: orbit.point,
        });
    }
    let covered = kahan_sum(branches.iter().map(|b| b.domain.len()));
    let distortion_bound = if map.is_piecewise_linear() {
        1.0
    } else {
        distortion(map, &branches)
    };
    Ok(InducingScheme {
        base,
        base_words,
        complete_mass: covered / base.len(),
        distortion_bound,
        max_time,
        branches,
        map: map.clone(),
    })
}

fn log_deriv_along(map: &MapSpec, word: &[u8], x: f64) -> Option<f64> {
    let mut z = x;
    let mut sum = 0.0;
    for &s in word {
        let d = map.branches[s as usize].derivative(z).abs();
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        sum += d.ln();
        z = map.branches[s as usize].forward(z);
    }
    Some(sum)
}

/// `sup/inf |DF|` per branch on a 64-point grid, maximized over branches.
fn distortion(map: &MapSpec, branches: &[InducedBranch]) -> f64 {
    let mut worst = 0.0_f64;
    for b in branches {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..DISTORTION_GRID {
            let x = b.domain.lo + b.domain.len() * (i as f64 + 0.5) / DISTORTION_GRID as f64;
            match log_deriv_along(map, &b.word, x) {
                Some(v) => {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                None => return f64::INFINITY,
            }
        }
        worst = worst.max(hi - lo);
    }
    worst.exp()
}

/// `Φ_i = S_{τ_i} φ` at each branch representative.
pub fn induce_potential(scheme: &InducingScheme, phi: &Potential) -> Result<InducedPotential> {
    let map = &scheme.map;
    phi.validate(map)?;
    let mut values = Vec::with_capacity(scheme.branches.len());
    for b in &scheme.branches {
        let orbit = crate::symbolic::PeriodicOrbit {
            word: b.word.clone(),
            point: b.representative,
            birkhoff_log_deriv: b.log_deriv,
        };
        let v = birkhoff_sum(map, phi, &orbit)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteWeight {
                context: format!("induced potential on word {:?}", b.word),
            });
        }
        values.push(v);
    }
    let variation_bound = variation(scheme, phi);
    Ok(InducedPotential {
        values,
        variation_bound,
    })
}

fn sum_along(map: &MapSpec, phi: &Potential, word: &[u8], x: f64) -> Option<f64> {
    let mut z = x;
    let mut sum = 0.0;
    for &s in word {
        sum += phi.value_on(map, s as usize, z, None).ok()?;
        z = map.branches[s as usize].forward(z);
    }
    sum.is_finite().then_some(sum)
}

fn variation(scheme: &InducingScheme, phi: &Potential) -> Vec<f64> {
    let map = &scheme.map;
    let exact = map.is_piecewise_linear() && phi.rest_is_locally_constant();
    let mut out = Vec::with_capacity(VARIATION_DEPTHS);
    let mut running = f64::INFINITY;
    for depth in 1..=VARIATION_DEPTHS {
        let v = if exact {
            0.0
        } else {
            let pieces = 1usize << depth;
            let mut worst = 0.0_f64;
            for b in &scheme.branches {
                let step = b.domain.len() / pieces as f64;
                for k in 0..pieces {
                    let xs = [0.0, 0.5, 1.0].map(|f| b.domain.lo + step * (k as f64 + f));
                    let vals: Vec<f64> = xs.iter().filter_map(|&x| sum_along(map, phi, &b.word, x)).collect();
                    if vals.len() < 2 {
                        continue;
                    }
                    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    worst = worst.max(hi - lo);
                }
            }
            worst
        };
        running = running.min(v);
        out.push(running);
    }
    out
}

/// Total weight per inducing time, `W(τ) = Σ_{τ_i = τ} exp(Φ_i − sτ)` in logs.
fn log_weights_by_time(taus: &[usize], values: &[f64], s: f64) -> Result<Vec<(usize, f64)>> {
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for (&tau, &v) in taus.iter().zip(values) {
        let w = v - s * tau as f64;
        match out.last_mut() {
            Some((t, ws)) if *t == tau => ws.push(w),
            _ => out.push((tau, vec![w])),
        }
    }
    out.into_iter()
        .map(|(t, mut ws)| Ok((t, log_sum_exp(&mut ws)?)))
        .collect()
}

/// `log Σ_i exp(Φ_i − s·τ_i)`, with a geometric tail beyond the enumerated
/// horizon when the scheme is incomplete.
pub fn induced_pressure(scheme: &InducingScheme, phi: &InducedPotential, s: f64) -> Result<f64> {
    if phi.values.len() != scheme.branches.len() {
        return Err(Error::Invalid("induced potential does not match the scheme".into()));
    }
    let taus = scheme.taus();
    let mut logs: Vec<f64> = phi
        .values
        .iter()
        .zip(&taus)
        .map(|(v, &t)| v - s * t as f64)
        .collect();
    let head = log_sum_exp(&mut logs)?;
    if scheme.complete_mass >= 1.0 - 1e-12 {
        return Ok(head);
    }
    let by_time = log_weights_by_time(&taus, &phi.values, s)?;
    let last = by_time.len() - 1;
    let first = by_time
        .iter()
        .position(|(t, _)| *t + 10 > by_time[last].0)
        .unwrap_or(0);
    if first == last {
        return Err(Error::DivergentSum { ratio: f64::NAN });
    }
    let (t0, w0) = by_time[first];
    let (t1, w1) = by_time[last];
    let log_ratio = (w1 - w0) / (t1 - t0) as f64;
    let ratio = log_ratio.exp();
    let mut decade: Vec<f64> = by_time[first..].iter().map(|x| x.1).collect();
    let decade_share = (log_sum_exp(&mut decade)? - head).exp();
    if decade_share < TAIL_RELATIVE {
        return Ok(head);
    }
    if !(ratio < TAIL_RATIO) {
        return Err(Error::DivergentSum { ratio });
    }
    // Σ_{k≥1} W(τ_last)·r^k
    let tail = w1 + log_ratio - (-log_ratio.exp_m1()).ln();
    let mut both = [head, tail];
    log_sum_exp(&mut both)
}

/// Abramov projection of the induced Bernoulli measure with `branch_probs`.
pub fn project_measure(
    scheme: &InducingScheme,
    branch_probs: &[f64],
    phi: Option<&InducedPotential>,
) -> Result<MeasureApprox> {
    if branch_probs.len() != scheme.branches.len() {
        return Err(Error::Invalid("one probability per branch is required".into()));
    }
    if branch_probs.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Invalid("branch probabilities must be nonnegative".into()));
    }
    let total = kahan_sum(branch_probs.iter().copied());
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Invalid(format!("branch probabilities sum to {total}")));
    }
    let mean_tau = kahan_sum(
        branch_probs
            .iter()
            .zip(&scheme.branches)
            .map(|(p, b)| p * b.inducing_time as f64),
    );
    let h_f = -kahan_sum(branch_probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()));
    let lam_f = kahan_sum(branch_probs.iter().zip(&scheme.branches).map(|(p, b)| p * b.log_deriv));
    let integral = phi.map(|f| kahan_sum(branch_probs.iter().zip(&f.values).map(|(p, v)| p * v)) / mean_tau);
    Ok(MeasureApprox::projected(
        scheme.map.clone(),
        h_f / mean_tau,
        lam_f / mean_tau,
        integral,
    ))
}

/// Gibbs branch weights `p_i ∝ exp(Φ_i − s·τ_i)`.
pub fn gibbs_branch_weights(scheme: &InducingScheme, phi: &InducedPotential, s: f64) -> Result<Vec<f64>> {
    let logs: Vec<f64> = phi
        .values
        .iter()
        .zip(&scheme.branches)
        .map(|(v, b)| v - s * b.inducing_time as f64)
        .collect();
    let mut tmp = logs.clone();
    let z = log_sum_exp(&mut tmp)?;
    Ok(logs.iter().map(|l| (l - z).exp()).collect())
}

/// Root `s` of `log Σ_{i<N} exp(−t·log|DF_i| − s·τ_i) = 0`.
fn truncated_root(taus: &[usize], log_derivs: &[f64], t: f64) -> Result<f64> {
    let f = |s: f64| -> f64 {
        let mut w: Vec<f64> = log_derivs
            .iter()
            .zip(taus)
            .map(|(a, &tau)| -t * a - s * tau as f64)
            .collect();
        log_sum_exp(&mut w).unwrap_or(f64::NAN)
    };
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut guard = 0;
    while f(lo) < 0.0 {
        lo *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Bracket("truncated induced pressure has no root".into()));
        }
    }
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 120 {
            return Err(Error::Bracket("truncated induced pressure has no root".into()));
        }
    }
    Ok(bisect_root(f, lo, hi, 1e-14))
}

/// `p_N(t)` on `t_grid` from the first `n` branches, and
/// `δ(N) = p(1) − p_N(1)`.
pub fn truncate_and_pressure(
    scheme: &InducingScheme,
    n: usize,
    t_grid: &[f64],
    p_curve: &PressureCurve,
) -> Result<TruncationReport> {
    let trunc = scheme.truncated(n)?;
    let taus = trunc.taus();
    let lds: Vec<f64> = trunc.branches.iter().map(|b| b.log_deriv).collect();
    let p_n_values = t_grid
        .iter()
        .map(|&t| truncated_root(&taus, &lds, t).map_err(|e| e.at("t", t)))
        .collect::<Result<Vec<f64>>>()?;
    let p_values = t_grid
        .iter()
        .map(|&t| p_curve.value_at(t))
        .collect::<Result<Vec<f64>>>()?;
    let delta = p_curve.value_at(1.0)? - truncated_root(&taus, &lds, 1.0)?;
    Ok(TruncationReport {
        n,
        t_grid: t_grid.to_vec(),
        p_n_values,
        p_values,
        delta,
    })
}

/// Cylinder interval of each branch's word, for export and checks.
pub fn branch_cylinders(scheme: &InducingScheme) -> Vec<Interval> {
    scheme
        .branches
        .iter()
        .map(|b| cylinder_interval(&scheme.map, &b.word))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::linspace;
    use crate::pressure::{pressure_curve, Method, PotentialFamily};
    use std::f64::consts::LN_2;

    fn doubling_scheme() -> InducingScheme {
        first_return_scheme(&MapSpec::doubling(), Interval::new(0.5, 1.0), 20, 1000).unwrap()
    }

    #[test]
    fn doubling_first_return() {
        let s = doubling_scheme();
        assert_eq!(s.branches.len(), 20);
        for (i, b) in s.branches.iter().enumerate() {
            let n = i + 1;
            assert_eq!(b.inducing_time, n);
            assert_eq!(b.word[0], 1);
            assert!(b.word[1..].iter().all(|&x| x == 0));
            assert!((b.domain.len() - 0.5f64.powi(n as i32) * 0.5).abs() < 1e-15);
            assert!((b.log_deriv - n as f64 * LN_2).abs() < 1e-12);
        }
        assert!((s.complete_mass - (1.0 - 0.5f64.powi(20))).abs() < 1e-12);
        assert_eq!(s.distortion_bound, 1.0);
        assert!(s.branch_image_error() < 1e-9);
    }

    #[test]
    fn trivial_scheme() {
        let s = first_return_scheme(&MapSpec::doubling(), Interval::new(0.0, 1.0), 1, 100).unwrap();
        assert!(s.branches.iter().all(|b| b.inducing_time == 1));
        assert_eq!(s.branches.len(), 2);
        assert!((s.complete_mass - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_branch_scheme_on_left_branch() {
        let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
        let s = first_return_scheme(&m, Interval::new(0.0, 1.0 / 3.0), 12, 1000).unwrap();
        assert_eq!(s.branches[0].word, vec![0]);
        assert_eq!(s.branches[0].inducing_time, 1);
        assert!(s.complete_mass > 0.99);
        assert!(s.branch_image_error() < 1e-9);
    }

    #[test]
    fn non_cylinder_base_is_rejected() {
        let e = first_return_scheme(&MapSpec::doubling(), Interval::new(0.3, 0.7), 5, 100).unwrap_err();
        assert!(matches!(e, Error::NotMarkovBase { .. }));
    }

    #[test]
    fn chebyshev_scheme_has_finite_distortion() {
        let s = first_return_scheme(&MapSpec::chebyshev(), Interval::new(0.0, 0.5), 8, 1000).unwrap();
        assert!(s.distortion_bound >= 1.0 && s.distortion_bound.is_finite());
        assert!(s.branch_image_error() < 1e-9);
    }

    #[test]
    fn induced_potential_examples() {
        let s = doubling_scheme();
        let g = induce_potential(&s, &Potential::geometric(1.0)).unwrap();
        let c = induce_potential(&s, &Potential::constant(-LN_2, 2)).unwrap();
        let b = induce_potential(&s, &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        for (i, br) in s.branches.iter().enumerate() {
            let n = br.inducing_time as f64;
            assert_eq!(g.values[i], -br.log_deriv);
            assert!((c.values[i] + n * LN_2).abs() < 1e-12);
            assert!((b.values[i] - (0.7f64.ln() + (n - 1.0) * 0.3f64.ln())).abs() < 1e-12);
        }
        assert!(g.variation_bound.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn induced_pressure_examples() {
        let s = doubling_scheme();
        for t in [0.0, 0.5, 2.0] {
            let phi = induce_potential(&s, &Potential::geometric(t)).unwrap();
            assert!(induced_pressure(&s, &phi, (1.0 - t) * LN_2).unwrap().abs() < 1e-8);
        }
        let flat = induce_potential(&s, &Potential::geometric(0.0)).unwrap();
        assert!(matches!(
            induced_pressure(&s, &flat, 0.0),
            Err(Error::DivergentSum { .. })
        ));
        let c = induce_potential(&s, &Potential::constant(-LN_2, 2)).unwrap();
        assert!(induced_pressure(&s, &c, 0.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn projection_examples() {
        let s = doubling_scheme();
        let raw: Vec<f64> = (1..=20).map(|n| 0.5f64.powi(n)).collect();
        let z: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|x| x / z).collect();
        let mu = project_measure(&s, &p, None).unwrap();
        assert!((mu.entropy - LN_2).abs() < 1e-5);
        assert!((mu.lyapunov - LN_2).abs() < 1e-5);
        assert!((mu.dimension() - 1.0).abs() < 1e-5);

        let trivial = first_return_scheme(&MapSpec::doubling(), Interval::new(0.0, 1.0), 1, 1).unwrap();
        let mu = project_measure(&trivial, &[1.0], None).unwrap();
        assert_eq!(mu.entropy, 0.0);
        assert!((mu.lyapunov - trivial.branches[0].log_deriv).abs() < 1e-15);

        let mut one = vec![0.0; 20];
        one[0] = 1.0;
        let mu = project_measure(&s, &one, None).unwrap();
        assert_eq!(mu.entropy, 0.0);
        assert!((mu.lyapunov - LN_2).abs() < 1e-12);
    }

    #[test]
    fn truncation_examples() {
        let s = doubling_scheme();
        let d = MapSpec::doubling();
        let curve = pressure_curve(&d, &PotentialFamily::geometric(2), &linspace(-1.0, 2.0, 7), Method::CylinderMatrix { depth: 1 }).unwrap();
        let r20 = truncate_and_pressure(&s, 20, &[1.0], &curve).unwrap();
        // Σ_{n≤20} 2^{−n}e^{−sn} = 1 puts the root just below zero
        assert!(r20.p_n_values[0].abs() < 1e-6);
        assert!(r20.delta <= 1e-6 && r20.delta >= 0.0);
        let r2 = truncate_and_pressure(&s, 2, &[1.0], &curve).unwrap();
        assert!((r2.p_n_values[0] + 0.211935355500).abs() < 1e-10);
    }

    #[test]
    fn induced_identity_on_linear_families() {
        let cases = [
            (MapSpec::doubling(), Interval::new(0.5, 1.0)),
            (MapSpec::two_branch_linear(1.0 / 3.0).unwrap(), Interval::new(0.0, 1.0 / 3.0)),
            (MapSpec::tent(2.0).unwrap(), Interval::new(0.0, 0.5)),
        ];
        for (map, base) in &cases {
            let s = first_return_scheme(map, *base, 80, 10_000).unwrap();
            for t in linspace(-2.0, 2.0, 9) {
                let p = crate::pressure::pressure_matrix(map, &Potential::geometric(t), 1).unwrap();
                let phi = induce_potential(&s, &Potential::geometric(t)).unwrap();
                let v = induced_pressure(&s, &phi, p).unwrap();
                assert!(v.abs() < 1e-5, "{:?} t={t} v={v}", map.family);
                let w = gibbs_branch_weights(&s, &phi, p).unwrap();
                let mu = project_measure(&s, &w, Some(&phi)).unwrap();
                let e = mu.entropy - t * mu.lyapunov - p;
                assert!(e.abs() < 1e-5, "{:?} t={t} defect={e}", map.family);
            }
        }
    }
}
