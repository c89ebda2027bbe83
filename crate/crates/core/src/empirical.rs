//! Orbit-based estimators: finite-time Lyapunov exponents, dynamical box
//! counting on level sets, and ball-mass pointwise dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibria::MeasureApprox;
use crate::error::{Error, Result};
use crate::maps::{Interval, MapSpec};
use crate::numeric::{kahan_sum, linear_fit, log_sum_exp};
use crate::symbolic::cylinder_interval;

pub const MIN_STARTS: usize = 100;
pub const MIN_BIN_POINTS: usize = 20;
pub const UNRELIABLE_R2: f64 = 0.95;
pub const DEFAULT_SEED: u64 = 0x7e57_0b17;
const SCALE_EXPONENTS: std::ops::RangeInclusive<i32> = 8..=16;
const MAX_DIM: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub x0: f64,
    pub length: usize,
    /// `S_k = Σ_{i<k} log|Df(f^i x0)|` for `k = 1..=length`.
    pub birkhoff_log_deriv_prefixes: Vec<f64>,
    pub seed: u64,
}

impl OrbitSample {
    pub fn new(map: &MapSpec, x0: f64, n: usize, seed: u64) -> Result<Self> {
        let mut prefixes = Vec::with_capacity(n);
        let mut x = x0;
        let mut acc = crate::numeric::KahanSum::new();
        for _ in 0..n {
            acc.add(map.log_abs_deriv(x)?);
            prefixes.push(acc.value());
            x = map.eval(x)?;
        }
        Ok(Self {
            x0,
            length: n,
            birkhoff_log_deriv_prefixes: prefixes,
            seed,
        })
    }

    pub fn exponent_at(&self, k: usize) -> f64 {
        self.birkhoff_log_deriv_prefixes[k - 1] / k as f64
    }

    /// Recomputes a few prefixes from scratch and returns the largest
    /// relative mismatch.
    pub fn prefix_check(&self, map: &MapSpec) -> Result<f64> {
        let step = (self.length / 100).max(1);
        let mut worst: f64 = 0.0;
        let mut x = self.x0;
        let mut terms = Vec::with_capacity(self.length);
        for _ in 0..self.length {
            terms.push(map.log_abs_deriv(x)?);
            x = map.eval(x)?;
        }
        for k in (step..=self.length).step_by(step) {
            let direct = kahan_sum(terms[..k].iter().copied());
            let stored = self.birkhoff_log_deriv_prefixes[k - 1];
            worst = worst.max((direct - stored).abs() / direct.abs().max(1.0));
        }
        Ok(worst)
    }
}

/// `(1/n)·log|Df^n(x0)|`.
pub fn finite_time_lyapunov(map: &MapSpec, x0: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("orbit length must be positive".into()));
    }
    let mut x = x0;
    let mut acc = crate::numeric::KahanSum::new();
    for _ in 0..n {
        acc.add(map.log_abs_deriv(x)?);
        x = map.eval(x)?;
    }
    Ok(acc.value() / n as f64)
}

/// Uniform grid `(i + u_i)/M` with seeded jitter `u_i ∈ [0.05, 0.95)`.
pub fn start_points(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| (i as f64 + rng.random_range(0.05..0.95)) / count as f64)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BinSpec {
    /// `count` adjacent bins centred on the median exponent, narrowed
    /// until each holds enough points.
    Auto { count: usize },
    Explicit { centers: Vec<f64>, width: f64 },
}

impl Default for BinSpec {
    fn default() -> Self {
        BinSpec::Auto { count: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetEstimate {
    pub bin_centers: Vec<f64>,
    pub bin_width: f64,
    /// Orbit times at which the bins are counted.
    pub times: Vec<usize>,
    /// Starts whose exponent at each time falls in the bin; `[bin][scale]`.
    pub counts: Vec<Vec<usize>>,
    /// Points in each bin at the final time.
    pub final_counts: Vec<usize>,
    pub dim_estimates: Vec<f64>,
    pub fit_r2: Vec<f64>,
    pub scales_used: Vec<usize>,
    pub unreliable: Vec<bool>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let (i, f) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

fn in_bin(x: f64, c: f64, w: f64) -> bool {
    if w == 0.0 {
        x == c
    } else {
        x >= c - 0.5 * w && x < c + 0.5 * w
    }
}

fn auto_bins(finals: &[f64], count: usize) -> Result<(Vec<f64>, f64)> {
    let mut sorted = finals.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = quantile(&sorted, 0.5);
    let spread = quantile(&sorted, 0.95) - quantile(&sorted, 0.05);
    if spread <= 1e-12 * median.abs().max(1.0) && sorted[0] == sorted[sorted.len() - 1] {
        return Ok((vec![median], 0.0));
    }
    let mut w = spread / count as f64;
    let half = (count as f64 - 1.0) / 2.0;
    for _ in 0..200 {
        let centers: Vec<f64> = (0..count).map(|i| median + (i as f64 - half) * w).collect();
        let ok = centers
            .iter()
            .all(|&c| finals.iter().filter(|&&x| in_bin(x, c, w)).count() >= MIN_BIN_POINTS);
        if ok {
            return Ok((centers, w));
        }
        w *= 0.9;
    }
    Err(Error::InsufficientData(format!(
        "could not place {count} bins with at least {MIN_BIN_POINTS} points each"
    )))
}

/// Level-set dimension estimates. Each bin is counted at orbit times
/// `m_j = ⌈n·2^{j−16}⌉`, `j = 8..16`: the starts whose exponent at time
/// `m` lies in the bin stand for Lebesgue mass `1/M` each, spread over
/// cylinders of length `e^{−S_m}`, so `N_m = Σ e^{S_m}/M` counts covering
/// cylinders of scale about `e^{−mλ}`. The dimension is the slope of
/// `log N_m` against `m·λ`.
pub fn empirical_lyapunov_spectrum(map: &MapSpec, starts: usize, n: usize, bins: &BinSpec) -> Result<LevelSetEstimate> {
    empirical_lyapunov_spectrum_seeded(map, starts, n, bins, DEFAULT_SEED)
}

pub fn empirical_lyapunov_spectrum_seeded(
    map: &MapSpec,
    starts: usize,
    n: usize,
    bins: &BinSpec,
    seed: u64,
) -> Result<LevelSetEstimate> {
    if starts < MIN_STARTS {
        return Err(Error::InsufficientData(format!(
            "{starts} starts requested, at least {MIN_STARTS} needed"
        )));
    }
    let mut times: Vec<usize> = SCALE_EXPONENTS
        .map(|j| ((n as f64) * 2f64.powi(j - 16)).ceil().max(1.0) as usize)
        .collect();
    times.dedup();
    if times.len() < 4 {
        return Err(Error::InsufficientData(format!("orbit length {n} gives fewer than 4 scales")));
    }
    let xs = start_points(starts, seed);
    let orbits = xs
        .par_iter()
        .map(|&x| OrbitSample::new(map, x, n, seed))
        .collect::<Result<Vec<_>>>()?;
    let finals: Vec<f64> = orbits.iter().map(|o| o.exponent_at(n)).collect();
    let (centers, width) = match bins {
        BinSpec::Auto { count } => auto_bins(&finals, (*count).max(1))?,
        BinSpec::Explicit { centers, width } => {
            if !(*width > 0.0) || centers.is_empty() {
                return Err(Error::Invalid("explicit bins need centers and a positive width".into()));
            }
            (centers.clone(), *width)
        }
    };
    let final_counts: Vec<usize> = centers
        .iter()
        .map(|&c| finals.iter().filter(|&&x| in_bin(x, c, width)).count())
        .collect();
    if let Some((c, k)) = centers.iter().zip(&final_counts).find(|(_, &k)| k < MIN_BIN_POINTS) {
        return Err(Error::InsufficientData(format!(
            "bin at {c} holds {k} points, at least {MIN_BIN_POINTS} needed"
        )));
    }
    let log_m = (starts as f64).ln();
    let mut counts = Vec::with_capacity(centers.len());
    let mut dims = Vec::with_capacity(centers.len());
    let mut r2s = Vec::with_capacity(centers.len());
    let mut used = Vec::with_capacity(centers.len());
    for &c in &centers {
        let mut row = Vec::with_capacity(times.len());
        let (mut xs_fit, mut ys_fit) = (Vec::new(), Vec::new());
        for &m in &times {
            let mut logs: Vec<f64> = orbits
                .iter()
                .filter(|o| in_bin(o.exponent_at(m), c, width))
                .map(|o| o.birkhoff_log_deriv_prefixes[m - 1])
                .collect();
            row.push(logs.len());
            if !logs.is_empty() {
                xs_fit.push(m as f64 * c);
                ys_fit.push(log_sum_exp(&mut logs)? - log_m);
            }
        }
        counts.push(row);
        used.push(xs_fit.len());
        if xs_fit.len() < 4 {
            dims.push(f64::NAN);
            r2s.push(0.0);
            continue;
        }
        let (slope, _, r2) = linear_fit(&xs_fit, &ys_fit);
        dims.push(slope.clamp(0.0, MAX_DIM));
        r2s.push(r2);
    }
    let unreliable = r2s
        .iter()
        .zip(&used)
        .map(|(&r2, &u)| u < 4 || r2 < UNRELIABLE_R2)
        .collect();
    Ok(LevelSetEstimate {
        bin_centers: centers,
        bin_width: width,
        times,
        counts,
        final_counts,
        dim_estimates: dims,
        fit_r2: r2s,
        scales_used: used,
        unreliable,
    })
}

pub const DEFAULT_MAX_DEPTH: usize = 60;

/// `μ((x−r, x+r))` by descending through cylinders that straddle the ball
/// boundary; cylinders still straddling at `max_depth` are prorated by
/// overlap length.
pub fn ball_mass(measure: &MeasureApprox, x: f64, r: f64, max_depth: usize) -> Result<f64> {
    let ball = Interval::new((x - r).max(0.0), (x + r).min(1.0));
    let map = measure.map();
    let m = map.branch_count();
    let mut total = crate::numeric::KahanSum::new();
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    let mut depth = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for w in frontier {
            for s in 0..m as u8 {
                let mut child = w.clone();
                child.push(s);
                let iv = cylinder_interval(map, &child);
                let ov = iv.overlap(&ball);
                if ov <= 0.0 {
                    continue;
                }
                if ball.contains_interval(&iv, 0.0) {
                    total.add(measure.cylinder_mass(&child)?);
                } else if depth + 1 < max_depth {
                    next.push(child);
                } else {
                    if iv.len() > r {
                        return Err(Error::Depth { radius: r, depth: max_depth });
                    }
                    total.add(measure.cylinder_mass(&child)? * ov / iv.len());
                }
            }
        }
        frontier = next;
        depth += 1;
    }
    Ok(total.value())
}

/// Least-squares slope of `log μ(B(x,r))` against `log r`.
pub fn pointwise_dimension_estimate(measure: &MeasureApprox, x: f64, r_grid: &[f64]) -> Result<f64> {
    pointwise_dimension_estimate_with_depth(measure, x, r_grid, DEFAULT_MAX_DEPTH)
}

pub fn pointwise_dimension_estimate_with_depth(
    measure: &MeasureApprox,
    x: f64,
    r_grid: &[f64],
    max_depth: usize,
) -> Result<f64> {
    if !measure.has_cylinder_masses() {
        return Err(Error::NotApplicable("measure has no cylinder masses".into()));
    }
    if r_grid.len() < 2 || r_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::Invalid("radius grid needs at least two positive values".into()));
    }
    let (mut lr, mut lm) = (Vec::new(), Vec::new());
    for &r in r_grid {
        let mass = ball_mass(measure, x, r, max_depth)?;
        if !(mass > 0.0) {
            return Err(Error::NonFiniteWeight {
                context: format!("ball of radius {r} around {x} has mass {mass}"),
            });
        }
        lr.push(r.ln());
        lm.push(mass.ln());
    }
    Ok(linear_fit(&lr, &lm).0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::bernoulli_measure;
    use crate::maps::Potential;
    use std::f64::consts::LN_2;

    #[test]
    fn doubling_exponent_is_exact() {
        let d = MapSpec::doubling();
        for x0 in [0.1, 0.377, 0.9] {
            assert_eq!(finite_time_lyapunov(&d, x0, 1000).unwrap(), LN_2);
        }
    }

    #[test]
    fn chebyshev_exponent() {
        let v = finite_time_lyapunov(&MapSpec::chebyshev(), 0.123456, 100_000).unwrap();
        assert!((v - LN_2).abs() < 0.02, "{v}");
    }

    #[test]
    fn two_branch_exponent() {
        let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = finite_time_lyapunov(&m, rng.random::<f64>(), 100_000).unwrap();
        assert!((v - 0.6365).abs() < 0.01, "{v}");
    }

    #[test]
    fn prefixes_are_consistent() {
        let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
        let o = OrbitSample::new(&m, 0.2718, 5000, 0).unwrap();
        assert!(o.prefix_check(&m).unwrap() < 1e-12);
    }

    #[test]
    fn doubling_single_bin() {
        let e = empirical_lyapunov_spectrum(&MapSpec::doubling(), 200, 4096, &BinSpec::default()).unwrap();
        assert_eq!(e.bin_centers, vec![LN_2]);
        assert!((e.dim_estimates[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_starts() {
        let e = empirical_lyapunov_spectrum(&MapSpec::doubling(), 10, 1000, &BinSpec::default());
        assert!(matches!(e, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn sparse_explicit_bin_is_rejected() {
        let m = MapSpec::two_branch_linear(1.0 / 3.0).unwrap();
        let bins = BinSpec::Explicit {
            centers: vec![1.0],
            width: 0.01,
        };
        assert!(matches!(
            empirical_lyapunov_spectrum(&m, 100, 2000, &bins),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn lebesgue_ball_dimension() {
        let mu = bernoulli_measure(&MapSpec::doubling(), &Potential::bernoulli(&[0.5, 0.5])).unwrap();
        let r: Vec<f64> = (4..=12).map(|k| 2f64.powi(-k)).collect();
        for x in [0.3, 0.61803] {
            let d = pointwise_dimension_estimate(&mu, x, &r).unwrap();
            assert!((d - 1.0).abs() < 1e-3, "{d}");
        }
    }

    #[test]
    fn bernoulli_dimension_at_zero() {
        let mu = bernoulli_measure(&MapSpec::doubling(), &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        let r: Vec<f64> = (4..=20).map(|k| 2f64.powi(-k)).collect();
        let d = pointwise_dimension_estimate(&mu, 0.0, &r).unwrap();
        assert!((d - 1.736965594166).abs() < 0.01, "{d}");
    }

    #[test]
    fn bernoulli_dimension_at_typical_point() {
        // binary digits from the Thue–Morse word, balanced in every block of 2
        let digits: Vec<u8> = (0u32..48).map(|i| (i.count_ones() % 2) as u8).collect();
        let x = digits
            .iter()
            .enumerate()
            .fold(0.0, |a, (i, &b)| a + b as f64 * 2f64.powi(-(i as i32) - 1));
        let mu = bernoulli_measure(&MapSpec::doubling(), &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        let r: Vec<f64> = (8..=40).map(|k| 2f64.powi(-k)).collect();
        let d = pointwise_dimension_estimate(&mu, x, &r).unwrap();
        assert!((d - 1.125769383498).abs() < 0.02, "{d}");
    }

    #[test]
    fn depth_limit_is_reported() {
        let mu = bernoulli_measure(&MapSpec::doubling(), &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        let e = pointwise_dimension_estimate_with_depth(&mu, 0.3, &[2f64.powi(-4), 2f64.powi(-20)], 8);
        assert!(matches!(e, Err(Error::Depth { .. })));
    }
}
