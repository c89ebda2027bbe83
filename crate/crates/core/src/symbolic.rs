//! Cylinders, itineraries and periodic points of the full-shift coding.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{chebyshev_log_deriv_from_tent, tent_to_chebyshev, Interval, MapSpec, Potential};

pub const DEFAULT_CYLINDER_BUDGET: u128 = 10_000_000;
pub const DEFAULT_PERIODIC_TOL: f64 = 1e-12;
const INVERSE_ITERATIONS: usize = 200;
const INVERSE_STEP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub word: Vec<u8>,
    pub interval: Interval,
    pub representative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub word: Vec<u8>,
    pub point: f64,
    pub birkhoff_log_deriv: f64,
}

/// Number of words of length `n` over `m` symbols, checked against `budget`.
pub fn word_count(m: usize, n: usize, budget: u128, what: &'static str) -> Result<usize> {
    let mut count: u128 = 1;
    for _ in 0..n {
        count = count.saturating_mul(m as u128);
        if count > budget {
            return Err(Error::Budget {
                what,
                requested: count,
                limit: budget,
            });
        }
    }
    Ok(count as usize)
}

/// The `index`-th word of length `n` in lexicographic order.
pub fn word_from_index(mut index: usize, m: usize, n: usize) -> Vec<u8> {
    let mut w = vec![0u8; n];
    for slot in w.iter_mut().rev() {
        *slot = (index % m) as u8;
        index /= m;
    }
    w
}

pub fn index_of_word(word: &[u8], m: usize) -> usize {
    word.iter().fold(0, |acc, &s| acc * m + s as usize)
}

/// `g_w(y) = g_{w_0}(g_{w_1}(⋯ g_{w_{n−1}}(y)))`, the inverse branch of `f^n` on `[w]`.
pub fn inverse_word(map: &MapSpec, word: &[u8], y: f64) -> f64 {
    word.iter()
        .rev()
        .fold(y, |acc, &s| map.inverse(s as usize, acc))
}

/// Interval of the cylinder `[word]`.
pub fn cylinder_interval(map: &MapSpec, word: &[u8]) -> Interval {
    Interval::new(inverse_word(map, word, 0.0), inverse_word(map, word, 1.0))
}

pub fn enumerate_cylinders(map: &MapSpec, depth: usize) -> Result<Vec<Cylinder>> {
    enumerate_cylinders_with_budget(map, depth, DEFAULT_CYLINDER_BUDGET)
}

/// All `m^k` cylinders of depth `k` in lexicographic word order.
pub fn enumerate_cylinders_with_budget(
    map: &MapSpec,
    depth: usize,
    budget: u128,
) -> Result<Vec<Cylinder>> {
    if depth == 0 {
        return Err(Error::Invalid("cylinder depth must be at least 1".into()));
    }
    let m = map.branch_count();
    word_count(m, depth, budget, "cylinders")?;
    let intervals = cylinder_intervals(map, depth);
    let orbits = locate_periodic_with(map, depth, budget, DEFAULT_PERIODIC_TOL).ok();
    Ok(intervals
        .into_iter()
        .enumerate()
        .map(|(i, interval)| {
            let representative = orbits
                .as_ref()
                .map(|o| o[i].point)
                .unwrap_or_else(|| interval.mid());
            Cylinder {
                word: word_from_index(i, m, depth),
                interval,
                representative,
            }
        })
        .collect())
}

/// Cylinder intervals at `depth`, built by prepending symbols:
/// `[a·w] = g_a([w])`. Lexicographic order is preserved.
pub(crate) fn cylinder_intervals(map: &MapSpec, depth: usize) -> Vec<Interval> {
    let mut level = vec![Interval::UNIT];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * map.branch_count());
        for a in 0..map.branch_count() {
            for iv in &level {
                next.push(Interval::new(map.inverse(a, iv.lo), map.inverse(a, iv.hi)));
            }
        }
        level = next;
    }
    level
}

pub fn locate_periodic(map: &MapSpec, period: usize) -> Result<Vec<PeriodicOrbit>> {
    locate_periodic_with(map, period, DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL)
}

/// One orbit per word of length `period`, in lexicographic word order.
pub fn locate_periodic_with(
    map: &MapSpec,
    period: usize,
    budget: u128,
    periodic_tol: f64,
) -> Result<Vec<PeriodicOrbit>> {
    if period == 0 {
        return Err(Error::Invalid("period must be at least 1".into()));
    }
    let m = map.branch_count();
    let count = word_count(m, period, budget, "periodic orbits")?;
    (0..count)
        .into_par_iter()
        .map(|i| periodic_point_with(map, &word_from_index(i, m, period), periodic_tol))
        .collect()
}

pub fn periodic_point(map: &MapSpec, word: &[u8]) -> Result<PeriodicOrbit> {
    periodic_point_with(map, word, DEFAULT_PERIODIC_TOL)
}

/// Fixed point of the inverse-branch composition `g_w`, with its Birkhoff
/// sum of `log|Df|` over one period.
pub fn periodic_point_with(map: &MapSpec, word: &[u8], periodic_tol: f64) -> Result<PeriodicOrbit> {
    if word.is_empty() {
        return Err(Error::Invalid("periodic word must be nonempty".into()));
    }
    if let Some(&bad) = word.iter().find(|&&s| s as usize >= map.branch_count()) {
        return Err(Error::Invalid(format!(
            "symbol {bad} exceeds branch count {}",
            map.branch_count()
        )));
    }
    if map.uses_tent_conjugacy() {
        return Ok(chebyshev_periodic(word));
    }
    let start = cylinder_interval(map, word).mid();
    let mut x = start;
    let mut converged = false;
    for _ in 0..INVERSE_ITERATIONS {
        let next = inverse_word(map, word, x);
        let step = (next - x).abs();
        x = next;
        if step < INVERSE_STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        x = crate::numeric::bisect_root(|z| inverse_word(map, word, z) - z, 0.0, 1.0, 0.0);
    }
    let residual = (inverse_word(map, word, x) - x).abs();
    if residual > periodic_tol {
        return Err(Error::Convergence {
            word: word.to_vec(),
            residual,
        });
    }
    let pts = orbit_points_from(map, word, x);
    let mut sum = 0.0;
    for (j, &s) in word.iter().enumerate() {
        sum += map.log_abs_deriv_on(s as usize, pts[j])?;
    }
    Ok(PeriodicOrbit {
        word: word.to_vec(),
        point: pts[0],
        birkhoff_log_deriv: sum,
    })
}

/// Tent-coordinate orbit for a word: the slope-2 tent map has affine
/// inverse branches, so the fixed point of `g_w` is exact.
fn tent_orbit(word: &[u8]) -> Vec<f64> {
    let (mut a, mut b) = (1.0_f64, 0.0_f64);
    for &s in word.iter().rev() {
        let (aj, bj) = if s == 0 { (0.5, 0.0) } else { (-0.5, 1.0) };
        a *= aj;
        b = aj * b + bj;
    }
    let y = b / (1.0 - a);
    let n = word.len();
    let mut ys = vec![0.0; n];
    let mut z = y;
    for j in (0..n).rev() {
        z = if word[j] == 0 { 0.5 * z } else { 1.0 - 0.5 * z };
        ys[j] = z;
    }
    ys
}

fn chebyshev_periodic(word: &[u8]) -> PeriodicOrbit {
    let ys = tent_orbit(word);
    PeriodicOrbit {
        word: word.to_vec(),
        point: tent_to_chebyshev(ys[0]),
        birkhoff_log_deriv: ys.iter().map(|&y| chebyshev_log_deriv_from_tent(y)).sum(),
    }
}

/// Points `z_0, …, z_{n−1}` of the orbit, by the contracting backward pass
/// `z_j = g_{w_j}(z_{j+1})` started from `x ≈ z_n = z_0`.
fn orbit_points_from(map: &MapSpec, word: &[u8], x: f64) -> Vec<f64> {
    let n = word.len();
    let mut pts = vec![0.0; n];
    let mut z = x;
    for j in (0..n).rev() {
        z = map.inverse(word[j] as usize, z);
        pts[j] = z;
    }
    pts
}

/// All points on the periodic orbit of `orbit.word`, starting at `orbit.point`.
pub fn orbit_points(map: &MapSpec, orbit: &PeriodicOrbit) -> Vec<f64> {
    if map.uses_tent_conjugacy() {
        return tent_orbit(&orbit.word)
            .into_iter()
            .map(tent_to_chebyshev)
            .collect();
    }
    orbit_points_from(map, &orbit.word, orbit.point)
}

/// `S_n` of the non-geometric part of `phi` along a periodic orbit.
pub fn orbit_rest_sum(map: &MapSpec, phi: &Potential, orbit: &PeriodicOrbit) -> Result<f64> {
    if phi.rest_is_locally_constant() {
        return orbit
            .word
            .iter()
            .map(|&s| phi.rest_at(s as usize, f64::NAN))
            .sum();
    }
    let pts = orbit_points(map, orbit);
    orbit
        .word
        .iter()
        .zip(pts)
        .map(|(&s, x)| phi.rest_at(s as usize, x))
        .sum()
}

/// `S_n φ` at the periodic point of `orbit`.
pub fn birkhoff_sum(map: &MapSpec, phi: &Potential, orbit: &PeriodicOrbit) -> Result<f64> {
    let c = phi.geometric_coefficient();
    let geo = if c == 0.0 {
        0.0
    } else {
        -c * orbit.birkhoff_log_deriv
    };
    Ok(geo + orbit_rest_sum(map, phi, orbit)?)
}

/// Symbol sequence of length `n` of the forward orbit of `x`.
pub fn itinerary(map: &MapSpec, x: f64, n: usize) -> Vec<u8> {
    let mut word = Vec::with_capacity(n);
    let mut z = x.clamp(0.0, 1.0);
    for _ in 0..n {
        let b = map.branch_index(z);
        word.push(b as u8);
        z = map.branches[b].forward(z);
    }
    word
}
