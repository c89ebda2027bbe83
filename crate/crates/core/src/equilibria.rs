//! Finite approximations of Gibbs and equilibrium measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSpec, Potential};
use crate::numeric::{kahan_sum, LogSparseMatrix};
use crate::symbolic::{
    birkhoff_sum, cylinder_intervals, locate_periodic_with, periodic_point, word_count,
    word_from_index, DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL,
};

/// Extra depth used for midpoint quadrature beyond the measure's own depth.
const QUADRATURE_EXTRA_DEPTH: usize = 4;
const QUADRATURE_MAX_CELLS: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    BernoulliFromLocallyConstant,
    MarkovFromMatrix,
    PeriodicOrbitEquidistribution,
    InducedProjection,
}

#[derive(Debug, Clone)]
enum Model {
    Bernoulli(Vec<f64>),
    /// Depth-`k` Markov chain on `k`-words.
    Markov {
        k: usize,
        stationary: Vec<f64>,
        /// `P(u → u[1..]·s)` indexed by `u·m + s`.
        transition: Vec<f64>,
    },
    Periodic { word: Vec<u8> },
    /// Only the Abramov statistics are known.
    Projected,
}

#[derive(Debug, Clone)]
pub struct MeasureApprox {
    pub depth: usize,
    pub construction: Construction,
    pub entropy: f64,
    pub lyapunov: f64,
    pub potential_integral: Option<f64>,
    map: MapSpec,
    model: Model,
}

impl MeasureApprox {
    pub fn dimension(&self) -> f64 {
        self.entropy / self.lyapunov
    }

    pub fn map(&self) -> &MapSpec {
        &self.map
    }

    pub(crate) fn projected(
        map: MapSpec,
        entropy: f64,
        lyapunov: f64,
        potential_integral: Option<f64>,
    ) -> Self {
        Self {
            depth: 0,
            construction: Construction::InducedProjection,
            entropy,
            lyapunov,
            potential_integral,
            map,
            model: Model::Projected,
        }
    }

    /// Whether cylinder masses are available at every depth.
    pub fn has_cylinder_masses(&self) -> bool {
        !matches!(self.model, Model::Projected)
    }

    /// `μ([word])`.
    pub fn cylinder_mass(&self, word: &[u8]) -> Result<f64> {
        let m = self.map.branch_count();
        match &self.model {
            Model::Bernoulli(p) => Ok(word.iter().map(|&s| p[s as usize]).product()),
            Model::Markov {
                k,
                stationary,
                transition,
            } => {
                let k = *k;
                if word.len() < k {
                    let free = k - word.len();
                    let prefix = word.iter().fold(0usize, |a, &s| a * m + s as usize);
                    let span = m.pow(free as u32);
                    return Ok(kahan_sum(
                        stationary[prefix * span..(prefix + 1) * span].iter().copied(),
                    ));
                }
                let states = stationary.len();
                let mut u = word[..k].iter().fold(0usize, |a, &s| a * m + s as usize);
                let mut mass = stationary[u];
                for &s in &word[k..] {
                    mass *= transition[u * m + s as usize];
                    u = (u * m + s as usize) % states;
                }
                Ok(mass)
            }
            Model::Periodic { word: cycle } => {
                let n = cycle.len();
                let hits = (0..n)
                    .filter(|&j| word.iter().enumerate().all(|(i, &s)| cycle[(j + i) % n] == s))
                    .count();
                Ok(hits as f64 / n as f64)
            }
            Model::Projected => Err(Error::NotApplicable(
                "projected measures carry statistics only, not cylinder masses".into(),
            )),
        }
    }

    /// All cylinder weights at `depth`, in lexicographic word order.
    pub fn cylinder_weights(&self, depth: usize) -> Result<Vec<(Vec<u8>, f64)>> {
        let m = self.map.branch_count();
        let count = word_count(m, depth, DEFAULT_CYLINDER_BUDGET, "cylinders")?;
        (0..count)
            .map(|i| {
                let w = word_from_index(i, m, depth);
                let mass = self.cylinder_mass(&w)?;
                Ok((w, mass))
            })
            .collect()
    }

    /// `∫ φ dμ`.
    pub fn integrate(&self, phi: &Potential) -> Result<f64> {
        match &self.model {
            Model::Periodic { word } => {
                let orbit = periodic_point(&self.map, word)?;
                Ok(birkhoff_sum(&self.map, phi, &orbit)? / word.len() as f64)
            }
            Model::Projected => self.potential_integral.ok_or_else(|| {
                Error::NotApplicable("projected measure has no stored potential integral".into())
            }),
            _ => {
                if phi.geometric_coefficient() == 0.0 && phi.rest_is_locally_constant() {
                    let p = self.cylinder_weights(1)?;
                    return p
                        .iter()
                        .map(|(w, mass)| Ok(mass * phi.rest_at(w[0] as usize, f64::NAN)?))
                        .sum();
                }
                self.quadrature(|branch, x| phi.value_on(&self.map, branch, x, None))
            }
        }
    }

    /// Midpoint quadrature over cylinders at depth `depth + 4`.
    fn quadrature(&self, f: impl Fn(usize, f64) -> Result<f64> + Sync) -> Result<f64> {
        let m = self.map.branch_count();
        let mut d = self.depth.max(1) + QUADRATURE_EXTRA_DEPTH;
        while m.pow(d as u32) > QUADRATURE_MAX_CELLS && d > 1 {
            d -= 1;
        }
        let intervals = cylinder_intervals(&self.map, d);
        let terms = intervals
            .par_iter()
            .enumerate()
            .map(|(i, iv)| {
                let w = word_from_index(i, m, d);
                let mass = self.cylinder_mass(&w)?;
                if mass == 0.0 {
                    return Ok(0.0);
                }
                Ok(mass * f(w[0] as usize, iv.mid())?)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(kahan_sum(terms))
    }

    fn lyapunov_by_quadrature(&self) -> Result<f64> {
        self.quadrature(|branch, x| self.map.log_abs_deriv_on(branch, x))
    }
}

/// Per-branch values of a potential that is locally constant on this map.
fn branch_values(map: &MapSpec, phi: &Potential) -> Result<Vec<f64>> {
    phi.validate(map)?;
    let c = phi.geometric_coefficient();
    if !phi.rest_is_locally_constant() {
        return Err(Error::Invalid("potential is not locally constant".into()));
    }
    let slopes = if c != 0.0 {
        Some(map.affine_slopes().ok_or_else(|| {
            Error::Invalid("geometric part is locally constant only on piecewise-linear maps".into())
        })?)
    } else {
        None
    };
    (0..map.branch_count())
        .map(|i| {
            let geo = slopes.as_ref().map_or(0.0, |s| -c * s[i].abs().ln());
            Ok(geo + phi.rest_at(i, f64::NAN)?)
        })
        .collect()
}

/// The exact Bernoulli Gibbs measure `p_i = e^{φ_i} / Σ_j e^{φ_j}`.
pub fn bernoulli_measure(map: &MapSpec, phi: &Potential) -> Result<MeasureApprox> {
    let values = branch_values(map, phi)?;
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z = kahan_sum(values.iter().map(|v| (v - top).exp()));
    let p: Vec<f64> = values.iter().map(|v| (v - top).exp() / z).collect();
    let entropy = -kahan_sum(p.iter().filter(|&&x| x > 0.0).map(|x| x * x.ln()));
    let integral = kahan_sum(p.iter().zip(&values).map(|(a, b)| a * b));
    let mut mu = MeasureApprox {
        depth: 1,
        construction: Construction::BernoulliFromLocallyConstant,
        entropy,
        lyapunov: 0.0,
        potential_integral: Some(integral),
        map: map.clone(),
        model: Model::Bernoulli(p.clone()),
    };
    mu.lyapunov = match map.affine_slopes() {
        Some(s) => kahan_sum(p.iter().zip(&s).map(|(a, b)| a * b.abs().ln())),
        None => {
            mu.depth = 8;
            let l = mu.lyapunov_by_quadrature()?;
            mu.depth = 1;
            l
        }
    };
    Ok(mu)
}

/// Depth-`k` Markov measure from the leading eigenvectors of the cylinder
/// transfer matrix used by `pressure_matrix`.
pub fn markov_measure_from_matrix(map: &MapSpec, phi: &Potential, depth: usize) -> Result<MeasureApprox> {
    if depth == 0 {
        return Err(Error::Invalid("matrix depth must be at least 1".into()));
    }
    phi.validate(map)?;
    let m = map.branch_count();
    let states = word_count(m, depth, DEFAULT_CYLINDER_BUDGET, "matrix states")?;
    let reps = locate_periodic_with(map, depth + 1, DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL)?;
    let logw = reps
        .par_iter()
        .map(|o| phi.value_on(map, o.word[0] as usize, o.point, None))
        .collect::<Result<Vec<f64>>>()?;
    let mut rows = vec![Vec::with_capacity(m); states];
    for (idx, &w) in logw.iter().enumerate() {
        rows[idx / m].push((idx % states, w));
    }
    let mat = LogSparseMatrix { n: states, rows };
    let right = mat.perron(1e-13)?;
    let left = mat.transpose().perron(1e-13)?;
    let log_rho = right.log_radius;
    let r = &right.vector;
    let l = &left.vector;
    let mut transition = vec![0.0; states * m];
    for u in 0..states {
        for s in 0..m {
            let v = (u * m + s) % states;
            transition[u * m + s] = (logw[u * m + s] - log_rho).exp() * r[v] / r[u];
        }
        // renormalize rows against eigenvector round-off
        let row = &mut transition[u * m..(u + 1) * m];
        let tot = kahan_sum(row.iter().copied());
        row.iter_mut().for_each(|x| *x /= tot);
    }
    let raw: Vec<f64> = l.iter().zip(r).map(|(a, b)| a * b).collect();
    let tot = kahan_sum(raw.iter().copied());
    let stationary: Vec<f64> = raw.iter().map(|x| x / tot).collect();
    let entropy = -kahan_sum((0..states).flat_map(|u| {
        let pi = stationary[u];
        transition[u * m..(u + 1) * m]
            .iter()
            .filter(|&&p| p > 0.0)
            .map(move |&p| pi * p * p.ln())
            .collect::<Vec<_>>()
    }));
    let mut mu = MeasureApprox {
        depth,
        construction: Construction::MarkovFromMatrix,
        entropy,
        lyapunov: 0.0,
        potential_integral: None,
        map: map.clone(),
        model: Model::Markov {
            k: depth,
            stationary,
            transition,
        },
    };
    mu.lyapunov = mu.lyapunov_by_quadrature()?;
    mu.potential_integral = Some(mu.integrate(phi)?);
    Ok(mu)
}

/// Equidistribution on the periodic orbit of `word`.
pub fn periodic_orbit_measure(map: &MapSpec, word: &[u8]) -> Result<MeasureApprox> {
    let orbit = periodic_point(map, word)?;
    Ok(MeasureApprox {
        depth: word.len(),
        construction: Construction::PeriodicOrbitEquidistribution,
        entropy: 0.0,
        lyapunov: orbit.birkhoff_log_deriv / word.len() as f64,
        potential_integral: None,
        map: map.clone(),
        model: Model::Periodic {
            word: word.to_vec(),
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheckReport {
    pub depth_checked: usize,
    pub best_constant: f64,
    pub worst_cylinder: Vec<u8>,
    pub p_used: f64,
}

/// Smallest `C` with `1/C ≤ μ[w] / exp(−nP + S_n φ) ≤ C` over all cylinders
/// of depth `1..=k_max`, with `S_n φ` at the periodic representative.
pub fn check_gibbs(measure: &MeasureApprox, phi: &Potential, p: f64, k_max: usize) -> Result<GibbsCheckReport> {
    if k_max == 0 {
        return Err(Error::Invalid("Gibbs check depth must be at least 1".into()));
    }
    let map = &measure.map;
    let mut best = 1.0_f64;
    let mut worst = Vec::new();
    for n in 1..=k_max {
        let orbits = locate_periodic_with(map, n, DEFAULT_CYLINDER_BUDGET, DEFAULT_PERIODIC_TOL)?;
        for o in &orbits {
            let mass = measure.cylinder_mass(&o.word)?;
            let log_ratio = mass.ln() - (-(n as f64) * p + birkhoff_sum(map, phi, o)?);
            let c = log_ratio.abs().exp();
            if c > best || worst.is_empty() {
                if c > best {
                    best = c;
                }
                worst = o.word.clone();
            }
        }
    }
    Ok(GibbsCheckReport {
        depth_checked: k_max,
        best_constant: best,
        worst_cylinder: worst,
        p_used: p,
    })
}

/// Free-energy defect `P − (h(μ) + ∫φ dμ)`.
pub fn equilibrium_check(measure: &MeasureApprox, phi: &Potential, p: f64) -> Result<f64> {
    Ok(p - (measure.entropy + measure.integrate(phi)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pressure::{pressure_matrix, pressure_periodic};
    use std::f64::consts::LN_2;

    fn two_branch() -> MapSpec {
        MapSpec::two_branch_linear(1.0 / 3.0).unwrap()
    }

    #[test]
    fn bernoulli_examples() {
        let d = MapSpec::doubling();
        let mu = bernoulli_measure(&d, &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        let w = mu.cylinder_weights(1).unwrap();
        assert!((w[0].1 - 0.3).abs() < 1e-15 && (w[1].1 - 0.7).abs() < 1e-15);
        assert!((mu.entropy - 0.610864302055).abs() < 1e-11);
        assert!((mu.lyapunov - LN_2).abs() < 1e-15);
        assert!((mu.dimension() - 0.881290899231).abs() < 1e-11);

        let flat = bernoulli_measure(&d, &Potential::constant(0.0, 2)).unwrap();
        assert!((flat.entropy - LN_2).abs() < 1e-15);
        assert!((flat.dimension() - 1.0).abs() < 1e-15);

        let m = two_branch();
        let leb = bernoulli_measure(&m, &Potential::geometric(1.0)).unwrap();
        let w = leb.cylinder_weights(1).unwrap();
        assert!((w[0].1 - 1.0 / 3.0).abs() < 1e-15);
        assert!((leb.lyapunov - 0.636514168294813).abs() < 1e-12);
        assert!((leb.dimension() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_rejects_geometric_on_nonlinear_maps() {
        assert!(bernoulli_measure(&MapSpec::chebyshev(), &Potential::geometric(1.0)).is_err());
    }

    #[test]
    fn markov_examples() {
        let d = MapSpec::doubling();
        let mu = markov_measure_from_matrix(&d, &Potential::geometric(1.0), 1).unwrap();
        for (_, w) in mu.cylinder_weights(1).unwrap() {
            assert!((w - 0.5).abs() < 1e-12);
        }
        assert!((mu.entropy - LN_2).abs() < 1e-12);

        let mme = markov_measure_from_matrix(&two_branch(), &Potential::geometric(0.0), 1).unwrap();
        for (_, w) in mme.cylinder_weights(1).unwrap() {
            assert!((w - 0.5).abs() < 1e-12);
        }
        assert!((mme.lyapunov - 0.752038698388).abs() < 1e-11);

        let ch = markov_measure_from_matrix(&MapSpec::chebyshev(), &Potential::geometric(1.0), 8).unwrap();
        assert!((0.68..=0.71).contains(&ch.lyapunov), "{}", ch.lyapunov);
    }

    #[test]
    fn markov_marginals_are_shift_invariant() {
        let mu = markov_measure_from_matrix(&MapSpec::chebyshev(), &Potential::geometric(0.6), 4).unwrap();
        let w5 = mu.cylinder_weights(5).unwrap();
        let total: f64 = w5.iter().map(|x| x.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let mut drop_first = [0.0; 16];
        let mut drop_last = [0.0; 16];
        for (i, (_, w)) in w5.iter().enumerate() {
            drop_first[i % 16] += w;
            drop_last[i / 2] += w;
        }
        for (a, b) in drop_first.iter().zip(&drop_last) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn gibbs_examples() {
        let d = MapSpec::doubling();
        let phi = Potential::bernoulli(&[0.3, 0.7]);
        let mu = bernoulli_measure(&d, &phi).unwrap();
        assert!(check_gibbs(&mu, &phi, 0.0, 8).unwrap().best_constant <= 1.0 + 1e-9);

        let uni = bernoulli_measure(&d, &Potential::constant(0.0, 2)).unwrap();
        let g = check_gibbs(&uni, &Potential::geometric(1.0), 0.0, 8).unwrap();
        assert!(g.best_constant <= 1.0 + 1e-9);

        let wrong = Potential::bernoulli(&[0.5, 0.5]);
        let bad = check_gibbs(&mu, &wrong, 0.0, 6).unwrap();
        assert!(bad.best_constant >= (0.7_f64 / 0.5).powi(6));
    }

    #[test]
    fn gibbs_constant_is_depth_independent_for_locally_constant() {
        let d = MapSpec::tent(2.0).unwrap();
        let phi = Potential::bernoulli(&[0.25, 0.75]);
        let mu = bernoulli_measure(&d, &Potential::bernoulli(&[0.4, 0.6])).unwrap();
        let p = pressure_matrix(&d, &phi, 1).unwrap();
        let c: Vec<f64> = (1..=8)
            .map(|k| check_gibbs(&mu, &phi, p, k).unwrap().best_constant)
            .collect();
        let own = bernoulli_measure(&d, &phi).unwrap();
        for k in 1..=8 {
            let ck = check_gibbs(&own, &phi, p, k).unwrap().best_constant;
            assert!((ck - 1.0).abs() < 1e-9);
        }
        assert!(c.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn equilibrium_examples() {
        let d = MapSpec::doubling();
        let g = Potential::geometric(1.0);
        let uni = bernoulli_measure(&d, &Potential::constant(0.0, 2)).unwrap();
        assert!(equilibrium_check(&uni, &g, 0.0).unwrap().abs() < 1e-12);
        let b = bernoulli_measure(&d, &Potential::bernoulli(&[0.3, 0.7])).unwrap();
        assert!((equilibrium_check(&b, &g, 0.0).unwrap() - 0.082282878505).abs() < 1e-11);
        let fixed = periodic_orbit_measure(&d, &[0]).unwrap();
        assert!((equilibrium_check(&fixed, &g, 0.0).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn variational_inequality() {
        let m = two_branch();
        let measures = [
            bernoulli_measure(&m, &Potential::bernoulli(&[0.2, 0.8])).unwrap(),
            markov_measure_from_matrix(&m, &Potential::geometric(0.3), 2).unwrap(),
            periodic_orbit_measure(&m, &[0, 1, 1]).unwrap(),
        ];
        for t in [-1.0, 0.0, 1.0, 2.5] {
            let phi = Potential::geometric(t);
            let p = pressure_periodic(&m, &phi, 12, 0).unwrap();
            for mu in &measures {
                let fe = mu.entropy + mu.integrate(&phi).unwrap();
                assert!(fe <= p + 1e-6);
            }
        }
    }

    #[test]
    fn periodic_measure_masses() {
        let mu = periodic_orbit_measure(&MapSpec::doubling(), &[0, 1, 1]).unwrap();
        assert!((mu.cylinder_mass(&[1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((mu.cylinder_mass(&[1, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mu.cylinder_mass(&[0, 0]).unwrap(), 0.0);
    }
}
