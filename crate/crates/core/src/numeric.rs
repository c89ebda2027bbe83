//! Small numerical kernels shared by the modules: compensated sums,
//! log-sum-exp, golden-section search, bisection, power iteration and
//! least-squares fitting.

use crate::error::{Error, Result};

/// Kahan-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    c: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let y = x - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// `log Σ exp(a_i)`, accumulated over weights sorted descending with
/// compensated summation so the result does not depend on input order.
pub fn log_sum_exp(logs: &mut [f64]) -> Result<f64> {
    if logs.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    if let Some(bad) = logs.iter().find(|v| v.is_nan() || **v == f64::INFINITY) {
        return Err(Error::NonFiniteWeight {
            context: format!("log-weight {bad}"),
        });
    }
    logs.sort_unstable_by(|a, b| b.total_cmp(a));
    let top = logs[0];
    if top == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let s = kahan_sum(logs.iter().map(|v| (v - top).exp()));
    Ok(top + s.ln())
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
///
/// Returns `(x_min, f_min)`.
pub fn golden_section_minimize(
    f: impl Fn(f64) -> f64,
    mut a: f64,
    mut b: f64,
    x_tol: f64,
) -> (f64, f64) {
    const RESP: f64 = 0.381_966_011_250_105_1;
    let mut x1 = a + RESP * (b - a);
    let mut x2 = b - RESP * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evals = 0;
    while (b - a).abs() > x_tol && evals < 400 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + RESP * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = b - RESP * (b - a);
            f2 = f(x2);
        }
        evals += 1;
    }
    let (fa, fb) = (f(a), f(b));
    [(x1, f1), (x2, f2), (a, fa), (b, fb)]
        .into_iter()
        .fold((x1, f1), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Bisection for the boundary of a monotone predicate: `pred(lo)` is false,
/// `pred(hi)` is true; returns the smallest point (to `tol`) where it holds.
pub fn bisect_predicate(
    mut pred: impl FnMut(f64) -> Result<bool>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<f64> {
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Root of a continuous function with a sign change on `[lo, hi]`.
pub fn bisect_root(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A nonnegative sparse matrix in row-major adjacency form, stored as
/// log-weights so very large or very small entries stay representable.
#[derive(Debug, Clone)]
pub struct LogSparseMatrix {
    pub n: usize,
    /// `rows[i]` holds `(j, log M_ij)`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

/// Leading eigenpair of a nonnegative irreducible primitive matrix.
#[derive(Debug, Clone)]
pub struct PerronPair {
    pub log_radius: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

pub const POWER_MAX_ITER: usize = 100_000;

impl LogSparseMatrix {
    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                rows[j].push((i, w));
            }
        }
        Self { n: self.n, rows }
    }

    /// Power iteration with Collatz–Wielandt bounds: stops once
    /// `(max_i (Mx)_i/x_i − min_i (Mx)_i/x_i) / max < rel_tol`.
    pub fn perron(&self, rel_tol: f64) -> Result<PerronPair> {
        let shift = self
            .rows
            .iter()
            .flatten()
            .map(|&(_, w)| w)
            .fold(f64::NEG_INFINITY, f64::max);
        if !shift.is_finite() {
            return Err(Error::NonFiniteWeight {
                context: "transfer matrix has no finite entries".into(),
            });
        }
        let scaled: Vec<Vec<(usize, f64)>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(|&(j, w)| (j, (w - shift).exp())).collect())
            .collect();
        let mut x = vec![1.0 / self.n as f64; self.n];
        let mut y = vec![0.0; self.n];
        let mut gap = f64::INFINITY;
        for it in 1..=POWER_MAX_ITER {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
            for (i, row) in scaled.iter().enumerate() {
                let v = kahan_sum(row.iter().map(|&(j, w)| w * x[j]));
                y[i] = v;
                let r = v / x[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let norm = kahan_sum(y.iter().copied());
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::NonFiniteWeight {
                    context: "power iteration lost positivity".into(),
                });
            }
            gap = (hi - lo) / hi;
            if gap < rel_tol {
                let rho = 0.5 * (hi + lo);
                for v in y.iter_mut() {
                    *v /= norm;
                }
                return Ok(PerronPair {
                    log_radius: rho.ln() + shift,
                    vector: y,
                    iterations: it,
                });
            }
            for (xi, yi) in x.iter_mut().zip(&y) {
                *xi = yi / norm;
            }
        }
        Err(Error::PowerIterationStall {
            iterations: POWER_MAX_ITER,
            gap,
        })
    }
}

/// Ordinary least squares `y = a + b x`; returns `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// Evenly spaced grid with both endpoints.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![start],
        _ => (0..points)
            .map(|i| {
                if i + 1 == points {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (points - 1) as f64
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_is_order_independent() {
        let mut a = vec![-1.0, 3.0, 0.5, -700.0];
        let mut b = vec![0.5, -700.0, 3.0, -1.0];
        assert_eq!(log_sum_exp(&mut a).unwrap(), log_sum_exp(&mut b).unwrap());
    }

    #[test]
    fn log_sum_exp_rejects_nan() {
        let mut a = vec![0.0, f64::NAN];
        assert!(matches!(
            log_sum_exp(&mut a),
            Err(Error::NonFiniteWeight { .. })
        ));
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section_minimize(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perron_of_rank_one_matrix() {
        // M_ij = a_i, spectral radius Σ a_i
        let a = [0.2_f64, 0.5, 1.3];
        let rows = (0..3)
            .map(|i| (0..3).map(|j| (j, a[i].ln())).collect())
            .collect();
        let m = LogSparseMatrix { n: 3, rows };
        let p = m.perron(1e-13).unwrap();
        assert!((p.log_radius - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        let (b, a, r2) = linear_fit(&xs, &ys);
        assert!((b - 2.0).abs() < 1e-14 && (a - 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn linspace_endpoints_exact() {
        let g = linspace(-3.0, 3.0, 61);
        assert_eq!(g.len(), 61);
        assert_eq!(g[0], -3.0);
        assert_eq!(g[60], 3.0);
        assert!((g[20] + 1.0).abs() < 1e-15);
    }
}
