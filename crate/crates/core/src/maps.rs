//! Full-branch interval maps, their derivatives, and potentials.
//!
//! Every map here is a finite collection of monotone branches, each sending
//! its domain onto `[0, 1]`. That makes the symbolic coding a full shift on
//! the branch alphabet. All logarithms are natural.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DERIV_FLOOR: f64 = 1e-300;

/// Closed subinterval of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval, tol: f64) -> bool {
        other.lo >= self.lo - tol && other.hi <= self.hi + tol
    }

    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// Evaluation rule for one monotone branch.
#[derive(Clone)]
pub enum BranchRule {
    /// `f(x) = slope·(x − lo)` when increasing, `1 + slope·(x − lo)` when decreasing.
    Affine { lo: f64, slope: f64 },
    /// `4x(1 − x)` on `[0, 1/2]`.
    ChebyshevLeft,
    /// `4x(1 − x)` on `[1/2, 1]`.
    ChebyshevRight,
    /// `x + x^{1+γ}` on `[0, c]`.
    PomeauLeft { gamma: f64 },
    /// `x + x^{1+γ} − 1` on `[c, 1]`.
    PomeauRight { gamma: f64 },
    /// User supplied forward map and derivative; inverse found by bisection.
    Custom {
        forward: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for BranchRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BranchRule::Affine { lo, slope } => write!(f, "Affine(lo={lo}, slope={slope})"),
            BranchRule::ChebyshevLeft => write!(f, "ChebyshevLeft"),
            BranchRule::ChebyshevRight => write!(f, "ChebyshevRight"),
            BranchRule::PomeauLeft { gamma } => write!(f, "PomeauLeft(gamma={gamma})"),
            BranchRule::PomeauRight { gamma } => write!(f, "PomeauRight(gamma={gamma})"),
            BranchRule::Custom { .. } => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub domain: Interval,
    pub rule: BranchRule,
    /// +1 increasing, −1 decreasing.
    pub orientation: i8,
}

impl Branch {
    pub fn forward(&self, x: f64) -> f64 {
        let y = match &self.rule {
            BranchRule::Affine { lo, slope } => {
                if *slope > 0.0 {
                    slope * (x - lo)
                } else {
                    1.0 + slope * (x - lo)
                }
            }
            BranchRule::ChebyshevLeft | BranchRule::ChebyshevRight => 4.0 * x * (1.0 - x),
            BranchRule::PomeauLeft { gamma } => x + x.powf(1.0 + gamma),
            BranchRule::PomeauRight { gamma } => x + x.powf(1.0 + gamma) - 1.0,
            BranchRule::Custom { forward, .. } => forward(x),
        };
        y.clamp(0.0, 1.0)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match &self.rule {
            BranchRule::Affine { slope, .. } => *slope,
            BranchRule::ChebyshevLeft | BranchRule::ChebyshevRight => 4.0 - 8.0 * x,
            BranchRule::PomeauLeft { gamma } | BranchRule::PomeauRight { gamma } => {
                1.0 + (1.0 + gamma) * x.max(0.0).powf(*gamma)
            }
            BranchRule::Custom { derivative, .. } => derivative(x),
        }
    }

    /// Inverse branch `[0,1] → domain`.
    pub fn inverse(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        let x = match &self.rule {
            BranchRule::Affine { lo, slope } => {
                if *slope > 0.0 {
                    lo + y / slope
                } else {
                    lo + (y - 1.0) / slope
                }
            }
            BranchRule::ChebyshevLeft => 0.5 * (1.0 - (1.0 - y).sqrt()),
            BranchRule::ChebyshevRight => 0.5 * (1.0 + (1.0 - y).sqrt()),
            BranchRule::PomeauLeft { gamma } => pomeau_newton(*gamma, y, y),
            BranchRule::PomeauRight { gamma } => pomeau_newton(*gamma, y + 1.0, 1.0),
            BranchRule::Custom { .. } => self.inverse_by_bisection(y),
        };
        x.clamp(self.domain.lo, self.domain.hi)
    }

    fn inverse_by_bisection(&self, y: f64) -> f64 {
        let (mut a, mut b) = (self.domain.lo, self.domain.hi);
        let inc = self.orientation > 0;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let below = self.forward(m) < y;
            if below == inc {
                a = m;
            } else {
                b = m;
            }
        }
        0.5 * (a + b)
    }
}

/// Solves `x + x^{1+γ} = target` by Newton from `x0 ≥` root; the left side is
/// convex and increasing, so the iterates decrease monotonically.
fn pomeau_newton(gamma: f64, target: f64, x0: f64) -> f64 {
    let mut x = x0;
    for _ in 0..100 {
        let g = x + x.powf(1.0 + gamma) - target;
        if g <= 0.0 {
            break;
        }
        let step = g / (1.0 + (1.0 + gamma) * x.powf(gamma));
        if step <= f64::EPSILON * x.max(f64::MIN_POSITIVE) {
            x -= step;
            break;
        }
        x -= step;
    }
    x.max(0.0)
}

/// Built-in map families; also the identity used for config and caching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    Doubling,
    Tent {
        slope: f64,
    },
    /// Increasing affine full branches with the given interior breakpoints.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
    },
    Chebyshev,
    MannevillePomeau {
        gamma: f64,
    },
    #[serde(skip)]
    Custom {
        name: String,
    },
}

/// Tagged closed-form pressure, used by test oracles only.
#[derive(Debug, Clone, PartialEq)]
pub enum ClosedFormPressure {
    /// `p(t) = log Σ |s_i|^{−t}` for affine branches with slopes `s_i`.
    LinearBranches(Vec<f64>),
    /// `p(t) = max{(1 − t) log 2, −2t log 2}`.
    ChebyshevMax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticMetadata {
    pub closed_form_pressure: Option<ClosedFormPressure>,
    pub known_acip_lyapunov: Option<f64>,
    pub known_topological_entropy: Option<f64>,
    pub critical_order: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MapSpec {
    pub family: Family,
    pub branches: Vec<Branch>,
    pub critical_points: Vec<f64>,
    pub markov: bool,
    pub analytic_metadata: Option<AnalyticMetadata>,
    pub deriv_floor: f64,
    /// Set for families outside the class the formalism covers (parabolic points).
    pub outside_class: bool,
}

impl MapSpec {
    pub fn doubling() -> Self {
        Self::affine_family(Family::Doubling, &[0.5], &[2.0, 2.0])
    }

    /// Full-branch tent with left slope `s > 1`, peak at `1/s`.
    pub fn tent(slope: f64) -> Result<Self> {
        if !(slope > 1.0) || !slope.is_finite() {
            return Err(Error::Invalid(format!("tent slope must exceed 1, got {slope}")));
        }
        let peak = 1.0 / slope;
        let right = -slope / (slope - 1.0);
        Ok(Self::affine_family(
            Family::Tent { slope },
            &[peak],
            &[slope, right],
        ))
    }

    /// Increasing affine full branches cut at the given interior breakpoints.
    pub fn piecewise_linear(breakpoints: &[f64]) -> Result<Self> {
        let mut prev = 0.0;
        for &b in breakpoints {
            if !(b > prev && b < 1.0) {
                return Err(Error::Invalid(format!(
                    "breakpoints must be strictly increasing inside (0,1): {breakpoints:?}"
                )));
            }
            prev = b;
        }
        let mut edges = vec![0.0];
        edges.extend_from_slice(breakpoints);
        edges.push(1.0);
        let slopes: Vec<f64> = edges.windows(2).map(|w| 1.0 / (w[1] - w[0])).collect();
        Ok(Self::affine_family(
            Family::PiecewiseLinear {
                breakpoints: breakpoints.to_vec(),
            },
            breakpoints,
            &slopes,
        ))
    }

    /// The two-branch linear map with breakpoint `c`.
    pub fn two_branch_linear(c: f64) -> Result<Self> {
        Self::piecewise_linear(&[c])
    }

    fn affine_family(family: Family, breakpoints: &[f64], slopes: &[f64]) -> Self {
        let mut edges = vec![0.0];
        edges.extend_from_slice(breakpoints);
        edges.push(1.0);
        let branches = edges
            .windows(2)
            .zip(slopes)
            .map(|(w, &slope)| Branch {
                domain: Interval::new(w[0], w[1]),
                rule: BranchRule::Affine { lo: w[0], slope },
                orientation: if slope > 0.0 { 1 } else { -1 },
            })
            .collect();
        let abs: Vec<f64> = slopes.iter().map(|s| s.abs()).collect();
        let lebesgue_lyap: f64 = abs.iter().map(|s| s.ln() / s).sum();
        let top_entropy = (slopes.len() as f64).ln();
        Self {
            family,
            branches,
            critical_points: vec![],
            markov: true,
            analytic_metadata: Some(AnalyticMetadata {
                closed_form_pressure: Some(ClosedFormPressure::LinearBranches(abs)),
                known_acip_lyapunov: Some(lebesgue_lyap),
                known_topological_entropy: Some(top_entropy),
                critical_order: None,
            }),
            deriv_floor: DEFAULT_DERIV_FLOOR,
            outside_class: false,
        }
    }

    pub fn chebyshev() -> Self {
        let ln2 = std::f64::consts::LN_2;
        Self {
            family: Family::Chebyshev,
            branches: vec![
                Branch {
                    domain: Interval::new(0.0, 0.5),
                    rule: BranchRule::ChebyshevLeft,
                    orientation: 1,
                },
                Branch {
                    domain: Interval::new(0.5, 1.0),
                    rule: BranchRule::ChebyshevRight,
                    orientation: -1,
                },
            ],
            critical_points: vec![0.5],
            markov: true,
            analytic_metadata: Some(AnalyticMetadata {
                closed_form_pressure: Some(ClosedFormPressure::ChebyshevMax),
                known_acip_lyapunov: Some(ln2),
                known_topological_entropy: Some(ln2),
                critical_order: Some(2.0),
            }),
            deriv_floor: DEFAULT_DERIV_FLOOR,
            outside_class: false,
        }
    }

    /// `x ↦ x + x^{1+γ} mod 1`. Has a parabolic fixed point at 0, so it is a
    /// fixture outside the class of maps the formalism covers.
    pub fn manneville_pomeau(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::Invalid(format!(
                "Manneville-Pomeau exponent must lie in (0,1), got {gamma}"
            )));
        }
        let c = crate::numeric::bisect_root(|x| x + x.powf(1.0 + gamma) - 1.0, 0.0, 1.0, 1e-17);
        Ok(Self {
            family: Family::MannevillePomeau { gamma },
            branches: vec![
                Branch {
                    domain: Interval::new(0.0, c),
                    rule: BranchRule::PomeauLeft { gamma },
                    orientation: 1,
                },
                Branch {
                    domain: Interval::new(c, 1.0),
                    rule: BranchRule::PomeauRight { gamma },
                    orientation: 1,
                },
            ],
            critical_points: vec![],
            markov: true,
            analytic_metadata: Some(AnalyticMetadata {
                closed_form_pressure: None,
                known_acip_lyapunov: None,
                known_topological_entropy: Some(std::f64::consts::LN_2),
                critical_order: None,
            }),
            deriv_floor: DEFAULT_DERIV_FLOOR,
            outside_class: true,
        })
    }

    /// A map from user supplied branches; validates partition and full images.
    pub fn from_branches(
        name: &str,
        branches: Vec<Branch>,
        critical_points: Vec<f64>,
    ) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::Invalid("a map needs at least one branch".into()));
        }
        let spec = Self {
            family: Family::Custom { name: name.into() },
            branches,
            critical_points,
            markov: true,
            analytic_metadata: None,
            deriv_floor: DEFAULT_DERIV_FLOOR,
            outside_class: false,
        };
        let mut edge = 0.0;
        for b in &spec.branches {
            if (b.domain.lo - edge).abs() > 1e-12 {
                return Err(Error::Invalid(format!(
                    "branch domains must partition [0,1]; gap at {edge}"
                )));
            }
            edge = b.domain.hi;
        }
        if (edge - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid("branch domains must end at 1".into()));
        }
        let err = spec.branch_bijectivity_error();
        if err > 1e-12 {
            return Err(Error::Invalid(format!(
                "every branch must map onto [0,1] (endpoint error {err:e})"
            )));
        }
        Ok(spec)
    }

    pub fn from_family(family: &Family) -> Result<Self> {
        match family {
            Family::Doubling => Ok(Self::doubling()),
            Family::Tent { slope } => Self::tent(*slope),
            Family::PiecewiseLinear { breakpoints } => Self::piecewise_linear(breakpoints),
            Family::Chebyshev => Ok(Self::chebyshev()),
            Family::MannevillePomeau { gamma } => Self::manneville_pomeau(*gamma),
            Family::Custom { name } => Err(Error::Invalid(format!(
                "custom map '{name}' cannot be rebuilt from its family tag"
            ))),
        }
    }

    pub fn with_deriv_floor(mut self, floor: f64) -> Self {
        self.deriv_floor = floor;
        self
    }

    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }

    /// Branch containing `x`; points on a shared endpoint take the left branch.
    pub fn branch_index(&self, x: f64) -> usize {
        self.branches
            .iter()
            .position(|b| x <= b.domain.hi)
            .unwrap_or(self.branches.len() - 1)
    }

    fn check_domain(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                context: "[0,1]".into(),
            })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.branches[self.branch_index(x)].forward(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        Ok(self.branches[self.branch_index(x)].derivative(x))
    }

    pub fn log_abs_deriv(&self, x: f64) -> Result<f64> {
        Self::check_domain(x)?;
        self.log_abs_deriv_on(self.branch_index(x), x)
    }

    pub(crate) fn log_abs_deriv_on(&self, branch: usize, x: f64) -> Result<f64> {
        let d = self.branches[branch].derivative(x).abs();
        if d < self.deriv_floor || !d.is_finite() {
            return Err(Error::CriticalPoint { x, deriv: d });
        }
        Ok(d.ln())
    }

    pub fn inverse(&self, branch: usize, y: f64) -> f64 {
        self.branches[branch].inverse(y)
    }

    pub fn is_piecewise_linear(&self) -> bool {
        self.branches
            .iter()
            .all(|b| matches!(b.rule, BranchRule::Affine { .. }))
    }

    /// Chebyshev periodic points are located in tent coordinates.
    pub fn uses_tent_conjugacy(&self) -> bool {
        matches!(self.family, Family::Chebyshev)
    }

    /// Largest endpoint deviation from `{0, 1}` over all branches.
    pub fn branch_bijectivity_error(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let (a, c) = (b.forward(b.domain.lo), b.forward(b.domain.hi));
                let (want_a, want_c) = if b.orientation > 0 { (0.0, 1.0) } else { (1.0, 0.0) };
                (a - want_a).abs().max((c - want_c).abs())
            })
            .fold(0.0, f64::max)
    }

    /// Canonical text identity used for cache keys.
    pub fn canonical_key(&self) -> String {
        format!("{:?};floor={:e}", self.family, self.deriv_floor)
    }

    /// Slopes of every branch when the map is piecewise linear.
    pub fn affine_slopes(&self) -> Option<Vec<f64>> {
        self.branches
            .iter()
            .map(|b| match b.rule {
                BranchRule::Affine { slope, .. } => Some(slope),
                _ => None,
            })
            .collect()
    }
}

/// Chebyshev conjugacy `h(y) = sin²(πy/2)` from the slope-2 tent map.
pub fn tent_to_chebyshev(y: f64) -> f64 {
    let s = (std::f64::consts::FRAC_PI_2 * y).sin();
    s * s
}

/// `log|Df(h(y))|` for Chebyshev, written as `log|4 cos(πy)|` for accuracy.
pub(crate) fn chebyshev_log_deriv_from_tent(y: f64) -> f64 {
    (4.0 * (std::f64::consts::PI * y).cos()).abs().ln()
}

/// Pointwise potential rule.
#[derive(Clone)]
pub struct PointwiseRule(pub Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl fmt::Debug for PointwiseRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pointwise(..)")
    }
}

#[derive(Debug, Clone)]
pub enum PotentialKind {
    /// `−t·log|Df|`.
    Geometric { t: f64 },
    /// One value (nats) per branch.
    LocallyConstant(Vec<f64>),
    Pointwise(PointwiseRule),
    /// `−t·log|Df| + q·base`.
    Combined { t: f64, q: f64, base: Box<Potential> },
}

#[derive(Debug, Clone)]
pub struct Potential {
    pub kind: PotentialKind,
    pub holder_exponent_hint: Option<f64>,
}

impl Potential {
    pub fn geometric(t: f64) -> Self {
        Self {
            kind: PotentialKind::Geometric { t },
            holder_exponent_hint: None,
        }
    }

    pub fn locally_constant(values: Vec<f64>) -> Self {
        Self {
            kind: PotentialKind::LocallyConstant(values),
            holder_exponent_hint: None,
        }
    }

    /// Locally constant potential `log p_i` for a probability vector.
    pub fn bernoulli(probs: &[f64]) -> Self {
        Self::locally_constant(probs.iter().map(|p| p.ln()).collect())
    }

    /// The constant potential `c` on an `m`-branch map.
    pub fn constant(c: f64, branches: usize) -> Self {
        Self::locally_constant(vec![c; branches])
    }

    pub fn pointwise(rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            kind: PotentialKind::Pointwise(PointwiseRule(Arc::new(rule))),
            holder_exponent_hint: None,
        }
    }

    pub fn combined(t: f64, q: f64, base: Potential) -> Self {
        Self {
            kind: PotentialKind::Combined {
                t,
                q,
                base: Box::new(base),
            },
            holder_exponent_hint: None,
        }
    }

    /// Coefficient `c` in the decomposition `φ = −c·log|Df| + rest`.
    pub fn geometric_coefficient(&self) -> f64 {
        match &self.kind {
            PotentialKind::Geometric { t } => *t,
            PotentialKind::LocallyConstant(_) | PotentialKind::Pointwise(_) => 0.0,
            PotentialKind::Combined { t, q, base } => t + q * base.geometric_coefficient(),
        }
    }

    /// True when the non-geometric part depends only on the branch.
    pub fn rest_is_locally_constant(&self) -> bool {
        match &self.kind {
            PotentialKind::Geometric { .. } | PotentialKind::LocallyConstant(_) => true,
            PotentialKind::Pointwise(_) => false,
            PotentialKind::Combined { q, base, .. } => *q == 0.0 || base.rest_is_locally_constant(),
        }
    }

    /// The non-geometric part at `x` in branch `branch`.
    pub fn rest_at(&self, branch: usize, x: f64) -> Result<f64> {
        match &self.kind {
            PotentialKind::Geometric { .. } => Ok(0.0),
            PotentialKind::LocallyConstant(v) => v.get(branch).copied().ok_or_else(|| {
                Error::Invalid(format!(
                    "locally constant potential has {} values, branch {branch} requested",
                    v.len()
                ))
            }),
            PotentialKind::Pointwise(rule) => Ok((rule.0)(x)),
            PotentialKind::Combined { q, base, .. } => {
                if *q == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(q * base.rest_at(branch, x)?)
                }
            }
        }
    }

    /// `φ(x)` given the branch and, optionally, a precomputed `log|Df(x)|`.
    pub(crate) fn value_on(
        &self,
        map: &MapSpec,
        branch: usize,
        x: f64,
        log_deriv: Option<f64>,
    ) -> Result<f64> {
        let c = self.geometric_coefficient();
        let geo = if c == 0.0 {
            0.0
        } else {
            let ld = match log_deriv {
                Some(v) => v,
                None => map.log_abs_deriv_on(branch, x)?,
            };
            -c * ld
        };
        Ok(geo + self.rest_at(branch, x)?)
    }

    pub fn validate(&self, map: &MapSpec) -> Result<()> {
        match &self.kind {
            PotentialKind::LocallyConstant(v) => {
                if v.len() != map.branch_count() {
                    return Err(Error::Invalid(format!(
                        "locally constant potential needs {} values, got {}",
                        map.branch_count(),
                        v.len()
                    )));
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Invalid(
                        "locally constant potential values must be finite".into(),
                    ));
                }
                Ok(())
            }
            PotentialKind::Combined { base, .. } => base.validate(map),
            _ => Ok(()),
        }
    }
}

/// `φ(x)`, with the geometric part evaluated only when present.
pub fn potential_at(map: &MapSpec, phi: &Potential, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            x,
            context: "[0,1]".into(),
        });
    }
    phi.validate(map)?;
    phi.value_on(map, map.branch_index(x), x, None)
}
