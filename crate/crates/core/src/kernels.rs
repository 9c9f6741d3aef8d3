//! The kernel registry: exact evaluation rules for every kernel family the
//! probes operate on, plus kernel-matrix assembly.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::domains::{Domain, Point};
use crate::error::{Error, Result};

/// Dot products are clamped into [-1, 1] before arccos when within this
/// slack; anything farther out signals a non-unit point and is rejected.
pub const ARCCOS_CLAMP_TOL: f64 = 1e-9;

/// Relative tolerance for the adaptive truncation of the null-example series.
pub const NULL_SERIES_TOL: f64 = 1e-15;

/// Hard cap on null-example series terms before `NonConvergent`.
pub const NULL_SERIES_CAP: usize = 500;

/// Scalar analytic profiles for the `h(x.y)` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DotFn {
    /// h(t) = exp(-t), the Laplace kernel.
    ExpNeg,
    /// h(t) = cos(t).
    Cos,
    /// h(t) = arccos(t); requires |x.y| <= 1 on the declared domains.
    Arccos,
}

impl DotFn {
    pub fn eval(self, t: f64) -> f64 {
        match self {
            DotFn::ExpNeg => (-t).exp(),
            DotFn::Cos => t.cos(),
            DotFn::Arccos => t.acos(),
        }
    }
}

/// Kernel families with their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Family {
    /// |x - y|^2 in R^n; finite rank n + 2.
    EuclideanSq { n: usize },
    /// (x - y)^2 on the circle coordinate; finite rank 3.
    CircularSq,
    /// arccos(p.q) on S^n.
    SphereGeodesic { n: usize },
    /// arccos^2(p.q) on S^n.
    SphereGeodesicSq { n: usize },
    /// h(x.y) for analytic h with infinitely many nonzero derivatives at 0.
    DotAnalytic { h: DotFn, n: usize },
    /// The piecewise-indicator counterexample: linearly independent Taylor
    /// functions that are not locally linearly independent.
    IndicatorExample,
    /// The non-injective full-rank-a.e. kernel from the concluding example:
    /// 1 + sum_s x^s/s! (y/(2s) - 1) y^(2s-1) on a box times (0, inf).
    NullExample,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::EuclideanSq { n } => write!(f, "euclidean-sq:n={n}"),
            Family::CircularSq => write!(f, "circular-sq"),
            Family::SphereGeodesic { n } => write!(f, "sphere-geo:n={n}"),
            Family::SphereGeodesicSq { n } => write!(f, "sphere-geo-sq:n={n}"),
            Family::DotAnalytic { h, n } => {
                let name = match h {
                    DotFn::ExpNeg => "exp-neg",
                    DotFn::Cos => "cos",
                    DotFn::Arccos => "arccos",
                };
                write!(f, "dot:{name},n={n}")
            }
            Family::IndicatorExample => write!(f, "indicator"),
            Family::NullExample => write!(f, "null-example"),
        }
    }
}

/// A kernel family together with the open domains U and V it acts on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: Family,
    pub domain_u: Domain,
    pub domain_v: Domain,
}

impl KernelSpec {
    pub fn new(family: Family, domain_u: Domain, domain_v: Domain) -> Result<Self> {
        match &family {
            Family::EuclideanSq { n } => {
                for d in [&domain_u, &domain_v] {
                    if d.ambient_dim() != *n {
                        return Err(Error::InvalidInput(format!(
                            "euclidean-sq:n={n} needs {n}-dimensional domains"
                        )));
                    }
                }
            }
            Family::CircularSq => {
                for d in [&domain_u, &domain_v] {
                    if d.ambient_dim() != 1 {
                        return Err(Error::InvalidInput(
                            "circular-sq needs 1-dimensional domains".into(),
                        ));
                    }
                }
            }
            Family::SphereGeodesic { n } | Family::SphereGeodesicSq { n } => {
                if *n < 1 {
                    return Err(Error::InvalidInput("sphere dimension must be >= 1".into()));
                }
                for d in [&domain_u, &domain_v] {
                    let ok = matches!(d, Domain::UnitSphere { dim } if dim == n)
                        || matches!(d, Domain::Cap { center, .. } if center.len() == n + 1);
                    if !ok {
                        return Err(Error::InvalidInput(format!(
                            "sphere kernel needs unit-sphere (or cap) domains of dimension {n}"
                        )));
                    }
                }
            }
            Family::DotAnalytic { n, .. } => {
                for d in [&domain_u, &domain_v] {
                    if d.ambient_dim() != *n {
                        return Err(Error::InvalidInput(format!(
                            "dot kernel needs {n}-dimensional domains"
                        )));
                    }
                }
            }
            Family::IndicatorExample => {
                let unit = Domain::interval(0.0, 1.0);
                for d in [&domain_u, &domain_v] {
                    let ok = matches!(d, Domain::OpenBox { lo, hi }
                        if lo.len() == 1 && unit.contains_domain(d) && lo[0] < hi[0]);
                    if !ok {
                        return Err(Error::InvalidInput(
                            "indicator kernel needs open intervals inside (0, 1)".into(),
                        ));
                    }
                }
            }
            Family::NullExample => {
                let u_ok = matches!(&domain_u, Domain::OpenBox { lo, .. } if lo.len() == 1);
                let v_ok = matches!(&domain_v, Domain::HalfLine { .. });
                if !u_ok || !v_ok {
                    return Err(Error::InvalidInput(
                        "null-example needs a bounded interval U and half-line V".into(),
                    ));
                }
            }
        }
        Ok(KernelSpec {
            family,
            domain_u,
            domain_v,
        })
    }

    /// Canonical domains for each family. These are the domains the CLI uses
    /// when the kernel string does not override them.
    ///
    /// The dot kernels default to ambient dimension 3 on (0,2)^3, where k x k
    /// samples up to k = 10 stay well conditioned; the null example restricts
    /// x to (-1.5, 1.5) since its series needs bounded first arguments.
    pub fn with_default_domains(family: Family) -> Self {
        let (u, v) = match &family {
            Family::EuclideanSq { n } => {
                let b = Domain::open_box(vec![0.0; *n], vec![1.0; *n]);
                (b.clone(), b)
            }
            Family::CircularSq => {
                let b = Domain::interval(0.0, std::f64::consts::TAU);
                (b.clone(), b)
            }
            Family::SphereGeodesic { n } | Family::SphereGeodesicSq { n } => {
                (Domain::unit_sphere(*n), Domain::unit_sphere(*n))
            }
            Family::DotAnalytic {
                h: DotFn::Arccos,
                n,
            } => {
                let half = (0.9 / *n as f64).sqrt();
                let b = Domain::open_box(vec![-half; *n], vec![half; *n]);
                (b.clone(), b)
            }
            Family::DotAnalytic { n, .. } => {
                let b = Domain::open_box(vec![0.0; *n], vec![2.0; *n]);
                (b.clone(), b)
            }
            Family::IndicatorExample => (Domain::interval(0.0, 1.0), Domain::interval(0.0, 1.0)),
            Family::NullExample => (Domain::interval(-1.5, 1.5), Domain::half_line(0.0)),
        };
        KernelSpec {
            family,
            domain_u: u,
            domain_v: v,
        }
    }

    /// Whether ψ(x, y) = ψ(y, x) holds exactly for this family.
    pub fn is_symmetric(&self) -> bool {
        matches!(
            self.family,
            Family::EuclideanSq { .. }
                | Family::CircularSq
                | Family::SphereGeodesic { .. }
                | Family::SphereGeodesicSq { .. }
        )
    }
}

/// Index of the indicator cell [s/(s+1), (s+1)/(s+2)) containing `x`.
///
/// Closed form s = ceil(x/(1-x)) - 1, then verified (and nudged) by the
/// interval test so boundary values land in the right cell.
pub fn cell_index(x: f64) -> usize {
    debug_assert!(x > 0.0 && x < 1.0);
    let guess = (x / (1.0 - x)).ceil() as i64 - 1;
    for cand in [guess, guess + 1, guess - 1] {
        if cand >= 0 {
            let s = cand as f64;
            if s / (s + 1.0) <= x && x < (s + 1.0) / (s + 2.0) {
                return cand as usize;
            }
        }
    }
    guess.max(0) as usize
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// arccos of a dot product, with the clamp policy: values within
/// `ARCCOS_CLAMP_TOL` outside [-1,1] are clamped, farther ones rejected.
fn clamped_acos(z: f64) -> Result<f64> {
    if z.abs() > 1.0 + ARCCOS_CLAMP_TOL {
        return Err(Error::DomainViolation(format!(
            "arccos argument {z} outside [-1-tol, 1+tol]"
        )));
    }
    Ok(z.clamp(-1.0, 1.0).acos())
}

/// Euler-Mascheroni constant.
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Exponential integral E1(w) = ∫_w^inf e^{-t}/t dt for w >= 1, by the
/// modified-Lentz continued fraction.
fn exp_int_e1(w: f64) -> f64 {
    debug_assert!(w >= 1.0);
    let tiny = 1e-300;
    let mut b = w + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..200 {
        let a = -(i as f64) * (i as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-w).exp()
}

/// ψ(x, y) = 1 + Σ_{s>=1} x^s/s! (y/(2s) - 1) y^(2s-1), truncated once two
/// consecutive terms fall below `NULL_SERIES_TOL` relative to the partial sum.
///
/// For strongly negative u = x y^2 the direct sum cancels catastrophically
/// (absolute noise ~ e^|u| eps against an O(log|u|) value), so that branch
/// uses the equivalent closed form 1 + E(u)/2 - (e^u - 1)/y with
/// E(u) = -(E1(-u) + gamma + ln(-u)) evaluated through the stable
/// continued-fraction exponential integral.
pub(crate) fn null_example_eval(x: f64, y: f64) -> Result<f64> {
    let u = x * y * y;
    if u < -1.5 {
        let w = -u;
        let big_e = -(exp_int_e1(w) + EULER_GAMMA + w.ln());
        return Ok(1.0 + 0.5 * big_e - (u.exp() - 1.0) / y);
    }
    let mut acc = 1.0f64;
    // base = x^s y^(2s-1) / s!, grown by the bounded ratio x y^2 / s so the
    // huge-but-cancelling factors never overflow individually
    let mut base = 1.0f64;
    let mut small_run = 0;
    for s in 1..=NULL_SERIES_CAP {
        base *= if s == 1 { x * y } else { x * y * y / s as f64 };
        let term = base * (y / (2.0 * s as f64) - 1.0);
        if !term.is_finite() {
            return Err(Error::NonConvergent { terms: s });
        }
        acc += term;
        if term.abs() <= NULL_SERIES_TOL * acc.abs().max(1.0) {
            small_run += 1;
            if small_run >= 2 {
                return Ok(acc);
            }
        } else {
            small_run = 0;
        }
    }
    Err(Error::NonConvergent {
        terms: NULL_SERIES_CAP,
    })
}

/// Evaluates the kernel at (x, y), checking domain membership first.
pub fn eval(spec: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    if !spec.domain_u.contains(x) {
        return Err(Error::DomainViolation(format!(
            "x = {:?} outside U = {:?}",
            x.coords, spec.domain_u
        )));
    }
    if !spec.domain_v.contains(y) {
        return Err(Error::DomainViolation(format!(
            "y = {:?} outside V = {:?}",
            y.coords, spec.domain_v
        )));
    }
    eval_unchecked(spec, x, y)
}

/// Evaluation rule without the domain membership check.
pub(crate) fn eval_unchecked(spec: &KernelSpec, x: &Point, y: &Point) -> Result<f64> {
    match &spec.family {
        Family::EuclideanSq { .. } => Ok(x
            .coords
            .iter()
            .zip(&y.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()),
        Family::CircularSq => {
            let d = x.coords[0] - y.coords[0];
            Ok(d * d)
        }
        Family::SphereGeodesic { .. } => clamped_acos(dot(&x.coords, &y.coords)),
        Family::SphereGeodesicSq { .. } => {
            let w = clamped_acos(dot(&x.coords, &y.coords))?;
            Ok(w * w)
        }
        Family::DotAnalytic { h, .. } => {
            let t = dot(&x.coords, &y.coords);
            if *h == DotFn::Arccos && t.abs() > 1.0 + ARCCOS_CLAMP_TOL {
                return Err(Error::DomainViolation(format!(
                    "arccos dot kernel needs |x.y| <= 1, got {t}"
                )));
            }
            Ok(if *h == DotFn::Arccos {
                t.clamp(-1.0, 1.0).acos()
            } else {
                h.eval(t)
            })
        }
        Family::IndicatorExample => {
            let s = cell_index(x.coords[0]);
            // y^s / s!; exactly one indicator survives, so no truncation error
            let mut fact = 1.0f64;
            for i in 1..=s {
                fact *= i as f64;
            }
            Ok(y.coords[0].powi(s as i32) / fact)
        }
        Family::NullExample => null_example_eval(x.coords[0], y.coords[0]),
    }
}

/// A kernel matrix {ψ(x_i, y_j)} together with its generating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMatrix {
    pub entries: Vec<Vec<f64>>,
    pub xs: Vec<Point>,
    pub ys: Vec<Point>,
}

impl KernelMatrix {
    pub fn nrows(&self) -> usize {
        self.entries.len()
    }

    pub fn ncols(&self) -> usize {
        self.entries.first().map_or(0, |r| r.len())
    }
}

/// Assembles the matrix {ψ(x_i, y_j)}.
pub fn kernel_matrix(spec: &KernelSpec, xs: &[Point], ys: &[Point]) -> Result<KernelMatrix> {
    let mut entries = Vec::with_capacity(xs.len());
    for x in xs {
        let mut row = Vec::with_capacity(ys.len());
        for y in ys {
            row.push(eval(spec, x, y)?);
        }
        entries.push(row);
    }
    Ok(KernelMatrix {
        entries,
        xs: xs.to_vec(),
        ys: ys.to_vec(),
    })
}

/// Parses the CLI kernel grammar `family[:param=value,...]`.
///
/// Families: `euclidean-sq:n=2`, `circular-sq`, `sphere-geo:n=2`,
/// `sphere-geo-sq:n=2`, `dot:exp-neg[,n=3]`, `indicator`, `null-example`.
/// Optional `u=lo..hi[xlo..hi...]` and `v=...` override the default domains
/// (boxes only); `rate=r` sets the half-line rate for `null-example`.
pub fn parse_kernel(s: &str) -> Result<KernelSpec> {
    let (name, rest) = match s.split_once(':') {
        Some((n, r)) => (n, Some(r)),
        None => (s, None),
    };
    let mut n_param: Option<usize> = None;
    let mut h_param: Option<DotFn> = None;
    let mut u_override: Option<Domain> = None;
    let mut v_override: Option<Domain> = None;
    let mut rate: Option<f64> = None;
    if let Some(rest) = rest {
        for tok in rest.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            match tok.split_once('=') {
                Some(("n", v)) => {
                    n_param = Some(v.parse().map_err(|_| bad_kernel(s, "bad n"))?);
                }
                Some(("h", v)) => {
                    h_param = Some(parse_dot_fn(v).ok_or_else(|| bad_kernel(s, "bad h"))?)
                }
                Some(("u", v)) => u_override = Some(parse_box(v)?),
                Some(("v", v)) => v_override = Some(parse_box(v)?),
                Some(("rate", v)) => {
                    rate = Some(v.parse().map_err(|_| bad_kernel(s, "bad rate"))?);
                }
                Some((k, _)) => return Err(bad_kernel(s, &format!("unknown parameter {k}"))),
                None => {
                    // bare token: the dot-profile name
                    h_param = Some(parse_dot_fn(tok).ok_or_else(|| bad_kernel(s, "bad profile"))?);
                }
            }
        }
    }
    let family = match name {
        "euclidean-sq" => Family::EuclideanSq {
            n: n_param.unwrap_or(1),
        },
        "circular-sq" => Family::CircularSq,
        "sphere-geo" => Family::SphereGeodesic {
            n: n_param.unwrap_or(2),
        },
        "sphere-geo-sq" => Family::SphereGeodesicSq {
            n: n_param.unwrap_or(2),
        },
        "dot" => Family::DotAnalytic {
            h: h_param
                .ok_or_else(|| bad_kernel(s, "dot kernel needs a profile, e.g. dot:exp-neg"))?,
            n: n_param.unwrap_or(3),
        },
        "indicator" => Family::IndicatorExample,
        "null-example" => Family::NullExample,
        other => return Err(bad_kernel(s, &format!("unknown family {other}"))),
    };
    let mut spec = KernelSpec::with_default_domains(family.clone());
    if let Some(r) = rate {
        if let Domain::HalfLine { origin, .. } = spec.domain_v {
            spec.domain_v = Domain::half_line_with_rate(origin, r);
        } else {
            return Err(bad_kernel(s, "rate only applies to half-line domains"));
        }
    }
    if let Some(u) = u_override {
        spec.domain_u = u;
    }
    if let Some(v) = v_override {
        spec.domain_v = v;
    }
    KernelSpec::new(spec.family, spec.domain_u, spec.domain_v)
}

fn parse_dot_fn(s: &str) -> Option<DotFn> {
    match s {
        "exp-neg" => Some(DotFn::ExpNeg),
        "cos" => Some(DotFn::Cos),
        "arccos" => Some(DotFn::Arccos),
        _ => None,
    }
}

fn bad_kernel(s: &str, why: &str) -> Error {
    Error::InvalidInput(format!("kernel string '{s}': {why}"))
}

/// Parses a box literal `lo..hi` or `lo..hi x lo..hi ...`.
pub fn parse_box(s: &str) -> Result<Domain> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for axis in s.split('x') {
        let (a, b) = axis
            .split_once("..")
            .ok_or_else(|| Error::InvalidInput(format!("bad box literal '{s}'")))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad box bound in '{s}'")))?;
        let b: f64 = b
            .trim()
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad box bound in '{s}'")))?;
        if a >= b {
            return Err(Error::InvalidInput(format!("empty box axis in '{s}'")));
        }
        lo.push(a);
        hi.push(b);
    }
    Ok(Domain::open_box(lo, hi))
}
