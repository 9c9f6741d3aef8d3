//! Truncated power-series (Taylor jet) arithmetic along directional slices.
//!
//! A jet holds the scaled coefficients c_s = f^(s)(0)/s! of the slice
//! function t -> ψ(x, p + t·dir). The spherical kernels are composed through
//! the hemisphere chart, so arccos, square root, products and reciprocals
//! are all propagated by series recurrences; the integer-coefficient
//! derivative recursions of the underlying calculus are subsumed by the
//! composition rules and never materialized.

use serde::{Deserialize, Serialize};

use crate::domains::{hemisphere_embed, Point};
use crate::error::{Error, Result};
use crate::kernels::{self, DotFn, Family, KernelSpec};

/// Expansions abort when the arccos argument is this close to +-1.
pub const SINGULAR_EXPANSION_TOL: f64 = 1e-9;

/// Truncated power series around t = 0; `coeffs[s]` = f^(s)(0)/s!.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorJet {
    pub coeffs: Vec<f64>,
}

impl TaylorJet {
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        TaylorJet { coeffs }
    }

    /// c0 + c1 t, padded with zeros to `order`.
    pub fn linear(c0: f64, c1: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c0;
        if order >= 1 {
            coeffs[1] = c1;
        }
        TaylorJet { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn truncated(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.truncate(order + 1);
        coeffs.resize(order + 1, 0.0);
        TaylorJet { coeffs }
    }

    /// Derivative coefficient f^(s)(0) = coeffs[s] * s!.
    pub fn derivative_value(&self, s: usize) -> f64 {
        self.coeffs[s] * factorial(s)
    }

    /// Partial sum at offset t.
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order());
        TaylorJet {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn add_scalar(&self, c: f64) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] += c;
        TaylorJet { coeffs }
    }

    pub fn scale(&self, c: f64) -> Self {
        TaylorJet {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Cauchy product truncated to the common order.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order());
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        for (k, o) in out.iter_mut().enumerate() {
            let mut sum = 0.0;
            for j in 0..=k {
                sum += self.coeffs[j] * rhs.coeffs[k - j];
            }
            *o = sum;
        }
        TaylorJet { coeffs: out }
    }

    /// Recursive division; requires a nonzero constant term in `rhs`.
    pub fn div(&self, rhs: &Self) -> Self {
        assert_eq!(self.order(), rhs.order());
        assert!(rhs.coeffs[0] != 0.0, "division by a jet with zero constant");
        let n = self.coeffs.len();
        let inv_b0 = 1.0 / rhs.coeffs[0];
        let mut out = vec![0.0; n];
        for k in 0..n {
            let mut sum = self.coeffs[k];
            for j in 1..=k {
                sum -= rhs.coeffs[j] * out[k - j];
            }
            out[k] = sum * inv_b0;
        }
        TaylorJet { coeffs: out }
    }

    /// Square-root recurrence; requires a positive constant term.
    pub fn sqrt(&self) -> Self {
        assert!(
            self.coeffs[0] > 0.0,
            "sqrt of a jet with nonpositive constant"
        );
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].sqrt();
        let two_c0 = 2.0 * out[0];
        for k in 1..n {
            let mut sum = self.coeffs[k];
            for j in 1..k {
                sum -= out[j] * out[k - j];
            }
            out[k] = sum / two_c0;
        }
        TaylorJet { coeffs: out }
    }

    /// exp recurrence: c[k] = (1/k) Σ_j j a[j] c[k-j].
    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut out = vec![0.0; n];
        out[0] = self.coeffs[0].exp();
        for k in 1..n {
            let mut sum = 0.0;
            for j in 1..=k {
                sum += j as f64 * self.coeffs[j] * out[k - j];
            }
            out[k] = sum / k as f64;
        }
        TaylorJet { coeffs: out }
    }

    /// Coupled sine/cosine recurrence.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.coeffs.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..n {
            let mut sum_s = 0.0;
            let mut sum_c = 0.0;
            for j in 1..=k {
                let jf = j as f64 * self.coeffs[j];
                sum_s += jf * c[k - j];
                sum_c += jf * s[k - j];
            }
            s[k] = sum_s / k as f64;
            c[k] = -sum_c / k as f64;
        }
        (TaylorJet { coeffs: s }, TaylorJet { coeffs: c })
    }

    /// Series derivative, one order lower.
    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c)
            .collect::<Vec<_>>();
        TaylorJet {
            coeffs: if coeffs.is_empty() { vec![0.0] } else { coeffs },
        }
    }

    /// arccos through w' = -z'/sqrt(1 - z^2) and term-wise integration.
    pub fn acos(&self) -> Result<Self> {
        let z0 = self.coeffs[0];
        if z0.abs() >= 1.0 - SINGULAR_EXPANSION_TOL {
            return Err(Error::SingularExpansion { z0 });
        }
        let m = self.order();
        if m == 0 {
            return Ok(TaylorJet::constant(z0.acos(), 0));
        }
        let one_minus_z2 = self.mul(self).scale(-1.0).add_scalar(1.0);
        let root = one_minus_z2.sqrt().truncated(m - 1);
        let ratio = self.derivative().div(&root);
        let mut coeffs = vec![0.0; m + 1];
        coeffs[0] = z0.acos();
        for (k, c) in coeffs.iter_mut().enumerate().skip(1) {
            *c = -ratio.coeffs[k - 1] / k as f64;
        }
        Ok(TaylorJet { coeffs })
    }
}

fn factorial(s: usize) -> f64 {
    (1..=s).fold(1.0, |acc, i| acc * i as f64)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A directional slice t -> ψ(x, p + t·dir).
///
/// For the sphere families, `x`, `center` and `dir` live in hemisphere-chart
/// coordinates (the open unit ball); for everything else they are ambient.
/// `radius` is the caller-declared half-width on which the slice stays inside
/// V and the expansion is trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSpec {
    pub x: Point,
    pub center: Point,
    pub dir: Vec<f64>,
    pub order: usize,
    pub radius: f64,
}

impl SliceSpec {
    pub fn new(x: Point, center: Point, dir: Vec<f64>, order: usize, radius: f64) -> Result<Self> {
        let norm = dot(&dir, &dir).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "slice direction must be unit length, got |dir| = {norm}"
            )));
        }
        if radius.is_nan() || radius <= 0.0 {
            return Err(Error::InvalidInput("slice radius must be positive".into()));
        }
        if x.dim() != center.dim() || x.dim() != dir.len() {
            return Err(Error::InvalidInput(
                "slice x, center and dir must share a dimension".into(),
            ));
        }
        Ok(SliceSpec {
            x,
            center,
            dir,
            order,
            radius,
        })
    }
}

/// The offset point p + t·dir.
fn slice_point(slice: &SliceSpec, t: f64) -> Point {
    Point::new(
        slice
            .center
            .coords
            .iter()
            .zip(&slice.dir)
            .map(|(p, d)| p + t * d)
            .collect(),
    )
}

/// Evaluates ψ along the slice, embedding through the hemisphere chart for
/// the sphere families. This is the sampling path the derivative oracle uses.
pub fn slice_value(spec: &KernelSpec, slice: &SliceSpec, t: f64) -> Result<f64> {
    let y = slice_point(slice, t);
    match spec.family {
        Family::SphereGeodesic { .. } | Family::SphereGeodesicSq { .. } => {
            let px = hemisphere_embed(&slice.x)?;
            let py = hemisphere_embed(&y)?;
            kernels::eval_unchecked(spec, &px, &py)
        }
        _ => kernels::eval(spec, &slice.x, &y),
    }
}

/// Propagates the Taylor jet of t -> ψ(x, p + t·dir) to `slice.order`.
pub fn jet_propagate(spec: &KernelSpec, slice: &SliceSpec) -> Result<TaylorJet> {
    let m = slice.order;
    let x = &slice.x.coords;
    let p = &slice.center.coords;
    let d = &slice.dir;
    match &spec.family {
        Family::EuclideanSq { .. } | Family::CircularSq => {
            // |x - p - t d|^2 = |x-p|^2 - 2 (x-p).d t + |d|^2 t^2
            let diff: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            let mut jet = TaylorJet::constant(dot(&diff, &diff), m);
            if m >= 1 {
                jet.coeffs[1] = -2.0 * dot(&diff, d);
            }
            if m >= 2 {
                jet.coeffs[2] = dot(d, d);
            }
            Ok(jet)
        }
        Family::SphereGeodesic { .. } | Family::SphereGeodesicSq { .. } => {
            let xs = dot(x, x);
            if xs >= 1.0 {
                return Err(Error::OutOfChart { norm: xs.sqrt() });
            }
            let ps = dot(p, p);
            if ps >= 1.0 {
                return Err(Error::OutOfChart { norm: ps.sqrt() });
            }
            let x_last = (1.0 - xs).sqrt();
            // |p + t d|^2 as a quadratic jet
            let mut ynorm2 = TaylorJet::constant(ps, m);
            if m >= 1 {
                ynorm2.coeffs[1] = 2.0 * dot(p, d);
            }
            if m >= 2 {
                ynorm2.coeffs[2] = dot(d, d);
            }
            let y_last = ynorm2.scale(-1.0).add_scalar(1.0).sqrt();
            let z = TaylorJet::linear(dot(x, p), dot(x, d), m).add(&y_last.scale(x_last));
            let w = z.acos()?;
            Ok(match spec.family {
                Family::SphereGeodesicSq { .. } => w.mul(&w),
                _ => w,
            })
        }
        Family::DotAnalytic { h, .. } => {
            let z = TaylorJet::linear(dot(x, p), dot(x, d), m);
            match h {
                DotFn::ExpNeg => Ok(z.scale(-1.0).exp()),
                DotFn::Cos => Ok(z.sin_cos().1),
                DotFn::Arccos => z.acos(),
            }
        }
        Family::NullExample => {
            let xv = x[0];
            let y = TaylorJet::linear(p[0], d[0], m);
            let y2 = y.mul(&y);
            let mut acc = TaylorJet::constant(1.0, m);
            // base = x^s y^(2s-1) / s! as a jet, grown by bounded ratios so
            // neither factor overflows on its own
            let mut base = y.scale(xv);
            let mut small_run = 0;
            for s in 1..=kernels::NULL_SERIES_CAP {
                if s > 1 {
                    base = base.mul(&y2).scale(xv / s as f64);
                }
                let bracket = y.scale(1.0 / (2.0 * s as f64)).add_scalar(-1.0);
                let term = bracket.mul(&base);
                acc = acc.add(&term);
                let tmax = term.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
                let amax = acc.coeffs.iter().fold(1.0f64, |a, c| a.max(c.abs()));
                if tmax <= kernels::NULL_SERIES_TOL * amax {
                    small_run += 1;
                    if small_run >= 2 {
                        return Ok(acc);
                    }
                } else {
                    small_run = 0;
                }
            }
            Err(Error::NonConvergent {
                terms: kernels::NULL_SERIES_CAP,
            })
        }
        Family::IndicatorExample => Err(Error::UnsupportedFamily(
            "indicator kernel is not analytic in x; jets are undefined".into(),
        )),
    }
}

/// One row of the jet-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdRow {
    pub order: usize,
    pub coefficient: f64,
    pub finite_diff: f64,
    pub rel_err: f64,
}

/// Result of [`finite_diff_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffReport {
    pub rows: Vec<FdRow>,
    /// Largest relative discrepancy over orders 1..=min(order, 6).
    pub max_rel_err: f64,
}

/// Number of Chebyshev-Lobatto intervals the derivative oracle samples.
const CHEB_INTERVALS: usize = 18;

/// Compares jet coefficients against a sampling-based derivative oracle.
///
/// The oracle interpolates `eval` at 19 Chebyshev-Lobatto points on
/// [-h, h] along the slice and differentiates the interpolant at 0, a
/// stabilized finite-difference scheme (plain central differences with
/// Richardson refinement lose the high orders to rounding noise well above
/// 1e-6). Discrepancies are measured relative to the largest oracle
/// coefficient so near-zero coefficients do not divide by noise:
/// rel_err_s = |c_jet[s] - c_fd[s]| / max_j |c_fd[j]|.
///
/// `h` is the sampling half-width; it must not exceed the slice radius and
/// should stay clear of the kernel's singularities (for the sphere kernels:
/// safely below |x|, the slice-parameter distance to the coincident-point
/// branch cut).
pub fn finite_diff_check(spec: &KernelSpec, slice: &SliceSpec, h: f64) -> Result<FiniteDiffReport> {
    if h.is_nan() || h <= 0.0 || h > slice.radius {
        return Err(Error::InvalidInput(format!(
            "oracle half-width {h} must lie in (0, radius = {}]",
            slice.radius
        )));
    }
    let jet = jet_propagate(spec, slice)?;
    let smax = slice.order.min(6);

    let k = CHEB_INTERVALS;
    let mut samples = Vec::with_capacity(k + 1);
    for j in 0..=k {
        let t = h * (std::f64::consts::PI * j as f64 / k as f64).cos();
        samples.push(slice_value(spec, slice, t)?);
    }
    // Chebyshev interpolation coefficients (DCT-I with halved endpoints)
    let mut cheb = vec![0.0; k + 1];
    for (ci, c) in cheb.iter_mut().enumerate() {
        let mut sum = 0.5 * (samples[0] + samples[k] * (std::f64::consts::PI * ci as f64).cos());
        for (j, fj) in samples.iter().enumerate().take(k).skip(1) {
            sum += fj * (std::f64::consts::PI * ci as f64 * j as f64 / k as f64).cos();
        }
        *c = 2.0 * sum / k as f64;
    }
    cheb[0] /= 2.0;
    cheb[k] /= 2.0;
    // exact monomial expansion of T_0..T_k (integer coefficients)
    let mono_tables = chebyshev_monomials(k);
    let mut mono = vec![0.0; k + 1];
    for (ci, table) in cheb.iter().zip(&mono_tables) {
        for (m, t) in mono.iter_mut().zip(table) {
            *m += ci * t;
        }
    }
    let fd: Vec<f64> = (0..=smax).map(|s| mono[s] / h.powi(s as i32)).collect();

    let scale = fd.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-12);
    let mut rows = Vec::with_capacity(smax);
    let mut max_rel = 0.0f64;
    for (s, fd_s) in fd.iter().enumerate().take(smax + 1).skip(1) {
        let rel = (jet.coeffs[s] - fd_s).abs() / scale;
        max_rel = max_rel.max(rel);
        rows.push(FdRow {
            order: s,
            coefficient: jet.coeffs[s],
            finite_diff: *fd_s,
            rel_err: rel,
        });
    }
    Ok(FiniteDiffReport {
        rows,
        max_rel_err: max_rel,
    })
}

/// Monomial coefficients of T_0..T_k via T_n = 2x T_{n-1} - T_{n-2};
/// all integers, exact in f64 for the orders used here.
fn chebyshev_monomials(k: usize) -> Vec<Vec<f64>> {
    let mut tables = vec![vec![0.0; k + 1]; k + 1];
    tables[0][0] = 1.0;
    if k >= 1 {
        tables[1][1] = 1.0;
    }
    for n in 2..=k {
        let (before, current) = tables.split_at_mut(n);
        for i in 1..=k {
            current[0][i] = 2.0 * before[n - 1][i - 1];
        }
        for i in 0..=k {
            current[0][i] -= before[n - 2][i];
        }
    }
    tables
}

/// Odd/even structure of a sphere-family jet at the chart slice y = 0,
/// direction e_1. On the x_1 = 0 section every odd coefficient vanishes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OddEvenReport {
    pub jet: TaylorJet,
    pub max_odd_abs: f64,
    pub even_coeffs: Vec<f64>,
    pub odd_coeffs: Vec<f64>,
}

/// Expands ψ(x, ·) at the chart origin along e_1 and splits the jet by
/// parity. Meaningful for the vanishing claim only when x_1 = 0; other x
/// are allowed as contrast cases.
pub fn odd_even_structure(spec: &KernelSpec, x: &Point, order: usize) -> Result<OddEvenReport> {
    if !matches!(
        spec.family,
        Family::SphereGeodesic { .. } | Family::SphereGeodesicSq { .. }
    ) {
        return Err(Error::UnsupportedFamily(
            "odd/even structure applies to the sphere families".into(),
        ));
    }
    let n = x.dim();
    let mut dir = vec![0.0; n];
    dir[0] = 1.0;
    let slice = SliceSpec::new(x.clone(), Point::new(vec![0.0; n]), dir, order, 1.0)?;
    let jet = jet_propagate(spec, &slice)?;
    let mut even = Vec::new();
    let mut odd = Vec::new();
    let mut max_odd = 0.0f64;
    for (s, c) in jet.coeffs.iter().enumerate() {
        if s % 2 == 0 {
            even.push(*c);
        } else {
            odd.push(*c);
            max_odd = max_odd.max(c.abs());
        }
    }
    Ok(OddEvenReport {
        jet,
        max_odd_abs: max_odd,
        even_coeffs: even,
        odd_coeffs: odd,
    })
}

/// Least-squares polynomial fit result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    /// Coefficients in the original variable, constant term first.
    pub coefficients: Vec<f64>,
    /// Largest absolute residual over the samples.
    pub max_residual: f64,
}

/// Fits `value ~ polynomial(t)` of the given degree by least squares.
///
/// The abscissae are affinely mapped onto [-1, 1] before building the
/// Vandermonde system (an affine change preserves polynomial degree and
/// keeps the fit well conditioned); coefficients are mapped back.
pub fn poly_fit_in_t(samples: &[(f64, f64)], degree: usize) -> Result<PolyFit> {
    if samples.len() < degree + 2 {
        return Err(Error::InvalidInput(format!(
            "need at least degree + 2 = {} samples, got {}",
            degree + 2,
            samples.len()
        )));
    }
    let tmin = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let tmax = samples
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (tmin + tmax);
    let half = 0.5 * (tmax - tmin);
    if half.is_nan() || half <= 0.0 {
        return Err(Error::IllConditionedFit { degree });
    }
    let n = samples.len();
    let mut vand = nalgebra::DMatrix::<f64>::zeros(n, degree + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(n);
    for (i, (t, v)) in samples.iter().enumerate() {
        let tau = (t - mid) / half;
        let mut pw = 1.0;
        for j in 0..=degree {
            vand[(i, j)] = pw;
            pw *= tau;
        }
        rhs[i] = *v;
    }
    let svd = vand.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin.is_nan() || smin <= 1e-13 * smax {
        return Err(Error::IllConditionedFit { degree });
    }
    let sol = svd
        .solve(&rhs, 1e-13 * smax)
        .map_err(|_| Error::IllConditionedFit { degree })?;
    let fitted = vand * &sol;
    let max_residual = (fitted - rhs).abs().max();

    // expand sum_j b_j ((t - mid)/half)^j back into powers of t
    let mut coeffs = vec![0.0; degree + 1];
    coeffs[0] = sol[degree];
    let mut deg_used = 0;
    for j in (0..degree).rev() {
        // coeffs <- coeffs * (t - mid)/half + b_j
        deg_used += 1;
        let mut next = vec![0.0; degree + 1];
        for (i, c) in coeffs.iter().enumerate().take(deg_used) {
            next[i + 1] += c / half;
            next[i] -= c * mid / half;
        }
        next[0] += sol[j];
        coeffs = next;
    }
    Ok(PolyFit {
        coefficients: coeffs,
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Domain;
    use approx::assert_relative_eq;

    fn sphere_slice(x: &[f64], order: usize) -> SliceSpec {
        let n = x.len();
        let mut dir = vec![0.0; n];
        dir[0] = 1.0;
        SliceSpec::new(
            Point::new(x.to_vec()),
            Point::new(vec![0.0; n]),
            dir,
            order,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn euclidean_jet_terminates() {
        let spec = KernelSpec::new(
            Family::EuclideanSq { n: 1 },
            Domain::interval(-2.0, 2.0),
            Domain::interval(-2.0, 2.0),
        )
        .unwrap();
        let slice = SliceSpec::new(
            Point::new(vec![0.5]),
            Point::new(vec![0.0]),
            vec![1.0],
            6,
            1.0,
        )
        .unwrap();
        let jet = jet_propagate(&spec, &slice).unwrap();
        assert_relative_eq!(jet.coeffs[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(jet.coeffs[1], -1.0, epsilon = 1e-15);
        assert_relative_eq!(jet.coeffs[2], 1.0, epsilon = 1e-15);
        for s in 3..=6 {
            assert!(jet.coeffs[s].abs() < 1e-14);
        }
    }

    #[test]
    fn sphere_first_coefficient_is_minus_x1_over_norm() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        let jet = jet_propagate(&spec, &sphere_slice(&[0.3, 0.4], 4)).unwrap();
        // -x1/|x| = -0.3/0.5
        assert_relative_eq!(jet.coeffs[1], -0.6, epsilon = 1e-12);
    }

    #[test]
    fn sphere_second_derivative_closed_form() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        let jet = jet_propagate(&spec, &sphere_slice(&[0.3, 0.4], 4)).unwrap();
        // second derivative = -(sqrt(1-xb^2)/xb)((x1/xb)^2 - 1), xb = 0.5
        let expect = -(0.75f64.sqrt() / 0.5) * ((0.3f64 / 0.5).powi(2) - 1.0);
        assert_relative_eq!(jet.derivative_value(2), expect, epsilon = 1e-10);
        assert_relative_eq!(expect, 3f64.sqrt() * 0.64, epsilon = 1e-12);
    }

    #[test]
    fn dot_exp_neg_matches_analytic_expansion() {
        let spec = KernelSpec::new(
            Family::DotAnalytic {
                h: DotFn::ExpNeg,
                n: 1,
            },
            Domain::interval(0.5, 2.0),
            Domain::interval(-0.5, 0.5),
        )
        .unwrap();
        let slice = SliceSpec::new(
            Point::new(vec![1.0]),
            Point::new(vec![0.0]),
            vec![1.0],
            8,
            0.4,
        )
        .unwrap();
        let jet = jet_propagate(&spec, &slice).unwrap();
        // exp(-t): coeffs (-1)^s/s!
        let mut fact = 1.0;
        for s in 0..=8 {
            if s > 0 {
                fact *= s as f64;
            }
            let expect = if s % 2 == 0 { 1.0 / fact } else { -1.0 / fact };
            assert_relative_eq!(jet.coeffs[s], expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn jets_reject_indicator_kernel() {
        let spec = KernelSpec::with_default_domains(Family::IndicatorExample);
        let slice = SliceSpec::new(
            Point::new(vec![0.3]),
            Point::new(vec![0.5]),
            vec![1.0],
            3,
            0.1,
        )
        .unwrap();
        assert!(matches!(
            jet_propagate(&spec, &slice),
            Err(Error::UnsupportedFamily(_))
        ));
    }

    #[test]
    fn antipodal_configuration_is_singular() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        // x at the chart origin makes z0 = 1 (coincident with y = 0)
        let err = jet_propagate(&spec, &sphere_slice(&[0.0, 0.0], 3));
        assert!(matches!(err, Err(Error::SingularExpansion { .. })));
    }

    #[test]
    fn series_consistency_partial_sum_matches_eval() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesicSq { n: 2 });
        let slice = sphere_slice(&[0.45, 0.5], 12);
        let jet = jet_propagate(&spec, &slice).unwrap();
        for &t in &[-0.05, -0.01, 0.02, 0.05] {
            let direct = slice_value(&spec, &slice, t).unwrap();
            assert_relative_eq!(jet.eval(t), direct, max_relative = 1e-8);
        }
    }

    #[test]
    fn null_example_jet_matches_eval() {
        let spec = KernelSpec::with_default_domains(Family::NullExample);
        let slice = SliceSpec::new(
            Point::new(vec![0.8]),
            Point::new(vec![1.5]),
            vec![1.0],
            10,
            1.0,
        )
        .unwrap();
        let jet = jet_propagate(&spec, &slice).unwrap();
        for &t in &[-0.08, 0.03, 0.09] {
            let direct = slice_value(&spec, &slice, t).unwrap();
            assert_relative_eq!(jet.eval(t), direct, max_relative = 1e-10);
        }
    }

    #[test]
    fn finite_diff_oracle_euclidean_polynomial() {
        let spec = KernelSpec::new(
            Family::EuclideanSq { n: 1 },
            Domain::interval(-2.0, 2.0),
            Domain::interval(-2.0, 2.0),
        )
        .unwrap();
        let slice = SliceSpec::new(
            Point::new(vec![0.3]),
            Point::new(vec![0.1]),
            vec![1.0],
            6,
            1.0,
        )
        .unwrap();
        let report = finite_diff_check(&spec, &slice, 0.5).unwrap();
        assert!(report.max_rel_err < 1e-10, "err {}", report.max_rel_err);
    }

    #[test]
    fn finite_diff_oracle_sphere_sq() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesicSq { n: 2 });
        let slice = sphere_slice(&[0.3, 0.4], 6);
        // sampling radius below the |x|-scale singularity distance
        let report = finite_diff_check(&spec, &slice, 0.42 * 0.5).unwrap();
        assert!(report.max_rel_err < 1e-6, "err {}", report.max_rel_err);
    }

    #[test]
    fn finite_diff_oracle_across_analytic_families() {
        let cases: Vec<(KernelSpec, SliceSpec, f64)> = vec![
            (
                KernelSpec::with_default_domains(Family::CircularSq),
                SliceSpec::new(
                    Point::new(vec![2.0]),
                    Point::new(vec![3.0]),
                    vec![1.0],
                    6,
                    1.0,
                )
                .unwrap(),
                0.5,
            ),
            (
                KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 }),
                sphere_slice(&[0.45, 0.45], 6),
                0.25,
            ),
            (
                KernelSpec::new(
                    Family::DotAnalytic {
                        h: DotFn::Cos,
                        n: 1,
                    },
                    Domain::interval(0.5, 3.0),
                    Domain::interval(-1.0, 1.0),
                )
                .unwrap(),
                SliceSpec::new(
                    Point::new(vec![2.0]),
                    Point::new(vec![0.1]),
                    vec![1.0],
                    6,
                    0.8,
                )
                .unwrap(),
                0.5,
            ),
            (
                KernelSpec::new(
                    Family::DotAnalytic {
                        h: DotFn::Arccos,
                        n: 1,
                    },
                    Domain::interval(0.1, 0.9),
                    Domain::interval(-0.9, 0.9),
                )
                .unwrap(),
                SliceSpec::new(
                    Point::new(vec![0.7]),
                    Point::new(vec![0.2]),
                    vec![1.0],
                    6,
                    0.6,
                )
                .unwrap(),
                0.4,
            ),
            (
                KernelSpec::with_default_domains(Family::NullExample),
                SliceSpec::new(
                    Point::new(vec![0.6]),
                    Point::new(vec![2.0]),
                    vec![1.0],
                    6,
                    1.0,
                )
                .unwrap(),
                0.6,
            ),
        ];
        for (spec, slice, h) in cases {
            let report = finite_diff_check(&spec, &slice, h).unwrap();
            assert!(
                report.max_rel_err < 1e-6,
                "{:?}: err {}",
                spec.family,
                report.max_rel_err
            );
        }
    }

    #[test]
    fn odd_coefficients_vanish_on_the_x1_zero_section() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        let report = odd_even_structure(&spec, &Point::new(vec![0.0, 0.5]), 7).unwrap();
        assert!(report.max_odd_abs < 1e-10, "odd {}", report.max_odd_abs);
    }

    #[test]
    fn odd_structure_contrast_case_off_section() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        let report = odd_even_structure(&spec, &Point::new(vec![0.3, 0.4]), 3).unwrap();
        assert_relative_eq!(report.jet.coeffs[1], -0.6, epsilon = 1e-12);
    }

    #[test]
    fn odd_structure_order_zero_is_trivial() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        let report = odd_even_structure(&spec, &Point::new(vec![0.0, 0.5]), 0).unwrap();
        assert_eq!(report.odd_coeffs.len(), 0);
        assert_eq!(report.max_odd_abs, 0.0);
    }

    #[test]
    fn even_restrictions_match_closed_forms() {
        // On the x1 = 0 section with t = sqrt(1-|x|^2)/|x|, the second
        // y1-derivative of arccos(p.q) is exactly t and the fourth is
        // exactly 3t - 3t^3 (degrees 1 and 3 in t).
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesic { n: 2 });
        for x2 in [0.4, 0.55, 0.7, 0.85] {
            let report = odd_even_structure(&spec, &Point::new(vec![0.0, x2]), 4).unwrap();
            let t = (1.0 - x2 * x2).sqrt() / x2;
            assert_relative_eq!(report.jet.derivative_value(2), t, max_relative = 1e-10);
            assert_relative_eq!(
                report.jet.derivative_value(4),
                3.0 * t - 3.0 * t * t * t,
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn poly_fit_exact_cubic() {
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let t = 0.3 + 0.1 * i as f64;
                (t, t * t * t)
            })
            .collect();
        let fit = poly_fit_in_t(&samples, 3).unwrap();
        assert!(fit.max_residual < 1e-12);
        assert_relative_eq!(fit.coefficients[3], 1.0, epsilon = 1e-9);
        assert!(fit.coefficients[1].abs() < 1e-9);
    }

    #[test]
    fn poly_fit_degree_separation() {
        // 3h - 3h^3 needs degree 3; degree 2 must fail loudly
        let samples: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let t = 0.5 + 0.1 * i as f64;
                (t, 3.0 * t - 3.0 * t * t * t)
            })
            .collect();
        let good = poly_fit_in_t(&samples, 3).unwrap();
        assert!(good.max_residual < 1e-10);
        let bad = poly_fit_in_t(&samples, 2).unwrap();
        assert!(bad.max_residual > 1e-1, "residual {}", bad.max_residual);
    }

    #[test]
    fn poly_fit_requires_enough_samples() {
        let samples = vec![(0.0, 1.0), (1.0, 2.0), (2.0, 3.0)];
        assert!(poly_fit_in_t(&samples, 3).is_err());
    }
}
