//! Quadrature discretization of the first-kind integral equation, forward
//! application of the operator, direct and regularized inversion, the
//! local-window recovery experiment, and the null-vector check for the
//! non-injective full-rank kernel.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domains::{derive_stream, uniform_partition, Domain, Partition, Point};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::rank::TolerancePolicy;

pub mod quad;

/// Cells of the composite Gauss rule used by the continuous forward map.
/// Independent of any k-cell discretization, so no inverse crimes.
const FORWARD_CELLS: usize = 16;

/// Relative tolerance of the forward-map self-convergence check.
pub const QUAD_SELF_CHECK_TOL: f64 = 1e-10;

/// The discretized system: A[i][j] = ψ(x_i, y_j) vol(V_j), with the inverse
/// cell volumes W on the side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSystem {
    pub xs: Vec<Point>,
    pub ys: Vec<Point>,
    pub volumes: Vec<f64>,
    /// k x k matrix including the volume factors.
    pub a: Vec<Vec<f64>>,
    /// Diagonal weights 1/vol(V_j).
    pub w: Vec<f64>,
}

impl DiscreteSystem {
    pub fn size(&self) -> usize {
        self.xs.len()
    }

    /// The volume-inclusive matrix as nalgebra storage.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |i, j| self.a[i][j])
    }

    /// The bare kernel matrix {ψ(x_i, y_j)} = A diag(W).
    pub fn kernel_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.size(), self.size(), |i, j| self.a[i][j] * self.w[j])
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.matrix().svd(false, false).singular_values;
        let smax = sv.max();
        let smin = sv.min();
        if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        }
    }
}

/// Assembles the discrete system from partitions of U and V, taking each
/// cell representative as the node.
pub fn assemble(
    spec: &KernelSpec,
    part_u: &Partition,
    part_v: &Partition,
) -> Result<DiscreteSystem> {
    if part_u.len() != part_v.len() {
        return Err(Error::InvalidInput(format!(
            "partitions must have equal cell counts, got {} and {}",
            part_u.len(),
            part_v.len()
        )));
    }
    assemble_with_nodes(spec, part_u.reps.clone(), part_v)
}

/// Assembles the system with explicit x-nodes (used by the window-restricted
/// recovery experiment) and a partition of V.
pub fn assemble_with_nodes(
    spec: &KernelSpec,
    xs: Vec<Point>,
    part_v: &Partition,
) -> Result<DiscreteSystem> {
    if xs.len() != part_v.len() {
        return Err(Error::InvalidInput(format!(
            "need as many x-nodes as V-cells: {} vs {}",
            xs.len(),
            part_v.len()
        )));
    }
    let ys = part_v.reps.clone();
    let volumes = part_v.volumes.clone();
    let mut a = Vec::with_capacity(xs.len());
    for x in &xs {
        let mut row = Vec::with_capacity(ys.len());
        for (y, vol) in ys.iter().zip(&volumes) {
            row.push(kernels::eval(spec, x, y)? * vol);
        }
        a.push(row);
    }
    let w = volumes.iter().map(|v| 1.0 / v).collect();
    Ok(DiscreteSystem {
        xs,
        ys,
        volumes,
        a,
        w,
    })
}

/// Test inputs f for the recovery experiments; all are defined on a 1-d V.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestFunction {
    /// exp(-rate * y)
    ExpDecay { rate: f64 },
    /// c_0 + c_1 y + c_2 y^2 + ...
    Polynomial { coeffs: Vec<f64> },
    /// exp(-(y - center)^2 / (2 width^2))
    GaussianBump { center: f64, width: f64 },
}

impl TestFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            TestFunction::ExpDecay { rate } => (-rate * y).exp(),
            TestFunction::Polynomial { coeffs } => {
                coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
            }
            TestFunction::GaussianBump { center, width } => {
                let z = (y - center) / width;
                (-0.5 * z * z).exp()
            }
        }
    }
}

/// g(x) = ∫_V ψ(x, y) f(y) dy at each target, by composite Gauss-Legendre
/// on bounded 1-d V and exponentially weighted (Gauss-Laguerre) quadrature
/// on a half-line V.
pub fn forward_apply(
    spec: &KernelSpec,
    f: &TestFunction,
    targets: &[Point],
    quad_nodes: usize,
) -> Result<Vec<f64>> {
    if quad_nodes < 2 {
        return Err(Error::InvalidInput("quad_nodes must be >= 2".into()));
    }
    match &spec.domain_v {
        Domain::OpenBox { lo, hi } if lo.len() == 1 => {
            let rule = quad::GaussLegendre::new(quad_nodes);
            let mut out = Vec::with_capacity(targets.len());
            for x in targets {
                let mut total = 0.0;
                for c in 0..FORWARD_CELLS {
                    let a = lo[0] + (hi[0] - lo[0]) * c as f64 / FORWARD_CELLS as f64;
                    let b = lo[0] + (hi[0] - lo[0]) * (c + 1) as f64 / FORWARD_CELLS as f64;
                    total += rule.try_integrate(a, b, |y| {
                        kernels::eval_unchecked(spec, x, &Point::new(vec![y]))
                            .map(|v| v * f.eval(y))
                    })?;
                }
                out.push(total);
            }
            Ok(out)
        }
        Domain::HalfLine { origin, .. } => {
            let rule = quad::GaussLaguerre::new(quad_nodes.min(quad::MAX_LAGUERRE_NODES))?;
            let mut out = Vec::with_capacity(targets.len());
            for x in targets {
                out.push(rule.try_integrate_halfline(|u| {
                    let y = origin + u;
                    kernels::eval_unchecked(spec, x, &Point::new(vec![y])).map(|v| v * f.eval(y))
                })?);
            }
            Ok(out)
        }
        other => Err(Error::InvalidInput(format!(
            "forward_apply supports 1-d box or half-line V, got {other:?}"
        ))),
    }
}

/// Forward map with the self-convergence check: doubling the node count must
/// move the result by less than [`QUAD_SELF_CHECK_TOL`] relative.
pub fn forward_apply_checked(
    spec: &KernelSpec,
    f: &TestFunction,
    targets: &[Point],
    quad_nodes: usize,
) -> Result<Vec<f64>> {
    let coarse = forward_apply(spec, f, targets, quad_nodes)?;
    let fine = forward_apply(spec, f, targets, quad_nodes * 2)?;
    let scale = fine.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    for (c, fv) in coarse.iter().zip(&fine) {
        let rel = (c - fv).abs() / scale;
        if rel > QUAD_SELF_CHECK_TOL {
            return Err(Error::QuadratureNotConverged {
                rel_change: rel,
                nodes: quad_nodes * 2,
            });
        }
    }
    Ok(fine)
}

/// Direct solve f̂ = W A_k^{-1} g (equivalently A^{-1} g on the
/// volume-inclusive matrix). Rejects systems that are rank-deficient under
/// the policy. Returns the node values f̂ and the relative residual.
pub fn solve_direct(
    sys: &DiscreteSystem,
    g: &[f64],
    policy: &TolerancePolicy,
) -> Result<(Vec<f64>, f64)> {
    let k = sys.size();
    let a = sys.matrix();
    let (rank, _) = crate::rank::numerical_rank(&a, policy);
    if rank < k {
        return Err(Error::SingularSystem { rank, size: k });
    }
    let svd = a.clone().svd(true, true);
    let rhs = DVector::from_column_slice(g);
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::SingularSystem { rank, size: k })?;
    let residual = (&a * &sol - &rhs).norm() / rhs.norm().max(1e-300);
    Ok((sol.iter().copied().collect(), residual))
}

/// Truncated-SVD solve on the bare kernel matrix, weighted back by W.
/// Always defined; returns (f̂, relative residual).
pub fn solve_tsvd(sys: &DiscreteSystem, g: &[f64], r: usize) -> Result<(Vec<f64>, f64)> {
    let k = sys.size();
    if r < 1 || r > k {
        return Err(Error::InvalidInput(format!(
            "retained modes r = {r} must lie in 1..={k}"
        )));
    }
    let ak = sys.kernel_matrix();
    let svd = ak.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let rhs = DVector::from_column_slice(g);
    let mut c = DVector::zeros(k);
    for i in 0..r {
        let ui = u.column(i);
        let coef = ui.dot(&rhs) / svd.singular_values[i];
        c += vt.row(i).transpose() * coef;
    }
    let residual = (&ak * &c - &rhs).norm() / rhs.norm().max(1e-300);
    let f_hat: Vec<f64> = c.iter().zip(&sys.w).map(|(ci, wi)| ci * wi).collect();
    Ok((f_hat, residual))
}

/// Tikhonov solve: c = argmin |A_k c - g|^2 + λ^2 |c|^2, then f̂ = W c.
/// Returns (f̂, relative residual).
pub fn solve_tikhonov(sys: &DiscreteSystem, g: &[f64], lambda: f64) -> Result<(Vec<f64>, f64)> {
    if lambda.is_nan() || lambda <= 0.0 {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    let k = sys.size();
    let ak = sys.kernel_matrix();
    let svd = ak.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let rhs = DVector::from_column_slice(g);
    let mut c = DVector::zeros(k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > 0.0 {
            let filter = s / (s * s + lambda * lambda);
            let coef = u.column(i).dot(&rhs) * filter;
            c += vt.row(i).transpose() * coef;
        }
    }
    let residual = (&ak * &c - &rhs).norm() / rhs.norm().max(1e-300);
    let f_hat: Vec<f64> = c.iter().zip(&sys.w).map(|(ci, wi)| ci * wi).collect();
    Ok((f_hat, residual))
}

/// Inversion method selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Direct,
    Tsvd {
        r: usize,
    },
    Tikhonov {
        lambda: f64,
    },
    /// Sweeps λ over [`LAMBDA_SWEEP`] points in [1e-12, 1]. With a declared
    /// noise level the discrepancy principle picks λ; otherwise (calibration
    /// mode) the sweep keeps the λ minimizing the recovery error.
    TikhonovSwept,
}

/// Number of sweep points, logarithmic in [1e-12, 1].
pub const LAMBDA_SWEEP: usize = 25;

/// Safety factor of the discrepancy principle: pick the largest λ whose
/// relative residual stays below factor * noise level.
const DISCREPANCY_FACTOR: f64 = 2.0;

fn lambda_grid() -> Vec<f64> {
    (0..LAMBDA_SWEEP)
        .map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / (LAMBDA_SWEEP - 1) as f64))
        .collect()
}

/// Outcome of a recovery experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub k: usize,
    pub method: String,
    pub condition_number: f64,
    /// |A f̂ - g| / |g|.
    pub residual: f64,
    /// Relative L2 error of the piecewise-constant f̂ against the truth on V.
    pub recovery_error: f64,
    pub window: Domain,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub noise_rel: Option<f64>,
    /// Measurement nodes in the window and the data g at them.
    pub x_nodes: Vec<f64>,
    pub g: Vec<f64>,
    /// Cell representatives in V and the reconstruction at them.
    pub y_nodes: Vec<f64>,
    pub f_hat: Vec<f64>,
}

/// Relative L2 distance between the piecewise-constant reconstruction and
/// the truth, integrated cell by cell with a 32-point Gauss rule.
pub fn recovery_error(part_v: &Partition, f_hat: &[f64], f_true: &TestFunction) -> f64 {
    let rule = quad::GaussLegendre::new(32);
    let mut num = 0.0;
    let mut den = 0.0;
    for (cell, fh) in part_v.cells.iter().zip(f_hat) {
        let (a, b) = (cell.lo[0], cell.hi[0]);
        num += rule.integrate(a, b, |y| {
            let d = fh - f_true.eval(y);
            d * d
        });
        den += rule.integrate(a, b, |y| {
            let v = f_true.eval(y);
            v * v
        });
    }
    (num / den.max(1e-300)).sqrt()
}

/// Local-window recovery experiment.
///
/// Draws k measurement nodes stratified over a partition of `window` (one
/// node per window cell, mirroring the x_i ∈ U_i setup of the discrete
/// system), builds g with the continuous forward map, partitions V into k
/// cells, assembles the window-restricted system and solves it.
#[allow(clippy::too_many_arguments)]
pub fn local_recover(
    spec: &KernelSpec,
    f_true: &TestFunction,
    window: &Domain,
    k: usize,
    method: Method,
    quad_nodes: usize,
    seed: u64,
    noise_rel: Option<f64>,
) -> Result<InversionReport> {
    if !spec.domain_u.contains_domain(window) {
        return Err(Error::SubsetNotContained(format!(
            "window {window:?} not inside U = {:?}",
            spec.domain_u
        )));
    }
    if window.dim() != 1 {
        return Err(Error::InvalidInput(
            "local_recover expects a 1-d window".into(),
        ));
    }
    let part_w = uniform_partition(window, k);
    let xs: Vec<Point> = part_w
        .cells
        .iter()
        .enumerate()
        .map(|(i, cell)| {
            let mut rng = derive_stream(seed, i as u64);
            cell.as_domain().sample(&mut rng)
        })
        .collect();
    let mut g = forward_apply(spec, f_true, &xs, quad_nodes)?;
    if let Some(eps) = noise_rel {
        let mut rng = derive_stream(seed, 1 << 40);
        for gi in &mut g {
            let z: f64 = StandardNormal.sample(&mut rng);
            *gi *= 1.0 + eps * z;
        }
    }
    let part_v = uniform_partition(&spec.domain_v, k);
    let sys = assemble_with_nodes(spec, xs, &part_v)?;
    let cond = sys.condition_number();

    let (f_hat, residual, method_desc, lambda) = match method {
        Method::Direct => {
            let (f, r) = solve_direct(&sys, &g, &TolerancePolicy::default())?;
            (f, r, "direct".to_string(), None)
        }
        Method::Tsvd { r } => {
            let (f, res) = solve_tsvd(&sys, &g, r)?;
            (f, res, format!("tsvd(r={r})"), None)
        }
        Method::Tikhonov { lambda } => {
            let (f, r) = solve_tikhonov(&sys, &g, lambda)?;
            (f, r, format!("tikhonov(lambda={lambda:e})"), Some(lambda))
        }
        Method::TikhonovSwept => {
            let mut best: Option<(f64, f64, f64, Vec<f64>)> = None;
            match noise_rel {
                Some(eps) => {
                    // discrepancy principle: largest λ with residual within
                    // the noise floor; fall back to the smallest residual
                    let mut fallback: Option<(f64, f64, f64, Vec<f64>)> = None;
                    for lam in lambda_grid() {
                        let (f, r) = solve_tikhonov(&sys, &g, lam)?;
                        if fallback.as_ref().is_none_or(|(_, fr, _, _)| r < *fr) {
                            fallback = Some((lam, r, 0.0, f.clone()));
                        }
                        if r <= DISCREPANCY_FACTOR * eps {
                            best = Some((lam, r, 0.0, f));
                        }
                    }
                    if best.is_none() {
                        best = fallback;
                    }
                }
                None => {
                    // calibration mode: pick the λ minimizing recovery error
                    for lam in lambda_grid() {
                        let (f, r) = solve_tikhonov(&sys, &g, lam)?;
                        let err = recovery_error(&part_v, &f, f_true);
                        if best.as_ref().is_none_or(|(_, _, be, _)| err < *be) {
                            best = Some((lam, r, err, f));
                        }
                    }
                }
            }
            let (lam, r, _, f) = best.unwrap();
            (f, r, format!("tikhonov-swept(lambda*={lam:e})"), Some(lam))
        }
    };
    let rec_err = recovery_error(&part_v, &f_hat, f_true);
    Ok(InversionReport {
        k,
        method: method_desc,
        condition_number: cond,
        residual,
        recovery_error: rec_err,
        window: window.clone(),
        lambda,
        seed,
        noise_rel,
        x_nodes: sys.xs.iter().map(|p| p.coords[0]).collect(),
        g,
        y_nodes: sys.ys.iter().map(|p| p.coords[0]).collect(),
        f_hat,
    })
}

/// Per-term and numeric results of the null-vector check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullMomentReport {
    /// s -> whether (2s)!/(2s) - (2s-1)! is exactly zero (big-integer).
    pub symbolic_zero: Vec<bool>,
    pub symbolic_terms: usize,
    /// (x, value) samples of the series image of e^{-y} under the operator.
    pub numeric_values: Vec<(f64, f64)>,
    /// max - min of the numeric values over the grid.
    pub constancy_gap: f64,
    /// The measured constant (mean of the numeric values). The x-dependent
    /// terms cancel exactly; the surviving constant-1 term integrates to 1,
    /// so this reports ~1 rather than the literal 0.
    pub constant_estimate: f64,
    pub numeric_terms: usize,
    pub quad_nodes: usize,
}

impl NullMomentReport {
    pub fn all_zero(&self) -> bool {
        self.symbolic_zero.iter().all(|z| *z)
    }
}

fn big_factorial(n: usize) -> BigInt {
    let mut acc = BigInt::from(1);
    for i in 2..=n {
        acc *= i;
    }
    acc
}

/// Verifies the term-wise cancellation ∫ (y^{2s}/(2s) - y^{2s-1}) e^{-y} dy
/// = (2s-1)! - (2s-1)! = 0 exactly in integer arithmetic for s <= s_max,
/// and measures the constancy of the quadrature image over the x grid.
///
/// The numeric part applies the quadrature to each series term separately
/// (the series-integral swap the construction itself relies on): node-wise
/// integration diverges for x > 0, where the kernel grows like exp(x y^2).
/// `numeric_terms` stays small (default 6) because the cancellation
/// (2s)!/(2s) - (2s-1)! is computed in floating point with absolute error
/// on the order of (2s-1)! * eps.
pub fn null_moment_check(
    x_grid: &[f64],
    s_max: usize,
    numeric_terms: usize,
    quad_nodes: usize,
) -> Result<NullMomentReport> {
    if s_max < 1 {
        return Err(Error::InvalidInput("s_max must be >= 1".into()));
    }
    if x_grid.is_empty() {
        return Err(Error::InvalidInput("x grid must be nonempty".into()));
    }
    let mut symbolic_zero = Vec::with_capacity(s_max);
    for s in 1..=s_max {
        // (2s)!/(2s) - (2s-1)! with exact integers
        let lhs = big_factorial(2 * s) / BigInt::from(2 * s);
        let rhs = big_factorial(2 * s - 1);
        symbolic_zero.push(lhs == rhs);
    }

    let rule = quad::GaussLaguerre::new(quad_nodes)?;
    // m_s = Σ_i w_i (y_i^{2s}/(2s) - y_i^{2s-1}), compensated summation
    let mut moments = Vec::with_capacity(numeric_terms);
    for s in 1..=numeric_terms {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for (y, w) in rule.nodes.iter().zip(&rule.weights) {
            let v = w * (y.powi(2 * s as i32) / (2.0 * s as f64) - y.powi(2 * s as i32 - 1));
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        moments.push(sum + comp);
    }
    let weight_total: f64 = rule.weights.iter().sum();

    let mut numeric_values = Vec::with_capacity(x_grid.len());
    let mut vmin = f64::INFINITY;
    let mut vmax = f64::NEG_INFINITY;
    let mut vsum = 0.0;
    for &x in x_grid {
        let mut val = weight_total; // the constant-1 term of the kernel
        let mut xpow = 1.0;
        for (s, m) in moments.iter().enumerate() {
            xpow *= x / (s + 1) as f64;
            val += xpow * m;
        }
        numeric_values.push((x, val));
        vmin = vmin.min(val);
        vmax = vmax.max(val);
        vsum += val;
    }
    Ok(NullMomentReport {
        symbolic_zero,
        symbolic_terms: s_max,
        constancy_gap: vmax - vmin,
        constant_estimate: vsum / x_grid.len() as f64,
        numeric_values,
        numeric_terms,
        quad_nodes,
    })
}
