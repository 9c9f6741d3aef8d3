//! Numerical rank of kernel matrices and the statistical probes built on it:
//! Monte Carlo full-rank estimation, finite-rank plateau detection, and the
//! constrained witness search behind the local-linear-independence probe.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domains::{derive_stream, Domain, Point};
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};
use crate::series::{jet_propagate, SliceSpec};

/// Relative singular-value threshold for numerical rank.
///
/// The default 1e-10 separates exact finite-rank deficiency (trailing
/// singular-value ratios near machine epsilon) from the garden-variety
/// ill-conditioning of analytic kernels at moderate k. An absolute floor
/// classifies the zero matrix as rank 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TolerancePolicy {
    pub rel_threshold: f64,
}

/// Absolute floor below which singular values never count toward rank.
pub const ABS_FLOOR: f64 = 1e-300;

/// Cap on the matrix size of the Monte Carlo probes: past this, double
/// precision cannot tell analytic-kernel ill-conditioning from true
/// deficiency, so larger requests are rejected rather than answered badly.
pub const MC_K_CAP: usize = 50;

impl Default for TolerancePolicy {
    fn default() -> Self {
        TolerancePolicy {
            rel_threshold: 1e-10,
        }
    }
}

impl TolerancePolicy {
    pub fn new(rel_threshold: f64) -> Self {
        assert!(
            rel_threshold > 0.0 && rel_threshold < 1.0,
            "relative threshold must lie in (0, 1)"
        );
        TolerancePolicy { rel_threshold }
    }
}

/// Numerical rank and the (descending) singular values of a matrix.
pub fn numerical_rank(matrix: &DMatrix<f64>, policy: &TolerancePolicy) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = matrix
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let smax = sv.first().copied().unwrap_or(0.0);
    let cut = (policy.rel_threshold * smax).max(ABS_FLOOR);
    let rank = sv.iter().filter(|s| **s > cut).count();
    (rank, sv)
}

/// Outcome of a Monte Carlo full-rank probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub k: usize,
    pub trials: u64,
    pub deficiency_count: u64,
    /// (p5, p50, p95) of sigma_min/sigma_max across trials.
    pub singular_min_quantiles: (f64, f64, f64),
    pub seed: u64,
    pub policy: TolerancePolicy,
}

impl RankReport {
    pub fn deficiency_fraction(&self) -> f64 {
        self.deficiency_count as f64 / self.trials as f64
    }
}

fn to_dmatrix(m: &kernels::KernelMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m.entries[i][j])
}

fn nearest_rank_quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}

/// Draws k x-points and k y-points per trial (from the kernel domains, or
/// from the given subsets in Definition-3 style), assembles the kernel
/// matrix and counts numerically rank-deficient outcomes.
///
/// Trial `t` uses the RNG stream (seed, t): results are reproducible and
/// order-independent.
pub fn fullrank_mc(
    spec: &KernelSpec,
    k: usize,
    trials: u64,
    seed: u64,
    policy: &TolerancePolicy,
    subsets_u: Option<&[Domain]>,
    subsets_v: Option<&[Domain]>,
) -> Result<RankReport> {
    assert!(k >= 1 && trials >= 1);
    if k > MC_K_CAP {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the Monte Carlo cap {MC_K_CAP}"
        )));
    }
    for (subsets, domain, side) in [
        (subsets_u, &spec.domain_u, "U"),
        (subsets_v, &spec.domain_v, "V"),
    ] {
        if let Some(subs) = subsets {
            if subs.len() != k {
                return Err(Error::InvalidInput(format!(
                    "expected {k} subsets of {side}, got {}",
                    subs.len()
                )));
            }
            for sub in subs {
                if !domain.contains_domain(sub) {
                    return Err(Error::SubsetNotContained(format!(
                        "{sub:?} not inside {side} = {domain:?}"
                    )));
                }
            }
        }
    }

    let mut deficiency_count = 0u64;
    let mut ratios = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = derive_stream(seed, t);
        let xs: Vec<Point> = (0..k)
            .map(|i| match subsets_u {
                Some(subs) => subs[i].sample(&mut rng),
                None => spec.domain_u.sample(&mut rng),
            })
            .collect();
        let ys: Vec<Point> = (0..k)
            .map(|j| match subsets_v {
                Some(subs) => subs[j].sample(&mut rng),
                None => spec.domain_v.sample(&mut rng),
            })
            .collect();
        let m = kernels::kernel_matrix(spec, &xs, &ys)?;
        let (rank, sv) = numerical_rank(&to_dmatrix(&m), policy);
        if rank < k {
            deficiency_count += 1;
        }
        let smax = sv[0];
        ratios.push(if smax > 0.0 { sv[k - 1] / smax } else { 0.0 });
    }
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(RankReport {
        k,
        trials,
        deficiency_count,
        singular_min_quantiles: (
            nearest_rank_quantile(&ratios, 0.05),
            nearest_rank_quantile(&ratios, 0.50),
            nearest_rank_quantile(&ratios, 0.95),
        ),
        seed,
        policy: *policy,
    })
}

/// Estimate of a kernel's rank from sampled matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RankEstimate {
    Finite(usize),
    /// No plateau below `k_max` was observed.
    AtLeast(usize),
}

impl std::fmt::Display for RankEstimate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RankEstimate::Finite(r) => write!(f, "{r}"),
            RankEstimate::AtLeast(k) => write!(f, ">= {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteRankReport {
    pub estimate: RankEstimate,
    /// profile[k-1] = max rank observed over the trials at size k.
    pub profile: Vec<usize>,
    pub k_max: usize,
    pub trials_per_k: u64,
    pub seed: u64,
    pub policy: TolerancePolicy,
}

/// Minimum number of consecutive sizes a plateau must hold for, and the
/// minimum trials per size for the plateau to be trusted.
const PLATEAU_SIZES: usize = 3;
const PLATEAU_MIN_TRIALS: u64 = 20;

/// Records the maximum observed rank at each matrix size k = 1..k_max.
/// The estimate is the plateau value r if rank stalls at r < k for every
/// oversized k (at least [`PLATEAU_SIZES`] of them), else `AtLeast(k_max)`.
pub fn finite_rank_estimate(
    spec: &KernelSpec,
    k_max: usize,
    trials_per_k: u64,
    seed: u64,
    policy: &TolerancePolicy,
) -> Result<FiniteRankReport> {
    assert!(k_max >= 2, "k_max must be >= 2");
    if k_max > MC_K_CAP {
        return Err(Error::InvalidInput(format!(
            "k_max = {k_max} exceeds the Monte Carlo cap {MC_K_CAP}"
        )));
    }
    let mut profile = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mut best = 0usize;
        for t in 0..trials_per_k {
            let mut rng = derive_stream(seed, ((k as u64) << 32) | t);
            let xs: Vec<Point> = (0..k).map(|_| spec.domain_u.sample(&mut rng)).collect();
            let ys: Vec<Point> = (0..k).map(|_| spec.domain_v.sample(&mut rng)).collect();
            let m = kernels::kernel_matrix(spec, &xs, &ys)?;
            let (rank, _) = numerical_rank(&to_dmatrix(&m), policy);
            best = best.max(rank);
            if best == k {
                break;
            }
        }
        profile.push(best);
    }
    let r = profile[k_max - 1];
    let plateau_ok = r < k_max
        && k_max - r >= PLATEAU_SIZES
        && trials_per_k >= PLATEAU_MIN_TRIALS
        && ((r + 1)..=k_max).all(|k| profile[k - 1] == r);
    let estimate = if plateau_ok {
        RankEstimate::Finite(r)
    } else {
        RankEstimate::AtLeast(k_max)
    };
    Ok(FiniteRankReport {
        estimate,
        profile,
        k_max,
        trials_per_k,
        seed,
        policy: *policy,
    })
}

/// A finite family of real-valued functions used by the independence probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FunctionFamily {
    /// Multivariate monomials x^s for the given multi-indices.
    Powers {
        exponents: Vec<Vec<u32>>,
        domain: Domain,
    },
    /// Translated monomials (x - a_l)^{s_l}.
    TranslatedPowers {
        shifts: Vec<Vec<f64>>,
        exponents: Vec<Vec<u32>>,
        domain: Domain,
    },
    /// f_s(x) = exp(-s/x) for x > 0 and 0 for x <= 0: linearly independent
    /// on the positive axis, identically dependent on the negative one.
    ExpNegSOverX { indices: Vec<u32>, domain: Domain },
    /// y -> ψ(x_i, y) for frozen first arguments.
    KernelRows { spec: KernelSpec, xs: Vec<Point> },
    /// Taylor coefficient functions x -> c_s(x) of a kernel along a fixed
    /// slice (chart coordinates for the sphere families).
    TaylorFunctions {
        spec: KernelSpec,
        center: Point,
        dir: Vec<f64>,
        orders: Vec<usize>,
        domain: Domain,
    },
}

impl FunctionFamily {
    pub fn len(&self) -> usize {
        match self {
            FunctionFamily::Powers { exponents, .. } => exponents.len(),
            FunctionFamily::TranslatedPowers { exponents, .. } => exponents.len(),
            FunctionFamily::ExpNegSOverX { indices, .. } => indices.len(),
            FunctionFamily::KernelRows { xs, .. } => xs.len(),
            FunctionFamily::TaylorFunctions { orders, .. } => orders.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The domain the family's argument ranges over.
    pub fn domain(&self) -> &Domain {
        match self {
            FunctionFamily::Powers { domain, .. } => domain,
            FunctionFamily::TranslatedPowers { domain, .. } => domain,
            FunctionFamily::ExpNegSOverX { domain, .. } => domain,
            FunctionFamily::KernelRows { spec, .. } => &spec.domain_v,
            FunctionFamily::TaylorFunctions { domain, .. } => domain,
        }
    }

    /// Evaluates every member at `p`.
    pub fn eval_all(&self, p: &Point) -> Result<Vec<f64>> {
        match self {
            FunctionFamily::Powers { exponents, .. } => {
                Ok(exponents.iter().map(|e| monomial(&p.coords, e)).collect())
            }
            FunctionFamily::TranslatedPowers {
                shifts, exponents, ..
            } => Ok(shifts
                .iter()
                .zip(exponents)
                .map(|(a, e)| {
                    let shifted: Vec<f64> = p.coords.iter().zip(a).map(|(c, s)| c - s).collect();
                    monomial(&shifted, e)
                })
                .collect()),
            FunctionFamily::ExpNegSOverX { indices, .. } => {
                let x = p.coords[0];
                Ok(indices
                    .iter()
                    .map(|s| {
                        if x > 0.0 {
                            (-(*s as f64) / x).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect())
            }
            FunctionFamily::KernelRows { spec, xs } => {
                xs.iter().map(|x| kernels::eval(spec, x, p)).collect()
            }
            FunctionFamily::TaylorFunctions {
                spec,
                center,
                dir,
                orders,
                ..
            } => {
                let max_order = orders.iter().copied().max().unwrap_or(0);
                let slice = SliceSpec::new(p.clone(), center.clone(), dir.clone(), max_order, 1.0)?;
                let jet = jet_propagate(spec, &slice)?;
                Ok(orders.iter().map(|s| jet.coeffs[*s]).collect())
            }
        }
    }
}

fn monomial(coords: &[f64], exponents: &[u32]) -> f64 {
    coords
        .iter()
        .zip(exponents)
        .map(|(c, e)| c.powi(*e as i32))
        .product()
}

/// Result of the greedy witness search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SearchOutcome {
    /// Points x_j in U_j with rank({f_i(x_j)}) = k.
    Witness {
        points: Vec<Point>,
        sigma_min_ratio: f64,
    },
    /// No full-rank sample found within the budget; absence of a witness is
    /// the local-dependence signal, not an error.
    Failure { best_rank: usize },
}

/// Greedy incremental search for points x_j in U_j making {f_i(x_j)} full
/// rank: each step draws `budget` candidates from its subset (stream
/// (seed, j), so enlarging the budget extends the same candidate sequence)
/// and keeps the one maximizing the smallest singular value of the growing
/// matrix.
pub fn constrained_fullrank_search(
    family: &FunctionFamily,
    subsets: &[Domain],
    budget: usize,
    seed: u64,
    policy: &TolerancePolicy,
) -> Result<SearchOutcome> {
    let k = family.len();
    if subsets.len() != k {
        return Err(Error::InvalidInput(format!(
            "need one subset per family member: family has {k}, got {}",
            subsets.len()
        )));
    }
    assert!(budget >= 1);
    for sub in subsets {
        if !family.domain().contains_domain(sub) {
            return Err(Error::SubsetNotContained(format!(
                "{sub:?} not inside family domain {:?}",
                family.domain()
            )));
        }
    }

    let mut chosen_cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen_points: Vec<Point> = Vec::with_capacity(k);
    for (j, subset) in subsets.iter().enumerate() {
        let mut rng = derive_stream(seed, j as u64);
        let mut best: Option<(f64, Point, Vec<f64>)> = None;
        for _ in 0..budget {
            let cand = subset.sample(&mut rng);
            let col = family.eval_all(&cand)?;
            let mut m = DMatrix::<f64>::zeros(k, j + 1);
            for (c, colv) in chosen_cols.iter().chain(std::iter::once(&col)).enumerate() {
                for i in 0..k {
                    m[(i, c)] = colv[i];
                }
            }
            let sv = m.svd(false, false).singular_values;
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if best.as_ref().is_none_or(|(b, _, _)| smin > *b) {
                best = Some((smin, cand, col));
            }
        }
        let (_, point, col) = best.unwrap();
        chosen_points.push(point);
        chosen_cols.push(col);
    }

    let mut m = DMatrix::<f64>::zeros(k, k);
    for (c, colv) in chosen_cols.iter().enumerate() {
        for i in 0..k {
            m[(i, c)] = colv[i];
        }
    }
    let (rank, sv) = numerical_rank(&m, policy);
    if rank == k {
        let ratio = if sv[0] > 0.0 { sv[k - 1] / sv[0] } else { 0.0 };
        Ok(SearchOutcome::Witness {
            points: chosen_points,
            sigma_min_ratio: ratio,
        })
    } else {
        Ok(SearchOutcome::Failure { best_rank: rank })
    }
}

/// Verdict of the local-linear-independence probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LliVerdict {
    /// A full-rank witness inside the window certifies the necessary
    /// condition for local linear independence on that window.
    WitnessFound,
    /// Evidence (not proof) of local dependence on the window.
    NoWitnessInBudget,
}

/// Probes local linear independence on a single window: all k subsets of the
/// witness search coincide with the window.
pub fn lli_probe(
    family: &FunctionFamily,
    window: &Domain,
    k: usize,
    budget: usize,
    seed: u64,
    policy: &TolerancePolicy,
) -> Result<LliVerdict> {
    if k != family.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} must equal the family size {}",
            family.len()
        )));
    }
    let subsets = vec![window.clone(); k];
    match constrained_fullrank_search(family, &subsets, budget, seed, policy)? {
        SearchOutcome::Witness { .. } => Ok(LliVerdict::WitnessFound),
        SearchOutcome::Failure { .. } => Ok(LliVerdict::NoWitnessInBudget),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{DotFn, Family};
    use proptest::prelude::*;

    #[test]
    fn rank_of_identity_and_ones() {
        let policy = TolerancePolicy::default();
        let eye = DMatrix::<f64>::identity(3, 3);
        assert_eq!(numerical_rank(&eye, &policy).0, 3);
        let ones = DMatrix::<f64>::from_element(4, 4, 1.0);
        assert_eq!(numerical_rank(&ones, &policy).0, 1);
        let zero = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(numerical_rank(&zero, &policy).0, 0);
    }

    #[test]
    fn euclidean_matrix_rank_three() {
        // xs = ys = 0..4 in 1-d: rank is n + 2 = 3; every 4x4 minor vanishes
        let spec = KernelSpec::new(
            Family::EuclideanSq { n: 1 },
            Domain::interval(-1.0, 5.0),
            Domain::interval(-1.0, 5.0),
        )
        .unwrap();
        let pts: Vec<Point> = (0..5).map(|i| Point::new(vec![i as f64])).collect();
        let m = kernels::kernel_matrix(&spec, &pts, &pts).unwrap();
        let dm = to_dmatrix(&m);
        let (rank, sv) = numerical_rank(&dm, &TolerancePolicy::default());
        assert_eq!(rank, 3);
        assert!(sv[3] / sv[0] < 1e-12);

        // brute-force oracle: all 4x4 minors have zero determinant
        let idx = [0usize, 1, 2, 3, 4];
        for skip_r in &idx {
            for skip_c in &idx {
                let rows: Vec<usize> = idx.iter().copied().filter(|i| i != skip_r).collect();
                let cols: Vec<usize> = idx.iter().copied().filter(|j| j != skip_c).collect();
                let minor = DMatrix::<f64>::from_fn(4, 4, |i, j| dm[(rows[i], cols[j])]);
                assert!(minor.determinant().abs() < 1e-8);
            }
        }
    }

    #[test]
    fn fullrank_mc_is_reproducible_and_monotone_in_threshold() {
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesicSq { n: 2 });
        let strict = fullrank_mc(&spec, 5, 50, 9, &TolerancePolicy::new(1e-4), None, None).unwrap();
        let strict2 =
            fullrank_mc(&spec, 5, 50, 9, &TolerancePolicy::new(1e-4), None, None).unwrap();
        assert_eq!(strict, strict2);
        let loose = fullrank_mc(&spec, 5, 50, 9, &TolerancePolicy::default(), None, None).unwrap();
        assert!(loose.deficiency_count <= strict.deficiency_count);
    }

    #[test]
    fn euclidean_oversized_always_deficient() {
        let spec = KernelSpec::with_default_domains(Family::EuclideanSq { n: 1 });
        let report =
            fullrank_mc(&spec, 4, 100, 3, &TolerancePolicy::default(), None, None).unwrap();
        assert_eq!(report.deficiency_count, 100);
    }

    #[test]
    fn fullrank_mc_with_cap_subsets() {
        // Definition-3 style: draws confined to disjoint geodesic caps
        let spec = KernelSpec::with_default_domains(Family::SphereGeodesicSq { n: 2 });
        let caps_u = vec![
            Domain::cap(vec![0.0, 0.0, 1.0], 0.3),
            Domain::cap(vec![1.0, 0.0, 0.0], 0.3),
        ];
        let caps_v = vec![
            Domain::cap(vec![0.0, 1.0, 0.0], 0.3),
            Domain::cap(vec![0.0, -1.0, 0.0], 0.3),
        ];
        let report = fullrank_mc(
            &spec,
            2,
            200,
            11,
            &TolerancePolicy::default(),
            Some(&caps_u),
            Some(&caps_v),
        )
        .unwrap();
        assert_eq!(report.deficiency_count, 0);

        // wrong subset count and foreign subsets are rejected
        assert!(fullrank_mc(
            &spec,
            3,
            10,
            1,
            &TolerancePolicy::default(),
            Some(&caps_u),
            None
        )
        .is_err());
        let boxes = vec![Domain::interval(0.0, 1.0), Domain::interval(0.0, 1.0)];
        assert!(matches!(
            fullrank_mc(
                &spec,
                2,
                10,
                1,
                &TolerancePolicy::default(),
                Some(&boxes),
                None
            ),
            Err(Error::SubsetNotContained(_))
        ));
    }

    #[test]
    fn finite_rank_estimates() {
        let policy = TolerancePolicy::default();
        let euclid = KernelSpec::with_default_domains(Family::EuclideanSq { n: 2 });
        let report = finite_rank_estimate(&euclid, 8, 20, 1, &policy).unwrap();
        assert_eq!(report.estimate, RankEstimate::Finite(4));

        let circ = KernelSpec::with_default_domains(Family::CircularSq);
        let report = finite_rank_estimate(&circ, 8, 20, 1, &policy).unwrap();
        assert_eq!(report.estimate, RankEstimate::Finite(3));

        let dot = KernelSpec::with_default_domains(Family::DotAnalytic {
            h: DotFn::ExpNeg,
            n: 3,
        });
        let report = finite_rank_estimate(&dot, 8, 20, 1, &policy).unwrap();
        assert_eq!(report.estimate, RankEstimate::AtLeast(8));
    }

    #[test]
    fn witness_search_powers() {
        let family = FunctionFamily::Powers {
            exponents: vec![vec![0], vec![1], vec![2]],
            domain: Domain::interval(0.0, 1.0),
        };
        let subsets = vec![
            Domain::interval(0.0, 0.1),
            Domain::interval(0.4, 0.5),
            Domain::interval(0.9, 1.0),
        ];
        let out =
            constrained_fullrank_search(&family, &subsets, 64, 5, &TolerancePolicy::default())
                .unwrap();
        match out {
            SearchOutcome::Witness { points, .. } => {
                assert_eq!(points.len(), 3);
                for (p, s) in points.iter().zip(&subsets) {
                    assert!(s.contains(p));
                }
            }
            SearchOutcome::Failure { .. } => panic!("expected witness"),
        }
    }

    #[test]
    fn witness_search_fails_on_dependent_family() {
        // e^{-s/x} vanishes identically on the negative axis
        let family = FunctionFamily::ExpNegSOverX {
            indices: vec![0, 1],
            domain: Domain::interval(-1.0, 1.0),
        };
        let subsets = vec![Domain::interval(-0.9, -0.5), Domain::interval(-0.4, -0.1)];
        let out =
            constrained_fullrank_search(&family, &subsets, 32, 2, &TolerancePolicy::default())
                .unwrap();
        assert!(matches!(out, SearchOutcome::Failure { best_rank: 0 }));
    }

    #[test]
    fn single_constant_function_has_witness() {
        let family = FunctionFamily::Powers {
            exponents: vec![vec![0]],
            domain: Domain::interval(0.0, 1.0),
        };
        let out = constrained_fullrank_search(
            &family,
            &[Domain::interval(0.2, 0.3)],
            4,
            0,
            &TolerancePolicy::default(),
        )
        .unwrap();
        assert!(matches!(out, SearchOutcome::Witness { .. }));
    }

    #[test]
    fn lli_probe_verdicts() {
        let policy = TolerancePolicy::default();
        let powers = FunctionFamily::Powers {
            exponents: vec![vec![0], vec![1]],
            domain: Domain::interval(0.0, 1.0),
        };
        let v = lli_probe(&powers, &Domain::interval(0.49, 0.51), 2, 64, 3, &policy).unwrap();
        assert_eq!(v, LliVerdict::WitnessFound);

        let dep = FunctionFamily::ExpNegSOverX {
            indices: vec![0, 1],
            domain: Domain::interval(-1.0, 0.0),
        };
        let v = lli_probe(&dep, &Domain::interval(-0.5, -0.1), 2, 64, 3, &policy).unwrap();
        assert_eq!(v, LliVerdict::NoWitnessInBudget);
    }

    #[test]
    fn witness_monotone_in_budget() {
        let family = FunctionFamily::Powers {
            exponents: vec![vec![0], vec![1], vec![2]],
            domain: Domain::interval(0.0, 1.0),
        };
        let subsets = vec![
            Domain::interval(0.0, 0.2),
            Domain::interval(0.3, 0.6),
            Domain::interval(0.7, 1.0),
        ];
        let policy = TolerancePolicy::default();
        for seed in 0..5 {
            let small = constrained_fullrank_search(&family, &subsets, 8, seed, &policy).unwrap();
            let large = constrained_fullrank_search(&family, &subsets, 64, seed, &policy).unwrap();
            if matches!(small, SearchOutcome::Witness { .. }) {
                assert!(matches!(large, SearchOutcome::Witness { .. }));
            }
        }
    }

    proptest! {
        #[test]
        fn rank_scale_and_permutation_invariant(
            seed in 0u64..200,
            scale in prop::sample::select(vec![1e-8f64, 0.5, 3.0, 1e9]),
        ) {
            use rand::Rng;
            let mut rng = derive_stream(seed, 77);
            let n = 4;
            let m = DMatrix::<f64>::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
            let policy = TolerancePolicy::default();
            let (r0, _) = numerical_rank(&m, &policy);
            let (r1, _) = numerical_rank(&m.scale(scale), &policy);
            prop_assert_eq!(r0, r1);
            // swap two rows
            let mut p = m.clone();
            p.swap_rows(0, n - 1);
            let (r2, _) = numerical_rank(&p, &policy);
            prop_assert_eq!(r0, r2);
        }
    }
}
