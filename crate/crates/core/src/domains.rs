//! Sample spaces: open regions, seeded sampling, partitions for quadrature,
//! and the hemisphere chart used by the spherical kernels.
//!
//! Every sampler takes an explicit RNG handle. Parallel experiments derive
//! one stream per trial with [`derive_stream`], so results are reproducible
//! regardless of scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for membership on the unit sphere.
pub const SPHERE_NORM_TOL: f64 = 1e-12;

/// A sample location in ambient coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        assert!(
            coords.iter().all(|c| c.is_finite()),
            "point coordinates must be finite"
        );
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point::new(coords)
    }
}

/// An open region points are drawn from.
///
/// Boxes, balls and half-lines are open subsets of R^n; `UnitSphere(n)` is
/// the n-sphere embedded in R^{n+1}; `Cap` is a geodesic cap, the spherical
/// analogue of an open subset used by the Definition-3 style probes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    OpenBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    OpenBall {
        center: Vec<f64>,
        radius: f64,
    },
    /// The unit n-sphere in R^{n+1}; `dim` is the intrinsic dimension n >= 1.
    UnitSphere {
        dim: usize,
    },
    /// Open half-line (origin, +inf). `rate` parameterizes the exponential
    /// proposal used for sampling (default 1.0).
    HalfLine {
        origin: f64,
        rate: f64,
    },
    /// Geodesic cap on the unit sphere: points within angular radius `angle`
    /// of `center` (which must be a unit vector).
    Cap {
        center: Vec<f64>,
        angle: f64,
    },
}

impl Domain {
    pub fn open_box(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds must have equal length");
        assert!(!lo.is_empty(), "box must have at least one axis");
        assert!(
            lo.iter().zip(&hi).all(|(a, b)| a < b),
            "box requires lo < hi on every axis"
        );
        Domain::OpenBox { lo, hi }
    }

    /// Open interval (lo, hi) as a 1-d box.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Domain::open_box(vec![lo], vec![hi])
    }

    pub fn open_ball(center: Vec<f64>, radius: f64) -> Self {
        assert!(radius > 0.0, "ball radius must be positive");
        assert!(!center.is_empty());
        Domain::OpenBall { center, radius }
    }

    pub fn unit_sphere(dim: usize) -> Self {
        assert!(dim >= 1, "sphere dimension must be >= 1");
        Domain::UnitSphere { dim }
    }

    pub fn half_line(origin: f64) -> Self {
        Domain::HalfLine { origin, rate: 1.0 }
    }

    pub fn half_line_with_rate(origin: f64, rate: f64) -> Self {
        assert!(rate > 0.0, "exponential rate must be positive");
        Domain::HalfLine { origin, rate }
    }

    pub fn cap(center: Vec<f64>, angle: f64) -> Self {
        let norm = center.iter().map(|c| c * c).sum::<f64>().sqrt();
        assert!(
            (norm - 1.0).abs() <= 1e-9,
            "cap center must be a unit vector"
        );
        assert!(
            angle > 0.0 && angle <= std::f64::consts::PI,
            "cap angle must lie in (0, pi]"
        );
        Domain::Cap { center, angle }
    }

    /// Intrinsic dimension of the region.
    pub fn dim(&self) -> usize {
        match self {
            Domain::OpenBox { lo, .. } => lo.len(),
            Domain::OpenBall { center, .. } => center.len(),
            Domain::UnitSphere { dim } => *dim,
            Domain::HalfLine { .. } => 1,
            Domain::Cap { center, .. } => center.len() - 1,
        }
    }

    /// Dimension of the coordinate vectors of member points.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Domain::UnitSphere { dim } => dim + 1,
            Domain::Cap { center, .. } => center.len(),
            _ => self.dim(),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        if p.dim() != self.ambient_dim() {
            return false;
        }
        match self {
            Domain::OpenBox { lo, hi } => p
                .coords
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(c, (a, b))| a < c && c < b),
            Domain::OpenBall { center, radius } => {
                let d2: f64 = p
                    .coords
                    .iter()
                    .zip(center)
                    .map(|(c, m)| (c - m) * (c - m))
                    .sum();
                d2.sqrt() < *radius
            }
            Domain::UnitSphere { .. } => (p.norm() - 1.0).abs() <= SPHERE_NORM_TOL,
            Domain::HalfLine { origin, .. } => p.coords[0] > *origin,
            Domain::Cap { center, angle } => {
                if (p.norm() - 1.0).abs() > SPHERE_NORM_TOL {
                    return false;
                }
                let dot: f64 = p.coords.iter().zip(center).map(|(a, b)| a * b).sum();
                dot.clamp(-1.0, 1.0).acos() < *angle
            }
        }
    }

    /// Whether `sub` is contained in `self`. Checked for the pairings the
    /// probes use: box-in-box, ball-in-box, cap-in-sphere, cap-in-cap and
    /// interval-in-half-line; equal domains are always contained.
    pub fn contains_domain(&self, sub: &Domain) -> bool {
        if self == sub {
            return true;
        }
        match (self, sub) {
            (Domain::OpenBox { lo, hi }, Domain::OpenBox { lo: slo, hi: shi }) => {
                lo.len() == slo.len()
                    && lo.iter().zip(slo).all(|(a, b)| a <= b)
                    && hi.iter().zip(shi).all(|(a, b)| b <= a)
            }
            (Domain::OpenBox { lo, hi }, Domain::OpenBall { center, radius }) => {
                lo.len() == center.len()
                    && center
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(c, (a, b))| a <= &(c - radius) && (c + radius) <= *b)
            }
            (Domain::UnitSphere { dim }, Domain::Cap { center, .. }) => center.len() == dim + 1,
            (
                Domain::Cap { center, angle },
                Domain::Cap {
                    center: sc,
                    angle: sa,
                },
            ) => {
                if center.len() != sc.len() {
                    return false;
                }
                let dot: f64 = center.iter().zip(sc).map(|(a, b)| a * b).sum();
                let sep = dot.clamp(-1.0, 1.0).acos();
                sep + sa <= *angle
            }
            (Domain::HalfLine { origin, .. }, Domain::OpenBox { lo, hi }) => {
                lo.len() == 1 && *origin <= lo[0] && hi[0].is_finite()
            }
            (Domain::HalfLine { origin, .. }, Domain::HalfLine { origin: so, .. }) => origin <= so,
            _ => false,
        }
    }

    /// Draws one point from the region.
    ///
    /// Boxes and balls are uniform, spheres use normalized standard normals,
    /// the half-line uses an exponential with the domain's rate, and caps
    /// draw the colatitude from its exact marginal with a rejection step.
    /// Boundary hits are re-drawn so the point is strictly interior.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            Domain::OpenBox { lo, hi } => loop {
                let coords: Vec<f64> = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                    .collect();
                let p = Point::new(coords);
                if self.contains(&p) {
                    return p;
                }
            },
            Domain::OpenBall { center, radius } => loop {
                // rejection from the bounding box; acceptance >= 10^-2 in
                // the dimensions used here, so termination is immediate
                let coords: Vec<f64> = center
                    .iter()
                    .map(|c| c + radius * (2.0 * rng.gen::<f64>() - 1.0))
                    .collect();
                let p = Point::new(coords);
                if self.contains(&p) {
                    return p;
                }
            },
            Domain::UnitSphere { dim } => loop {
                let v: Vec<f64> = (0..dim + 1).map(|_| StandardNormal.sample(rng)).collect();
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n > 1e-100 {
                    return Point::new(v.into_iter().map(|c| c / n).collect());
                }
            },
            Domain::HalfLine { origin, rate } => loop {
                let u: f64 = rng.gen::<f64>();
                if u > 0.0 {
                    let x = origin - (u.ln()) / rate;
                    if x > *origin {
                        return Point::new(vec![x]);
                    }
                }
            },
            Domain::Cap { center, angle } => sample_cap(center, *angle, rng),
        }
    }

    /// Draws a point from `subset`, after checking `subset` is contained in
    /// this domain.
    pub fn sample_in<R: Rng + ?Sized>(&self, subset: &Domain, rng: &mut R) -> Result<Point> {
        if !self.contains_domain(subset) {
            return Err(Error::SubsetNotContained(format!(
                "{subset:?} not inside {self:?}"
            )));
        }
        Ok(subset.sample(rng))
    }
}

/// Uniform sampling of a geodesic cap around `center` on S^{n}.
///
/// The colatitude cosine t has density proportional to (1-t^2)^{(n-2)/2} on
/// [cos(angle), 1); a uniform proposal with that acceptance ratio is exact.
/// The sample is built around the north pole and reflected onto `center`.
fn sample_cap<R: Rng + ?Sized>(center: &[f64], angle: f64, rng: &mut R) -> Point {
    let ambient = center.len();
    let n = ambient - 1; // sphere dimension
    let tmin = angle.cos();
    let t = if n == 1 {
        // circle: uniform arc length
        (angle * (2.0 * rng.gen::<f64>() - 1.0)).cos()
    } else {
        // density bound over [tmin, 1): attained at t = max(tmin, 0)
        let mmax = (1.0 - tmin.max(0.0).powi(2)).powf((n as f64 - 2.0) / 2.0);
        loop {
            let cand = tmin + (1.0 - tmin) * rng.gen::<f64>();
            let dens = (1.0 - cand * cand).powf((n as f64 - 2.0) / 2.0);
            if rng.gen::<f64>() * mmax <= dens {
                break cand;
            }
        }
    };
    // direction in the equatorial S^{n-1}
    let mut u: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let un = u.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
    for c in &mut u {
        *c /= un;
    }
    let s = (1.0 - t * t).max(0.0).sqrt();
    let mut p: Vec<f64> = u.iter().map(|c| c * s).collect();
    p.push(t);

    // Householder reflection taking the north pole onto the cap center.
    let mut v: Vec<f64> = center.to_vec();
    v[ambient - 1] -= 1.0;
    let vn2: f64 = v.iter().map(|c| c * c).sum();
    if vn2 > 1e-24 {
        let pv: f64 = p.iter().zip(&v).map(|(a, b)| a * b).sum();
        for i in 0..ambient {
            p[i] -= 2.0 * pv / vn2 * v[i];
        }
    }
    // renormalize against accumulated rounding
    let norm = p.iter().map(|c| c * c).sum::<f64>().sqrt();
    Point::new(p.into_iter().map(|c| c / norm).collect())
}

/// One cell of a box partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Cell {
    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.lo
                .iter()
                .zip(&self.hi)
                .map(|(a, b)| 0.5 * (a + b))
                .collect(),
        )
    }

    pub fn as_domain(&self) -> Domain {
        Domain::open_box(self.lo.clone(), self.hi.clone())
    }
}

/// Disjoint open cells covering the closure of a box, with one representative
/// point per cell and the cell Lebesgue volumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub cells: Vec<Cell>,
    pub reps: Vec<Point>,
    pub volumes: Vec<f64>,
}

impl Partition {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }
}

/// Splits a box into `k` congruent cells per axis (k^n cells total), with
/// representatives at the cell centers.
pub fn uniform_partition(domain: &Domain, k: usize) -> Partition {
    let (lo, hi) = match domain {
        Domain::OpenBox { lo, hi } => (lo, hi),
        _ => panic!("uniform_partition requires an open box domain"),
    };
    assert!(k >= 1, "cell count per axis must be >= 1");
    let n = lo.len();
    let total = k.pow(n as u32);
    let mut cells = Vec::with_capacity(total);
    let mut reps = Vec::with_capacity(total);
    let mut volumes = Vec::with_capacity(total);
    for flat in 0..total {
        let mut idx = flat;
        let mut clo = Vec::with_capacity(n);
        let mut chi = Vec::with_capacity(n);
        for ax in 0..n {
            let i = idx % k;
            idx /= k;
            let w = (hi[ax] - lo[ax]) / k as f64;
            clo.push(lo[ax] + i as f64 * w);
            chi.push(lo[ax] + (i + 1) as f64 * w);
        }
        let cell = Cell { lo: clo, hi: chi };
        reps.push(cell.center());
        volumes.push(cell.volume());
        cells.push(cell);
    }
    Partition {
        cells,
        reps,
        volumes,
    }
}

/// Embeds a point of the open unit n-ball onto the northern hemisphere of
/// S^n: x -> (x, sqrt(1 - |x|^2)).
pub fn hemisphere_embed(x: &Point) -> Result<Point> {
    let norm = x.norm();
    if norm >= 1.0 {
        return Err(Error::OutOfChart { norm });
    }
    let mut coords = x.coords.clone();
    let sq: f64 = coords.iter().map(|c| c * c).sum();
    coords.push((1.0 - sq).sqrt());
    Ok(Point::new(coords))
}

/// Independent reproducible RNG stream for trial `index` under `master_seed`.
pub fn derive_stream(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn box_sampling_is_contained_and_deterministic() {
        let d = Domain::interval(0.0, 1.0);
        let mut r1 = derive_stream(42, 0);
        let mut r2 = derive_stream(42, 0);
        let p1 = d.sample(&mut r1);
        let p2 = d.sample(&mut r2);
        assert_eq!(p1, p2);
        assert!(d.contains(&p1));
    }

    #[test]
    fn box_sample_mean_matches_uniform_law() {
        let d = Domain::interval(0.0, 1.0);
        let mut rng = derive_stream(7, 0);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| d.sample(&mut rng).coords[0]).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn sphere_samples_have_unit_norm() {
        let d = Domain::unit_sphere(2);
        let mut rng = derive_stream(3, 1);
        for _ in 0..100 {
            let p = d.sample(&mut rng);
            assert_relative_eq!(p.norm(), 1.0, epsilon = SPHERE_NORM_TOL);
        }
    }

    #[test]
    fn ball_and_half_line_sampling() {
        let ball = Domain::open_ball(vec![1.0, -1.0], 0.5);
        let hl = Domain::half_line(0.0);
        let mut rng = derive_stream(11, 4);
        for _ in 0..200 {
            assert!(ball.contains(&ball.sample(&mut rng)));
            let y = hl.sample(&mut rng);
            assert!(y.coords[0] > 0.0);
        }
    }

    #[test]
    fn cap_sampling_stays_in_cap() {
        let center = vec![0.6, 0.0, 0.8];
        let cap = Domain::cap(center.clone(), 0.2);
        let sphere = Domain::unit_sphere(2);
        let mut rng = derive_stream(5, 0);
        for _ in 0..300 {
            let p = cap.sample(&mut rng);
            assert!(cap.contains(&p));
            assert!(sphere.contains(&p));
        }
    }

    #[test]
    fn sample_in_subset_checks_containment() {
        let d = Domain::interval(0.0, 1.0);
        let inside = Domain::interval(0.4, 0.6);
        let outside = Domain::interval(2.0, 3.0);
        let mut rng = derive_stream(1, 0);
        let p = d.sample_in(&inside, &mut rng).unwrap();
        assert!(p.coords[0] > 0.4 && p.coords[0] < 0.6);
        assert!(matches!(
            d.sample_in(&outside, &mut rng),
            Err(Error::SubsetNotContained(_))
        ));
    }

    #[test]
    fn uniform_partition_1d() {
        let p = uniform_partition(&Domain::interval(0.0, 1.0), 2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.reps[0].coords[0], 0.25);
        assert_eq!(p.reps[1].coords[0], 0.75);
        assert_eq!(p.volumes, vec![0.5, 0.5]);
    }

    #[test]
    fn uniform_partition_2d_volumes() {
        let d = Domain::open_box(vec![0.0, 0.0], vec![1.0, 1.0]);
        let p = uniform_partition(&d, 2);
        assert_eq!(p.len(), 4);
        for v in &p.volumes {
            assert_relative_eq!(*v, 0.25, epsilon = 1e-15);
        }
        assert_relative_eq!(p.total_volume(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hemisphere_embed_examples() {
        let north = hemisphere_embed(&Point::new(vec![0.0, 0.0])).unwrap();
        assert_eq!(north.coords, vec![0.0, 0.0, 1.0]);
        let p = hemisphere_embed(&Point::new(vec![0.6, 0.0])).unwrap();
        assert_relative_eq!(p.coords[2], 0.8, epsilon = 1e-15);
        assert!(matches!(
            hemisphere_embed(&Point::new(vec![1.0, 0.3])),
            Err(Error::OutOfChart { .. })
        ));
    }

    proptest! {
        #[test]
        fn embed_preserves_prefix_and_unit_norm(x in -0.7f64..0.7, y in -0.7f64..0.7) {
            prop_assume!(x * x + y * y < 0.98);
            let p = hemisphere_embed(&Point::new(vec![x, y])).unwrap();
            prop_assert_eq!(p.coords[0], x);
            prop_assert_eq!(p.coords[1], y);
            prop_assert!((p.norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn partition_volumes_sum_to_box_volume(k in 1usize..9, w in 0.1f64..5.0) {
            let d = Domain::interval(-1.0, -1.0 + w);
            let p = uniform_partition(&d, k);
            prop_assert!((p.total_volume() - w).abs() <= 1e-12 * w);
        }

        #[test]
        fn same_stream_same_draws(seed in 0u64..1000, idx in 0u64..8) {
            let d = Domain::unit_sphere(2);
            let a = d.sample(&mut derive_stream(seed, idx));
            let b = d.sample(&mut derive_stream(seed, idx));
            prop_assert_eq!(a, b);
        }
    }
}
