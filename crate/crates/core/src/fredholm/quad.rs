//! Gauss-Legendre and Gauss-Laguerre rules, computed by Newton iteration on
//! the orthogonal-polynomial recurrences.

use crate::error::{Error, Result};

/// Largest Laguerre rule kept: beyond this the rescaled weights
/// w_i exp(y_i) overflow double precision.
pub const MAX_LAGUERRE_NODES: usize = 128;

const NEWTON_EPS: f64 = 1e-15;
const NEWTON_MAX_ITER: usize = 100;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Chebyshev-based initial guess for the i-th positive root
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..NEWTON_MAX_ITER {
                let mut p0 = 1.0;
                let mut p1 = 0.0;
                for j in 0..n {
                    let p2 = p1;
                    p1 = p0;
                    p0 = ((2 * j + 1) as f64 * z * p1 - j as f64 * p2) / (j + 1) as f64;
                }
                dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
                let dz = p0 / dp;
                z -= dz;
                if dz.abs() <= NEWTON_EPS {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// ∫_a^b f(t) dt.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        half * sum
    }

    /// ∫_a^b f(t) dt for fallible integrands.
    pub fn try_integrate<F: FnMut(f64) -> Result<f64>>(
        &self,
        a: f64,
        b: f64,
        mut f: F,
    ) -> Result<f64> {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x)?;
        }
        Ok(half * sum)
    }
}

/// Gauss-Laguerre rule: Σ w_i g(y_i) approximates ∫_0^inf e^{-y} g(y) dy.
#[derive(Debug, Clone)]
pub struct GaussLaguerre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLaguerre {
    pub fn new(n: usize) -> Result<Self> {
        if !(2..=MAX_LAGUERRE_NODES).contains(&n) {
            return Err(Error::InvalidInput(format!(
                "Laguerre rule supports 2..={MAX_LAGUERRE_NODES} nodes, got {n}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        let mut z = 0.0;
        for i in 0..n {
            // standard initial guesses marching up from the smallest root
            if i == 0 {
                z = 3.0 / (1.0 + 2.4 * nf);
            } else if i == 1 {
                z += 15.0 / (1.0 + 2.5 * nf);
            } else {
                let ai = (i - 1) as f64;
                z += (1.0 + 2.55 * ai) / (1.9 * ai) * (z - nodes[i - 2]);
            }
            let mut pp = 0.0;
            let mut p2 = 0.0;
            for _ in 0..NEWTON_MAX_ITER {
                let mut p1 = 1.0;
                p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    p1 = ((2 * j - 1) as f64 - z).mul_add(p2, -((j - 1) as f64) * p3) / j as f64;
                }
                pp = nf * (p1 - p2) / z;
                let dz = p1 / pp;
                z -= dz;
                if dz.abs() <= NEWTON_EPS * z.max(1.0) {
                    break;
                }
            }
            nodes[i] = z;
            weights[i] = -1.0 / (pp * nf * p2);
        }
        Ok(GaussLaguerre { nodes, weights })
    }

    /// ∫_0^inf f(u) du via the rescaled weights w_i e^{y_i}; the integrand
    /// must decay at least exponentially for this to converge.
    pub fn try_integrate_halfline<F: FnMut(f64) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (y, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * y.exp() * f(*y)?;
        }
        Ok(sum)
    }
}
