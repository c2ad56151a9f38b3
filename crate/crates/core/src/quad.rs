//! Gauss–Legendre quadrature on [0,1] and its tensor product on the unit
//! square, used by the surface integrals.

use crate::{Error, Result};

/// Nodes and weights of an n-point Gauss–Legendre rule mapped to [0,1].
/// Weights sum to 1.
pub fn gauss_legendre_unit(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature order must be >= 1".into()));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Standard Chebyshev-based initial guess on [-1,1], refined by Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and its derivative.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        // Map [-1,1] -> [0,1]; halve the weight so they sum to 1.
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 0.5 * w;
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// Tensor-product rule on the unit square I^2 with positive weights
/// summing to 1.
#[derive(Debug, Clone)]
pub struct SurfaceQuadrature {
    pub nodes: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl SurfaceQuadrature {
    pub fn gauss_legendre(order_s: usize, order_t: usize) -> Result<SurfaceQuadrature> {
        let (xs, ws) = gauss_legendre_unit(order_s)?;
        let (xt, wt) = gauss_legendre_unit(order_t)?;
        let mut nodes = Vec::with_capacity(order_s * order_t);
        let mut weights = Vec::with_capacity(order_s * order_t);
        for (s, wsi) in xs.iter().zip(&ws) {
            for (t, wti) in xt.iter().zip(&wt) {
                nodes.push((*s, *t));
                weights.push(wsi * wti);
            }
        }
        Ok(SurfaceQuadrature { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidParameter("quadrature weights must be positive".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Tolerance(format!("quadrature weights sum to {sum}, expected 1")));
        }
        Ok(())
    }
}
