//! The interaction functionals Y1, Y2, Y3 and the density exp(-(Y1+Y2+Y3)/2)
//! evaluated on field samples over a shared Monte-Carlo grid in C^4.
//!
//! All duals are precomputed per grid node; per sample the pairings reduce to
//! two real matrix products (spatial slots against psi chi_w, temporal slots
//! against psi zeta_w), which dominate the cost of a run.

use matrixmultiply::dgemm;
use num_complex::Complex64;

use crate::bargmann::{psi, FockWorkspace, KernelPoint};
use crate::field::{sample_field, FieldSample, WienerConfig};
use crate::lie::StructureConstants;
use crate::rng::{CounterRng, TAG_WGRID};
use crate::{Error, Result};

/// Spatial two-form pairs carrying the nonlinear terms, with their sample
/// slot index in `surface::PAIRS` order and sign (-1)^{ij}.
const SPATIAL: [(usize, usize, usize, f64); 3] =
    [(1, 2, 3, 1.0), (1, 3, 4, -1.0), (2, 3, 5, 1.0)];

/// Monte-Carlo grid over C^4 drawn from the Gaussian lambda_4
/// (each of the 8 real coordinates is N(0, 1/2)).
#[derive(Debug, Clone)]
pub struct WGrid {
    pub nodes: Vec<KernelPoint>,
    pub weights: Vec<f64>,
    pub seed: u64,
}

pub fn make_wgrid(n_nodes: usize, seed: u64) -> Result<WGrid> {
    if n_nodes == 0 {
        return Err(Error::InvalidParameter("grid needs at least one node".into()));
    }
    let rng = CounterRng::new(seed, TAG_WGRID);
    let s = 0.5_f64.sqrt();
    let nodes = (0..n_nodes)
        .map(|i| {
            let mut w = [Complex64::new(0.0, 0.0); 4];
            for (a, z) in w.iter_mut().enumerate() {
                let re = rng.normal(i as u64, 2 * a as u64) * s;
                let im = rng.normal(i as u64, 2 * a as u64 + 1) * s;
                *z = Complex64::new(re, im);
            }
            KernelPoint::new(w)
        })
        .collect();
    Ok(WGrid { nodes, weights: vec![1.0 / n_nodes as f64; n_nodes], seed })
}

impl WGrid {
    pub fn max_abs(&self) -> f64 {
        self.nodes.iter().map(|w| w.norm_sq().sqrt()).fold(0.0, f64::max)
    }
}

/// Values of the interaction functionals on one sample.
#[derive(Debug, Clone, Copy)]
pub struct YValues {
    pub y1: Complex64,
    pub y2: Complex64,
    pub y3: f64,
    pub y_density: f64,
}

impl YValues {
    fn from_parts(y1: Complex64, y3: f64) -> YValues {
        let total = 2.0 * y1.re + y3; // y2 = conj(y1)
        YValues { y1, y2: y1.conj(), y3, y_density: (-total / 2.0).exp() }
    }
}

/// Grid duals and tables shared by every sample of a run.
pub struct YmContext<'a> {
    pub workspace: &'a FockWorkspace,
    pub sc: &'a StructureConstants,
    pub kappa: f64,
    pub c_tilde: f64,
    pub weights: Vec<f64>,
    pub n_nodes: usize,
    /// Largest truncation tail mass over the grid nodes (diagnostic; grid
    /// duals are evaluated at the workspace degree without refusal).
    pub max_node_tail: f64,
    /// conj(psi chi_w) per node, column-major dim x 2n (re, im columns).
    xi_dual: Vec<f64>,
    /// conj(psi zeta_w) range coordinates per node, same layout.
    zeta_dual: Vec<f64>,
}

impl<'a> YmContext<'a> {
    pub fn new(
        workspace: &'a FockWorkspace,
        sc: &'a StructureConstants,
        grid: &WGrid,
        kappa: f64,
        c_tilde: f64,
    ) -> Result<YmContext<'a>> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        let dim = workspace.dim();
        let n = grid.nodes.len();
        let mut xi_dual = vec![0.0; dim * 2 * n];
        let mut zeta_dual = vec![0.0; dim * 2 * n];
        let mut max_tail: f64 = 0.0;
        for (node, w) in grid.nodes.iter().enumerate() {
            let pw = psi(w, c_tilde);
            max_tail = max_tail.max(workspace.tail_mass(w.norm_sq().sqrt(), c_tilde));
            let chi = workspace.chi_coeffs(w);
            let zeta = workspace.zeta_range_coords(w)?;
            let (re_col, im_col) = (2 * node, 2 * node + 1);
            for k in 0..dim {
                // Pairing is sum b_k conj(f_k): store conj(f) components.
                let x = chi.coeffs[k] * pw;
                xi_dual[re_col * dim + k] = x.re;
                xi_dual[im_col * dim + k] = -x.im;
                let z = zeta[k] * pw;
                zeta_dual[re_col * dim + k] = z.re;
                zeta_dual[im_col * dim + k] = -z.im;
            }
        }
        Ok(YmContext {
            workspace,
            sc,
            kappa,
            c_tilde,
            weights: grid.weights.clone(),
            n_nodes: n,
            max_node_tail: max_tail,
            xi_dual,
            zeta_dual,
        })
    }

    fn lie_dim(&self) -> usize {
        self.sc.dim()
    }

    /// All node pairings of one sample: X[(pair, gamma), node] over the
    /// spatial slots (without signs) and P[(i, alpha), node] over the
    /// temporal slots. Row-major 3N x 2n blocks of interleaved re/im.
    fn gemm_pairings(&self, sample: &FieldSample) -> (Vec<f64>, Vec<f64>) {
        let dim = self.workspace.dim();
        let nl = self.lie_dim();
        debug_assert_eq!(sample.lie_dim, nl);
        debug_assert_eq!(sample.dim, dim);
        let rows = 3 * nl;
        let cols = 2 * self.n_nodes;
        let mut x_out = vec![0.0; rows * cols];
        let mut p_out = vec![0.0; rows * cols];
        let temporal = &sample.coeffs[..rows * dim];
        let spatial = &sample.coeffs[rows * dim..];
        unsafe {
            dgemm(
                rows, dim, cols, 1.0,
                spatial.as_ptr(), dim as isize, 1,
                self.xi_dual.as_ptr(), 1, dim as isize,
                0.0, x_out.as_mut_ptr(), cols as isize, 1,
            );
            dgemm(
                rows, dim, cols, 1.0,
                temporal.as_ptr(), dim as isize, 1,
                self.zeta_dual.as_ptr(), 1, dim as isize,
                0.0, p_out.as_mut_ptr(), cols as isize, 1,
            );
        }
        (x_out, p_out)
    }

    /// Reduces pairings to (y1 without its kappa factor, y3, combined-square
    /// form without kappa): y1_raw = sum_nodes wgt sum_{gamma,ij} X conj(Q),
    /// y3 = sum wgt |Q|^2, combined_raw evaluated with x_scale standing in
    /// for kappa.
    fn reduce(&self, x_out: &[f64], p_out: &[f64], x_scale: f64) -> (Complex64, f64, f64) {
        let nl = self.lie_dim();
        let cols = 2 * self.n_nodes;
        let mut y1_raw = Complex64::new(0.0, 0.0);
        let mut y3 = 0.0;
        let mut combined = 0.0;
        for node in 0..self.n_nodes {
            let wgt = self.weights[node];
            for gamma in 0..nl {
                for &(_i, _j, slot, sign) in &SPATIAL {
                    let xr = (slot - 3) * nl + gamma;
                    let x = sign
                        * Complex64::new(x_out[xr * cols + 2 * node], x_out[xr * cols + 2 * node + 1]);
                    let mut q = Complex64::new(0.0, 0.0);
                    for &(alpha, beta, cval) in self.sc.nonzero(gamma) {
                        // P rows: (i-1)*N + alpha; spatial pair (i,j) = rows
                        // (slot-3) mapping: slot 3 -> (1,2), 4 -> (1,3), 5 -> (2,3).
                        let (pi, pj) = match slot {
                            3 => (0, 1),
                            4 => (0, 2),
                            _ => (1, 2),
                        };
                        let pa = (pi * nl + alpha) * cols + 2 * node;
                        let pb = (pj * nl + beta) * cols + 2 * node;
                        let p1 = Complex64::new(p_out[pa], p_out[pa + 1]);
                        let p2 = Complex64::new(p_out[pb], p_out[pb + 1]);
                        q += cval * p1 * p2;
                    }
                    y1_raw += wgt * x * q.conj();
                    y3 += wgt * q.norm_sqr();
                    let shifted = x * x_scale + q;
                    combined += wgt * (shifted.norm_sqr() - (x * x_scale).norm_sqr());
                }
            }
        }
        (y1_raw, y3, combined)
    }

    /// Y values of a sample drawn at this context's kappa; also returns the
    /// combined-square form sum_gamma int sum_{i<j} [|kappa X + Q|^2 -
    /// |kappa X|^2], which equals y1+y2+y3 identically.
    pub fn y_terms_checked(&self, sample: &FieldSample) -> (YValues, f64) {
        let (x_out, p_out) = self.gemm_pairings(sample);
        let (y1_raw, y3, combined) = self.reduce(&x_out, &p_out, self.kappa);
        (YValues::from_parts(y1_raw * self.kappa, y3), combined)
    }

    pub fn y_terms(&self, sample: &FieldSample) -> YValues {
        self.y_terms_checked(sample).0
    }

    /// Scale-free reduction of a unit-variance sample (N(0,1) coefficients):
    /// lets one sample stream serve every kappa, since coefficients at kappa
    /// are the unit ones divided by kappa.
    pub fn raw_y(&self, unit_sample: &FieldSample) -> RawY {
        let (x_out, p_out) = self.gemm_pairings(unit_sample);
        let (y1_raw, y3_raw, _) = self.reduce(&x_out, &p_out, 1.0);
        RawY { y1_raw, y3_raw }
    }
}

/// kappa-free pairing reduction of a unit-variance sample.
#[derive(Debug, Clone, Copy)]
pub struct RawY {
    /// sum wgt X conj(Q) with unit-variance pairings.
    pub y1_raw: Complex64,
    /// sum wgt |Q|^2 with unit-variance pairings.
    pub y3_raw: f64,
}

impl RawY {
    /// Y values of the sample rescaled to resolution kappa: X and P pick up
    /// 1/kappa each, y1 an extra kappa, so y1 = y1_raw/kappa^2 and
    /// y3 = y3_raw/kappa^4.
    pub fn at_kappa(&self, kappa: f64) -> YValues {
        let k2 = kappa * kappa;
        YValues::from_parts(self.y1_raw / k2, self.y3_raw / (k2 * k2))
    }
}

/// Monte-Carlo estimate of E[(density)^p] with a batch-mean standard error.
pub fn density_moment(
    ctx: &YmContext,
    wiener: &WienerConfig,
    n_samples: usize,
    p: f64,
) -> Result<(f64, f64)> {
    if !(1.0 <= p && p < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!(
            "moment order must satisfy 1 <= p < pi, got {p}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    let vals: Vec<f64> = (0..n_samples)
        .map(|i| ctx.y_terms(&sample_field(wiener, i as u64)).y_density.powf(p))
        .collect();
    Ok(batch_mean_se(&vals, 32))
}

/// E[(density)^p] at several resolutions from one unit-variance sample
/// stream (common random numbers across the kappa values).
pub fn density_moments_multi(
    ctx: &YmContext,
    unit_cfg: &WienerConfig,
    n_samples: usize,
    kappas: &[f64],
    p: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(1.0 <= p && p < std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!(
            "moment order must satisfy 1 <= p < pi, got {p}"
        )));
    }
    let mut vals = vec![Vec::with_capacity(n_samples); kappas.len()];
    for i in 0..n_samples {
        let raw = ctx.raw_y(&sample_field(unit_cfg, i as u64));
        for (j, &k) in kappas.iter().enumerate() {
            vals[j].push(raw.at_kappa(k).y_density.powf(p));
        }
    }
    Ok(vals.iter().map(|v| batch_mean_se(v, 32)).collect())
}

/// Mean and batch-mean standard error over a fixed number of contiguous
/// batches (deterministic reduction order).
pub fn batch_mean_se(vals: &[f64], n_batches: usize) -> (f64, f64) {
    let n = vals.len();
    let b = n_batches.min(n).max(1);
    let mut means = Vec::with_capacity(b);
    let base = n / b;
    let extra = n % b;
    let mut start = 0;
    for i in 0..b {
        let len = base + usize::from(i < extra);
        let chunk = &vals[start..start + len];
        means.push(chunk.iter().sum::<f64>() / len as f64);
        start += len;
    }
    let mean = means.iter().sum::<f64>() / b as f64;
    if b < 2 {
        return (mean, f64::NAN);
    }
    let var = means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / (b as f64 - 1.0);
    (mean, (var / b as f64).sqrt())
}
