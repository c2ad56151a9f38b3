//! Gaussian samples of the two-form field B and the dual pairings (B, .)#.
//!
//! A sample holds one real N(0, 1/kappa^2) coefficient per (two-form slot,
//! Lie index, basis index). The temporal slots (0,j) are sampled on the
//! orthonormal basis of range(d_0); the spatial slots (i,j) on the full
//! monomial basis. Pairings are sesquilinear: (B, f)# = sum_k B_k conj(f_k).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bargmann::{psi, FockWorkspace, KernelPoint};
use crate::lie::Representation;
use crate::rng::{CounterRng, TAG_FIELD};
use crate::surface::{NuVector, PAIRS};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct WienerConfig<'a> {
    pub kappa: f64,
    pub workspace: &'a FockWorkspace,
    pub lie_dim: usize,
    pub seed: u64,
}

impl<'a> WienerConfig<'a> {
    pub fn new(kappa: f64, workspace: &'a FockWorkspace, lie_dim: usize, seed: u64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa must be positive, got {kappa}")));
        }
        if lie_dim == 0 {
            return Err(Error::InvalidParameter("lie_dim must be positive".into()));
        }
        Ok(WienerConfig { kappa, workspace, lie_dim, seed })
    }
}

/// One field draw: real coefficients, slot-major layout
/// [pair][lie index][basis index] with `PAIRS` slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub lie_dim: usize,
    /// Per-slot coefficient count (= workspace dim = range dim).
    pub dim: usize,
    pub coeffs: Vec<f64>,
}

impl FieldSample {
    pub fn zeros(lie_dim: usize, dim: usize) -> FieldSample {
        FieldSample { lie_dim, dim, coeffs: vec![0.0; 6 * lie_dim * dim] }
    }

    #[inline]
    pub fn slot(&self, pair: usize, alpha: usize) -> &[f64] {
        let off = (pair * self.lie_dim + alpha) * self.dim;
        &self.coeffs[off..off + self.dim]
    }

    #[inline]
    pub fn slot_mut(&mut self, pair: usize, alpha: usize) -> &mut [f64] {
        let off = (pair * self.lie_dim + alpha) * self.dim;
        &mut self.coeffs[off..off + self.dim]
    }

    pub fn add(&self, other: &FieldSample) -> Result<FieldSample> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::DimensionMismatch("adding samples of different shape".into()));
        }
        Ok(FieldSample {
            lie_dim: self.lie_dim,
            dim: self.dim,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        })
    }
}

/// Deterministic draw: coefficient c of sample i is
/// normal(key(seed), i, c) / kappa.
pub fn sample_field(config: &WienerConfig, sample_index: u64) -> FieldSample {
    let dim = config.workspace.dim();
    let rng = CounterRng::new(config.seed, TAG_FIELD);
    let n = 6 * config.lie_dim * dim;
    let inv_kappa = 1.0 / config.kappa;
    let coeffs = (0..n).map(|c| rng.normal(sample_index, c as u64) * inv_kappa).collect();
    FieldSample { lie_dim: config.lie_dim, dim, coeffs }
}

/// (b, f)# for real coefficients b against a complex dual.
#[inline]
pub fn pair_real_complex(b: &[f64], f: &[Complex64]) -> Complex64 {
    b.iter().zip(f).map(|(x, z)| x * z.conj()).sum()
}

fn pair_index(a: usize, b: usize) -> Result<usize> {
    PAIRS
        .iter()
        .position(|&p| p == (a, b))
        .ok_or_else(|| Error::InvalidParameter(format!("invalid two-form slot ({a},{b})")))
}

/// (B, xi_ab(w) ⊗ E^gamma)#. Temporal slots pair through the range(d_0)
/// projection of xi; spatial slots pair on the full basis.
pub fn pair_xi(
    sample: &FieldSample,
    ws: &FockWorkspace,
    a: usize,
    b: usize,
    gamma: usize,
    w: &KernelPoint,
    c_tilde: f64,
    eps_tail: f64,
) -> Result<Complex64> {
    ws.check_tail(w.norm_sq().sqrt(), eps_tail, c_tilde)?;
    let pair = pair_index(a, b)?;
    if a == 0 {
        let dual = ws.xi_range_coords(w, c_tilde);
        let sign = crate::bargmann::xi_sign(a, b)?;
        Ok(pair_real_complex(sample.slot(pair, gamma), &dual) * sign)
    } else {
        let (xi, sign) = ws.xi_coeffs(a, b, w, c_tilde)?;
        Ok(pair_real_complex(sample.slot(pair, gamma), &xi.coeffs) * sign)
    }
}

/// (B, pi_{i,alpha}(w))# = psi(w) (B_{0i,alpha}, zeta(w))#.
pub fn pair_pi(
    sample: &FieldSample,
    ws: &FockWorkspace,
    i: usize,
    alpha: usize,
    w: &KernelPoint,
    c_tilde: f64,
) -> Result<Complex64> {
    if !(1..=3).contains(&i) {
        return Err(Error::InvalidParameter(format!("pi slot index must be 1..=3, got {i}")));
    }
    let dual = ws.zeta_range_coords(w)?;
    let p = psi(w, c_tilde);
    Ok(pair_real_complex(sample.slot(i - 1, alpha), &dual) * p)
}

/// (B, nu^{kappa,rho})# = sum_alpha g_alpha rho(E^alpha) with
/// g_alpha = sum_j (B_{0j,alpha}, nu_j)#; skew-Hermitian by construction.
pub fn pair_nu(
    sample: &FieldSample,
    nu: &NuVector,
    rep: &Representation,
) -> Result<DMatrix<Complex64>> {
    if rep.images.len() != sample.lie_dim {
        return Err(Error::DimensionMismatch(format!(
            "representation has {} generators, sample {}",
            rep.images.len(),
            sample.lie_dim
        )));
    }
    if nu.slot_range_coords[0].len() != sample.dim {
        return Err(Error::DimensionMismatch(format!(
            "nu built on range dim {}, sample has {}",
            nu.slot_range_coords[0].len(),
            sample.dim
        )));
    }
    let d = rep.dim_rep;
    let mut out = DMatrix::<Complex64>::zeros(d, d);
    for alpha in 0..sample.lie_dim {
        let g = pair_nu_component(sample, nu, alpha);
        out += rep.images[alpha].scale(g);
    }
    Ok(out)
}

/// The scalar Gaussian g_alpha = sum_j (B_{0j,alpha}, nu_j)#.
pub fn pair_nu_component(sample: &FieldSample, nu: &NuVector, alpha: usize) -> f64 {
    let mut g = 0.0;
    for j in 0..3 {
        let b = sample.slot(j, alpha);
        g += b.iter().zip(&nu.slot_range_coords[j]).map(|(x, y)| x * y).sum::<f64>();
    }
    g
}
