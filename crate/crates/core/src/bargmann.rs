//! Truncated Fock-space workspace over C^4.
//!
//! Holomorphic functions are stored as coefficient vectors on the normalized
//! monomial basis z^k / sqrt(k!), graded-lexicographically ordered by
//! (|k|, k0, k1, k2, k3) up to total degree D. The module provides the
//! first-order operators d_a, the reproducing kernel chi_w, the Gaussian
//! damping factor psi_w, the dual functionals xi_ab(w) and the minimum-norm
//! solution zeta(w) of the transported evaluation problem on range(d_0).
//!
//! d_0 never mixes the last three exponents, so it block-diagonalizes over
//! the "rest" index r = (k1,k2,k3); blocks depend only on m = |r|. Each
//! block is a small bidiagonal matrix factored once by QR; every dual
//! evaluation is then one triangular solve per m.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use statrs::function::gamma::gamma_lr;

use crate::{Error, Result};

/// Exponent tuple (k0,k1,k2,k3) of one monomial.
pub type MultiIndex = [u16; 4];

/// Default damping constant 1/sqrt(2*pi).
pub const DEFAULT_C_TILDE: f64 = 0.398_942_280_401_432_7;

/// Largest truncation degree the workspace will build.
pub const MAX_DEGREE: usize = 60;

/// Condition-number ceiling for the normal equations of the zeta solve.
pub const COND_LIMIT: f64 = 1e12;

/// Evaluation point w in C^4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub w: [Complex64; 4],
}

impl KernelPoint {
    pub fn new(w: [Complex64; 4]) -> KernelPoint {
        KernelPoint { w }
    }

    pub fn from_real(x: [f64; 4]) -> KernelPoint {
        KernelPoint { w: x.map(|v| Complex64::new(v, 0.0)) }
    }

    pub fn conj(&self) -> KernelPoint {
        KernelPoint { w: self.w.map(|z| z.conj()) }
    }

    pub fn norm_sq(&self) -> f64 {
        self.w.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.w.iter().all(|z| z.im == 0.0)
    }
}

/// Coefficient vector on the normalized monomial basis of a workspace.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefVector {
    pub coeffs: Vec<Complex64>,
}

impl CoefVector {
    pub fn zeros(len: usize) -> CoefVector {
        CoefVector { coeffs: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> CoefVector {
        CoefVector { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }
}

/// Sesquilinear inner product sum_k f_k conj(g_k).
pub fn fock_inner(f: &CoefVector, g: &CoefVector) -> Result<Complex64> {
    if f.len() != g.len() {
        return Err(Error::DimensionMismatch(format!(
            "fock_inner: {} vs {}",
            f.len(),
            g.len()
        )));
    }
    Ok(f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| a * b.conj()).sum())
}

/// Gaussian damping factor psi(w) = c_tilde * exp(-|w|^2 / 2).
pub fn psi(w: &KernelPoint, c_tilde: f64) -> f64 {
    c_tilde * (-w.norm_sq() / 2.0).exp()
}

/// Sign (-1)^{ab} attached to the two-form slot dx^a ^ dx^b, a < b.
pub fn xi_sign(a: usize, b: usize) -> Result<f64> {
    if a >= b || b > 3 {
        return Err(Error::InvalidParameter(format!("two-form slot requires a < b <= 3, got ({a},{b})")));
    }
    Ok(if (a * b) % 2 == 0 { 1.0 } else { -1.0 })
}

/// Closed-form <xi_ab(u), xi_cd(v)> with no truncation: zero across distinct
/// slots, otherwise sign_ab * sign_cd * psi(u) psi(v) e^{u_bar . v}.
pub fn kernel_xi_inner(
    a: usize,
    b: usize,
    u: &KernelPoint,
    c: usize,
    d: usize,
    v: &KernelPoint,
    c_tilde: f64,
) -> Result<Complex64> {
    let sa = xi_sign(a, b)?;
    let sc = xi_sign(c, d)?;
    if (a, b) != (c, d) {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let dot: Complex64 = u.w.iter().zip(&v.w).map(|(x, y)| x.conj() * y).sum();
    Ok(Complex64::new(sa * sc * psi(u, c_tilde) * psi(v, c_tilde), 0.0) * dot.exp())
}

/// P(Poisson(lambda) > d), the relative coefficient mass of chi_w beyond
/// degree d at lambda = |w|^2.
pub fn poisson_tail(lambda: f64, d: usize) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    gamma_lr(d as f64 + 1.0, lambda)
}

/// Smallest degree D with c_tilde^2 * P(Poisson(|w|^2) > D) <= eps_tail.
pub fn auto_degree(max_abs_w: f64, eps_tail: f64, c_tilde: f64) -> Result<usize> {
    if !(max_abs_w >= 0.0) || !(eps_tail > 0.0) {
        return Err(Error::InvalidParameter("auto_degree needs |w| >= 0 and eps_tail > 0".into()));
    }
    let lambda = max_abs_w * max_abs_w;
    for d in 1..=MAX_DEGREE {
        if c_tilde * c_tilde * poisson_tail(lambda, d) <= eps_tail {
            return Ok(d);
        }
    }
    Err(Error::TailBound(format!(
        "no degree <= {MAX_DEGREE} meets eps_tail {eps_tail:.1e} at |w| = {max_abs_w}"
    )))
}

#[derive(Debug)]
struct D0Block {
    /// Thin Q of the (n+1) x n block of d_0 at rest degree m.
    q: DMatrix<f64>,
    /// Upper-triangular R of the same factorization.
    r: DMatrix<f64>,
    /// Condition number of the normal equations M^T M.
    cond_normal: f64,
    /// Smallest singular value of the block.
    sigma_min: f64,
}

/// Truncated Fock workspace of total degree D over C^4.
#[derive(Debug)]
pub struct FockWorkspace {
    pub degree: usize,
    /// Domain basis, |k| <= D.
    pub basis: Vec<MultiIndex>,
    /// Codomain basis of the d_a operators, |k| <= D+1.
    pub basis_ext: Vec<MultiIndex>,
    index: HashMap<MultiIndex, usize>,
    index_ext: HashMap<MultiIndex, usize>,
    /// Per domain index: (rest-degree m, k0). The rest exponents themselves
    /// live in `basis`.
    split: Vec<(u16, u16)>,
    blocks: Vec<D0Block>,
    /// 1/sqrt(p!) for p = 0..=D+1.
    inv_sqrt_fact: Vec<f64>,
}

fn enumerate_basis(degree: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for d in 0..=degree {
        for k0 in 0..=d {
            for k1 in 0..=(d - k0) {
                for k2 in 0..=(d - k0 - k1) {
                    let k3 = d - k0 - k1 - k2;
                    out.push([k0 as u16, k1 as u16, k2 as u16, k3 as u16]);
                }
            }
        }
    }
    out
}

impl FockWorkspace {
    pub fn new(degree: usize) -> Result<FockWorkspace> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "workspace degree must be in 1..={MAX_DEGREE}, got {degree}"
            )));
        }
        let basis = enumerate_basis(degree);
        let basis_ext = enumerate_basis(degree + 1);
        let index: HashMap<_, _> = basis.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let index_ext: HashMap<_, _> = basis_ext.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let split = basis
            .iter()
            .map(|k| (k[1] + k[2] + k[3], k[0]))
            .collect();
        let mut blocks = Vec::with_capacity(degree + 1);
        for m in 0..=degree {
            let n = degree - m + 1;
            let mut mat = DMatrix::<f64>::zeros(n + 1, n);
            for p in 0..n {
                if p > 0 {
                    mat[(p - 1, p)] = (p as f64).sqrt() / 2.0;
                }
                mat[(p + 1, p)] = -((p as f64 + 1.0).sqrt()) / 2.0;
            }
            let qr = mat.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let svd = mat.svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            blocks.push(D0Block {
                q,
                r,
                cond_normal: (smax / smin).powi(2),
                sigma_min: smin,
            });
        }
        let mut inv_sqrt_fact = vec![1.0; degree + 2];
        for p in 1..=(degree + 1) {
            inv_sqrt_fact[p] = inv_sqrt_fact[p - 1] / (p as f64).sqrt();
        }
        Ok(FockWorkspace { degree, basis, basis_ext, index, index_ext, split, blocks, inv_sqrt_fact })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn dim_ext(&self) -> usize {
        self.basis_ext.len()
    }

    /// Dimension of range(d_0) inside the codomain; equals dim() because d_0
    /// is injective on the truncation.
    pub fn range_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, k: &MultiIndex) -> Option<usize> {
        self.index.get(k).copied()
    }

    pub fn index_of_ext(&self, k: &MultiIndex) -> Option<usize> {
        self.index_ext.get(k).copied()
    }

    /// Smallest singular value of the d_0 matrix over all blocks.
    pub fn d0_sigma_min(&self) -> f64 {
        self.blocks.iter().map(|b| b.sigma_min).fold(f64::INFINITY, f64::min)
    }

    /// Largest condition number of the zeta normal equations over all blocks.
    pub fn zeta_cond(&self) -> f64 {
        self.blocks.iter().map(|b| b.cond_normal).fold(0.0, f64::max)
    }

    /// Coefficient mass of psi_w chi_w discarded beyond the truncation
    /// degree.
    pub fn tail_mass(&self, abs_w: f64, c_tilde: f64) -> f64 {
        c_tilde * c_tilde * poisson_tail(abs_w * abs_w, self.degree)
    }

    /// Refuses evaluation points whose truncation tail exceeds eps_tail.
    pub fn check_tail(&self, abs_w: f64, eps_tail: f64, c_tilde: f64) -> Result<()> {
        let tail = self.tail_mass(abs_w, c_tilde);
        if tail > eps_tail {
            return Err(Error::TailBound(format!(
                "tail mass {tail:.3e} exceeds {eps_tail:.1e} at |w| = {abs_w:.4} with D = {}; \
                 increase the degree or shrink kappa*max|sigma|/2",
                self.degree
            )));
        }
        Ok(())
    }

    /// Applies d_a, mapping degree <= D coefficients to degree <= D+1 ones.
    /// In normalized coordinates: e_k -> (sqrt(p)/2) e_{k-e_a}
    /// - (sqrt(p+1)/2) e_{k+e_a} with p = k_a.
    pub fn apply_d(&self, a: usize, f: &CoefVector) -> Result<CoefVector> {
        if a > 3 {
            return Err(Error::InvalidParameter(format!("axis must be 0..=3, got {a}")));
        }
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "apply_d: vector length {} vs workspace {}",
                f.len(),
                self.dim()
            )));
        }
        let mut out = CoefVector::zeros(self.dim_ext());
        for (i, k) in self.basis.iter().enumerate() {
            let c = f.coeffs[i];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let p = k[a] as f64;
            if k[a] > 0 {
                let mut down = *k;
                down[a] -= 1;
                out.coeffs[self.index_ext[&down]] += c * (p.sqrt() / 2.0);
            }
            let mut up = *k;
            up[a] += 1;
            out.coeffs[self.index_ext[&up]] -= c * ((p + 1.0).sqrt() / 2.0);
        }
        Ok(out)
    }

    /// Per-axis table t_a[p] = conj(w_a)^p / sqrt(p!) for p = 0..=deg.
    fn power_tables(&self, w: &KernelPoint, deg: usize) -> [Vec<Complex64>; 4] {
        std::array::from_fn(|a| {
            let wb = w.w[a].conj();
            let mut t = Vec::with_capacity(deg + 1);
            let mut pw = Complex64::new(1.0, 0.0);
            for p in 0..=deg {
                t.push(pw * self.inv_sqrt_fact[p]);
                pw *= wb;
            }
            t
        })
    }

    fn chi_on(&self, w: &KernelPoint, basis: &[MultiIndex], deg: usize) -> CoefVector {
        let t = self.power_tables(w, deg);
        let coeffs = basis
            .iter()
            .map(|k| t[0][k[0] as usize] * t[1][k[1] as usize] * t[2][k[2] as usize] * t[3][k[3] as usize])
            .collect();
        CoefVector { coeffs }
    }

    /// Reproducing-kernel coefficients on the domain basis:
    /// coefficient at k is prod_a conj(w_a)^{k_a} / sqrt(k_a!).
    pub fn chi_coeffs(&self, w: &KernelPoint) -> CoefVector {
        self.chi_on(w, &self.basis, self.degree)
    }

    /// Same kernel truncated at degree D+1 (codomain coordinates).
    pub fn chi_coeffs_ext(&self, w: &KernelPoint) -> CoefVector {
        self.chi_on(w, &self.basis_ext, self.degree + 1)
    }

    /// Coefficients of xi_ab(w) = psi(w) chi_w on the domain basis, plus the
    /// slot sign (-1)^{ab}. The two-form slot itself is carried by callers.
    pub fn xi_coeffs(
        &self,
        a: usize,
        b: usize,
        w: &KernelPoint,
        c_tilde: f64,
    ) -> Result<(CoefVector, f64)> {
        let sign = xi_sign(a, b)?;
        let p = psi(w, c_tilde);
        Ok((self.chi_coeffs(w).scale(Complex64::new(p, 0.0)), sign))
    }

    fn check_cond(&self) -> Result<()> {
        let cond = self.zeta_cond();
        if cond > COND_LIMIT {
            return Err(Error::IllConditioned(format!(
                "zeta normal equations have condition number {cond:.3e} > {COND_LIMIT:.1e}"
            )));
        }
        Ok(())
    }

    /// Per-block ingredients of zeta(w) and of the range projection of
    /// psi chi_w: for each rest degree m returns (zeta range coords
    /// R_m^{-T} u_m, expanded zeta block Q_m R_m^{-T} u_m, xi range coords
    /// Q_m^T u+_m), where u_m[p] = conj(w0)^p / sqrt(p!).
    fn d0_block_solves(&self, w: &KernelPoint) -> Vec<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
        // Returned as complex-free matrices of shape (len, 2): real and
        // imaginary parts in separate columns so nalgebra's real triangular
        // solves apply (the blocks are real).
        let t0 = {
            let wb = w.w[0].conj();
            let mut t = Vec::with_capacity(self.degree + 2);
            let mut pw = Complex64::new(1.0, 0.0);
            for p in 0..=(self.degree + 1) {
                t.push(pw * self.inv_sqrt_fact[p]);
                pw *= wb;
            }
            t
        };
        self.blocks
            .iter()
            .enumerate()
            .map(|(m, blk)| {
                let n = self.degree - m + 1;
                let mut u = DMatrix::<f64>::zeros(n, 2);
                for p in 0..n {
                    u[(p, 0)] = t0[p].re;
                    u[(p, 1)] = t0[p].im;
                }
                let y = blk
                    .r
                    .transpose()
                    .solve_lower_triangular(&u)
                    .expect("triangular solve on full-rank block");
                let zeta_block = &blk.q * &y;
                let mut uplus = DMatrix::<f64>::zeros(n + 1, 2);
                for p in 0..=n {
                    uplus[(p, 0)] = t0[p].re;
                    uplus[(p, 1)] = t0[p].im;
                }
                let xi_range = blk.q.transpose() * uplus;
                (y, zeta_block, xi_range)
            })
            .collect()
    }

    /// Prefactor prod_{a=1..3} conj(w_a)^{r_a} / sqrt(r_a!) of each domain
    /// index's rest block.
    fn rest_factors(&self, w: &KernelPoint) -> Vec<Complex64> {
        let t = self.power_tables(w, self.degree);
        self.basis
            .iter()
            .map(|k| t[1][k[1] as usize] * t[2][k[2] as usize] * t[3][k[3] as usize])
            .collect()
    }

    /// Minimum-norm zeta(w) in range(d_0), as codomain coefficients: the
    /// unique minimizer of ||zeta|| under M^T zeta = chi_coeffs(w), so that
    /// <d_0 x, zeta(w)> = x(w) for every x of degree <= D.
    pub fn zeta_coeffs(&self, w: &KernelPoint) -> Result<CoefVector> {
        self.check_cond()?;
        let solves = self.d0_block_solves(w);
        let rest = {
            let t = self.power_tables(w, self.degree + 1);
            self.basis_ext
                .iter()
                .map(|k| t[1][k[1] as usize] * t[2][k[2] as usize] * t[3][k[3] as usize])
                .collect::<Vec<_>>()
        };
        let mut out = CoefVector::zeros(self.dim_ext());
        for (i, k) in self.basis_ext.iter().enumerate() {
            let m = (k[1] + k[2] + k[3]) as usize;
            if m > self.degree {
                continue; // outside range(d_0)
            }
            let p = k[0] as usize;
            let zb = &solves[m].1;
            if p < zb.nrows() {
                out.coeffs[i] = rest[i] * Complex64::new(zb[(p, 0)], zb[(p, 1)]);
            }
        }
        Ok(out)
    }

    /// Coordinates of zeta(w) on the orthonormal range basis of d_0. Entry i
    /// corresponds 1:1 to domain basis index i.
    pub fn zeta_range_coords(&self, w: &KernelPoint) -> Result<Vec<Complex64>> {
        self.check_cond()?;
        let solves = self.d0_block_solves(w);
        let rest = self.rest_factors(w);
        Ok(self
            .split
            .iter()
            .enumerate()
            .map(|(i, &(m, p))| {
                let y = &solves[m as usize].0;
                rest[i] * Complex64::new(y[(p as usize, 0)], y[(p as usize, 1)])
            })
            .collect())
    }

    /// Coordinates of the orthogonal projection of psi(w) chi_w (codomain
    /// truncation) onto range(d_0), on the same range basis as
    /// [`Self::zeta_range_coords`].
    pub fn xi_range_coords(&self, w: &KernelPoint, c_tilde: f64) -> Vec<Complex64> {
        let solves = self.d0_block_solves(w);
        let rest = self.rest_factors(w);
        let p_w = psi(w, c_tilde);
        self.split
            .iter()
            .enumerate()
            .map(|(i, &(m, p))| {
                let xr = &solves[m as usize].2;
                rest[i] * Complex64::new(xr[(p as usize, 0)], xr[(p as usize, 1)]) * p_w
            })
            .collect()
    }

    /// Range-basis coordinates of d_0 f for domain coefficients f: per rest
    /// block this is the triangular factor R_m applied to the k0 profile.
    pub fn apply_d0_range(&self, f: &CoefVector) -> Result<Vec<Complex64>> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "apply_d0_range: vector length {} vs workspace {}",
                f.len(),
                self.dim()
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (i, k) in self.basis.iter().enumerate() {
            let (m, p) = self.split[i];
            let r = &self.blocks[m as usize].r;
            let mut acc = Complex64::new(0.0, 0.0);
            for pp in (p as usize)..r.ncols() {
                let rv = r[(p as usize, pp)];
                if rv == 0.0 {
                    continue;
                }
                let mut kk = *k;
                kk[0] = pp as u16;
                acc += f.coeffs[self.index[&kk]] * rv;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// Expands range-basis coordinates into codomain coefficients.
    pub fn range_expand(&self, coords: &[Complex64]) -> Result<CoefVector> {
        if coords.len() != self.range_dim() {
            return Err(Error::DimensionMismatch(format!(
                "range_expand: {} coords vs range dim {}",
                coords.len(),
                self.range_dim()
            )));
        }
        let mut out = CoefVector::zeros(self.dim_ext());
        for (i, k) in self.basis.iter().enumerate() {
            let c = coords[i];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (m, p) = self.split[i];
            let q = &self.blocks[m as usize].q;
            // Column p of Q_m, placed on the codomain block with the same
            // rest exponents as domain index i.
            for row in 0..q.nrows() {
                let qv = q[(row, p as usize)];
                if qv == 0.0 {
                    continue;
                }
                let mut kk = *k;
                kk[0] = row as u16;
                out.coeffs[self.index_ext[&kk]] += c * qv;
            }
        }
        Ok(out)
    }
}
