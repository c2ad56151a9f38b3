//! Orthonormal bases of su(n) and so(n), structure constants, standard
//! representations and quadratic Casimir operators.
//!
//! All generators are skew-Hermitian and orthonormal under the form
//! `<A, B> = -Tr[A B]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const ORTHO_TOL: f64 = 1e-12;
const SCALAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Su,
    So,
}

/// Orthonormal skew-Hermitian basis of a compact Lie algebra.
#[derive(Debug, Clone)]
pub struct LieBasis {
    pub kind: GroupKind,
    pub n: usize,
    pub generators: Vec<CMat>,
}

impl LieBasis {
    /// Number of generators N.
    pub fn dim_g(&self) -> usize {
        self.generators.len()
    }

    /// Dimension of the defining matrices.
    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    /// Checks skew-Hermiticity and orthonormality under `-Tr[AB]`.
    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.generators.iter().enumerate() {
            let dev = (g + g.adjoint()).camax();
            if dev > ORTHO_TOL {
                return Err(Error::Tolerance(format!(
                    "generator {i} not skew-Hermitian (deviation {dev:.3e})"
                )));
            }
        }
        for a in 0..self.dim_g() {
            for b in a..self.dim_g() {
                let ip = minus_trace_product(&self.generators[a], &self.generators[b]);
                let target = if a == b { 1.0 } else { 0.0 };
                let dev = (ip - Complex64::new(target, 0.0)).norm();
                if dev > ORTHO_TOL {
                    return Err(Error::Tolerance(format!(
                        "orthonormality failed at ({a},{b}): deviation {dev:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// `-Tr[A B]`, the bilinear form fixing the basis normalization.
pub fn minus_trace_product(a: &CMat, b: &CMat) -> Complex64 {
    -(a * b).trace()
}

/// su(n) basis from the generalized Gell-Mann family: for each pair j < k a
/// symmetric and an antisymmetric Hermitian matrix, then the diagonal
/// traceless ones, each multiplied by -i and scaled so -Tr[E^2] = 1.
///
/// For n = 2 this yields exactly -i sigma_alpha / sqrt(2) in Pauli order.
pub fn build_su_basis(n: usize) -> Result<LieBasis> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("su(n) requires n >= 2, got {n}")));
    }
    let mut gens = Vec::with_capacity(n * n - 1);
    let zero = Complex64::new(0.0, 0.0);
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    for k in 1..n {
        for j in 0..k {
            // -i * (e_j e_k^T + e_k e_j^T) / sqrt(2)
            let mut sym = CMat::from_element(n, n, zero);
            sym[(j, k)] = Complex64::new(0.0, -inv_sqrt2);
            sym[(k, j)] = Complex64::new(0.0, -inv_sqrt2);
            gens.push(sym);
            // -i * [-i (e_j e_k^T - e_k e_j^T)] / sqrt(2)
            let mut asym = CMat::from_element(n, n, zero);
            asym[(j, k)] = Complex64::new(-inv_sqrt2, 0.0);
            asym[(k, j)] = Complex64::new(inv_sqrt2, 0.0);
            gens.push(asym);
        }
    }
    for l in 1..n {
        // -i * diag(1, ..., 1, -l, 0, ..., 0) / sqrt(l(l+1))
        let scale = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = CMat::from_element(n, n, zero);
        for j in 0..l {
            diag[(j, j)] = Complex64::new(0.0, -scale);
        }
        diag[(l, l)] = Complex64::new(0.0, l as f64 * scale);
        gens.push(diag);
    }
    let basis = LieBasis { kind: GroupKind::Su, n, generators: gens };
    basis.validate()?;
    Ok(basis)
}

/// so(n) basis: E_{jk} = (e_j e_k^T - e_k e_j^T) / sqrt(2) for j < k.
pub fn build_so_basis(n: usize) -> Result<LieBasis> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("so(n) requires n >= 3, got {n}")));
    }
    let mut gens = Vec::with_capacity(n * (n - 1) / 2);
    let zero = Complex64::new(0.0, 0.0);
    let inv_sqrt2 = 1.0 / 2.0_f64.sqrt();
    for k in 1..n {
        for j in 0..k {
            let mut m = CMat::from_element(n, n, zero);
            m[(j, k)] = Complex64::new(inv_sqrt2, 0.0);
            m[(k, j)] = Complex64::new(-inv_sqrt2, 0.0);
            gens.push(m);
        }
    }
    let basis = LieBasis { kind: GroupKind::So, n, generators: gens };
    basis.validate()?;
    Ok(basis)
}

/// Structure constants c[gamma][alpha][beta] = -Tr[E^gamma [E^alpha, E^beta]].
///
/// Antisymmetry in (alpha, beta) is exact by construction: entries are
/// computed once for alpha < beta and mirrored with negation.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    dim: usize,
    c: Vec<f64>,
    /// Per gamma, the nonzero (alpha, beta, value) triples over all
    /// ordered pairs (both orders included).
    nonzero: Vec<Vec<(usize, usize, f64)>>,
}

impl StructureConstants {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, gamma: usize, alpha: usize, beta: usize) -> f64 {
        self.c[(gamma * self.dim + alpha) * self.dim + beta]
    }

    pub fn nonzero(&self, gamma: usize) -> &[(usize, usize, f64)] {
        &self.nonzero[gamma]
    }

    /// Uniform scaling of the tensor (used by scaling tests).
    pub fn scaled(&self, lambda: f64) -> StructureConstants {
        StructureConstants {
            dim: self.dim,
            c: self.c.iter().map(|v| lambda * v).collect(),
            nonzero: self
                .nonzero
                .iter()
                .map(|row| row.iter().map(|&(a, b, v)| (a, b, lambda * v)).collect())
                .collect(),
        }
    }
}

pub fn structure_constants(basis: &LieBasis) -> Result<StructureConstants> {
    basis.validate()?;
    let dim = basis.dim_g();
    let mut c = vec![0.0; dim * dim * dim];
    for alpha in 0..dim {
        for beta in (alpha + 1)..dim {
            let comm = &basis.generators[alpha] * &basis.generators[beta]
                - &basis.generators[beta] * &basis.generators[alpha];
            for gamma in 0..dim {
                let val = minus_trace_product(&basis.generators[gamma], &comm);
                // Real by compactness of the group; the imaginary part is noise.
                debug_assert!(val.im.abs() < 1e-12);
                c[(gamma * dim + alpha) * dim + beta] = val.re;
                c[(gamma * dim + beta) * dim + alpha] = -val.re;
            }
        }
    }
    let nonzero = (0..dim)
        .map(|gamma| {
            let mut row = Vec::new();
            for alpha in 0..dim {
                for beta in 0..dim {
                    let v = c[(gamma * dim + alpha) * dim + beta];
                    if v != 0.0 {
                        row.push((alpha, beta, v));
                    }
                }
            }
            row
        })
        .collect();
    Ok(StructureConstants { dim, c, nonzero })
}

/// An irreducible representation by skew-Hermitian matrices together with the
/// index C(rho) relating its trace form to the defining one.
#[derive(Debug, Clone)]
pub struct Representation {
    pub dim_rep: usize,
    pub images: Vec<CMat>,
    pub c_rho: f64,
}

/// Standard (defining) representation: rho = identity map, C(rho) = 1.
pub fn standard_rep(basis: &LieBasis) -> Representation {
    Representation {
        dim_rep: basis.matrix_dim(),
        images: basis.generators.clone(),
        c_rho: 1.0,
    }
}

/// Trivial representation rho = 0 on C^dim; the loop observable becomes the
/// identity. C(rho) = 0.
pub fn trivial_rep(lie_dim: usize, dim_rep: usize) -> Representation {
    let zero = CMat::from_element(dim_rep, dim_rep, Complex64::new(0.0, 0.0));
    Representation {
        dim_rep,
        images: vec![zero; lie_dim],
        c_rho: 0.0,
    }
}

/// Quadratic Casimir operator -sum_alpha rho(E^alpha)^2, with the detected
/// scalar when it is a multiple of the identity.
#[derive(Debug, Clone)]
pub struct CasimirOperator {
    pub matrix: CMat,
    pub scalar: Option<f64>,
}

pub fn casimir(rep: &Representation) -> CasimirOperator {
    let d = rep.dim_rep;
    let mut m = CMat::from_element(d, d, Complex64::new(0.0, 0.0));
    for img in &rep.images {
        m -= img * img;
    }
    let lambda = m.trace().re / d as f64;
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let target = if i == j { Complex64::new(lambda, 0.0) } else { Complex64::new(0.0, 0.0) };
            dev = dev.max((m[(i, j)] - target).norm());
        }
    }
    let scalar = if dev < SCALAR_TOL { Some(lambda) } else { None };
    CasimirOperator { matrix: m, scalar }
}

/// Casimir scalar of an irreducible representation; errors when the operator
/// is not within tolerance of a multiple of the identity (basis bug).
pub fn casimir_scalar(rep: &Representation) -> Result<f64> {
    casimir(rep).scalar.ok_or_else(|| {
        Error::Tolerance("Casimir operator is not a scalar multiple of the identity".into())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn su2_has_three_orthonormal_generators() {
        let b = build_su_basis(2).unwrap();
        assert_eq!(b.dim_g(), 3);
        b.validate().unwrap();
    }

    #[test]
    fn su2_matches_pauli_candidate() {
        // E^alpha = -i sigma_alpha / sqrt(2) must pass all invariants.
        let b = build_su_basis(2).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let i = Complex64::new(0.0, 1.0);
        let pauli = [
            CMat::from_row_slice(2, 2, &[0.0.into(), (-i) * s, (-i) * s, 0.0.into()]),
            CMat::from_row_slice(2, 2, &[0.0.into(), Complex64::new(-s, 0.0), Complex64::new(s, 0.0), 0.0.into()]),
            CMat::from_row_slice(2, 2, &[(-i) * s, 0.0.into(), 0.0.into(), i * s]),
        ];
        for (g, p) in b.generators.iter().zip(pauli.iter()) {
            assert!((g - p).camax() < 1e-14);
        }
    }

    #[test]
    fn su3_generators_traceless() {
        let b = build_su_basis(3).unwrap();
        assert_eq!(b.dim_g(), 8);
        for g in &b.generators {
            assert!(g.trace().norm() < 1e-14);
        }
    }

    #[test]
    fn su_rejects_small_n() {
        assert!(build_su_basis(1).is_err());
        assert!(build_so_basis(2).is_err());
    }

    #[test]
    fn so_dimensions() {
        assert_eq!(build_so_basis(3).unwrap().dim_g(), 3);
        assert_eq!(build_so_basis(4).unwrap().dim_g(), 6);
    }

    #[test]
    fn so3_generator_sum_is_minus_identity() {
        let b = build_so_basis(3).unwrap();
        let mut sum = CMat::from_element(3, 3, 0.0.into());
        for g in &b.generators {
            sum += g * g;
        }
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { -1.0 } else { 0.0 };
                assert_abs_diff_eq!(sum[(i, j)].re, target, epsilon = 1e-12);
                assert_abs_diff_eq!(sum[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn su2_structure_constants_are_sqrt2_epsilon() {
        // Independent oracle: brute-force commutators expanded entrywise.
        let b = build_su_basis(2).unwrap();
        let sc = structure_constants(&b).unwrap();
        let s2 = 2.0_f64.sqrt();
        for g in 0..3 {
            for a in 0..3 {
                for bb in 0..3 {
                    assert_abs_diff_eq!(sc.get(g, a, bb), s2 * levi_civita(a, bb, g), epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn structure_constants_match_commutator_recomputation() {
        // Recompute -Tr[E^g (E^a E^b - E^b E^a)] with naive scalar loops.
        for basis in [build_su_basis(3).unwrap(), build_so_basis(4).unwrap()] {
            let sc = structure_constants(&basis).unwrap();
            let n = basis.matrix_dim();
            let dim = basis.dim_g();
            for g in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        let mut tr = Complex64::new(0.0, 0.0);
                        for i in 0..n {
                            for j in 0..n {
                                for k in 0..n {
                                    let eg = basis.generators[g][(i, j)];
                                    let ea = basis.generators[a][(j, k)];
                                    let eb = basis.generators[b][(j, k)];
                                    let fa = basis.generators[b][(k, i)];
                                    let fb = basis.generators[a][(k, i)];
                                    tr += eg * (ea * fa - eb * fb);
                                }
                            }
                        }
                        assert_abs_diff_eq!(sc.get(g, a, b), -tr.re, epsilon = 1e-13);
                        assert_abs_diff_eq!(tr.im, 0.0, epsilon = 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn structure_constants_antisymmetric_and_nontrivial() {
        let b = build_su_basis(3).unwrap();
        let sc = structure_constants(&b).unwrap();
        let mut sum_sq = 0.0;
        for g in 0..8 {
            for a in 0..8 {
                assert_eq!(sc.get(g, a, a), 0.0);
                for bb in 0..8 {
                    assert_eq!(sc.get(g, a, bb), -sc.get(g, bb, a));
                    sum_sq += sc.get(g, a, bb).powi(2);
                }
            }
        }
        assert!(sum_sq > 0.0);
    }

    #[test]
    fn jacobi_identity_holds() {
        for basis in [
            build_su_basis(2).unwrap(),
            build_su_basis(3).unwrap(),
            build_so_basis(3).unwrap(),
            build_so_basis(4).unwrap(),
        ] {
            let sc = structure_constants(&basis).unwrap();
            let dim = basis.dim_g();
            for a in 0..dim {
                for b in 0..dim {
                    for g in 0..dim {
                        for nu in 0..dim {
                            let mut s = 0.0;
                            for mu in 0..dim {
                                s += sc.get(mu, a, b) * sc.get(nu, mu, g)
                                    + sc.get(mu, b, g) * sc.get(nu, mu, a)
                                    + sc.get(mu, g, a) * sc.get(nu, mu, b);
                            }
                            assert!(s.abs() < 1e-10, "jacobi violated: {s:.3e}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn standard_rep_has_unit_index() {
        for basis in [build_su_basis(2).unwrap(), build_su_basis(3).unwrap(), build_so_basis(4).unwrap()] {
            let rep = standard_rep(&basis);
            assert_eq!(rep.c_rho, 1.0);
            for a in 0..basis.dim_g() {
                for b in 0..basis.dim_g() {
                    let lhs = (&rep.images[a] * &rep.images[b]).trace();
                    let rhs = (&basis.generators[a] * &basis.generators[b]).trace();
                    assert!((lhs - rep.c_rho * rhs).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn casimir_scalars_match_closed_forms() {
        for n in [2usize, 3, 4] {
            let rep = standard_rep(&build_su_basis(n).unwrap());
            let cas = casimir(&rep);
            let expect = n as f64 - 1.0 / n as f64;
            assert_abs_diff_eq!(cas.scalar.unwrap(), expect, epsilon = 1e-10);
        }
        for n in [3usize, 4, 5] {
            let rep = standard_rep(&build_so_basis(n).unwrap());
            let cas = casimir(&rep);
            assert_abs_diff_eq!(cas.scalar.unwrap(), (n as f64 - 1.0) / 2.0, epsilon = 1e-10);
        }
        // su(2) standard: scalar 3/2.
        let rep = standard_rep(&build_su_basis(2).unwrap());
        assert_abs_diff_eq!(casimir_scalar(&rep).unwrap(), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn casimir_commutes_with_all_images() {
        for basis in [build_su_basis(3).unwrap(), build_so_basis(4).unwrap()] {
            let rep = standard_rep(&basis);
            let cas = casimir(&rep);
            for img in &rep.images {
                let comm = &cas.matrix * img - img * &cas.matrix;
                assert!(comm.camax() < 1e-10);
            }
        }
    }
}
