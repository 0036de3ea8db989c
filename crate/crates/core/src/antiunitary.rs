//! Anti-unitary anti-involutions and symmetry checks.
//!
//! An anti-unitary anti-involution is an anti-linear, norm-preserving map `T`
//! with `T^2 = -1`. Every such map is stored in the normal form
//! `T v = u conj(v)` with `u` unitary and `u conj(u) = -1`; the conjugation is
//! always the global entrywise one, so the unitary part determines the map
//! uniquely. `T^2 = -1` forces the dimension to be even (Kramers), and the
//! constructor rejects odd dimensions outright.

use ndarray::Array2;

use crate::eig::{hermitian_eig, HermitianOp};
use crate::error::{CoreError, Result};
use crate::mat::{
    adjoint, conj_entries, ensure_finite, ensure_square, identity, kron, max_abs, max_abs_diff,
    CMat, CVec,
};

#[derive(Debug, Clone)]
pub struct AntiUnitary {
    u: CMat,
}

impl AntiUnitary {
    pub const DEFAULT_TOL: f64 = 1e-10;

    /// Validate `u` as the unitary part of an anti-unitary anti-involution.
    pub fn new(u: CMat) -> Result<Self> {
        Self::with_tol(u, Self::DEFAULT_TOL)
    }

    pub fn with_tol(u: CMat, tol: f64) -> Result<Self> {
        let dim = ensure_square(&u)?;
        ensure_finite(&u)?;
        if !dim.is_multiple_of(2) {
            return Err(CoreError::OddDimension { dim });
        }
        let residual = max_abs_diff(&adjoint(&u).dot(&u), &identity(dim));
        if residual > tol {
            return Err(CoreError::NotUnitary { residual, tol });
        }
        // u conj(u) = -1 encodes T^2 = -1 at the matrix level.
        let anti = u.dot(&conj_entries(&u));
        let residual = max_abs_diff(&anti, &identity(dim).mapv(|z| -z));
        if residual > tol {
            return Err(CoreError::NotAntiInvolution { residual });
        }
        Ok(Self { u })
    }

    /// Standard symplectic form: block-diagonal copies of `[[0,1],[-1,0]]`.
    pub fn standard(dim: usize) -> Result<Self> {
        if !dim.is_multiple_of(2) {
            return Err(CoreError::OddDimension { dim });
        }
        let mut u: CMat = Array2::zeros((dim, dim));
        for b in 0..dim / 2 {
            u[(2 * b, 2 * b + 1)] = 1.0.into();
            u[(2 * b + 1, 2 * b)] = (-1.0).into();
        }
        Self::new(u)
    }

    /// Block swap `[[0,-I],[I,0]]` on `C^{2 half}`.
    pub fn block_swap(half: usize) -> Result<Self> {
        let dim = 2 * half;
        let mut u: CMat = Array2::zeros((dim, dim));
        for i in 0..half {
            u[(i, half + i)] = (-1.0).into();
            u[(half + i, i)] = 1.0.into();
        }
        Self::new(u)
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn unitary_part(&self) -> &CMat {
        &self.u
    }

    /// Apply the anti-linear map itself: `v -> u conj(v)`.
    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        if v.len() != self.dim() {
            return Err(CoreError::DimensionMismatch {
                left: v.len(),
                right: self.dim(),
            });
        }
        Ok(self.u.dot(&v.mapv(|z| z.conj())))
    }

    /// Matrix of `T M T^{-1}`, i.e. `u conj(M) u^dag`.
    pub fn conjugate(&self, m: &CMat) -> Result<CMat> {
        let n = ensure_square(m)?;
        if n != self.dim() {
            return Err(CoreError::DimensionMismatch {
                left: n,
                right: self.dim(),
            });
        }
        Ok(self.u.dot(&conj_entries(m)).dot(&adjoint(&self.u)))
    }

    /// Lift to `n_blocks` copies: `kron(I, u)`, acting blockwise on stacked
    /// coefficient vectors. Used for sitewise and Fourier-mode lifts.
    pub fn block_lift(&self, n_blocks: usize) -> Result<Self> {
        Self::new(kron(&identity(n_blocks), &self.u))
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        let n = self.dim() + other.dim();
        let mut u: CMat = Array2::zeros((n, n));
        u.slice_mut(ndarray::s![..self.dim(), ..self.dim()])
            .assign(&self.u);
        u.slice_mut(ndarray::s![self.dim().., self.dim()..])
            .assign(other.unitary_part());
        Self::new(u)
    }
}

/// One eigenvalue cluster of a Hermitian operator, at a given resolution.
#[derive(Debug, Clone)]
pub struct EigCluster {
    pub center: f64,
    pub multiplicity: usize,
}

/// Result of a Kramers degeneracy check.
#[derive(Debug, Clone)]
pub struct KramersReport {
    pub pass: bool,
    pub invariance_residual: f64,
    pub resolution: f64,
    pub clusters: Vec<EigCluster>,
}

/// Check Kramers degeneracy of a `T`-invariant Hermitian operator: every
/// eigenvalue cluster (at resolution `tol * max(1, ||M||)`) must have even
/// multiplicity. Errors with `NotTauInvariant` if `T M T^{-1} != M`.
pub fn kramers_check(m: &HermitianOp, t: &AntiUnitary, tol: f64) -> Result<KramersReport> {
    let dec = hermitian_eig(m)?;
    let scale = dec
        .eigenvalues
        .iter()
        .fold(1.0f64, |acc, &l| acc.max(l.abs()));
    let invariance_residual = max_abs_diff(&t.conjugate(m.matrix())?, m.matrix());
    if invariance_residual > tol * scale.max(max_abs(m.matrix())) {
        return Err(CoreError::NotTauInvariant {
            context: "kramers_check operand".into(),
            residual: invariance_residual,
        });
    }
    let resolution = tol * scale;
    let mut clusters: Vec<EigCluster> = Vec::new();
    for &l in &dec.eigenvalues {
        match clusters.last_mut() {
            Some(c) if (l - c.center).abs() <= resolution => {
                // Running-center update keeps the cluster anchored.
                c.center = (c.center * c.multiplicity as f64 + l) / (c.multiplicity + 1) as f64;
                c.multiplicity += 1;
            }
            _ => clusters.push(EigCluster {
                center: l,
                multiplicity: 1,
            }),
        }
    }
    let pass = clusters.iter().all(|c| c.multiplicity % 2 == 0);
    Ok(KramersReport {
        pass,
        invariance_residual,
        resolution,
        clusters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{c, cr};
    use ndarray::array;

    fn std2() -> AntiUnitary {
        AntiUnitary::standard(2).unwrap()
    }

    #[test]
    fn standard_form_is_valid() {
        let t = std2();
        assert_eq!(t.dim(), 2);
    }

    #[test]
    fn identity_is_not_an_anti_involution() {
        let err = AntiUnitary::new(identity(2)).unwrap_err();
        assert!(matches!(err, CoreError::NotAntiInvolution { .. }));
    }

    #[test]
    fn block_diagonal_of_valid_blocks_is_valid() {
        let t = AntiUnitary::standard(4).unwrap();
        assert_eq!(t.dim(), 4);
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(matches!(
            AntiUnitary::standard(3),
            Err(CoreError::OddDimension { dim: 3 })
        ));
        let mut u: CMat = Array2::zeros((1, 1));
        u[(0, 0)] = cr(1.0);
        assert!(matches!(
            AntiUnitary::new(u),
            Err(CoreError::OddDimension { dim: 1 })
        ));
    }

    #[test]
    fn non_unitary_rejected() {
        let u = array![[cr(0.0), cr(2.0)], [cr(-2.0), cr(0.0)]];
        assert!(matches!(
            AntiUnitary::new(u),
            Err(CoreError::NotUnitary { .. })
        ));
    }

    #[test]
    fn conjugation_swaps_diagonal_entries() {
        // Hand computation: u conj(diag(a,b)) u^dag = diag(b,a) for the
        // standard 2x2 form.
        let t = std2();
        let m = array![[cr(2.0), cr(0.0)], [cr(0.0), cr(5.0)]];
        let got = t.conjugate(&m).unwrap();
        let want = array![[cr(5.0), cr(0.0)], [cr(0.0), cr(2.0)]];
        assert!(max_abs_diff(&got, &want) < 1e-14);
    }

    #[test]
    fn conjugation_fixes_identity_and_flips_scalars() {
        let t = std2();
        assert!(max_abs_diff(&t.conjugate(&identity(2)).unwrap(), &identity(2)) < 1e-14);
        let m = identity(2).mapv(|z| z * c(0.0, 1.0));
        let want = identity(2).mapv(|z| z * c(0.0, -1.0));
        assert!(max_abs_diff(&t.conjugate(&m).unwrap(), &want) < 1e-14);
    }

    #[test]
    fn dimension_mismatch_detected() {
        let t = std2();
        let m = identity(4);
        assert!(matches!(
            t.conjugate(&m),
            Err(CoreError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kramers_passes_on_scalar_matrix() {
        let t = std2();
        let m = HermitianOp::new(identity(2).mapv(|z| z * 3.5)).unwrap();
        let rep = kramers_check(&m, &t, 1e-8).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.clusters.len(), 1);
        assert_eq!(rep.clusters[0].multiplicity, 2);
    }

    #[test]
    fn kramers_rejects_non_invariant_operand() {
        // x sigma_z maps to -x sigma_z under the standard form, so it is not
        // tau-invariant for x != 0.
        let t = std2();
        let m = HermitianOp::new(array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]]).unwrap();
        assert!(matches!(
            kramers_check(&m, &t, 1e-8),
            Err(CoreError::NotTauInvariant { .. })
        ));
    }

    #[test]
    fn symmetrized_random_matrices_have_even_multiplicities() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 4, 6, 8] {
            let t = AntiUnitary::standard(dim).unwrap();
            for _ in 0..5 {
                let mut g: CMat = Array2::zeros((dim, dim));
                for z in g.iter_mut() {
                    *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                }
                let q = (&g + &adjoint(&g)).mapv(|z| z * 0.5);
                let m = (&q + &t.conjugate(&q).unwrap()).mapv(|z| z * 0.5);
                let rep = kramers_check(&HermitianOp::new(m).unwrap(), &t, 1e-8).unwrap();
                assert!(rep.pass, "odd multiplicity at dim {dim}");
            }
        }
    }

    #[test]
    fn conjugation_is_an_involution_on_matrices() {
        use proptest::prelude::*;
        let cases = proptest::collection::vec(-1.0f64..1.0, 8);
        proptest!(ProptestConfig::with_cases(64), |(v in cases)| {
            let t = std2();
            let m = array![
                [c(v[0], v[1]), c(v[2], v[3])],
                [c(v[4], v[5]), c(v[6], v[7])]
            ];
            let back = t.conjugate(&t.conjugate(&m).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&back, &m) < 1e-12);
        });
    }
}
