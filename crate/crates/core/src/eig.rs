//! Hermitian eigenproblems and guarded kernel-rank counting.
//!
//! Eigendecompositions delegate to LAPACK through `ndarray-linalg`; this
//! module owns the contracts: validated Hermitian inputs, ascending
//! eigenvalues, a residual bound on every decomposition, and a kernel count
//! that fails loudly when an eigenvalue lands in the guard band instead of
//! guessing. The half-rank terms of the mod-2 flow make a silent rank error
//! flip the final answer, hence the refusal-first design.

use ndarray_linalg::{Eigh, UPLO};

use crate::error::{CoreError, Result};
use crate::mat::{ensure_finite, ensure_square, hermiticity_residual, select_columns, CMat};

/// Default absolute tolerance on `||M - M^dag||_max`.
pub const HERM_TOL: f64 = 1e-10;
/// Relative residual bound for eigendecompositions.
pub const EIG_RESIDUAL_TOL: f64 = 1e-9;
/// Default multiplicative guard band for kernel counting.
pub const KERNEL_GAP_FACTOR: f64 = 10.0;

/// A validated Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianOp {
    mat: CMat,
}

impl HermitianOp {
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tol(mat, HERM_TOL)
    }

    pub fn with_tol(mat: CMat, tol: f64) -> Result<Self> {
        ensure_square(&mat)?;
        ensure_finite(&mat)?;
        let residual = hermiticity_residual(&mat);
        if residual > tol {
            return Err(CoreError::NotHermitian { residual, tol });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }
}

/// Eigendecomposition with ascending eigenvalues and orthonormal columns.
#[derive(Debug, Clone)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl EigDecomposition {
    /// Spectral radius, used as the natural scale of the operator.
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |acc, &l| acc.max(l.abs()))
    }

    pub fn min_abs_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(f64::INFINITY, |acc, &l| acc.min(l.abs()))
    }

    /// Number of strictly negative eigenvalues.
    pub fn negative_count(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l < 0.0).count()
    }
}

pub fn hermitian_eig(op: &HermitianOp) -> Result<EigDecomposition> {
    // eigh transposes C-layout inputs in place before calling LAPACK, which
    // for complex Hermitian matrices diagonalizes conj(M) and returns
    // conjugated eigenvectors. A Fortran-layout copy sidesteps the swap.
    use ndarray::ShapeBuilder;
    let n = op.dim();
    let mut a_f: CMat = ndarray::Array2::zeros((n, n).f());
    a_f.assign(op.matrix());
    let (vals, vecs) = a_f
        .eigh(UPLO::Lower)
        .map_err(|e| CoreError::ConvergenceFailure(e.to_string()))?;
    let dec = EigDecomposition {
        eigenvalues: vals.to_vec(),
        eigenvectors: vecs,
    };
    // Residual bound ||M v - l v|| <= tol * ||M||, per column.
    let scale = dec.spectral_radius().max(1e-300);
    let mv = op.matrix().dot(&dec.eigenvectors);
    for (i, &l) in dec.eigenvalues.iter().enumerate() {
        let col = mv.column(i);
        let v = dec.eigenvectors.column(i);
        let res: f64 = col
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b * l).norm_sqr())
            .sum::<f64>()
            .sqrt();
        if res > EIG_RESIDUAL_TOL * scale.max(1.0) {
            return Err(CoreError::ConvergenceFailure(format!(
                "eigenpair residual {res:.3e} exceeds bound at index {i}"
            )));
        }
    }
    Ok(dec)
}

/// Count eigenvalues inside the kernel window `(|l| < kernel_tol)`, refusing
/// when any eigenvalue falls in the guard band `[kernel_tol, gap_factor * kernel_tol)`.
pub fn kernel_count(eigenvalues: &[f64], kernel_tol: f64, gap_factor: f64) -> Result<usize> {
    assert!(kernel_tol > 0.0 && gap_factor > 1.0);
    let guard = gap_factor * kernel_tol;
    for &l in eigenvalues {
        let a = l.abs();
        if a >= kernel_tol && a < guard {
            return Err(CoreError::AmbiguousKernel {
                value: a,
                tol: kernel_tol,
                guard,
            });
        }
    }
    Ok(eigenvalues.iter().filter(|l| l.abs() < kernel_tol).count())
}

/// Kernel rank of a Hermitian operator with the default guard band.
pub fn kernel_rank(op: &HermitianOp, kernel_tol: f64) -> Result<usize> {
    let dec = hermitian_eig(op)?;
    kernel_count(&dec.eigenvalues, kernel_tol, KERNEL_GAP_FACTOR)
}

/// Orthonormal basis of the kernel window as matrix columns.
pub fn kernel_basis(dec: &EigDecomposition, kernel_tol: f64, gap_factor: f64) -> Result<CMat> {
    kernel_count(&dec.eigenvalues, kernel_tol, gap_factor)?;
    let idx: Vec<usize> = dec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, l)| l.abs() < kernel_tol)
        .map(|(i, _)| i)
        .collect();
    Ok(select_columns(&dec.eigenvectors, &idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::{c, cr, max_abs_diff};
    use ndarray::{array, Array2};

    fn diag(vals: &[f64]) -> CMat {
        let mut m: CMat = Array2::zeros((vals.len(), vals.len()));
        for (i, &v) in vals.iter().enumerate() {
            m[(i, i)] = cr(v);
        }
        m
    }

    #[test]
    fn eigenvalues_come_out_ascending() {
        let op = HermitianOp::new(diag(&[3.0, 1.0, 2.0])).unwrap();
        let dec = hermitian_eig(&op).unwrap();
        assert_eq!(dec.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let op = HermitianOp::new(array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]]).unwrap();
        let dec = hermitian_eig(&op).unwrap();
        assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-12);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_hermitian_residuals_within_bound() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 8;
        let mut g: CMat = Array2::zeros((n, n));
        for z in g.iter_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let h = (&g + &crate::mat::adjoint(&g)).mapv(|z| z * 0.5);
        let op = HermitianOp::new(h.clone()).unwrap();
        let dec = hermitian_eig(&op).unwrap();
        // M v = l v within tolerance, columns orthonormal.
        let vtv = crate::mat::adjoint(&dec.eigenvectors).dot(&dec.eigenvectors);
        assert!(max_abs_diff(&vtv, &crate::mat::identity(n)) < 1e-12);
        let mv = h.dot(&dec.eigenvectors);
        for (i, &l) in dec.eigenvalues.iter().enumerate() {
            let res: f64 = mv
                .column(i)
                .iter()
                .zip(dec.eigenvectors.column(i).iter())
                .map(|(a, b)| (a - b * l).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn eigenvalues_invariant_under_unitary_conjugation() {
        use proptest::prelude::*;
        proptest!(ProptestConfig::with_cases(32), |(a in -2.0f64..2.0, b in -2.0f64..2.0, th in 0.0f64..6.2)| {
            let m = diag(&[a, b]);
            let u = array![
                [c(th.cos(), 0.0), c(-th.sin(), 0.0)],
                [c(th.sin(), 0.0), c(th.cos(), 0.0)]
            ];
            let rotated = u.dot(&m).dot(&crate::mat::adjoint(&u));
            let mut want = [a, b];
            want.sort_by(f64::total_cmp);
            let dec = hermitian_eig(&HermitianOp::new(rotated).unwrap()).unwrap();
            prop_assert!((dec.eigenvalues[0] - want[0]).abs() < 1e-9);
            prop_assert!((dec.eigenvalues[1] - want[1]).abs() < 1e-9);
        });
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = array![[cr(0.0), cr(1.0)], [cr(2.0), cr(0.0)]];
        assert!(matches!(
            HermitianOp::new(m),
            Err(CoreError::NotHermitian { .. })
        ));
    }

    #[test]
    fn kernel_rank_counts_small_eigenvalues() {
        let op = HermitianOp::new(diag(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(kernel_rank(&op, 1e-8).unwrap(), 2);
        let op = HermitianOp::new(diag(&[1e-12, 0.5])).unwrap();
        assert_eq!(kernel_rank(&op, 1e-8).unwrap(), 1);
    }

    #[test]
    fn kernel_rank_refuses_guard_band() {
        let op = HermitianOp::new(diag(&[0.5e-8, 2e-8])).unwrap();
        assert!(matches!(
            kernel_rank(&op, 1e-8),
            Err(CoreError::AmbiguousKernel { .. })
        ));
    }

    #[test]
    fn kernel_rank_of_invertible_matrix_is_zero() {
        let op = HermitianOp::new(diag(&[0.3, -0.7, 2.0])).unwrap();
        assert_eq!(kernel_rank(&op, 1e-8).unwrap(), 0);
        // Shifting well past the guard band moves counts predictably.
        let op = HermitianOp::new(diag(&[1e-3, -0.7, 2.0])).unwrap();
        assert_eq!(kernel_rank(&op, 1e-8).unwrap(), 0);
    }

    #[test]
    fn kernel_basis_matches_rank() {
        let op = HermitianOp::new(diag(&[0.0, 2.0, 0.0])).unwrap();
        let dec = hermitian_eig(&op).unwrap();
        let basis = kernel_basis(&dec, 1e-8, KERNEL_GAP_FACTOR).unwrap();
        assert_eq!(basis.ncols(), 2);
    }
}
