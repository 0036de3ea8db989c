//! Discretized suspension operators `d/dt + A(t)` and their kernel indices.
//!
//! Two discretizations, matched to the boundary data:
//!
//! * periodic families use a Fourier-spectral build in the basis
//!   `e^{imt} (x) e_j`: the derivative is the diagonal `im`, multiplication by
//!   `A(t)` is block convolution by the Fourier coefficients of the symbol
//!   (exponentially accurate for smooth symbols);
//! * line families use midpoint finite differences plus spectral boundary
//!   rows: the solution must leave the left endpoint inside the negative
//!   spectral subspace of `A(t_min)` and arrive inside the positive one of
//!   `A(t_max)`, which is exactly one row per constrained direction, so the
//!   matrix index `cols - rows` reproduces the Fredholm index structurally.
//!
//! Kernel dimensions come from singular-value thresholding with an explicit
//! gap-ratio acceptance; a discretization whose singular values do not
//! separate refuses (`NoSpectralGap`) instead of miscounting, because the
//! final answer is a single bit.

use serde::{Deserialize, Serialize};

use crate::antiunitary::AntiUnitary;
use crate::error::{CoreError, Result};
use crate::flow::{sf_tau_circle, sf_tau_line, CircleFlow, EpsPolicy, FlowParams};
use crate::mat::{adjoint, c, conj_entries, frobenius, max_abs, max_abs_diff, CMat};
use crate::path::{OperatorPath, PathDomain, Z2};

#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    Periodic {
        n_modes: usize,
    },
    Aps {
        t_min: f64,
        t_max: f64,
        n_grid: usize,
    },
}

#[derive(Debug, Clone)]
pub struct SuspensionMatrix {
    pub boundary: Boundary,
    /// Square for periodic builds; rows x cols with
    /// rows = (n_grid - 1) k + (boundary constraints) for APS builds.
    pub matrix: CMat,
    pub block_dim: usize,
    /// Mode-space lift of the family's tau (periodic builds only; the
    /// rectangular APS build has distinct domain and range lifts).
    pub induced_tau: Option<AntiUnitary>,
    /// Residual of the discrete odd-symmetry identity
    /// `T conj(S) T^dag = S^dag` (periodic builds with tau).
    pub odd_symmetry_residual: Option<f64>,
    /// Whether the underlying family carries a validated tau structure.
    pub tau_certified: bool,
}

#[derive(Debug, Clone)]
pub struct SuspensionParams {
    /// Singular values below this count as kernel.
    pub sigma_tol: f64,
    /// Required ratio between the smallest retained and largest rejected
    /// singular value.
    pub gap_factor: f64,
    /// Relative Fourier tail bound for the aliasing check.
    pub alias_rel_tol: f64,
    /// Max acceptable odd-symmetry residual for reporting a tau-index from a
    /// periodic build.
    pub tau_residual_tol: f64,
}

impl Default for SuspensionParams {
    fn default() -> Self {
        Self {
            sigma_tol: 1e-8,
            gap_factor: 100.0,
            alias_rel_tol: 1e-8,
            tau_residual_tol: 1e-8,
        }
    }
}

/// Fourier coefficients `(1/2pi) int A(t) e^{-ijt} dt` for `|j| <= j_max`,
/// from equispaced samples at twice the retained bandwidth.
fn fourier_coefficients(path: &OperatorPath, j_max: usize) -> Vec<CMat> {
    let n_samples = 2 * (2 * j_max + 1);
    let pi = std::f64::consts::PI;
    let dim = path.dim();
    let samples: Vec<CMat> = (0..n_samples)
        .map(|l| path.at_raw(-pi + 2.0 * pi * l as f64 / n_samples as f64))
        .collect();
    let mut coeffs = Vec::with_capacity(2 * j_max + 1);
    for j in -(j_max as i64)..=(j_max as i64) {
        let mut acc: CMat = ndarray::Array2::zeros((dim, dim));
        for (l, a) in samples.iter().enumerate() {
            let t = -pi + 2.0 * pi * l as f64 / n_samples as f64;
            let phase = c(0.0, -(j as f64) * t).exp() / n_samples as f64;
            acc.zip_mut_with(a, |x, y| *x += y * phase);
        }
        coeffs.push(acc);
    }
    coeffs
}

/// Fourier-spectral build of `d/dt + A(t)` on the circle, modes
/// `m in [-n_modes, n_modes]`.
pub fn build_periodic(
    path: &OperatorPath,
    n_modes: usize,
    params: &SuspensionParams,
) -> Result<SuspensionMatrix> {
    assert!(matches!(path.domain(), PathDomain::Circle));
    assert!(n_modes >= 1);
    let k = path.dim();
    let n = n_modes as i64;

    // Coefficients up to 2 n_modes feed the convolution blocks; energy above
    // n_modes signals an under-resolved symbol.
    let coeffs = fourier_coefficients(path, 2 * n_modes);
    let j0 = 2 * n as usize; // index of j = 0
    let total: f64 = coeffs
        .iter()
        .map(|m| frobenius(m).powi(2))
        .sum::<f64>()
        .sqrt();
    let tail: f64 = coeffs
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as i64 - j0 as i64).unsigned_abs() > n_modes as u64)
        .map(|(_, m)| frobenius(m).powi(2))
        .sum::<f64>()
        .sqrt();
    if total > 0.0 && tail > params.alias_rel_tol * total {
        return Err(CoreError::AliasingDetected {
            tail,
            threshold: params.alias_rel_tol * total,
        });
    }

    let modes = 2 * n_modes + 1;
    let dim = modes * k;
    let mut s: CMat = ndarray::Array2::zeros((dim, dim));
    for mi in 0..modes as i64 {
        let m = mi - n;
        for mj in 0..modes as i64 {
            let mp = mj - n;
            let j = m - mp;
            let block = &coeffs[(j + 2 * n) as usize];
            let (r0, c0) = (mi as usize * k, mj as usize * k);
            s.slice_mut(ndarray::s![r0..r0 + k, c0..c0 + k])
                .assign(block);
            if m == mp {
                for d in 0..k {
                    s[(r0 + d, c0 + d)] += c(0.0, m as f64);
                }
            }
        }
    }

    let (induced_tau, odd_symmetry_residual) = match path.tau() {
        Some(tau) => {
            // tau acts on Fourier coefficients as c_m -> u conj(c_m), i.e. the
            // block lift of u without mode reversal.
            let lift = tau.block_lift(modes)?;
            let t = lift.unitary_part();
            let lhs = t.dot(&conj_entries(&s)).dot(&adjoint(t));
            let residual = max_abs_diff(&lhs, &adjoint(&s));
            (Some(lift), Some(residual))
        }
        None => (None, None),
    };

    Ok(SuspensionMatrix {
        boundary: Boundary::Periodic { n_modes },
        matrix: s,
        block_dim: k,
        induced_tau,
        odd_symmetry_residual,
        tau_certified: path.tau().is_some(),
    })
}

/// Midpoint finite-difference build of `d/dt + A(t)` on a line family with
/// spectral boundary rows: the positive subspace of `A(t_min)` is annihilated
/// at the first grid value, the negative subspace of `A(t_max)` at the last.
pub fn build_aps(path: &OperatorPath, n_grid: usize) -> Result<SuspensionMatrix> {
    let PathDomain::Line { t_min, t_max } = path.domain() else {
        panic!("build_aps expects a line family");
    };
    assert!(n_grid >= 3);
    let k = path.dim();
    let h = (t_max - t_min) / (n_grid - 1) as f64;

    // Endpoint spectral data; a singular endpoint leaves the boundary
    // projection undefined.
    let left = path.eig_at(t_min)?;
    if left.min_abs_eigenvalue() <= crate::path::ENDPOINT_TOL {
        return Err(CoreError::SingularEndpoint {
            t: t_min,
            value: left.min_abs_eigenvalue(),
        });
    }
    let right = path.eig_at(t_max)?;
    if right.min_abs_eigenvalue() <= crate::path::ENDPOINT_TOL {
        return Err(CoreError::SingularEndpoint {
            t: t_max,
            value: right.min_abs_eigenvalue(),
        });
    }
    let left_pos: Vec<usize> = left
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > 0.0)
        .map(|(i, _)| i)
        .collect();
    let right_neg: Vec<usize> = right
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l < 0.0)
        .map(|(i, _)| i)
        .collect();

    let cols = n_grid * k;
    let rows = (n_grid - 1) * k + left_pos.len() + right_neg.len();
    let mut s: CMat = ndarray::Array2::zeros((rows, cols));

    // Differential rows: (x_{j+1} - x_j)/h + A(t_{j+1/2}) (x_{j+1} + x_j)/2.
    for j in 0..n_grid - 1 {
        let tm = t_min + (j as f64 + 0.5) * h;
        let a_mid = path.at_raw(tm);
        let r0 = j * k;
        for d in 0..k {
            for e in 0..k {
                let half_a = a_mid[(d, e)] * 0.5;
                s[(r0 + d, j * k + e)] += half_a;
                s[(r0 + d, (j + 1) * k + e)] += half_a;
            }
            s[(r0 + d, j * k + d)] -= 1.0 / h;
            s[(r0 + d, (j + 1) * k + d)] += 1.0 / h;
        }
    }

    // Boundary rows: one row per constrained direction keeps the cokernel
    // free of rank-deficient projector rows.
    let mut r = (n_grid - 1) * k;
    for &i in &left_pos {
        let v = left.eigenvectors.column(i);
        for d in 0..k {
            s[(r, d)] = v[d].conj();
        }
        r += 1;
    }
    for &i in &right_neg {
        let v = right.eigenvectors.column(i);
        for d in 0..k {
            s[(r, (n_grid - 1) * k + d)] = v[d].conj();
        }
        r += 1;
    }

    Ok(SuspensionMatrix {
        boundary: Boundary::Aps {
            t_min,
            t_max,
            n_grid,
        },
        matrix: s,
        block_dim: k,
        induced_tau: None,
        odd_symmetry_residual: None,
        tau_certified: path.tau().is_some(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexReport {
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
    pub z_index: i64,
    pub tau_index: Option<Z2>,
    /// Ratio between the smallest retained and the largest rejected singular
    /// value (infinite when nothing is rejected and nothing retained fails).
    pub singular_value_gap: f64,
}

/// Kernel and cokernel dimensions by singular-value thresholding, with a
/// gap-ratio acceptance test.
pub fn index_of(s: &SuspensionMatrix, params: &SuspensionParams) -> Result<IndexReport> {
    use ndarray_linalg::SVD;
    let (rows, cols) = (s.matrix.nrows(), s.matrix.ncols());
    let (_, sigma, _) = s
        .matrix
        .svd(false, false)
        .map_err(|e| CoreError::ConvergenceFailure(e.to_string()))?;
    let mut sv: Vec<f64> = sigma.to_vec();
    sv.sort_by(f64::total_cmp);

    let small = sv.iter().filter(|&&x| x < params.sigma_tol).count();
    let retained_min = sv.get(small).copied().unwrap_or(f64::INFINITY);
    let rejected_max = if small > 0 { sv[small - 1] } else { 0.0 };
    let gap = if small > 0 {
        if rejected_max == 0.0 {
            f64::INFINITY
        } else {
            retained_min / rejected_max
        }
    } else {
        // Nothing rejected: measure the margin against the threshold itself.
        retained_min / params.sigma_tol
    };
    if gap < params.gap_factor {
        return Err(CoreError::NoSpectralGap {
            ratio: gap,
            required: params.gap_factor,
        });
    }

    let kernel_dim = small + cols.saturating_sub(rows);
    let cokernel_dim = small + rows.saturating_sub(cols);
    let tau_ok = s.tau_certified
        && match s.odd_symmetry_residual {
            Some(r) => r <= params.tau_residual_tol * max_abs(&s.matrix).max(1.0),
            // APS builds certify oddness at the family level.
            None => true,
        };
    Ok(IndexReport {
        kernel_dim,
        cokernel_dim,
        z_index: kernel_dim as i64 - cokernel_dim as i64,
        tau_index: tau_ok.then(|| Z2::from_parity(kernel_dim)),
        singular_value_gap: gap,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RsCheckReport {
    pub sf_tau: Z2,
    pub tau_index: Z2,
    pub equal: bool,
    /// Resolutions actually used (n_grid for line, n_modes for circle).
    pub resolutions: Vec<usize>,
    pub kernel_dims: Vec<usize>,
    pub gaps: Vec<f64>,
    pub shift_applied: Option<f64>,
}

/// Verify the mod-2 index identity on one family: the half-spectral flow of
/// `A` must equal the kernel parity of the discretized `d/dt + A`. The
/// suspension side runs through the resolution schedule until the
/// singular-value gap passes and the parity is stable between the last two
/// resolutions.
pub fn robbin_salamon_z2_check(
    path: &OperatorPath,
    schedule: &[usize],
    flow_params: &FlowParams,
    susp_params: &SuspensionParams,
) -> Result<RsCheckReport> {
    assert!(!schedule.is_empty());
    let (sf, shift_applied) = match path.domain() {
        PathDomain::Line { .. } => (sf_tau_line(path, flow_params)?, None),
        PathDomain::Circle => {
            let CircleFlow {
                value,
                shift_applied,
            } = sf_tau_circle(path, flow_params, EpsPolicy::ShiftIfSingular)?;
            (value, shift_applied)
        }
    };

    let mut resolutions = Vec::new();
    let mut kernel_dims = Vec::new();
    let mut gaps = Vec::new();
    let mut last_err: Option<CoreError> = None;
    for &res in schedule {
        let built = match path.domain() {
            PathDomain::Line { .. } => build_aps(path, res)?,
            PathDomain::Circle => build_periodic(path, res, susp_params)?,
        };
        match index_of(&built, susp_params) {
            Ok(report) => {
                resolutions.push(res);
                kernel_dims.push(report.kernel_dim);
                gaps.push(report.singular_value_gap);
                last_err = None;
            }
            Err(e @ CoreError::NoSpectralGap { .. }) => {
                last_err = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(e) = last_err {
        // The finest resolution still failed the gap test.
        return Err(e);
    }
    if kernel_dims.is_empty() {
        return Err(CoreError::NoSpectralGap {
            ratio: 0.0,
            required: susp_params.gap_factor,
        });
    }
    if kernel_dims.len() >= 2 {
        let a = Z2::from_parity(kernel_dims[kernel_dims.len() - 2]);
        let b = Z2::from_parity(kernel_dims[kernel_dims.len() - 1]);
        if a != b {
            return Err(CoreError::NoSpectralGap {
                ratio: *gaps.last().unwrap(),
                required: susp_params.gap_factor,
            });
        }
    }
    let tau_index = Z2::from_parity(*kernel_dims.last().unwrap());
    Ok(RsCheckReport {
        sf_tau: sf,
        tau_index,
        equal: sf == tau_index,
        resolutions,
        kernel_dims,
        gaps,
        shift_applied,
    })
}

/// Analytic kernel profile of the scalar problem `d/dt + arctan(t)`:
/// `exp(-int_0^t arctan)` with the closed form of the integral.
pub fn arctan_kernel_profile(t: f64) -> f64 {
    (-(t * t.atan() - 0.5 * (1.0 + t * t).ln())).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mat::cr;

    fn params() -> SuspensionParams {
        SuspensionParams::default()
    }

    #[test]
    fn periodic_constant_symbol_is_block_diagonal_with_trivial_kernel() {
        // Symbol diag(1,-1) has no tau; blocks are im I + diag(1,-1).
        let path = crate::path::OperatorPath::circle(2, 64, None, |_| {
            ndarray::array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]]
        })
        .unwrap();
        let s = build_periodic(&path, 4, &params()).unwrap();
        assert_eq!(s.matrix.nrows(), 9 * 2);
        // Off-diagonal mode coupling vanishes for a constant symbol.
        let block = s.matrix.slice(ndarray::s![0..2, 2..4]).to_owned();
        assert!(max_abs(&block) < 1e-14);
        let rep = index_of(&s, &params()).unwrap();
        assert_eq!(rep.kernel_dim, 0);
        assert_eq!(rep.z_index, 0);
        assert!(rep.tau_index.is_none());
    }

    #[test]
    fn periodic_cosine_couples_adjacent_modes_with_half_weight() {
        let path = crate::path::OperatorPath::circle(2, 64, None, |t| {
            ndarray::array![[cr(t.cos()), cr(0.0)], [cr(0.0), cr(t.cos())]]
        })
        .unwrap();
        let s = build_periodic(&path, 4, &params()).unwrap();
        // Block (m, m') with m - m' = 1 is I/2.
        let block = s.matrix.slice(ndarray::s![2..4, 0..2]).to_owned();
        assert!(max_abs_diff(&block, &crate::mat::identity(2).mapv(|z| z * 0.5)) < 1e-12);
    }

    #[test]
    fn periodic_build_satisfies_discrete_odd_symmetry() {
        let path = fixtures::sin_rank2_circle(0.8);
        for n_modes in [8, 16] {
            let s = build_periodic(&path, n_modes, &params()).unwrap();
            assert!(
                s.odd_symmetry_residual.unwrap() < 1e-10,
                "residual {:?} at n_modes {n_modes}",
                s.odd_symmetry_residual
            );
        }
    }

    #[test]
    fn aliasing_guard_fires_on_underresolved_symbols() {
        // Bandwidth 3 with n_modes 2 leaves tail energy above the bound.
        let mut r = fixtures::rng(40);
        let path = fixtures::random_tau_circle_path(&mut r, 4, 3).unwrap();
        assert!(matches!(
            build_periodic(&path, 2, &params()),
            Err(CoreError::AliasingDetected { .. })
        ));
        assert!(build_periodic(&path, 8, &params()).is_ok());
    }

    #[test]
    fn aps_constant_family_has_trivial_kernel() {
        let path = fixtures::constant_line(-10.0, 10.0);
        let s = build_aps(&path, 201).unwrap();
        let rep = index_of(&s, &params()).unwrap();
        assert_eq!(rep.kernel_dim, 0);
        assert_eq!(rep.cokernel_dim, 0);
        assert_eq!(rep.z_index, 0);
    }

    #[test]
    fn aps_arctan_pair_kernel_matches_the_analytic_profile() {
        use ndarray_linalg::SVD;
        let path = fixtures::arctan_pair(-20.0, 20.0);
        let n_grid = 400;
        let s = build_aps(&path, n_grid).unwrap();
        let rep = index_of(&s, &params()).unwrap();
        assert_eq!(rep.kernel_dim, 1);
        assert_eq!(rep.cokernel_dim, 1);
        assert_eq!(rep.z_index, 0);
        assert_eq!(rep.tau_index, Some(crate::path::Z2::ONE));

        // The kernel vector lives in the first block and follows
        // exp(-int arctan) up to normalization.
        let (_, _, vt) = s.matrix.svd(false, true).unwrap();
        let vt = vt.unwrap();
        let null = vt.row(vt.nrows() - 1); // smallest singular value row of V^dag
        let k = 2;
        let mut dots = 0.0f64;
        let mut norm_num = 0.0f64;
        let mut norm_ana = 0.0f64;
        for j in 0..n_grid {
            let t = -20.0 + 40.0 * j as f64 / (n_grid - 1) as f64;
            let num = null[j * k].norm();
            let ana = arctan_kernel_profile(t);
            dots += num * ana;
            norm_num += num * num;
            norm_ana += ana * ana;
        }
        let corr = dots / (norm_num.sqrt() * norm_ana.sqrt());
        assert!(corr > 0.999, "profile correlation {corr}");
        // Second block carries nothing.
        let second: f64 = (0..n_grid).map(|j| null[j * k + 1].norm_sqr()).sum();
        assert!(second < 1e-16);
    }

    #[test]
    fn aps_negated_arctan_pair_also_has_kernel_one() {
        // Negating swaps the roles of the two blocks.
        let tau = crate::antiunitary::AntiUnitary::standard(2).unwrap();
        let path = crate::path::OperatorPath::line(-20.0, 20.0, 2, 801, Some(tau), |t| {
            ndarray::array![[cr(-t.atan()), cr(0.0)], [cr(0.0), cr(t.atan())]]
        })
        .unwrap();
        let s = build_aps(&path, 400).unwrap();
        let rep = index_of(&s, &params()).unwrap();
        assert_eq!(rep.kernel_dim, 1);
        assert_eq!(rep.tau_index, Some(crate::path::Z2::ONE));
    }

    #[test]
    fn z_index_matches_z_flow_on_random_line_families() {
        let mut r = fixtures::rng(17);
        let fp = FlowParams::default();
        let mut checked = 0;
        for _ in 0..6 {
            let path = match fixtures::random_line_path(&mut r, 3, 8.0) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let sf = match crate::flow::sf_z(&path, &fp) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let s = build_aps(&path, 400).unwrap();
            let rep = index_of(&s, &params()).unwrap();
            assert_eq!(rep.z_index, sf, "z-index vs spectral flow");
            checked += 1;
        }
        assert!(checked >= 3, "only {checked} families checked");
    }

    #[test]
    fn rs_check_on_line_normalization_family() {
        let path = fixtures::arctan_pair(-20.0, 20.0);
        let rep =
            robbin_salamon_z2_check(&path, &[200, 400], &FlowParams::default(), &params()).unwrap();
        assert_eq!(rep.sf_tau, crate::path::Z2::ONE);
        assert_eq!(rep.tau_index, crate::path::Z2::ONE);
        assert!(rep.equal);
    }

    #[test]
    fn rs_check_on_constant_circle() {
        let path = fixtures::constant_circle();
        let rep =
            robbin_salamon_z2_check(&path, &[8, 16], &FlowParams::default(), &params()).unwrap();
        assert_eq!(rep.sf_tau, crate::path::Z2::ZERO);
        assert_eq!(rep.tau_index, crate::path::Z2::ZERO);
        assert!(rep.equal);
    }

    #[test]
    fn periodic_and_aps_agree_on_circle_families_with_invertible_seam() {
        // cos-sin circle family: A(±pi) = -I is invertible, so the same
        // family can be discretized both ways.
        let path = fixtures::cos_sin_circle();
        let p = params();
        let periodic = index_of(&build_periodic(&path, 24, &p).unwrap(), &p).unwrap();
        let line_view = path.circle_as_line().unwrap();
        let aps = index_of(&build_aps(&line_view, 600).unwrap(), &p).unwrap();
        assert_eq!(periodic.tau_index, aps.tau_index);
        assert_eq!(
            periodic.kernel_dim % 2,
            aps.kernel_dim % 2,
            "kernel parity must agree"
        );
    }

    #[test]
    fn index_stability_under_mode_doubling() {
        let mut r = fixtures::rng(55);
        let path = fixtures::random_tau_circle_path(&mut r, 4, 2).unwrap();
        let p = params();
        let a = index_of(&build_periodic(&path, 12, &p).unwrap(), &p).unwrap();
        let b = index_of(&build_periodic(&path, 24, &p).unwrap(), &p).unwrap();
        assert_eq!(a.kernel_dim, b.kernel_dim);
        assert_eq!(a.tau_index, b.tau_index);
    }
}
