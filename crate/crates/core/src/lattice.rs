//! Tight-binding models on the 2D lattice and their half-lattice edge
//! families.
//!
//! A model is a finite set of hopping matrices `A_{p,q}` on `C^k` with
//! `A_{-p,-q} = A_{p,q}^dag` (self-adjointness) and
//! `T A_{p,q} T^{-1} = A_{p,q}` (fermionic time-reversal symmetry, `T^2=-1`).
//! Its Fourier symbol `H(t,s) = sum A_{p,q} e^{ipt} e^{iqs}` must be gapped at
//! the Fermi level for any index computation to make sense.
//!
//! The edge Hamiltonian is the compression of `H(t)` (Fourier along the edge
//! only) to the half lattice: a block-Toeplitz family. Truncating the half
//! lattice to `N` sites creates a spurious second edge whose in-gap crossings
//! exactly cancel the physical ones, so the edge index classifies every
//! crossing by the weight of its kernel on the left half of the strip and
//! counts only left-localized ones. Intermediate weights refuse loudly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::antiunitary::AntiUnitary;
use crate::eig::{hermitian_eig, HermitianOp, HERM_TOL};
use crate::error::{CoreError, Result};
use crate::flow::{find_crossings, FlowParams};
use crate::mat::{adjoint, c, max_abs, max_abs_diff, CMat};
use crate::path::{OperatorPath, Z2};

/// Residual tolerance for the model invariants.
pub const MODEL_TOL: f64 = 1e-9;
/// A bulk gap below this refuses index computations.
pub const DEFAULT_GAP_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct TightBindingModel {
    k: usize,
    hoppings: BTreeMap<(i32, i32), CMat>,
    fermi_level: f64,
    trs: AntiUnitary,
    hop_range: (i32, i32),
}

impl TightBindingModel {
    /// Build and validate a model. Missing `(-p,-q)` partners are synthesized
    /// from the adjoint; present ones are checked against it.
    pub fn new(
        k: usize,
        hoppings: impl IntoIterator<Item = ((i32, i32), CMat)>,
        fermi_level: f64,
        trs: AntiUnitary,
    ) -> Result<Self> {
        if k == 0 || !k.is_multiple_of(2) {
            return Err(CoreError::OddInternalDimension { k });
        }
        if trs.dim() != k {
            return Err(CoreError::DimensionMismatch {
                left: trs.dim(),
                right: k,
            });
        }
        let mut map: BTreeMap<(i32, i32), CMat> = BTreeMap::new();
        for ((p, q), m) in hoppings {
            if m.nrows() != k || m.ncols() != k {
                return Err(CoreError::Parse(format!(
                    "hopping ({p},{q}) is {}x{}, expected {k}x{k}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            crate::mat::ensure_finite(&m)?;
            if map.insert((p, q), m).is_some() {
                return Err(CoreError::Parse(format!(
                    "duplicate hopping entry for ({p},{q})"
                )));
            }
        }
        // Synthesize absent partners from the adjoint.
        let keys: Vec<(i32, i32)> = map.keys().copied().collect();
        for (p, q) in keys {
            if !map.contains_key(&(-p, -q)) {
                let a = adjoint(&map[&(p, q)]);
                map.insert((-p, -q), a);
            }
        }
        // Self-adjointness and time-reversal symmetry, entry by entry.
        for ((p, q), m) in &map {
            let partner = &map[&(-p, -q)];
            let residual = max_abs_diff(partner, &adjoint(m));
            if residual > MODEL_TOL {
                return Err(CoreError::NotSelfAdjoint {
                    p: *p,
                    q: *q,
                    residual,
                });
            }
            let residual = max_abs_diff(&trs.conjugate(m)?, m);
            if residual > MODEL_TOL {
                return Err(CoreError::NotTimeReversalSymmetric {
                    p: *p,
                    q: *q,
                    residual,
                });
            }
        }
        let hop_range = map.keys().fold((0, 0), |(mp, mq), &(p, q)| {
            (mp.max(p.abs()), mq.max(q.abs()))
        });
        Ok(Self {
            k,
            hoppings: map,
            fermi_level,
            trs,
            hop_range,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn fermi_level(&self) -> f64 {
        self.fermi_level
    }

    pub fn with_fermi_level(mut self, mu: f64) -> Self {
        self.fermi_level = mu;
        self
    }

    pub fn trs(&self) -> &AntiUnitary {
        &self.trs
    }

    pub fn hop_range(&self) -> (i32, i32) {
        self.hop_range
    }

    pub fn hopping_count(&self) -> usize {
        self.hoppings.len()
    }

    /// Bloch Hamiltonian `H(t,s)`.
    pub fn bulk_hamiltonian(&self, t: f64, s: f64) -> HermitianOp {
        let mut m: CMat = ndarray::Array2::zeros((self.k, self.k));
        for ((p, q), a) in &self.hoppings {
            let phase = c(0.0, *p as f64 * t + *q as f64 * s).exp();
            m.zip_mut_with(a, |x, y| *x += y * phase);
        }
        let scale = max_abs(&m).max(1.0);
        HermitianOp::with_tol(m, HERM_TOL * scale).expect("validated model symbol is Hermitian")
    }

    /// Edge-direction symbol `H_q(t) = sum_p A_{p,q} e^{ipt}`.
    pub fn edge_symbol(&self, q: i32, t: f64) -> CMat {
        let mut m: CMat = ndarray::Array2::zeros((self.k, self.k));
        for ((p, qq), a) in &self.hoppings {
            if *qq == q {
                let phase = c(0.0, *p as f64 * t).exp();
                m.zip_mut_with(a, |x, y| *x += y * phase);
            }
        }
        m
    }

    /// Minimum spectral distance to the Fermi level over a torus grid that
    /// includes all four time-reversal-invariant momenta.
    pub fn bulk_gap(
        &self,
        t_density: usize,
        s_density: usize,
        gap_threshold: f64,
    ) -> Result<GapReport> {
        assert!(t_density >= 2 && s_density >= 2);
        let pi = std::f64::consts::PI;
        let mut min_gap = f64::INFINITY;
        let mut argmin = (0.0, 0.0);
        for i in 0..t_density {
            // Even densities hit -pi and 0 exactly, so the TRIM points are on
            // the grid whenever the densities are even.
            let t = -pi + 2.0 * pi * i as f64 / t_density as f64;
            for j in 0..s_density {
                let s = -pi + 2.0 * pi * j as f64 / s_density as f64;
                let dec = hermitian_eig(&self.bulk_hamiltonian(t, s))?;
                for l in &dec.eigenvalues {
                    let d = (l - self.fermi_level).abs();
                    if d < min_gap {
                        min_gap = d;
                        argmin = (t, s);
                    }
                }
            }
        }
        if min_gap < gap_threshold {
            return Err(CoreError::GapClosed {
                min_gap,
                t: argmin.0,
                s: argmin.1,
            });
        }
        Ok(GapReport {
            min_gap,
            argmin,
            t_density,
            s_density,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapReport {
    pub min_gap: f64,
    pub argmin: (f64, f64),
    pub t_density: usize,
    pub s_density: usize,
}

// ---------------------------------------------------------------------------
// Model file format.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixDoc {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    fn to_matrix(&self, k: usize, what: &str) -> Result<CMat> {
        let check = |rows: &Vec<Vec<f64>>, part: &str| -> Result<()> {
            if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                return Err(CoreError::Parse(format!(
                    "{what}: {part} part is not a {k}x{k} matrix"
                )));
            }
            Ok(())
        };
        check(&self.re, "re")?;
        check(&self.im, "im")?;
        let mut m: CMat = ndarray::Array2::zeros((k, k));
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = c(self.re[i][j], self.im[i][j]);
            }
        }
        Ok(m)
    }

    fn from_matrix(m: &CMat) -> Self {
        let k = m.nrows();
        let mut re = vec![vec![0.0; k]; k];
        let mut im = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in 0..k {
                re[i][j] = m[(i, j)].re;
                im[i][j] = m[(i, j)].im;
            }
        }
        Self { re, im }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct HoppingDoc {
    p: i32,
    q: i32,
    matrix: MatrixDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDoc {
    k: usize,
    fermi_level: f64,
    trs: MatrixDoc,
    hoppings: Vec<HoppingDoc>,
}

/// Parse and validate a model document (see the README for the schema).
pub fn load_model(json: &str) -> Result<TightBindingModel> {
    let doc: ModelDoc = serde_json::from_str(json).map_err(|e| CoreError::Parse(e.to_string()))?;
    if doc.k == 0 || !doc.k.is_multiple_of(2) {
        return Err(CoreError::OddInternalDimension { k: doc.k });
    }
    let trs = AntiUnitary::new(doc.trs.to_matrix(doc.k, "trs")?)?;
    let mut hoppings = Vec::new();
    for h in &doc.hoppings {
        hoppings.push((
            (h.p, h.q),
            h.matrix
                .to_matrix(doc.k, &format!("hopping ({},{})", h.p, h.q))?,
        ));
    }
    TightBindingModel::new(doc.k, hoppings, doc.fermi_level, trs)
}

/// Serialize a model to the document format (all stored hoppings included).
pub fn model_to_json(model: &TightBindingModel) -> String {
    let doc = ModelDoc {
        k: model.k,
        fermi_level: model.fermi_level,
        trs: MatrixDoc::from_matrix(model.trs.unitary_part()),
        hoppings: model
            .hoppings
            .iter()
            .map(|((p, q), m)| HoppingDoc {
                p: *p,
                q: *q,
                matrix: MatrixDoc::from_matrix(m),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("model serialization")
}

// ---------------------------------------------------------------------------
// Edge truncation and the Z2 edge index.
// ---------------------------------------------------------------------------

/// Block-Toeplitz truncation of the edge family to `n_sites` sites, assembled
/// as a tau-invariant circle family of dimension `n_sites * k` with the Fermi
/// level already subtracted.
#[derive(Debug, Clone)]
pub struct EdgeTruncation {
    pub n_sites: usize,
    pub t_points: usize,
    pub path: OperatorPath,
}

pub fn edge_truncation(
    model: &TightBindingModel,
    n_sites: usize,
    t_points: usize,
) -> Result<EdgeTruncation> {
    let q_range = model.hop_range().1;
    if (n_sites as i64) <= 4 * q_range as i64 {
        return Err(CoreError::TruncationTooSmall { n_sites, q_range });
    }
    let tau = model.trs().block_lift(n_sites)?;
    let m = model.clone();
    let dim = n_sites * model.k();
    let eval = move |t: f64| edge_block(&m, n_sites, t);
    let path = OperatorPath::circle(dim, t_points + 1, Some(tau), eval)?;
    Ok(EdgeTruncation {
        n_sites,
        t_points,
        path,
    })
}

/// Assemble `H#(t) - mu` on `n_sites` sites.
fn edge_block(model: &TightBindingModel, n_sites: usize, t: f64) -> CMat {
    let k = model.k();
    let q_range = model.hop_range().1;
    let dim = n_sites * k;
    let mut m: CMat = ndarray::Array2::zeros((dim, dim));
    for q in -q_range..=q_range {
        let sym = model.edge_symbol(q, t);
        if max_abs(&sym) == 0.0 {
            continue;
        }
        // Block (n, n') holds H_{n-n'}(t): q = n - n'.
        for n in 0..n_sites as i64 {
            let np = n - q as i64;
            if np < 0 || np >= n_sites as i64 {
                continue;
            }
            let (r0, c0) = (n as usize * k, np as usize * k);
            m.slice_mut(ndarray::s![r0..r0 + k, c0..c0 + k])
                .assign(&sym);
        }
    }
    for i in 0..dim {
        m[(i, i)] -= model.fermi_level();
    }
    m
}

#[derive(Debug, Clone)]
pub struct EdgeOptions {
    pub t_points: usize,
    pub loc_threshold: f64,
    /// Kernel window for in-gap crossings. The default leaves room for the
    /// exponentially small left/right splitting at moderate widths.
    pub kernel_tol: f64,
    /// Count only left-localized crossings. Disabling this recovers the
    /// two-edge cancellation (the full truncated family has flow 0).
    pub localization_filter: bool,
    pub gap_t_density: usize,
    pub gap_s_density: usize,
    pub gap_threshold: f64,
}

impl Default for EdgeOptions {
    fn default() -> Self {
        Self {
            t_points: 400,
            loc_threshold: 0.9,
            kernel_tol: 1e-6,
            localization_filter: true,
            gap_t_density: 100,
            gap_s_density: 100,
            gap_threshold: DEFAULT_GAP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeCrossingInfo {
    pub t: f64,
    pub total_rank: usize,
    pub left_rank: usize,
    pub right_rank: usize,
    /// Left-half weights of the kernel split (eigenvalues of the compressed
    /// left-weight operator).
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeIndexReport {
    pub value: Z2,
    pub n_sites: usize,
    pub t_points: usize,
    pub crossings: Vec<EdgeCrossingInfo>,
    /// Smallest distance of any localization weight to the rejection band.
    pub min_margin: f64,
    pub bulk_min_gap: f64,
}

/// Split a kernel basis into left- and right-localized parts. The raw
/// eigenvectors of nearly degenerate left/right pairs mix arbitrarily, so the
/// split diagonalizes the left-weight operator compressed to the kernel; its
/// eigenvalues sit near 1 (left) or 0 (right) once the edges decouple.
fn classify_kernel(
    basis: &CMat,
    n_sites: usize,
    k: usize,
    loc_threshold: f64,
    t: f64,
) -> Result<(usize, usize, Vec<f64>)> {
    // Below 1/2 the left and right windows would overlap and double-count.
    if !(0.5..1.0).contains(&loc_threshold) {
        return Err(CoreError::Parse(format!(
            "loc_threshold {loc_threshold} outside (0.5, 1)"
        )));
    }
    let r = basis.ncols();
    let left_sites = n_sites.div_ceil(2);
    let left_rows = left_sites * k;
    let mut x: CMat = ndarray::Array2::zeros((r, r));
    for a in 0..r {
        for b in 0..r {
            let mut acc = c(0.0, 0.0);
            for i in 0..left_rows {
                acc += basis[(i, a)].conj() * basis[(i, b)];
            }
            x[(a, b)] = acc;
        }
    }
    let dec = hermitian_eig(&HermitianOp::with_tol(x, 1e-8)?)?;
    let mut left = 0usize;
    let mut right = 0usize;
    for &w in &dec.eigenvalues {
        if w >= loc_threshold {
            left += 1;
        } else if w <= 1.0 - loc_threshold {
            right += 1;
        } else {
            return Err(CoreError::AmbiguousLocalization { t, weight: w });
        }
    }
    Ok((left, right, dec.eigenvalues))
}

fn weight_margin(weights: &[f64], loc_threshold: f64) -> f64 {
    weights
        .iter()
        .map(|&w| {
            if w >= loc_threshold {
                w - loc_threshold
            } else {
                (1.0 - loc_threshold) - w
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Z2 edge index: the half-spectral flow of the truncated edge family with
/// crossings attributed to an edge by kernel weight, counting only the
/// left-localized ones.
pub fn edge_index(
    model: &TightBindingModel,
    n_sites: usize,
    opts: &EdgeOptions,
) -> Result<EdgeIndexReport> {
    let gap = model.bulk_gap(opts.gap_t_density, opts.gap_s_density, opts.gap_threshold)?;
    let trunc = edge_truncation(model, n_sites, opts.t_points)?;
    edge_index_of_path(&trunc.path, n_sites, model.k(), opts, gap.min_gap)
}

/// Edge-index counting on an already-assembled (possibly perturbed) truncated
/// edge family. The family must be tau-invariant and share the truncation
/// geometry given by `n_sites` and `k`.
pub fn edge_index_of_path(
    path: &OperatorPath,
    n_sites: usize,
    k: usize,
    opts: &EdgeOptions,
    bulk_min_gap: f64,
) -> Result<EdgeIndexReport> {
    let fp = FlowParams {
        kernel_tol: opts.kernel_tol,
        ..FlowParams::default()
    };
    let records = find_crossings(path, &fp)?;
    let pi = std::f64::consts::PI;

    let mut crossings = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut total = 0usize;
    for rec in &records {
        let (left, right, weights) =
            classify_kernel(&rec.kernel_basis, n_sites, k, opts.loc_threshold, rec.t)?;
        min_margin = min_margin.min(weight_margin(&weights, opts.loc_threshold));
        let counted = if opts.localization_filter {
            left
        } else {
            rec.kernel_rank
        };
        if rec.t == 0.0 || rec.t == -pi {
            if !counted.is_multiple_of(2) {
                return Err(CoreError::OddKernelAtSymmetricPoint {
                    t: rec.t,
                    rank: counted,
                });
            }
            total += counted / 2;
        } else if rec.t < 0.0 {
            total += counted;
        }
        crossings.push(EdgeCrossingInfo {
            t: rec.t,
            total_rank: rec.kernel_rank,
            left_rank: left,
            right_rank: right,
            weights,
        });
    }

    Ok(EdgeIndexReport {
        value: Z2::from_parity(total),
        n_sites,
        t_points: opts.t_points,
        crossings,
        min_margin,
        bulk_min_gap,
    })
}

/// One row of the edge-spectrum CSV: `t,branch,eigenvalue,left_weight`.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeSpectrumRow {
    pub t: f64,
    pub branch: usize,
    pub eigenvalue: f64,
    pub left_weight: f64,
}

/// Full spectrum of `H#(t)` (Fermi level added back) with per-branch
/// left-half weights, for band plots.
pub fn edge_spectrum(
    model: &TightBindingModel,
    n_sites: usize,
    t_points: usize,
) -> Result<Vec<EdgeSpectrumRow>> {
    let trunc = edge_truncation(model, n_sites, t_points)?;
    let k = model.k();
    let left_rows = n_sites.div_ceil(2) * k;
    let mut rows = Vec::new();
    for &t in trunc.path.grid() {
        let dec = trunc.path.eig_at(t)?;
        for (branch, &l) in dec.eigenvalues.iter().enumerate() {
            let col = dec.eigenvectors.column(branch);
            let w: f64 = col.iter().take(left_rows).map(|z| z.norm_sqr()).sum();
            rows.push(EdgeSpectrumRow {
                t,
                branch,
                eigenvalue: l + model.fermi_level(),
                left_weight: w,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{atomic_model, bhz_model};
    use crate::mat::cr;

    #[test]
    fn bhz_fixture_loads_and_reports_range() {
        let m = bhz_model(1.0);
        assert_eq!(m.k(), 4);
        assert_eq!(m.hop_range(), (1, 1));
        assert_eq!(m.hopping_count(), 5);
    }

    #[test]
    fn json_round_trip_preserves_the_symbol() {
        let m = bhz_model(1.3);
        let json = model_to_json(&m);
        let m2 = load_model(&json).unwrap();
        for (t, s) in [(0.0, 0.0), (0.7, -1.1), (-2.0, 0.4)] {
            let a = m.bulk_hamiltonian(t, s);
            let b = m2.bulk_hamiltonian(t, s);
            assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-12);
        }
    }

    #[test]
    fn self_adjointness_violation_is_named() {
        let m = bhz_model(1.0);
        let mut json: serde_json::Value = serde_json::from_str(&model_to_json(&m)).unwrap();
        // Corrupt one entry of A_{1,0}.
        for h in json["hoppings"].as_array_mut().unwrap() {
            if h["p"] == 1 && h["q"] == 0 {
                h["matrix"]["re"][0][0] = serde_json::json!(99.0);
            }
        }
        let err = load_model(&json.to_string()).unwrap_err();
        match err {
            CoreError::NotSelfAdjoint { p, q, .. } => {
                assert_eq!((p.abs(), q.abs()), (1, 0));
            }
            e => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn odd_internal_dimension_rejected() {
        let err = load_model(r#"{"k":3,"fermi_level":0.0,"trs":{"re":[],"im":[]},"hoppings":[]}"#)
            .unwrap_err();
        assert!(matches!(err, CoreError::OddInternalDimension { k: 3 }));
    }

    #[test]
    fn trs_violation_detected() {
        // sigma_z on C^2 with the standard tau: u conj(sz) u^dag = -sz.
        let sz = ndarray::array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]];
        let trs = AntiUnitary::standard(2).unwrap();
        let err = TightBindingModel::new(2, vec![((0, 0), sz)], 0.0, trs).unwrap_err();
        assert!(matches!(err, CoreError::NotTimeReversalSymmetric { .. }));
    }

    #[test]
    fn constant_symbol_model() {
        let m = atomic_model();
        let h = m.bulk_hamiltonian(0.3, -0.9);
        assert_eq!(h.matrix()[(0, 0)], cr(-1.0));
        assert_eq!(h.matrix()[(2, 2)], cr(1.0));
    }

    #[test]
    fn bhz_symbol_at_gamma_point() {
        // At (0,0) the upper block is (M+2) sigma_z.
        let m = bhz_model(1.0);
        let h = m.bulk_hamiltonian(0.0, 0.0);
        assert!((h.matrix()[(0, 0)].re - 3.0).abs() < 1e-12);
        assert!((h.matrix()[(1, 1)].re + 3.0).abs() < 1e-12);
    }

    #[test]
    fn trs_covariance_of_the_symbol() {
        let m = bhz_model(0.8);
        for (t, s) in [(0.3, 1.2), (-0.7, 0.1), (2.0, -2.5)] {
            let lhs = m
                .trs()
                .conjugate(m.bulk_hamiltonian(t, s).matrix())
                .unwrap();
            let rhs = m.bulk_hamiltonian(-t, -s);
            assert!(max_abs_diff(&lhs, rhs.matrix()) < 1e-12);
        }
    }

    #[test]
    fn symbol_consistency_with_edge_symbols() {
        let m = bhz_model(-1.4);
        for (t, s) in [(0.4, 0.9), (-1.3, 2.2)] {
            let mut sum: CMat = ndarray::Array2::zeros((4, 4));
            for q in -1..=1 {
                let phase = c(0.0, q as f64 * s).exp();
                sum.zip_mut_with(&m.edge_symbol(q, t), |x, y| *x += y * phase);
            }
            assert!(max_abs_diff(&sum, m.bulk_hamiltonian(t, s).matrix()) < 1e-12);
        }
    }

    #[test]
    fn bulk_gap_values() {
        // Gapped phase: gap stays open; oracle is min |d(t,s)| on the grid.
        let m = bhz_model(1.0);
        let rep = m.bulk_gap(40, 40, 1e-6).unwrap();
        let pi = std::f64::consts::PI;
        let mut oracle = f64::INFINITY;
        for i in 0..40 {
            let t = -pi + 2.0 * pi * i as f64 / 40.0;
            for j in 0..40 {
                let s = -pi + 2.0 * pi * j as f64 / 40.0;
                let d =
                    (t.sin().powi(2) + s.sin().powi(2) + (1.0 + t.cos() + s.cos()).powi(2)).sqrt();
                oracle = oracle.min(d);
            }
        }
        assert!((rep.min_gap - oracle).abs() < 1e-9);
        assert!(rep.min_gap > 0.1);

        // Critical mass: Dirac point at a TRIM on the grid.
        let m = bhz_model(2.0);
        assert!(matches!(
            m.bulk_gap(40, 40, 1e-6),
            Err(CoreError::GapClosed { .. })
        ));

        // Flat atomic model: gap exactly 1.
        let rep = atomic_model().bulk_gap(8, 8, 1e-6).unwrap();
        assert!((rep.min_gap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn edge_block_is_block_toeplitz() {
        let m = bhz_model(1.0);
        let t = 0.37;
        let h = edge_block(&m, 8, t);
        let k = 4;
        // Same q = n - n' means the same block.
        for n in 1..7usize {
            let a = h.slice(ndarray::s![n * k..(n + 1) * k, (n - 1) * k..n * k]);
            let b = h.slice(ndarray::s![k..2 * k, 0..k]);
            assert!(max_abs_diff(&a.to_owned(), &b.to_owned()) < 1e-14);
        }
        // Beyond the hopping range the blocks vanish.
        let far = h.slice(ndarray::s![0..k, 3 * k..4 * k]).to_owned();
        assert!(max_abs(&far) == 0.0);
    }

    #[test]
    fn truncation_too_small_rejected() {
        let m = bhz_model(1.0);
        assert!(matches!(
            edge_truncation(&m, 4, 50),
            Err(CoreError::TruncationTooSmall { .. })
        ));
    }

    #[test]
    fn edge_truncation_path_is_tau_invariant() {
        // Construction validates tau-invariance; spot-check the residual.
        let m = bhz_model(1.0);
        let trunc = edge_truncation(&m, 8, 40).unwrap();
        let tau = trunc.path.tau().unwrap();
        let a = trunc.path.at_raw(0.9);
        let b = tau.conjugate(&trunc.path.at_raw(-0.9)).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-10);
    }

    #[test]
    fn atomic_model_edge_index_is_zero() {
        let rep = edge_index(&atomic_model(), 8, &EdgeOptions::default()).unwrap();
        assert_eq!(rep.value, Z2::ZERO);
        assert!(rep.crossings.is_empty());
    }

    #[test]
    fn bhz_edge_index_topological_phase() {
        let rep = edge_index(&bhz_model(1.0), 30, &EdgeOptions::default()).unwrap();
        assert_eq!(rep.value, Z2::ONE);
        // The Kramers crossing sits at a symmetric point with two
        // left-localized and two right-localized states.
        let sym: Vec<_> = rep
            .crossings
            .iter()
            .filter(|cr| cr.t == 0.0 || cr.t == -std::f64::consts::PI)
            .collect();
        assert!(!sym.is_empty());
        assert!(sym.iter().all(|cr| cr.left_rank % 2 == 0));
    }

    #[test]
    fn bhz_edge_neutrality_without_filter() {
        let opts = EdgeOptions {
            localization_filter: false,
            ..EdgeOptions::default()
        };
        let rep = edge_index(&bhz_model(1.0), 30, &opts).unwrap();
        assert_eq!(rep.value, Z2::ZERO);
    }

    #[test]
    fn edge_spectrum_rows_cover_all_branches() {
        let m = atomic_model();
        let rows = edge_spectrum(&m, 6, 8).unwrap();
        assert_eq!(rows.len(), 9 * 24);
        assert!(rows
            .iter()
            .all(|r| r.left_weight >= 0.0 && r.left_weight <= 1.0 + 1e-12));
    }
}
