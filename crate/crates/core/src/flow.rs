//! Crossing detection and spectral flow, Z-valued and Z2-valued.
//!
//! Crossings of a Hermitian family are located by bisection on the negative
//! eigenvalue count between grid samples. For tau-invariant families that is
//! not enough: Kramers-paired branches cross zero in opposite directions at
//! the symmetric points t = 0 and t = ±pi and leave the count unchanged, so
//! those points are always probed directly with a guarded kernel-rank call.
//!
//! The Z-valued flow sums signatures of crossing operators `V^dag dA/dt V`
//! restricted to the kernel. For tau-invariant families the Z-valued flow
//! vanishes identically and the mod-2 refinement is computed instead: kernel
//! ranks over the negative half-parameter plus half the (necessarily even)
//! kernel ranks at the symmetric points, mod 2. Odd ranks at symmetric points
//! are a numerical symmetry violation and error out rather than rounding,
//! since truncation would flip the answer.

use crate::eig::{hermitian_eig, kernel_basis, kernel_count, HermitianOp};
use crate::error::{CoreError, Result};
use crate::mat::{adjoint, conj_entries, max_abs, CMat};
use crate::path::{OperatorPath, PathDomain, Z2};

#[derive(Debug, Clone)]
pub struct FlowParams {
    /// Eigenvalues below this magnitude count as kernel.
    pub kernel_tol: f64,
    /// Guard-band factor above `kernel_tol`; values inside refuse.
    pub gap_factor: f64,
    /// Bisection width target, as a fraction of the domain length.
    pub bisect_tol_factor: f64,
    /// Central-difference step for dA/dt, as a fraction of the domain length.
    pub fd_step_factor: f64,
    /// Crossing operators with an eigenvalue below this are degenerate.
    pub regularity_tol: f64,
    /// Residual tolerance for the mirrored-crossing symmetry report.
    pub gamma_tol: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            kernel_tol: 1e-8,
            gap_factor: 10.0,
            bisect_tol_factor: 1e-10,
            fd_step_factor: 1e-5,
            regularity_tol: 1e-8,
            gamma_tol: 1e-5,
        }
    }
}

impl FlowParams {
    pub fn bisect_tol(&self, path: &OperatorPath) -> f64 {
        self.bisect_tol_factor * path.domain().length()
    }

    pub fn fd_step(&self, path: &OperatorPath) -> f64 {
        self.fd_step_factor * path.domain().length()
    }

    /// Records closer than this collapse into one crossing; also the snap
    /// radius onto the symmetric points.
    pub fn snap_radius(&self, path: &OperatorPath) -> f64 {
        (100.0 * self.bisect_tol(path)).max(1e-8 * path.domain().length())
    }
}

/// One detected zero-eigenvalue crossing.
#[derive(Debug, Clone)]
pub struct CrossingRecord {
    pub t: f64,
    pub kernel_rank: usize,
    /// Orthonormal kernel basis, dim x rank.
    pub kernel_basis: CMat,
    /// Signature of the crossing operator; `None` when degenerate.
    pub crossing_signature: Option<i64>,
    /// Width of the bisection interval; 0 for direct probes.
    pub refinement_width: f64,
}

fn neg_count(path: &OperatorPath, t: f64) -> Result<usize> {
    Ok(path.eig_at(t)?.negative_count())
}

/// Probe the kernel at a fixed parameter; `None` when the kernel is trivial.
fn probe_kernel(path: &OperatorPath, t: f64, p: &FlowParams) -> Result<Option<CrossingRecord>> {
    let dec = path.eig_at(t)?;
    let rank = kernel_count(&dec.eigenvalues, p.kernel_tol, p.gap_factor)?;
    if rank == 0 {
        return Ok(None);
    }
    let basis = kernel_basis(&dec, p.kernel_tol, p.gap_factor)?;
    Ok(Some(CrossingRecord {
        t,
        kernel_rank: rank,
        kernel_basis: basis,
        crossing_signature: None,
        refinement_width: 0.0,
    }))
}

/// Bisect a sign-count change down to `bisect_tol`, then extract the kernel at
/// the midpoint, refining further if the kernel window is still ambiguous.
fn bisect_crossing(
    path: &OperatorPath,
    mut a: f64,
    mut b: f64,
    nu_a: usize,
    p: &FlowParams,
) -> Result<CrossingRecord> {
    let tol = p.bisect_tol(path);
    let mut iters = 0usize;
    while b - a > tol && iters < 200 {
        let m = 0.5 * (a + b);
        let nu_m = neg_count(path, m)?;
        if nu_m == nu_a {
            a = m;
        } else {
            b = m;
        }
        iters += 1;
    }
    // The kernel window can stay ambiguous if the midpoint is not yet close
    // enough to the crossing; keep halving until it resolves.
    loop {
        let mid = 0.5 * (a + b);
        let dec = path.eig_at(mid)?;
        match kernel_count(&dec.eigenvalues, p.kernel_tol, p.gap_factor) {
            Ok(rank) => {
                if rank == 0 {
                    // Count changed but no kernel at the midpoint: the two
                    // interval endpoints still bracket the crossing, keep
                    // refining unless the interval has collapsed.
                    if b - a < f64::EPSILON * (1.0 + mid.abs()) {
                        return Err(CoreError::GridTooCoarse(format!(
                            "sign count changes near t={mid:.6} but no kernel resolves there"
                        )));
                    }
                    let nu_m = neg_count(path, mid)?;
                    if nu_m == nu_a {
                        a = mid;
                    } else {
                        b = mid;
                    }
                    continue;
                }
                let basis = kernel_basis(&dec, p.kernel_tol, p.gap_factor)?;
                return Ok(CrossingRecord {
                    t: mid,
                    kernel_rank: rank,
                    kernel_basis: basis,
                    crossing_signature: None,
                    refinement_width: b - a,
                });
            }
            Err(CoreError::AmbiguousKernel { .. }) if b - a > f64::EPSILON * (1.0 + mid.abs()) => {
                let nu_m = neg_count(path, mid)?;
                if nu_m == nu_a {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Symmetric points that must be probed directly for tau-invariant families.
fn symmetric_points(path: &OperatorPath) -> Vec<f64> {
    match path.domain() {
        PathDomain::Line { t_min, t_max } => {
            if t_min < 0.0 && t_max > 0.0 {
                vec![0.0]
            } else {
                vec![]
            }
        }
        PathDomain::Circle => vec![0.0, -std::f64::consts::PI],
    }
}

/// Negative count at a point required to be clean (no eigenvalue inside the
/// guard band); retries a little further out before giving up.
fn clean_neg_count(path: &OperatorPath, t: f64, p: &FlowParams) -> Result<usize> {
    let dec = path.eig_at(t)?;
    if dec.min_abs_eigenvalue() < p.gap_factor * p.kernel_tol {
        return Err(CoreError::GridTooCoarse(format!(
            "no clean sign count at t={t:.6} (eigenvalue inside the guard band)"
        )));
    }
    Ok(dec.negative_count())
}

/// Half-width of the scan window excluded around an on-grid crossing. The
/// window may extend at most a quarter of the parameter distance at which the
/// smallest eigenvalue outside the kernel could reach zero, so a distinct
/// crossing hiding next to the probed one always falls outside the window and
/// gets scanned. A Frobenius bound on dA/dt majorizes every branch slope.
fn window_half_width(
    path: &OperatorPath,
    t: f64,
    probe_rank: usize,
    step: f64,
    p: &FlowParams,
) -> Result<f64> {
    let dec = path.eig_at(t)?;
    let mut mags: Vec<f64> = dec.eigenvalues.iter().map(|l| l.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let lam_next = mags.get(probe_rank).copied().unwrap_or(f64::INFINITY);
    let fd = p.fd_step(path);
    let da = (&path.at_raw(t + fd) - &path.at_raw(t - fd)).mapv(|z| z / (2.0 * fd));
    let da = (&da + &crate::mat::adjoint(&da)).mapv(|z| z * 0.5);
    // First-order perturbation bounds every branch slope by ||dA/dt||_2.
    let slope_bound = hermitian_eig(&HermitianOp::with_tol(da, 1.0)?)?
        .spectral_radius()
        .max(1e-12);
    Ok((0.25 * lam_next / slope_bound).min(0.1 * step))
}

/// Locate all crossings of the family: interior crossings by bisection on the
/// negative-eigenvalue count, symmetric points by direct kernel probes (for
/// tau-invariant families). Grid samples that sit on a kernel (or inside its
/// guard band) are replaced by clean flanking nodes so that crossings hiding
/// right next to an on-grid crossing are still scanned; the excluded windows
/// are consistency-checked against the probed rank. Records are sorted by t;
/// crossing signatures are filled where the crossing operator is regular.
pub fn find_crossings(path: &OperatorPath, p: &FlowParams) -> Result<Vec<CrossingRecord>> {
    let grid = path.grid();
    let snap = p.snap_radius(path);
    let is_circle = matches!(path.domain(), PathDomain::Circle);
    let sym_pts = if path.tau().is_some() {
        symmetric_points(path)
    } else {
        vec![]
    };
    let step = grid[1] - grid[0];

    // Pass 1: classify grid samples.
    #[derive(Clone, Copy, PartialEq)]
    enum Sample {
        Clean(usize),
        Kernel,
        Suspicious,
    }
    let mut classes: Vec<Sample> = Vec::with_capacity(grid.len());
    for &t in grid.iter() {
        let dec = path.eig_at(t)?;
        let small = dec.min_abs_eigenvalue();
        classes.push(if small < p.kernel_tol {
            Sample::Kernel
        } else if small < p.gap_factor * p.kernel_tol {
            Sample::Suspicious
        } else {
            Sample::Clean(dec.negative_count())
        });
    }
    // The circle seam is one point sampled twice.
    if is_circle && classes[grid.len() - 1] != classes[0] {
        classes[grid.len() - 1] = classes[0];
    }

    let mut records: Vec<CrossingRecord> = Vec::new();

    // Direct probes at symmetric points (these also resolve, or refuse, any
    // guard-band ambiguity there).
    for &t in &sym_pts {
        if let Some(rec) = probe_kernel(path, t, p)? {
            records.push(rec);
        }
    }

    // On-grid kernels: probe directly unless a symmetric point covers them.
    for (i, &t) in grid.iter().enumerate() {
        if classes[i] != Sample::Kernel || (is_circle && i == grid.len() - 1) {
            continue;
        }
        if sym_pts.iter().any(|&s| (t - s).abs() <= snap) {
            continue;
        }
        match probe_kernel(path, t, p)? {
            Some(rec) => records.push(rec),
            None => {
                return Err(CoreError::GridTooCoarse(format!(
                    "grid sample at t={t:.6} sits on a kernel that does not resolve"
                )))
            }
        }
    }

    // Scan nodes: clean grid points stay; kernel and guard-band points are
    // replaced by flanking nodes. Windows around on-grid kernels are excluded
    // from bisection and checked for count consistency instead; guard-band
    // windows are scanned (a crossing may hide just off the sample). The
    // flank offset around a kernel is adaptive: wide enough that the crossing
    // branches clear the guard band, narrow enough that any distinct nearby
    // crossing falls outside the window.
    struct Node {
        t: f64,
        nu: usize,
    }
    let mut nodes: Vec<Node> = Vec::new();
    let mut windows: Vec<(f64, f64, usize)> = Vec::new(); // (lo, hi, max rank)
    let mut suspicious_pts: Vec<f64> = Vec::new();
    let last = grid.len() - 1;
    let record_rank_at = |records: &[CrossingRecord], t: f64| -> Option<usize> {
        records
            .iter()
            .find(|r| {
                let mut d = (r.t - t).abs();
                if is_circle {
                    d = d.min((r.t - t + 2.0 * std::f64::consts::PI).abs());
                    d = d.min((r.t - t - 2.0 * std::f64::consts::PI).abs());
                }
                d <= snap
            })
            .map(|r| r.kernel_rank)
    };
    for (i, &t) in grid.iter().enumerate() {
        match classes[i] {
            Sample::Clean(nu) => nodes.push(Node { t, nu }),
            kind => {
                let flank = match kind {
                    Sample::Kernel => {
                        let rank = record_rank_at(&records, t).unwrap_or(0);
                        window_half_width(path, t, rank, step, p)?.max(4.0 * snap)
                    }
                    _ => {
                        suspicious_pts.push(t);
                        0.1 * step
                    }
                };
                if kind == Sample::Kernel && !(is_circle && (i == 0 || i == last)) {
                    let rank = record_rank_at(&records, t).unwrap_or(0);
                    windows.push((t - flank, t + flank, rank));
                }
                // Flanks, kept inside the domain; the circle seam wraps.
                if i > 0 || !is_circle {
                    let tl = t - flank;
                    if tl > grid[0] - 0.5 * step {
                        nodes.push(Node {
                            t: tl,
                            nu: clean_neg_count(path, tl, p)?,
                        });
                    }
                }
                if i < last || !is_circle {
                    let tr = t + flank;
                    if tr < grid[last] + 0.5 * step {
                        nodes.push(Node {
                            t: tr,
                            nu: clean_neg_count(path, tr, p)?,
                        });
                    }
                }
            }
        }
    }
    nodes.sort_by(|a, b| a.t.total_cmp(&b.t));
    nodes.dedup_by(|a, b| (a.t - b.t).abs() < 1e-15);

    // Seam window on the circle: the flanks pi - eps and -pi + eps bracket
    // the seam point.
    if is_circle && classes[0] == Sample::Kernel {
        let rank = record_rank_at(&records, -std::f64::consts::PI).unwrap_or(0);
        let flank = window_half_width(path, -std::f64::consts::PI, rank, step, p)?.max(4.0 * snap);
        let nu_left = clean_neg_count(path, grid[last] - flank, p)?;
        let nu_right = clean_neg_count(path, grid[0] + flank, p)?;
        if nu_left.abs_diff(nu_right) > rank {
            return Err(CoreError::GridTooCoarse(format!(
                "count changes by {} across the seam but the seam kernel has rank {rank}",
                nu_left.abs_diff(nu_right)
            )));
        }
    }

    // Interior bisection between nodes, skipping excluded windows.
    for w in nodes.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.nu == b.nu {
            continue;
        }
        let mid = 0.5 * (a.t + b.t);
        if let Some(&(_, _, rank)) = windows
            .iter()
            .find(|&&(lo, hi, _)| mid > lo - 1e-15 && mid < hi + 1e-15)
        {
            // Window around a probed on-grid crossing: the count change must
            // be explained by its rank.
            if a.nu.abs_diff(b.nu) > rank {
                return Err(CoreError::GridTooCoarse(format!(
                    "count changes by {} across [{:.6}, {:.6}] but the probed crossing has rank {rank}",
                    a.nu.abs_diff(b.nu),
                    a.t,
                    b.t
                )));
            }
            continue;
        }
        let rec = bisect_crossing(path, a.t, b.t, a.nu, p)?;
        let jump = a.nu.abs_diff(b.nu);
        if jump > rec.kernel_rank {
            return Err(CoreError::GridTooCoarse(format!(
                "count changes by {jump} across [{:.6}, {:.6}] but the refined crossing has rank {}",
                a.t, b.t, rec.kernel_rank
            )));
        }
        records.push(rec);
    }

    // Snap near-symmetric records onto the symmetric points, then dedupe.
    for rec in records.iter_mut() {
        for &s in &sym_pts {
            if (rec.t - s).abs() <= snap {
                rec.t = s;
            }
        }
        if is_circle {
            // Canonical seam coordinate is -pi.
            if (rec.t - std::f64::consts::PI).abs() <= snap {
                rec.t = -std::f64::consts::PI;
            }
        }
    }
    records.sort_by(|x, y| x.t.total_cmp(&y.t));
    let mut deduped: Vec<CrossingRecord> = Vec::new();
    for rec in records {
        match deduped.last_mut() {
            Some(last) if (rec.t - last.t).abs() <= snap => {
                // Prefer the direct probe (width 0) over a bisection twin.
                if rec.refinement_width < last.refinement_width {
                    *last = rec;
                }
            }
            _ => deduped.push(rec),
        }
    }

    // Guard-band samples not explained by a detected crossing within one grid
    // step mean the scan cannot tell a crossing from a near-miss.
    for &t in &suspicious_pts {
        let explained = deduped.iter().any(|r| (r.t - t).abs() <= step);
        if !explained {
            return Err(CoreError::GridTooCoarse(format!(
                "sample at t={t:.6} lies in the kernel guard band with no crossing nearby"
            )));
        }
    }

    // Fill signatures where the crossing operator is regular.
    let fd = p.fd_step(path);
    let mut out = deduped;
    for rec in out.iter_mut() {
        match crossing_operator(path, rec, fd, p) {
            Ok(gamma) => rec.crossing_signature = Some(signature(&gamma)?),
            Err(CoreError::DegenerateCrossing { .. }) => rec.crossing_signature = None,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Crossing operator `V^dag dA/dt V` on the kernel basis `V`, via central
/// differences. Errors with `DegenerateCrossing` when any eigenvalue is
/// below the regularity tolerance.
pub fn crossing_operator(
    path: &OperatorPath,
    rec: &CrossingRecord,
    fd_step: f64,
    p: &FlowParams,
) -> Result<HermitianOp> {
    let ap = path.at_raw(rec.t + fd_step);
    let am = path.at_raw(rec.t - fd_step);
    let da = (&ap - &am).mapv(|z| z / (2.0 * fd_step));
    let v = &rec.kernel_basis;
    let gamma = adjoint(v).dot(&da).dot(v);
    // Symmetrize away the O(h^2) finite-difference asymmetry.
    let gamma = (&gamma + &adjoint(&gamma)).mapv(|z| z * 0.5);
    let op = HermitianOp::with_tol(gamma, 1e-8 * (1.0 + max_abs(&da)))?;
    let dec = hermitian_eig(&op)?;
    let scale = dec.spectral_radius().max(1.0);
    let min = dec.min_abs_eigenvalue();
    if min < p.regularity_tol * scale {
        return Err(CoreError::DegenerateCrossing {
            t: rec.t,
            value: min,
        });
    }
    Ok(op)
}

/// Signature (positive minus negative eigenvalue count) of a crossing
/// operator.
pub fn signature(gamma: &HermitianOp) -> Result<i64> {
    let dec = hermitian_eig(gamma)?;
    let pos = dec.eigenvalues.iter().filter(|&&l| l > 0.0).count() as i64;
    let neg = dec.eigenvalues.iter().filter(|&&l| l < 0.0).count() as i64;
    Ok(pos - neg)
}

fn signature_of(rec: &CrossingRecord) -> Result<i64> {
    rec.crossing_signature.ok_or(CoreError::DegenerateCrossing {
        t: rec.t,
        value: 0.0,
    })
}

/// Z-valued spectral flow: sum of crossing signatures. Requires regular
/// crossings; on circle domains with a singular seam the family is shifted
/// first (see [`sf_tau_circle`] for the shift rule).
pub fn sf_z(path: &OperatorPath, p: &FlowParams) -> Result<i64> {
    let records = find_crossings(path, p)?;
    if matches!(path.domain(), PathDomain::Circle) {
        let pi = std::f64::consts::PI;
        if records
            .iter()
            .any(|r| (r.t + pi).abs() <= p.snap_radius(path))
        {
            let (shifted, _eps) = shift_away_seam(path, p)?;
            let shifted_records = find_crossings(&shifted, p)?;
            return shifted_records.iter().map(signature_of).sum();
        }
    }
    records.iter().map(signature_of).sum()
}

/// Half the rank, after an explicit evenness check. Odd ranks at symmetric
/// points are numerical Kramers violations and must surface.
fn half_rank(t: f64, rank: usize) -> Result<usize> {
    if !rank.is_multiple_of(2) {
        return Err(CoreError::OddKernelAtSymmetricPoint { t, rank });
    }
    Ok(rank / 2)
}

/// Z2-valued half-spectral flow of a tau-invariant line family:
/// crossing ranks on t < 0 plus half the kernel rank at t = 0, mod 2.
pub fn sf_tau_line(path: &OperatorPath, p: &FlowParams) -> Result<Z2> {
    if path.tau().is_none() {
        return Err(CoreError::TauMissing);
    }
    let records = find_crossings(path, p)?;
    let mut total = 0usize;
    for rec in &records {
        if rec.t == 0.0 {
            total += half_rank(0.0, rec.kernel_rank)?;
        } else if rec.t < 0.0 {
            total += rec.kernel_rank;
        }
    }
    Ok(Z2::from_parity(total))
}

/// Shift policy for circle families with a singular seam operator `A(pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EpsPolicy {
    /// Shift the whole family by `eps = min nonzero |eigenvalue of A(pi)| / 2`
    /// when the seam is singular, and compute on the shifted family.
    #[default]
    ShiftIfSingular,
    /// Evaluate the displayed sum directly, including the half-rank term at
    /// the seam.
    Direct,
}

#[derive(Debug, Clone)]
pub struct CircleFlow {
    pub value: Z2,
    /// The scalar shift applied to make the seam invertible, if any.
    pub shift_applied: Option<f64>,
}

fn shift_away_seam(path: &OperatorPath, p: &FlowParams) -> Result<(OperatorPath, f64)> {
    let dec = path.eig_at(std::f64::consts::PI)?;
    let smallest_nonzero = dec
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .filter(|a| *a >= p.kernel_tol)
        .fold(f64::INFINITY, f64::min);
    let eps = if smallest_nonzero.is_finite() {
        0.5 * smallest_nonzero
    } else {
        // The seam operator vanishes entirely; any small shift makes it
        // invertible. Use a fraction of the family's median spectral radius.
        let mut radii: Vec<f64> = Vec::with_capacity(path.grid().len());
        for &t in path.grid() {
            radii.push(path.eig_at(t)?.spectral_radius());
        }
        radii.sort_by(f64::total_cmp);
        let median = radii[radii.len() / 2];
        if median < p.gap_factor * p.kernel_tol {
            return Err(CoreError::SingularEndpoint {
                t: std::f64::consts::PI,
                value: 0.0,
            });
        }
        5e-3 * median
    };
    let shifted = path.shifted(eps)?;
    // The shifted seam must be invertible; by construction it is, since no
    // eigenvalue can land on -eps.
    let seam = shifted.eig_at(std::f64::consts::PI)?;
    if seam.min_abs_eigenvalue() <= p.kernel_tol {
        return Err(CoreError::SingularEndpoint {
            t: std::f64::consts::PI,
            value: seam.min_abs_eigenvalue(),
        });
    }
    Ok((shifted, eps))
}

/// Z2-valued half-spectral flow of a tau-invariant circle family:
/// crossing ranks on -pi < t < 0 plus half the kernel ranks at t = 0 and
/// t = -pi, mod 2.
pub fn sf_tau_circle(path: &OperatorPath, p: &FlowParams, policy: EpsPolicy) -> Result<CircleFlow> {
    if path.tau().is_none() {
        return Err(CoreError::TauMissing);
    }
    let pi = std::f64::consts::PI;
    let records = find_crossings(path, p)?;
    let seam_singular = records.iter().any(|r| r.t == -pi);
    if seam_singular && policy == EpsPolicy::ShiftIfSingular {
        let (shifted, eps) = shift_away_seam(path, p)?;
        let inner = sf_tau_circle(&shifted, p, EpsPolicy::Direct)?;
        return Ok(CircleFlow {
            value: inner.value,
            shift_applied: Some(eps),
        });
    }
    let mut total = 0usize;
    for rec in &records {
        if rec.t == 0.0 || rec.t == -pi {
            total += half_rank(rec.t, rec.kernel_rank)?;
        } else if rec.t < 0.0 {
            total += rec.kernel_rank;
        }
    }
    Ok(CircleFlow {
        value: Z2::from_parity(total),
        shift_applied: None,
    })
}

/// One mirrored pair in the symmetry report.
#[derive(Debug, Clone)]
pub struct GammaPairCheck {
    pub t: f64,
    /// `|| W^dag dA(|t|) W + conj(Gamma(-|t|)) ||` with `W = tau(V(-|t|))`.
    pub residual: f64,
    pub signature_negative: i64,
    pub signature_positive: i64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct GammaSymmetryReport {
    pub pairs: Vec<GammaPairCheck>,
    /// Signatures at symmetric points; these must vanish.
    pub symmetric_signatures: Vec<(f64, i64)>,
    pub pass: bool,
}

/// Verify the mirrored-crossing relation: transporting the kernel basis at
/// -t through tau turns the crossing operator at t into minus the complex
/// conjugate of the one at -t; in particular the signatures are opposite and
/// the signature at a symmetric point vanishes.
pub fn gamma_symmetry_report(path: &OperatorPath, p: &FlowParams) -> Result<GammaSymmetryReport> {
    let tau = path.tau().ok_or(CoreError::TauMissing)?.clone();
    let records = find_crossings(path, p)?;
    let fd = p.fd_step(path);
    let snap = p.snap_radius(path);
    let sym_pts = symmetric_points(path);

    let mut pairs = Vec::new();
    let mut symmetric_signatures = Vec::new();
    let mut pass = true;

    for rec in &records {
        if sym_pts.contains(&rec.t) {
            let sig = signature_of(rec)?;
            if sig != 0 {
                pass = false;
            }
            symmetric_signatures.push((rec.t, sig));
            continue;
        }
        if rec.t >= 0.0 {
            continue;
        }
        let mirror = records.iter().find(|r| {
            (r.t + rec.t).abs() <= snap.max(2.0 * (r.refinement_width + rec.refinement_width))
        });
        let Some(mirror) = mirror else {
            pass = false;
            pairs.push(GammaPairCheck {
                t: rec.t,
                residual: f64::INFINITY,
                signature_negative: signature_of(rec)?,
                signature_positive: 0,
                ok: false,
            });
            continue;
        };

        // Gamma at -t in the tau-transported basis W = u conj(V(t)).
        let w = tau.unitary_part().dot(&conj_entries(&rec.kernel_basis));
        let tp = mirror.t;
        let ap = path.at_raw(tp + fd);
        let am = path.at_raw(tp - fd);
        let da = (&ap - &am).mapv(|z| z / (2.0 * fd));
        let gamma_pos_w = adjoint(&w).dot(&da).dot(&w);

        let gamma_neg = crossing_operator(path, rec, fd, p)?;
        let want = conj_entries(gamma_neg.matrix()).mapv(|z| -z);
        let residual = crate::mat::max_abs_diff(&gamma_pos_w, &want);

        let sig_neg = signature_of(rec)?;
        let sig_pos = signature_of(mirror)?;
        let ok = residual <= p.gamma_tol * (1.0 + max_abs(&want)) && sig_neg == -sig_pos;
        if !ok {
            pass = false;
        }
        pairs.push(GammaPairCheck {
            t: rec.t,
            residual,
            signature_negative: sig_neg,
            signature_positive: sig_pos,
            ok,
        });
    }

    Ok(GammaSymmetryReport {
        pairs,
        symmetric_signatures,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn params() -> FlowParams {
        FlowParams::default()
    }

    #[test]
    fn arctan_pair_has_single_rank2_crossing_at_zero() {
        let path = fixtures::arctan_pair(-10.0, 10.0);
        let recs = find_crossings(&path, &params()).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].t, 0.0);
        assert_eq!(recs[0].kernel_rank, 2);
    }

    #[test]
    fn constant_path_has_no_crossings() {
        let path = fixtures::constant_line(-10.0, 10.0);
        assert!(find_crossings(&path, &params()).unwrap().is_empty());
    }

    #[test]
    fn shifted_arctan_pair_has_mirrored_rank1_crossings() {
        let path = fixtures::shifted_arctan_pair(-10.0, 10.0);
        let recs = find_crossings(&path, &params()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!((recs[0].t + 1.0).abs() < 1e-6);
        assert!((recs[1].t - 1.0).abs() < 1e-6);
        assert_eq!(recs[0].kernel_rank, 1);
        assert_eq!(recs[1].kernel_rank, 1);
    }

    #[test]
    fn crossing_operator_of_arctan_pair_is_diag_plus_minus_one() {
        // dA/dt at 0 is diag(1,-1); in any orthonormal kernel basis the
        // crossing operator keeps eigenvalues {-1, +1} and signature 0.
        let path = fixtures::arctan_pair(-10.0, 10.0);
        let p = params();
        let recs = find_crossings(&path, &p).unwrap();
        let gamma = crossing_operator(&path, &recs[0], p.fd_step(&path), &p).unwrap();
        let dec = hermitian_eig(&gamma).unwrap();
        assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-6);
        assert!((dec.eigenvalues[1] - 1.0).abs() < 1e-6);
        assert_eq!(recs[0].crossing_signature, Some(0));
    }

    #[test]
    fn shifted_arctan_signatures_are_plus_minus_one() {
        // d(arctan(t-1))/dt at t=1 is 1, so the signature at +1 is +1; the
        // mirrored crossing carries -1.
        let path = fixtures::shifted_arctan_pair(-10.0, 10.0);
        let recs = find_crossings(&path, &params()).unwrap();
        assert_eq!(recs[0].crossing_signature, Some(-1));
        assert_eq!(recs[1].crossing_signature, Some(1));
    }

    #[test]
    fn sign_flip_flips_signature() {
        let tau = crate::antiunitary::AntiUnitary::standard(2).unwrap();
        let path = crate::path::OperatorPath::line(-10.0, 10.0, 2, 801, Some(tau), |t| {
            ndarray::array![
                [crate::mat::cr(-(t - 1.0).atan()), crate::mat::cr(0.0)],
                [crate::mat::cr(0.0), crate::mat::cr((t + 1.0).atan())]
            ]
        })
        .unwrap();
        let recs = find_crossings(&path, &params()).unwrap();
        assert_eq!(recs[1].crossing_signature, Some(-1));
    }

    #[test]
    fn scalar_arctan_has_flow_one() {
        let path = crate::path::OperatorPath::line(-10.0, 10.0, 1, 801, None, |t| {
            ndarray::array![[crate::mat::cr(t.atan())]]
        })
        .unwrap();
        assert_eq!(sf_z(&path, &params()).unwrap(), 1);
    }

    #[test]
    fn tau_invariant_paths_have_vanishing_z_flow() {
        for fixture in [
            fixtures::arctan_pair(-10.0, 10.0),
            fixtures::shifted_arctan_pair(-10.0, 10.0),
            fixtures::constant_line(-10.0, 10.0),
        ] {
            assert_eq!(sf_z(&fixture, &params()).unwrap(), 0);
        }
    }

    #[test]
    fn sf_tau_line_normalization() {
        assert_eq!(
            sf_tau_line(&fixtures::arctan_pair(-10.0, 10.0), &params()).unwrap(),
            Z2::ONE
        );
        assert_eq!(
            sf_tau_line(&fixtures::constant_line(-10.0, 10.0), &params()).unwrap(),
            Z2::ZERO
        );
        assert_eq!(
            sf_tau_line(&fixtures::shifted_arctan_pair(-10.0, 10.0), &params()).unwrap(),
            Z2::ONE
        );
    }

    #[test]
    fn sf_tau_circle_examples() {
        let p = params();
        let r = sf_tau_circle(&fixtures::cos_sin_circle(), &p, EpsPolicy::default()).unwrap();
        assert_eq!(r.value, Z2::ZERO);
        assert!(r.shift_applied.is_none());

        let r = sf_tau_circle(&fixtures::constant_circle(), &p, EpsPolicy::default()).unwrap();
        assert_eq!(r.value, Z2::ZERO);

        // Rank-2 kernels at 0 and ±pi: 1/2*2 + 1/2*2 = 2 = 0 mod 2. The
        // default policy shifts the singular seam; the direct sum must agree.
        let path = fixtures::sin_rank2_circle(0.7);
        let shifted = sf_tau_circle(&path, &p, EpsPolicy::ShiftIfSingular).unwrap();
        assert_eq!(shifted.value, Z2::ZERO);
        assert!(shifted.shift_applied.is_some());
        let direct = sf_tau_circle(&path, &p, EpsPolicy::Direct).unwrap();
        assert_eq!(direct.value, Z2::ZERO);
    }

    #[test]
    fn cos_sin_circle_crossings_sit_at_quarter_turns() {
        let path = fixtures::cos_sin_circle();
        let recs = find_crossings(&path, &params()).unwrap();
        let pi = std::f64::consts::PI;
        let ts: Vec<f64> = recs.iter().map(|r| r.t).collect();
        assert_eq!(ts.len(), 4);
        for (got, want) in ts
            .iter()
            .zip([-0.75 * pi, -0.25 * pi, 0.25 * pi, 0.75 * pi])
        {
            assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn mirrored_crossings_share_rank() {
        let mut r = fixtures::rng(21);
        for _ in 0..4 {
            let path = fixtures::random_tau_line_path(&mut r, 4, 8.0).unwrap();
            let recs = match find_crossings(&path, &params()) {
                Ok(recs) => recs,
                Err(CoreError::AmbiguousKernel { .. }) | Err(CoreError::GridTooCoarse(_)) => {
                    continue
                }
                Err(e) => panic!("{e}"),
            };
            for rec in recs.iter().filter(|r| r.t < 0.0) {
                let mirror = recs.iter().find(|m| (m.t + rec.t).abs() < 1e-6);
                let mirror = mirror.expect("mirror crossing");
                assert_eq!(mirror.kernel_rank, rec.kernel_rank);
            }
        }
    }

    #[test]
    fn gamma_report_on_shifted_arctan() {
        let path = fixtures::shifted_arctan_pair(-10.0, 10.0);
        let rep = gamma_symmetry_report(&path, &params()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.pairs.len(), 1);
        assert_eq!(rep.pairs[0].signature_negative, -1);
        assert_eq!(rep.pairs[0].signature_positive, 1);
    }

    #[test]
    fn gamma_report_signature_zero_at_symmetric_point() {
        let path = fixtures::arctan_pair(-10.0, 10.0);
        let rep = gamma_symmetry_report(&path, &params()).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.symmetric_signatures, vec![(0.0, 0)]);
    }

    #[test]
    fn gamma_report_vacuous_on_constant_path() {
        let rep = gamma_symmetry_report(&fixtures::constant_line(-10.0, 10.0), &params()).unwrap();
        assert!(rep.pass);
        assert!(rep.pairs.is_empty());
    }

    #[test]
    fn one_sided_freeze_matches_mod2() {
        // Freeze the family at A(0) for t > 0; its Z-valued flow reduces
        // mod 2 to the half-spectral flow of the symmetric family.
        let path = fixtures::shifted_arctan_pair(-10.0, 10.0);
        let p = params();
        let frozen = crate::path::OperatorPath::line(-10.0, 10.0, 2, 801, None, move |t| {
            let tt = if t > 0.0 { 0.0 } else { t };
            ndarray::array![
                [crate::mat::cr((tt - 1.0).atan()), crate::mat::cr(0.0)],
                [crate::mat::cr(0.0), crate::mat::cr(-(tt + 1.0).atan())]
            ]
        })
        .unwrap();
        let z = sf_z(&frozen, &p).unwrap();
        let tau_val = sf_tau_line(&path, &p).unwrap();
        assert_eq!(Z2::from_parity(z.unsigned_abs() as usize), tau_val);
    }

    #[test]
    fn direct_sum_is_additive_mod_2() {
        let p = params();
        let a = fixtures::arctan_pair(-10.0, 10.0);
        let b = fixtures::shifted_arctan_pair(-10.0, 10.0);
        let sum = a.direct_sum(&b).unwrap();
        let va = sf_tau_line(&a, &p).unwrap();
        let vb = sf_tau_line(&b, &p).unwrap();
        assert_eq!(sf_tau_line(&sum, &p).unwrap(), va + vb);
    }

    #[test]
    fn homotopy_stability_under_small_bumps() {
        let p = params();
        let base = fixtures::arctan_pair(-10.0, 10.0);
        let v0 = sf_tau_line(&base, &p).unwrap();
        let mut r = fixtures::rng(33);
        for _ in 0..3 {
            let tau = base.tau().unwrap().clone();
            let bump = fixtures::random_tau_bump(&mut r, &tau, 0.05);
            let perturbed = base.add(bump).unwrap();
            assert_eq!(sf_tau_line(&perturbed, &p).unwrap(), v0);
        }
    }
}
