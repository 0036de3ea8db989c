//! Built-in operator families and tight-binding models.
//!
//! Everything the CLI and the test suites need ships in code: the
//! normalization family `diag(arctan t, -arctan t)`, its shifted variant,
//! constant families, two circle families with known crossing structure, the
//! BHZ-type model family (whose Z2 phase diagram has the closed-form TRIM
//! sign-product oracle), a trivial atomic insulator, and seeded random
//! generators for property suites. All randomness is ChaCha-seeded and
//! reproducible.

use ndarray::{array, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::antiunitary::AntiUnitary;
use crate::error::Result;
use crate::lattice::TightBindingModel;
use crate::mat::{adjoint, c, cr, identity, CMat};
use crate::path::OperatorPath;

/// `diag(arctan t, -arctan t)` with the standard tau; half-spectral flow 1.
pub fn arctan_pair(t_min: f64, t_max: f64) -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::line(t_min, t_max, 2, 801, Some(tau), |t| {
        array![[cr(t.atan()), cr(0.0)], [cr(0.0), cr(-t.atan())]]
    })
    .expect("arctan pair fixture")
}

/// `diag(arctan(t-1), -arctan(t+1))`: mirrored rank-1 crossings at t = ±1.
pub fn shifted_arctan_pair(t_min: f64, t_max: f64) -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::line(t_min, t_max, 2, 801, Some(tau), |t| {
        array![
            [cr((t - 1.0).atan()), cr(0.0)],
            [cr(0.0), cr(-(t + 1.0).atan())]
        ]
    })
    .expect("shifted arctan pair fixture")
}

/// Constant invertible tau-invariant line family.
pub fn constant_line(t_min: f64, t_max: f64) -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::line(t_min, t_max, 2, 401, Some(tau), |_| identity(2))
        .expect("constant line fixture")
}

/// Constant invertible tau-invariant circle family.
pub fn constant_circle() -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::circle(2, 401, Some(tau), |_| identity(2)).expect("constant circle fixture")
}

/// `cos(t) I + sin(t) sigma_y`: rank-1 crossings at -pi/4 and -3pi/4,
/// invertible at the symmetric points.
pub fn cos_sin_circle() -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::circle(2, 801, Some(tau), |t| {
        array![
            [cr(t.cos()), c(0.0, -t.sin())],
            [c(0.0, t.sin()), cr(t.cos())]
        ]
    })
    .expect("cos-sin circle fixture")
}

/// `sin(t) [[1, l], [l, -1]]`: rank-2 kernels at t = 0 and t = ±pi.
pub fn sin_rank2_circle(l: f64) -> OperatorPath {
    let tau = AntiUnitary::standard(2).unwrap();
    OperatorPath::circle(2, 801, Some(tau), move |t| {
        let s = t.sin();
        array![[cr(s), cr(s * l)], [cr(s * l), cr(-s)]]
    })
    .expect("sin rank-2 circle fixture")
}

/// Look up a built-in abstract family by CLI name.
pub fn builtin_path(name: &str) -> Option<OperatorPath> {
    match name {
        "arctan-pair" => Some(arctan_pair(-10.0, 10.0)),
        "shifted-arctan-pair" => Some(shifted_arctan_pair(-10.0, 10.0)),
        "constant" => Some(constant_line(-10.0, 10.0)),
        "constant-circle" => Some(constant_circle()),
        "cos-sin-circle" => Some(cos_sin_circle()),
        "sin-rank2-circle" => Some(sin_rank2_circle(0.5)),
        _ => None,
    }
}

pub const BUILTIN_PATH_NAMES: &[&str] = &[
    "arctan-pair",
    "shifted-arctan-pair",
    "constant",
    "constant-circle",
    "cos-sin-circle",
    "sin-rank2-circle",
];

fn pauli() -> [CMat; 3] {
    [
        array![[cr(0.0), cr(1.0)], [cr(1.0), cr(0.0)]],
        array![[cr(0.0), c(0.0, -1.0)], [c(0.0, 1.0), cr(0.0)]],
        array![[cr(1.0), cr(0.0)], [cr(0.0), cr(-1.0)]],
    ]
}

/// BHZ-type model: `H(t,s) = blockdiag(h(t,s), conj(h(-t,-s)))` with
/// `h = d . sigma`, `d = (sin t, sin s, M + cos t + cos s)`, and the
/// block-swap time-reversal. Gap closes at M in {0, ±2}; the invariant is 1
/// exactly for 0 < |M| < 2.
pub fn bhz_model(mass: f64) -> TightBindingModel {
    let [sx, sy, sz] = pauli();
    // Fourier coefficients of h: h = A00 + A10 e^{it} + A01 e^{is} + h.c.
    let a00 = sz.mapv(|z| z * mass);
    let a10 = &sz.mapv(|z| z * 0.5) + &sx.mapv(|z| z * c(0.0, -0.5));
    let a01 = &sz.mapv(|z| z * 0.5) + &sy.mapv(|z| z * c(0.0, -0.5));

    // Lower block carries conj(h(-t,-s)), i.e. conjugated coefficients.
    let block = |m: &CMat| -> CMat {
        let mut out: CMat = Array2::zeros((4, 4));
        out.slice_mut(ndarray::s![..2, ..2]).assign(m);
        out.slice_mut(ndarray::s![2.., 2..])
            .assign(&m.mapv(|z| z.conj()));
        out
    };

    let hoppings = vec![
        ((0, 0), block(&a00)),
        ((1, 0), block(&a10)),
        ((0, 1), block(&a01)),
        ((-1, 0), block(&adjoint(&a10))),
        ((0, -1), block(&adjoint(&a01))),
    ];
    let trs = AntiUnitary::block_swap(2).unwrap();
    TightBindingModel::new(4, hoppings, 0.0, trs).expect("BHZ fixture")
}

/// Trivial atomic insulator: on-site `diag(-1,-1,1,1)`, no hopping.
pub fn atomic_model() -> TightBindingModel {
    let mut a00: CMat = Array2::zeros((4, 4));
    a00[(0, 0)] = cr(-1.0);
    a00[(1, 1)] = cr(-1.0);
    a00[(2, 2)] = cr(1.0);
    a00[(3, 3)] = cr(1.0);
    let trs = AntiUnitary::standard(4).unwrap();
    TightBindingModel::new(4, vec![((0, 0), a00)], 0.0, trs).expect("atomic fixture")
}

pub fn builtin_model(name: &str, mass: f64) -> Option<TightBindingModel> {
    match name {
        "bhz" => Some(bhz_model(mass)),
        "atomic" => Some(atomic_model()),
        _ => None,
    }
}

pub const BUILTIN_MODEL_NAMES: &[&str] = &["bhz", "atomic"];

// ---------------------------------------------------------------------------
// Seeded random generators for the property suites.
// ---------------------------------------------------------------------------

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense random Hermitian matrix with entries of order `scale`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let mut g: CMat = Array2::zeros((n, n));
    for z in g.iter_mut() {
        *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    }
    (&g + &adjoint(&g)).mapv(|z| z * (0.5 * scale))
}

/// Project a Hermitian matrix onto the tau-invariant part: `(Q + TQT^-1)/2`.
pub fn tau_symmetrize(tau: &AntiUnitary, q: &CMat) -> CMat {
    let conj = tau.conjugate(q).expect("dimension match");
    (q + &conj).mapv(|z| z * 0.5)
}

/// Random tau-invariant Hermitian matrix.
pub fn random_tau_hermitian(rng: &mut ChaCha8Rng, tau: &AntiUnitary, scale: f64) -> CMat {
    let q = random_hermitian(rng, tau.dim(), scale);
    tau_symmetrize(tau, &q)
}

/// `X + tanh(t) Y + exp(-t^2) Z`: plateaus at `X ± Y` for large |t|, generic
/// crossings in between.
fn tanh_bump_family(x: CMat, y: CMat, z: CMat) -> impl Fn(f64) -> CMat + Send + Sync {
    move |t: f64| {
        let mut m = x.clone();
        m.zip_mut_with(&y, |a, b| *a += b * t.tanh());
        m.zip_mut_with(&z, |a, b| *a += b * (-t * t).exp());
        m
    }
}

/// Random tau-invariant line family via symmetrization of a generic family.
pub fn random_tau_line_path(rng: &mut ChaCha8Rng, dim: usize, t_max: f64) -> Result<OperatorPath> {
    let tau = AntiUnitary::standard(dim)?;
    let x = random_hermitian(rng, dim, 1.0);
    let y = random_hermitian(rng, dim, 1.0);
    let z = random_hermitian(rng, dim, 1.0);
    let raw = tanh_bump_family(x, y, z);
    let tau_sym = tau.clone();
    let eval = move |t: f64| {
        let a = raw(t);
        let b = tau_sym.conjugate(&raw(-t)).expect("dimension match");
        (&a + &b).mapv(|z| z * 0.5)
    };
    OperatorPath::line(-t_max, t_max, dim, 801, Some(tau), eval)
}

/// Random line family without symmetry, for Z-valued oracle tests.
pub fn random_line_path(rng: &mut ChaCha8Rng, dim: usize, t_max: f64) -> Result<OperatorPath> {
    let x = random_hermitian(rng, dim, 1.0);
    let y = random_hermitian(rng, dim, 1.0);
    let z = random_hermitian(rng, dim, 0.3);
    OperatorPath::line(-t_max, t_max, dim, 801, None, tanh_bump_family(x, y, z))
}

/// Random tau-invariant trigonometric circle family of the given bandwidth.
/// A family is tau-invariant exactly when every Fourier coefficient is, so
/// each coefficient is projected onto its tau-invariant part.
pub fn random_tau_circle_path(
    rng: &mut ChaCha8Rng,
    dim: usize,
    bandwidth: usize,
) -> Result<OperatorPath> {
    let tau = AntiUnitary::standard(dim)?;
    let a0 = random_tau_hermitian(rng, &tau, 1.0);
    let mut coeffs: Vec<CMat> = Vec::new();
    for _ in 0..bandwidth {
        let mut g: CMat = Array2::zeros((dim, dim));
        for z in g.iter_mut() {
            *z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        let g = g.mapv(|z| z * (1.0 / bandwidth as f64));
        let proj = (&g + &tau.conjugate(&g)?).mapv(|z| z * 0.5);
        coeffs.push(proj);
    }
    let eval = move |t: f64| {
        let mut m = a0.clone();
        for (j, aj) in coeffs.iter().enumerate() {
            let phase = c(0.0, (j + 1) as f64 * t).exp();
            let term = aj.mapv(|z| z * phase);
            m = &m + &term + &adjoint(&term);
        }
        m
    };
    OperatorPath::circle(dim, 801, Some(tau), eval)
}

/// Small tau-invariant perturbation localized near t = 0 (Gaussian window),
/// leaving the endpoints untouched.
pub fn random_tau_bump(
    rng: &mut ChaCha8Rng,
    tau: &AntiUnitary,
    scale: f64,
) -> impl Fn(f64) -> CMat + Send + Sync {
    let even = random_tau_hermitian(rng, tau, scale);
    let q = random_hermitian(rng, tau.dim(), scale);
    // Odd window needs a tau-anti-invariant coefficient.
    let odd = (&q - &tau.conjugate(&q).expect("dimension match")).mapv(|z| z * 0.5);
    move |t: f64| {
        let w = (-t * t).exp();
        let mut m = even.mapv(|z| z * w);
        m.zip_mut_with(&odd, |a, b| *a += b * (w * t));
        m
    }
}
