//! Operator families over the line and the circle.
//!
//! An [`OperatorPath`] is a total map `t -> A(t)` into Hermitian matrices of a
//! fixed dimension together with a scan grid and, optionally, a time-reversal
//! structure `tau` under which the family is invariant:
//! `A(t) = tau A(-t) tau^{-1}`. Paths are immutable after construction; all
//! invariants (hermiticity, endpoint invertibility, circle closure,
//! tau-invariance) are validated up front so the flow computations can trust
//! them. Evaluation stays lazy through the closure: bisection needs off-grid
//! points, so the grid is only the scan skeleton.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::antiunitary::AntiUnitary;
use crate::eig::{hermitian_eig, EigDecomposition, HermitianOp, HERM_TOL};
use crate::error::{CoreError, Result};
use crate::mat::{linspace, max_abs, max_abs_diff, CMat};

/// Default tolerance for path-level residuals (tau-invariance, circle closure).
pub const PATH_TOL: f64 = 1e-8;
/// Endpoint operators must have smallest |eigenvalue| above this.
pub const ENDPOINT_TOL: f64 = 1e-8;

/// An element of Z/2Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Z2(u8);

impl Z2 {
    pub const ZERO: Z2 = Z2(0);
    pub const ONE: Z2 = Z2(1);

    pub fn from_parity(n: usize) -> Self {
        Z2((n % 2) as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl std::ops::Add for Z2 {
    type Output = Z2;
    // Addition in Z/2Z is xor.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: Z2) -> Z2 {
        Z2(self.0 ^ rhs.0)
    }
}

impl std::ops::AddAssign for Z2 {
    #[allow(clippy::suspicious_op_assign_impl)]
    fn add_assign(&mut self, rhs: Z2) {
        self.0 ^= rhs.0;
    }
}

impl std::fmt::Display for Z2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PathDomain {
    /// A compact interval with invertible endpoint operators.
    Line { t_min: f64, t_max: f64 },
    /// The circle parametrized by `[-pi, pi]` with endpoints identified.
    Circle,
}

impl PathDomain {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            PathDomain::Line { t_min, t_max } => (t_min, t_max),
            PathDomain::Circle => (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }

    pub fn length(&self) -> f64 {
        let (a, b) = self.bounds();
        b - a
    }
}

pub type Evaluator = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

#[derive(Clone)]
pub struct OperatorPath {
    domain: PathDomain,
    dim: usize,
    eval: Evaluator,
    grid: Vec<f64>,
    tau: Option<AntiUnitary>,
}

impl std::fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPath")
            .field("domain", &self.domain)
            .field("dim", &self.dim)
            .field("grid_len", &self.grid.len())
            .field("tau", &self.tau.is_some())
            .finish()
    }
}

impl OperatorPath {
    /// Family on `[t_min, t_max]`; endpoints must be invertible.
    pub fn line(
        t_min: f64,
        t_max: f64,
        dim: usize,
        n_grid: usize,
        tau: Option<AntiUnitary>,
        eval: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Result<Self> {
        assert!(t_max > t_min && n_grid >= 2);
        let path = Self {
            domain: PathDomain::Line { t_min, t_max },
            dim,
            eval: Arc::new(eval),
            grid: linspace(t_min, t_max, n_grid),
            tau,
        };
        path.validate()?;
        Ok(path)
    }

    /// Periodic family on `[-pi, pi]` with endpoints identified.
    pub fn circle(
        dim: usize,
        n_grid: usize,
        tau: Option<AntiUnitary>,
        eval: impl Fn(f64) -> CMat + Send + Sync + 'static,
    ) -> Result<Self> {
        assert!(n_grid >= 3);
        let pi = std::f64::consts::PI;
        let path = Self {
            domain: PathDomain::Circle,
            dim,
            eval: Arc::new(eval),
            grid: linspace(-pi, pi, n_grid),
            tau,
        };
        path.validate()?;
        Ok(path)
    }

    fn validate(&self) -> Result<()> {
        if let Some(tau) = &self.tau {
            if tau.dim() != self.dim {
                return Err(CoreError::DimensionMismatch {
                    left: tau.dim(),
                    right: self.dim,
                });
            }
        }
        // Hermiticity and tau-invariance hold on the whole scan grid.
        for &t in self.grid.iter() {
            let a = self.at_raw(t);
            if a.nrows() != self.dim || a.ncols() != self.dim {
                return Err(CoreError::DimensionMismatch {
                    left: a.nrows(),
                    right: self.dim,
                });
            }
            let scale = max_abs(&a).max(1.0);
            let res = crate::mat::hermiticity_residual(&a);
            if res > HERM_TOL * scale {
                return Err(CoreError::NotHermitian {
                    residual: res,
                    tol: HERM_TOL * scale,
                });
            }
            if let Some(tau) = &self.tau {
                let mirrored = tau.conjugate(&self.at_raw(-t))?;
                let res = max_abs_diff(&a, &mirrored);
                if res > PATH_TOL * scale {
                    return Err(CoreError::NotTauInvariant {
                        context: format!("t={t:.6}"),
                        residual: res,
                    });
                }
            }
        }
        match self.domain {
            PathDomain::Line { t_min, t_max } => {
                for t in [t_min, t_max] {
                    let dec = self.eig_at(t)?;
                    let m = dec.min_abs_eigenvalue();
                    if m <= ENDPOINT_TOL {
                        return Err(CoreError::SingularEndpoint { t, value: m });
                    }
                }
            }
            PathDomain::Circle => {
                let pi = std::f64::consts::PI;
                let a = self.at_raw(-pi);
                let b = self.at_raw(pi);
                let res = max_abs_diff(&a, &b);
                if res > PATH_TOL * max_abs(&a).max(1.0) {
                    return Err(CoreError::NotTauInvariant {
                        context: "circle closure A(-pi) vs A(pi)".into(),
                        residual: res,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> PathDomain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn tau(&self) -> Option<&AntiUnitary> {
        self.tau.as_ref()
    }

    /// Raw evaluation, no validation.
    pub fn at_raw(&self, t: f64) -> CMat {
        (self.eval)(t)
    }

    pub fn at(&self, t: f64) -> Result<HermitianOp> {
        let a = self.at_raw(t);
        let scale = max_abs(&a).max(1.0);
        HermitianOp::with_tol(a, HERM_TOL * scale)
    }

    pub fn eig_at(&self, t: f64) -> Result<EigDecomposition> {
        hermitian_eig(&self.at(t)?)
    }

    /// The shifted family `A(t) + eps`. Tau-invariance survives real scalar
    /// shifts, so the structure is carried over unchanged.
    pub fn shifted(&self, eps: f64) -> Result<Self> {
        let eval = self.eval.clone();
        let dim = self.dim;
        let shifted_eval = move |t: f64| {
            let mut m = (eval)(t);
            for i in 0..dim {
                m[(i, i)] += eps;
            }
            m
        };
        let path = Self {
            domain: self.domain,
            dim: self.dim,
            eval: Arc::new(shifted_eval),
            grid: self.grid.clone(),
            tau: self.tau.clone(),
        };
        path.validate()?;
        Ok(path)
    }

    /// Pointwise sum with a Hermitian-valued perturbation closure. The result
    /// is re-validated, so a perturbation that breaks tau-invariance or
    /// endpoint invertibility is rejected here.
    pub fn add(&self, pert: impl Fn(f64) -> CMat + Send + Sync + 'static) -> Result<Self> {
        let eval = self.eval.clone();
        let sum_eval = move |t: f64| (eval)(t) + pert(t);
        let path = Self {
            domain: self.domain,
            dim: self.dim,
            eval: Arc::new(sum_eval),
            grid: self.grid.clone(),
            tau: self.tau.clone(),
        };
        path.validate()?;
        Ok(path)
    }

    /// Block direct sum of two families over the same domain, with the
    /// block-diagonal tau when both carry one.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.domain != other.domain {
            return Err(CoreError::Parse(
                "direct sum requires matching path domains".into(),
            ));
        }
        let tau = match (&self.tau, &other.tau) {
            (Some(a), Some(b)) => Some(a.direct_sum(b)?),
            (None, None) => None,
            _ => {
                return Err(CoreError::TauMissing);
            }
        };
        let (e1, e2) = (self.eval.clone(), other.eval.clone());
        let (d1, d2) = (self.dim, other.dim);
        let eval = move |t: f64| {
            let a = (e1)(t);
            let b = (e2)(t);
            let mut m: CMat = ndarray::Array2::zeros((d1 + d2, d1 + d2));
            m.slice_mut(ndarray::s![..d1, ..d1]).assign(&a);
            m.slice_mut(ndarray::s![d1.., d1..]).assign(&b);
            m
        };
        let grid = if self.grid.len() >= other.grid.len() {
            self.grid.clone()
        } else {
            other.grid.clone()
        };
        let path = Self {
            domain: self.domain,
            dim: d1 + d2,
            eval: Arc::new(eval),
            grid,
            tau,
        };
        path.validate()?;
        Ok(path)
    }

    /// View a circle family as a line family on `[-pi, pi]`. Fails with
    /// `SingularEndpoint` when the seam operator is not invertible.
    pub fn circle_as_line(&self) -> Result<Self> {
        assert!(matches!(self.domain, PathDomain::Circle));
        let pi = std::f64::consts::PI;
        let path = Self {
            domain: PathDomain::Line {
                t_min: -pi,
                t_max: pi,
            },
            dim: self.dim,
            eval: self.eval.clone(),
            grid: self.grid.clone(),
            tau: self.tau.clone(),
        };
        path.validate()?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::cr;
    use ndarray::array;

    #[test]
    fn z2_arithmetic() {
        assert_eq!(Z2::ONE + Z2::ONE, Z2::ZERO);
        assert_eq!(Z2::from_parity(5), Z2::ONE);
        assert_eq!(Z2::from_parity(4), Z2::ZERO);
    }

    #[test]
    fn line_path_requires_invertible_endpoints() {
        // arctan(t) on [0, 10] is singular at the left endpoint.
        let r = OperatorPath::line(0.0, 10.0, 1, 11, None, |t| array![[cr(t.atan())]]);
        assert!(matches!(r, Err(CoreError::SingularEndpoint { .. })));
        let r = OperatorPath::line(1.0, 10.0, 1, 11, None, |t| array![[cr(t.atan())]]);
        assert!(r.is_ok());
    }

    #[test]
    fn circle_path_requires_closure() {
        let r = OperatorPath::circle(1, 11, None, |t| array![[cr(t)]]);
        assert!(r.is_err());
        let r = OperatorPath::circle(1, 11, None, |t| array![[cr(t.cos() + 2.0)]]);
        assert!(r.is_ok());
    }

    #[test]
    fn tau_invariance_is_validated() {
        let tau = AntiUnitary::standard(2).unwrap();
        // diag(arctan t, -arctan t) is tau-invariant under the standard form.
        let ok = OperatorPath::line(-10.0, 10.0, 2, 21, Some(tau.clone()), |t| {
            array![[cr(t.atan()), cr(0.0)], [cr(0.0), cr(-t.atan())]]
        });
        assert!(ok.is_ok());
        // diag(arctan t, arctan t) is not (swap rule flips the sign).
        let bad = OperatorPath::line(-10.0, 10.0, 2, 21, Some(tau), |t| {
            array![[cr(t.atan() + 2.0), cr(0.0)], [cr(0.0), cr(t.atan() + 2.0)]]
        });
        assert!(matches!(bad, Err(CoreError::NotTauInvariant { .. })));
    }
}
