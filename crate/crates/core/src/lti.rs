//! The plant `x_{t+1} = A x_t + B u_t + w_t`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, check_len, Matrix};
use crate::policy::PolicyParams;

/// Tolerance on the spectral-radius check `ρ(A) ≤ 1 − δ`.
pub const TOL_SPECTRAL: f64 = 1e-6;

/// Relative slack on `||w|| ≤ w_bound`, absorbing round-off in recovered disturbances.
const W_BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel {
    a: Matrix,
    b: Matrix,
    k: Matrix,
    delta: f64,
    kappa_b: f64,
    w_bound: f64,
}

impl SystemModel {
    /// Validates shapes, `ρ(A) ≤ 1 − δ`, `||B|| ≤ κ_B` and `δ ∈ (0, 1]`.
    /// `k` defaults to the zero matrix.
    pub fn new(a: Matrix, b: Matrix, k: Option<Matrix>, delta: f64, kappa_b: f64, w_bound: f64) -> Result<Self> {
        let dx = a.rows();
        if dx == 0 || a.cols() != dx {
            return Err(Error::DimensionMismatch { what: "A columns", expected: dx, found: a.cols() });
        }
        if b.rows() != dx {
            return Err(Error::DimensionMismatch { what: "B rows", expected: dx, found: b.rows() });
        }
        let du = b.cols();
        if du == 0 {
            return Err(Error::InvalidParameter { name: "B", reason: "needs at least one column" });
        }
        let k = k.unwrap_or_else(|| Matrix::zeros(du, dx));
        if k.rows() != du || k.cols() != dx {
            return Err(Error::DimensionMismatch { what: "K", expected: du * dx, found: k.rows() * k.cols() });
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter { name: "delta", reason: "must lie in (0, 1]" });
        }
        if !(kappa_b >= 0.0) || !(w_bound >= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa_B/w_bound", reason: "must be non-negative" });
        }
        if b.frobenius() > kappa_b * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter { name: "kappa_B", reason: "smaller than the norm of B" });
        }
        let rho = a.spectral_radius(1e-8, 10_000);
        let limit = 1.0 - delta + TOL_SPECTRAL;
        if rho > limit {
            return Err(Error::Unstable { spectral_radius: rho, limit });
        }
        Ok(SystemModel { a, b, k, delta, kappa_b, w_bound })
    }

    /// The scalar plant used by the builtin scenarios: A = 0.75, B = 1, δ = 0.25.
    pub fn scalar(a: f64, b: f64, delta: f64, w_bound: f64) -> Result<Self> {
        SystemModel::new(Matrix::scalar(a), Matrix::scalar(b), None, delta, b.abs(), w_bound)
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Matrix {
        &self.b
    }
    pub fn k(&self) -> &Matrix {
        &self.k
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn kappa_b(&self) -> f64 {
        self.kappa_b
    }
    pub fn w_bound(&self) -> f64 {
        self.w_bound
    }
    pub fn dx(&self) -> usize {
        self.a.rows()
    }
    pub fn du(&self) -> usize {
        self.b.cols()
    }

    pub(crate) fn require_zero_k(&self) -> Result<()> {
        if self.k.is_zero() {
            Ok(())
        } else {
            Err(Error::NonzeroStabilizer)
        }
    }

    pub(crate) fn check_w(&self, w: &[f64]) -> Result<()> {
        check_len("disturbance", w, self.dx())?;
        let n = linalg::norm(w);
        if n > self.w_bound * (1.0 + W_BOUND_SLACK) {
            return Err(Error::DisturbanceTooLarge { norm: n, bound: self.w_bound });
        }
        Ok(())
    }

    fn affine(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        check_len("state", x, self.dx())?;
        check_len("action", u, self.du())?;
        let mut out = self.a.mul_vec(x);
        for (r, o) in out.iter_mut().enumerate() {
            *o += linalg::dot(self.b.row(r), u);
        }
        Ok(out)
    }
}

/// One executed step of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub cost: f64,
}

/// Returns `A x + B u + w`.
pub fn step(model: &SystemModel, x: &[f64], u: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    model.check_w(w)?;
    let mut out = model.affine(x, u)?;
    for (o, wi) in out.iter_mut().zip(w) {
        *o += wi;
    }
    Ok(out)
}

/// Returns `x_next − A x − B u`.
pub fn recover_disturbance(model: &SystemModel, x_next: &[f64], x: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len("next state", x_next, model.dx())?;
    let pred = model.affine(x, u)?;
    Ok(linalg::sub(x_next, &pred))
}

/// The last `p` disturbances, newest first; slots never written are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceWindow {
    dim: usize,
    cap: usize,
    /// ring storage, `cap` vectors of length `dim`
    buf: Vec<f64>,
    /// slot that will receive the next push
    head: usize,
}

impl DisturbanceWindow {
    pub fn new(p: usize, dim: usize) -> Self {
        DisturbanceWindow { dim, cap: p, buf: vec![0.0; p * dim], head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Pushes `w_t`; afterwards `lag(1)` returns it.
    pub fn push(&mut self, w: &[f64]) {
        if self.cap == 0 {
            return;
        }
        let s = self.head * self.dim;
        self.buf[s..s + self.dim].copy_from_slice(w);
        self.head = (self.head + 1) % self.cap;
    }

    /// `w_{t−j}` for `j ∈ 1..=p`, where `t` is the step after the most recent push.
    pub fn lag(&self, j: usize) -> &[f64] {
        debug_assert!(j >= 1 && j <= self.cap);
        let slot = (self.head + self.cap - j) % self.cap;
        &self.buf[slot * self.dim..(slot + 1) * self.dim]
    }
}

/// State `x_{t+1}` reached by replaying the fixed DAC parameters `m` from
/// `x_1 = 0`, evaluated as the explicit power series
/// `Σ_{i=0}^{t} A^i (B Σ_j M^[j] w_{t−i−j} + w_{t−i})`.
///
/// `disturbances[s − 1]` holds `w_s`; at least `t` entries are required.
pub fn rollout_stationary(model: &SystemModel, m: &PolicyParams, disturbances: &[Vec<f64>], t: usize) -> Result<Vec<f64>> {
    model.require_zero_k()?;
    m.check_shape(model.du(), model.dx())?;
    if t == 0 {
        return Err(Error::InvalidParameter { name: "t", reason: "must be at least 1" });
    }
    if disturbances.len() < t {
        return Err(Error::DimensionMismatch { what: "disturbance sequence", expected: t, found: disturbances.len() });
    }
    let dx = model.dx();
    let w_at = |s: isize| -> Option<&[f64]> {
        if s >= 1 {
            Some(disturbances[s as usize - 1].as_slice())
        } else {
            None
        }
    };
    let mut x = vec![0.0; dx];
    let mut a_pow = Matrix::identity(dx);
    for i in 0..=t {
        let s = t as isize - i as isize;
        let mut v = vec![0.0; dx];
        if let Some(w) = w_at(s) {
            check_len("disturbance", w, dx)?;
            v.copy_from_slice(w);
        }
        let mut u = vec![0.0; model.du()];
        for j in 1..=m.p() {
            if let Some(w) = w_at(s - j as isize) {
                m.block_mul_add(j - 1, w, &mut u);
            }
        }
        for (r, vr) in v.iter_mut().enumerate() {
            *vr += linalg::dot(model.b().row(r), &u);
        }
        linalg::axpy(1.0, &a_pow.mul_vec(&v), &mut x);
        a_pow = a_pow.matmul(model.a());
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> SystemModel {
        SystemModel::scalar(0.75, 1.0, 0.25, 0.25).unwrap()
    }

    #[test]
    fn step_examples() {
        let m = scalar();
        assert_eq!(step(&m, &[0.0], &[0.0], &[0.25]).unwrap(), vec![0.25]);
        assert_eq!(step(&m, &[0.0], &[0.0], &[0.0]).unwrap(), vec![0.0]);
        assert_eq!(step(&m, &[1.0], &[0.5], &[0.0]).unwrap(), vec![1.25]);
    }

    #[test]
    fn step_rejects_large_disturbance_and_bad_dims() {
        let m = scalar();
        assert!(matches!(step(&m, &[0.0], &[0.0], &[0.3]), Err(Error::DisturbanceTooLarge { .. })));
        assert!(matches!(step(&m, &[0.0, 1.0], &[0.0], &[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn recover_examples() {
        let m = scalar();
        assert_eq!(recover_disturbance(&m, &[0.25], &[0.0], &[0.0]).unwrap(), vec![0.25]);
        assert_eq!(recover_disturbance(&m, &[1.0], &[1.0], &[0.0]).unwrap(), vec![0.25]);
        assert!(recover_disturbance(&m, &[1.0], &[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn unstable_a_rejected() {
        assert!(matches!(SystemModel::scalar(0.8, 1.0, 0.25, 1.0), Err(Error::Unstable { .. })));
        assert!(SystemModel::scalar(0.75, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn kappa_b_must_cover_b() {
        let r = SystemModel::new(Matrix::scalar(0.5), Matrix::scalar(2.0), None, 0.5, 1.0, 1.0);
        assert!(r.is_err());
    }

    #[test]
    fn window_lags_and_zero_padding() {
        let mut w = DisturbanceWindow::new(3, 1);
        assert_eq!(w.lag(1), &[0.0]);
        assert_eq!(w.lag(3), &[0.0]);
        w.push(&[1.0]);
        w.push(&[2.0]);
        assert_eq!(w.lag(1), &[2.0]);
        assert_eq!(w.lag(2), &[1.0]);
        assert_eq!(w.lag(3), &[0.0]);
        w.push(&[3.0]);
        w.push(&[4.0]);
        assert_eq!(w.lag(1), &[4.0]);
        assert_eq!(w.lag(3), &[2.0]);
    }

    #[test]
    fn rollout_first_step_is_w1() {
        let m = scalar();
        let pp = PolicyParams::from_scalars(&[0.3, -0.2]);
        let ws = vec![vec![0.1], vec![-0.2]];
        assert_eq!(rollout_stationary(&m, &pp, &ws, 1).unwrap(), vec![0.1]);
    }

    #[test]
    fn rollout_zero_disturbances() {
        let m = scalar();
        let pp = PolicyParams::from_scalars(&[0.3, -0.2]);
        let ws = vec![vec![0.0]; 20];
        assert_eq!(rollout_stationary(&m, &pp, &ws, 20).unwrap(), vec![0.0]);
    }

    #[test]
    fn rollout_requires_zero_k() {
        let m = SystemModel::new(Matrix::scalar(0.5), Matrix::scalar(1.0), Some(Matrix::scalar(0.1)), 0.5, 1.0, 1.0)
            .unwrap();
        let pp = PolicyParams::zeros(1, 1, 1);
        assert_eq!(rollout_stationary(&m, &pp, &[vec![0.1]], 1), Err(Error::NonzeroStabilizer));
    }
}
