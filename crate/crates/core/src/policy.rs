//! Disturbance-action policy parameters `M = [M^[1] | … | M^[p]]` and the
//! feasible set `{M : Σ_j ||M^[j]|| ≤ κ_M}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::lti::DisturbanceWindow;

/// Slack in the membership predicate of [`FeasibleSet`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// `p` blocks of shape `du × dx`, stored contiguously block after block,
/// each block row-major. Block index `i` (0-based) holds `M^[i+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockMatrix {
    p: usize,
    du: usize,
    dx: usize,
    data: Vec<f64>,
}

/// DAC parameters.
pub type PolicyParams = BlockMatrix;
/// Gradient (or predicted gradient) with respect to the DAC parameters.
pub type GradientMatrix = BlockMatrix;

impl BlockMatrix {
    pub fn zeros(p: usize, du: usize, dx: usize) -> Self {
        BlockMatrix { p, du, dx, data: vec![0.0; p * du * dx] }
    }

    /// Scalar blocks (`du = dx = 1`).
    pub fn from_scalars(v: &[f64]) -> Self {
        BlockMatrix { p: v.len(), du: 1, dx: 1, data: v.to_vec() }
    }

    pub fn from_blocks(blocks: &[Matrix]) -> Result<Self> {
        let first = blocks.first().ok_or(Error::InvalidParameter { name: "p", reason: "needs at least one block" })?;
        let (du, dx) = (first.rows(), first.cols());
        let mut data = Vec::with_capacity(blocks.len() * du * dx);
        for b in blocks {
            if b.rows() != du || b.cols() != dx {
                return Err(Error::DimensionMismatch { what: "policy block", expected: du * dx, found: b.rows() * b.cols() });
            }
            data.extend_from_slice(b.as_slice());
        }
        Ok(BlockMatrix { p: blocks.len(), du, dx, data })
    }

    pub fn from_flat(p: usize, du: usize, dx: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != p * du * dx {
            return Err(Error::DimensionMismatch { what: "policy data", expected: p * du * dx, found: data.len() });
        }
        Ok(BlockMatrix { p, du, dx, data })
    }

    pub fn p(&self) -> usize {
        self.p
    }
    pub fn du(&self) -> usize {
        self.du
    }
    pub fn dx(&self) -> usize {
        self.dx
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        let n = self.du * self.dx;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.du * self.dx;
        &mut self.data[i * n..(i + 1) * n]
    }

    pub fn block_matrix(&self, i: usize) -> Matrix {
        Matrix::from_vec(self.du, self.dx, self.block(i).to_vec()).expect("block shape")
    }

    #[inline]
    pub fn get(&self, i: usize, a: usize, b: usize) -> f64 {
        self.data[(i * self.du + a) * self.dx + b]
    }

    #[inline]
    pub fn set(&mut self, i: usize, a: usize, b: usize, v: f64) {
        self.data[(i * self.du + a) * self.dx + b] = v;
    }

    pub fn same_shape(&self, other: &BlockMatrix) -> bool {
        self.p == other.p && self.du == other.du && self.dx == other.dx
    }

    pub(crate) fn check_shape(&self, du: usize, dx: usize) -> Result<()> {
        if self.du != du || self.dx != dx {
            return Err(Error::DimensionMismatch { what: "policy block shape", expected: du * dx, found: self.du * self.dx });
        }
        Ok(())
    }

    pub(crate) fn check_same(&self, other: &BlockMatrix) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { what: "block matrix", expected: self.data.len(), found: other.data.len() })
        }
    }

    /// Frobenius norm of the augmented `du × (p·dx)` matrix.
    pub fn frobenius(&self) -> f64 {
        linalg::norm(&self.data)
    }

    pub fn block_norms(&self) -> Vec<f64> {
        (0..self.p).map(|i| linalg::norm(self.block(i))).collect()
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &BlockMatrix) -> f64 {
        linalg::dot(&self.data, &other.data)
    }

    /// `self += s·other`
    pub fn axpy(&mut self, s: f64, other: &BlockMatrix) {
        linalg::axpy(s, &other.data, &mut self.data);
    }

    pub fn scaled(&self, s: f64) -> BlockMatrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= s);
        out
    }

    pub fn sub(&self, other: &BlockMatrix) -> BlockMatrix {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    /// `out += M^[i+1] · w`
    pub fn block_mul_add(&self, i: usize, w: &[f64], out: &mut [f64]) {
        let blk = self.block(i);
        for (a, o) in out.iter_mut().enumerate() {
            *o += linalg::dot(&blk[a * self.dx..(a + 1) * self.dx], w);
        }
    }
}

/// The decision set `{M : Σ_j ||M^[j]|| ≤ κ_M}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibleSet {
    kappa_m: f64,
    p: usize,
}

impl FeasibleSet {
    pub fn new(kappa_m: f64, p: usize) -> Result<Self> {
        if !(kappa_m > 0.0) || !kappa_m.is_finite() {
            return Err(Error::InvalidParameter { name: "kappa_M", reason: "must be positive and finite" });
        }
        if p == 0 {
            return Err(Error::InvalidParameter { name: "p", reason: "must be at least 1" });
        }
        Ok(FeasibleSet { kappa_m, p })
    }

    pub fn kappa_m(&self) -> f64 {
        self.kappa_m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn contains(&self, m: &PolicyParams) -> bool {
        m.p() == self.p && block_norm_sum(m) <= self.kappa_m + FEASIBILITY_TOL
    }
}

/// `Σ_j ||M^[j]||_F`
pub fn block_norm_sum(m: &PolicyParams) -> f64 {
    m.block_norms().iter().sum()
}

/// `u = K x + Σ_j M^[j] w_{t−j}`
pub fn action(m: &PolicyParams, k: &Matrix, x: &[f64], window: &DisturbanceWindow) -> Result<Vec<f64>> {
    let (du, dx) = (m.du(), m.dx());
    if k.rows() != du || k.cols() != dx {
        return Err(Error::DimensionMismatch { what: "K", expected: du * dx, found: k.rows() * k.cols() });
    }
    linalg::check_len("state", x, dx)?;
    if window.capacity() != m.p() || window.dim() != dx {
        return Err(Error::DimensionMismatch { what: "disturbance window", expected: m.p(), found: window.capacity() });
    }
    let mut u = k.mul_vec(x);
    for i in 0..m.p() {
        m.block_mul_add(i, window.lag(i + 1), &mut u);
    }
    Ok(u)
}

/// Euclidean projection onto `set`.
///
/// Soft-thresholds the vector of block norms onto the ℓ1 ball of radius κ_M
/// and rescales every block to its thresholded norm.
pub fn project(m: &PolicyParams, set: &FeasibleSet) -> PolicyParams {
    let norms = m.block_norms();
    let total: f64 = norms.iter().sum();
    if total <= set.kappa_m() {
        return m.clone();
    }
    let tau = l1_threshold(&norms, set.kappa_m());
    let mut out = m.clone();
    for (i, &n) in norms.iter().enumerate() {
        let keep = if n > tau { (n - tau) / n } else { 0.0 };
        out.block_mut(i).iter_mut().for_each(|v| *v *= keep);
    }
    out
}

/// Threshold τ with `Σ max(n_i − τ, 0) = radius`, for non-negative `n` whose
/// sum exceeds `radius`.
fn l1_threshold(n: &[f64], radius: f64) -> f64 {
    let mut idx: Vec<usize> = (0..n.len()).collect();
    // descending by value, ties by block index
    idx.sort_by(|&a, &b| n[b].total_cmp(&n[a]).then(a.cmp(&b)));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &i) in idx.iter().enumerate() {
        cum += n[i];
        let cand = (cum - radius) / (k + 1) as f64;
        if n[i] > cand {
            tau = cand;
        } else {
            break;
        }
    }
    tau
}
