//! The Lasso split into nonnegative halves.
//!
//! `min ½‖A(x⁺ − x⁻) − b‖² + λ·Σ(x⁺ + x⁻)` subject to `x⁺, x⁻ ≥ 0`.
//! Blocks are single coordinates; coordinate `j < N` is `x⁺_j` and
//! coordinate `j ≥ N` is `x⁻_{j−N}`, both touching column `j mod N`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::identify::Partition;
use crate::sparse::{Column, SparseMatrix};

/// Bound-constrained composite problem `F = f + ψ` with per-block Lipschitz
/// constants and partial-separability degree.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    a: SparseMatrix,
    b: Vec<f64>,
    lambda: f64,
    /// `‖a_j‖²` for the N original columns; shared by both split halves.
    col_lipschitz: Vec<f64>,
    omega: usize,
}

/// Mutable solver iterate with its residual and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    /// `A(x⁺ − x⁻) − b`.
    pub r: Vec<f64>,
    /// Most recent direction taken by each block.
    pub v: Vec<f64>,
    pub partition: Partition,
    pub cycle_size: usize,
    pub iter_count: u64,
}

/// Builds the split problem from `(A, b, λ)`.
pub fn build_lasso(a: SparseMatrix, b: Vec<f64>, lambda: f64) -> Result<CompositeProblem> {
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: b.len(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    let mut col_lipschitz = Vec::with_capacity(a.cols());
    for j in 0..a.cols() {
        let l = a.column(j).norm_sq();
        if l <= 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        col_lipschitz.push(l);
    }
    let omega = 2 * a.max_row_nnz();
    Ok(CompositeProblem {
        a,
        b,
        lambda,
        col_lipschitz,
        omega,
    })
}

/// `0.1·‖Aᵀb‖∞`, the usual regularization weight for real datasets.
pub fn default_lambda(a: &SparseMatrix, b: &[f64]) -> Result<f64> {
    let atb = a.tr_mul_vec(b)?;
    Ok(0.1 * atb.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

impl CompositeProblem {
    pub fn matrix(&self) -> &SparseMatrix {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of original columns `N`.
    pub fn n_cols(&self) -> usize {
        self.a.cols()
    }

    /// Number of split variables (and blocks) `2N`.
    pub fn n_vars(&self) -> usize {
        2 * self.a.cols()
    }

    pub fn lower(&self, _j: usize) -> f64 {
        0.0
    }

    pub fn upper(&self, _j: usize) -> f64 {
        f64::INFINITY
    }

    #[inline]
    pub fn lipschitz(&self, j: usize) -> f64 {
        self.col_lipschitz[j % self.a.cols()]
    }

    /// Partial-separability degree: each row term touches `2·row_nnz` split blocks.
    pub fn omega(&self) -> usize {
        self.omega
    }

    /// Column of `A` touched by block `j` and its sign in `x⁺ − x⁻`.
    #[inline]
    pub fn block_column(&self, j: usize) -> (Column<'_>, f64) {
        let n = self.a.cols();
        if j < n {
            (self.a.column(j), 1.0)
        } else {
            (self.a.column(j - n), -1.0)
        }
    }

    /// `x⁺ − x⁻`, the Lasso solution encoded by a split iterate.
    pub fn recover(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n_cols();
        (0..n).map(|j| x[j] - x[j + n]).collect()
    }

    /// Fresh `A(x⁺ − x⁻) − b`.
    pub fn residual_of(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self
            .a
            .mul_vec(&self.recover(x))
            .expect("split iterate has 2N entries");
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    /// `½‖r‖² + λ·Σx` for an explicit residual.
    pub fn objective_parts(&self, x: &[f64], r: &[f64]) -> f64 {
        0.5 * r.iter().map(|v| v * v).sum::<f64>() + self.lambda * x.iter().sum::<f64>()
    }

    /// Objective at an arbitrary `x`, recomputing the residual.
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective_parts(x, &self.residual_of(x))
    }

    /// State at `x0` with `v = 2ε`, `I = [2N]`, `J = ∅`.
    pub fn initial_state(&self, x0: Vec<f64>, epsilon: f64, c0: usize) -> Result<SolverState> {
        if x0.len() != self.n_vars() {
            return Err(Error::DimensionMismatch {
                expected: self.n_vars(),
                found: x0.len(),
            });
        }
        if let Some((index, &value)) = x0
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(Error::InfeasibleStart { index, value });
        }
        let r = self.residual_of(&x0);
        let m = self.n_vars();
        Ok(SolverState {
            x: x0,
            r,
            v: vec![2.0 * epsilon; m],
            partition: Partition::all_inactive(m),
            cycle_size: c0,
            iter_count: 0,
        })
    }

    /// State at the null vector.
    pub fn zero_state(&self, epsilon: f64, c0: usize) -> SolverState {
        self.initial_state(vec![0.0; self.n_vars()], epsilon, c0)
            .expect("null vector is feasible")
    }

    /// `F(x) = ½‖r‖² + λ·Σx`. Assumes `s.r` matches `s.x`.
    pub fn objective(&self, s: &SolverState) -> f64 {
        self.objective_parts(&s.x, &s.r)
    }

    /// `∇_j f = ±a_{j mod N}ᵀ r`.
    #[inline]
    pub fn gradient_block(&self, s: &SolverState, j: usize) -> f64 {
        let (col, sign) = self.block_column(j);
        sign * col.dot(&s.r)
    }

    /// `x_j += h`, `r += σ·h·a_{j mod N}`, `v_j = h`.
    pub fn apply_block_update(&self, s: &mut SolverState, j: usize, h: f64) {
        s.v[j] = h;
        if h == 0.0 {
            return;
        }
        s.x[j] += h;
        let (col, sign) = self.block_column(j);
        let step = sign * h;
        for (r, v) in col.iter() {
            s.r[r] += step * v;
        }
    }

    /// Recomputes `r` from scratch; returns `‖r_old − r_new‖∞`.
    pub fn residual_refresh(&self, s: &mut SolverState) -> f64 {
        let fresh = self.residual_of(&s.x);
        let drift = s
            .r
            .iter()
            .zip(&fresh)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        s.r = fresh;
        drift
    }
}
