//! Closed-form block directions and the quadratic model used to judge them.
//!
//! With `ψ_j(x) = λx` on `[0, ∞)` the block subproblem
//! `min g·h + (βL/2)h² + λh  s.t.  x + h ≥ 0`
//! is a one-dimensional clamped quadratic, so no iterative prox is needed.

use alloc::vec::Vec;

use crate::problem::{CompositeProblem, SolverState};

/// Inputs of one block subproblem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDirectionInput {
    /// Block gradient `∇_j f(x)`.
    pub g: f64,
    /// Block Lipschitz constant, `> 0`.
    pub lipschitz: f64,
    /// Penalty `β ≥ 1`.
    pub beta: f64,
    /// Slope of `ψ_j`.
    pub lambda: f64,
    /// Current coordinate value.
    pub x: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BlockDirectionInput {
    /// Input for the nonnegative split problem (`lower = 0`, `upper = +∞`).
    pub fn nonneg(g: f64, lipschitz: f64, beta: f64, lambda: f64, x: f64) -> Self {
        Self {
            g,
            lipschitz,
            beta,
            lambda,
            x,
            lower: 0.0,
            upper: f64::INFINITY,
        }
    }

    /// Objective of the block subproblem at step `h`.
    pub fn model(&self, h: f64) -> f64 {
        block_model(self.g, h, self.beta * self.lipschitz, self.lambda)
    }
}

/// `clamp(−(g + λ)/(βL), lower − x, upper − x)`.
#[inline]
pub fn block_direction(input: &BlockDirectionInput) -> f64 {
    let unconstrained = -(input.g + input.lambda) / (input.beta * input.lipschitz);
    unconstrained
        .max(input.lower - input.x)
        .min(input.upper - input.x)
}

/// Hot-path form for `[0, ∞)` bounds: `max(−x, −(g + λ)/(βL))`.
#[inline]
pub fn nonneg_direction(g: f64, curvature: f64, lambda: f64, x: f64) -> f64 {
    (-(g + lambda) / curvature).max(-x)
}

/// `G_j(h) = g·h + (γ/2)h² + λh`, the per-block model value.
#[inline]
pub fn block_model(g: f64, h: f64, gamma: f64, lambda: f64) -> f64 {
    g * h + 0.5 * gamma * h * h + lambda * h
}

/// `h^β(x)`: every block direction at the current iterate.
///
/// Needs a consistent residual, so it belongs at synchronization points.
pub fn full_direction(p: &CompositeProblem, s: &SolverState, beta: f64) -> Vec<f64> {
    let lambda = p.lambda();
    (0..p.n_vars())
        .map(|j| {
            let g = p.gradient_block(s, j);
            nonneg_direction(g, beta * p.lipschitz(j), lambda, s.x[j])
        })
        .collect()
}

/// Gradient of `f` over all `2N` blocks.
pub fn full_gradient(p: &CompositeProblem, s: &SolverState) -> Vec<f64> {
    (0..p.n_vars()).map(|j| p.gradient_block(s, j)).collect()
}

/// `G(h, x, γ) = Σ_j [g_j h_j + (γ_j/2)h_j² + λh_j]` with per-block `γ_j`.
pub fn model_value_g(p: &CompositeProblem, h: &[f64], s: &SolverState, gamma: &[f64]) -> f64 {
    let lambda = p.lambda();
    h.iter()
        .zip(gamma)
        .enumerate()
        .map(|(j, (&hj, &gj))| block_model(p.gradient_block(s, j), hj, gj, lambda))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::build_lasso;
    use crate::sparse::SparseMatrix;
    use alloc::vec;

    #[test]
    fn stationary_block() {
        for x in [0.0, 0.3, 7.0] {
            let h = block_direction(&BlockDirectionInput::nonneg(0.0, 2.0, 1.0, 0.0, x));
            assert_eq!(h, 0.0);
        }
    }

    #[test]
    fn closed_form_cases() {
        let h = block_direction(&BlockDirectionInput::nonneg(-3.0, 2.0, 1.0, 1.0, 0.0));
        assert_eq!(h, 1.0);
        let h = block_direction(&BlockDirectionInput::nonneg(5.0, 2.0, 1.0, 1.0, 0.5));
        assert_eq!(h, -0.5);
    }

    #[test]
    fn finite_upper_bound_clamps() {
        let input = BlockDirectionInput {
            upper: 0.25,
            ..BlockDirectionInput::nonneg(-10.0, 1.0, 1.0, 0.0, 0.0)
        };
        assert_eq!(block_direction(&input), 0.25);
    }

    #[test]
    fn identity_full_direction() {
        let p = build_lasso(SparseMatrix::identity(2).unwrap(), vec![1.0, -1.0], 0.0).unwrap();
        let s = p.zero_state(1e-6, 4);
        assert_eq!(full_direction(&p, &s, 1.0), vec![1.0, 0.0, 0.0, 1.0]);

        let opt = p.initial_state(vec![1.0, 0.0, 0.0, 1.0], 1e-6, 4).unwrap();
        assert!(full_direction(&p, &opt, 1.0).iter().all(|&h| h == 0.0));
    }

    #[test]
    fn model_value_is_nonpositive_at_direction() {
        let p = build_lasso(SparseMatrix::identity(2).unwrap(), vec![3.0, -2.0], 0.5).unwrap();
        let s = p.initial_state(vec![0.1, 0.4, 0.0, 2.0], 1e-6, 4).unwrap();
        for beta in [1.0, 2.5] {
            let h = full_direction(&p, &s, beta);
            let gamma: Vec<f64> = (0..4).map(|j| beta * p.lipschitz(j)).collect();
            assert!(model_value_g(&p, &h, &s, &gamma) <= 0.0);
            assert_eq!(model_value_g(&p, &[0.0; 4], &s, &gamma), 0.0);
        }
    }
}
