//! Active-set identification at cycle boundaries.
//!
//! The threshold `ρ_α(x) = −‖h(x)‖^α` flags coordinates sitting close enough
//! to their lower bound that they are likely zero at the solution. Flagged
//! blocks form `J` and are sampled `δ_DP` times less often than the rest.

use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Parameters of the identification strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdentifyParams {
    pub alpha: f64,
    pub delta_f: usize,
    pub c0: usize,
    pub delta_dp: usize,
}

impl IdentifyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.delta_f == 0 || self.c0 == 0 || self.delta_dp == 0 {
            return Err(Error::InvalidParameter(
                "delta_f, c0 and delta_dp must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Split of the block indices `[m]` into `I` (free, sampled often) and `J`
/// (candidate-active, sampled rarely). Both lists are sorted and disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Partition {
    inactive: Vec<usize>,
    active: Vec<usize>,
}

impl Partition {
    /// `I = [m]`, `J = ∅`.
    pub fn all_inactive(m: usize) -> Self {
        Self {
            inactive: (0..m).collect(),
            active: Vec::new(),
        }
    }

    /// Builds `(I, J)` from a sorted, duplicate-free `J ⊆ [m]`.
    pub fn from_active(m: usize, active: Vec<usize>) -> Result<Self> {
        if active.windows(2).any(|w| w[0] >= w[1]) || active.last().is_some_and(|&j| j >= m) {
            return Err(Error::InvalidParameter(
                "active set must be sorted, unique and inside [m]".into(),
            ));
        }
        let mut inactive = Vec::with_capacity(m - active.len());
        let mut it = active.iter().peekable();
        for i in 0..m {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                inactive.push(i);
            }
        }
        Ok(Self { inactive, active })
    }

    /// Builds `(I, J)` from explicit lists; they must partition `[m]`.
    pub fn from_sets(m: usize, mut inactive: Vec<usize>, mut active: Vec<usize>) -> Result<Self> {
        inactive.sort_unstable();
        active.sort_unstable();
        let mut seen = alloc::vec![false; m];
        for &i in inactive.iter().chain(&active) {
            if i >= m || seen[i] {
                return Err(Error::InvalidParameter(
                    "I and J must be disjoint subsets of [m]".into(),
                ));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter("I and J must cover [m]".into()));
        }
        Ok(Self { inactive, active })
    }

    pub fn inactive(&self) -> &[usize] {
        &self.inactive
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn len(&self) -> usize {
        self.inactive.len() + self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Membership mask of `J`.
    pub fn active_mask(&self) -> Vec<bool> {
        let mut mask = alloc::vec![false; self.len()];
        for &j in &self.active {
            mask[j] = true;
        }
        mask
    }
}

/// `ρ_α = −‖h‖^α`.
pub fn rho_alpha(h_norm: f64, alpha: f64) -> f64 {
    -libm::pow(h_norm, alpha)
}

/// Coordinates whose lower-bound constraint value `0 − x_j` reaches `ρ_α`,
/// i.e. `x_j ≤ ‖h‖^α`. The upper bound is `+∞` and never qualifies.
///
/// `h` is the full direction at `β = 1`.
pub fn candidate_active_set(x: &[f64], h: &[f64], alpha: f64) -> Vec<usize> {
    let h_norm = libm::sqrt(h.iter().map(|v| v * v).sum::<f64>());
    let rho = rho_alpha(h_norm, alpha);
    x.iter()
        .enumerate()
        .filter(|&(_, &xj)| -xj >= rho)
        .map(|(j, _)| j)
        .collect()
}

/// `J := C`, `I := [m] \ C`.
pub fn update_partition(m: usize, candidates: Vec<usize>) -> Result<Partition> {
    Partition::from_active(m, candidates)
}

/// `c_s = max(min(δ_F·|I|, m), c0)`.
pub fn next_cycle_size(size_inactive: usize, delta_f: usize, m: usize, c0: usize) -> usize {
    delta_f.saturating_mul(size_inactive).min(m).max(c0)
}
