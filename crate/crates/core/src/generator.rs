//! Random Lasso instances with a certified optimum.
//!
//! The construction fixes an optimal residual `r*` first and then shapes the
//! columns so the optimality conditions hold exactly:
//!
//! * support columns satisfy `|a_jᵀr*| = λ` and carry `x*_j = −sign(a_jᵀr*)·v_j`;
//! * off-support columns satisfy `|a_jᵀr*| ≤ λ` and carry `x*_j = 0`;
//! * `b = A x* − r*`, so `A x* − b = r*`.
//!
//! Hence `F* = ½‖r*‖² + λ‖x*‖₁`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::problem::{build_lasso, CompositeProblem};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorSpec {
    pub rows: usize,
    pub cols: usize,
    pub nnz_per_col: usize,
    /// Nonzeros in `x*`; defaults to `min(10000, rows/2)` capped at `cols`.
    pub support_size: Option<usize>,
    pub lambda: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(rows: usize, cols: usize, nnz_per_col: usize, seed: u64) -> Self {
        Self {
            rows,
            cols,
            nnz_per_col,
            support_size: None,
            lambda: 1.0,
            seed,
        }
    }

    pub fn with_support(mut self, s: usize) -> Self {
        self.support_size = Some(s);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn support(&self) -> usize {
        self.support_size
            .unwrap_or_else(|| 10_000.min(self.rows / 2).min(self.cols).max(1))
    }

    fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParameter("rows and cols must be positive".into()));
        }
        if self.nnz_per_col == 0 || self.nnz_per_col > self.rows {
            return Err(Error::InvalidParameter(alloc::format!(
                "nnz_per_col must lie in [1, {}], got {}",
                self.rows,
                self.nnz_per_col
            )));
        }
        let s = self.support();
        if s == 0 || s > self.cols {
            return Err(Error::InvalidParameter(alloc::format!(
                "support size must lie in [1, {}], got {s}",
                self.cols
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        Ok(())
    }
}

/// A generated instance and its optimum.
#[derive(Debug, Clone)]
pub struct Instance {
    pub a: SparseMatrix,
    pub b: Vec<f64>,
    /// Optimal Lasso solution (length `N`).
    pub x_star: Vec<f64>,
    /// Optimal residual `A x* − b`.
    pub r_star: Vec<f64>,
    /// Sorted indices of the nonzeros of `x*`.
    pub support: Vec<usize>,
    pub lambda: f64,
    pub f_star: f64,
}

impl Instance {
    pub fn problem(&self) -> Result<CompositeProblem> {
        build_lasso(self.a.clone(), self.b.clone(), self.lambda)
    }

    /// `(max(x*, 0), max(−x*, 0))` stacked.
    pub fn split_optimum(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.x_star.iter().map(|&x| x.max(0.0)).collect();
        out.extend(self.x_star.iter().map(|&x| (-x).max(0.0)));
        out
    }
}

/// Table-style summary of an instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InstanceSummary {
    pub rows: usize,
    pub cols: usize,
    pub omega: usize,
    /// Percentage of zero entries in `x*`.
    pub zero_percent: f64,
}

fn uniform_pm1<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(-1.0..1.0)
}

fn draw_column<R: Rng>(rng: &mut R, rows: usize, nnz: usize) -> (Vec<usize>, Vec<f64>) {
    let mut idx = index::sample(rng, rows, nnz).into_vec();
    idx.sort_unstable();
    let vals = idx
        .iter()
        .map(|_| loop {
            let v = uniform_pm1(rng);
            if v != 0.0 {
                break v;
            }
        })
        .collect();
    (idx, vals)
}

fn dot(idx: &[usize], vals: &[f64], y: &[f64]) -> f64 {
    idx.iter().zip(vals).map(|(&r, &v)| v * y[r]).sum()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    let (m, n, p, lambda) = (spec.rows, spec.cols, spec.nnz_per_col, spec.lambda);

    let mut columns: Vec<(Vec<usize>, Vec<f64>)> =
        (0..n).map(|_| draw_column(&mut rng, m, p)).collect();
    let r_star: Vec<f64> = (0..m).map(|_| uniform_pm1(&mut rng)).collect();
    let mut support = index::sample(&mut rng, n, spec.support()).into_vec();
    support.sort_unstable();

    let mut on_support = vec![false; n];
    for &j in &support {
        on_support[j] = true;
    }

    let mut x_star = vec![0.0; n];
    for j in 0..n {
        let mut corr = dot(&columns[j].0, &columns[j].1, &r_star);
        if on_support[j] {
            // A column orthogonal to r* cannot be scaled onto |a_jᵀr*| = λ.
            while corr.abs() < 1e-8 {
                columns[j] = draw_column(&mut rng, m, p);
                corr = dot(&columns[j].0, &columns[j].1, &r_star);
            }
            let scale = lambda / corr.abs();
            columns[j].1.iter_mut().for_each(|v| *v *= scale);
            let magnitude = 1.0 - rng.random::<f64>(); // (0, 1]
            x_star[j] = -corr.signum() * magnitude;
        } else if corr.abs() > lambda {
            let u = loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            };
            let scale = lambda * u / corr.abs();
            columns[j].1.iter_mut().for_each(|v| *v *= scale);
        }
    }

    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    let mut row_idx = Vec::with_capacity(n * p);
    let mut values = Vec::with_capacity(n * p);
    for (idx, vals) in columns {
        row_idx.extend(idx);
        values.extend(vals);
        col_ptr.push(row_idx.len());
    }
    let a = SparseMatrix::from_csc(m, n, col_ptr, row_idx, values)?;

    let ax = a.mul_vec(&x_star)?;
    let b: Vec<f64> = ax.iter().zip(&r_star).map(|(axi, ri)| axi - ri).collect();
    let f_star = 0.5 * r_star.iter().map(|v| v * v).sum::<f64>()
        + lambda * x_star.iter().map(|v| v.abs()).sum::<f64>();

    Ok(Instance {
        a,
        b,
        x_star,
        r_star,
        support,
        lambda,
        f_star,
    })
}

/// Dimensions, `ω` of the split problem and the zero fraction of `x*`.
pub fn describe(a: &SparseMatrix, x_star: &[f64]) -> InstanceSummary {
    let zeros = x_star.iter().filter(|&&x| x == 0.0).count();
    InstanceSummary {
        rows: a.rows(),
        cols: a.cols(),
        omega: 2 * a.max_row_nnz(),
        zero_percent: 100.0 * zeros as f64 / x_star.len() as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_specs() {
        assert!(generate(&GeneratorSpec::new(0, 4, 1, 0)).is_err());
        assert!(generate(&GeneratorSpec::new(4, 4, 5, 0)).is_err());
        assert!(generate(&GeneratorSpec::new(4, 4, 1, 0).with_support(5)).is_err());
        assert!(generate(&GeneratorSpec::new(4, 4, 1, 0).with_lambda(0.0)).is_err());
    }

    #[test]
    fn default_support() {
        assert_eq!(GeneratorSpec::new(100, 1000, 3, 0).support(), 50);
        assert_eq!(GeneratorSpec::new(100, 20, 3, 0).support(), 20);
        assert_eq!(GeneratorSpec::new(100_000, 200_000, 3, 0).support(), 10_000);
    }

    #[test]
    fn tiny_summary() {
        let inst = generate(&GeneratorSpec::new(4, 4, 1, 7).with_support(2)).unwrap();
        let d = describe(&inst.a, &inst.x_star);
        assert_eq!(d.zero_percent, 50.0);
        assert_eq!((d.rows, d.cols), (4, 4));
    }

    #[test]
    fn five_percent_support() {
        let inst = generate(&GeneratorSpec::new(50, 200, 4, 1).with_support(10)).unwrap();
        assert_eq!(describe(&inst.a, &inst.x_star).zero_percent, 95.0);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = GeneratorSpec::new(30, 40, 5, 11).with_support(6);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.a, b.a);
        assert_eq!(a.b, b.b);
        assert_eq!(a.f_star, b.f_star);
    }

    #[test]
    fn exact_nnz_per_column() {
        let inst = generate(&GeneratorSpec::new(30, 40, 5, 2).with_support(6)).unwrap();
        for j in 0..40 {
            assert_eq!(inst.a.column(j).nnz(), 5);
        }
    }
}
