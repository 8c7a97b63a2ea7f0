//! The per-update kernel, shared by the serial loop and concurrent workers.
//!
//! Both paths run the same floating-point operations in the same order, so a
//! single worker over [`SharedState`] reproduces [`SolverState`] bit for bit.

#[cfg(target_has_atomic = "64")]
use alloc::vec::Vec;
#[cfg(target_has_atomic = "64")]
use core::sync::atomic::{AtomicU64, Ordering};

use rand::RngCore;

use crate::problem::{CompositeProblem, SolverState};
use crate::sampler::SamplerSpec;
use crate::sparse::Column;
use crate::subproblem::nonneg_direction;

/// Storage the kernel reads and writes.
pub trait BlockStore {
    /// `a_jᵀ r` against the current (possibly stale) residual.
    fn residual_dot(&self, col: Column<'_>) -> f64;

    /// Computes `h = step(x_j)` and applies `x_j += h`; returns the applied `h`.
    fn step_coordinate<F: Fn(f64) -> f64>(&mut self, j: usize, step: F) -> f64;

    /// `r += scale·a_j`.
    fn add_residual(&mut self, col: Column<'_>, scale: f64);

    fn set_direction(&mut self, j: usize, h: f64);
}

impl BlockStore for SolverState {
    #[inline]
    fn residual_dot(&self, col: Column<'_>) -> f64 {
        col.dot(&self.r)
    }

    #[inline]
    fn step_coordinate<F: Fn(f64) -> f64>(&mut self, j: usize, step: F) -> f64 {
        let h = step(self.x[j]);
        if h == 0.0 {
            return 0.0;
        }
        self.x[j] += h;
        h
    }

    #[inline]
    fn add_residual(&mut self, col: Column<'_>, scale: f64) {
        for (r, v) in col.iter() {
            self.r[r] += scale * v;
        }
    }

    #[inline]
    fn set_direction(&mut self, j: usize, h: f64) {
        self.v[j] = h;
    }
}

/// Solves the block subproblem for `j` at penalty `beta` and applies it.
#[inline]
pub fn update_block<S: BlockStore>(p: &CompositeProblem, store: &mut S, j: usize, beta: f64) -> f64 {
    let (col, sign) = p.block_column(j);
    let g = sign * store.residual_dot(col);
    let curvature = beta * p.lipschitz(j);
    let lambda = p.lambda();
    let h = store.step_coordinate(j, |x| nonneg_direction(g, curvature, lambda, x));
    store.set_direction(j, h);
    if h != 0.0 {
        store.add_residual(col, sign * h);
    }
    h
}

/// `rounds` sampled updates from one stream.
pub fn worker_loop<S: BlockStore, R: RngCore + ?Sized>(
    p: &CompositeProblem,
    store: &mut S,
    sampler: &SamplerSpec,
    beta: f64,
    rounds: usize,
    rng: &mut R,
) {
    for _ in 0..rounds {
        let j = sampler.draw(rng);
        update_block(p, store, j, beta);
    }
}

#[cfg(target_has_atomic = "64")]
/// `f64` stored as bits in an `AtomicU64`.
#[derive(Debug, Default)]
#[repr(transparent)]
pub struct AtomicF64(AtomicU64);

#[cfg(target_has_atomic = "64")]
impl AtomicF64 {
    pub fn new(v: f64) -> Self {
        Self(AtomicU64::new(v.to_bits()))
    }

    #[inline]
    pub fn load(&self) -> f64 {
        f64::from_bits(self.0.load(Ordering::Relaxed))
    }

    #[inline]
    pub fn store(&self, v: f64) {
        self.0.store(v.to_bits(), Ordering::Relaxed)
    }

    /// Lock-free `+= delta`.
    #[inline]
    pub fn fetch_add(&self, delta: f64) {
        let mut cur = self.0.load(Ordering::Relaxed);
        loop {
            let new = (f64::from_bits(cur) + delta).to_bits();
            match self
                .0
                .compare_exchange_weak(cur, new, Ordering::Relaxed, Ordering::Relaxed)
            {
                Ok(_) => return,
                Err(actual) => cur = actual,
            }
        }
    }

    /// Retries `x ← x + step(x)` until no other writer intervened; returns the step.
    #[inline]
    pub fn fetch_step<F: Fn(f64) -> f64>(&self, step: F) -> f64 {
        let mut cur = self.0.load(Ordering::Relaxed);
        loop {
            let x = f64::from_bits(cur);
            let h = step(x);
            if h == 0.0 {
                return 0.0;
            }
            match self.0.compare_exchange_weak(
                cur,
                (x + h).to_bits(),
                Ordering::Relaxed,
                Ordering::Relaxed,
            ) {
                Ok(_) => return h,
                Err(actual) => cur = actual,
            }
        }
    }
}

#[cfg(target_has_atomic = "64")]
/// Iterate, residual and directions as atomics, for the interior of a cycle.
///
/// Every scalar write is atomic. Reads of `r` may see a partial set of other
/// workers' updates; the cycle-end refresh repairs that drift. Coordinates are
/// updated by compare-and-swap, so `x ≥ 0` holds even when two workers draw
/// the same block.
#[derive(Debug)]
pub struct SharedState {
    x: Vec<AtomicF64>,
    r: Vec<AtomicF64>,
    v: Vec<AtomicF64>,
}

#[cfg(target_has_atomic = "64")]
impl SharedState {
    pub fn from_state(s: &SolverState) -> Self {
        let wrap = |xs: &[f64]| xs.iter().map(|&x| AtomicF64::new(x)).collect();
        Self {
            x: wrap(&s.x),
            r: wrap(&s.r),
            v: wrap(&s.v),
        }
    }

    /// Copies the shared values back. Call once all workers have joined.
    pub fn write_back(&self, s: &mut SolverState) {
        let unwrap = |dst: &mut [f64], src: &[AtomicF64]| {
            for (d, a) in dst.iter_mut().zip(src) {
                *d = a.load();
            }
        };
        unwrap(&mut s.x, &self.x);
        unwrap(&mut s.r, &self.r);
        unwrap(&mut s.v, &self.v);
    }

    pub fn view(&self) -> SharedView<'_> {
        SharedView(self)
    }
}

#[cfg(target_has_atomic = "64")]
/// Cheap per-worker handle onto a [`SharedState`].
#[derive(Debug, Clone, Copy)]
pub struct SharedView<'a>(&'a SharedState);

#[cfg(target_has_atomic = "64")]
impl BlockStore for SharedView<'_> {
    #[inline]
    fn residual_dot(&self, col: Column<'_>) -> f64 {
        let mut acc = 0.0;
        for (r, v) in col.iter() {
            acc += v * self.0.r[r].load();
        }
        acc
    }

    #[inline]
    fn step_coordinate<F: Fn(f64) -> f64>(&mut self, j: usize, step: F) -> f64 {
        self.0.x[j].fetch_step(step)
    }

    #[inline]
    fn add_residual(&mut self, col: Column<'_>, scale: f64) {
        for (r, v) in col.iter() {
            self.0.r[r].fetch_add(scale * v);
        }
    }

    #[inline]
    fn set_direction(&mut self, j: usize, h: f64) {
        self.0.v[j].store(h);
    }
}
