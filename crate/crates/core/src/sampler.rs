//! Two-class block sampling.
//!
//! Blocks in `I` have probability `δ_DP/q` and blocks in `J` probability
//! `1/q`, with `q = δ_DP·|I| + |J|`. A draw consumes two 64-bit outputs of the
//! stream: the first picks the class by inverse CDF, the second picks a
//! position inside the class array by a 64×64→128 multiply-high.
//!
//! The stream is xoshiro256++ (Blackman & Vigna, reference at
//! <https://prng.di.unimi.it/xoshiro256plusplus.c>) seeded through SplitMix64
//! from a `u64`. Both steps are integer-only, so a seed yields the same
//! multiset on every platform.

use alloc::vec::Vec;

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::identify::Partition;

/// The sampling stream.
pub type BlockRng = Xoshiro256PlusPlus;

/// Stream for worker `worker` under base seed `seed`.
pub fn worker_rng(seed: u64, worker: usize) -> BlockRng {
    BlockRng::seed_from_u64(seed.wrapping_add(worker as u64))
}

/// `[0, 1)` with 53 random bits.
#[inline]
pub fn unit_f64<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform position in `0..len` (`len > 0`).
#[inline]
pub fn index_below<R: RngCore + ?Sized>(rng: &mut R, len: usize) -> usize {
    ((rng.next_u64() as u128 * len as u128) >> 64) as usize
}

/// Distribution over `[m]` parameterized by `(I, J, δ_DP)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    m: usize,
    inactive: Vec<usize>,
    active: Vec<usize>,
    delta_dp: usize,
    q: f64,
    /// Mass of class `I`: `δ_DP·|I| / q`.
    inactive_mass: f64,
}

impl SamplerSpec {
    pub fn new(partition: &Partition, delta_dp: usize) -> Result<Self> {
        if delta_dp == 0 {
            return Err(Error::InvalidParameter("delta_dp must be at least 1".into()));
        }
        if partition.is_empty() {
            return Err(Error::InvalidParameter("cannot sample from zero blocks".into()));
        }
        let q = (delta_dp * partition.inactive().len() + partition.active().len()) as f64;
        let inactive_mass = (delta_dp * partition.inactive().len()) as f64 / q;
        Ok(Self {
            m: partition.len(),
            inactive: partition.inactive().to_vec(),
            active: partition.active().to_vec(),
            delta_dp,
            q,
            inactive_mass,
        })
    }

    /// Uniform over `[m]`.
    pub fn uniform(m: usize) -> Result<Self> {
        Self::new(&Partition::all_inactive(m), 1)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta_dp(&self) -> usize {
        self.delta_dp
    }

    pub fn inactive(&self) -> &[usize] {
        &self.inactive
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn is_inactive(&self, i: usize) -> bool {
        self.inactive.binary_search(&i).is_ok()
    }

    /// `ℙ(i)`.
    pub fn probability(&self, i: usize) -> f64 {
        if self.is_inactive(i) {
            self.delta_dp as f64 / self.q
        } else {
            1.0 / self.q
        }
    }

    /// One block index.
    #[inline]
    pub fn draw<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        let class = if unit_f64(rng) < self.inactive_mass {
            &self.inactive
        } else {
            &self.active
        };
        class[index_below(rng, class.len())]
    }

    /// `τ` i.i.d. draws.
    pub fn sample_multiset<R: RngCore + ?Sized>(&self, tau: usize, rng: &mut R) -> Multiset {
        Multiset((0..tau).map(|_| self.draw(rng)).collect())
    }

    /// Probability that a single draw lands in `S`:
    /// `p₁ = (δ_DP|I∩S| + |J∩S|)/q`.
    pub fn mass_of(&self, set: &[usize]) -> f64 {
        self.weight_of(set) / self.q
    }

    /// `δ_DP|I∩S| + |J∩S|`.
    fn weight_of(&self, set: &[usize]) -> f64 {
        set.iter()
            .map(|&i| if self.is_inactive(i) { self.delta_dp as f64 } else { 1.0 })
            .sum()
    }
}

/// Block indices drawn with repetition.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Multiset(pub Vec<usize>);

impl Multiset {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, i: usize) -> usize {
        self.0.iter().filter(|&&e| e == i).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.contains(&i)
    }
}

/// Elements of `B` lying in `S`, repetitions kept.
pub fn intersection(set: &[usize], b: &Multiset) -> Multiset {
    Multiset(b.0.iter().copied().filter(|e| set.contains(e)).collect())
}

/// Cardinality of [`intersection`].
pub fn intersection_count(set: &[usize], b: &Multiset) -> usize {
    b.0.iter().filter(|e| set.contains(e)).count()
}

/// `ℙ(i ∈ 𝓑 | |S ∩ 𝓑| = k)` in the sense of the multiset argument:
/// `kδ_DP/(δ_DP|I∩S| + |J∩S|)` for `i ∈ I∩S`, `k/(…)` for `i ∈ J∩S`, and
/// `0` for `k = 0`. For `k ≥ 2` this is the conditional expected number of
/// copies of `i` in `𝓑`, which is what the empirical check measures.
pub fn conditional_probability_formula(
    spec: &SamplerSpec,
    set: &[usize],
    k: usize,
    tau: usize,
    i: usize,
) -> f64 {
    debug_assert!(k <= tau);
    debug_assert!(set.contains(&i));
    if k == 0 {
        return 0.0;
    }
    let weight = if spec.is_inactive(i) { spec.delta_dp as f64 } else { 1.0 };
    k as f64 * weight / spec.weight_of(set)
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// `ℙ(|S ∩ 𝓑| = k) = C(τ,k)·p₁ᵏ·p₂^{τ−k}`.
pub fn intersection_count_pmf(spec: &SamplerSpec, set: &[usize], k: usize, tau: usize) -> f64 {
    let p1 = spec.mass_of(set);
    let p2 = 1.0 - p1;
    binomial(tau, k) * libm::pow(p1, k as f64) * libm::pow(p2, (tau - k) as f64)
}

/// `E[|S ∩ 𝓑|²] = τp₁((τ−1)p₁ + 1)`.
pub fn intersection_second_moment(spec: &SamplerSpec, set: &[usize], tau: usize) -> f64 {
    let p1 = spec.mass_of(set);
    tau as f64 * p1 * ((tau as f64 - 1.0) * p1 + 1.0)
}
