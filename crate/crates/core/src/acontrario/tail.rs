//! Tail probabilities of a sum of `J` independent `γ` draws.
//!
//! The sum is a binomial mixture over the number `k` of nonzero summands:
//! `F(t; J) = Σ_k C(J,k) q^k (1-q)^(J-k) P(S_k ≥ t)` with `q = p/2` and `S_k`
//! the `k`-fold convolution of the continuous part. The atom never touches
//! the grid, so the dominant point mass is handled exactly.
//!
//! `S_k` is held on the grid of summed cell midpoints: index `j` stands for
//! the value `(j + k/2) δ`, and each index's mass is spread uniformly over
//! one cell when evaluating tails.

use crate::error::{Error, Result};

use super::density::GammaDensity;

/// Upper binomial mixture terms whose combined mass is below this are
/// dropped. Tails are therefore underestimated by at most this much.
pub const MIXTURE_TRUNCATION: f64 = 1e-30;

/// `k`-fold convolutions of the normalized continuous part, built lazily.
#[derive(Clone, Debug)]
pub struct KFoldSums {
    step: f64,
    base: Vec<f64>,
    /// `pmfs[k]` and `tails[k][j] = Σ_{i≥j} pmfs[k][i]`.
    pmfs: Vec<Vec<f64>>,
    tails: Vec<Vec<f64>>,
}

impl KFoldSums {
    pub fn new(density: &GammaDensity) -> Self {
        let q = density.nonzero_mass();
        let base: Vec<f64> = density.cells().iter().map(|m| m / q).collect();
        Self {
            step: density.step(),
            base,
            pmfs: vec![vec![1.0]],
            tails: vec![vec![1.0]],
        }
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Largest `k` built so far.
    pub fn built(&self) -> usize {
        self.pmfs.len() - 1
    }

    pub fn ensure(&mut self, k: usize) {
        while self.built() < k {
            let prev = self.pmfs.last().expect("k = 0 always present");
            let mut next = vec![0.0; prev.len() + self.base.len() - 1];
            for (i, &w) in self.base.iter().enumerate() {
                for (out, &v) in next[i..i + prev.len()].iter_mut().zip(prev) {
                    *out += w * v;
                }
            }
            let mut tail = vec![0.0; next.len()];
            let mut acc = 0.0;
            for j in (0..next.len()).rev() {
                acc += next[j];
                tail[j] = acc;
            }
            self.pmfs.push(next);
            self.tails.push(tail);
        }
    }

    /// Probability mass function of `S_k` on its index grid.
    pub fn pmf(&self, k: usize) -> &[f64] {
        &self.pmfs[k]
    }

    /// `P(S_k ≥ t)`; `k` must already be built.
    pub fn tail(&self, k: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if k == 0 {
            return 0.0;
        }
        let pmf = &self.pmfs[k];
        let tail = &self.tails[k];
        // index j spreads over [j + k/2 - 1/2, j + k/2 + 1/2) in cell units
        let u = t / self.step - k as f64 / 2.0 + 0.5;
        if u <= 0.0 {
            return 1.0;
        }
        let j = u.floor() as usize;
        if j >= pmf.len() {
            return 0.0;
        }
        let frac = u - j as f64;
        let above = tail.get(j + 1).copied().unwrap_or(0.0);
        above + pmf[j] * (1.0 - frac)
    }
}

/// Binomial pmf `C(n,k) q^k (1-q)^(n-k)` for all `k ≤ n`.
pub fn binomial_pmf(n: usize, q: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    // build in log space so large n does not underflow the first term
    let lq = q.ln();
    let l1q = (1.0 - q).ln();
    let mut log_c = 0.0;
    for k in 0..=n {
        if k > 0 {
            log_c += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push((log_c + k as f64 * lq + (n - k) as f64 * l1q).exp());
    }
    out
}

/// Largest number of nonzero summands worth keeping for a sum of `n` draws.
pub fn mixture_cutoff(weights: &[f64]) -> usize {
    let mut upper = 0.0;
    for k in (0..weights.len()).rev() {
        upper += weights[k];
        if upper >= MIXTURE_TRUNCATION {
            return k;
        }
    }
    0
}

/// Evaluates `F(t; J)` for arbitrary `J`, caching the convolutions.
#[derive(Clone, Debug)]
pub struct TailEvaluator {
    q: f64,
    sums: KFoldSums,
}

impl TailEvaluator {
    pub fn new(density: &GammaDensity) -> Self {
        Self {
            q: density.nonzero_mass(),
            sums: KFoldSums::new(density),
        }
    }

    pub fn sums(&self) -> &KFoldSums {
        &self.sums
    }

    pub fn sums_mut(&mut self) -> &mut KFoldSums {
        &mut self.sums
    }

    /// Mixture weights for `j` draws, truncated per [`MIXTURE_TRUNCATION`].
    pub fn weights(&self, j: usize) -> Vec<f64> {
        let mut w = binomial_pmf(j, self.q);
        let cut = mixture_cutoff(&w);
        w.truncate(cut + 1);
        w
    }

    /// Prepares the convolutions needed for sums of up to `j_max` draws.
    pub fn prepare(&mut self, j_max: usize) {
        let cut = mixture_cutoff(&binomial_pmf(j_max, self.q));
        self.sums.ensure(cut);
    }

    /// `F(t; j)` using precomputed weights. Needs [`prepare`](Self::prepare).
    pub fn tail_with(&self, t: f64, weights: &[f64]) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        let j = weights.len() - 1;
        let mut acc = 0.0;
        // small terms first
        for k in (1..=j).rev() {
            acc += weights[k] * self.sums.tail(k, t);
        }
        acc.clamp(0.0, 1.0)
    }

    pub fn tail(&mut self, t: f64, j: usize) -> Result<f64> {
        if j == 0 {
            return Err(Error::Param("sector size must be at least 1".into()));
        }
        if t.is_nan() {
            return Err(Error::Param("strength is NaN".into()));
        }
        if t <= 0.0 {
            return Ok(1.0);
        }
        if t > j as f64 {
            return Ok(0.0);
        }
        let w = self.weights(j);
        self.sums.ensure(w.len() - 1);
        Ok(self.tail_with(t, &w))
    }
}

/// `P(ω ≥ t)` for a sum of `j` independent `γ` draws.
pub fn tail_probability(t: f64, j: usize, density: &GammaDensity) -> Result<f64> {
    TailEvaluator::new(density).tail(t, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, SQRT_2};

    fn density() -> GammaDensity {
        GammaDensity::new(0.21, 1.0 / 512.0).unwrap()
    }

    #[test]
    fn zero_strength_is_certain() {
        let d = density();
        for j in [1, 5, 30] {
            assert_eq!(tail_probability(0.0, j, &d).unwrap(), 1.0);
        }
    }

    #[test]
    fn above_maximum_is_impossible() {
        let d = density();
        for j in [1, 5, 30] {
            assert_eq!(tail_probability(j as f64 + 0.5, j, &d).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_draw_matches_closed_form() {
        let d = density();
        let mut ev = TailEvaluator::new(&d);
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let want = 0.21 * (0.5 - 2.0 / PI * (t / SQRT_2).asin());
            let got = ev.tail(t, 1).unwrap();
            assert!((got - want).abs() < 1e-4, "t={t} got={got} want={want}");
        }
        let got = ev.tail(0.5, 1).unwrap();
        assert!((got - 0.0567).abs() < 1e-4);
    }

    #[test]
    fn zero_sector_is_error() {
        assert!(tail_probability(0.5, 0, &density()).is_err());
    }

    #[test]
    fn binomial_weights_sum_to_one() {
        for n in [1usize, 12, 200] {
            let s: f64 = binomial_pmf(n, 0.105).iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
        let w = binomial_pmf(12, 0.105);
        assert!((w[12] - 0.105f64.powi(12)).abs() < 1e-24);
    }

    #[test]
    fn small_sectors_keep_every_mixture_term() {
        let d = density();
        let ev = TailEvaluator::new(&d);
        for j in 1..=24 {
            assert_eq!(ev.weights(j).len(), j + 1, "j={j}");
        }
        assert!(ev.weights(200).len() < 201);
    }

    #[test]
    fn tail_is_non_increasing() {
        let d = density();
        let mut ev = TailEvaluator::new(&d);
        for j in [1, 3, 12, 20] {
            let mut prev = 1.0;
            let mut t = 0.0;
            while t <= j as f64 + 0.1 {
                let f = ev.tail(t, j).unwrap();
                assert!(f <= prev + 1e-15, "j={j} t={t}");
                prev = f;
                t += 0.01;
            }
        }
    }

    #[test]
    fn kfold_pmfs_normalized() {
        let d = density();
        let mut s = KFoldSums::new(&d);
        s.ensure(5);
        for k in 0..=5 {
            let total: f64 = s.pmf(k).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
