//! Deterministic pseudo-random number generation.
//!
//! All randomness in the crate flows through [`Prng`], a SplitMix64 generator.
//! The recurrence is fully specified here so streams can be reproduced in any
//! language:
//!
//! ```text
//! state <- state + 0x9E3779B97F4A7C15           (wrapping)
//! z <- state
//! z <- (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//! z <- (z XOR (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//! output <- z XOR (z >> 31)
//! ```
//!
//! Every simulation run owns its own `Prng`; none of the generators share
//! state across threads.

#[derive(Debug, Clone)]
pub struct Prng {
    state: u64,
}

impl Prng {
    pub fn new(seed: u64) -> Self {
        Prng { state: seed }
    }

    /// Derives an independent child stream from this seed and a tag.
    pub fn derive(seed: u64, tag: u64) -> Self {
        let mut g = Prng::new(seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15));
        // burn one output so (seed, tag) and (seed ^ tag*phi, 0) diverge
        g.next_u64();
        g
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform integer in [0, n) via Lemire rejection.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        loop {
            let x = self.next_u64();
            let m = (x as u128) * (n as u128);
            let low = m as u64;
            if low < n {
                let threshold = n.wrapping_neg() % n;
                if low < threshold {
                    continue;
                }
            }
            return (m >> 64) as u64;
        }
    }

    /// Standard normal deviate (Box-Muller, one value per call).
    pub fn next_normal(&mut self) -> f64 {
        // u1 in (0, 1] so the log is finite
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }

    /// Uniform m-subset of 0..k without replacement (partial Fisher-Yates).
    pub fn sample_indices(&mut self, k: usize, m: usize) -> Vec<usize> {
        assert!(m <= k);
        let mut pool: Vec<usize> = (0..k).collect();
        for i in 0..m {
            let j = i + self.below((k - i) as u64) as usize;
            pool.swap(i, j);
        }
        pool.truncate(m);
        pool
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let a: Vec<u64> = {
            let mut g = Prng::new(42);
            (0..16).map(|_| g.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut g = Prng::new(42);
            (0..16).map(|_| g.next_u64()).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn below_is_in_range_and_roughly_uniform() {
        let mut g = Prng::new(7);
        let mut counts = [0usize; 5];
        for _ in 0..50_000 {
            counts[g.below(5) as usize] += 1;
        }
        for &c in &counts {
            assert!((c as f64 - 10_000.0).abs() < 500.0, "count {c}");
        }
    }

    #[test]
    fn sample_indices_without_replacement() {
        let mut g = Prng::new(3);
        let s = g.sample_indices(10, 10);
        let mut sorted = s.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn normal_has_unit_scale() {
        let mut g = Prng::new(11);
        let n = 100_000;
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..n {
            let x = g.next_normal();
            sum += x;
            sumsq += x * x;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }
}
