//! Client populations with heterogeneous adapter ranks and the sampling
//! statistics that drive the collapse analysis: rank coverage, the
//! hypergeometric second-moment factor h(p), per-direction contraction
//! factors, and the (gamma, C) collapse forecast.

use crate::error::{Error, Result};
use crate::rng::Prng;

/// Rank levels and the probability mass assigned to each.
#[derive(Debug, Clone)]
pub struct RankConfig {
    levels: Vec<usize>,
    probs: Vec<f64>,
}

impl RankConfig {
    pub fn new(levels: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        if levels.is_empty() || levels.len() != probs.len() {
            return Err(Error::Config("levels/probs length mismatch".into()));
        }
        if levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("levels must be strictly increasing positive".into()));
        }
        if probs.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Config("every prob must be > 0".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("probs sum to {total}, not 1")));
        }
        Ok(RankConfig { levels, probs })
    }

    /// Equal mass on every level.
    pub fn uniform(levels: Vec<usize>) -> Result<Self> {
        let k = levels.len();
        RankConfig::new(levels, vec![1.0 / k as f64; k])
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn max_rank(&self) -> usize {
        *self.levels.last().unwrap()
    }
}

#[derive(Debug, Clone)]
pub struct Client {
    pub id: usize,
    pub rank: usize,
    pub samples: usize,
}

/// A fixed roster of clients; ids are dense 0..K-1.
#[derive(Debug, Clone)]
pub struct ClientPopulation {
    clients: Vec<Client>,
    max_rank: usize,
}

impl ClientPopulation {
    pub fn new(clients: Vec<Client>) -> Result<Self> {
        if clients.is_empty() {
            return Err(Error::Population("no clients".into()));
        }
        for (i, c) in clients.iter().enumerate() {
            if c.id != i {
                return Err(Error::Population("client ids must be dense 0..K-1".into()));
            }
            if c.rank == 0 || c.samples == 0 {
                return Err(Error::Population("rank and samples must be positive".into()));
            }
        }
        let max_rank = clients.iter().map(|c| c.rank).max().unwrap();
        Ok(ClientPopulation { clients, max_rank })
    }

    pub fn len(&self) -> usize {
        self.clients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clients.is_empty()
    }

    pub fn clients(&self) -> &[Client] {
        &self.clients
    }

    pub fn rank_of(&self, id: usize) -> usize {
        self.clients[id].rank
    }

    pub fn samples_of(&self, id: usize) -> usize {
        self.clients[id].samples
    }

    pub fn max_rank(&self) -> usize {
        self.max_rank
    }

    pub fn min_rank(&self) -> usize {
        self.clients.iter().map(|c| c.rank).min().unwrap()
    }

    pub fn set_samples(&mut self, samples: &[usize]) -> Result<()> {
        if samples.len() != self.clients.len() {
            return Err(Error::Population("samples length != client count".into()));
        }
        if samples.iter().any(|&s| s == 0) {
            return Err(Error::Population("samples must be positive".into()));
        }
        for (c, &s) in self.clients.iter_mut().zip(samples) {
            c.samples = s;
        }
        Ok(())
    }

    /// Number of clients whose rank is at least `i`.
    pub fn support_count(&self, i: usize) -> usize {
        self.clients.iter().filter(|c| c.rank >= i).count()
    }
}

/// Per-rank-index coverage probabilities p_1..p_rmax.
#[derive(Debug, Clone)]
pub struct CoverageProfile {
    p: Vec<f64>,
}

impl CoverageProfile {
    /// p[i-1] is the coverage of rank index i.
    pub fn values(&self) -> &[f64] {
        &self.p
    }

    pub fn at(&self, i: usize) -> f64 {
        self.p[i - 1]
    }

    pub fn max_rank(&self) -> usize {
        self.p.len()
    }
}

/// Contraction factors and the geometric collapse forecast derived from them.
#[derive(Debug, Clone)]
pub struct CollapseForecast {
    /// q_i = beta^2 h(p_i), indexed like the coverage profile.
    pub q: Vec<f64>,
    /// q_{r1+1} / q_{r1}
    pub gamma: f64,
    /// initial tail-to-shared energy ratio
    pub c0: f64,
    pub beta: f64,
    /// the shared rank r_1
    pub shared_rank: usize,
}

/// Deterministic proportional rank assignment followed by a seeded shuffle.
///
/// Each level receives floor(k * prob) clients; leftover slots go to the
/// largest fractional parts, ties to the higher level. If the top level would
/// end up empty it takes one client from the most populated level, so the
/// maximum rank is always represented. Every client starts with one sample.
pub fn assign_ranks(config: &RankConfig, k: usize, seed: u64) -> Result<ClientPopulation> {
    let levels = config.levels();
    let l = levels.len();
    if k < l {
        return Err(Error::Population(format!(
            "{k} clients cannot cover {l} rank levels"
        )));
    }
    let mut counts: Vec<usize> = Vec::with_capacity(l);
    let mut fracs: Vec<(f64, usize)> = Vec::with_capacity(l);
    for (idx, &p) in config.probs().iter().enumerate() {
        let exact = k as f64 * p;
        let base = exact.floor() as usize;
        counts.push(base);
        fracs.push((exact - base as f64, idx));
    }
    let assigned: usize = counts.iter().sum();
    let mut leftover = k - assigned;
    // largest fractional part first, ties to the higher level
    fracs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(b.1.cmp(&a.1)));
    let mut fi = 0;
    while leftover > 0 {
        counts[fracs[fi % l].1] += 1;
        fi += 1;
        leftover -= 1;
    }
    if counts[l - 1] == 0 {
        let mut donor = 0;
        for i in 1..l {
            if counts[i] > counts[donor] {
                donor = i;
            }
        }
        counts[donor] -= 1;
        counts[l - 1] += 1;
    }

    let mut ranks: Vec<usize> = Vec::with_capacity(k);
    for (idx, &c) in counts.iter().enumerate() {
        ranks.extend(std::iter::repeat(levels[idx]).take(c));
    }
    let mut rng = Prng::new(seed);
    rng.shuffle(&mut ranks);
    let clients = ranks
        .into_iter()
        .enumerate()
        .map(|(id, rank)| Client {
            id,
            rank,
            samples: 1,
        })
        .collect();
    ClientPopulation::new(clients)
}

/// Exact rank coverage p_i = |{k : r_k >= i}| / K for i = 1..r_max.
pub fn coverage(pop: &ClientPopulation) -> CoverageProfile {
    let k = pop.len() as f64;
    let rmax = pop.max_rank();
    let mut counts = vec![0usize; rmax + 1];
    for c in pop.clients() {
        counts[c.rank] += 1;
    }
    // suffix sums: clients with rank >= i
    let mut p = vec![0.0; rmax];
    let mut acc = 0usize;
    for i in (1..=rmax).rev() {
        acc += counts[i];
        p[i - 1] = acc as f64 / k;
    }
    CoverageProfile { p }
}

/// Uniform m-subset of client ids without replacement.
pub fn sample_round(pop: &ClientPopulation, m: usize, rng: &mut Prng) -> Result<Vec<usize>> {
    if m == 0 || m > pop.len() {
        return Err(Error::Sample(format!(
            "cannot sample {m} of {} clients",
            pop.len()
        )));
    }
    let mut ids = rng.sample_indices(pop.len(), m);
    ids.sort_unstable();
    Ok(ids)
}

/// Second moment of the supporting fraction under sampling without
/// replacement: h(p) = p^2 + (K-M)/(M(K-1)) * p(1-p).
pub fn h_factor(p: f64, k: usize, m: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [0,1]")));
    }
    if m == 0 || m > k || k < 2 {
        return Err(Error::Domain(format!("invalid sampling sizes K={k}, M={m}")));
    }
    let tau = (k - m) as f64 / (m as f64 * (k - 1) as f64);
    Ok(p * p + tau * p * (1.0 - p))
}

/// Contraction factors q_i, collapse rate gamma, and initial imbalance C for
/// uniform averaging over `m` sampled clients with update scale `beta`.
pub fn forecast(
    pop: &ClientPopulation,
    m: usize,
    beta: f64,
    e0: &[f64],
) -> Result<CollapseForecast> {
    let cov = coverage(pop);
    let rmax = cov.max_rank();
    if e0.len() != rmax {
        return Err(Error::Config(format!(
            "e0 has {} entries, expected {rmax}",
            e0.len()
        )));
    }
    let r1 = pop.min_rank();
    if r1 == rmax {
        return Err(Error::NoHeterogeneity(
            "all clients share one rank; gamma is undefined".into(),
        ));
    }
    let k = pop.len();
    let q: Vec<f64> = cov
        .values()
        .iter()
        .map(|&p| h_factor(p, k, m).map(|h| beta * beta * h))
        .collect::<Result<_>>()?;
    let shared: f64 = e0[..r1].iter().sum();
    if shared <= 0.0 {
        return Err(Error::Degenerate("zero shared-rank initial energy".into()));
    }
    let tail: f64 = e0[r1..].iter().sum();
    Ok(CollapseForecast {
        gamma: q[r1] / q[r1 - 1],
        c0: tail / shared,
        beta,
        shared_rank: r1,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fifths() -> RankConfig {
        RankConfig::uniform(vec![8, 16, 32, 48, 64]).unwrap()
    }

    fn reference_pop() -> ClientPopulation {
        assign_ranks(&fifths(), 100, 1).unwrap()
    }

    #[test]
    fn assign_ranks_one_per_level() {
        let pop = assign_ranks(&fifths(), 5, 0).unwrap();
        let mut ranks: Vec<usize> = pop.clients().iter().map(|c| c.rank).collect();
        ranks.sort_unstable();
        assert_eq!(ranks, vec![8, 16, 32, 48, 64]);
    }

    #[test]
    fn assign_ranks_homogeneous() {
        let cfg = RankConfig::uniform(vec![8]).unwrap();
        let pop = assign_ranks(&cfg, 10, 0).unwrap();
        assert!(pop.clients().iter().all(|c| c.rank == 8));
        let cov = coverage(&pop);
        assert!(cov.values().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn assign_ranks_proportional() {
        let cfg = RankConfig::new(vec![8, 64], vec![0.7, 0.3]).unwrap();
        let pop = assign_ranks(&cfg, 10, 0).unwrap();
        let low = pop.clients().iter().filter(|c| c.rank == 8).count();
        let high = pop.clients().iter().filter(|c| c.rank == 64).count();
        assert_eq!((low, high), (7, 3));
    }

    #[test]
    fn assign_ranks_top_level_always_populated() {
        let cfg = RankConfig::new(vec![8, 64], vec![0.99, 0.01]).unwrap();
        let pop = assign_ranks(&cfg, 10, 0).unwrap();
        assert!(pop.clients().iter().any(|c| c.rank == 64));
    }

    #[test]
    fn assign_ranks_too_few_clients() {
        assert!(matches!(
            assign_ranks(&fifths(), 3, 0),
            Err(Error::Population(_))
        ));
    }

    #[test]
    fn assign_ranks_deterministic() {
        let a = assign_ranks(&fifths(), 100, 9).unwrap();
        let b = assign_ranks(&fifths(), 100, 9).unwrap();
        let ra: Vec<usize> = a.clients().iter().map(|c| c.rank).collect();
        let rb: Vec<usize> = b.clients().iter().map(|c| c.rank).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn coverage_reference_profile() {
        let cov = coverage(&reference_pop());
        for i in 1..=64 {
            let want = match i {
                1..=8 => 1.0,
                9..=16 => 0.8,
                17..=32 => 0.6,
                33..=48 => 0.4,
                _ => 0.2,
            };
            assert_eq!(cov.at(i), want, "p_{i}");
        }
    }

    #[test]
    fn coverage_two_clients() {
        let pop = ClientPopulation::new(vec![
            Client { id: 0, rank: 1, samples: 1 },
            Client { id: 1, rank: 4, samples: 1 },
        ])
        .unwrap();
        assert_eq!(coverage(&pop).values(), &[1.0, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn coverage_matches_configured_fractions_exactly() {
        let cov = coverage(&reference_pop());
        // probs are multiples of 1/K, so proportional assignment is exact
        assert_eq!(cov.at(8), 1.0);
        assert_eq!(cov.at(9), 0.8);
        assert_eq!(cov.at(64), 0.2);
    }

    #[test]
    fn sample_round_full_participation() {
        let pop = reference_pop();
        let mut rng = Prng::new(0);
        let ids = sample_round(&pop, 100, &mut rng).unwrap();
        assert_eq!(ids, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn sample_round_uniform_frequency() {
        let pop = ClientPopulation::new(
            (0..3)
                .map(|id| Client { id, rank: 4, samples: 1 })
                .collect(),
        )
        .unwrap();
        let mut rng = Prng::new(123);
        let mut counts = [0usize; 3];
        let trials = 30_000;
        for _ in 0..trials {
            let ids = sample_round(&pop, 1, &mut rng).unwrap();
            counts[ids[0]] += 1;
        }
        for &c in &counts {
            let f = c as f64 / trials as f64;
            assert!((f - 1.0 / 3.0).abs() < 0.01, "freq {f}");
        }
    }

    #[test]
    fn sample_round_deterministic() {
        let pop = reference_pop();
        let a = sample_round(&pop, 10, &mut Prng::new(5)).unwrap();
        let b = sample_round(&pop, 10, &mut Prng::new(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sample_round_range_errors() {
        let pop = reference_pop();
        let mut rng = Prng::new(0);
        assert!(matches!(
            sample_round(&pop, 0, &mut rng),
            Err(Error::Sample(_))
        ));
        assert!(matches!(
            sample_round(&pop, 101, &mut rng),
            Err(Error::Sample(_))
        ));
    }

    #[test]
    fn h_factor_endpoints() {
        assert_eq!(h_factor(1.0, 100, 10).unwrap(), 1.0);
        assert_eq!(h_factor(0.0, 100, 10).unwrap(), 0.0);
    }

    #[test]
    fn h_factor_reference_value() {
        // 0.8^2 + (90 / (10 * 99)) * 0.8 * 0.2 = 0.64 + 0.16/11
        let h = h_factor(0.8, 100, 10).unwrap();
        assert!((h - (0.64 + 0.16 / 11.0)).abs() < 1e-15);
        assert!((h - 0.6545454545454545).abs() < 1e-12);
    }

    #[test]
    fn h_factor_domain_errors() {
        assert!(matches!(h_factor(-0.1, 10, 2), Err(Error::Domain(_))));
        assert!(matches!(h_factor(0.5, 10, 11), Err(Error::Domain(_))));
        assert!(matches!(h_factor(0.5, 1, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn h_factor_strictly_increasing_and_derivative_positive() {
        let (k, m) = (100usize, 10usize);
        let tau = (k - m) as f64 / (m as f64 * (k - 1) as f64);
        let mut prev = h_factor(0.0, k, m).unwrap();
        let steps = 1000;
        for i in 1..=steps {
            let p = i as f64 / steps as f64;
            let h = h_factor(p, k, m).unwrap();
            assert!(h > prev, "h not increasing at p={p}");
            // derivative form 2(1 - tau) p + tau > 0
            assert!(2.0 * (1.0 - tau) * p + tau > 0.0);
            prev = h;
        }
    }

    #[test]
    fn forecast_reference_config() {
        let pop = reference_pop();
        let f = forecast(&pop, 10, 1.0, &vec![1.0; 64]).unwrap();
        assert!((f.gamma - 0.6545454545454545).abs() < 1e-12);
        assert_eq!(f.c0, 7.0); // (64 - 8) / 8
        assert_eq!(f.shared_rank, 8);
        // q ordering: flat through r1, then strictly drops, then non-increasing
        for i in 0..8 {
            assert_eq!(f.q[i], f.q[0]);
        }
        assert!(f.q[8] < f.q[7]);
        for w in f.q.windows(2) {
            assert!(w[1] <= w[0] + 1e-15);
        }
    }

    #[test]
    fn forecast_full_participation_squares_coverage() {
        let pop = reference_pop();
        let f = forecast(&pop, 100, 1.0, &vec![1.0; 64]).unwrap();
        let cov = coverage(&pop);
        for (q, p) in f.q.iter().zip(cov.values()) {
            assert!((q - p * p).abs() < 1e-15);
        }
    }

    #[test]
    fn forecast_homogeneous_refused() {
        let cfg = RankConfig::uniform(vec![8]).unwrap();
        let pop = assign_ranks(&cfg, 10, 0).unwrap();
        assert!(matches!(
            forecast(&pop, 2, 1.0, &vec![1.0; 8]),
            Err(Error::NoHeterogeneity(_))
        ));
    }

    #[test]
    fn forecast_zero_shared_energy_refused() {
        let pop = reference_pop();
        let mut e0 = vec![1.0; 64];
        for e in e0[..8].iter_mut() {
            *e = 0.0;
        }
        assert!(matches!(
            forecast(&pop, 10, 1.0, &e0),
            Err(Error::Degenerate(_))
        ));
    }

    /// Hypergeometric moment oracle: empirical E[N] and E[(N/M)^2] from
    /// repeated sampling match M*p and h(p).
    #[test]
    fn hypergeometric_moments_match_h_factor() {
        let pop = reference_pop();
        let (k, m) = (100usize, 10usize);
        let mut rng = Prng::new(77);
        let trials = 100_000;
        // track direction indices with distinct coverage
        let dirs = [8usize, 9, 17, 33, 49];
        let mut sum_n = vec![0.0; dirs.len()];
        let mut sum_sq = vec![0.0; dirs.len()];
        for _ in 0..trials {
            let ids = sample_round(&pop, m, &mut rng).unwrap();
            for (d, &i) in dirs.iter().enumerate() {
                let n = ids.iter().filter(|&&id| pop.rank_of(id) >= i).count() as f64;
                sum_n[d] += n;
                sum_sq[d] += (n / m as f64) * (n / m as f64);
            }
        }
        let cov = coverage(&pop);
        for (d, &i) in dirs.iter().enumerate() {
            let p = cov.at(i);
            let mean_n = sum_n[d] / trials as f64;
            assert!(
                (mean_n - m as f64 * p).abs() <= 0.01 * (m as f64 * p),
                "mean N at i={i}: {mean_n}"
            );
            let emp_h = sum_sq[d] / trials as f64;
            let h = h_factor(p, k, m).unwrap();
            assert!((emp_h - h).abs() <= 0.01 * h, "E[(N/M)^2] at i={i}: {emp_h} vs {h}");
        }
    }
}
