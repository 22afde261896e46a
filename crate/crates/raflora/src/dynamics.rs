//! Idealized fixed-basis spectrum dynamics.
//!
//! Under a frozen singular basis, every aggregation round acts on the global
//! singular values alone. Uniform averaging multiplies direction i by
//! beta * N_i / M, where N_i counts the sampled clients whose rank reaches i;
//! rank-partitioned averaging preserves every partition that has at least one
//! sampled contributor and zeroes the rest. The closed-form energy recursion
//! e_i(t) = e_i(0) * q_i^t, the geometric bound C * gamma^t, and the
//! mean-field second-moment recursion live here as executable oracles.

use crate::aggregate::PartitionPlan;
use crate::error::{Error, Result};
use crate::population::{ClientPopulation, CollapseForecast};

/// Global singular values under the fixed-basis model.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumState {
    pub sigma: Vec<f64>,
    pub round: u64,
}

impl SpectrumState {
    pub fn new(sigma: Vec<f64>) -> Result<Self> {
        if sigma.iter().any(|&s| !s.is_finite() || s < 0.0) {
            return Err(Error::Numeric("sigma entries must be finite and >= 0".into()));
        }
        Ok(SpectrumState { sigma, round: 0 })
    }

    pub fn energies(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s * s).collect()
    }
}

/// Fraction of total energy in the first r directions.
pub fn energy_ratio(e: &[f64], r: usize) -> Result<f64> {
    if r == 0 || r > e.len() {
        return Err(Error::Rank(format!("r = {r} out of 1..={}", e.len())));
    }
    let total: f64 = e.iter().sum();
    if total <= 0.0 {
        return Err(Error::Degenerate("zero total energy".into()));
    }
    Ok(e[..r].iter().sum::<f64>() / total)
}

/// One round of uniform averaging: sigma_i *= beta * N_i / M.
pub fn step_fedavg_idealized(
    state: &SpectrumState,
    sampled: &[usize],
    pop: &ClientPopulation,
    beta: f64,
) -> Result<SpectrumState> {
    if sampled.is_empty() {
        return Err(Error::Sample("empty sampled set".into()));
    }
    let m = sampled.len() as f64;
    let rmax = state.sigma.len();
    // N_i via a histogram of sampled ranks and a suffix sum
    let mut hist = vec![0usize; rmax + 2];
    for &id in sampled {
        let r = pop.rank_of(id).min(rmax);
        hist[r] += 1;
    }
    let mut support = vec![0usize; rmax + 1];
    let mut acc = 0usize;
    for i in (1..=rmax).rev() {
        acc += hist[i];
        support[i] = acc;
    }
    let sigma = state
        .sigma
        .iter()
        .enumerate()
        .map(|(idx, &s)| beta * (support[idx + 1] as f64 / m) * s)
        .collect();
    Ok(SpectrumState {
        sigma,
        round: state.round + 1,
    })
}

/// One round of rank-partitioned averaging: a partition [l, h] keeps
/// beta * sigma_i when some sampled client has r_k >= h, and drops to zero
/// otherwise (only received partitions enter the aggregate).
pub fn step_raflora_idealized(
    state: &SpectrumState,
    sampled: &[usize],
    pop: &ClientPopulation,
    plan: &PartitionPlan,
    beta: f64,
) -> Result<SpectrumState> {
    if sampled.is_empty() {
        return Err(Error::Sample("empty sampled set".into()));
    }
    let mut sigma = state.sigma.clone();
    for &(l, h) in plan.partitions() {
        let populated = sampled.iter().any(|&id| pop.rank_of(id) >= h);
        let hi = h.min(sigma.len());
        for s in sigma[l - 1..hi].iter_mut() {
            *s = if populated { beta * *s } else { 0.0 };
        }
    }
    Ok(SpectrumState {
        sigma,
        round: state.round + 1,
    })
}

/// Expected energies after t rounds: e_i(0) * q_i^t.
pub fn closed_form_energy(e0: &[f64], forecast: &CollapseForecast, t: u64) -> Vec<f64> {
    e0.iter()
        .zip(&forecast.q)
        .map(|(&e, &q)| e * q.powi(t as i32))
        .collect()
}

/// Geometric upper bound on the higher-rank energy share: C * gamma^t.
pub fn theorem_bound(forecast: &CollapseForecast, t: u64) -> f64 {
    forecast.c0 * forecast.gamma.powi(t as i32)
}

/// Contraction/residual parameters of the mean-field second-moment recursion
/// b_i(t+1) = q'_i b_i(t) + delta_i^2.
#[derive(Debug, Clone)]
pub struct MeanFieldParams {
    pub qprime: Vec<f64>,
    pub delta_sq: Vec<f64>,
}

impl MeanFieldParams {
    pub fn new(qprime: Vec<f64>, delta_sq: Vec<f64>) -> Result<Self> {
        if qprime.len() != delta_sq.len() {
            return Err(Error::Config("qprime/delta_sq length mismatch".into()));
        }
        if delta_sq.iter().any(|&d| d < 0.0) || qprime.iter().any(|&q| q < 0.0) {
            return Err(Error::Domain("mean-field parameters must be >= 0".into()));
        }
        Ok(MeanFieldParams { qprime, delta_sq })
    }
}

/// Iterated upper bounds and, where q' < 1, the fixed-point floors
/// delta^2 / (1 - q').
#[derive(Debug, Clone)]
pub struct MeanFieldBound {
    /// per_round[t][i] is the bound on direction i's expected energy after t
    /// rounds; per_round[0] == e0.
    pub per_round: Vec<Vec<f64>>,
    /// None where q'_i >= 1 (no finite floor).
    pub floors: Vec<Option<f64>>,
}

pub fn mean_field_bound(e0: &[f64], params: &MeanFieldParams, t_max: u64) -> Result<MeanFieldBound> {
    if e0.len() != params.qprime.len() {
        return Err(Error::Config("e0 length != parameter length".into()));
    }
    let mut per_round = Vec::with_capacity(t_max as usize + 1);
    per_round.push(e0.to_vec());
    let mut cur = e0.to_vec();
    for _ in 0..t_max {
        for (i, b) in cur.iter_mut().enumerate() {
            *b = params.qprime[i] * *b + params.delta_sq[i];
        }
        per_round.push(cur.clone());
    }
    let floors = params
        .qprime
        .iter()
        .zip(&params.delta_sq)
        .map(|(&q, &d)| if q < 1.0 { Some(d / (1.0 - q)) } else { None })
        .collect();
    Ok(MeanFieldBound { per_round, floors })
}

/// One per-round record of the spectrum's energy bookkeeping.
#[derive(Debug, Clone)]
pub struct EnergyRow {
    pub round: u64,
    pub e: Vec<f64>,
    /// cumulative energy at each configured boundary
    pub cumulative: Vec<f64>,
    /// energy ratio at each configured boundary (zeros when total is zero)
    pub ratio: Vec<f64>,
    pub higher_rank_share: f64,
}

/// Per-round energy records at the partition boundaries of interest.
#[derive(Debug, Clone)]
pub struct EnergyTrace {
    boundaries: Vec<usize>,
    shared_rank: usize,
    pub rows: Vec<EnergyRow>,
}

impl EnergyTrace {
    pub fn new(boundaries: Vec<usize>) -> Result<Self> {
        if boundaries.is_empty() || boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("boundaries must be strictly increasing".into()));
        }
        Ok(EnergyTrace {
            shared_rank: boundaries[0],
            boundaries,
            rows: Vec::new(),
        })
    }

    pub fn record(&mut self, round: u64, e: &[f64]) -> Result<()> {
        if e.len() < *self.boundaries.last().unwrap() {
            return Err(Error::Config("energy vector shorter than max boundary".into()));
        }
        let total: f64 = e.iter().sum();
        let cumulative: Vec<f64> = self
            .boundaries
            .iter()
            .map(|&r| e[..r].iter().sum())
            .collect();
        let ratio: Vec<f64> = if total > 0.0 {
            cumulative.iter().map(|&c| c / total).collect()
        } else {
            vec![0.0; cumulative.len()]
        };
        let higher_rank_share = if total > 0.0 { 1.0 - ratio[0] } else { 0.0 };
        self.rows.push(EnergyRow {
            round,
            e: e.to_vec(),
            cumulative,
            ratio,
            higher_rank_share,
        });
        Ok(())
    }

    pub fn shared_rank(&self) -> usize {
        self.shared_rank
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }
}
