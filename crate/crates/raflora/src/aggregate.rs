//! Heterogeneous-rank aggregation strategies on real factor matrices.
//!
//! Four server-side schemes are implemented:
//! - `flexlora`: sample-weighted average of the full-space products B_k A_k,
//! - `flora`: stacking of scaled factors (algebraically identical output,
//!   different wire protocol: the result is merged into a base and local
//!   factors are reinitialized each round),
//! - `hetlora`: zero-padding to the maximum rank and separate averaging of
//!   the B and A factors (biased: avg(B) avg(A) != avg(B A) in general),
//! - `raflora`: rank-partitioned aggregation, where each contiguous rank
//!   partition is averaged only over the clients whose rank reaches it.
//!
//! Plus the two server-side factor plumbing steps: prefix truncation for
//! broadcast and SVD reallocation of the aggregated update.

use crate::error::{Error, Result};
use crate::linalg::{matmul, svd_truncate, DenseMatrix};

/// One client's uploaded factor pair.
#[derive(Debug, Clone)]
pub struct LoraUpdate {
    pub client_id: usize,
    /// d x r_k
    pub b: DenseMatrix,
    /// r_k x n
    pub a: DenseMatrix,
    pub samples: usize,
}

impl LoraUpdate {
    pub fn new(client_id: usize, b: DenseMatrix, a: DenseMatrix, samples: usize) -> Result<Self> {
        if b.cols() != a.rows() {
            return Err(Error::Shape(format!(
                "factor inner dims {} vs {}",
                b.cols(),
                a.rows()
            )));
        }
        if samples == 0 {
            return Err(Error::Shape("samples must be positive".into()));
        }
        Ok(LoraUpdate {
            client_id,
            b,
            a,
            samples,
        })
    }

    pub fn rank(&self) -> usize {
        self.b.cols()
    }

    /// The full-space product B_k A_k.
    pub fn product(&self) -> Result<DenseMatrix> {
        matmul(&self.b, &self.a)
    }
}

/// Global factor pair at the server's maximal rank. Columns of `bg` carry the
/// singular values from the last reallocation (descending order).
#[derive(Debug, Clone)]
pub struct GlobalLora {
    pub bg: DenseMatrix,
    pub ag: DenseMatrix,
}

impl GlobalLora {
    pub fn new(bg: DenseMatrix, ag: DenseMatrix) -> Result<Self> {
        if bg.cols() != ag.rows() {
            return Err(Error::Shape("global factor inner dims disagree".into()));
        }
        Ok(GlobalLora { bg, ag })
    }

    pub fn max_rank(&self) -> usize {
        self.bg.cols()
    }

    pub fn product(&self) -> Result<DenseMatrix> {
        matmul(&self.bg, &self.ag)
    }

    /// sigma_i^2 read off the column norms of bg.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.bg.cols()).map(|j| self.bg.col_norm_sq(j)).collect()
    }
}

/// Contiguous, non-overlapping rank partitions induced by the ordered rank
/// levels: [1, r_1], [r_1+1, r_2], ..., [r_{L-1}+1, r_max] (1-based,
/// inclusive).
#[derive(Debug, Clone)]
pub struct PartitionPlan {
    boundaries: Vec<usize>,
    partitions: Vec<(usize, usize)>,
}

impl PartitionPlan {
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn partitions(&self) -> &[(usize, usize)] {
        &self.partitions
    }

    pub fn max_rank(&self) -> usize {
        *self.boundaries.last().unwrap()
    }

    pub fn shared_rank(&self) -> usize {
        self.boundaries[0]
    }

    pub fn is_boundary(&self, r: usize) -> bool {
        self.boundaries.binary_search(&r).is_ok()
    }
}

/// Builds the partition plan from strictly increasing rank levels.
pub fn make_partition_plan(levels: &[usize]) -> Result<PartitionPlan> {
    if levels.is_empty() {
        return Err(Error::Config("no rank levels".into()));
    }
    if levels[0] == 0 || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "rank levels must be strictly increasing positive".into(),
        ));
    }
    let mut partitions = Vec::with_capacity(levels.len());
    let mut prev = 0usize;
    for &h in levels {
        partitions.push((prev + 1, h));
        prev = h;
    }
    Ok(PartitionPlan {
        boundaries: levels.to_vec(),
        partitions,
    })
}

/// Prefix truncation of the global factors for a rank-r_k client:
/// (bg[:, 0..r_k], ag[0..r_k, :]), no rescaling.
pub fn broadcast_truncate(g: &GlobalLora, r_k: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    if r_k == 0 || r_k > g.max_rank() {
        return Err(Error::Rank(format!(
            "client rank {r_k} exceeds global rank {}",
            g.max_rank()
        )));
    }
    Ok((g.bg.slice_cols(r_k)?, g.ag.slice_rows(r_k)?))
}

fn check_round(updates: &[LoraUpdate]) -> Result<(usize, usize)> {
    let first = updates
        .first()
        .ok_or_else(|| Error::Shape("no updates to aggregate".into()))?;
    let (d, n) = (first.b.rows(), first.a.cols());
    for u in updates {
        if u.b.rows() != d || u.a.cols() != n {
            return Err(Error::Shape(format!(
                "client {} shape {}x{} differs from {d}x{n}",
                u.client_id,
                u.b.rows(),
                u.a.cols()
            )));
        }
    }
    Ok((d, n))
}

/// Client terms are always summed in ascending client_id order so the result
/// does not depend on the order of the update list.
fn by_client_id(updates: &[LoraUpdate]) -> Vec<&LoraUpdate> {
    let mut refs: Vec<&LoraUpdate> = updates.iter().collect();
    refs.sort_by_key(|u| u.client_id);
    refs
}

/// Sample-weighted average of the full-space products.
pub fn aggregate_flexlora(updates: &[LoraUpdate]) -> Result<DenseMatrix> {
    let (d, n) = check_round(updates)?;
    let total: f64 = updates.iter().map(|u| u.samples as f64).sum();
    let mut out = DenseMatrix::zeros(d, n);
    for u in by_client_id(updates) {
        out.add_scaled_in_place(&u.product()?, u.samples as f64 / total)?;
    }
    Ok(out)
}

/// Zero-pad every factor pair to `r_max`, average the B and A factors
/// separately, and return the product of the averages.
pub fn aggregate_hetlora(updates: &[LoraUpdate], r_max: usize) -> Result<DenseMatrix> {
    let (d, n) = check_round(updates)?;
    if updates.iter().any(|u| u.rank() > r_max) {
        return Err(Error::Rank("client rank exceeds r_max".into()));
    }
    let total: f64 = updates.iter().map(|u| u.samples as f64).sum();
    let mut b_bar = DenseMatrix::zeros(d, r_max);
    let mut a_bar = DenseMatrix::zeros(r_max, n);
    for u in by_client_id(updates) {
        let w = u.samples as f64 / total;
        let r = u.rank();
        for i in 0..d {
            for j in 0..r {
                b_bar.set(i, j, b_bar.get(i, j) + w * u.b.get(i, j));
            }
        }
        for i in 0..r {
            for j in 0..n {
                a_bar.set(i, j, a_bar.get(i, j) + w * u.a.get(i, j));
            }
        }
    }
    matmul(&b_bar, &a_bar)
}

/// Result of stacking-based aggregation: the aggregated update plus the
/// stacked width, which is the per-round upload size driver.
#[derive(Debug, Clone)]
pub struct FloraAggregate {
    pub delta: DenseMatrix,
    /// sum of client ranks = column count of the stacked B factor
    pub stacked_width: usize,
    /// the consumer must merge `delta` into its base weights and reinitialize
    /// local factors before the next round
    pub requires_reinit: bool,
}

/// Horizontally stack weight-scaled B factors and vertically stack A factors,
/// then multiply. Algebraically equal to [`aggregate_flexlora`].
pub fn aggregate_flora(updates: &[LoraUpdate]) -> Result<FloraAggregate> {
    let (d, n) = check_round(updates)?;
    let total: f64 = updates.iter().map(|u| u.samples as f64).sum();
    let refs = by_client_id(updates);
    let width: usize = refs.iter().map(|u| u.rank()).sum();
    let mut b_stack = DenseMatrix::zeros(d, width);
    let mut a_stack = DenseMatrix::zeros(width, n);
    let mut off = 0usize;
    for u in &refs {
        let w = u.samples as f64 / total;
        let r = u.rank();
        for i in 0..d {
            for j in 0..r {
                b_stack.set(i, off + j, w * u.b.get(i, j));
            }
        }
        for i in 0..r {
            for j in 0..n {
                a_stack.set(off + i, j, u.a.get(i, j));
            }
        }
        off += r;
    }
    Ok(FloraAggregate {
        delta: matmul(&b_stack, &a_stack)?,
        stacked_width: width,
        requires_reinit: true,
    })
}

/// Effective contributors and their normalized weights per partition.
///
/// Returned in boundary order; each entry lists (client_id, n_k / N_h) for
/// the clients with r_k >= h, empty when no sampled client reaches h.
pub fn partition_weights(
    updates: &[LoraUpdate],
    plan: &PartitionPlan,
) -> Result<Vec<Vec<(usize, f64)>>> {
    for u in updates {
        if !plan.is_boundary(u.rank()) {
            return Err(Error::RankMismatch(format!(
                "client {} rank {} is not a partition boundary",
                u.client_id,
                u.rank()
            )));
        }
    }
    let refs = by_client_id(updates);
    let mut out = Vec::with_capacity(plan.partitions().len());
    for &(_, h) in plan.partitions() {
        let contributors: Vec<&&LoraUpdate> = refs.iter().filter(|u| u.rank() >= h).collect();
        let total: f64 = contributors.iter().map(|u| u.samples as f64).sum();
        out.push(
            contributors
                .iter()
                .map(|u| (u.client_id, u.samples as f64 / total))
                .collect(),
        );
    }
    Ok(out)
}

/// Rank-partitioned aggregation: for each partition [l, h], average the
/// clients with r_k >= h over their l..h factor slices; partitions with no
/// sampled contributor contribute zero.
pub fn aggregate_raflora(updates: &[LoraUpdate], plan: &PartitionPlan) -> Result<DenseMatrix> {
    let (d, n) = check_round(updates)?;
    for u in updates {
        if !plan.is_boundary(u.rank()) {
            return Err(Error::RankMismatch(format!(
                "client {} rank {} is not a partition boundary",
                u.client_id,
                u.rank()
            )));
        }
    }
    let refs = by_client_id(updates);
    let mut out = DenseMatrix::zeros(d, n);
    for &(l, h) in plan.partitions() {
        let contributors: Vec<&&LoraUpdate> = refs.iter().filter(|u| u.rank() >= h).collect();
        if contributors.is_empty() {
            continue;
        }
        let total: f64 = contributors.iter().map(|u| u.samples as f64).sum();
        for u in contributors {
            let b_slice = u.b.col_range(l - 1, h)?;
            let a_slice = u.a.row_range(l - 1, h)?;
            out.add_scaled_in_place(&matmul(&b_slice, &a_slice)?, u.samples as f64 / total)?;
        }
    }
    Ok(out)
}

/// Which partitions of the plan have no contributor among the given ranks.
pub fn empty_partitions(sampled_ranks: &[usize], plan: &PartitionPlan) -> Vec<(usize, usize)> {
    plan.partitions()
        .iter()
        .filter(|&&(_, h)| !sampled_ranks.iter().any(|&r| r >= h))
        .copied()
        .collect()
}

/// Decomposes an aggregated update to rank r_max and rebuilds global factors:
/// bg columns are sigma_i * u_i, ag rows are v_i^T.
pub fn svd_reallocate(dw: &DenseMatrix, r_max: usize) -> Result<GlobalLora> {
    let svd = svd_truncate(dw, r_max)?;
    let mut bg = svd.u;
    let r = svd.s.len();
    for j in 0..r {
        for i in 0..bg.rows() {
            bg.set(i, j, bg.get(i, j) * svd.s[j]);
        }
    }
    GlobalLora::new(bg, svd.vt)
}
