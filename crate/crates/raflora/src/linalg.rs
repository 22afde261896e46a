//! Deterministic dense linear algebra.
//!
//! Everything here is a pure function on immutable inputs with a fixed
//! operation order, so bit-identical inputs give bit-identical outputs.
//! The SVD is a one-sided Jacobi (Hestenes) iteration, which is robust and
//! plenty fast for the desk-scale matrices this crate works with.

use crate::error::{Error, Result};

/// Row-major dense matrix of finite `f64` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!("empty dimensions {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite entry".into()));
        }
        Ok(DenseMatrix { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.values[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        DenseMatrix::new(r, c, rows.concat())
    }

    /// Rank-1 outer product `u v^T`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut m = DenseMatrix::zeros(u.len(), v.len());
        for (i, &ui) in u.iter().enumerate() {
            for (j, &vj) in v.iter().enumerate() {
                m.values[i * v.len() + j] = ui * vj;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.values[j * self.rows + i] = self.values[i * self.cols + j];
            }
        }
        t
    }

    pub fn scaled(&self, factor: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("add: mismatched shapes".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            values,
        })
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        self.add(&other.scaled(-1.0))
    }

    /// `self += factor * other`, shapes must match.
    pub fn add_scaled_in_place(&mut self, other: &DenseMatrix, factor: f64) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape("add_scaled: mismatched shapes".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(())
    }

    /// Leading column block `[:, 0..k]`.
    pub fn slice_cols(&self, k: usize) -> Result<DenseMatrix> {
        self.col_range(0, k)
    }

    /// Column block `[:, lo..hi]` (half-open, 0-based).
    pub fn col_range(&self, lo: usize, hi: usize) -> Result<DenseMatrix> {
        if lo >= hi || hi > self.cols {
            return Err(Error::Shape(format!("col range {lo}..{hi} of {}", self.cols)));
        }
        let w = hi - lo;
        let mut out = DenseMatrix::zeros(self.rows, w);
        for i in 0..self.rows {
            let src = i * self.cols + lo;
            let dst = i * w;
            out.values[dst..dst + w].copy_from_slice(&self.values[src..src + w]);
        }
        Ok(out)
    }

    /// Leading row block `[0..k, :]`.
    pub fn slice_rows(&self, k: usize) -> Result<DenseMatrix> {
        self.row_range(0, k)
    }

    /// Row block `[lo..hi, :]` (half-open, 0-based).
    pub fn row_range(&self, lo: usize, hi: usize) -> Result<DenseMatrix> {
        if lo >= hi || hi > self.rows {
            return Err(Error::Shape(format!("row range {lo}..{hi} of {}", self.rows)));
        }
        let h = hi - lo;
        DenseMatrix::new(
            h,
            self.cols,
            self.values[lo * self.cols..hi * self.cols].to_vec(),
        )
    }

    pub fn col_norm_sq(&self, j: usize) -> f64 {
        let mut s = 0.0;
        for i in 0..self.rows {
            let v = self.values[i * self.cols + j];
            s += v * v;
        }
        s
    }
}

/// Truncated SVD with the crate's ordering and sign conventions.
///
/// `u` holds left singular vectors as columns (d x r), `vt` right singular
/// vectors as rows (r x n). Singular values are non-negative and
/// non-increasing; for each column of `u` the largest-magnitude entry is
/// non-negative (first such entry on ties).
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub vt: DenseMatrix,
}

/// Standard matrix product.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = DenseMatrix::zeros(m, n);
    for i in 0..m {
        for p in 0..k {
            let aip = a.values[i * k + p];
            if aip == 0.0 {
                continue;
            }
            let brow = &b.values[p * n..(p + 1) * n];
            let orow = &mut out.values[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aip * brow[j];
            }
        }
    }
    Ok(out)
}

/// Sum of squared entries; equals the sum of squared singular values.
pub fn frobenius_sq(m: &DenseMatrix) -> f64 {
    m.values.iter().map(|v| v * v).sum()
}

/// Relative off-diagonal convergence threshold for the Jacobi sweeps.
const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;
/// Singular values at or below `sigma_max * RANK_TOL` are flushed to exact 0.
const RANK_TOL: f64 = 1e-12;

/// Top-r singular triplets of `m`.
///
/// When the algebraic rank k of `m` is below r, `s[k..r]` is exactly zero and
/// the matching `u` columns / `vt` rows are deterministic orthonormal
/// completions, so callers can always rely on full factor shapes.
pub fn svd_truncate(m: &DenseMatrix, r: usize) -> Result<SvdResult> {
    if r == 0 || r > m.rows.min(m.cols) {
        return Err(Error::Rank(format!(
            "rank {r} out of range for {}x{}",
            m.rows, m.cols
        )));
    }
    if m.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite input to svd".into()));
    }

    if m.rows >= m.cols {
        let (left, s, right) = jacobi_tall(m);
        assemble(m.rows, m.cols, left, s, right, r, false)
    } else {
        // svd(m) from svd(m^T): m = V' S U'^T
        let t = m.transpose();
        let (left, s, right) = jacobi_tall(&t);
        assemble(m.rows, m.cols, left, s, right, r, true)
    }
}

/// `u * diag(s) * vt`.
pub fn reconstruct(svd: &SvdResult) -> Result<DenseMatrix> {
    let r = svd.s.len();
    if svd.u.cols != r || svd.vt.rows != r {
        return Err(Error::Shape("svd component shapes disagree".into()));
    }
    let mut scaled = svd.u.clone();
    for j in 0..r {
        for i in 0..scaled.rows {
            scaled.values[i * r + j] *= svd.s[j];
        }
    }
    matmul(&scaled, &svd.vt)
}

/// One-sided Jacobi on a tall matrix (rows >= cols).
///
/// Returns (data columns after rotation, their norms unsorted, accumulated
/// right rotations as columns). The right factor is exactly orthonormal by
/// construction; data columns still need normalization/completion.
fn jacobi_tall(a: &DenseMatrix) -> (Vec<Vec<f64>>, Vec<f64>, Vec<Vec<f64>>) {
    let (d, n) = (a.rows, a.cols);
    let mut cols: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..d).map(|i| a.values[i * n + j]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut max_rel = 0.0f64;
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..d {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let rel = gamma.abs() / (alpha * beta).sqrt();
                if rel <= JACOBI_TOL {
                    continue;
                }
                max_rel = max_rel.max(rel);
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..d {
                    let (x, y) = (cols[p][i], cols[q][i]);
                    cols[p][i] = c * x - s * y;
                    cols[q][i] = s * x + c * y;
                }
                for i in 0..n {
                    let (x, y) = (v[p][i], v[q][i]);
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        if max_rel <= JACOBI_TOL {
            break;
        }
    }

    let sigmas: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    (cols, sigmas, v)
}

/// Orders triplets, normalizes/completes left vectors, applies the sign
/// convention, and truncates to rank r. `swapped` means the factorization was
/// computed on the transpose: the rotation accumulator then provides the left
/// vectors of the original matrix and the data columns its right vectors.
fn assemble(
    rows: usize,
    cols: usize,
    data_cols: Vec<Vec<f64>>,
    sigmas: Vec<f64>,
    rot_cols: Vec<Vec<f64>>,
    r: usize,
    swapped: bool,
) -> Result<SvdResult> {
    let k = sigmas.len();
    let sigma_max = sigmas.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = sigma_max * RANK_TOL;

    // normalized data-side vectors for nonzero sigmas (used for tie order too)
    let unit: Vec<Option<Vec<f64>>> = data_cols
        .iter()
        .zip(&sigmas)
        .map(|(c, &s)| {
            if s > cutoff && s > 0.0 {
                Some(c.iter().map(|x| x / s).collect())
            } else {
                None
            }
        })
        .collect();

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let sa = if unit[a].is_some() { sigmas[a] } else { 0.0 };
        let sb = if unit[b].is_some() { sigmas[b] } else { 0.0 };
        sb.partial_cmp(&sa)
            .unwrap()
            .then_with(|| match (&unit[a], &unit[b]) {
                // exact ties: lexicographic order of the sign-fixed vectors
                (Some(ua), Some(ub)) => {
                    let fa = sign_fixed(ua);
                    let fb = sign_fixed(ub);
                    fa.iter()
                        .zip(fb.iter())
                        .find_map(|(x, y)| x.partial_cmp(y).filter(|o| o.is_ne()))
                        .unwrap_or(std::cmp::Ordering::Equal)
                }
                _ => a.cmp(&b),
            })
    });

    // data-side vectors live in the tall dimension; rotation side in the short
    let tall_dim = if swapped { cols } else { rows };
    let short_dim = if swapped { rows } else { cols };

    let mut s_out = Vec::with_capacity(r);
    let mut data_vecs: Vec<Vec<f64>> = Vec::with_capacity(r); // length tall_dim
    let mut rot_vecs: Vec<Vec<f64>> = Vec::with_capacity(r); // length short_dim
    for idx in 0..r {
        let j = order[idx];
        match &unit[j] {
            Some(u) => {
                s_out.push(sigmas[j]);
                data_vecs.push(u.clone());
                rot_vecs.push(rot_cols[j].clone());
            }
            None => {
                s_out.push(0.0);
                data_vecs.push(complete_orthonormal(&data_vecs, tall_dim));
                rot_vecs.push(rot_cols[j].clone());
            }
        }
    }
    debug_assert!(rot_vecs.iter().all(|v| v.len() == short_dim));

    // in the original orientation: u columns / vt rows
    let (mut u_cols, mut vt_rows) = if swapped {
        (rot_vecs, data_vecs)
    } else {
        (data_vecs, rot_vecs)
    };

    // sign convention on u columns; vt row flips with it when sigma > 0
    for i in 0..r {
        if needs_flip(&u_cols[i]) {
            for x in u_cols[i].iter_mut() {
                *x = -*x;
            }
            if s_out[i] > 0.0 {
                for x in vt_rows[i].iter_mut() {
                    *x = -*x;
                }
            }
        }
    }

    let mut u = DenseMatrix::zeros(rows, r);
    for (j, col) in u_cols.iter().enumerate() {
        for i in 0..rows {
            u.values[i * r + j] = col[i];
        }
    }
    let vt = DenseMatrix::from_rows(&vt_rows)?;
    debug_assert_eq!(vt.cols, cols);
    Ok(SvdResult { u, s: s_out, vt })
}

fn needs_flip(col: &[f64]) -> bool {
    let mut best = 0usize;
    for (i, x) in col.iter().enumerate() {
        if x.abs() > col[best].abs() {
            best = i;
        }
    }
    col[best] < 0.0
}

fn sign_fixed(col: &[f64]) -> Vec<f64> {
    if needs_flip(col) {
        col.iter().map(|x| -x).collect()
    } else {
        col.to_vec()
    }
}

/// Deterministic orthonormal completion: first standard basis vector with a
/// large residual against `existing`, Gram-Schmidt'ed and normalized.
fn complete_orthonormal(existing: &[Vec<f64>], dim: usize) -> Vec<f64> {
    for seed in 0..dim {
        let mut v = vec![0.0; dim];
        v[seed] = 1.0;
        // two passes of classical Gram-Schmidt for numerical safety
        for _ in 0..2 {
            for e in existing {
                let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(e) {
                    *x -= dot * y;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.5 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            return v;
        }
    }
    unreachable!("orthonormal completion always exists while existing.len() < dim");
}
