//! Algebraic cross-check: sample integer realizations of a pattern, build
//! the Kalman controllability matrix and compute its exact rank.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pattern_graph::{InputSet, PatternEntry, PatternGraph};
use crate::zero_forcing::is_zfs;

/// Largest graph accepted by [`kalman_check`].
pub const MAX_KALMAN_NODES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("value range [{lo}, {hi}] cannot supply nonzero draws")]
    DegenerateRange { lo: i64, hi: i64 },
    #[error("{n} nodes exceeds the exact-arithmetic guard of {max}")]
    TooLarge { n: usize, max: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Graph(#[from] crate::pattern_graph::GraphError),
}

/// Dense integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        IntMatrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().map(|&x| BigInt::from(x)).collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &BigInt {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: impl Into<BigInt>) {
        self.data[r * self.cols + c] = v.into();
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix, VerifyError> {
        if self.cols != other.rows {
            return Err(VerifyError::Shape(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    fn to_i128(&self) -> Option<Vec<i128>> {
        self.data.iter().map(i128::try_from).map(Result::ok).collect()
    }
}

/// `B` with one unit column per input node, in input order.
pub fn build_b(inputs: &InputSet, n: usize) -> IntMatrix {
    let mut b = IntMatrix::zeros(n, inputs.len());
    for (j, &v) in inputs.nodes().iter().enumerate() {
        b.set(v, j, 1);
    }
    b
}

/// Inclusive integer range for sampled weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValueRange {
    pub lo: i64,
    pub hi: i64,
}

impl Default for ValueRange {
    fn default() -> Self {
        ValueRange { lo: -5, hi: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub a: IntMatrix,
    pub b: IntMatrix,
}

/// Draws an admissible realization: zero where the pattern is `0`, a
/// nonzero value from `range` where it is `*`, any value from
/// `range ∪ {0}` where it is `?`.
pub fn sample_realization(
    g: &PatternGraph,
    inputs: &InputSet,
    seed: u64,
    range: ValueRange,
) -> Result<Realization, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(g, inputs, &mut rng, range)
}

fn sample_with(
    g: &PatternGraph,
    inputs: &InputSet,
    rng: &mut ChaCha8Rng,
    range: ValueRange,
) -> Result<Realization, VerifyError> {
    let ValueRange { lo, hi } = range;
    if lo > hi || (lo == 0 && hi == 0) {
        return Err(VerifyError::DegenerateRange { lo, hi });
    }
    g.check_inputs(inputs)?;
    let n = g.node_count();
    let mut a = IntMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let v = match g.entry(r, c) {
                PatternEntry::Zero => 0,
                PatternEntry::Nonzero => loop {
                    let x = rng.random_range(lo..=hi);
                    if x != 0 {
                        break x;
                    }
                },
                PatternEntry::Arbitrary => {
                    if lo <= 0 && 0 <= hi {
                        rng.random_range(lo..=hi)
                    } else {
                        // Zero joins the range as one extra outcome.
                        let span = (hi - lo + 1) as u64;
                        match rng.random_range(0..=span) {
                            k if k == span => 0,
                            k => lo + k as i64,
                        }
                    }
                }
            };
            a.set(r, c, v);
        }
    }
    Ok(Realization {
        a,
        b: build_b(inputs, n),
    })
}

/// `[B, AB, A^2 B, ..., A^{n-1} B]`.
pub fn controllability_matrix(a: &IntMatrix, b: &IntMatrix) -> Result<IntMatrix, VerifyError> {
    let n = a.rows;
    if a.cols != n || b.rows != n {
        return Err(VerifyError::Shape(format!(
            "A is {}x{}, B is {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let m = b.cols;
    let mut out = IntMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        for r in 0..n {
            for c in 0..m {
                out.data[r * n * m + k * m + c] = block.get(r, c).clone();
            }
        }
        if k + 1 < n {
            block = a.mul(&block)?;
        }
    }
    Ok(out)
}

/// Exact rank by fraction-free (Bareiss) elimination. Runs in `i128` with
/// checked arithmetic and restarts over big integers on overflow.
pub fn rank_exact(m: &IntMatrix) -> usize {
    if let Some(small) = m.to_i128() {
        if let Some(r) = bareiss_rank_i128(small, m.rows, m.cols) {
            return r;
        }
    }
    bareiss_rank_big(m.data.clone(), m.rows, m.cols)
}

fn bareiss_rank_i128(mut a: Vec<i128>, rows: usize, cols: usize) -> Option<usize> {
    let mut prev: i128 = 1;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| a[r * cols + col] != 0) else {
            continue;
        };
        if p != rank {
            for c in 0..cols {
                a.swap(p * cols + c, rank * cols + c);
            }
        }
        let pivot = a[rank * cols + col];
        for r in rank + 1..rows {
            let lead = a[r * cols + col];
            for c in col + 1..cols {
                let v = pivot
                    .checked_mul(a[r * cols + c])?
                    .checked_sub(lead.checked_mul(a[rank * cols + c])?)?;
                a[r * cols + c] = v / prev;
            }
            a[r * cols + col] = 0;
        }
        prev = pivot;
        rank += 1;
    }
    Some(rank)
}

fn bareiss_rank_big(mut a: Vec<BigInt>, rows: usize, cols: usize) -> usize {
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !a[r * cols + col].is_zero()) else {
            continue;
        };
        if p != rank {
            for c in 0..cols {
                a.swap(p * cols + c, rank * cols + c);
            }
        }
        let pivot = a[rank * cols + col].clone();
        for r in rank + 1..rows {
            let lead = a[r * cols + col].clone();
            for c in col + 1..cols {
                let v = &pivot * &a[r * cols + c] - &lead * &a[rank * cols + c];
                a[r * cols + c] = v / &prev;
            }
            a[r * cols + col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankReport {
    pub trials: usize,
    pub full_rank_count: usize,
    pub min_rank: usize,
    /// Graph-theoretic verdict: `inputs` is a zero forcing set.
    pub zfs: bool,
}

impl RankReport {
    pub const CSV_HEADER: &'static str = "graph_id,inputs,zfs,trials,full_rank_count,min_rank";

    pub fn csv_row(&self, graph_id: &str, inputs: &InputSet) -> String {
        format!(
            "{},{},{},{},{},{}",
            graph_id,
            inputs.joined(),
            self.zfs,
            self.trials,
            self.full_rank_count,
            self.min_rank
        )
    }
}

/// Samples `trials` realizations and counts how many satisfy the Kalman
/// rank condition. Trial `t` draws from stream `t` of the seeded generator.
pub fn kalman_check(
    g: &PatternGraph,
    inputs: &InputSet,
    trials: usize,
    seed: u64,
    range: ValueRange,
) -> Result<RankReport, VerifyError> {
    let n = g.node_count();
    if n > MAX_KALMAN_NODES {
        return Err(VerifyError::TooLarge {
            n,
            max: MAX_KALMAN_NODES,
        });
    }
    g.check_inputs(inputs)?;
    let mut full = 0;
    let mut min_rank = n;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t as u64);
        let real = sample_with(g, inputs, &mut rng, range)?;
        let c = controllability_matrix(&real.a, &real.b)?;
        let r = rank_exact(&c);
        if r == n {
            full += 1;
        }
        min_rank = min_rank.min(r);
    }
    Ok(RankReport {
        trials,
        full_rank_count: full,
        min_rank,
        zfs: is_zfs(g, inputs),
    })
}
