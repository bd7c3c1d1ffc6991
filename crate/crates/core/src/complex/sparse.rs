//! Coordinate-format sparse operators between cochain spaces.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

/// A linear map from rank-`source_rank` cochains to rank-`target_rank`
/// cochains, stored as row-major sorted `(row, col, value)` triples.
///
/// Rows index target cells, columns index source cells. Entries are unique
/// per coordinate and explicit zeros are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    source_rank: usize,
    target_rank: usize,
    signed: bool,
}

impl SparseOperator {
    /// Builds an operator from unsorted triples. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        source_rank: usize,
        target_rank: usize,
        signed: bool,
    ) -> Result<Self> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::shape(
                    "sparse operator",
                    format!("entry ({r}, {c}) outside {rows}x{cols}"),
                ));
            }
            *acc.entry((r, c)).or_insert(0.0) += v;
        }
        let entries = acc.into_iter().filter(|&(_, v)| v != 0.0).map(|((r, c), v)| (r, c, v)).collect();
        Ok(Self { rows, cols, entries, source_rank, target_rank, signed })
    }

    /// Assumes `entries` is already sorted, unique and in range.
    pub(crate) fn from_sorted(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
        source_rank: usize,
        target_rank: usize,
        signed: bool,
    ) -> Self {
        debug_assert!(entries.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
        debug_assert!(entries.iter().all(|&(r, c, _)| r < rows && c < cols));
        Self { rows, cols, entries, source_rank, target_rank, signed }
    }

    pub fn identity(n: usize, rank: usize) -> Self {
        Self::from_sorted(n, n, (0..n).map(|i| (i, i, 1.0)).collect(), rank, rank, false)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn source_rank(&self) -> usize {
        self.source_rank
    }

    pub fn target_rank(&self) -> usize {
        self.target_rank
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or(0.0)
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(r, c, v)| (c, r, v)).collect();
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        Self::from_sorted(self.cols, self.rows, entries, self.target_rank, self.source_rank, self.signed)
    }

    /// Elementwise absolute value.
    pub fn abs(&self) -> Self {
        let entries = self.entries.iter().map(|&(r, c, v)| (r, c, v.abs())).collect();
        Self::from_sorted(self.rows, self.cols, entries, self.source_rank, self.target_rank, false)
    }

    /// Number of stored entries in each row.
    pub fn row_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.rows];
        for &(r, _, _) in &self.entries {
            counts[r] += 1;
        }
        counts
    }

    /// Divides every row by its number of stored entries. Empty rows stay empty.
    pub fn row_normalized(&self) -> Self {
        let counts = self.row_counts();
        let entries = self.entries.iter().map(|&(r, c, v)| (r, c, v / counts[r] as f64)).collect();
        Self::from_sorted(self.rows, self.cols, entries, self.source_rank, self.target_rank, self.signed)
    }

    /// Sparse product `self * rhs`.
    pub fn compose(&self, rhs: &SparseOperator) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::shape(
                "sparse compose",
                format!("{}x{} * {}x{}", self.rows, self.cols, rhs.rows, rhs.cols),
            ));
        }
        let rhs_ptr = rhs.row_ptr();
        let mut out = Vec::new();
        let mut row_acc: BTreeMap<usize, f64> = BTreeMap::new();
        let mut i = 0;
        while i < self.entries.len() {
            let row = self.entries[i].0;
            row_acc.clear();
            while i < self.entries.len() && self.entries[i].0 == row {
                let (_, k, a) = self.entries[i];
                for &(_, c, b) in &rhs.entries[rhs_ptr[k]..rhs_ptr[k + 1]] {
                    *row_acc.entry(c).or_insert(0.0) += a * b;
                }
                i += 1;
            }
            out.extend(row_acc.iter().filter(|(_, v)| **v != 0.0).map(|(&c, &v)| (row, c, v)));
        }
        Ok(Self::from_sorted(
            self.rows,
            rhs.cols,
            out,
            rhs.source_rank,
            self.target_rank,
            self.signed || rhs.signed,
        ))
    }

    /// Off-diagonal support of the operator as a 0/1 matrix.
    pub fn off_diagonal_support(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .filter(|&&(r, c, _)| r != c)
            .map(|&(r, c, _)| (r, c, 1.0))
            .collect();
        Self::from_sorted(self.rows, self.cols, entries, self.source_rank, self.target_rank, false)
    }

    /// Block-diagonal assembly. All blocks must agree on ranks and sign flag;
    /// the result takes its metadata from the first block.
    pub fn block_diagonal(blocks: &[SparseOperator]) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::shape("block diagonal", "no blocks"));
        };
        let (mut rows, mut cols) = (0, 0);
        let mut entries = Vec::with_capacity(blocks.iter().map(|b| b.nnz()).sum());
        for b in blocks {
            if b.source_rank != first.source_rank || b.target_rank != first.target_rank {
                return Err(Error::shape("block diagonal", "blocks map between different ranks"));
            }
            entries.extend(b.entries.iter().map(|&(r, c, v)| (r + rows, c + cols, v)));
            rows += b.rows;
            cols += b.cols;
        }
        Ok(Self::from_sorted(rows, cols, entries, first.source_rank, first.target_rank, first.signed))
    }

    /// Relabels rows and columns: entry `(r, c)` moves to `(row_perm[r], col_perm[c])`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Self {
        let mut entries: Vec<_> =
            self.entries.iter().map(|&(r, c, v)| (row_perm[r], col_perm[c], v)).collect();
        entries.sort_unstable_by_key(|e| (e.0, e.1));
        Self::from_sorted(self.rows, self.cols, entries, self.source_rank, self.target_rank, self.signed)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.2 == 0.0)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m.set(r, c, v);
        }
        m
    }

    /// Start offset of every row in `entries`, length `rows + 1`.
    pub fn row_ptr(&self) -> Vec<usize> {
        let mut ptr = vec![0; self.rows + 1];
        for &(r, _, _) in &self.entries {
            ptr[r + 1] += 1;
        }
        for i in 0..self.rows {
            ptr[i + 1] += ptr[i];
        }
        ptr
    }

    /// Copy with new rank metadata.
    pub(crate) fn with_ranks(mut self, source_rank: usize, target_rank: usize) -> Self {
        self.source_rank = source_rank;
        self.target_rank = target_rank;
        self
    }
}
