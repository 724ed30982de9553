//! Sparse storage for symmetric operators and plain row-compressed matrices.
//!
//! [`SparseSym`] keeps only the lower triangle (diagonal included) in
//! compressed-row layout. Every stored off-diagonal value is used for both
//! `a[i][j]` and `a[j][i]` when applying the operator, so symmetry is
//! structural rather than numerical.

use std::collections::BTreeMap;

use super::EigError;

/// A symmetric linear operator that can be handed to the eigensolver.
pub trait SymOperator {
    fn order(&self) -> usize;

    /// `y = A x`. `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Vec<f64>;
}

/// Symmetric sparse matrix, lower triangle in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    order: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSym {
    /// Build from raw lower-triangle CSR arrays, validating the layout.
    pub fn from_lower_csr(
        order: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, EigError> {
        if row_ptr.len() != order + 1 || row_ptr[0] != 0 {
            return Err(EigError::InvalidStructure("row offsets length or origin".into()));
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return Err(EigError::InvalidStructure("offset/index/value length mismatch".into()));
        }
        for i in 0..order {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            if lo > hi {
                return Err(EigError::InvalidStructure(format!("row {i}: decreasing offsets")));
            }
            let cols = &col_idx[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EigError::InvalidStructure(format!("row {i}: columns not sorted")));
            }
            if cols.last().is_some_and(|&c| c > i) {
                return Err(EigError::InvalidStructure(format!(
                    "row {i}: entry above the diagonal"
                )));
            }
        }
        Ok(Self { order, row_ptr, col_idx, values })
    }

    /// Build from a full (both triangles) triplet list. Duplicates are
    /// summed; the result must be exactly symmetric.
    pub fn from_full_triplets(
        order: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, EigError> {
        let mut full: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in triplets {
            if i >= order || j >= order {
                return Err(EigError::InvalidStructure(format!("entry ({i},{j}) out of range")));
            }
            *full.entry((i, j)).or_insert(0.0) += v;
        }
        for (&(i, j), &v) in &full {
            if i > j {
                let mirror = full.get(&(j, i)).copied().unwrap_or(0.0);
                if mirror != v {
                    return Err(EigError::Asymmetric { row: i, col: j });
                }
            } else if i < j && !full.contains_key(&(j, i)) && v != 0.0 {
                return Err(EigError::Asymmetric { row: j, col: i });
            }
        }
        let mut b = SymBuilder::new(order);
        for (&(i, j), &v) in &full {
            if i >= j {
                b.add(i, j, v);
            }
        }
        Ok(b.build())
    }

    pub fn identity(order: usize) -> Self {
        Self {
            order,
            row_ptr: (0..=order).collect(),
            col_idx: (0..order).collect(),
            values: vec![1.0; order],
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored (lower-triangle) entries.
    pub fn nnz_lower(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Stored lower-triangle entries of row `i` as `(col, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// Row-major dense copy. Intended for small matrices only.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.order;
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        d
    }

    /// Every entry of the full symmetric matrix as `(row, col, value)`.
    pub fn full_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(2 * self.values.len());
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                out.push((i, j, v));
                if i != j {
                    out.push((j, i, v));
                }
            }
        }
        out
    }

    /// `self + c I`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut b = SymBuilder::new(self.order);
        for i in 0..self.order {
            for (j, v) in self.row(i) {
                b.add(i, j, v);
            }
            b.add(i, i, c);
        }
        b.build()
    }

    /// Largest absolute entry of `self - other`; `None` when orders differ.
    pub fn max_abs_diff(&self, other: &SparseSym) -> Option<f64> {
        if self.order != other.order {
            return None;
        }
        let mut worst = 0.0f64;
        for i in 0..self.order {
            let mut a = self.row(i).peekable();
            let mut b = other.row(i).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((ja, va)), Some((jb, vb))) if ja == jb => {
                        worst = worst.max((va - vb).abs());
                        a.next();
                        b.next();
                    }
                    (Some((ja, va)), Some((jb, _))) if ja < jb => {
                        worst = worst.max(va.abs());
                        a.next();
                    }
                    (Some((_, va)), None) => {
                        worst = worst.max(va.abs());
                        a.next();
                    }
                    (_, Some((_, vb))) => {
                        worst = worst.max(vb.abs());
                        b.next();
                    }
                }
            }
        }
        Some(worst)
    }
}

impl SymOperator for SparseSym {
    fn order(&self) -> usize {
        self.order
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.order);
        assert_eq!(y.len(), self.order);
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.order {
            let xi = x[i];
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                let a = self.values[p];
                if j == i {
                    acc += a * xi;
                } else {
                    acc += a * x[j];
                    y[j] += a * xi;
                }
            }
            y[i] += acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.order)
            .map(|i| {
                let hi = self.row_ptr[i + 1];
                if hi > self.row_ptr[i] && self.col_idx[hi - 1] == i {
                    self.values[hi - 1]
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Accumulates lower-triangle entries (either triangle may be passed; upper
/// entries are mirrored) and produces a [`SparseSym`].
#[derive(Debug, Clone)]
pub struct SymBuilder {
    order: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SymBuilder {
    pub fn new(order: usize) -> Self {
        Self { order, rows: vec![BTreeMap::new(); order] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        *self.rows[i].entry(j).or_insert(0.0) += v;
    }

    pub fn build(self) -> SparseSym {
        let mut row_ptr = Vec::with_capacity(self.order + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (j, v) in row {
                col_idx.push(j);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseSym { order: self.order, row_ptr, col_idx, values }
    }
}

/// General (not necessarily symmetric) CSR matrix with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row `(col, value)` lists. Duplicate columns are summed
    /// and exact zeros are dropped.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(usize, f64)>>) -> Self {
        let nrows = rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut merged: BTreeMap<usize, f64> = BTreeMap::new();
            for (j, v) in row {
                assert!(j < ncols, "column {j} out of range");
                *merged.entry(j).or_insert(0.0) += v;
            }
            for (j, v) in merged {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    /// `y = M x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[p] * x[self.col_idx[p]];
            }
            *yi = acc;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut rows = vec![Vec::new(); self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        Self::from_rows(self.nrows, rows)
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, rhs.nrows);
        let rows = (0..self.nrows)
            .map(|i| {
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                for (k, a) in self.row(i) {
                    for (j, b) in rhs.row(k) {
                        *acc.entry(j).or_insert(0.0) += a * b;
                    }
                }
                acc.into_iter().collect()
            })
            .collect();
        Self::from_rows(rhs.ncols, rows)
    }

    /// Lower triangle of a square matrix as a [`SparseSym`], asserting exact
    /// symmetry first.
    pub fn to_sym(&self) -> Result<SparseSym, EigError> {
        assert_eq!(self.nrows, self.ncols);
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                triplets.push((i, j, v));
            }
        }
        SparseSym::from_full_triplets(self.nrows, &triplets)
    }
}
