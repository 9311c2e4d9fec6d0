//! Sparse complex operators and state vectors over a [`SystemBasis`](crate::basis::SystemBasis).
//!
//! Operators are stored in compressed-row form. Products with vectors are
//! plain sums over stored entries, so they are exact up to floating-point
//! rounding of the individual multiply-adds.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{config_err, Result};

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Square complex matrix in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        OperatorMatrix { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &d)| (i, i, Complex64::new(d, 0.0))))
    }

    /// Assembles from `(row, col, value)` entries; duplicates are summed and
    /// entries that sum to exactly zero are dropped.
    pub fn from_triplets<It>(dim: usize, entries: It) -> Self
    where
        It: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut t: Vec<(usize, usize, Complex64)> = entries.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, c, v) in t {
            assert!(r < dim && c < dim, "entry ({r},{c}) outside dimension {dim}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == c {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(c);
            vals.push(v);
        }
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v != ZERO {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        OperatorMatrix { dim, row_ptr, cols: keep_cols, vals: keep_vals }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_zero(&self) -> bool {
        self.vals.is_empty()
    }

    /// Entries of one row as `(col, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => ZERO,
        }
    }

    /// `out = self * x`.
    pub fn apply_into(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn apply(&self, x: &StateVector) -> StateVector {
        let mut out = StateVector::zeros(self.dim);
        self.apply_into(&x.0, &mut out.0);
        out
    }

    /// `<x| self |y>`.
    pub fn matrix_element(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        let mut acc = ZERO;
        for (r, xr) in x.iter().enumerate() {
            if *xr == ZERO {
                continue;
            }
            let mut row = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                row += self.vals[k] * y[self.cols[k]];
            }
            acc += xr.conj() * row;
        }
        acc
    }

    pub fn expectation(&self, x: &StateVector) -> Complex64 {
        self.matrix_element(&x.0, &x.0)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= s);
        out.drop_zeros()
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    fn drop_zeros(self) -> Self {
        if self.vals.iter().any(|v| *v == ZERO) {
            Self::from_triplets(self.dim, self.triplets().collect::<Vec<_>>())
        } else {
            self
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(self.dim, self.triplets().chain(other.triplets())))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::from_triplets(self.dim, self.triplets().chain(other.triplets().map(|(r, c, v)| (r, c, -v)))))
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let mut entries = Vec::new();
        let mut acc = vec![ZERO; self.dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut flag = vec![false; self.dim];
        for r in 0..self.dim {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    if !flag[c] {
                        flag[c] = true;
                        touched.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            for &c in &touched {
                entries.push((r, c, acc[c]));
                acc[c] = ZERO;
                flag[c] = false;
            }
            touched.clear();
        }
        Ok(Self::from_triplets(self.dim, entries))
    }

    /// `[self, other]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from another operator.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.sub(other).map(|d| d.max_abs()).unwrap_or(f64::INFINITY)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.max_abs_diff(&self.adjoint()) <= rel_tol * scale
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(r, c, _)| r == c)
    }

    /// Diagonal entries (zero where not stored).
    pub fn diagonal_values(&self) -> Vec<Complex64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut d = vec![ZERO; self.dim * self.dim];
        for (r, c, v) in self.triplets() {
            d[r * self.dim + c] = v;
        }
        d
    }

    /// Restriction to the rows and columns listed in `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            local[i] = k;
        }
        let entries = indices.iter().enumerate().flat_map(|(lr, &r)| {
            let local = &local;
            self.row(r).filter_map(move |(c, v)| (local[c] != usize::MAX).then_some((lr, local[c], v)))
        });
        Self::from_triplets(indices.len(), entries.collect::<Vec<_>>())
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(config_err!("operator dimensions differ: {} vs {}", self.dim, other.dim));
        }
        Ok(())
    }
}

/// Complex amplitude vector; may be unnormalized during non-Hermitian evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(pub Vec<Complex64>);

impl StateVector {
    pub fn zeros(dim: usize) -> Self {
        StateVector(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sqr())
    }

    /// Scales to unit norm; returns the norm before scaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.0.iter_mut().for_each(|z| *z *= inv);
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.0.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

impl Index<usize> for StateVector {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = OperatorMatrix::from_triplets(2, [(0, 1, c(1.0, 0.0)), (0, 1, c(-1.0, 0.0)), (1, 0, c(0.0, 2.0))]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(1, 0), c(0.0, 2.0));
        assert_eq!(m.get(0, 1), ZERO);
    }

    #[test]
    fn product_and_adjoint() {
        let a = OperatorMatrix::from_triplets(2, [(0, 1, c(1.0, 1.0))]);
        let ad = a.adjoint();
        assert_eq!(ad.get(1, 0), c(1.0, -1.0));
        let p = ad.mul(&a).unwrap();
        assert_eq!(p.get(1, 1), c(2.0, 0.0));
        assert!(p.is_hermitian(1e-15));
        assert!(p.is_diagonal());
        let comm = a.commutator(&ad).unwrap();
        assert_eq!(comm.get(0, 0), c(2.0, 0.0));
        assert_eq!(comm.get(1, 1), c(-2.0, 0.0));
    }

    #[test]
    fn restriction_keeps_order() {
        let m = OperatorMatrix::from_triplets(3, [(0, 2, ONE), (2, 0, I), (1, 1, ONE)]);
        let r = m.restrict(&[2, 0]);
        assert_eq!(r.get(0, 1), I);
        assert_eq!(r.get(1, 0), ONE);
        assert_eq!(r.nnz(), 2);
    }

    #[test]
    fn matrix_element_matches_apply() {
        let m = OperatorMatrix::from_triplets(2, [(0, 0, c(1.0, 0.0)), (0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        let x = StateVector(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        let direct = x.inner(&m.apply(&x));
        assert!((direct - m.expectation(&x)).norm() < 1e-15);
    }
}
