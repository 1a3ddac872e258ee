//! Step kernels: piecewise-constant elements of L²(ℝ₊ⁿ) on a uniform grid.
//!
//! A kernel of order `n` is stored as a sparse map from index tuples
//! `(j_1, …, j_n)` to complex coefficients; the kernel takes that constant
//! value on the half-open cell `[j_1·Δ, (j_1+1)·Δ) × …` and vanishes on
//! absent tuples. Order 0 encodes a scalar. Inner products, adjoints,
//! contractions and refinement are all exact finite sums, so floating-point
//! rounding is the only source of error.
//!
//! Two kernels are combinable only when their grids are identical (same
//! `delta`, same `cells`); [`StepKernel::refine`] is the only compatibility
//! mechanism. All values are immutable after construction and all operations
//! are pure functions, so kernels can be shared freely across threads.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("InvalidGrid: {0}")]
    InvalidGrid(String),
    #[error("IndexOutOfRange: tuple {idx:?} does not fit a grid with {cells} cells per axis")]
    IndexOutOfRange { idx: Vec<usize>, cells: usize },
    #[error("DuplicateIndex: tuple {0:?} appears more than once")]
    DuplicateIndex(Vec<usize>),
    #[error("OrderMismatch: expected order {expected}, got {actual}")]
    OrderMismatch { expected: usize, actual: usize },
    #[error("GridMismatch: kernels live on different grids")]
    GridMismatch,
    #[error("ContractionOrderTooLarge: p = {p} exceeds min({n}, {m})")]
    ContractionOrderTooLarge { p: usize, n: usize, m: usize },
    #[error("NonFinite: {0}")]
    NonFinite(String),
    #[error("Parse: {0}")]
    Parse(String),
}

/// A uniform grid on ℝ₊: `cells` half-open intervals of width `delta` per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    delta: f64,
    cells: usize,
}

impl Grid {
    pub fn new(delta: f64, cells: usize) -> Result<Self, KernelError> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(KernelError::InvalidGrid(format!(
                "cell width must be positive and finite, got {delta}"
            )));
        }
        if cells == 0 {
            return Err(KernelError::InvalidGrid("need at least one cell".into()));
        }
        Ok(Self { delta, cells })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cells(&self) -> usize {
        self.cells
    }
}

/// A piecewise-constant kernel in L²(ℝ₊ⁿ); see the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct StepKernel {
    order: usize,
    grid: Grid,
    coeffs: BTreeMap<Vec<usize>, Complex64>,
}

impl StepKernel {
    /// Builds a kernel from explicit entries.
    ///
    /// Every tuple must have length `order`, all indices must lie in
    /// `0..grid.cells()`, and no tuple may repeat.
    pub fn new(
        order: usize,
        grid: Grid,
        entries: Vec<(Vec<usize>, Complex64)>,
    ) -> Result<Self, KernelError> {
        let mut coeffs = BTreeMap::new();
        for (idx, value) in entries {
            if idx.len() != order {
                return Err(KernelError::OrderMismatch {
                    expected: order,
                    actual: idx.len(),
                });
            }
            if idx.iter().any(|&j| j >= grid.cells) {
                return Err(KernelError::IndexOutOfRange {
                    idx,
                    cells: grid.cells,
                });
            }
            if !value.re.is_finite() || !value.im.is_finite() {
                return Err(KernelError::NonFinite(format!(
                    "coefficient at {idx:?} is not finite"
                )));
            }
            if coeffs.insert(idx.clone(), value).is_some() {
                return Err(KernelError::DuplicateIndex(idx));
            }
        }
        Ok(Self::from_map(order, grid, coeffs))
    }

    /// Internal constructor; drops exact zeros.
    fn from_map(order: usize, grid: Grid, mut coeffs: BTreeMap<Vec<usize>, Complex64>) -> Self {
        coeffs.retain(|_, v| v.re != 0.0 || v.im != 0.0);
        Self {
            order,
            grid,
            coeffs,
        }
    }

    /// The zero kernel of the given order.
    pub fn zero(order: usize, grid: Grid) -> Self {
        Self::from_map(order, grid, BTreeMap::new())
    }

    /// An order-0 kernel holding a single scalar.
    pub fn scalar(grid: Grid, value: Complex64) -> Self {
        Self::from_map(order_zero(), grid, [(Vec::new(), value)].into_iter().collect())
    }

    /// The indicator of one grid cell per axis: `e_{j_1} ⊗ … ⊗ e_{j_n}`,
    /// where `e_j = 1_{[jΔ, (j+1)Δ)}`.
    pub fn basis(grid: Grid, idx: &[usize]) -> Result<Self, KernelError> {
        Self::new(idx.len(), grid, vec![(idx.to_vec(), Complex64::new(1.0, 0.0))])
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Coefficient at a tuple; absent tuples are zero.
    pub fn coeff(&self, idx: &[usize]) -> Complex64 {
        self.coeffs
            .get(idx)
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Nonzero coefficients in lexicographic tuple order.
    pub fn coeffs(&self) -> impl Iterator<Item = (&[usize], Complex64)> + '_ {
        self.coeffs.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs.len()
    }

    /// Squared L² norm, `Δⁿ · Σ |c|²`.
    pub fn norm_sq(&self) -> f64 {
        let weight = self.grid.delta.powi(self.order as i32);
        weight * self.coeffs.values().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// L² inner product `Δⁿ · Σ f[j] · conj(g[j])`; linear in `self`,
    /// antilinear in `other`.
    pub fn inner(&self, other: &StepKernel) -> Result<Complex64, KernelError> {
        if self.grid != other.grid {
            return Err(KernelError::GridMismatch);
        }
        if self.order != other.order {
            return Err(KernelError::OrderMismatch {
                expected: self.order,
                actual: other.order,
            });
        }
        let weight = self.grid.delta.powi(self.order as i32);
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in &self.coeffs {
            if let Some(d) = other.coeffs.get(idx) {
                acc += c * d.conj();
            }
        }
        Ok(weight * acc)
    }

    /// The adjoint `f*(t_1,…,t_n) = conj(f(t_n,…,t_1))`: every tuple is
    /// reversed and every coefficient conjugated.
    pub fn adjoint(&self) -> StepKernel {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(idx, c)| {
                let rev: Vec<usize> = idx.iter().rev().copied().collect();
                (rev, c.conj())
            })
            .collect();
        Self::from_map(self.order, self.grid, coeffs)
    }

    /// True iff `‖f − f*‖ ≤ tol`.
    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        self.sub_norm(&self.adjoint()) <= tol
    }

    /// True iff all coefficients are real within `tol` and the kernel is
    /// invariant, within `tol` in L², under permutations of its arguments.
    ///
    /// For orders up to 8 all permutations are checked; beyond that only
    /// adjacent transpositions, which generate the full symmetric group.
    pub fn is_fully_symmetric(&self, tol: f64) -> bool {
        debug_assert!(tol >= 0.0);
        if self.coeffs.values().any(|c| c.im.abs() > tol) {
            return false;
        }
        let n = self.order;
        if n <= 1 {
            return true;
        }
        if n <= 8 {
            let mut ok = true;
            for_each_permutation(n, &mut |perm| {
                if self.sub_norm(&self.permuted(perm)) > tol {
                    ok = false;
                    return false;
                }
                true
            });
            ok
        } else {
            (0..n - 1).all(|i| {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.swap(i, i + 1);
                self.sub_norm(&self.permuted(&perm)) <= tol
            })
        }
    }

    /// Kernel with arguments permuted: `(σf)(t_1,…,t_n) = f(t_{σ(1)},…,t_{σ(n)})`.
    fn permuted(&self, perm: &[usize]) -> StepKernel {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(idx, &c)| {
                let new: Vec<usize> = perm.iter().map(|&i| idx[i]).collect();
                (new, c)
            })
            .collect();
        Self::from_map(self.order, self.grid, coeffs)
    }

    /// `‖self − other‖`, assuming same grid and order.
    fn sub_norm(&self, other: &StepKernel) -> f64 {
        let weight = self.grid.delta.powi(self.order as i32);
        let mut acc = 0.0;
        for (idx, c) in &self.coeffs {
            let d = other.coeff(idx);
            acc += (c - d).norm_sqr();
        }
        for (idx, d) in &other.coeffs {
            if !self.coeffs.contains_key(idx) {
                acc += d.norm_sqr();
            }
        }
        (weight * acc).sqrt()
    }

    /// The `p`-th contraction `f ⌢p g` of order `n + m − 2p`:
    ///
    /// ```text
    /// (f ⌢p g)[t, u] = Δᵖ · Σ_s f[t, s_1…s_p] · g[s_p…s_1, u]
    /// ```
    ///
    /// The last `p` arguments of `f` are integrated against the first `p`
    /// arguments of `g` in reversed order. `p = 0` is the tensor product.
    ///
    /// Contributions to each output coefficient accumulate in lexicographic
    /// order of the contracted tuple `s`, making results bitwise deterministic.
    pub fn contract(&self, other: &StepKernel, p: usize) -> Result<StepKernel, KernelError> {
        if self.grid != other.grid {
            return Err(KernelError::GridMismatch);
        }
        let (n, m) = (self.order, other.order);
        if p > n.min(m) {
            return Err(KernelError::ContractionOrderTooLarge { p, n, m });
        }
        // group the right factor by its first p indices
        let mut by_prefix: BTreeMap<&[usize], Vec<(&[usize], Complex64)>> = BTreeMap::new();
        for (idx, &c) in &other.coeffs {
            by_prefix.entry(&idx[..p]).or_default().push((&idx[p..], c));
        }
        let weight = self.grid.delta.powi(p as i32);
        let mut out: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (idx, &cf) in &self.coeffs {
            let (head, tail) = idx.split_at(n - p);
            let rev: Vec<usize> = tail.iter().rev().copied().collect();
            if let Some(group) = by_prefix.get(rev.as_slice()) {
                for &(rest, cg) in group {
                    let mut key = Vec::with_capacity(n + m - 2 * p);
                    key.extend_from_slice(head);
                    key.extend_from_slice(rest);
                    *out.entry(key).or_insert_with(|| Complex64::new(0.0, 0.0)) +=
                        weight * cf * cg;
                }
            }
        }
        Ok(Self::from_map(n + m - 2 * p, self.grid, out))
    }

    /// The covariance of the corresponding integrals:
    /// `1_{n=m} · ∫ f(t_1…t_n) g(t_n…t_1) dt = inner(f, adjoint(g))`.
    /// Zero when the orders differ.
    pub fn full_contraction(&self, other: &StepKernel) -> Result<Complex64, KernelError> {
        if self.grid != other.grid {
            return Err(KernelError::GridMismatch);
        }
        if self.order != other.order {
            return Ok(Complex64::new(0.0, 0.0));
        }
        self.inner(&other.adjoint())
    }

    /// An L²-equal kernel on the grid with `factor` times as many cells of
    /// width `delta / factor`; each cell splits into `factor` pieces per axis
    /// carrying the same coefficient.
    ///
    /// # Panics
    /// Panics if `factor == 0`.
    pub fn refine(&self, factor: usize) -> StepKernel {
        assert!(factor >= 1, "refinement factor must be at least 1");
        if factor == 1 {
            return self.clone();
        }
        let grid = Grid {
            delta: self.grid.delta / factor as f64,
            cells: self.grid.cells * factor,
        };
        let n = self.order;
        let mut coeffs = BTreeMap::new();
        for (idx, &c) in &self.coeffs {
            // all offset combinations in {0,…,factor-1}ⁿ
            let mut offsets = vec![0usize; n];
            loop {
                let key: Vec<usize> = idx
                    .iter()
                    .zip(&offsets)
                    .map(|(&j, &o)| j * factor + o)
                    .collect();
                coeffs.insert(key, c);
                // mixed-radix increment
                let mut axis = n;
                loop {
                    if axis == 0 {
                        break;
                    }
                    axis -= 1;
                    offsets[axis] += 1;
                    if offsets[axis] < factor {
                        break;
                    }
                    offsets[axis] = 0;
                    if axis == 0 {
                        axis = usize::MAX;
                        break;
                    }
                }
                if axis == usize::MAX || n == 0 {
                    break;
                }
            }
        }
        Self::from_map(n, grid, coeffs)
    }

    /// Scales every coefficient.
    pub fn scale(&self, factor: Complex64) -> StepKernel {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, &v)| (k.clone(), factor * v))
            .collect();
        Self::from_map(self.order, self.grid, coeffs)
    }

    /// Coefficientwise sum; grids and orders must match.
    pub fn add(&self, other: &StepKernel) -> Result<StepKernel, KernelError> {
        if self.grid != other.grid {
            return Err(KernelError::GridMismatch);
        }
        if self.order != other.order {
            return Err(KernelError::OrderMismatch {
                expected: self.order,
                actual: other.order,
            });
        }
        let mut coeffs = self.coeffs.clone();
        for (idx, &v) in &other.coeffs {
            *coeffs.entry(idx.clone()).or_insert_with(|| Complex64::new(0.0, 0.0)) += v;
        }
        Ok(Self::from_map(self.order, self.grid, coeffs))
    }

    /// Serializes to the kernel file format.
    pub fn to_json(&self) -> String {
        let file = KernelFile {
            order: self.order,
            grid: GridFile {
                delta: self.grid.delta,
                cells: self.grid.cells,
            },
            coeffs: self
                .coeffs
                .iter()
                .map(|(idx, c)| CoeffFile {
                    idx: idx.clone(),
                    re: c.re,
                    im: c.im,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("kernel serialization cannot fail")
    }

    /// Parses the kernel file format, rejecting non-finite numbers,
    /// out-of-range indices and duplicate tuples.
    pub fn from_json(text: &str) -> Result<StepKernel, KernelError> {
        let file: KernelFile =
            serde_json::from_str(text).map_err(|e| KernelError::Parse(e.to_string()))?;
        if !file.grid.delta.is_finite() {
            return Err(KernelError::NonFinite("grid delta".into()));
        }
        let grid = Grid::new(file.grid.delta, file.grid.cells)?;
        let entries = file
            .coeffs
            .into_iter()
            .map(|c| (c.idx, Complex64::new(c.re, c.im)))
            .collect();
        Self::new(file.order, grid, entries)
    }
}

fn order_zero() -> usize {
    0
}

/// Kernel file format: `{"order": n, "grid": {"delta": …, "cells": …},
/// "coeffs": [{"idx": […], "re": …, "im": …}, …]}`.
#[derive(Serialize, Deserialize)]
struct KernelFile {
    order: usize,
    grid: GridFile,
    coeffs: Vec<CoeffFile>,
}

#[derive(Serialize, Deserialize)]
struct GridFile {
    delta: f64,
    cells: usize,
}

#[derive(Serialize, Deserialize)]
struct CoeffFile {
    idx: Vec<usize>,
    re: f64,
    im: f64,
}

/// Calls `visit` with every permutation of `{0,…,n-1}` (Heap's algorithm);
/// stops early when `visit` returns false.
fn for_each_permutation(n: usize, visit: &mut dyn FnMut(&[usize]) -> bool) {
    let mut perm: Vec<usize> = (0..n).collect();
    if !visit(&perm) {
        return;
    }
    let mut counters = vec![0usize; n];
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(counters[i], i);
            }
            if !visit(&perm) {
                return;
            }
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
}
