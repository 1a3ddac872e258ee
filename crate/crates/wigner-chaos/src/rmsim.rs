//! Monte Carlo cross-validation against correlated GUE random matrices.
//!
//! A semicircular family with covariance `c` is approximated by
//! `X_i = Σ_j L_{ij} G_j`, where the `G_j` are independent standardized GUE
//! matrices and `L` is the tolerance-tolerant pivoted Cholesky factor of `c`.
//! Normalized trace moments `Re[(1/N)·Tr(X_{i_1} ⋯ X_{i_r})]` then converge
//! to the family's moments as `N → ∞`.
//!
//! Sampling is deterministic and platform-stable: sample `s` draws from a
//! ChaCha8 generator seeded with the configured seed on stream `s`, and each
//! matrix is filled in a fixed order — strictly-upper entries row by row
//! (real part then imaginary part, each standard normal scaled to variance
//! `1/N`), then the real diagonal (variance `1/N`), matrix `1` through
//! matrix `d`. Samples are therefore embarrassingly parallel with identical
//! serial and parallel results.

use crate::moment::{CovarianceMatrix, MomentError};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("IndexOutOfRange: word entry {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
}

/// Monte Carlo configuration: matrix size, sample count, seed, covariance.
#[derive(Debug, Clone)]
pub struct SimConfig {
    dim: usize,
    samples: usize,
    seed: u64,
    covariance: CovarianceMatrix,
}

impl SimConfig {
    pub fn new(
        dim: usize,
        samples: usize,
        seed: u64,
        covariance: CovarianceMatrix,
    ) -> Result<Self, SimError> {
        if dim < 2 {
            return Err(SimError::InvalidConfig(format!(
                "matrix dimension must be at least 2, got {dim}"
            )));
        }
        if samples < 1 {
            return Err(SimError::InvalidConfig("need at least one sample".into()));
        }
        Ok(Self {
            dim,
            samples,
            seed,
            covariance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.covariance
    }
}

/// Dense square complex matrix stored as separate real and imaginary planes
/// (row-major); the split keeps the product kernels on plain `f64` slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Matrix {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            re: vec![0.0; n * n],
            im: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[i * self.n + j], self.im[i * self.n + j])
    }

    fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.re[i * self.n + j] = v.re;
        self.im[i * self.n + j] = v.im;
    }

    /// Largest deviation from Hermitian symmetry, `max |m_{ij} − conj(m_{ji})|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Complex product via three real products:
    /// `re = Ar·Br − Ai·Bi`, `im = (Ar+Ai)·(Br+Bi) − Ar·Br − Ai·Bi`.
    fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let t1 = real_mul(n, &self.re, &other.re);
        let t2 = real_mul(n, &self.im, &other.im);
        let sa = add_planes(&self.re, &self.im);
        let sb = add_planes(&other.re, &other.im);
        let t3 = real_mul(n, &sa, &sb);
        let mut re = t1;
        let mut im = t3;
        for idx in 0..n * n {
            im[idx] -= re[idx] + t2[idx];
            re[idx] -= t2[idx];
        }
        Matrix { n, re, im }
    }

    fn trace(&self) -> Complex64 {
        let mut tr = Complex64::new(0.0, 0.0);
        for i in 0..self.n {
            tr += self.get(i, i);
        }
        tr
    }

    /// `Tr(self · other)` without forming the product.
    fn trace_mul(&self, other: &Matrix) -> Complex64 {
        let n = self.n;
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..n {
            let ar = &self.re[i * n..(i + 1) * n];
            let ai = &self.im[i * n..(i + 1) * n];
            for j in 0..n {
                let br = other.re[j * n + i];
                let bi = other.im[j * n + i];
                re += ar[j] * br - ai[j] * bi;
                im += ar[j] * bi + ai[j] * br;
            }
        }
        Complex64::new(re, im)
    }
}

fn real_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        let arow = &a[i * n..(i + 1) * n];
        let orow = &mut out[i * n..(i + 1) * n];
        for (l, &ail) in arow.iter().enumerate() {
            if ail == 0.0 {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
    out
}

fn add_planes(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

/// One standardized GUE matrix: Hermitian, entries of variance `1/N`.
fn standard_gue(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::zeros(n);
    let off = (1.0 / (2.0 * n as f64)).sqrt();
    for i in 0..n {
        for j in i + 1..n {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let v = Complex64::new(off * re, off * im);
            m.set(i, j, v);
            m.set(j, i, v.conj());
        }
    }
    let diag = (1.0 / n as f64).sqrt();
    for i in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        m.set(i, i, Complex64::new(diag * x, 0.0));
    }
    m
}

/// The `d` correlated matrices of one sample; bitwise reproducible from
/// `(seed, sample_index)`.
pub fn sample_family(cfg: &SimConfig, sample_index: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(sample_index);
    let d = cfg.covariance.dim();
    let gs: Vec<Matrix> = (0..d).map(|_| standard_gue(cfg.dim, &mut rng)).collect();
    let l = cfg
        .covariance
        .cholesky_factor()
        .expect("covariance was validated at construction");
    (0..d)
        .map(|i| {
            let mut x = Matrix::zeros(cfg.dim);
            for (j, g) in gs.iter().enumerate() {
                let w = l[i][j];
                if w == 0.0 {
                    continue;
                }
                for (dst, &src) in x.re.iter_mut().zip(&g.re) {
                    *dst += w * src;
                }
                for (dst, &src) in x.im.iter_mut().zip(&g.im) {
                    *dst += w * src;
                }
            }
            x
        })
        .collect()
}

/// Product of the word's matrices, built left to right.
fn word_product(mats: &[Matrix], word: &[usize]) -> Matrix {
    let mut acc = mats[word[0] - 1].clone();
    for &i in &word[1..] {
        acc = acc.mul(&mats[i - 1]);
    }
    acc
}

/// Normalized trace of the word product, `(1/N)·Tr(X_{i_1} ⋯ X_{i_r})`.
/// The word is split in half and the final product never materialized; equal
/// halves (such as `1212` or `1111`) cost a single matrix product.
fn normalized_trace_word(mats: &[Matrix], word: &[usize]) -> f64 {
    let n = mats[0].n();
    let tr = match word.len() {
        0 => Complex64::new(n as f64, 0.0),
        1 => mats[word[0] - 1].trace(),
        len => {
            let (left, right) = word.split_at(len / 2);
            let p = word_product(mats, left);
            if left == right {
                p.trace_mul(&p)
            } else {
                let q = word_product(mats, right);
                p.trace_mul(&q)
            }
        }
    };
    tr.re / n as f64
}

/// A word's empirical moment: sample mean and standard error.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalMoment {
    pub word: Vec<usize>,
    pub mean: f64,
    pub stderr: f64,
}

/// Estimates several words from one shared set of samples. Samples run in
/// parallel; per-sample substreams make the statistics independent of the
/// thread count.
pub fn empirical_trace_moments(
    cfg: &SimConfig,
    words: &[Vec<usize>],
) -> Result<Vec<EmpiricalMoment>, SimError> {
    let d = cfg.covariance.dim();
    for word in words {
        for &i in word {
            if i == 0 || i > d {
                return Err(SimError::IndexOutOfRange { index: i, d });
            }
        }
    }
    let per_sample: Vec<Vec<f64>> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|s| {
            let mats = sample_family(cfg, s);
            words
                .iter()
                .map(|w| normalized_trace_word(&mats, w))
                .collect()
        })
        .collect();
    let n = cfg.samples as f64;
    Ok(words
        .iter()
        .enumerate()
        .map(|(wi, word)| {
            let values: Vec<f64> = per_sample.iter().map(|row| row[wi]).collect();
            let mean = values.iter().sum::<f64>() / n;
            let stderr = if cfg.samples > 1 {
                let var =
                    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            EmpiricalMoment {
                word: word.clone(),
                mean,
                stderr,
            }
        })
        .collect())
}

/// Single-word convenience wrapper around [`empirical_trace_moments`].
pub fn empirical_trace_moment(
    cfg: &SimConfig,
    word: &[usize],
) -> Result<EmpiricalMoment, SimError> {
    Ok(empirical_trace_moments(cfg, &[word.to_vec()])?.remove(0))
}
