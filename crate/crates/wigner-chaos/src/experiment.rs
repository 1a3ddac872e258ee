//! Explicit kernel families and the convergence experiments built on them.
//!
//! The tensor-sum family `k^{-1/2} Σ_{j<k} e_j^{⊗n}` is the workhorse: every
//! one of its moments is exactly computable (the associated operator is
//! `k^{-1/2}` times a rank-`k` projection), so finite-`k` measurements can be
//! compared against closed-form targets. The correlated pair realizes any
//! covariance `ρ` exactly at every `k`, and the static family is a
//! non-converging control.

use crate::kernel::{Grid, KernelError, StepKernel};
use crate::moment::{
    classical_joint_moment, contraction_norms, free_joint_moment, fourth_moment_gap,
    gaussian_family_moment, semicircular_family_moment, CovarianceMatrix, MomentError,
    MomentRequest,
};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error(transparent)]
    Moment(#[from] MomentError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("CovarianceMismatch: measured c({i},{j}) = {measured} differs from {expected} by more than 0.5 at k = {k}")]
    CovarianceMismatch {
        i: usize,
        j: usize,
        measured: f64,
        expected: f64,
        k: usize,
    },
    #[error("NotFullySymmetric: component {0} of the family is not fully symmetric")]
    NotFullySymmetric(usize),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

/// The shipped kernel families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    TensorSum,
    CorrelatedPair,
    StaticBad,
}

/// A parameterized kernel family; `kernels(k)` yields its components on
/// `Grid(Δ=1, cells = max(2, 2k))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Family {
    pub kind: FamilyKind,
    pub order: usize,
    /// correlation of the second component, for `CorrelatedPair`
    pub rho: Option<f64>,
}

impl Family {
    pub fn tensor_sum(order: usize) -> Result<Self, ExperimentError> {
        check_order(order)?;
        Ok(Self {
            kind: FamilyKind::TensorSum,
            order,
            rho: None,
        })
    }

    pub fn correlated_pair(order: usize, rho: f64) -> Result<Self, ExperimentError> {
        check_order(order)?;
        if !(-1.0..=1.0).contains(&rho) {
            return Err(ExperimentError::InvalidConfig(format!(
                "correlation {rho} outside [-1, 1]"
            )));
        }
        Ok(Self {
            kind: FamilyKind::CorrelatedPair,
            order,
            rho: Some(rho),
        })
    }

    pub fn static_bad(order: usize) -> Result<Self, ExperimentError> {
        check_order(order)?;
        Ok(Self {
            kind: FamilyKind::StaticBad,
            order,
            rho: None,
        })
    }

    /// Number of kernel components per `k`.
    pub fn dimension(&self) -> usize {
        match self.kind {
            FamilyKind::CorrelatedPair => 2,
            _ => 1,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            FamilyKind::TensorSum => format!("tensor_sum(order={})", self.order),
            FamilyKind::CorrelatedPair => format!(
                "correlated_pair(order={}, rho={})",
                self.order,
                self.rho.unwrap_or(0.0)
            ),
            FamilyKind::StaticBad => format!("static_bad(order={})", self.order),
        }
    }

    /// Shared grid for all components at a given `k`.
    pub fn grid_for(k: usize) -> Result<Grid, ExperimentError> {
        Ok(Grid::new(1.0, (2 * k).max(2))?)
    }

    /// The family's components at parameter `k`.
    pub fn kernels(&self, k: usize) -> Result<Vec<StepKernel>, ExperimentError> {
        if k == 0 {
            return Err(ExperimentError::InvalidConfig("k must be positive".into()));
        }
        let grid = Self::grid_for(k)?;
        let tensor_sum = |offset: usize| -> Result<StepKernel, KernelError> {
            let w = 1.0 / (k as f64).sqrt();
            let entries = (0..k)
                .map(|j| (vec![offset + j; self.order], Complex64::new(w, 0.0)))
                .collect();
            StepKernel::new(self.order, grid, entries)
        };
        match self.kind {
            FamilyKind::TensorSum => Ok(vec![tensor_sum(0)?]),
            FamilyKind::StaticBad => Ok(vec![StepKernel::basis(grid, &vec![0; self.order])?]),
            FamilyKind::CorrelatedPair => {
                let rho = self.rho.unwrap_or(0.0);
                let f = tensor_sum(0)?;
                let fresh = tensor_sum(k)?; // disjoint basis cells k..2k-1
                let second = f
                    .scale(Complex64::new(rho, 0.0))
                    .add(&fresh.scale(Complex64::new((1.0 - rho * rho).sqrt(), 0.0)))?;
                Ok(vec![f, second])
            }
        }
    }

    /// The limiting covariance; exact at every finite `k` for these families.
    pub fn covariance(&self) -> CovarianceMatrix {
        match self.kind {
            FamilyKind::CorrelatedPair => {
                let rho = self.rho.unwrap_or(0.0);
                CovarianceMatrix::new(vec![vec![1.0, rho], vec![rho, 1.0]])
                    .expect("correlation matrix is PSD")
            }
            _ => CovarianceMatrix::identity(1),
        }
    }
}

fn check_order(order: usize) -> Result<(), ExperimentError> {
    if order == 0 {
        return Err(ExperimentError::InvalidConfig(
            "family order must be at least 1".into(),
        ));
    }
    Ok(())
}

/// One measurement: a moment (or contraction norm) against its target.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub k: usize,
    pub word: String,
    pub engine: String,
    pub measured: f64,
    pub target: f64,
    pub gap: f64,
}

impl ReportRow {
    fn new(k: usize, word: String, engine: &str, measured: f64, target: f64) -> Self {
        Self {
            k,
            word,
            engine: engine.to_string(),
            measured,
            target,
            gap: (measured - target).abs(),
        }
    }
}

/// Collected rows of a convergence run plus family metadata.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub family: String,
    /// uniform norm bound over the family: `max_k max_i ‖f_k^{(i)}‖`
    pub norm_bound: f64,
    pub rows: Vec<ReportRow>,
    /// reporting sugar: every free-engine row at the largest k has gap < 5/k
    pub converged: bool,
}

impl ConvergenceReport {
    fn classify(family: String, norm_bound: f64, rows: Vec<ReportRow>, k_max: usize) -> Self {
        let converged = rows
            .iter()
            .filter(|r| r.k == k_max && r.engine == "free")
            .all(|r| r.gap < 5.0 / k_max as f64);
        Self {
            family,
            norm_bound,
            rows,
            converged,
        }
    }

    /// CSV with header `k,word,measured,target,gap,engine`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,word,measured,target,gap,engine\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k,
                r.word,
                crate::numfmt::sig12(r.measured),
                crate::numfmt::sig12(r.target),
                crate::numfmt::sig12(r.gap),
                r.engine
            ));
        }
        out
    }
}

fn check_ks(ks: &[usize]) -> Result<(), ExperimentError> {
    if ks.is_empty() {
        return Err(ExperimentError::InvalidConfig("empty k list".into()));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ExperimentError::InvalidConfig(
            "k values must be strictly increasing".into(),
        ));
    }
    if ks[0] == 0 {
        return Err(ExperimentError::InvalidConfig("k must be positive".into()));
    }
    Ok(())
}

fn word_string(word: &[usize]) -> String {
    word.iter().map(|i| i.to_string()).collect()
}

/// Lexicographically least rotations of all words over `{1,…,d}` of each
/// length `1..=max_len`, deduplicating cyclic equivalents.
pub fn cyclic_representatives(d: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut word = vec![1usize; len];
        loop {
            if is_least_rotation(&word) {
                out.push(word.clone());
            }
            // odometer over {1,…,d}^len
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                word[pos] += 1;
                if word[pos] <= d {
                    break;
                }
                word[pos] = 1;
                if pos == 0 {
                    pos = usize::MAX;
                    break;
                }
            }
            if pos == usize::MAX {
                break;
            }
        }
    }
    out
}

fn is_least_rotation(word: &[usize]) -> bool {
    let r = word.len();
    for shift in 1..r {
        for t in 0..r {
            let rotated = word[(t + shift) % r];
            if rotated != word[t] {
                if rotated < word[t] {
                    return false;
                }
                break;
            }
        }
    }
    true
}

/// Per-component witness of the fourth-moment criterion: second and fourth
/// moments, the fourth-moment gap, and all self-contraction norms, per `k`.
pub fn run_component_convergence(
    family: &Family,
    ks: &[usize],
) -> Result<ConvergenceReport, ExperimentError> {
    check_ks(ks)?;
    let c = family.covariance();
    let mut rows = Vec::new();
    let mut norm_bound = 0.0f64;
    for &k in ks {
        let kernels = family.kernels(k)?;
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        for (i0, kern) in kernels.iter().enumerate() {
            let i = i0 + 1;
            norm_bound = norm_bound.max(kern.norm());
            let cii = c.get(i, i);
            let m2 = free_joint_moment(&MomentRequest::new(refs.iter().copied(), vec![i; 2])?)?
                .total
                .re;
            let m4 = free_joint_moment(&MomentRequest::new(refs.iter().copied(), vec![i; 4])?)?
                .total
                .re;
            rows.push(ReportRow::new(k, word_string(&[i, i]), "free", m2, cii));
            rows.push(ReportRow::new(
                k,
                word_string(&[i; 4]),
                "free",
                m4,
                2.0 * cii * cii,
            ));
            let gap = fourth_moment_gap(kern)?;
            rows.push(ReportRow::new(k, i.to_string(), "gap", gap, 0.0));
            for (p0, norm) in contraction_norms(kern).into_iter().enumerate() {
                rows.push(ReportRow::new(
                    k,
                    format!("{i}:{}", p0 + 1),
                    "contraction",
                    norm,
                    0.0,
                ));
            }
        }
    }
    Ok(ConvergenceReport::classify(
        family.label(),
        norm_bound,
        rows,
        *ks.last().unwrap(),
    ))
}

/// Builds the concatenated kernel vector of several families at one `k`.
fn joint_kernels(families: &[Family], k: usize) -> Result<Vec<StepKernel>, ExperimentError> {
    let mut kernels = Vec::new();
    for f in families {
        kernels.extend(f.kernels(k)?);
    }
    Ok(kernels)
}

/// Joint-convergence witness: every index word up to `max_order` (one
/// representative per cyclic class) measured against the semicircular family
/// moment with covariance `c`.
pub fn run_joint_convergence(
    families: &[Family],
    c: &CovarianceMatrix,
    ks: &[usize],
    max_order: usize,
) -> Result<ConvergenceReport, ExperimentError> {
    check_ks(ks)?;
    if max_order > 8 {
        return Err(ExperimentError::InvalidConfig(
            "max_order is capped at 8".into(),
        ));
    }
    let d: usize = families.iter().map(|f| f.dimension()).sum();
    if c.dim() != d {
        return Err(ExperimentError::InvalidConfig(format!(
            "covariance is {}×{} but the families have {d} components",
            c.dim(),
            c.dim()
        )));
    }
    let k_max = *ks.last().unwrap();

    // configuration check: measured covariance must be near c at the largest k
    {
        let kernels = joint_kernels(families, k_max)?;
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        for i in 1..=d {
            for j in i..=d {
                let measured =
                    free_joint_moment(&MomentRequest::new(refs.iter().copied(), vec![i, j])?)?
                        .total
                        .re;
                if (measured - c.get(i, j)).abs() > 0.5 {
                    return Err(ExperimentError::CovarianceMismatch {
                        i,
                        j,
                        measured,
                        expected: c.get(i, j),
                        k: k_max,
                    });
                }
            }
        }
    }

    let words = cyclic_representatives(d, max_order);
    let mut rows = Vec::new();
    let mut norm_bound = 0.0f64;
    for &k in ks {
        let kernels = joint_kernels(families, k)?;
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        for kern in &kernels {
            norm_bound = norm_bound.max(kern.norm());
        }
        for word in &words {
            let measured =
                free_joint_moment(&MomentRequest::new(refs.iter().copied(), word.clone())?)?
                    .total
                    .re;
            let target = semicircular_family_moment(c, word)?;
            rows.push(ReportRow::new(k, word_string(word), "free", measured, target));
        }
    }
    let label = families
        .iter()
        .map(|f| f.label())
        .collect::<Vec<_>>()
        .join("+");
    Ok(ConvergenceReport::classify(label, norm_bound, rows, k_max))
}

/// Transfer-principle witness: for fully symmetric families, the free moments
/// are measured against semicircular targets and the classical moments
/// against Gaussian targets whose covariance is scaled by `√(n_i! n_j!)`.
/// The reference covariance is the measured `r = 2` free moment matrix at
/// each `k` (exact for the shipped families).
pub fn run_transfer_principle(
    families: &[Family],
    ks: &[usize],
    max_order: usize,
) -> Result<ConvergenceReport, ExperimentError> {
    check_ks(ks)?;
    if max_order > 8 {
        return Err(ExperimentError::InvalidConfig(
            "max_order is capped at 8".into(),
        ));
    }
    let d: usize = families.iter().map(|f| f.dimension()).sum();
    let words = cyclic_representatives(d, max_order);
    let mut rows = Vec::new();
    let mut norm_bound = 0.0f64;
    for &k in ks {
        let kernels = joint_kernels(families, k)?;
        let refs: Vec<&StepKernel> = kernels.iter().collect();
        for (i0, kern) in kernels.iter().enumerate() {
            let tol = crate::moment::SYMMETRY_TOL * kern.norm();
            if !kern.is_fully_symmetric(tol) {
                return Err(ExperimentError::NotFullySymmetric(i0 + 1));
            }
            norm_bound = norm_bound.max(kern.norm());
        }
        let orders: Vec<usize> = kernels.iter().map(|kern| kern.order()).collect();

        // measured free covariance, symmetrized exactly
        let mut cov = vec![vec![0.0; d]; d];
        for i in 1..=d {
            for j in i..=d {
                let v = free_joint_moment(&MomentRequest::new(refs.iter().copied(), vec![i, j])?)?
                    .total
                    .re;
                cov[i - 1][j - 1] = v;
                cov[j - 1][i - 1] = v;
            }
        }
        let c_free = CovarianceMatrix::new(cov.clone())?;
        let mut scaled = cov;
        for i in 0..d {
            for j in 0..d {
                scaled[i][j] *= (factorial(orders[i]) * factorial(orders[j])).sqrt();
            }
        }
        let c_classical = CovarianceMatrix::new(scaled)?;

        for word in &words {
            let free = free_joint_moment(&MomentRequest::new(refs.iter().copied(), word.clone())?)?
                .total
                .re;
            rows.push(ReportRow::new(
                k,
                word_string(word),
                "free",
                free,
                semicircular_family_moment(&c_free, word)?,
            ));
            let classical =
                classical_joint_moment(&MomentRequest::new(refs.iter().copied(), word.clone())?)?
                    .total
                    .re;
            rows.push(ReportRow::new(
                k,
                word_string(word),
                "classical",
                classical,
                gaussian_family_moment(&c_classical, word)?,
            ));
        }
    }
    let label = families
        .iter()
        .map(|f| f.label())
        .collect::<Vec<_>>()
        .join("+");
    Ok(ConvergenceReport::classify(
        label,
        norm_bound,
        rows,
        *ks.last().unwrap(),
    ))
}

fn factorial(n: usize) -> f64 {
    (1..=n as u64).product::<u64>() as f64
}
