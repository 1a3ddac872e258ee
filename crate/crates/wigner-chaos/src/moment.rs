//! Pairing integrals and exact joint moments.
//!
//! The free engine evaluates `φ[I(f^{(i_1)}) ⋯ I(f^{(i_r)})]` as a sum of
//! pairing integrals over the non-crossing pairings that respect the block
//! structure `n_{i_1} ⊗ … ⊗ n_{i_r}`; the classical engine sums over all
//! respectful pairings (crossings allowed) and models the Wiener diagram
//! formula for fully symmetric kernels. Closed-form semicircular and Gaussian
//! family moments serve as convergence targets.
//!
//! Joint moments are tracial, so both engines canonicalize the index word to
//! its lexicographically least cyclic rotation before evaluating; cyclic
//! rotations of a word therefore produce bitwise-identical totals. Per-pairing
//! contributions are relabeled back to the requested word's ground set.

use crate::kernel::{KernelError, StepKernel};
use crate::pairing::{
    catalan, enumerate_nc_pairings, enumerate_pairings, enumerate_respectful_nc,
    enumerate_respectful_pairings, BlockStructure, Pairing, PairingError,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Relative tolerance for the mirror/full symmetry checks performed by the
/// moment engines (scaled by the kernel norm).
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MomentError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
    #[error("SizeMismatch: pairing covers {pairing} elements but kernels have total order {kernels}")]
    SizeMismatch { pairing: usize, kernels: usize },
    #[error("IndexOutOfRange: word entry {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("NotFullySymmetric: kernel #{0} is not fully symmetric")]
    NotFullySymmetric(usize),
    #[error("NotMirrorSymmetric: kernel is not mirror symmetric")]
    NotMirrorSymmetric,
    #[error("NotRespectful: the pairing does not respect the block structure")]
    NotRespectful,
    #[error("NotConnected: the pairing does not connect the blocks")]
    NotConnected,
    #[error("CrossingPairing: the pairing has a crossing")]
    CrossingPairing,
    #[error("TooFewBlocks: need at least 3 blocks, got {0}")]
    TooFewBlocks(usize),
    #[error("NotPSD: covariance matrix is not positive semidefinite")]
    NotPSD,
    #[error("InvalidCovariance: {0}")]
    InvalidCovariance(String),
}

/// Symmetric positive-semidefinite covariance matrix `c(i, j)`, 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CovarianceFile", into = "CovarianceFile")]
pub struct CovarianceMatrix {
    entries: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct CovarianceFile {
    entries: Vec<Vec<f64>>,
}

impl TryFrom<CovarianceFile> for CovarianceMatrix {
    type Error = MomentError;
    fn try_from(f: CovarianceFile) -> Result<Self, MomentError> {
        CovarianceMatrix::new(f.entries)
    }
}

impl From<CovarianceMatrix> for CovarianceFile {
    fn from(c: CovarianceMatrix) -> Self {
        CovarianceFile { entries: c.entries }
    }
}

impl CovarianceMatrix {
    /// Validates squareness, symmetry (within 1e-12) and positive
    /// semidefiniteness (smallest eigenvalue ≥ −1e−10, probed by a pivoted
    /// Cholesky with tolerance).
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self, MomentError> {
        let d = entries.len();
        if d == 0 {
            return Err(MomentError::InvalidCovariance("empty matrix".into()));
        }
        for row in &entries {
            if row.len() != d {
                return Err(MomentError::InvalidCovariance("matrix is not square".into()));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(MomentError::InvalidCovariance("non-finite entry".into()));
            }
        }
        let scale = entries
            .iter()
            .flatten()
            .fold(1.0f64, |m, &x| m.max(x.abs()));
        for i in 0..d {
            for j in i + 1..d {
                if (entries[i][j] - entries[j][i]).abs() > 1e-12 * scale {
                    return Err(MomentError::InvalidCovariance(format!(
                        "asymmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let c = Self { entries };
        c.cholesky_factor()?; // PSD probe
        Ok(c)
    }

    pub fn identity(d: usize) -> Self {
        let entries = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    /// Entry `c(i, j)` with 1-based indices.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i - 1][j - 1]
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// Pivoted Cholesky factor `L` with `c = L · Lᵀ` up to the pivot
    /// tolerance; tolerates rank deficiency. Fails with `NotPSD` when a
    /// residual diagonal drops below −1e−10.
    pub fn cholesky_factor(&self) -> Result<Vec<Vec<f64>>, MomentError> {
        let d = self.dim();
        let tol = 1e-10
            * self
                .entries
                .iter()
                .flatten()
                .fold(1.0f64, |m, &x| m.max(x.abs()));
        let mut perm: Vec<usize> = (0..d).collect();
        let mut diag: Vec<f64> = (0..d).map(|i| self.entries[i][i]).collect();
        // factor rows keyed by original indices, so pivot swaps stay cheap
        let mut lo = vec![vec![0.0; d]; d];
        for k in 0..d {
            // choose the largest residual diagonal
            let piv = (k..d)
                .max_by(|&a, &b| diag[perm[a]].total_cmp(&diag[perm[b]]))
                .unwrap();
            let dmax = diag[perm[piv]];
            if dmax < -tol {
                return Err(MomentError::NotPSD);
            }
            if dmax <= tol {
                // remaining block is numerically zero; reject if anything is negative
                if (k..d).any(|j| diag[perm[j]] < -tol) {
                    return Err(MomentError::NotPSD);
                }
                break;
            }
            perm.swap(k, piv);
            let pk = perm[k];
            let lkk = dmax.sqrt();
            lo[pk][k] = lkk;
            for i in k + 1..d {
                let pi = perm[i];
                let mut v = self.entries[pi][pk];
                for j in 0..k {
                    v -= lo[pi][j] * lo[pk][j];
                }
                let lik = v / lkk;
                lo[pi][k] = lik;
                diag[pi] -= lik * lik;
            }
        }
        Ok(lo)
    }
}

/// Which diagram sum a report came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Free,
    Classical,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EngineKind::Free => write!(f, "free"),
            EngineKind::Classical => write!(f, "classical"),
        }
    }
}

/// A joint-moment query: `d` kernels on a shared grid and an index word over
/// `{1, …, d}` selecting the factors.
#[derive(Debug, Clone)]
pub struct MomentRequest<'a> {
    kernels: Vec<&'a StepKernel>,
    word: Vec<usize>,
}

impl<'a> MomentRequest<'a> {
    pub fn new(
        kernels: impl IntoIterator<Item = &'a StepKernel>,
        word: Vec<usize>,
    ) -> Result<Self, MomentError> {
        let kernels: Vec<&StepKernel> = kernels.into_iter().collect();
        let d = kernels.len();
        for pair in kernels.windows(2) {
            if pair[0].grid() != pair[1].grid() {
                return Err(KernelError::GridMismatch.into());
            }
        }
        for &i in &word {
            if i == 0 || i > d {
                return Err(MomentError::IndexOutOfRange { index: i, d });
            }
        }
        Ok(Self { kernels, word })
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    pub fn kernels(&self) -> &[&'a StepKernel] {
        &self.kernels
    }
}

/// Outcome of a joint-moment evaluation: the total, the per-pairing
/// contributions (totals always equal their sum), and any warnings.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub engine: EngineKind,
    pub word: Vec<usize>,
    pub block_structure: BlockStructure,
    pub total: Complex64,
    pub contributions: Vec<(Pairing, Complex64)>,
    pub warnings: Vec<String>,
}

impl MomentReport {
    pub fn to_json(&self, include_contributions: bool) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "engine": self.engine,
            "word": self.word,
            "block_structure": self.block_structure.sizes(),
            "total": {"re": self.total.re, "im": self.total.im},
            "num_pairings": self.contributions.len(),
            "warnings": self.warnings,
        });
        if include_contributions {
            obj["contributions"] = serde_json::Value::Array(
                self.contributions
                    .iter()
                    .map(|(p, v)| {
                        serde_json::json!({
                            "pairs": p.pairs(),
                            "re": v.re,
                            "im": v.im,
                        })
                    })
                    .collect(),
            );
        }
        obj
    }
}

/// Transition plan of one kernel inside the frontier sweep.
struct KernelPlan {
    /// local positions that must carry equal cell indices (both pair endpoints inside)
    intra: Vec<(usize, usize)>,
    /// (local position, position in the incoming frontier key) for pairs closed here
    closing: Vec<(usize, usize)>,
    /// how to build the outgoing key, one source per open pair
    next_sources: Vec<KeySource>,
}

enum KeySource {
    Carry(usize),
    Open(usize),
}

fn validate_pairing_inputs(
    kernels: &[&StepKernel],
    pi: &Pairing,
) -> Result<usize, MomentError> {
    for pair in kernels.windows(2) {
        if pair[0].grid() != pair[1].grid() {
            return Err(KernelError::GridMismatch.into());
        }
    }
    let n: usize = kernels.iter().map(|k| k.order()).sum();
    if pi.n() != n {
        return Err(MomentError::SizeMismatch {
            pairing: pi.n(),
            kernels: n,
        });
    }
    Ok(n)
}

/// Evaluates the pairing integral `∫_π f_1 ⊗ … ⊗ f_r`: the tensor product is
/// integrated against delta functions identifying the argument slots paired
/// by `π`. On step kernels this is the exact finite sum
/// `Δ^{n/2} · Σ (one cell per pair) Π_q f_q[…]`.
///
/// The sum is organized as a left-to-right sweep holding a sparse frontier
/// over the pairs that are open across the current kernel boundary; for
/// non-crossing pairings this closes innermost pairs first, and it remains
/// exact for crossing pairings. Deterministic: the frontier and coefficient
/// maps are iterated in lexicographic order.
pub fn pairing_integral(
    kernels: &[&StepKernel],
    pi: &Pairing,
) -> Result<Complex64, MomentError> {
    let n = validate_pairing_inputs(kernels, pi)?;
    let partner = pi.partner_map();
    let mut pair_id = vec![usize::MAX; n + 1];
    for (id, &(a, b)) in pi.pairs().iter().enumerate() {
        pair_id[a] = id;
        pair_id[b] = id;
    }
    // slot ranges per kernel, 1-based inclusive ends
    let mut ends = Vec::with_capacity(kernels.len());
    let mut acc = 0usize;
    for k in kernels {
        acc += k.order();
        ends.push(acc);
    }
    let open_ids = |end: usize| -> Vec<usize> {
        pi.pairs()
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a <= end && end < b)
            .map(|(id, _)| id)
            .collect()
    };

    let mut frontier: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
    frontier.insert(Vec::new(), Complex64::new(1.0, 0.0));
    let mut prev_open: Vec<usize> = Vec::new();

    for (q, kern) in kernels.iter().enumerate() {
        let end = ends[q];
        let start = end - kern.order() + 1;
        let next_open = open_ids(end);

        let mut plan = KernelPlan {
            intra: Vec::new(),
            closing: Vec::new(),
            next_sources: Vec::with_capacity(next_open.len()),
        };
        for s in start..=end {
            let p = partner[s];
            let local = s - start;
            if p >= start && p <= end {
                if s < p {
                    plan.intra.push((local, p - start));
                }
            } else if p < start {
                let pos = prev_open
                    .iter()
                    .position(|&id| id == pair_id[s])
                    .expect("closing pair must be open");
                plan.closing.push((local, pos));
            }
        }
        for &id in &next_open {
            match prev_open.iter().position(|&x| x == id) {
                Some(pos) => plan.next_sources.push(KeySource::Carry(pos)),
                None => {
                    // newly opened: its smaller endpoint lies in this kernel
                    let (a, _) = pi.pairs()[id];
                    plan.next_sources.push(KeySource::Open(a - start));
                }
            }
        }

        let mut next: BTreeMap<Vec<usize>, Complex64> = BTreeMap::new();
        for (key, weight) in &frontier {
            'coeff: for (idx, value) in kern.coeffs() {
                for &(i, j) in &plan.intra {
                    if idx[i] != idx[j] {
                        continue 'coeff;
                    }
                }
                for &(i, pos) in &plan.closing {
                    if idx[i] != key[pos] {
                        continue 'coeff;
                    }
                }
                let new_key: Vec<usize> = plan
                    .next_sources
                    .iter()
                    .map(|s| match *s {
                        KeySource::Carry(pos) => key[pos],
                        KeySource::Open(local) => idx[local],
                    })
                    .collect();
                *next.entry(new_key).or_insert_with(|| Complex64::new(0.0, 0.0)) +=
                    weight * value;
            }
        }
        frontier = next;
        prev_open = next_open;
        if frontier.is_empty() {
            break;
        }
    }

    let raw = frontier
        .get(&Vec::new())
        .copied()
        .unwrap_or_else(|| Complex64::new(0.0, 0.0));
    let delta = kernels
        .first()
        .map(|k| k.grid().delta())
        .unwrap_or(1.0);
    Ok(raw * delta.powi((n / 2) as i32))
}

/// Reference evaluator for [`pairing_integral`]: sums over one grid cell per
/// pair directly. Exponential in the number of pairs; kept as an independent
/// cross-check.
pub fn pairing_integral_naive(
    kernels: &[&StepKernel],
    pi: &Pairing,
) -> Result<Complex64, MomentError> {
    let n = validate_pairing_inputs(kernels, pi)?;
    let mut pair_id = vec![usize::MAX; n + 1];
    for (id, &(a, b)) in pi.pairs().iter().enumerate() {
        pair_id[a] = id;
        pair_id[b] = id;
    }
    let cells = kernels.first().map(|k| k.grid().cells()).unwrap_or(1);
    let delta = kernels.first().map(|k| k.grid().delta()).unwrap_or(1.0);
    let np = pi.pairs().len();
    let mut assign = vec![0usize; np];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut product = Complex64::new(1.0, 0.0);
        let mut slot = 1usize;
        for kern in kernels {
            let idx: Vec<usize> = (0..kern.order())
                .map(|i| assign[pair_id[slot + i]])
                .collect();
            slot += kern.order();
            product *= kern.coeff(&idx);
            if product.re == 0.0 && product.im == 0.0 {
                break;
            }
        }
        total += product;
        // mixed-radix increment over the pair assignments
        let mut axis = np;
        loop {
            if axis == 0 {
                return Ok(total * delta.powi(np as i32));
            }
            axis -= 1;
            assign[axis] += 1;
            if assign[axis] < cells {
                break;
            }
            assign[axis] = 0;
        }
    }
}

/// Lexicographically least cyclic rotation offset of `word`.
fn least_rotation(word: &[usize]) -> usize {
    let r = word.len();
    let mut best = 0;
    for cand in 1..r {
        for t in 0..r {
            let a = word[(cand + t) % r];
            let b = word[(best + t) % r];
            if a != b {
                if a < b {
                    best = cand;
                }
                break;
            }
        }
    }
    best
}

fn joint_moment(req: &MomentRequest, engine: EngineKind) -> Result<MomentReport, MomentError> {
    let mut warnings = Vec::new();
    // symmetry policy: hard requirement for the classical diagram formula,
    // advisory for the free engine
    let mut used: Vec<usize> = req.word.clone();
    used.sort_unstable();
    used.dedup();
    for &i in &used {
        let k = req.kernels[i - 1];
        let tol = SYMMETRY_TOL * k.norm();
        match engine {
            EngineKind::Classical => {
                if !k.is_fully_symmetric(tol) {
                    return Err(MomentError::NotFullySymmetric(i));
                }
            }
            EngineKind::Free => {
                if !k.is_mirror_symmetric(tol) {
                    warnings.push(format!(
                        "kernel #{i} is not mirror symmetric; the integral it represents is not self-adjoint"
                    ));
                }
            }
        }
    }

    // order-0 kernels are scalars and factor out of the moment
    let mut scalar = Complex64::new(1.0, 0.0);
    let mut reduced: Vec<usize> = Vec::with_capacity(req.word.len());
    for &i in &req.word {
        let k = req.kernels[i - 1];
        if k.order() == 0 {
            scalar *= k.coeff(&[]);
        } else {
            reduced.push(i);
        }
    }
    let sizes: Vec<usize> = reduced.iter().map(|&i| req.kernels[i - 1].order()).collect();
    let block_structure = BlockStructure::new(sizes.clone())?;
    let n: usize = sizes.iter().sum();

    if reduced.is_empty() {
        // a product of scalars; represent it as the empty-pairing contribution
        return Ok(MomentReport {
            engine,
            word: req.word.clone(),
            block_structure,
            total: scalar,
            contributions: vec![(Pairing::new(vec![])?, scalar)],
            warnings,
        });
    }
    if n % 2 == 1 {
        return Ok(MomentReport {
            engine,
            word: req.word.clone(),
            block_structure,
            total: Complex64::new(0.0, 0.0),
            contributions: Vec::new(),
            warnings,
        });
    }

    // canonical rotation: totals become exactly invariant under cyclic
    // rotations of the word
    let r = reduced.len();
    let rot = least_rotation(&reduced);
    let rotated: Vec<usize> = (0..r).map(|t| reduced[(t + rot) % r]).collect();
    let rot_sizes: Vec<usize> = (0..r).map(|t| sizes[(t + rot) % r]).collect();
    let rot_blocks = BlockStructure::new(rot_sizes)?;
    let rot_kernels: Vec<&StepKernel> = rotated.iter().map(|&i| req.kernels[i - 1]).collect();

    // map rotated element labels back to the unrotated ground set
    let mut orig_of: Vec<usize> = Vec::with_capacity(n + 1);
    orig_of.push(0);
    for t in 0..r {
        orig_of.extend(block_structure.block_range((t + rot) % r + 1));
    }

    let enumerator = match engine {
        EngineKind::Free => enumerate_respectful_nc(&rot_blocks)?,
        EngineKind::Classical => enumerate_respectful_pairings(&rot_blocks)?,
    };
    let mut total = Complex64::new(0.0, 0.0);
    let mut contributions = Vec::new();
    for pi in enumerator {
        let v = scalar * pairing_integral(&rot_kernels, &pi)?;
        total += v;
        let relabeled = Pairing::new(
            pi.pairs()
                .iter()
                .map(|&(a, b)| (orig_of[a], orig_of[b]))
                .collect(),
        )?;
        contributions.push((relabeled, v));
    }
    contributions.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(MomentReport {
        engine,
        word: req.word.clone(),
        block_structure,
        total,
        contributions,
        warnings,
    })
}

/// Free joint moment: the sum of pairing integrals over all respectful
/// non-crossing pairings. The empty word gives 1 (the trace of the unit);
/// odd total degree gives 0 with no contributions.
pub fn free_joint_moment(req: &MomentRequest) -> Result<MomentReport, MomentError> {
    joint_moment(req, EngineKind::Free)
}

/// Classical joint moment: the diagram-formula sum over all respectful
/// pairings, crossings included. Every kernel referenced by the word must be
/// fully symmetric; no symmetrization is performed implicitly.
pub fn classical_joint_moment(req: &MomentRequest) -> Result<MomentReport, MomentError> {
    joint_moment(req, EngineKind::Classical)
}

/// Joint moment of a semicircular family with covariance `c`:
/// `Σ_{π ∈ NC₂(r)} Π_{{a,b} ∈ π} c(i_a, i_b)`.
pub fn semicircular_family_moment(
    c: &CovarianceMatrix,
    word: &[usize],
) -> Result<f64, MomentError> {
    family_moment(c, word, true)
}

/// Joint moment of a centered Gaussian family with covariance `c` (the Wick
/// formula): the same sum over all pairings of `[r]`.
pub fn gaussian_family_moment(c: &CovarianceMatrix, word: &[usize]) -> Result<f64, MomentError> {
    family_moment(c, word, false)
}

fn family_moment(
    c: &CovarianceMatrix,
    word: &[usize],
    noncrossing_only: bool,
) -> Result<f64, MomentError> {
    for &i in word {
        if i == 0 || i > c.dim() {
            return Err(MomentError::IndexOutOfRange {
                index: i,
                d: c.dim(),
            });
        }
    }
    let r = word.len();
    if r == 0 {
        return Ok(1.0);
    }
    if r % 2 == 1 {
        return Ok(0.0);
    }
    let enumerator = if noncrossing_only {
        enumerate_nc_pairings(r)?
    } else {
        enumerate_pairings(r)?
    };
    let mut total = 0.0;
    for pi in enumerator {
        let mut prod = 1.0;
        for &(a, b) in pi.pairs() {
            prod *= c.get(word[a - 1], word[b - 1]);
        }
        total += prod;
    }
    Ok(total)
}

/// Moment of the semicircular law with variance `t`: zero for odd orders,
/// `C_m · t^m` for order `2m`.
///
/// # Panics
/// Panics for orders above 60 (the Catalan numbers leave the exact range).
pub fn semicircular_moment(t: f64, order: usize) -> f64 {
    debug_assert!(t > 0.0);
    if order % 2 == 1 {
        return 0.0;
    }
    let m = order / 2;
    assert!(m <= 30, "semicircular moments supported up to order 60");
    catalan(m as u32).expect("guarded") as f64 * t.powi(m as i32)
}

/// The fourth-moment diagnostic `φ[I(f)⁴] − 2·(φ[I(f)²])²`: zero exactly when
/// the integral is semicircular, nonnegative for mirror-symmetric kernels.
pub fn fourth_moment_gap(f: &StepKernel) -> Result<f64, MomentError> {
    if !f.is_mirror_symmetric(SYMMETRY_TOL * f.norm()) {
        return Err(MomentError::NotMirrorSymmetric);
    }
    let kernels = [f];
    let m2 = joint_moment(
        &MomentRequest::new(kernels.iter().copied(), vec![1, 1])?,
        EngineKind::Free,
    )?
    .total;
    let m4 = joint_moment(
        &MomentRequest::new(kernels.iter().copied(), vec![1, 1, 1, 1])?,
        EngineKind::Free,
    )?
    .total;
    let gap = m4.re - 2.0 * m2.re * m2.re;
    debug_assert!(gap >= -1e-10, "fourth-moment gap {gap} unexpectedly negative");
    Ok(gap)
}

/// The self-contraction norms `(‖f ⌢p f‖)` for `p = 1, …, n−1`; empty for
/// orders below 2. These vanish in the limit exactly when the integrals
/// become semicircular.
pub fn contraction_norms(f: &StepKernel) -> Vec<f64> {
    let n = f.order();
    if n < 2 {
        return Vec::new();
    }
    (1..n)
        .map(|p| f.contract(f, p).expect("self contraction is always valid").norm())
        .collect()
}

/// A connected pairing integral together with its contraction majorant.
#[derive(Debug, Clone, Serialize)]
pub struct ConnectedBound {
    pub value_re: f64,
    pub value_im: f64,
    pub bound: f64,
}

impl ConnectedBound {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.value_re, self.value_im)
    }
}

/// Evaluates `∫_π` for a connected respectful non-crossing pairing on at
/// least three blocks, together with the majorant
/// `min ‖f_q ⌢p f_{q'}‖ · Π_{others} ‖f_l‖` over cyclically adjacent block
/// pairs `(q, q')` whose linking contraction is nontrivial (`0 < 2p < n_q + n_{q'}`).
/// All rotations are tried and the smallest bound reported; the integral
/// never exceeds it (up to 1e−10).
pub fn connected_integral_bound(
    kernels: &[&StepKernel],
    pi: &Pairing,
    blocks: &BlockStructure,
) -> Result<ConnectedBound, MomentError> {
    let r = blocks.len();
    if r < 3 {
        return Err(MomentError::TooFewBlocks(r));
    }
    if kernels.len() != r
        || kernels
            .iter()
            .zip(blocks.sizes())
            .any(|(k, &s)| k.order() != s)
    {
        return Err(MomentError::SizeMismatch {
            pairing: pi.n(),
            kernels: kernels.iter().map(|k| k.order()).sum(),
        });
    }
    if !pi.respects(blocks)? {
        return Err(MomentError::NotRespectful);
    }
    if !pi.is_noncrossing() {
        return Err(MomentError::CrossingPairing);
    }
    if !pi.is_connected(blocks)? {
        return Err(MomentError::NotConnected);
    }

    let value = pairing_integral(kernels, pi)?;
    let norms: Vec<f64> = kernels.iter().map(|k| k.norm()).collect();
    let partner = pi.partner_map();
    let mut bound = f64::INFINITY;
    for q in 0..r {
        let q2 = (q + 1) % r;
        let links = blocks
            .block_range(q + 1)
            .filter(|&e| blocks.block_of(partner[e]) == q2 + 1)
            .count();
        let (nq, nq2) = (blocks.sizes()[q], blocks.sizes()[q2]);
        if links >= 1 && 2 * links < nq + nq2 {
            let contracted = kernels[q].contract(kernels[q2], links)?;
            let rest: f64 = (0..r)
                .filter(|&l| l != q && l != q2)
                .map(|l| norms[l])
                .product();
            bound = bound.min(contracted.norm() * rest);
        }
    }
    // a connected pairing on ≥ 3 blocks always has a nontrivially linked
    // adjacent pair (an innermost pair of consecutive elements provides one)
    debug_assert!(bound.is_finite());
    debug_assert!(
        value.norm() <= bound + 1e-10,
        "pairing integral {value} exceeds its contraction bound {bound}"
    );
    Ok(ConnectedBound {
        value_re: value.re,
        value_im: value.im,
        bound,
    })
}
