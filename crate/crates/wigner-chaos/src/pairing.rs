//! Pairings of `[n] = {1, …, n}` and their combinatorics: crossing detection,
//! block structures, link graphs, connected decompositions, and streaming
//! enumerators for full and non-crossing pairings.
//!
//! Elements and block indices are 1-based in all public structures. Pairings
//! are kept in canonical form: each pair stored `(min, max)`, pairs sorted by
//! first element. Enumeration is deterministic and lexicographic over the
//! canonical form.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use thiserror::Error;

/// Hard cap on the ground-set size for full pairing enumeration.
pub const FULL_ENUMERATION_GUARD: usize = 20;
/// Hard cap on the ground-set size for non-crossing enumeration.
pub const NONCROSSING_ENUMERATION_GUARD: usize = 32;
/// Largest admissible argument of [`catalan`].
pub const CATALAN_GUARD: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairingError {
    #[error("OddSize: cannot pair a ground set of odd size {0}")]
    OddSize(usize),
    #[error("SizeGuardExceeded: ground set of size {n} exceeds the enumeration guard {guard}")]
    SizeGuardExceeded { n: usize, guard: usize },
    #[error("SizeMismatch: block structure covers {expected} elements, pairing covers {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("NotRespectful: a pair lies inside a single block")]
    NotRespectful,
    #[error("Overflow: catalan({0}) exceeds the supported range (max {CATALAN_GUARD})")]
    Overflow(u32),
    #[error("InvalidPairing: {0}")]
    InvalidPairing(String),
    #[error("InvalidBlocks: {0}")]
    InvalidBlocks(String),
}

/// A perfect matching of `{1, …, n}` in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pairing {
    pairs: Vec<(usize, usize)>,
}

impl Pairing {
    /// Builds a pairing from unordered pairs, canonicalizing as it goes.
    /// The pairs must cover `{1, …, 2p}` exactly once.
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, PairingError> {
        let n = 2 * pairs.len();
        let mut seen = vec![false; n + 1];
        let mut canon: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            if a == b {
                return Err(PairingError::InvalidPairing(format!(
                    "element {a} paired with itself"
                )));
            }
            for e in [a, b] {
                if e == 0 || e > n {
                    return Err(PairingError::InvalidPairing(format!(
                        "element {e} outside 1..={n}"
                    )));
                }
                if seen[e] {
                    return Err(PairingError::InvalidPairing(format!(
                        "element {e} appears twice"
                    )));
                }
                seen[e] = true;
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        Ok(Self { pairs: canon })
    }

    /// Internal constructor for pairs already in canonical order.
    fn from_canonical(pairs: Vec<(usize, usize)>) -> Self {
        debug_assert!(pairs.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(pairs.iter().all(|&(a, b)| a < b));
        Self { pairs }
    }

    /// Size of the ground set.
    pub fn n(&self) -> usize {
        2 * self.pairs.len()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Partner lookup table, 1-based; index 0 is unused.
    pub fn partner_map(&self) -> Vec<usize> {
        let mut partner = vec![0; self.n() + 1];
        for &(a, b) in &self.pairs {
            partner[a] = b;
            partner[b] = a;
        }
        partner
    }

    /// True iff no two pairs `{x1,y1}`, `{x2,y2}` interleave as `x1 < x2 < y1 < y2`.
    pub fn is_noncrossing(&self) -> bool {
        for (i, &(_, b1)) in self.pairs.iter().enumerate() {
            for &(a2, b2) in &self.pairs[i + 1..] {
                // canonical order gives a1 < a2
                if a2 < b1 && b1 < b2 {
                    return false;
                }
            }
        }
        true
    }

    /// True iff no pair lies inside a single block of `blocks`.
    pub fn respects(&self, blocks: &BlockStructure) -> Result<bool, PairingError> {
        if blocks.total() != self.n() {
            return Err(PairingError::SizeMismatch {
                expected: blocks.total(),
                actual: self.n(),
            });
        }
        Ok(self
            .pairs
            .iter()
            .all(|&(a, b)| blocks.block_of(a) != blocks.block_of(b)))
    }

    /// The graph on block indices with an edge wherever some pair links two blocks.
    pub fn link_graph(&self, blocks: &BlockStructure) -> Result<LinkGraph, PairingError> {
        if !self.respects(blocks)? {
            return Err(PairingError::NotRespectful);
        }
        let mut edges = BTreeSet::new();
        for &(a, b) in &self.pairs {
            let (p, q) = (blocks.block_of(a), blocks.block_of(b));
            edges.insert((p.min(q), p.max(q)));
        }
        Ok(LinkGraph {
            vertices: blocks.len(),
            edges,
        })
    }

    /// True iff the link graph is connected.
    pub fn is_connected(&self, blocks: &BlockStructure) -> Result<bool, PairingError> {
        Ok(self.link_graph(blocks)?.is_connected())
    }

    /// Splits the pairing along the connected components of its link graph.
    ///
    /// Each component is returned as the restriction of the pairing to the
    /// component's blocks, relabeled to a contiguous ground set, together with
    /// the (1-based, ascending) indices of those blocks. Components are ordered
    /// by their least block index; their union reconstructs the pairing.
    pub fn decompose_connected(
        &self,
        blocks: &BlockStructure,
    ) -> Result<Vec<(Pairing, Vec<usize>)>, PairingError> {
        let graph = self.link_graph(blocks)?;
        let comps = graph.components();
        let mut out = Vec::with_capacity(comps.len());
        for comp in comps {
            // relabel the elements of the component's blocks to 1..=len
            let mut relabel = vec![0usize; self.n() + 1];
            let mut next = 1;
            for &q in &comp {
                for e in blocks.block_range(q) {
                    relabel[e] = next;
                    next += 1;
                }
            }
            let mut sub: Vec<(usize, usize)> = self
                .pairs
                .iter()
                .filter(|&&(a, _)| relabel[a] != 0)
                .map(|&(a, b)| {
                    debug_assert!(relabel[b] != 0, "pair leaves its component");
                    (relabel[a].min(relabel[b]), relabel[a].max(relabel[b]))
                })
                .collect();
            sub.sort_unstable();
            out.push((Pairing::from_canonical(sub), comp));
        }
        Ok(out)
    }

    /// True iff every connected component links exactly two blocks, i.e. the
    /// pairing is a disjoint union of complete pairwise contractions.
    pub fn is_nc22(&self, blocks: &BlockStructure) -> Result<bool, PairingError> {
        Ok(self
            .decompose_connected(blocks)?
            .iter()
            .all(|(_, comp)| comp.len() == 2))
    }
}

impl std::fmt::Display for Pairing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.pairs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "({a},{b})")?;
        }
        write!(f, "}}")
    }
}

/// The interval partition `[n] = B_1 ⊔ … ⊔ B_r` induced by block sizes
/// `(n_1, …, n_r)`: `B_1 = {1,…,n_1}`, `B_2 = {n_1+1,…,n_1+n_2}`, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    sizes: Vec<usize>,
    #[serde(skip)]
    starts: Vec<usize>,
}

impl BlockStructure {
    /// All sizes must be positive. An empty list is the empty structure on zero elements.
    pub fn new(sizes: Vec<usize>) -> Result<Self, PairingError> {
        if sizes.iter().any(|&s| s == 0) {
            return Err(PairingError::InvalidBlocks(
                "block sizes must be positive".into(),
            ));
        }
        let mut starts = Vec::with_capacity(sizes.len());
        let mut acc = 1usize;
        for &s in &sizes {
            starts.push(acc);
            acc += s;
        }
        Ok(Self { sizes, starts })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    /// Total number of elements.
    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// 1-based block index of a 1-based element.
    pub fn block_of(&self, element: usize) -> usize {
        debug_assert!(element >= 1 && element <= self.total());
        match self.starts.binary_search(&element) {
            Ok(i) => i + 1,
            Err(i) => i,
        }
    }

    /// 1-based elements of block `q` (1-based), as an inclusive-start, exclusive-end range.
    pub fn block_range(&self, q: usize) -> std::ops::Range<usize> {
        let start = self.starts[q - 1];
        start..start + self.sizes[q - 1]
    }
}

/// Simple graph on block indices `1..=r` recording which blocks a pairing links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkGraph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl LinkGraph {
    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Connected components as sorted block-index lists, ordered by least member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let r = self.vertices;
        let mut root: Vec<usize> = (0..=r).collect();
        fn find(root: &mut Vec<usize>, mut x: usize) -> usize {
            while root[x] != x {
                root[x] = root[root[x]];
                x = root[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut root, a), find(&mut root, b));
            if ra != rb {
                let (lo, hi) = (ra.min(rb), ra.max(rb));
                root[hi] = lo;
            }
        }
        let mut comps: Vec<Vec<usize>> = Vec::new();
        let mut index_of: Vec<Option<usize>> = vec![None; r + 1];
        for q in 1..=r {
            let rep = find(&mut root, q);
            match index_of[rep] {
                Some(i) => comps[i].push(q),
                None => {
                    index_of[rep] = Some(comps.len());
                    comps.push(vec![q]);
                }
            }
        }
        comps
    }
}

/// Which pairings an enumerator emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EnumMode {
    All,
    NonCrossing,
}

/// Streaming enumerator over pairings of `[n]`, optionally restricted to
/// non-crossing pairings and to pairings respecting a block structure.
///
/// State is O(n); pairings are emitted in lexicographic order of their
/// canonical form. The search always extends the smallest free element, so
/// the choice stack is the canonical form itself.
#[derive(Debug, Clone)]
pub struct PairingEnumerator {
    n: usize,
    mode: EnumMode,
    blocks: Option<BlockStructure>,
    partner: Vec<usize>,
    stack: Vec<(usize, usize)>,
    fresh: bool,
}

impl PairingEnumerator {
    fn new(n: usize, mode: EnumMode, blocks: Option<BlockStructure>) -> Self {
        Self {
            n,
            mode,
            blocks,
            partner: vec![0; n + 1],
            stack: Vec::with_capacity(n / 2),
            fresh: true,
        }
    }

    fn complete(&self) -> bool {
        2 * self.stack.len() == self.n
    }

    fn smallest_free(&self) -> usize {
        (1..=self.n).find(|&e| self.partner[e] == 0).expect("free element")
    }

    /// Can `{a, b}` join the current partial matching?
    fn feasible(&self, a: usize, b: usize) -> bool {
        if let Some(blocks) = &self.blocks {
            if blocks.block_of(a) == blocks.block_of(b) {
                return false;
            }
        }
        if self.mode == EnumMode::NonCrossing {
            // No existing pair may cross {a,b}: every paired element strictly
            // inside (a,b) must have its partner inside too. The free elements
            // inside (a,b) must pair among themselves, so their count must be
            // even for the matching to complete.
            let mut free_inside = 0usize;
            for e in a + 1..b {
                let p = self.partner[e];
                if p == 0 {
                    free_inside += 1;
                } else if p <= a || p >= b {
                    return false;
                }
            }
            if free_inside % 2 != 0 {
                return false;
            }
        }
        true
    }

    /// Advances to the next complete matching; returns false when exhausted.
    fn advance(&mut self) -> bool {
        let mut resume: Option<(usize, usize)> = if self.fresh {
            self.fresh = false;
            if self.complete() {
                return true; // n == 0: the single empty pairing
            }
            None
        } else {
            match self.stack.pop() {
                Some((a, b)) => {
                    self.partner[a] = 0;
                    self.partner[b] = 0;
                    Some((a, b + 1))
                }
                None => return false,
            }
        };
        loop {
            let (a, b_start) = match resume.take() {
                Some(x) => x,
                None => {
                    let a = self.smallest_free();
                    (a, a + 1)
                }
            };
            let found = (b_start..=self.n)
                .find(|&b| self.partner[b] == 0 && self.feasible(a, b));
            match found {
                Some(b) => {
                    self.partner[a] = b;
                    self.partner[b] = a;
                    self.stack.push((a, b));
                    if self.complete() {
                        return true;
                    }
                }
                None => match self.stack.pop() {
                    Some((pa, pb)) => {
                        self.partner[pa] = 0;
                        self.partner[pb] = 0;
                        resume = Some((pa, pb + 1));
                    }
                    None => return false,
                },
            }
        }
    }
}

impl Iterator for PairingEnumerator {
    type Item = Pairing;

    fn next(&mut self) -> Option<Pairing> {
        if self.advance() {
            Some(Pairing::from_canonical(self.stack.clone()))
        } else {
            None
        }
    }
}

fn check_size(n: usize, guard: usize) -> Result<(), PairingError> {
    if n % 2 != 0 {
        return Err(PairingError::OddSize(n));
    }
    if n > guard {
        return Err(PairingError::SizeGuardExceeded { n, guard });
    }
    Ok(())
}

/// All `(n-1)!!` pairings of `[n]`, lexicographically.
pub fn enumerate_pairings(n: usize) -> Result<PairingEnumerator, PairingError> {
    check_size(n, FULL_ENUMERATION_GUARD)?;
    Ok(PairingEnumerator::new(n, EnumMode::All, None))
}

/// All non-crossing pairings of `[n]`, lexicographically; there are `C_{n/2}` of them.
pub fn enumerate_nc_pairings(n: usize) -> Result<PairingEnumerator, PairingError> {
    check_size(n, NONCROSSING_ENUMERATION_GUARD)?;
    Ok(PairingEnumerator::new(n, EnumMode::NonCrossing, None))
}

/// All pairings of `[n]` (crossings allowed) respecting `blocks`.
pub fn enumerate_respectful_pairings(
    blocks: &BlockStructure,
) -> Result<PairingEnumerator, PairingError> {
    let n = blocks.total();
    check_size(n, FULL_ENUMERATION_GUARD)?;
    Ok(PairingEnumerator::new(n, EnumMode::All, Some(blocks.clone())))
}

/// All non-crossing pairings respecting `blocks`. The pruned search emits
/// exactly the pairings that filtering [`enumerate_nc_pairings`] through
/// [`Pairing::respects`] would, in the same order.
pub fn enumerate_respectful_nc(
    blocks: &BlockStructure,
) -> Result<PairingEnumerator, PairingError> {
    let n = blocks.total();
    check_size(n, NONCROSSING_ENUMERATION_GUARD)?;
    Ok(PairingEnumerator::new(
        n,
        EnumMode::NonCrossing,
        Some(blocks.clone()),
    ))
}

/// Exact Catalan number `C_m = binom(2m, m) / (m+1)` for `m <= 30`.
pub fn catalan(m: u32) -> Result<u64, PairingError> {
    if m > CATALAN_GUARD {
        return Err(PairingError::Overflow(m));
    }
    let mut c: u128 = 1;
    for i in 0..m as u128 {
        c = c * 2 * (2 * i + 1) / (i + 2);
    }
    Ok(c as u64)
}

/// Double factorial `n!! = n (n-2) (n-4) …`, with `(-1)!! = 0!! = 1`.
pub fn double_factorial(n: usize) -> u128 {
    let mut acc: u128 = 1;
    let mut k = n as u128;
    while k > 1 {
        acc *= k;
        k -= 2;
    }
    acc
}
