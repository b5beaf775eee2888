//! Noncrossing partitions of `{1..n}`: enumeration, refinement order and the
//! Kreweras complement.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest ground set accepted by [`enumerate_nc`].
pub const MAX_N: usize = 16;
/// Enumerations up to this size are memoised by [`nc_cached`].
pub const CACHE_N: usize = 12;

/// A noncrossing partition in canonical form: blocks sorted ascending and
/// ordered by their minima, elements are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NcPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct RawPartition {
    n: usize,
    blocks: Vec<Vec<usize>>,
}

impl<'de> Deserialize<'de> for NcPartition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawPartition::deserialize(d)?;
        NcPartition::new(raw.n, raw.blocks).map_err(serde::de::Error::custom)
    }
}

impl NcPartition {
    /// Validates and canonicalises `blocks`.
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let blocks = canonical_set_partition(n, blocks)?;
        if !blocks_noncrossing(&blocks) {
            return Err(Error::Malformed("partition has a crossing".into()));
        }
        Ok(NcPartition { n, blocks })
    }

    fn from_canonical(n: usize, blocks: Vec<Vec<usize>>) -> Self {
        NcPartition { n, blocks }
    }

    pub fn singletons(n: usize) -> Self {
        NcPartition { n, blocks: (1..=n).map(|i| vec![i]).collect() }
    }

    pub fn one_block(n: usize) -> Self {
        NcPartition { n, blocks: vec![(1..=n).collect()] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    /// Number of blocks, written |π|.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn is_one_block(&self) -> bool {
        self.blocks.len() == 1
    }

    /// `label[i-1]` is the index of the block containing `i`.
    pub fn block_labels(&self) -> Vec<usize> {
        let mut label = vec![0; self.n];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                label[i - 1] = b;
            }
        }
        label
    }

    /// The partition as a permutation: each block is a cycle traversed in
    /// increasing order. `perm[i-1]` is the image of `i` (1-based).
    fn as_permutation(&self) -> Vec<usize> {
        let mut perm = vec![0; self.n];
        for block in &self.blocks {
            for (k, &i) in block.iter().enumerate() {
                perm[i - 1] = block[(k + 1) % block.len()];
            }
        }
        perm
    }

    fn from_permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for start in 1..=n {
            if seen[start - 1] {
                continue;
            }
            let mut block = Vec::new();
            let mut i = start;
            while !seen[i - 1] {
                seen[i - 1] = true;
                block.push(i);
                i = perm[i - 1];
            }
            block.sort_unstable();
            blocks.push(block);
        }
        NcPartition { n, blocks }
    }

    /// Relabels every element through `f` (a bijection of `{1..n}`).
    pub fn relabel(&self, f: impl Fn(usize) -> usize) -> Self {
        let blocks = self.blocks.iter().map(|b| b.iter().map(|&i| f(i)).collect()).collect();
        let blocks = canonical_set_partition(self.n, blocks).expect("relabel by a bijection");
        NcPartition { n: self.n, blocks }
    }

    /// Image under the cyclic rotation `i -> i-1`, with `1 -> n`.
    pub fn rotate_down(&self) -> Self {
        let n = self.n;
        self.relabel(|i| if i == 1 { n } else { i - 1 })
    }
}

fn canonical_set_partition(n: usize, mut blocks: Vec<Vec<usize>>) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; n];
    for block in &mut blocks {
        if block.is_empty() {
            return Err(Error::Malformed("empty block".into()));
        }
        block.sort_unstable();
        for &i in block.iter() {
            if i < 1 || i > n {
                return Err(Error::Malformed(format!("element {i} outside 1..{n}")));
            }
            if seen[i - 1] {
                return Err(Error::Malformed(format!("element {i} appears twice")));
            }
            seen[i - 1] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Malformed(format!("element {} not covered", missing + 1)));
    }
    blocks.sort_by_key(|b| b[0]);
    Ok(blocks)
}

fn blocks_noncrossing(blocks: &[Vec<usize>]) -> bool {
    // a crossing s1<t1<s2<t2 exists iff some block W meets the open interval
    // between two consecutive elements of V and also lies outside it
    for (v_idx, v) in blocks.iter().enumerate() {
        for pair in v.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            for (w_idx, w) in blocks.iter().enumerate() {
                if w_idx == v_idx {
                    continue;
                }
                let inside = w.iter().any(|&t| lo < t && t < hi);
                let outside = w.iter().any(|&t| t < lo || t > hi);
                if inside && outside {
                    return false;
                }
            }
        }
    }
    true
}

/// Checks that `blocks` is a set partition of `{1..n}` without crossings.
pub fn is_noncrossing(n: usize, blocks: &[Vec<usize>]) -> Result<bool> {
    let canon = canonical_set_partition(n, blocks.to_vec())?;
    Ok(blocks_noncrossing(&canon))
}

/// All of NC(n) in lexicographic order of canonical block lists.
pub fn enumerate_nc(n: usize) -> Result<Vec<NcPartition>> {
    if n < 1 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if n > MAX_N {
        return Err(Error::SizeLimit(format!("n = {n} exceeds {MAX_N}")));
    }
    let mut out: Vec<NcPartition> = nc_blocks(1, n)
        .into_iter()
        .map(|b| NcPartition::from_canonical(n, b))
        .collect();
    out.sort();
    Ok(out)
}

/// Memoised enumeration for `n <= CACHE_N`.
pub fn nc_cached(n: usize) -> Result<Arc<Vec<NcPartition>>> {
    static CACHE: [OnceLock<Arc<Vec<NcPartition>>>; CACHE_N + 1] = [const { OnceLock::new() }; CACHE_N + 1];
    if (1..=CACHE_N).contains(&n) {
        return Ok(CACHE[n].get_or_init(|| Arc::new(enumerate_nc(n).expect("n in range"))).clone());
    }
    enumerate_nc(n).map(Arc::new)
}

/// Noncrossing partitions of the interval `lo..=hi` (empty when `lo > hi`).
fn nc_blocks(lo: usize, hi: usize) -> Vec<Vec<Vec<usize>>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    // the block of `lo` is {lo = v1 < ... < vs}; the gaps between consecutive
    // elements and the tail after vs are partitioned independently
    let mut out = Vec::new();
    let rest: Vec<usize> = (lo + 1..=hi).collect();
    for mask in 0u32..(1u32 << rest.len()) {
        let mut first = vec![lo];
        first.extend(rest.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &v)| v));
        let mut segments: Vec<(usize, usize)> = first.windows(2).map(|w| (w[0] + 1, w[1] - 1)).collect();
        segments.push((*first.last().unwrap() + 1, hi));
        let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![first.clone()]];
        for &(a, b) in &segments {
            if a > b {
                continue;
            }
            let sub = nc_blocks(a, b);
            let mut next = Vec::with_capacity(partial.len() * sub.len());
            for p in &partial {
                for s in &sub {
                    let mut q = p.clone();
                    q.extend(s.iter().cloned());
                    next.push(q);
                }
            }
            partial = next;
        }
        for mut p in partial {
            p.sort_by_key(|b| b[0]);
            out.push(p);
        }
    }
    out
}

/// Reverse refinement order: every block of `sigma` lies inside a block of `pi`.
pub fn refinement_leq(sigma: &NcPartition, pi: &NcPartition) -> Result<bool> {
    if sigma.n != pi.n {
        return Err(Error::ShapeMismatch(format!("ground sets {} and {}", sigma.n, pi.n)));
    }
    let label = pi.block_labels();
    Ok(sigma.blocks.iter().all(|b| b.iter().all(|&i| label[i - 1] == label[b[0] - 1])))
}

/// Kreweras complement, computed as the permutation `π⁻¹ γ` with
/// `γ = (1 2 … n)`.
pub fn kreweras(pi: &NcPartition) -> NcPartition {
    let n = pi.n;
    let perm = pi.as_permutation();
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p - 1] = i + 1;
    }
    let k: Vec<usize> = (1..=n).map(|i| inv[(i % n + 1) - 1]).collect();
    NcPartition::from_permutation(&k)
}

/// Inverse of [`kreweras`]: the σ with `kreweras(σ) == π`.
pub fn kreweras_inverse(pi: &NcPartition) -> NcPartition {
    // K(σ) = σ⁻¹γ = π gives σ = γπ⁻¹
    let n = pi.n;
    let perm = pi.as_permutation();
    let mut inv = vec![0; n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p - 1] = i + 1;
    }
    let sigma: Vec<usize> = (1..=n).map(|i| inv[i - 1] % n + 1).collect();
    NcPartition::from_permutation(&sigma)
}

/// n-th Catalan number.
pub fn catalan(n: usize) -> u128 {
    let mut c: u128 = 1;
    for k in 0..n as u128 {
        c = c * 2 * (2 * k + 1) / (k + 2);
    }
    c
}
