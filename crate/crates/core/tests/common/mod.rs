//! Brute-force oracles shared by the integration tests. Nothing here uses
//! the crate's own combinatorics.

#![allow(dead_code)]

use freepoisson_core::{Complex64, Rational};
use num_traits::{One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Small random rational `p/q` with `|p| <= 6`, `1 <= q <= 5`.
pub fn rand_q(r: &mut impl Rng) -> Rational {
    q(r.gen_range(-6..=6), r.gen_range(1..=5))
}

pub fn rand_pos_q(r: &mut impl Rng) -> Rational {
    q(r.gen_range(1..=6), r.gen_range(1..=5))
}

pub fn rand_c(r: &mut impl Rng) -> Complex64 {
    Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

/// Every set partition of `{1..n}` as sorted blocks, from restricted
/// growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    let mut labels = vec![0usize; n];
    fn rec(i: usize, max: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        let n = labels.len();
        if i == n {
            let k = labels.iter().max().map_or(0, |m| m + 1);
            let mut blocks = vec![Vec::new(); k];
            for (pos, &l) in labels.iter().enumerate() {
                blocks[l].push(pos + 1);
            }
            out.push(blocks);
            return;
        }
        for l in 0..=max {
            labels[i] = l;
            rec(i + 1, if l == max { max + 1 } else { max }, labels, out);
        }
    }
    if n == 0 {
        return vec![Vec::new()];
    }
    rec(0, 0, &mut labels, &mut out);
    out
}

/// Crossing test straight from the definition: `a < b < c < d` with `a, c`
/// in one block and `b, d` in another.
pub fn crosses(blocks: &[Vec<usize>]) -> bool {
    let n: usize = blocks.iter().map(Vec::len).sum();
    let mut label = vec![0usize; n + 1];
    for (k, b) in blocks.iter().enumerate() {
        for &i in b {
            label[i] = k;
        }
    }
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                for d in c + 1..=n {
                    if label[a] == label[c] && label[b] == label[d] && label[a] != label[b] {
                        return true;
                    }
                }
            }
        }
    }
    false
}

pub fn brute_nc(n: usize) -> Vec<Vec<Vec<usize>>> {
    set_partitions(n).into_iter().filter(|p| !crosses(p)).collect()
}

/// `brute_nc(n)` for every `n <= max`.
pub fn brute_nc_upto(max: usize) -> Vec<Vec<Vec<Vec<usize>>>> {
    (0..=max).map(brute_nc).collect()
}

/// `Σ_{π} ∏_{V∈π} f(V)` over a list of partitions.
pub fn nc_sum<S: Clone + Zero + One + std::ops::Mul<Output = S>>(
    parts: &[Vec<Vec<usize>>],
    mut f: impl FnMut(&[usize]) -> S,
) -> S {
    let mut total = S::zero();
    for p in parts {
        let mut term = S::one();
        for b in p {
            term = term * f(b);
        }
        total = total + term;
    }
    total
}

/// Binomial coefficient as `u128`.
pub fn binom(n: u64, k: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}
