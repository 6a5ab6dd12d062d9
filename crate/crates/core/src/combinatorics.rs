//! Lexicographic ranking and unranking of k-subsets with exact big-integer counts.

use num_bigint::BigUint;
use num_traits::Zero;

use crate::error::{invalid, Result};
use crate::numeric::big_choose;

/// The `index`-th `m`-subset of `{0..n}` in lexicographic order.
pub fn unrank_subset(n: usize, m: usize, index: &BigUint) -> Result<Vec<usize>> {
    if m > n {
        return invalid(format!("subset size {m} exceeds ground set {n}"));
    }
    let total = big_choose(n as u64, m as u64);
    if index >= &total {
        return invalid(format!("rank {index} out of range for C({n},{m}) = {total}"));
    }
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return Ok(out);
    }
    let mut idx = index.clone();
    let mut r = m;
    // count = C(a, r-1): subsets whose next element is c, with a = n - c - 1 slots after c.
    let mut count = big_choose(n as u64 - 1, m as u64 - 1);
    for c in 0..n {
        let a = n - c - 1;
        if idx < count {
            out.push(c);
            r -= 1;
            if r == 0 {
                break;
            }
            count = count * (r as u64) / (a as u64);
        } else {
            idx -= &count;
            count = count * ((a + 1 - r) as u64) / (a as u64);
        }
    }
    debug_assert_eq!(out.len(), m);
    Ok(out)
}

/// Lexicographic rank of a sorted subset of `{0..n}`.
pub fn rank_subset(n: usize, subset: &[usize]) -> Result<BigUint> {
    let m = subset.len();
    if subset.windows(2).any(|w| w[0] >= w[1]) || subset.last().is_some_and(|&l| l >= n) {
        return invalid("subset must be strictly increasing and inside the ground set");
    }
    let mut rank = BigUint::zero();
    if m == 0 {
        return Ok(rank);
    }
    let mut r = m;
    let mut next = 0usize;
    let mut count = big_choose(n as u64 - 1, m as u64 - 1);
    for c in 0..n {
        let a = n - c - 1;
        if subset[next] == c {
            next += 1;
            r -= 1;
            if r == 0 {
                break;
            }
            count = count * (r as u64) / (a as u64);
        } else {
            rank += &count;
            count = count * ((a + 1 - r) as u64) / (a as u64);
        }
    }
    Ok(rank)
}
