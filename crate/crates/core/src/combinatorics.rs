//! Lexicographic ranking of k-subsets and permutations.
//!
//! Elements are 1-based throughout so the index sets read the same way as
//! antenna and frequency-offset numbers.

use crate::error::{Error, Result};

/// Binomial coefficient `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Exact at every step: acc * (n - i) is divisible by (i + 1).
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> u128 {
    (1..=u128::from(n)).product()
}

/// `floor(log2(v))` for `v >= 1`, zero for `v == 0`.
pub fn floor_log2(v: u128) -> u32 {
    if v == 0 {
        0
    } else {
        127 - v.leading_zeros()
    }
}

/// The `rank`-th k-subset of `{1..=n}` in lexicographic order.
pub fn unrank_combination(rank: u128, n: usize, k: usize) -> Result<Vec<usize>> {
    let total = binomial(n as u64, k as u64);
    if rank >= total {
        return Err(Error::RankOutOfRange { rank, limit: total });
    }
    let mut out = Vec::with_capacity(k);
    let mut remaining = rank;
    let mut next = 1usize;
    for slot in 0..k {
        let left = k - slot - 1;
        loop {
            // Subsets that start this slot with `next`.
            let block = binomial((n - next) as u64, left as u64);
            if remaining < block {
                break;
            }
            remaining -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    Ok(out)
}

/// Inverse of [`unrank_combination`]. `set` must be strictly increasing.
pub fn rank_combination(set: &[usize], n: usize) -> Result<u128> {
    let k = set.len();
    if set.windows(2).any(|w| w[0] >= w[1]) || set.iter().any(|&e| e == 0 || e > n) {
        return Err(Error::Domain {
            func: "rank_combination",
            detail: format!("{set:?} is not an increasing subset of 1..={n}"),
        });
    }
    let mut rank = 0u128;
    let mut prev = 0usize;
    for (slot, &e) in set.iter().enumerate() {
        let left = (k - slot - 1) as u64;
        for skipped in prev + 1..e {
            rank += binomial((n - skipped) as u64, left);
        }
        prev = e;
    }
    Ok(rank)
}

/// The `rank`-th permutation of `(1..=n)` in lexicographic order (Lehmer code).
pub fn unrank_permutation(rank: u128, n: usize) -> Result<Vec<usize>> {
    let total = factorial(n as u64);
    if rank >= total {
        return Err(Error::RankOutOfRange { rank, limit: total });
    }
    let mut pool: Vec<usize> = (1..=n).collect();
    let mut out = Vec::with_capacity(n);
    let mut remaining = rank;
    for i in (0..n).rev() {
        let f = factorial(i as u64);
        let digit = (remaining / f) as usize;
        remaining %= f;
        out.push(pool.remove(digit));
    }
    Ok(out)
}

/// Inverse of [`unrank_permutation`].
pub fn rank_permutation(perm: &[usize]) -> Result<u128> {
    let n = perm.len();
    let mut seen = vec![false; n + 1];
    for &p in perm {
        if p == 0 || p > n || seen[p] {
            return Err(Error::Domain {
                func: "rank_permutation",
                detail: format!("{perm:?} is not a permutation of 1..={n}"),
            });
        }
        seen[p] = true;
    }
    let mut rank = 0u128;
    for (i, &p) in perm.iter().enumerate() {
        let smaller_after = perm[i + 1..].iter().filter(|&&q| q < p).count() as u128;
        rank += smaller_after * factorial((n - i - 1) as u64);
    }
    Ok(rank)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_subsets_lex(n: usize, k: usize) -> Vec<Vec<usize>> {
        // Brute force: filter all bitmasks, then sort lexicographically.
        let mut v: Vec<Vec<usize>> = (0u32..1 << n)
            .filter(|m| m.count_ones() as usize == k)
            .map(|m| (0..n).filter(|b| m >> b & 1 == 1).map(|b| b + 1).collect())
            .collect();
        v.sort();
        v
    }

    fn all_perms_lex(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if left.is_empty() {
                out.push(prefix.clone());
                return;
            }
            for i in 0..left.len() {
                let x = left.remove(i);
                prefix.push(x);
                rec(prefix, left, out);
                prefix.pop();
                left.insert(i, x);
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut (1..=n).collect(), &mut out);
        out.sort();
        out
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118_264_581_564_861_424);
        assert_eq!(floor_log2(1), 0);
        assert_eq!(floor_log2(28), 4);
        assert_eq!(floor_log2(70), 6);
    }

    #[test]
    fn combination_examples() {
        assert_eq!(unrank_combination(0, 4, 2).unwrap(), vec![1, 2]);
        assert_eq!(unrank_combination(3, 4, 2).unwrap(), vec![2, 3]);
        assert!(matches!(
            unrank_combination(6, 4, 2),
            Err(Error::RankOutOfRange { rank: 6, limit: 6 })
        ));
    }

    #[test]
    fn combination_matches_enumeration() {
        for (n, k) in [(4, 2), (6, 3), (8, 2), (5, 5), (7, 1), (9, 4)] {
            for (r, subset) in all_subsets_lex(n, k).iter().enumerate() {
                assert_eq!(&unrank_combination(r as u128, n, k).unwrap(), subset);
                assert_eq!(rank_combination(subset, n).unwrap(), r as u128);
            }
        }
    }

    #[test]
    fn combination_round_trip_8_2() {
        for r in 0..28 {
            let s = unrank_combination(r, 8, 2).unwrap();
            assert_eq!(rank_combination(&s, 8).unwrap(), r);
        }
    }

    #[test]
    fn permutation_examples() {
        assert_eq!(unrank_permutation(0, 3).unwrap(), vec![1, 2, 3]);
        assert_eq!(unrank_permutation(2, 3).unwrap(), vec![2, 1, 3]);
        assert!(unrank_permutation(6, 3).is_err());
        assert!(rank_permutation(&[1, 1, 2]).is_err());
    }

    #[test]
    fn permutation_matches_enumeration() {
        for n in 1..=5 {
            for (r, p) in all_perms_lex(n).iter().enumerate() {
                assert_eq!(&unrank_permutation(r as u128, n).unwrap(), p);
                assert_eq!(rank_permutation(p).unwrap(), r as u128);
            }
        }
        for r in 0..24 {
            assert_eq!(
                rank_permutation(&unrank_permutation(r, 4).unwrap()).unwrap(),
                r
            );
        }
    }

    proptest! {
        #[test]
        fn combination_round_trip(n in 1usize..30, k_frac in 0.0f64..1.0, r_frac in 0.0f64..1.0) {
            let k = ((n as f64) * k_frac) as usize;
            let total = binomial(n as u64, k as u64);
            let r = ((total as f64 * r_frac) as u128).min(total - 1);
            let s = unrank_combination(r, n, k).unwrap();
            prop_assert!(s.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(rank_combination(&s, n).unwrap(), r);
        }

        #[test]
        fn permutation_round_trip(n in 1usize..12, r_frac in 0.0f64..1.0) {
            let total = factorial(n as u64);
            let r = ((total as f64 * r_frac) as u128).min(total - 1);
            let p = unrank_permutation(r, n).unwrap();
            prop_assert_eq!(rank_permutation(&p).unwrap(), r);
        }
    }
}
