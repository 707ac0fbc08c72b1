//! Thresholding operators and support-set utilities.
//!
//! `top_k_indices` is the index selector L_k, `hard_threshold` is the
//! operator H_k that keeps the k largest magnitudes of a vector, and
//! `best_term_residual` is the error of the best s-term approximation.
//! Ties between equal magnitudes are always broken toward the lower
//! index, which makes every solver built on these operators fully
//! deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sorted set of distinct column/entry indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    /// Builds a support from arbitrary indices; sorts and deduplicates.
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let mut merged = Vec::with_capacity(self.len() + other.len());
        merged.extend_from_slice(&self.indices);
        merged.extend_from_slice(&other.indices);
        SupportSet::new(merged)
    }

    /// Checks that every index addresses a coordinate of a length-`dim` vector.
    pub fn check_within(&self, dim: usize) -> Result<()> {
        match self.max_index() {
            Some(max) if max >= dim => Err(Error::InvalidArgument(format!(
                "support index {max} out of range for dimension {dim}"
            ))),
            _ => Ok(()),
        }
    }
}

impl FromIterator<usize> for SupportSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        SupportSet::new(iter.into_iter().collect())
    }
}

/// Indices of the nonzero entries of `v`.
pub fn support_of(v: &[f64]) -> SupportSet {
    SupportSet {
        indices: v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, _)| i).collect(),
    }
}

/// L_k: the index set of the k largest absolute entries of `v`.
///
/// Returns exactly `min(k, v.len())` indices, sorted ascending. Among
/// equal magnitudes the lower index wins.
pub fn top_k_indices(v: &[f64], k: usize) -> SupportSet {
    let k = k.min(v.len());
    if k == 0 {
        return SupportSet::empty();
    }
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Total order: magnitude descending, then index ascending. The
    // partial selection keeps the cost at O(n + k log k).
    let better = |&a: &usize, &b: &usize| v[b].abs().total_cmp(&v[a].abs()).then_with(|| a.cmp(&b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, better);
        order.truncate(k);
    }
    order.sort_unstable();
    SupportSet { indices: order }
}

/// H_k: keeps the k largest-magnitude entries of `v`, zeroes the rest.
pub fn hard_threshold(v: &[f64], k: usize) -> Vec<f64> {
    let keep = top_k_indices(v, k);
    let mut out = vec![0.0; v.len()];
    for i in keep.iter() {
        out[i] = v[i];
    }
    out
}

/// Restriction z_S: copies `v` on `support`, zero elsewhere.
pub fn restrict(v: &[f64], support: &SupportSet) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in support.iter() {
        if i < v.len() {
            out[i] = v[i];
        }
    }
    out
}

/// Norm order accepted by `best_term_residual`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormOrder {
    L1,
    L2,
}

/// sigma_s(v)_q: the l_q error of the best s-term approximation of `v`.
pub fn best_term_residual(v: &[f64], s: usize, q: NormOrder) -> Result<f64> {
    if s > v.len() {
        return Err(Error::InvalidArgument(format!(
            "approximation order {s} exceeds vector length {}",
            v.len()
        )));
    }
    let kept = top_k_indices(v, s);
    let mut acc = 0.0;
    for (i, &x) in v.iter().enumerate() {
        if !kept.contains(i) {
            match q {
                NormOrder::L1 => acc += x.abs(),
                NormOrder::L2 => acc += x * x,
            }
        }
    }
    Ok(match q {
        NormOrder::L1 => acc,
        NormOrder::L2 => acc.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm2;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    #[test]
    fn top_k_distinct_magnitudes() {
        let s = top_k_indices(&[3.0, -1.0, 2.0, 0.0], 2);
        assert_eq!(s.indices(), &[0, 2]);
    }

    #[test]
    fn top_k_tie_breaks_to_lowest_index() {
        let s = top_k_indices(&[2.0, -2.0, 1.0], 1);
        assert_eq!(s.indices(), &[0]);
        let s = top_k_indices(&[0.0, 0.0, 0.0], 2);
        assert_eq!(s.indices(), &[0, 1]);
    }

    #[test]
    fn top_k_clamps_to_length() {
        let s = top_k_indices(&[1.0, 2.0], 5);
        assert_eq!(s.indices(), &[0, 1]);
        assert!(top_k_indices(&[1.0, 2.0], 0).is_empty());
    }

    #[test]
    fn hard_threshold_examples() {
        assert_eq!(hard_threshold(&[3.0, -1.0, 2.0, 0.0], 2), vec![3.0, 0.0, 2.0, 0.0]);
        let v = [1.0, -4.0, 2.0, -3.0, 0.5];
        assert_eq!(hard_threshold(&v, 3), vec![0.0, -4.0, 2.0, -3.0, 0.0]);
        assert_eq!(hard_threshold(&v, 5), v.to_vec());
    }

    #[test]
    fn best_term_residual_examples() {
        assert_eq!(best_term_residual(&[3.0, 1.0, 0.0], 1, NormOrder::L1).unwrap(), 1.0);
        // Exactly representable s-sparse vector has zero residual.
        let v = [0.0, 5.0, 0.0, -2.0];
        assert_eq!(best_term_residual(&v, 2, NormOrder::L2).unwrap(), 0.0);
        let r = best_term_residual(&[2.0, -1.0, 1.0], 1, NormOrder::L2).unwrap();
        assert!((r - 2.0_f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn best_term_residual_rejects_large_order() {
        assert!(best_term_residual(&[1.0], 2, NormOrder::L1).is_err());
    }

    /// Enumerates every s-subset of {0..n-1}; oracle for optimality checks.
    pub(crate) fn all_subsets(n: usize, s: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut current = Vec::new();
        fn recurse(
            start: usize,
            n: usize,
            s: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<Vec<usize>>,
        ) {
            if current.len() == s {
                out.push(current.clone());
                return;
            }
            for i in start..n {
                current.push(i);
                recurse(i + 1, n, s, current, out);
                current.pop();
            }
        }
        recurse(0, n, s, &mut current, &mut out);
        out
    }

    #[test]
    fn threshold_is_best_k_term_approximation() {
        // Brute-force oracle over all supports, lengths up to 10.
        let mut rng = SplitMix64::new(11);
        for _ in 0..50 {
            let n = 3 + rng.next_below(8);
            let v: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
            for k in 0..=n {
                let thresholded = hard_threshold(&v, k);
                let err: f64 =
                    norm2(&v.iter().zip(&thresholded).map(|(a, b)| a - b).collect::<Vec<_>>());
                for support in all_subsets(n, k) {
                    let mut best = v.clone();
                    for (i, slot) in best.iter_mut().enumerate() {
                        if !support.contains(&i) {
                            *slot = 0.0;
                        }
                    }
                    let other: f64 =
                        norm2(&v.iter().zip(&best).map(|(a, b)| a - b).collect::<Vec<_>>());
                    assert!(err <= other + 1e-12, "H_k not optimal: {err} > {other}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn hard_threshold_idempotent(v in proptest::collection::vec(-1e6f64..1e6, 0..24), k in 0usize..24) {
            let once = hard_threshold(&v, k);
            let twice = hard_threshold(&once, k);
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn threshold_keeps_at_most_k(v in proptest::collection::vec(-1e6f64..1e6, 0..24), k in 0usize..24) {
            let t = hard_threshold(&v, k);
            prop_assert!(t.iter().filter(|&&x| x != 0.0).count() <= k);
        }

        #[test]
        fn residual_is_monotone_in_order(v in proptest::collection::vec(-1e3f64..1e3, 1..16)) {
            for s in 0..v.len() {
                let a = best_term_residual(&v, s, NormOrder::L2).unwrap();
                let b = best_term_residual(&v, s + 1, NormOrder::L2).unwrap();
                prop_assert!(b <= a + 1e-12);
                let a1 = best_term_residual(&v, s, NormOrder::L1).unwrap();
                let b1 = best_term_residual(&v, s + 1, NormOrder::L1).unwrap();
                prop_assert!(b1 <= a1 + 1e-12);
            }
        }
    }
}
