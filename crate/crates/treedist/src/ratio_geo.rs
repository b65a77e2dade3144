//! Ratio sequences and the linear-time shortest-path solver.
//!
//! A candidate route between two trees is described combinatorially by
//! an ordered sequence of transitions; transition `i` drops a set `A_i`
//! of splits of the first tree and adds a set `B_i` of splits of the
//! second. Writing `a_i` and `b_i` for the Euclidean norms of the
//! dropped and added length vectors, the shortest path through that
//! orthant sequence has length `sqrt(sum_i (a_i + b_i)^2)` *provided*
//! the ratios `a_i / b_i` are ascending; the route visits the
//! transitions in that order exactly when the ratio sequence does not
//! descend anywhere.
//!
//! [`path_space_geo`] turns an arbitrary ratio sequence into the
//! ascending one describing the shortest path through its orthant
//! sequence, by repeatedly combining adjacent non-ascending ratios into
//! one (root-sum-square on both sides). It is the same stack discipline
//! as pool-adjacent-violators isotonic regression and runs in Θ(k):
//! at most `2(k-1)` comparisons and `k-1` combines, which the returned
//! counters let callers verify.
//!
//! Ratios are stored as squared norms and compared by cross-multiplying
//! squares, so comparisons never divide (empty sides are fine) and cost
//! no extra square root of precision. Comparisons are exact; an epsilon
//! would break the identity that re-running the solver on a prefix of
//! its own output is a no-op.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::splits::Split;

/// Errors from assembling or evaluating ratio sequences.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum RatioError {
    /// Two ratios being combined or merged carry a shared split.
    #[error("ratios share {count} split(s); supports must be disjoint")]
    OverlappingSupports { count: usize },
    /// A sequence required to be ascending descends at `position`.
    #[error("ratio sequence descends at position {position}")]
    NotAscending { position: usize },
}

/// One transition: a dropped split set and an added split set with the
/// squared norms of their length vectors.
///
/// The split sets are bookkeeping for carriers and may be empty even
/// when the norms are positive (synthetic sequences used in testing and
/// benchmarking); when built from real splits via [`Ratio::from_sets`],
/// the squared norms are the sums over the sets.
#[derive(Clone, Debug, PartialEq)]
pub struct Ratio {
    drop_norm_sq: f64,
    add_norm_sq: f64,
    dropped: BTreeSet<Split>,
    added: BTreeSet<Split>,
}

impl Ratio {
    /// An anonymous ratio from plain norms (not squared).
    pub fn from_norms(drop_norm: f64, add_norm: f64) -> Self {
        assert!(drop_norm >= 0.0 && add_norm >= 0.0, "norms must be >= 0");
        Ratio {
            drop_norm_sq: drop_norm * drop_norm,
            add_norm_sq: add_norm * add_norm,
            dropped: BTreeSet::new(),
            added: BTreeSet::new(),
        }
    }

    /// A ratio carrying its split sets; norms are summed from the
    /// given lengths.
    pub fn from_sets<D, A>(dropped: D, added: A) -> Self
    where
        D: IntoIterator<Item = (Split, f64)>,
        A: IntoIterator<Item = (Split, f64)>,
    {
        let mut r = Ratio::zero();
        for (split, len) in dropped {
            r.drop_norm_sq += len * len;
            r.dropped.insert(split);
        }
        for (split, len) in added {
            r.add_norm_sq += len * len;
            r.added.insert(split);
        }
        r
    }

    /// The additive identity: empty sets, zero norms.
    pub fn zero() -> Self {
        Ratio {
            drop_norm_sq: 0.0,
            add_norm_sq: 0.0,
            dropped: BTreeSet::new(),
            added: BTreeSet::new(),
        }
    }

    pub fn drop_norm_sq(&self) -> f64 {
        self.drop_norm_sq
    }

    pub fn add_norm_sq(&self) -> f64 {
        self.add_norm_sq
    }

    pub fn drop_norm(&self) -> f64 {
        self.drop_norm_sq.sqrt()
    }

    pub fn add_norm(&self) -> f64 {
        self.add_norm_sq.sqrt()
    }

    pub fn dropped(&self) -> &BTreeSet<Split> {
        &self.dropped
    }

    pub fn added(&self) -> &BTreeSet<Split> {
        &self.added
    }

    /// True when both sides are zero; such ratios describe no orthant
    /// transition at all and are discarded by the solver.
    pub fn is_degenerate(&self) -> bool {
        self.drop_norm_sq == 0.0 && self.add_norm_sq == 0.0
    }

    /// Compares ratio values `a/b` by cross-multiplying squared norms,
    /// so a zero added side acts as an infinite ratio.
    pub fn value_cmp(&self, other: &Ratio) -> Ordering {
        let lhs = self.drop_norm_sq * other.add_norm_sq;
        let rhs = other.drop_norm_sq * self.add_norm_sq;
        lhs.partial_cmp(&rhs).expect("norms are finite")
    }
}

/// Combines two transitions into one: squared norms add, split sets
/// union. Fails when the split sets overlap, since a split cannot be
/// dropped or added twice along one path.
pub fn combine(first: &Ratio, second: &Ratio) -> Result<Ratio, RatioError> {
    let overlap = first.dropped.intersection(&second.dropped).count()
        + first.added.intersection(&second.added).count();
    if overlap > 0 {
        return Err(RatioError::OverlappingSupports { count: overlap });
    }
    let mut dropped = first.dropped.clone();
    dropped.extend(second.dropped.iter().cloned());
    let mut added = first.added.clone();
    added.extend(second.added.iter().cloned());
    Ok(Ratio {
        drop_norm_sq: first.drop_norm_sq + second.drop_norm_sq,
        add_norm_sq: first.add_norm_sq + second.add_norm_sq,
        dropped,
        added,
    })
}

/// An ordered list of transitions.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RatioSequence {
    ratios: Vec<Ratio>,
}

impl RatioSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ratios(ratios: Vec<Ratio>) -> Self {
        RatioSequence { ratios }
    }

    pub fn push(&mut self, ratio: Ratio) {
        self.ratios.push(ratio);
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Ratio> {
        self.ratios.iter()
    }

    pub fn ratios(&self) -> &[Ratio] {
        &self.ratios
    }

    /// Concatenation, reusing this sequence's storage.
    pub fn extended(mut self, other: &RatioSequence) -> Self {
        self.ratios.extend(other.ratios.iter().cloned());
        self
    }
}

impl FromIterator<Ratio> for RatioSequence {
    fn from_iter<T: IntoIterator<Item = Ratio>>(iter: T) -> Self {
        RatioSequence {
            ratios: iter.into_iter().collect(),
        }
    }
}

/// Operation counts of one [`path_space_geo`] run; the solver promises
/// `comparisons <= 2(k-1)` and `combines <= k-1` for an input of `k`
/// ratios.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub comparisons: u64,
    pub combines: u64,
}

/// Whether consecutive ratio values never descend (non-strict).
pub fn is_ascending(seq: &RatioSequence) -> bool {
    seq.ratios
        .windows(2)
        .all(|w| w[0].value_cmp(&w[1]) != Ordering::Greater)
}

/// Computes the ascending ratio sequence of the shortest path through
/// the input's orthant sequence. See the module docs; counters are
/// available via [`path_space_geo_counted`].
///
/// Degenerate `0/0` entries are dropped up front. Equal ratios are
/// combined, so the output is strictly ascending and unique.
///
/// # Panics
///
/// Panics if entries share splits; supports along one route must be
/// disjoint.
pub fn path_space_geo(seq: &RatioSequence) -> RatioSequence {
    path_space_geo_counted(seq).0
}

/// [`path_space_geo`] with its comparison and combine counters.
pub fn path_space_geo_counted(seq: &RatioSequence) -> (RatioSequence, OpCounters) {
    let mut counters = OpCounters::default();
    let mut stack: Vec<Ratio> = Vec::with_capacity(seq.len());
    for ratio in seq.iter().filter(|r| !r.is_degenerate()) {
        let mut current = ratio.clone();
        while let Some(top) = stack.last() {
            counters.comparisons += 1;
            if top.value_cmp(&current) == Ordering::Less {
                break;
            }
            let top = stack.pop().expect("stack is non-empty");
            current = combine(&top, &current)
                .expect("splits repeat along the sequence; supports must be disjoint");
            counters.combines += 1;
        }
        stack.push(current);
    }
    (RatioSequence::from_ratios(stack), counters)
}

/// Length of the path described by a non-descending ratio sequence:
/// `sqrt(sum (a_i + b_i)^2)`. Fails when the sequence descends
/// somewhere, because the formula only measures routes that visit the
/// transitions in value order.
pub fn distance_of(seq: &RatioSequence) -> Result<f64, RatioError> {
    for (i, w) in seq.ratios.windows(2).enumerate() {
        if w[0].value_cmp(&w[1]) == Ordering::Greater {
            return Err(RatioError::NotAscending { position: i + 1 });
        }
    }
    Ok(seq
        .iter()
        .map(|r| {
            let term = r.drop_norm() + r.add_norm();
            term * term
        })
        .sum::<f64>()
        .sqrt())
}

/// Merges strictly ascending sequences over disjoint split supports
/// into one strictly ascending sequence, combining exact value ties.
///
/// Independent subproblems contribute independent coordinates, so their
/// carriers interleave by ratio value; a tie means the two transitions
/// happen at the same point of the path and collapse into one.
pub fn merge_ascending(seqs: &[RatioSequence]) -> Result<RatioSequence, RatioError> {
    for seq in seqs {
        for (i, w) in seq.ratios.windows(2).enumerate() {
            if w[0].value_cmp(&w[1]) != Ordering::Less {
                return Err(RatioError::NotAscending { position: i + 1 });
            }
        }
    }
    let mut seen_dropped = BTreeSet::new();
    let mut seen_added = BTreeSet::new();
    let mut overlap = 0usize;
    for seq in seqs {
        for r in seq.iter() {
            overlap += r.dropped.iter().filter(|s| !seen_dropped.insert((*s).clone())).count();
            overlap += r.added.iter().filter(|s| !seen_added.insert((*s).clone())).count();
        }
    }
    if overlap > 0 {
        return Err(RatioError::OverlappingSupports { count: overlap });
    }

    let mut all: Vec<&Ratio> = seqs.iter().flat_map(|s| s.iter()).collect();
    all.sort_by(|x, y| x.value_cmp(y));
    let mut merged: Vec<Ratio> = Vec::with_capacity(all.len());
    for ratio in all {
        match merged.last() {
            Some(last) if last.value_cmp(ratio) == Ordering::Equal => {
                let last = merged.pop().expect("non-empty");
                merged.push(combine(&last, ratio)?);
            }
            _ => merged.push(ratio.clone()),
        }
    }
    Ok(RatioSequence::from_ratios(merged))
}

/// Deterministic order on carriers, used to break exact distance ties:
/// compare transition by transition, each as (dropped set, added set).
pub(crate) fn carrier_cmp(a: &RatioSequence, b: &RatioSequence) -> Ordering {
    let key = |r: &Ratio| (r.dropped.clone(), r.added.clone());
    a.iter().map(key).cmp(b.iter().map(key))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(pairs: &[(f64, f64)]) -> RatioSequence {
        pairs.iter().map(|(a, b)| Ratio::from_norms(*a, *b)).collect()
    }

    /// Minimum path length over every split of the sequence into
    /// consecutive blocks whose block-combined ratios do not descend.
    fn enumeration_oracle(pairs: &[(f64, f64)]) -> f64 {
        let k = pairs.len();
        let mut best = f64::INFINITY;
        for mask in 0..(1u32 << (k - 1)) {
            let mut blocks: Vec<(f64, f64)> = Vec::new();
            let mut acc = (0.0, 0.0);
            for (i, (a, b)) in pairs.iter().enumerate() {
                acc.0 += a * a;
                acc.1 += b * b;
                let boundary = i == k - 1 || mask & (1 << i) != 0;
                if boundary {
                    blocks.push(acc);
                    acc = (0.0, 0.0);
                }
            }
            let ascending = blocks
                .windows(2)
                .all(|w| w[0].0 * w[1].1 <= w[1].0 * w[0].1);
            if !ascending {
                continue;
            }
            let d = blocks
                .iter()
                .map(|(asq, bsq)| {
                    let t = asq.sqrt() + bsq.sqrt();
                    t * t
                })
                .sum::<f64>()
                .sqrt();
            best = best.min(d);
        }
        best
    }

    #[test]
    fn ascending_pair_passes_through() {
        let s = seq(&[(0.83, 0.7), (0.88, 0.15)]);
        let out = path_space_geo(&s);
        assert_eq!(out.len(), 2);
        let d = distance_of(&out).unwrap();
        assert!((d - 1.8444).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn descending_pair_combines_to_one() {
        let s = seq(&[(0.88, 0.15), (0.83, 0.7)]);
        let out = path_space_geo(&s);
        assert_eq!(out.len(), 1);
        let d = distance_of(&out).unwrap();
        assert!((d - 1.9256).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn triple_with_late_violation_collapses_fully() {
        let s = seq(&[(0.83, 0.7), (0.88, 0.15), (0.47, 0.87)]);
        let out = path_space_geo(&s);
        assert_eq!(out.len(), 1);
        let d = distance_of(&out).unwrap();
        assert!((d - 2.42444).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn triple_with_early_violation_keeps_two_blocks() {
        let s = seq(&[(0.88, 0.15), (0.47, 0.87), (0.83, 0.7)]);
        let out = path_space_geo(&s);
        assert_eq!(out.len(), 2);
        let d = distance_of(&out).unwrap();
        assert!((d - 2.42428).abs() < 1e-3, "got {d}");
    }

    #[test]
    fn combine_sums_squares_and_unions_sets() {
        let r = combine(
            &Ratio::from_norms(0.88, 0.15),
            &Ratio::from_norms(0.47, 0.87),
        )
        .unwrap();
        assert!((r.drop_norm_sq() - 0.9953).abs() < 1e-12);
        assert!((r.add_norm_sq() - 0.7794).abs() < 1e-12);
        assert!((r.drop_norm() - 0.99765).abs() < 1e-4);
        assert!((r.add_norm() - 0.88284).abs() < 1e-4);
    }

    #[test]
    fn combine_with_zero_is_identity_on_squares() {
        let r = Ratio::from_norms(1.5, 2.5);
        let c = combine(&r, &Ratio::zero()).unwrap();
        assert_eq!(c.drop_norm_sq(), r.drop_norm_sq());
        assert_eq!(c.add_norm_sq(), r.add_norm_sq());
    }

    #[test]
    fn combine_rejects_shared_splits() {
        let s = Split::from_members([1, 2], 4).unwrap();
        let r1 = Ratio::from_sets([(s.clone(), 1.0)], []);
        let r2 = Ratio::from_sets([(s, 2.0)], []);
        assert_eq!(
            combine(&r1, &r2).unwrap_err(),
            RatioError::OverlappingSupports { count: 1 }
        );
    }

    #[test]
    fn already_ascending_input_is_returned_unchanged() {
        let s = seq(&[(1.0, 4.0), (2.0, 3.0), (3.0, 1.0)]);
        assert_eq!(path_space_geo(&s), s);
    }

    #[test]
    fn degenerate_ratios_are_dropped() {
        let s = seq(&[(0.0, 0.0), (1.0, 1.0), (0.0, 0.0)]);
        let out = path_space_geo(&s);
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn distance_of_single_ratio_is_the_sum() {
        assert_eq!(distance_of(&seq(&[(1.25, 0.5)])).unwrap(), 1.75);
        // A pure contraction moves straight down to the shared face.
        assert_eq!(distance_of(&seq(&[(2.0, 0.0)])).unwrap(), 2.0);
        assert_eq!(distance_of(&RatioSequence::new()).unwrap(), 0.0);
    }

    #[test]
    fn distance_of_rejects_descending_sequences() {
        assert_eq!(
            distance_of(&seq(&[(3.0, 1.0), (1.0, 3.0)])).unwrap_err(),
            RatioError::NotAscending { position: 1 }
        );
    }

    #[test]
    fn infinite_ratios_sort_last_and_combine_together() {
        // b = 0 acts as an infinite ratio: nothing may follow it
        // without combining.
        let out = path_space_geo(&seq(&[(1.0, 0.0), (1.0, 1.0)]));
        assert_eq!(out.len(), 1);
        let out = path_space_geo(&seq(&[(1.0, 1.0), (1.0, 0.0)]));
        assert_eq!(out.len(), 2);
        let out = path_space_geo(&seq(&[(1.0, 0.0), (2.0, 0.0)]));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn is_ascending_is_non_strict() {
        assert!(is_ascending(&seq(&[(0.83, 0.7), (0.88, 0.15)])));
        assert!(!is_ascending(&seq(&[(0.88, 0.15), (0.83, 0.7)])));
        assert!(is_ascending(&seq(&[(1.0, 2.0), (2.0, 4.0)])));
        assert!(is_ascending(&RatioSequence::new()));
        assert!(is_ascending(&seq(&[(5.0, 0.1)])));
    }

    #[test]
    fn merge_of_single_sequence_is_itself() {
        let s = seq(&[(1.0, 2.0), (3.0, 1.0)]);
        assert_eq!(merge_ascending(std::slice::from_ref(&s)).unwrap(), s);
    }

    #[test]
    fn merge_interleaves_by_value() {
        let s1 = seq(&[(1.0, 2.0)]);
        let s2 = seq(&[(3.0, 1.0)]);
        let merged = merge_ascending(&[s2, s1]).unwrap();
        assert_eq!(merged, seq(&[(1.0, 2.0), (3.0, 1.0)]));
    }

    #[test]
    fn merge_combines_exact_ties() {
        let merged = merge_ascending(&[seq(&[(1.0, 1.0)]), seq(&[(1.0, 1.0)])]).unwrap();
        assert_eq!(merged.len(), 1);
        let r = &merged.ratios()[0];
        assert_eq!(r.drop_norm_sq(), 2.0);
        assert_eq!(r.add_norm_sq(), 2.0);
    }

    #[test]
    fn merge_rejects_descending_input() {
        let bad = seq(&[(3.0, 1.0), (1.0, 3.0)]);
        assert!(matches!(
            merge_ascending(&[bad]).unwrap_err(),
            RatioError::NotAscending { .. }
        ));
    }

    #[test]
    fn merge_rejects_overlapping_supports() {
        let s = Split::from_members([1, 2], 4).unwrap();
        let a = RatioSequence::from_ratios(vec![Ratio::from_sets([(s.clone(), 1.0)], [])]);
        let b = RatioSequence::from_ratios(vec![Ratio::from_sets([(s, 1.0)], [])]);
        assert!(matches!(
            merge_ascending(&[a, b]).unwrap_err(),
            RatioError::OverlappingSupports { .. }
        ));
    }

    #[test]
    fn counters_respect_the_linear_bounds() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let k = rng.random_range(1..60);
            let s: RatioSequence = (0..k)
                .map(|_| {
                    Ratio::from_norms(10.0 * rng.random::<f64>(), 10.0 * rng.random::<f64>())
                })
                .collect();
            let (out, counters) = path_space_geo_counted(&s);
            assert!(counters.comparisons <= 2 * (k as u64 - 1));
            assert!(counters.combines <= (k as u64).saturating_sub(1));
            assert!(is_ascending(&out));
            // Mass conservation: squares sum to the input totals.
            let in_drop: f64 = s.iter().map(Ratio::drop_norm_sq).sum();
            let out_drop: f64 = out.iter().map(Ratio::drop_norm_sq).sum();
            assert!((in_drop - out_drop).abs() < 1e-9);
        }
    }

    #[test]
    fn matches_enumeration_oracle_on_small_sequences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..300 {
            let k = rng.random_range(1..=8);
            let pairs: Vec<(f64, f64)> = (0..k)
                .map(|_| {
                    (
                        10.0 * (1.0 - rng.random::<f64>()),
                        10.0 * (1.0 - rng.random::<f64>()),
                    )
                })
                .collect();
            let solved = distance_of(&path_space_geo(&seq(&pairs))).unwrap();
            let oracle = enumeration_oracle(&pairs);
            assert!(
                (solved - oracle).abs() < 1e-12,
                "solver {solved} vs oracle {oracle} on {pairs:?}"
            );
        }
    }

    #[test]
    fn output_is_strictly_ascending() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rng.random_range(2..40);
            let s: RatioSequence = (0..k)
                .map(|_| Ratio::from_norms(rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let out = path_space_geo(&s);
            for w in out.ratios().windows(2) {
                assert_eq!(w[0].value_cmp(&w[1]), std::cmp::Ordering::Less);
            }
        }
    }

    proptest! {
        /// Re-running the solver on its own output plus a suffix gives
        /// the same result as one full run, bit for bit.
        #[test]
        fn prefix_stability_is_exact(
            pairs in proptest::collection::vec((0.01f64..10.0, 0.01f64..10.0), 1..30),
            cut in 0usize..30,
        ) {
            let cut = cut.min(pairs.len());
            let full = path_space_geo(&seq(&pairs));
            let prefix = path_space_geo(&seq(&pairs[..cut]));
            let stitched = path_space_geo(&prefix.extended(&seq(&pairs[cut..])));
            prop_assert_eq!(full, stitched);
        }

        /// The distance lies between the Euclidean lower bound and the
        /// two-segment cone-path upper bound.
        #[test]
        fn distance_respects_cone_bounds(
            pairs in proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..20),
        ) {
            let asq: f64 = pairs.iter().map(|(a, _)| a * a).sum();
            let bsq: f64 = pairs.iter().map(|(_, b)| b * b).sum();
            let d = distance_of(&path_space_geo(&seq(&pairs))).unwrap();
            prop_assert!(d >= (asq + bsq).sqrt() - 1e-9);
            prop_assert!(d <= asq.sqrt() + bsq.sqrt() + 1e-9);
        }
    }
}
