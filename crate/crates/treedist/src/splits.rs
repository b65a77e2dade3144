//! Split algebra for rooted phylogenetic trees.
//!
//! Deleting an internal edge of a rooted tree on leaves `1..=n` cuts the
//! label set `{0, ..., n}` (the root counts as label `0`) into two
//! blocks; that bipartition is the edge's *split*. A tree is determined
//! by its set of splits together with the edge lengths, so all of the
//! geometry downstream works on splits rather than on node structures.
//!
//! Splits are stored canonically as the block that does *not* contain
//! the root. With that convention the classical four-intersection
//! compatibility test collapses to three cheap bitset checks, because
//! the intersection of the two root-containing sides always contains
//! `0` and can never be empty.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::tree_io::{RawNode, RawTree, TaxaMap};

/// Errors from constructing individual splits.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SplitError {
    /// The canonical block must exclude the root label `0`.
    #[error("split block contains the root label 0")]
    ContainsRoot,
    /// Non-trivial splits have at least two labels on each side.
    #[error("split block has {size} members; expected between 2 and {max}")]
    BlockSize { size: usize, max: usize },
    /// A member index fell outside `1..=n`.
    #[error("leaf index {index} is out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },
}

/// Errors from assembling whole weighted trees.
#[derive(Debug, Error)]
pub enum TreeError {
    #[error("splits {a} and {b} are incompatible and cannot belong to one tree")]
    IncompatiblePair { a: String, b: String },
    #[error("{count} internal splits exceeds the maximum {max} for {n} leaves")]
    TooManySplits { count: usize, max: usize, n: usize },
    #[error("expected {expected} leaf lengths, found {found}")]
    LeafLengthCount { expected: usize, found: usize },
    #[error("split is defined over {split_n} leaves but the taxa map has {taxa_n}")]
    UniverseMismatch { split_n: usize, taxa_n: usize },
    #[error("leaf '{0}' does not appear in the taxa map")]
    UnknownLeaf(String),
    #[error("edge length {0} is negative or not finite")]
    BadLength(f64),
    #[error("split {0} is not common to both trees")]
    NotCommon(String),
    #[error(transparent)]
    Split(#[from] SplitError),
}

/// A bipartition of `{0, ..., n}` induced by one internal edge.
///
/// Stored as the side that excludes the root, over a universe of `n + 1`
/// bits. A split is pure topology; edge lengths are carried separately
/// by [`WeightedSplitSet`]. Two splits are equal exactly when their
/// partitions are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Split {
    block: FixedBitSet,
    n: usize,
}

impl Split {
    /// Builds a split from its canonical (root-free) block.
    ///
    /// The bitset may have any length; it is resized to `n + 1` bits.
    /// Fails if bit 0 is set, if a set bit exceeds `n`, or if the block
    /// size is outside `2..=n-1`.
    pub fn new(mut block: FixedBitSet, n: usize) -> Result<Self, SplitError> {
        if block.contains(0) {
            return Err(SplitError::ContainsRoot);
        }
        if let Some(highest) = block.ones().next_back() {
            if highest > n {
                return Err(SplitError::IndexOutOfRange { index: highest, n });
            }
        }
        block.grow(n + 1);
        let size = block.count_ones(..);
        if size < 2 || size + 1 > n {
            return Err(SplitError::BlockSize { size, max: n - 1 });
        }
        Ok(Split { block, n })
    }

    /// Builds a split from an iterator of leaf indexes in `1..=n`.
    pub fn from_members<I>(members: I, n: usize) -> Result<Self, SplitError>
    where
        I: IntoIterator<Item = usize>,
    {
        let mut block = FixedBitSet::with_capacity(n + 1);
        for index in members {
            if index == 0 {
                return Err(SplitError::ContainsRoot);
            }
            if index > n {
                return Err(SplitError::IndexOutOfRange { index, n });
            }
            block.insert(index);
        }
        Split::new(block, n)
    }

    /// Number of leaves `n`; the universe is `{0, ..., n}`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// The canonical block as a bitset over `n + 1` bits.
    pub fn block(&self) -> &FixedBitSet {
        &self.block
    }

    /// Whether `leaf` lies on the rootless side.
    pub fn contains(&self, leaf: usize) -> bool {
        self.block.contains(leaf)
    }

    /// Members of the rootless side in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.block.ones()
    }

    /// Size of the rootless side.
    pub fn size(&self) -> usize {
        self.block.count_ones(..)
    }
}

impl PartialOrd for Split {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Split {
    /// Orders by the ascending member list, then by universe size.
    ///
    /// This gives every collection of splits a deterministic order,
    /// which the geodesic search uses to break exact ties.
    fn cmp(&self, other: &Self) -> Ordering {
        self.block
            .ones()
            .cmp(other.block.ones())
            .then(self.n.cmp(&other.n))
    }
}

impl fmt::Display for Split {
    /// Renders both sides, rootless block first: `23|0145` for small
    /// universes, comma-separated (`12,13|0,1,...`) once labels pass 9.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let compact = self.n <= 9;
        let write_side = |f: &mut fmt::Formatter<'_>, members: &[usize]| -> fmt::Result {
            for (k, m) in members.iter().enumerate() {
                if !compact && k > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{m}")?;
            }
            Ok(())
        };
        let inside: Vec<usize> = self.members().collect();
        let outside: Vec<usize> = (0..=self.n).filter(|i| !self.block.contains(*i)).collect();
        write_side(f, &inside)?;
        f.write_str("|")?;
        write_side(f, &outside)
    }
}

impl fmt::Debug for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Split({self})")
    }
}

/// Tests whether two splits can occur in the same tree.
///
/// With root-free canonical blocks `A` and `G` this holds exactly when
/// `A` and `G` are disjoint or nested; the fourth classical intersection
/// (of the two root sides) always contains the root.
///
/// # Panics
///
/// Panics if the splits are defined over different universes.
pub fn are_compatible(e: &Split, f: &Split) -> bool {
    assert_eq!(
        e.n, f.n,
        "cannot compare splits over different taxa counts ({} vs {})",
        e.n, f.n
    );
    e.block.is_disjoint(&f.block) || e.block.is_subset(&f.block) || f.block.is_subset(&e.block)
}

/// The subset of `b` incompatible with at least one split of `a`.
///
/// Both inputs are expected to be internally compatible families (each
/// one a subset of some tree's splits); the function itself only scans
/// pairwise incompatibilities.
pub fn crossing_set(a: &BTreeSet<Split>, b: &BTreeSet<Split>) -> BTreeSet<Split> {
    b.iter()
        .filter(|f| a.iter().any(|e| !are_compatible(e, f)))
        .cloned()
        .collect()
}

/// The subset of `b` compatible with every split of `a`.
///
/// Complements [`crossing_set`]: the two results partition `b`.
pub fn compatibility_set(a: &BTreeSet<Split>, b: &BTreeSet<Split>) -> BTreeSet<Split> {
    b.iter()
        .filter(|f| a.iter().all(|e| are_compatible(e, f)))
        .cloned()
        .collect()
}

/// A set of splits, each carrying a non-negative length.
///
/// Used both for whole trees and for intermediate subsets during the
/// geodesic computation. The Euclidean norm treats the lengths as
/// orthant coordinates.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct WeightedSplitSet {
    entries: BTreeMap<Split, f64>,
}

impl WeightedSplitSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a split's length; returns the old length.
    ///
    /// # Panics
    ///
    /// Panics if the length is negative or not finite.
    pub fn insert(&mut self, split: Split, length: f64) -> Option<f64> {
        assert!(
            length.is_finite() && length >= 0.0,
            "edge length must be finite and non-negative, got {length}"
        );
        self.entries.insert(split, length)
    }

    pub fn get(&self, split: &Split) -> Option<f64> {
        self.entries.get(split).copied()
    }

    pub fn remove(&mut self, split: &Split) -> Option<f64> {
        self.entries.remove(split)
    }

    pub fn contains(&self, split: &Split) -> bool {
        self.entries.contains_key(split)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Splits with their lengths, in the splits' canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Split, f64)> {
        self.entries.iter().map(|(s, l)| (s, *l))
    }

    /// Just the splits, in canonical order.
    pub fn splits(&self) -> impl Iterator<Item = &Split> {
        self.entries.keys()
    }

    /// The splits as an owned set, lengths dropped.
    pub fn split_set(&self) -> BTreeSet<Split> {
        self.entries.keys().cloned().collect()
    }

    /// Squared Euclidean norm of the length vector.
    pub fn norm_sq(&self) -> f64 {
        self.entries.values().map(|l| l * l).sum()
    }

    /// Euclidean norm of the length vector.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// A copy keeping only the splits accepted by the predicate.
    pub fn filtered(&self, mut keep: impl FnMut(&Split) -> bool) -> Self {
        WeightedSplitSet {
            entries: self
                .entries
                .iter()
                .filter(|(s, _)| keep(s))
                .map(|(s, l)| (s.clone(), *l))
                .collect(),
        }
    }
}

impl FromIterator<(Split, f64)> for WeightedSplitSet {
    fn from_iter<T: IntoIterator<Item = (Split, f64)>>(iter: T) -> Self {
        let mut set = WeightedSplitSet::new();
        for (split, length) in iter {
            set.insert(split, length);
        }
        set
    }
}

/// A rooted tree as a weighted split set plus pendant-edge lengths.
///
/// `leaf_lengths[i - 1]` is the length of the pendant edge of leaf `i`.
/// The split set is validated to be pairwise compatible, so every value
/// of this type corresponds to an actual tree (possibly multifurcating
/// when it has fewer than `n - 2` splits).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTree {
    splits: WeightedSplitSet,
    leaf_lengths: Vec<f64>,
    taxa: Arc<TaxaMap>,
}

impl WeightedTree {
    /// Validates and assembles a tree from its parts.
    pub fn new(
        splits: WeightedSplitSet,
        leaf_lengths: Vec<f64>,
        taxa: Arc<TaxaMap>,
    ) -> Result<Self, TreeError> {
        let n = taxa.len();
        if leaf_lengths.len() != n {
            return Err(TreeError::LeafLengthCount {
                expected: n,
                found: leaf_lengths.len(),
            });
        }
        for length in &leaf_lengths {
            if !length.is_finite() || *length < 0.0 {
                return Err(TreeError::BadLength(*length));
            }
        }
        for split in splits.splits() {
            if split.n() != n {
                return Err(TreeError::UniverseMismatch {
                    split_n: split.n(),
                    taxa_n: n,
                });
            }
        }
        if n >= 2 && splits.len() > n - 2 {
            return Err(TreeError::TooManySplits {
                count: splits.len(),
                max: n - 2,
                n,
            });
        }
        let all: Vec<&Split> = splits.splits().collect();
        for (i, e) in all.iter().enumerate() {
            for f in &all[i + 1..] {
                if !are_compatible(e, f) {
                    return Err(TreeError::IncompatiblePair {
                        a: e.to_string(),
                        b: f.to_string(),
                    });
                }
            }
        }
        Ok(WeightedTree {
            splits,
            leaf_lengths,
            taxa,
        })
    }

    pub fn n(&self) -> usize {
        self.taxa.len()
    }

    pub fn taxa(&self) -> &Arc<TaxaMap> {
        &self.taxa
    }

    pub fn splits(&self) -> &WeightedSplitSet {
        &self.splits
    }

    /// Length of the pendant edge of `leaf` (1-based).
    pub fn leaf_length(&self, leaf: usize) -> f64 {
        self.leaf_lengths[leaf - 1]
    }

    pub fn leaf_lengths(&self) -> &[f64] {
        &self.leaf_lengths
    }

    /// A copy with every edge length (internal and pendant) scaled by
    /// `t >= 0`. Geodesic distances scale by the same factor.
    pub fn scaled(&self, t: f64) -> Self {
        assert!(t.is_finite() && t >= 0.0, "scale factor must be >= 0");
        WeightedTree {
            splits: self
                .splits
                .iter()
                .map(|(s, l)| (s.clone(), l * t))
                .collect(),
            leaf_lengths: self.leaf_lengths.iter().map(|l| l * t).collect(),
            taxa: Arc::clone(&self.taxa),
        }
    }

    /// A copy keeping only the internal splits accepted by `keep`.
    ///
    /// Pendant lengths and taxa are shared unchanged; this is the basic
    /// building block for decomposition into subproblems.
    pub fn restricted(&self, keep: impl FnMut(&Split) -> bool) -> Self {
        WeightedTree {
            splits: self.splits.filtered(keep),
            leaf_lengths: self.leaf_lengths.clone(),
            taxa: Arc::clone(&self.taxa),
        }
    }

    /// A copy with `split` inserted at the given length.
    pub fn with_split(&self, split: Split, length: f64) -> Self {
        let mut splits = self.splits.clone();
        splits.insert(split, length);
        WeightedTree {
            splits,
            leaf_lengths: self.leaf_lengths.clone(),
            taxa: Arc::clone(&self.taxa),
        }
    }
}

/// Extracts the weighted splits of a parsed tree.
///
/// Every internal edge with positive length becomes one split whose
/// canonical block is the set of leaves below the edge; zero-length
/// internal edges are contracted away, since the degenerate topology is
/// the same point of tree space. Pendant edges are routed to the leaf
/// length vector.
pub fn splits_of_tree(raw: &RawTree, taxa: &Arc<TaxaMap>) -> Result<WeightedTree, TreeError> {
    let n = taxa.len();
    let mut splits = WeightedSplitSet::new();
    let mut leaf_lengths = vec![0.0; n];

    fn walk(
        node: &RawNode,
        is_root: bool,
        n: usize,
        taxa: &TaxaMap,
        splits: &mut WeightedSplitSet,
        leaf_lengths: &mut [f64],
    ) -> Result<FixedBitSet, TreeError> {
        if node.children.is_empty() {
            let name = node.label.as_deref().unwrap_or("");
            let index = taxa
                .index_of(name)
                .ok_or_else(|| TreeError::UnknownLeaf(name.to_string()))?;
            let length = node.length.unwrap_or(0.0);
            if !length.is_finite() || length < 0.0 {
                return Err(TreeError::BadLength(length));
            }
            leaf_lengths[index - 1] = length;
            let mut block = FixedBitSet::with_capacity(n + 1);
            block.insert(index);
            return Ok(block);
        }
        let mut below = FixedBitSet::with_capacity(n + 1);
        for child in &node.children {
            below.union_with(&walk(child, false, n, taxa, splits, leaf_lengths)?);
        }
        if !is_root {
            let length = node.length.unwrap_or(0.0);
            if !length.is_finite() || length < 0.0 {
                return Err(TreeError::BadLength(length));
            }
            if length > 0.0 {
                splits.insert(Split::new(below.clone(), n)?, length);
            }
        }
        Ok(below)
    }

    walk(&raw.root, true, n, taxa, &mut splits, &mut leaf_lengths)?;
    WeightedTree::new(splits, leaf_lengths, Arc::clone(taxa))
}

/// Splits present in both trees, compared as partitions (lengths are
/// ignored). Both trees must share one taxa map.
pub fn common_splits(t1: &WeightedTree, t2: &WeightedTree) -> BTreeSet<Split> {
    debug_assert_eq!(t1.taxa(), t2.taxa(), "trees over different taxa maps");
    t1.splits()
        .splits()
        .filter(|s| t2.splits().contains(s))
        .cloned()
        .collect()
}

/// The two independent subproblems obtained by cutting both trees at a
/// shared split.
///
/// `outer` holds the trees keeping only the splits whose blocks are not
/// inside the shared block; `inner` keeps the splits strictly below the
/// shared edge. Together with the shared edge itself the two parts
/// partition each tree's split set, and the geodesic distance satisfies
/// `d^2 = d_outer^2 + d_inner^2 + (len1 - len2)^2`.
#[derive(Clone, Debug)]
pub struct SplitDecomposition {
    pub outer: (WeightedTree, WeightedTree),
    pub inner: (WeightedTree, WeightedTree),
    /// Lengths of the shared edge in the first and second tree.
    pub lengths: (f64, f64),
}

/// Cuts both trees at a split they share. See [`SplitDecomposition`].
pub fn decompose_at(
    t1: &WeightedTree,
    t2: &WeightedTree,
    e: &Split,
) -> Result<SplitDecomposition, TreeError> {
    let (len1, len2) = match (t1.splits().get(e), t2.splits().get(e)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(TreeError::NotCommon(e.to_string())),
    };
    let is_inside = |s: &Split| s != e && s.block().is_subset(e.block());
    let is_outside = |s: &Split| s != e && !s.block().is_subset(e.block());
    Ok(SplitDecomposition {
        outer: (t1.restricted(is_outside), t2.restricted(is_outside)),
        inner: (t1.restricted(is_inside), t2.restricted(is_inside)),
        lengths: (len1, len2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree_io::parse_newick;
    use proptest::prelude::*;

    fn split(members: &[usize], n: usize) -> Split {
        Split::from_members(members.iter().copied(), n).unwrap()
    }

    fn taxa(n: usize) -> Arc<TaxaMap> {
        Arc::new(TaxaMap::from_names((1..=n).map(|i| format!("t{i:02}"))).unwrap())
    }

    fn tree(splits: &[(&[usize], f64)], n: usize) -> WeightedTree {
        let set: WeightedSplitSet = splits
            .iter()
            .map(|(members, len)| (split(members, n), *len))
            .collect();
        WeightedTree::new(set, vec![0.0; n], taxa(n)).unwrap()
    }

    #[test]
    fn construction_enforces_canonical_form() {
        assert_eq!(
            Split::from_members([0, 1], 5).unwrap_err(),
            SplitError::ContainsRoot
        );
        assert_eq!(
            Split::from_members([3], 5).unwrap_err(),
            SplitError::BlockSize { size: 1, max: 4 }
        );
        // Block of size n leaves only the root on the other side.
        assert_eq!(
            Split::from_members([1, 2, 3, 4, 5], 5).unwrap_err(),
            SplitError::BlockSize { size: 5, max: 4 }
        );
        assert_eq!(
            Split::from_members([2, 7], 5).unwrap_err(),
            SplitError::IndexOutOfRange { index: 7, n: 5 }
        );
        assert!(Split::from_members([2, 3], 5).is_ok());
    }

    #[test]
    fn nested_blocks_are_compatible() {
        let e3 = split(&[2, 3], 5);
        let e2 = split(&[2, 3, 4], 5);
        assert!(are_compatible(&e3, &e2));
        assert!(are_compatible(&e2, &e3));
    }

    #[test]
    fn straddling_blocks_are_incompatible() {
        let e3 = split(&[2, 3], 5);
        let f = split(&[1, 2], 5);
        assert!(!are_compatible(&e3, &f));
        assert!(!are_compatible(&f, &e3));
    }

    #[test]
    fn every_split_is_self_compatible() {
        let e = split(&[2, 3], 5);
        assert!(are_compatible(&e, &e));
    }

    #[test]
    fn disjoint_blocks_are_compatible() {
        assert!(are_compatible(&split(&[1, 2], 6), &split(&[4, 5], 6)));
    }

    #[test]
    fn display_is_compact_for_small_universes() {
        assert_eq!(split(&[2, 3], 5).to_string(), "23|0145");
        let wide = Split::from_members([2, 11], 12).unwrap();
        assert_eq!(wide.to_string(), "2,11|0,1,3,4,5,6,7,8,9,10,12");
    }

    #[test]
    fn order_is_by_member_list() {
        let a = split(&[1, 2], 5);
        let b = split(&[1, 2, 3], 5);
        let c = split(&[1, 3], 5);
        let mut v = vec![c.clone(), b.clone(), a.clone()];
        v.sort();
        assert_eq!(v, vec![a, b, c]);
    }

    #[test]
    fn crossing_set_of_empty_family_is_empty() {
        let b: BTreeSet<Split> = [split(&[1, 2], 5), split(&[2, 3], 5)].into();
        assert!(crossing_set(&BTreeSet::new(), &b).is_empty());
        assert_eq!(compatibility_set(&BTreeSet::new(), &b), b);
    }

    #[test]
    fn crossing_and_compatibility_partition_the_target() {
        let a: BTreeSet<Split> = [split(&[1, 2], 6), split(&[1, 2, 3], 6)].into();
        let b: BTreeSet<Split> = [split(&[2, 3], 6), split(&[4, 5], 6), split(&[2, 3, 4], 6)].into();
        let crossing = crossing_set(&a, &b);
        let compatible = compatibility_set(&a, &b);
        assert_eq!(crossing.len() + compatible.len(), b.len());
        assert!(crossing.is_disjoint(&compatible));
        assert_eq!(crossing, [split(&[2, 3], 6), split(&[2, 3, 4], 6)].into());
    }

    #[test]
    fn crossing_matches_quadratic_scan_on_random_trees() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t1 = crate::generate::random_binary_tree(7, &mut rng);
            let t2 = crate::generate::random_binary_tree(7, &mut rng);
            let a = t1.splits().split_set();
            let b = t2.splits().split_set();
            let expected: BTreeSet<Split> = b
                .iter()
                .filter(|f| a.iter().any(|e| !are_compatible(e, f)))
                .cloned()
                .collect();
            assert_eq!(crossing_set(&a, &b), expected);
        }
    }

    #[test]
    fn tree_validation_rejects_incompatible_splits() {
        let mut set = WeightedSplitSet::new();
        set.insert(split(&[1, 2], 5), 1.0);
        set.insert(split(&[2, 3], 5), 1.0);
        let err = WeightedTree::new(set, vec![0.0; 5], taxa(5)).unwrap_err();
        assert!(matches!(err, TreeError::IncompatiblePair { .. }));
    }

    #[test]
    fn caterpillar_splits_are_nested_and_compatible() {
        let raw = parse_newick("((((a:1,b:1):1,c:1):1,d:1):1,e:1);", None).unwrap();
        let taxa = Arc::new(TaxaMap::from_names(raw.leaf_names().into_iter().map(String::from)).unwrap());
        let tree = splits_of_tree(&raw, &taxa).unwrap();
        assert_eq!(tree.splits().len(), 3);
        let all: Vec<&Split> = tree.splits().splits().collect();
        for (i, e) in all.iter().enumerate() {
            for f in &all[i + 1..] {
                assert!(are_compatible(e, f));
            }
        }
    }

    #[test]
    fn zero_length_internal_edges_are_contracted() {
        let raw = parse_newick("(((a:1,b:1):0,c:1):0.5,d:1);", None).unwrap();
        let taxa = Arc::new(TaxaMap::from_names(raw.leaf_names().into_iter().map(String::from)).unwrap());
        let tree = splits_of_tree(&raw, &taxa).unwrap();
        // Only the {a,b,c} edge survives; the {a,b} edge had length 0.
        assert_eq!(tree.splits().len(), 1);
        assert_eq!(tree.splits().splits().next().unwrap(), &split(&[1, 2, 3], 4));
    }

    #[test]
    fn star_tree_has_no_splits() {
        let raw = parse_newick("(a:1,b:1,c:1);", None).unwrap();
        let taxa = Arc::new(TaxaMap::from_names(raw.leaf_names().into_iter().map(String::from)).unwrap());
        let tree = splits_of_tree(&raw, &taxa).unwrap();
        assert!(tree.splits().is_empty());
        assert_eq!(tree.leaf_lengths(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn common_splits_sees_partitions_not_lengths() {
        let t1 = tree(&[(&[1, 2], 0.5), (&[1, 2, 3], 1.0)], 5);
        let t2 = tree(&[(&[1, 2], 2.0), (&[4, 5], 1.0)], 5);
        let common = common_splits(&t1, &t2);
        assert_eq!(common, [split(&[1, 2], 5)].into());
    }

    #[test]
    fn identical_topologies_share_every_split() {
        let t1 = tree(&[(&[1, 2], 0.5), (&[1, 2, 3], 1.0)], 5);
        let t2 = tree(&[(&[1, 2], 1.5), (&[1, 2, 3], 2.5)], 5);
        assert_eq!(common_splits(&t1, &t2).len(), 2);
    }

    #[test]
    fn decompose_routes_below_splits_to_inner() {
        // Both trees share {4,5}; t1 also nests {4,5,6} above it and a
        // cherry {1,2} elsewhere, t2 nests {3,4,5} above it.
        let t1 = tree(&[(&[4, 5], 1.0), (&[4, 5, 6], 0.7), (&[1, 2], 0.3)], 6);
        let t2 = tree(&[(&[4, 5], 2.0), (&[3, 4, 5], 0.9)], 6);
        let e = split(&[4, 5], 6);
        let dec = decompose_at(&t1, &t2, &e).unwrap();
        assert_eq!(dec.lengths, (1.0, 2.0));
        // Nothing fits strictly inside a two-element block.
        assert!(dec.inner.0.splits().is_empty());
        assert!(dec.inner.1.splits().is_empty());
        assert_eq!(dec.outer.0.splits().len(), 2);
        assert_eq!(dec.outer.1.splits().len(), 1);

        // A shared block with room inside: splits below it move to inner.
        let t3 = tree(&[(&[3, 4, 5, 6], 1.0), (&[3, 4], 0.7)], 6);
        let t4 = tree(&[(&[3, 4, 5, 6], 1.0), (&[5, 6], 0.2), (&[1, 2], 0.4)], 6);
        let f = split(&[3, 4, 5, 6], 6);
        let dec = decompose_at(&t3, &t4, &f).unwrap();
        assert_eq!(dec.inner.0.splits().split_set(), [split(&[3, 4], 6)].into());
        assert_eq!(dec.inner.1.splits().split_set(), [split(&[5, 6], 6)].into());
        assert_eq!(dec.outer.0.splits().len(), 0);
        assert_eq!(dec.outer.1.splits().split_set(), [split(&[1, 2], 6)].into());
    }

    #[test]
    fn decompose_partitions_the_split_sets() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let mut checked = 0;
        for _ in 0..200 {
            let t1 = crate::generate::random_binary_tree(7, &mut rng);
            let t2 = crate::generate::random_binary_tree(7, &mut rng);
            let common = common_splits(&t1, &t2);
            let Some(e) = common.first() else { continue };
            let dec = decompose_at(&t1, &t2, e).unwrap();
            assert_eq!(
                dec.outer.0.splits().len() + dec.inner.0.splits().len(),
                t1.splits().len() - 1
            );
            assert_eq!(
                dec.outer.1.splits().len() + dec.inner.1.splits().len(),
                t2.splits().len() - 1
            );
            checked += 1;
        }
        assert!(checked > 0, "no random pair shared a split");
    }

    #[test]
    fn decompose_rejects_non_common_splits() {
        let t1 = tree(&[(&[1, 2], 0.5)], 5);
        let t2 = tree(&[(&[4, 5], 1.0)], 5);
        let err = decompose_at(&t1, &t2, &split(&[4, 5], 5)).unwrap_err();
        assert!(matches!(err, TreeError::NotCommon(_)));
    }

    #[test]
    fn norms_follow_the_length_vector() {
        let set: WeightedSplitSet =
            [(split(&[1, 2], 5), 3.0), (split(&[1, 2, 3], 5), 4.0)].into_iter().collect();
        assert_eq!(set.norm_sq(), 25.0);
        assert_eq!(set.norm(), 5.0);
        assert_eq!(WeightedSplitSet::new().norm(), 0.0);
    }

    proptest! {
        #[test]
        fn compatibility_is_symmetric(xs in proptest::collection::btree_set(1usize..=8, 2..=7),
                                      ys in proptest::collection::btree_set(1usize..=8, 2..=7)) {
            let e = Split::from_members(xs, 8).unwrap();
            let f = Split::from_members(ys, 8).unwrap();
            prop_assert_eq!(are_compatible(&e, &f), are_compatible(&f, &e));
        }

        #[test]
        fn crossing_set_is_monotone(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let t1 = crate::generate::random_binary_tree(7, &mut rng);
            let t2 = crate::generate::random_binary_tree(7, &mut rng);
            let a = t1.splits().split_set();
            let b = t2.splits().split_set();
            // Any D inside A must cross no more of B than A does.
            let d: BTreeSet<Split> = a.iter().take(a.len() / 2).cloned().collect();
            let xd = crossing_set(&d, &b);
            let xa = crossing_set(&a, &b);
            prop_assert!(xd.is_subset(&xa));
        }

        #[test]
        fn norm_scales_linearly(lens in proptest::collection::vec(0.0f64..10.0, 1..5), t in 0.0f64..8.0) {
            let blocks: Vec<Vec<usize>> = vec![vec![1,2], vec![1,2,3], vec![1,2,3,4], vec![1,2,3,4,5]];
            let set: WeightedSplitSet = lens.iter().enumerate()
                .map(|(i, l)| (Split::from_members(blocks[i].clone(), 7).unwrap(), *l))
                .collect();
            let scaled: WeightedSplitSet = set.iter().map(|(s, l)| (s.clone(), l * t)).collect();
            prop_assert!((scaled.norm() - t * set.norm()).abs() < 1e-9 * (1.0 + set.norm()));
        }
    }
}
