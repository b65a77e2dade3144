//! The incompatibility poset of a tree pair and the lattice of closed
//! split sets.
//!
//! For trees without shared splits, every split `f` of the second tree
//! has a *crossing set*: the splits of the first tree it is
//! incompatible with. Splits with identical crossing sets form an
//! equivalence class, and classes ordered by crossing-set inclusion
//! make up the incompatibility poset.
//!
//! A route between the trees adds splits of the second tree in stages,
//! and before a split can be added its whole crossing set must already
//! have been dropped. The split sets reachable this way are exactly the
//! *closed* sets of the operator `A -> {f : X(f) ⊆ X(A)}`; ordered by
//! inclusion they form a bounded lattice whose maximal chains are in
//! bijection with the maximal families of orthant sequences the
//! geodesic can travel through. This module builds the poset, evaluates
//! the closure operator, lists cover moves, and enumerates maximal
//! chains lazily; the chain count is exponential in general, which is
//! why the enumeration is an iterator and the real solvers search the
//! lattice instead.

use std::collections::BTreeSet;
use std::collections::HashMap;
use std::fmt::Write as _;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::ratio_geo::Ratio;
use crate::splits::{are_compatible, Split, WeightedSplitSet, WeightedTree};

/// Errors from poset construction.
#[derive(Debug, Error, PartialEq)]
pub enum PosetError {
    #[error("trees are over different taxa maps")]
    TaxaMismatch,
    #[error("trees share {} split(s) [{}]; the poset is defined for disjoint split sets",
            splits.len(), splits.join(", "))]
    CommonSplits { splits: Vec<String> },
}

/// The incompatibility poset of an ordered tree pair.
///
/// Holds both split sets with their lengths (indexed, in canonical
/// split order), the equivalence classes of the second tree's splits,
/// and each class's crossing set as a bitmask over the first tree's
/// splits. All path-poset navigation happens through this type.
#[derive(Clone, Debug)]
pub struct IncompatibilityPoset {
    t1: Vec<(Split, f64)>,
    t2: Vec<(Split, f64)>,
    class_of: Vec<usize>,
    classes: Vec<Vec<usize>>,
    class_crossing: Vec<FixedBitSet>,
}

/// A node of the lattice of closed sets: the set `added` of
/// already-added splits of the second tree (a closed set) plus its
/// crossing set in the first tree. Both are index masks into the
/// owning [`IncompatibilityPoset`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathPosetNode {
    added: FixedBitSet,
    crossing: FixedBitSet,
}

impl PathPosetNode {
    /// The added splits, resolved against the owning poset.
    pub fn added_splits<'p>(&self, poset: &'p IncompatibilityPoset) -> Vec<&'p Split> {
        self.added.ones().map(|i| &poset.t2[i].0).collect()
    }

    /// The crossing set, resolved against the owning poset.
    pub fn crossing_splits<'p>(&self, poset: &'p IncompatibilityPoset) -> Vec<&'p Split> {
        self.crossing.ones().map(|i| &poset.t1[i].0).collect()
    }

    /// Memo key: the added mask alone determines the node.
    pub fn added_mask(&self) -> &FixedBitSet {
        &self.added
    }
}

/// One cover move `A < B` in the lattice: the successor node plus the
/// transition ratio whose dropped side is `X(B) \ X(A)` (lengths from
/// the first tree) and added side is `B \ A` (lengths from the second).
#[derive(Clone, Debug)]
pub struct Cover {
    pub node: PathPosetNode,
    pub ratio: Ratio,
}

/// Builds the incompatibility poset of a tree pair.
///
/// The trees must share a taxa map and no splits; reduce at common
/// splits first (the geodesic pipeline does this automatically).
pub fn incompatibility_poset(
    t1: &WeightedTree,
    t2: &WeightedTree,
) -> Result<IncompatibilityPoset, PosetError> {
    if t1.taxa() != t2.taxa() {
        return Err(PosetError::TaxaMismatch);
    }
    let shared: Vec<String> = t1
        .splits()
        .splits()
        .filter(|s| t2.splits().contains(s))
        .map(|s| s.to_string())
        .collect();
    if !shared.is_empty() {
        return Err(PosetError::CommonSplits { splits: shared });
    }
    Ok(IncompatibilityPoset::from_split_sets(
        t1.splits(),
        t2.splits(),
    ))
}

impl IncompatibilityPoset {
    /// Builds the poset directly from two weighted split families,
    /// assumed disjoint (no shared split).
    pub fn from_split_sets(e1: &WeightedSplitSet, e2: &WeightedSplitSet) -> Self {
        let t1: Vec<(Split, f64)> = e1.iter().map(|(s, l)| (s.clone(), l)).collect();
        let t2: Vec<(Split, f64)> = e2.iter().map(|(s, l)| (s.clone(), l)).collect();

        let mut class_of = vec![0usize; t2.len()];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_crossing: Vec<FixedBitSet> = Vec::new();
        let mut lookup: HashMap<FixedBitSet, usize> = HashMap::new();
        for (fi, (f, _)) in t2.iter().enumerate() {
            let mut crossing = FixedBitSet::with_capacity(t1.len());
            for (ei, (e, _)) in t1.iter().enumerate() {
                if !are_compatible(e, f) {
                    crossing.insert(ei);
                }
            }
            let class = *lookup.entry(crossing.clone()).or_insert_with(|| {
                classes.push(Vec::new());
                class_crossing.push(crossing);
                classes.len() - 1
            });
            class_of[fi] = class;
            classes[class].push(fi);
        }
        IncompatibilityPoset {
            t1,
            t2,
            class_of,
            classes,
            class_crossing,
        }
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Splits of one equivalence class.
    pub fn class_members(&self, class: usize) -> Vec<&Split> {
        self.classes[class].iter().map(|i| &self.t2[*i].0).collect()
    }

    /// Crossing set of one class.
    pub fn class_crossing(&self, class: usize) -> Vec<&Split> {
        self.class_crossing[class].ones().map(|i| &self.t1[i].0).collect()
    }

    /// The class a given split of the second tree belongs to.
    pub fn class_of(&self, split: &Split) -> Option<usize> {
        self.t2.iter().position(|(s, _)| s == split).map(|i| self.class_of[i])
    }

    /// The poset order: `a <= b` iff `X(a) ⊆ X(b)`.
    pub fn le(&self, a: usize, b: usize) -> bool {
        self.class_crossing[a].is_subset(&self.class_crossing[b])
    }

    /// Classes with no strictly smaller class below them.
    pub fn minimal_class_ids(&self) -> Vec<usize> {
        (0..self.classes.len())
            .filter(|&c| {
                !(0..self.classes.len())
                    .any(|d| d != c && self.le(d, c) && self.class_crossing[d] != self.class_crossing[c])
            })
            .collect()
    }

    /// Number of splits in the first tree.
    pub fn t1_len(&self) -> usize {
        self.t1.len()
    }

    /// Number of splits in the second tree.
    pub fn t2_len(&self) -> usize {
        self.t2.len()
    }

    /// The bottom node: the closure of the empty set. After the
    /// geodesic preprocessing no split is compatible with the whole
    /// other tree, so this is the empty set itself.
    pub fn bottom(&self) -> PathPosetNode {
        self.node_from_mask(FixedBitSet::with_capacity(self.t2.len()))
    }

    /// The top node: every split of the second tree added.
    pub fn top(&self) -> PathPosetNode {
        let mut all = FixedBitSet::with_capacity(self.t2.len());
        all.insert_range(..);
        self.node_from_mask(all)
    }

    /// Closure and crossing of an arbitrary added-mask.
    fn node_from_mask(&self, added: FixedBitSet) -> PathPosetNode {
        let mut crossing = FixedBitSet::with_capacity(self.t1.len());
        for f in added.ones() {
            crossing.union_with(&self.class_crossing[self.class_of[f]]);
        }
        let mut closed = added;
        for (f, _) in self.t2.iter().enumerate().map(|(i, _)| (i, ())) {
            if self.class_crossing[self.class_of[f]].is_subset(&crossing) {
                closed.insert(f);
            }
        }
        PathPosetNode {
            added: closed,
            crossing,
        }
    }

    /// Whether a node is the top of the lattice.
    pub fn is_top(&self, node: &PathPosetNode) -> bool {
        node.added.count_ones(..) == self.t2.len()
    }

    fn ratio_for(&self, dropped: &FixedBitSet, added: &FixedBitSet) -> Ratio {
        Ratio::from_sets(
            dropped.ones().map(|i| self.t1[i].clone()),
            added.ones().map(|i| self.t2[i].clone()),
        )
    }
}

/// The closed set generated by `a`: all splits whose crossing set is
/// contained in the union of the crossing sets of `a`.
///
/// # Panics
///
/// Panics if `a` contains a split that is not in the poset's second
/// split family.
pub fn closure(a: &BTreeSet<Split>, poset: &IncompatibilityPoset) -> BTreeSet<Split> {
    let mut mask = FixedBitSet::with_capacity(poset.t2.len());
    for split in a {
        let index = poset
            .t2
            .iter()
            .position(|(s, _)| s == split)
            .expect("closure argument must be a subset of the second split family");
        mask.insert(index);
    }
    let node = poset.node_from_mask(mask);
    node.added.ones().map(|i| poset.t2[i].0.clone()).collect()
}

/// Equivalence classes of the residual incompatibility poset of two
/// plain split families, keeping only the minimal ones.
///
/// Grouping is by identical crossing set against `t1_splits`; a class
/// is minimal when no other class has a strictly smaller crossing set.
/// Splits of `t2_splits` compatible with everything form a class with
/// an empty crossing set, which is then the unique minimal class; the
/// geodesic preprocessing removes such splits before this is called.
pub fn minimal_classes(
    t1_splits: &BTreeSet<Split>,
    t2_splits: &BTreeSet<Split>,
) -> Vec<BTreeSet<Split>> {
    let mut groups: Vec<(BTreeSet<Split>, BTreeSet<Split>)> = Vec::new();
    for f in t2_splits {
        let crossing: BTreeSet<Split> = t1_splits
            .iter()
            .filter(|e| !are_compatible(e, f))
            .cloned()
            .collect();
        match groups.iter_mut().find(|(c, _)| *c == crossing) {
            Some((_, members)) => {
                members.insert(f.clone());
            }
            None => groups.push((crossing, BTreeSet::from([f.clone()]))),
        }
    }
    groups
        .iter()
        .filter(|(crossing, _)| {
            !groups
                .iter()
                .any(|(other, _)| other.len() < crossing.len() && other.is_subset(crossing))
        })
        .map(|(_, members)| members.clone())
        .collect()
}

/// The cover moves available above a node.
///
/// The splits not yet added are regrouped by their *residual* crossing
/// sets (original crossing minus what the node already dropped); one
/// cover exists per minimal residual class, and taking it adds exactly
/// that class and drops exactly its residual crossing set. Covers come
/// back in a deterministic order (by smallest member index).
pub fn covers_above(node: &PathPosetNode, poset: &IncompatibilityPoset) -> Vec<Cover> {
    let mut groups: Vec<(FixedBitSet, FixedBitSet)> = Vec::new();
    for f in 0..poset.t2.len() {
        if node.added.contains(f) {
            continue;
        }
        let mut residual = poset.class_crossing[poset.class_of[f]].clone();
        residual.difference_with(&node.crossing);
        match groups.iter_mut().find(|(rc, _)| *rc == residual) {
            Some((_, members)) => members.insert(f),
            None => {
                let mut members = FixedBitSet::with_capacity(poset.t2.len());
                members.insert(f);
                groups.push((residual, members));
            }
        }
    }
    let minimal = |rc: &FixedBitSet| {
        !groups
            .iter()
            .any(|(other, _)| other != rc && other.is_subset(rc))
    };
    groups
        .iter()
        .filter(|(rc, _)| minimal(rc))
        .map(|(rc, members)| {
            let mut added = node.added.clone();
            added.union_with(members);
            let mut crossing = node.crossing.clone();
            crossing.union_with(rc);
            let successor = PathPosetNode {
                added: added.clone(),
                crossing,
            };
            debug_assert_eq!(
                poset.node_from_mask(added).added,
                successor.added,
                "adding a minimal residual class must give a closed set"
            );
            Cover {
                ratio: poset.ratio_for(rc, members),
                node: successor,
            }
        })
        .collect()
}

/// Lazily enumerates every maximal chain from the bottom to the top of
/// the lattice of closed sets. Each item is the list of cover moves
/// along one chain. The number of chains is exponential in the worst
/// case; never collect this blindly.
pub fn maximal_chains(poset: &IncompatibilityPoset) -> MaximalChains<'_> {
    let bottom = poset.bottom();
    let first_covers = covers_above(&bottom, poset);
    MaximalChains {
        poset,
        frames: vec![Frame {
            covers: first_covers,
            next: 0,
        }],
        path: Vec::new(),
        served_trivial: false,
    }
}

struct Frame {
    covers: Vec<Cover>,
    next: usize,
}

/// Iterator over maximal chains; see [`maximal_chains`].
pub struct MaximalChains<'p> {
    poset: &'p IncompatibilityPoset,
    frames: Vec<Frame>,
    path: Vec<Cover>,
    served_trivial: bool,
}

impl Iterator for MaximalChains<'_> {
    type Item = Vec<Cover>;

    fn next(&mut self) -> Option<Self::Item> {
        // Degenerate lattice (no splits on the second side): one empty
        // chain.
        if self.poset.t2.is_empty() {
            if self.served_trivial {
                return None;
            }
            self.served_trivial = true;
            return Some(Vec::new());
        }
        loop {
            let frame = self.frames.last_mut()?;
            if frame.next >= frame.covers.len() {
                self.frames.pop();
                self.path.pop();
                continue;
            }
            let cover = frame.covers[frame.next].clone();
            frame.next += 1;
            if self.poset.is_top(&cover.node) {
                let mut chain = self.path.clone();
                chain.push(cover);
                return Some(chain);
            }
            let covers = covers_above(&cover.node, self.poset);
            self.path.push(cover);
            self.frames.push(Frame { covers, next: 0 });
        }
    }
}

impl IncompatibilityPoset {
    /// Renders the class poset as a DOT digraph (Hasse edges point from
    /// smaller to larger crossing sets).
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph incompatibility_poset {\n");
        out.push_str("  rankdir=BT;\n  node [shape=box, fontname=\"monospace\"];\n");
        for (c, members) in self.classes.iter().enumerate() {
            let label_members: Vec<String> =
                members.iter().map(|i| self.t2[*i].0.to_string()).collect();
            let label_crossing: Vec<String> = self.class_crossing[c]
                .ones()
                .map(|i| self.t1[i].0.to_string())
                .collect();
            let _ = writeln!(
                out,
                "  c{c} [label=\"{{{}}}\\nX = {{{}}}\"];",
                label_members.join(", "),
                label_crossing.join(", ")
            );
        }
        let strictly_less =
            |a: usize, b: usize| self.le(a, b) && self.class_crossing[a] != self.class_crossing[b];
        for a in 0..self.classes.len() {
            for b in 0..self.classes.len() {
                if strictly_less(a, b)
                    && !(0..self.classes.len())
                        .any(|c| strictly_less(a, c) && strictly_less(c, b))
                {
                    let _ = writeln!(out, "  c{a} -> c{b};");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}
