//! Geodesic distance between two weighted trees.
//!
//! The entry point is [`geodesic_distance`], which runs the full
//! pipeline: splits compatible with the whole other tree are inserted
//! there at length zero, the pair is decomposed recursively at every
//! shared split (each contributing its squared length difference), and
//! the remaining independent no-shared-split subproblems are handed to
//! one of three interchangeable core solvers:
//!
//! * [`geodemaps_dynamic`]: depth-first search over the lattice of
//!   closed sets with best-so-far pruning per node.
//! * [`geodemaps_divide`]: branch over the minimal classes of the
//!   incompatibility poset; each choice splits the residual problem
//!   into independent parts that are solved recursively and memoized.
//! * [`brute_force`]: enumerate every maximal chain. Exponential, kept
//!   as the reference oracle for the other two.
//!
//! All three return the exact geodesic; they only differ in how much of
//! the chain space they visit.

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::posets::{
    covers_above, incompatibility_poset, maximal_chains, minimal_classes, IncompatibilityPoset,
    PosetError,
};
use crate::ratio_geo::{
    carrier_cmp, distance_of, merge_ascending, path_space_geo, Ratio, RatioSequence,
};
use crate::splits::{are_compatible, decompose_at, Split, WeightedSplitSet, WeightedTree};

/// Core search strategy for the no-shared-split subproblems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Dynamic,
    Divide,
    Brute,
}

/// Default ceiling on the number of maximal chains [`brute_force`] will
/// enumerate before giving up.
pub const DEFAULT_CHAIN_CAP: u64 = 1_000_000;

/// Options for [`geodesic_distance`].
#[derive(Clone, Copy, Debug)]
pub struct GeoOptions {
    pub algorithm: Algorithm,
    /// Include the pendant-edge term: d = sqrt(d_internal^2 + sum of
    /// squared leaf length differences).
    pub include_leaves: bool,
    /// Chain budget for [`Algorithm::Brute`]; ignored by the others.
    pub chain_cap: u64,
}

impl Default for GeoOptions {
    fn default() -> Self {
        GeoOptions {
            algorithm: Algorithm::Divide,
            include_leaves: false,
            chain_cap: DEFAULT_CHAIN_CAP,
        }
    }
}

/// A split present in both trees and its lengths there. Contributes
/// `(lengths.0 - lengths.1)^2` to the squared distance.
#[derive(Clone, Debug)]
pub struct CommonContribution {
    pub split: Split,
    pub lengths: (f64, f64),
}

/// One independent no-shared-split subproblem and its solved geodesic.
#[derive(Clone, Debug)]
pub struct AtomGeodesic {
    pub distance: f64,
    /// Strictly ascending ratio sequence; each ratio names the split
    /// sets dropped from the first tree and added from the second.
    pub carrier: RatioSequence,
}

/// A solved geodesic.
///
/// `distance` decomposes as the square root of: the sum of squared atom
/// distances, plus the squared length difference of every common
/// split, plus (when requested) the leaf contribution. `carrier` is the
/// merged ascending ratio sequence over all atoms; common splits and
/// leaves interpolate linearly and do not appear in it.
#[derive(Clone, Debug)]
pub struct Geodesic {
    pub distance: f64,
    pub carrier: RatioSequence,
    pub commons: Vec<CommonContribution>,
    /// Sum of squared pendant length differences, when included.
    pub leaf_contribution: Option<f64>,
    pub atoms: Vec<AtomGeodesic>,
    pub algorithm: Algorithm,
}

/// Errors from the geodesic solvers.
#[derive(Debug, Error, PartialEq)]
pub enum GeodesicError {
    #[error("trees are over different taxa maps")]
    TaxaMismatch,
    #[error("trees share {} split(s) [{}]; reduce at shared splits first", splits.len(), splits.join(", "))]
    CommonSplitsPresent { splits: Vec<String> },
    #[error("split {0} is compatible with the whole other tree; normalize it away first")]
    UniversalSplit(String),
    #[error("maximal chain enumeration exceeded the cap of {cap} chains")]
    ChainCapExceeded { cap: u64 },
}

impl From<PosetError> for GeodesicError {
    fn from(err: PosetError) -> Self {
        match err {
            PosetError::TaxaMismatch => GeodesicError::TaxaMismatch,
            PosetError::CommonSplits { splits } => GeodesicError::CommonSplitsPresent { splits },
        }
    }
}

/// Sum of squared pendant length differences between two trees over the
/// same taxa map.
pub fn leaf_contribution(t1: &WeightedTree, t2: &WeightedTree) -> f64 {
    debug_assert_eq!(t1.taxa(), t2.taxa(), "trees over different taxa maps");
    t1.leaf_lengths()
        .iter()
        .zip(t2.leaf_lengths())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

#[derive(Default)]
struct Parts {
    sum_sq: f64,
    commons: Vec<CommonContribution>,
    atoms: Vec<AtomGeodesic>,
}

/// Computes the geodesic between two trees over the same taxa map.
///
/// Runs the preprocessing pipeline (normalization of splits compatible
/// with the whole other tree, recursive decomposition at shared splits)
/// and dispatches each remaining atom to the selected core algorithm.
pub fn geodesic_distance(
    t1: &WeightedTree,
    t2: &WeightedTree,
    opts: &GeoOptions,
) -> Result<Geodesic, GeodesicError> {
    if t1.taxa() != t2.taxa() {
        return Err(GeodesicError::TaxaMismatch);
    }

    // A split compatible with every split of the other tree belongs to
    // the common orthant: insert it there at length zero and let the
    // shared-split decomposition pick it up. One pass suffices; adding
    // splits never makes another split newly compatible with the whole
    // tree, and the insertions (all drawn from one tree) are mutually
    // compatible.
    let mut a = t1.clone();
    let mut b = t2.clone();
    for (s, _) in t1.splits().iter() {
        if !b.splits().contains(s) && b.splits().splits().all(|t| are_compatible(s, t)) {
            b = b.with_split(s.clone(), 0.0);
        }
    }
    for (s, _) in t2.splits().iter() {
        if !a.splits().contains(s) && a.splits().splits().all(|t| are_compatible(s, t)) {
            a = a.with_split(s.clone(), 0.0);
        }
    }

    let mut parts = Parts::default();
    solve_pair(a, b, opts, &mut parts)?;

    let leaf = opts.include_leaves.then(|| leaf_contribution(t1, t2));
    let distance = (parts.sum_sq + leaf.unwrap_or(0.0)).sqrt();
    let carriers: Vec<RatioSequence> = parts.atoms.iter().map(|a| a.carrier.clone()).collect();
    let carrier = merge_ascending(&carriers)
        .expect("atom carriers are strictly ascending with disjoint supports");
    Ok(Geodesic {
        distance,
        carrier,
        commons: parts.commons,
        leaf_contribution: leaf,
        atoms: parts.atoms,
        algorithm: opts.algorithm,
    })
}

/// Recursive decomposition: peel off shared splits until none remain,
/// then solve the atom.
fn solve_pair(
    a: WeightedTree,
    b: WeightedTree,
    opts: &GeoOptions,
    parts: &mut Parts,
) -> Result<(), GeodesicError> {
    let shared = a.splits().splits().find(|s| b.splits().contains(s)).cloned();
    if let Some(e) = shared {
        let dec = decompose_at(&a, &b, &e).expect("split is present in both trees");
        let (l1, l2) = dec.lengths;
        parts.sum_sq += (l1 - l2) * (l1 - l2);
        parts.commons.push(CommonContribution {
            split: e,
            lengths: dec.lengths,
        });
        solve_pair(dec.inner.0, dec.inner.1, opts, parts)?;
        solve_pair(dec.outer.0, dec.outer.1, opts, parts)?;
        return Ok(());
    }

    // No shared splits left. The normalization pass guarantees the two
    // sides are empty together: any split incompatible with nothing on
    // the other side would have been inserted there and decomposed away.
    assert_eq!(
        a.splits().is_empty(),
        b.splits().is_empty(),
        "decomposition produced an unbalanced atom"
    );
    if a.splits().is_empty() {
        return Ok(());
    }
    let (distance, carrier) = solve_atom(a.splits(), b.splits(), opts)?;
    parts.sum_sq += distance * distance;
    parts.atoms.push(AtomGeodesic { distance, carrier });
    Ok(())
}

fn solve_atom(
    a: &WeightedSplitSet,
    b: &WeightedSplitSet,
    opts: &GeoOptions,
) -> Result<(f64, RatioSequence), GeodesicError> {
    match opts.algorithm {
        Algorithm::Dynamic => Ok(core_dynamic(&IncompatibilityPoset::from_split_sets(a, b))),
        Algorithm::Divide => {
            let mut memo = HashMap::new();
            Ok(core_divide(a, b, &mut memo))
        }
        Algorithm::Brute => core_brute(
            &IncompatibilityPoset::from_split_sets(a, b),
            opts.chain_cap,
        ),
    }
}

/// Precondition check shared by the public core entry points: same
/// taxa, no shared splits, and no split compatible with the whole other
/// tree (the pipeline in [`geodesic_distance`] establishes all three).
fn check_core_pre(t1: &WeightedTree, t2: &WeightedTree) -> Result<(), GeodesicError> {
    if t1.taxa() != t2.taxa() {
        return Err(GeodesicError::TaxaMismatch);
    }
    let shared: Vec<String> = t1
        .splits()
        .splits()
        .filter(|s| t2.splits().contains(s))
        .map(|s| s.to_string())
        .collect();
    if !shared.is_empty() {
        return Err(GeodesicError::CommonSplitsPresent { splits: shared });
    }
    for (s, other) in t1
        .splits()
        .splits()
        .map(|s| (s, t2))
        .chain(t2.splits().splits().map(|s| (s, t1)))
    {
        if other.splits().splits().all(|t| are_compatible(s, t)) {
            return Err(GeodesicError::UniversalSplit(s.to_string()));
        }
    }
    Ok(())
}

fn core_geodesic(distance: f64, carrier: RatioSequence, algorithm: Algorithm) -> Geodesic {
    Geodesic {
        distance,
        atoms: vec![AtomGeodesic {
            distance,
            carrier: carrier.clone(),
        }],
        carrier,
        commons: Vec::new(),
        leaf_contribution: None,
        algorithm,
    }
}

/// Depth-first search over the lattice of closed sets.
///
/// Every lattice node stores the best carrier found so far for the
/// subproblem it represents; a branch is pruned when it reaches a node
/// with a candidate no shorter than the stored one. Children are tried
/// in order of increasing transition ratio. Requires the preprocessing
/// pipeline to have run (no shared splits, no split compatible with the
/// whole other tree).
pub fn geodemaps_dynamic(
    t1: &WeightedTree,
    t2: &WeightedTree,
) -> Result<Geodesic, GeodesicError> {
    check_core_pre(t1, t2)?;
    let poset = incompatibility_poset(t1, t2)?;
    let (distance, carrier) = core_dynamic(&poset);
    Ok(core_geodesic(distance, carrier, Algorithm::Dynamic))
}

/// Branch over minimal classes with decomposition and memoization.
///
/// Same preconditions and result as [`geodemaps_dynamic`].
pub fn geodemaps_divide(t1: &WeightedTree, t2: &WeightedTree) -> Result<Geodesic, GeodesicError> {
    check_core_pre(t1, t2)?;
    let mut memo = HashMap::new();
    let (distance, carrier) = core_divide(t1.splits(), t2.splits(), &mut memo);
    Ok(core_geodesic(distance, carrier, Algorithm::Divide))
}

/// Reference solver: minimum over every maximal chain of the lattice.
///
/// Fails once more than `chain_cap` chains have been enumerated.
pub fn brute_force(
    t1: &WeightedTree,
    t2: &WeightedTree,
    chain_cap: u64,
) -> Result<Geodesic, GeodesicError> {
    check_core_pre(t1, t2)?;
    let poset = incompatibility_poset(t1, t2)?;
    let (distance, carrier) = core_brute(&poset, chain_cap)?;
    Ok(core_geodesic(distance, carrier, Algorithm::Brute))
}

struct Best {
    distance: f64,
    carrier: RatioSequence,
}

fn core_dynamic(poset: &IncompatibilityPoset) -> (f64, RatioSequence) {
    let bottom = poset.bottom();
    let top_mask = poset.top().added_mask().clone();
    let mut table: HashMap<FixedBitSet, Best> = HashMap::new();
    table.insert(
        bottom.added_mask().clone(),
        Best {
            distance: 0.0,
            carrier: RatioSequence::new(),
        },
    );
    dynamic_visit(&bottom, poset, &mut table);
    let best = table
        .remove(&top_mask)
        .expect("the search always reaches the top of the lattice");
    (best.distance, best.carrier)
}

fn dynamic_visit(
    node: &crate::posets::PathPosetNode,
    poset: &IncompatibilityPoset,
    table: &mut HashMap<FixedBitSet, Best>,
) {
    let carrier = table[node.added_mask()].carrier.clone();
    let mut covers = covers_above(node, poset);
    covers.sort_by(|x, y| x.ratio.value_cmp(&y.ratio));
    for cover in covers {
        let extended = carrier
            .clone()
            .extended(&RatioSequence::from_ratios(vec![cover.ratio]));
        let candidate = path_space_geo(&extended);
        let distance = distance_of(&candidate).expect("stack output is ascending");
        let improves = match table.get(cover.node.added_mask()) {
            None => true,
            Some(stored) => distance < stored.distance,
        };
        if improves {
            table.insert(
                cover.node.added_mask().clone(),
                Best {
                    distance,
                    carrier: candidate,
                },
            );
            dynamic_visit(&cover.node, poset, table);
        }
    }
}

fn core_brute(
    poset: &IncompatibilityPoset,
    chain_cap: u64,
) -> Result<(f64, RatioSequence), GeodesicError> {
    let mut best: Option<Best> = None;
    let mut count: u64 = 0;
    for chain in maximal_chains(poset) {
        count += 1;
        if count > chain_cap {
            return Err(GeodesicError::ChainCapExceeded { cap: chain_cap });
        }
        let seq: RatioSequence = chain.into_iter().map(|c| c.ratio).collect();
        let carrier = path_space_geo(&seq);
        let distance = distance_of(&carrier).expect("stack output is ascending");
        let improves = match &best {
            None => true,
            Some(stored) => {
                distance < stored.distance
                    || (distance == stored.distance
                        && carrier_cmp(&carrier, &stored.carrier) == std::cmp::Ordering::Less)
            }
        };
        if improves {
            best = Some(Best { distance, carrier });
        }
    }
    let best = best.expect("the lattice always has at least one maximal chain");
    Ok((best.distance, best.carrier))
}

/// Memo key: both weighted split families, lengths made bit-exact.
type DivideKey = (Vec<(FixedBitSet, u64)>, Vec<(FixedBitSet, u64)>);

fn divide_key(a: &WeightedSplitSet, b: &WeightedSplitSet) -> DivideKey {
    let side = |set: &WeightedSplitSet| {
        set.iter()
            .map(|(s, l)| (s.block().clone(), l.to_bits()))
            .collect()
    };
    (side(a), side(b))
}

fn core_divide(
    a: &WeightedSplitSet,
    b: &WeightedSplitSet,
    memo: &mut HashMap<DivideKey, (f64, RatioSequence)>,
) -> (f64, RatioSequence) {
    if b.is_empty() {
        debug_assert!(a.is_empty(), "unbalanced divide subproblem");
        return (0.0, RatioSequence::new());
    }
    let key = divide_key(a, b);
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }

    let a_set = a.split_set();
    let b_set = b.split_set();
    let mut best: Option<(f64, RatioSequence)> = None;
    for class in minimal_classes(&a_set, &b_set) {
        let crossing = crate::splits::crossing_set(&class, &a_set);
        debug_assert!(!crossing.is_empty(), "minimal class with empty crossing set");
        let transition = Ratio::from_sets(
            crossing.iter().map(|s| (s.clone(), a.get(s).unwrap())),
            class.iter().map(|s| (s.clone(), b.get(s).unwrap())),
        );

        // Adding the class turns its members into shared splits; the
        // residual splits decompose by their tightest container in that
        // laminar family (or the outside region), and the parts are
        // independent.
        let residual_a = a.filtered(|s| !crossing.contains(s));
        let residual_b = b.filtered(|s| !class.contains(s));
        let mut buckets: BTreeMap<Option<&Split>, (WeightedSplitSet, WeightedSplitSet)> =
            BTreeMap::new();
        let tightest = |s: &Split| {
            class
                .iter()
                .filter(|m| s.block().is_subset(m.block()))
                .min_by_key(|m| m.size())
        };
        for (s, l) in residual_a.iter() {
            let entry = buckets.entry(tightest(s)).or_default();
            entry.0.insert(s.clone(), l);
        }
        for (s, l) in residual_b.iter() {
            let entry = buckets.entry(tightest(s)).or_default();
            entry.1.insert(s.clone(), l);
        }

        let mut carriers = Vec::with_capacity(buckets.len());
        for (sub_a, sub_b) in buckets.values() {
            let (_, carrier) = core_divide(sub_a, sub_b, memo);
            carriers.push(carrier);
        }
        let merged = merge_ascending(&carriers)
            .expect("subproblem carriers are ascending with disjoint supports");
        let seq = RatioSequence::from_ratios(vec![transition]).extended(&merged);
        let carrier = path_space_geo(&seq);
        let distance = distance_of(&carrier).expect("stack output is ascending");
        let improves = match &best {
            None => true,
            Some((stored, stored_carrier)) => {
                distance < *stored
                    || (distance == *stored
                        && carrier_cmp(&carrier, stored_carrier) == std::cmp::Ordering::Less)
            }
        };
        if improves {
            best = Some((distance, carrier));
        }
    }
    let best = best.expect("nonempty subproblem has at least one minimal class");
    memo.insert(key, best.clone());
    best
}
