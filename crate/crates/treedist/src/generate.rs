//! Random instances for tests and benchmarks.
//!
//! Trees are drawn uniformly over binary rooted topologies by sequential
//! leaf insertion: viewing a rooted tree on leaves `1..=n` as an
//! unrooted tree on `{0, ..., n}` (the root is just the extra taxon
//! `0`), each new taxon subdivides an edge chosen uniformly at random.
//! Every binary topology arises from exactly one insertion sequence, so
//! the `(2n - 3)!!` topologies are equally likely. Edge lengths are
//! uniform on `(0, 1]`, pendant edges included.

use std::sync::Arc;

use rand::Rng;

use crate::ratio_geo::{Ratio, RatioSequence};
use crate::splits::{Split, WeightedSplitSet, WeightedTree};
use crate::tree_io::TaxaMap;

/// A taxa map with zero-padded synthetic names `t01, t02, ...` whose
/// lexicographic order matches the numeric order.
pub fn synthetic_taxa(n: usize) -> Arc<TaxaMap> {
    let width = n.to_string().len();
    Arc::new(
        TaxaMap::from_names((1..=n).map(|i| format!("t{i:0width$}")))
            .expect("synthetic names are unique"),
    )
}

/// A uniformly random binary rooted topology on `n >= 2` leaves with
/// fresh synthetic taxa; lengths uniform on `(0, 1]`.
pub fn random_binary_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> WeightedTree {
    random_binary_tree_on(&synthetic_taxa(n), rng)
}

/// As [`random_binary_tree`], over a caller-supplied taxa map so that
/// several trees can share one universe.
pub fn random_binary_tree_on<R: Rng + ?Sized>(taxa: &Arc<TaxaMap>, rng: &mut R) -> WeightedTree {
    let n = taxa.len();
    assert!(n >= 2, "need at least two leaves");

    // Unrooted edge list over node ids: taxa are 0..=n, internal nodes
    // follow. Start from the star on {0, 1, 2} and insert the rest.
    let mut next_id = n + 1;
    let mut edges: Vec<(usize, usize)> = Vec::with_capacity(2 * n);
    let hub = next_id;
    next_id += 1;
    edges.push((0, hub));
    edges.push((1, hub));
    edges.push((2, hub));
    for taxon in 3..=n {
        let at = rng.random_range(0..edges.len());
        let (u, v) = edges[at];
        let mid = next_id;
        next_id += 1;
        edges[at] = (u, mid);
        edges.push((mid, v));
        edges.push((mid, taxon));
    }

    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); next_id];
    for (u, v) in &edges {
        adjacency[*u].push(*v);
        adjacency[*v].push(*u);
    }

    // Root at taxon 0 and collect the leaves below every edge. The edge
    // incident to 0 spans all leaves and is not a split; pendant edges
    // become leaf lengths.
    let mut splits = WeightedSplitSet::new();
    let mut leaf_lengths = vec![0.0; n];
    let positive = |rng: &mut R| 1.0 - rng.random::<f64>();

    // Iterative post-order from node 0.
    let mut below: Vec<Vec<usize>> = vec![Vec::new(); next_id];
    let mut stack = vec![(0usize, usize::MAX, false)];
    let mut order = Vec::new();
    while let Some((node, parent, expanded)) = stack.pop() {
        if expanded {
            order.push((node, parent));
            continue;
        }
        stack.push((node, parent, true));
        for &next in &adjacency[node] {
            if next != parent {
                stack.push((next, node, false));
            }
        }
    }
    for &(node, parent) in &order {
        if node <= n && node != 0 {
            below[node].push(node);
            leaf_lengths[node - 1] = positive(rng);
        } else {
            let kids: Vec<usize> = adjacency[node].iter().copied().filter(|&k| k != parent).collect();
            let mut members = Vec::new();
            for kid in kids {
                members.extend(below[kid].iter().copied());
            }
            below[node] = members;
            let is_top = parent == 0 || node == 0;
            if !is_top && node > n {
                let split = Split::from_members(below[node].iter().copied(), n)
                    .expect("internal edges have 2..n-1 leaves below");
                splits.insert(split, positive(rng));
            }
        }
    }

    WeightedTree::new(splits, leaf_lengths, Arc::clone(taxa)).expect("construction is consistent")
}

/// A pair of independent random trees over one shared taxa map.
pub fn random_tree_pair<R: Rng + ?Sized>(n: usize, rng: &mut R) -> (WeightedTree, WeightedTree) {
    let taxa = synthetic_taxa(n);
    (
        random_binary_tree_on(&taxa, rng),
        random_binary_tree_on(&taxa, rng),
    )
}

/// A sequence of `k` anonymous ratios with norms uniform on `(0, hi]`.
pub fn random_ratio_sequence<R: Rng + ?Sized>(k: usize, hi: f64, rng: &mut R) -> RatioSequence {
    (0..k)
        .map(|_| {
            Ratio::from_norms(
                hi * (1.0 - rng.random::<f64>()),
                hi * (1.0 - rng.random::<f64>()),
            )
        })
        .collect()
}
