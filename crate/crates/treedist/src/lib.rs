//! Exact geodesic distances between rooted, edge-weighted phylogenetic
//! trees.
//!
//! The space of rooted trees on a fixed leaf set is a union of Euclidean
//! orthants, one per tree topology, glued along shared faces. Within one
//! orthant the coordinates are the internal edge lengths; across orthants
//! the metric is the length of the shortest connecting path. That space
//! is non-positively curved, so the shortest path (the geodesic) between
//! any two trees is unique, and its length is a well-behaved distance.
//!
//! This crate computes that distance exactly:
//!
//! * [`tree_io`] parses and writes Newick text and maintains the shared
//!   leaf-name index.
//! * [`splits`] implements the split (bipartition) algebra: extraction
//!   from trees, compatibility, crossing sets, norms, and decomposition
//!   at shared splits.
//! * [`posets`] builds the incompatibility poset of two trees and
//!   navigates the lattice of closed split sets whose maximal chains
//!   enumerate the candidate orthant sequences.
//! * [`ratio_geo`] solves the one-dimensional core problem: given an
//!   ordered sequence of drop/add norm ratios, produce the ascending
//!   sequence describing the shortest path through that orthant sequence
//!   in linear time.
//! * [`geodesic`] orchestrates the full computation with three
//!   interchangeable strategies: a pruned depth-first search over the
//!   closed-set lattice, a divide-and-conquer with memoization, and a
//!   brute-force enumeration of maximal chains used as an oracle.
//! * [`generate`] produces random trees and ratio sequences for testing
//!   and benchmarking.
//! * [`cli`] exposes everything as the `treedist` command.
//!
//! Distances are symmetric, satisfy the triangle inequality, and scale
//! linearly when all edge lengths are scaled; the test suite checks all
//! of that, plus agreement of the three strategies, on random instances.

pub mod cli;
pub mod generate;
pub mod geodesic;
pub mod posets;
pub mod ratio_geo;
pub mod splits;
pub mod tree_io;

pub use geodesic::{geodesic_distance, Algorithm, GeoOptions, Geodesic};
pub use splits::{Split, WeightedSplitSet, WeightedTree};
pub use tree_io::{build_taxa_map, parse_newick, write_newick, RawTree, TaxaMap};
