//! Command-line front end.
//!
//! Three subcommands over a Newick file (one tree per line): `dist`
//! prints the geodesic distance of one pair, `matrix` prints the full
//! pairwise matrix, and `splits` dumps the split and incompatibility
//! structure of a pair. Exit codes: 1 for input problems, 2 for taxa
//! mismatches, 3 for an exceeded brute-force chain cap.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use thiserror::Error;

use crate::geodesic::{
    geodesic_distance, Algorithm, GeoOptions, Geodesic, GeodesicError, DEFAULT_CHAIN_CAP,
};
use crate::posets::IncompatibilityPoset;
use crate::splits::{splits_of_tree, TreeError, WeightedTree};
use crate::tree_io::{build_taxa_map, parse_newick_file, FileParseError, TaxaError, TaxaMap};

#[derive(Debug, Parser)]
#[command(
    name = "treedist",
    version,
    about = "Exact geodesic distances between rooted edge-weighted trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geodesic distance between two trees of the input file.
    Dist(DistArgs),
    /// Pairwise distance matrix over all trees of the input file.
    Matrix(MatrixArgs),
    /// Split and incompatibility-poset diagnostics for a tree pair.
    Splits(SplitsArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Newick file, one tree per line ('#' comment lines allowed).
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Branch length to assume for edges written without one.
    #[arg(long, value_name = "X")]
    pub default_length: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Divide)]
    pub algorithm: AlgorithmArg,
    /// Include pendant edges in the distance.
    #[arg(long)]
    pub leaves: bool,
    /// Zero-based indices of the two trees to compare (default: 0 1).
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub pair: Option<Vec<usize>>,
    /// Maximal chains the brute-force algorithm may enumerate.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_CHAIN_CAP)]
    pub chain_cap: u64,
    /// Also print the carrier and decomposition summary.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Divide)]
    pub algorithm: AlgorithmArg,
    /// Include pendant edges in the distances.
    #[arg(long)]
    pub leaves: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub output: OutputFormat,
    /// Maximal chains the brute-force algorithm may enumerate.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_CHAIN_CAP)]
    pub chain_cap: u64,
}

#[derive(Debug, Args)]
pub struct SplitsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Zero-based indices of the two trees to inspect (default: the
    /// file must contain exactly two).
    #[arg(long, num_args = 2, value_names = ["I", "J"])]
    pub pair: Option<Vec<usize>>,
    /// Print the class poset as a DOT digraph instead of text.
    #[arg(long)]
    pub dot: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Dynamic,
    Divide,
    Brute,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(arg: AlgorithmArg) -> Self {
        match arg {
            AlgorithmArg::Dynamic => Algorithm::Dynamic,
            AlgorithmArg::Divide => Algorithm::Divide,
            AlgorithmArg::Brute => Algorithm::Brute,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Tsv,
    Json,
}

/// Errors surfaced to the user, each mapped to a stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read input: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Parse(#[from] FileParseError),
    #[error("{0}")]
    Tree(#[from] TreeError),
    #[error("{0}")]
    Taxa(#[from] TaxaError),
    #[error("input has {found} tree(s) but the command needs {need}")]
    NotEnoughTrees { found: usize, need: usize },
    #[error("--pair indices must be two distinct numbers below the tree count ({count})")]
    BadPair { count: usize },
    #[error("{0}")]
    Geodesic(GeodesicError),
}

impl CliError {
    /// 1 = input problem, 2 = taxa mismatch, 3 = chain cap exceeded.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_)
            | CliError::Parse(_)
            | CliError::Tree(_)
            | CliError::NotEnoughTrees { .. }
            | CliError::BadPair { .. } => 1,
            CliError::Taxa(_) => 2,
            CliError::Geodesic(GeodesicError::TaxaMismatch) => 2,
            CliError::Geodesic(GeodesicError::ChainCapExceeded { .. }) => 3,
            CliError::Geodesic(_) => 1,
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Dist(args) => run_dist(args),
        Command::Matrix(args) => run_matrix(args),
        Command::Splits(args) => run_splits(args),
    }
}

fn load_trees(input: &InputArgs) -> Result<(Vec<WeightedTree>, Arc<TaxaMap>), CliError> {
    let text = std::fs::read_to_string(&input.input)?;
    let raws = parse_newick_file(&text, input.default_length)?;
    if raws.is_empty() {
        return Err(CliError::NotEnoughTrees { found: 0, need: 2 });
    }
    let taxa = Arc::new(build_taxa_map(&raws)?);
    let trees = raws
        .iter()
        .map(|raw| splits_of_tree(raw, &taxa))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((trees, taxa))
}

fn select_pair(pair: &Option<Vec<usize>>, count: usize) -> Result<(usize, usize), CliError> {
    match pair {
        Some(indices) => {
            let (i, j) = (indices[0], indices[1]);
            if i == j || i >= count || j >= count {
                return Err(CliError::BadPair { count });
            }
            Ok((i, j))
        }
        None => {
            if count < 2 {
                return Err(CliError::NotEnoughTrees {
                    found: count,
                    need: 2,
                });
            }
            Ok((0, 1))
        }
    }
}

pub fn run_dist(args: &DistArgs) -> Result<(), CliError> {
    let (trees, _) = load_trees(&args.input)?;
    let (i, j) = select_pair(&args.pair, trees.len())?;
    let opts = GeoOptions {
        algorithm: args.algorithm.into(),
        include_leaves: args.leaves,
        chain_cap: args.chain_cap,
    };
    let geo = geodesic_distance(&trees[i], &trees[j], &opts).map_err(CliError::Geodesic)?;
    println!("{:.12}", geo.distance);
    if args.verbose {
        print_verbose(&geo);
    }
    Ok(())
}

/// Commented summary lines so the first stdout line stays the bare
/// distance.
fn print_verbose(geo: &Geodesic) {
    println!("# algorithm: {:?}", geo.algorithm);
    println!("# shared splits: {}", geo.commons.len());
    for c in &geo.commons {
        println!(
            "#   {}  {:.6} vs {:.6}",
            c.split, c.lengths.0, c.lengths.1
        );
    }
    match geo.leaf_contribution {
        Some(sq) => println!("# leaf contribution: {:.6} (squared)", sq),
        None => println!("# leaf contribution: excluded"),
    }
    println!("# carrier: {} ratio(s)", geo.carrier.len());
    for ratio in geo.carrier.iter() {
        let dropped: Vec<String> = ratio.dropped().iter().map(|s| s.to_string()).collect();
        let added: Vec<String> = ratio.added().iter().map(|s| s.to_string()).collect();
        println!(
            "#   {:.6} = {:.6}/{:.6}  drop [{}]  add [{}]",
            ratio.drop_norm() / ratio.add_norm(),
            ratio.drop_norm(),
            ratio.add_norm(),
            dropped.join(", "),
            added.join(", ")
        );
    }
}

pub fn run_matrix(args: &MatrixArgs) -> Result<(), CliError> {
    let (trees, _) = load_trees(&args.input)?;
    if trees.len() < 2 {
        return Err(CliError::NotEnoughTrees {
            found: trees.len(),
            need: 2,
        });
    }
    let opts = GeoOptions {
        algorithm: args.algorithm.into(),
        include_leaves: args.leaves,
        chain_cap: args.chain_cap,
    };
    let n = trees.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let distances: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| geodesic_distance(&trees[i], &trees[j], &opts).map(|g| g.distance))
        .collect::<Result<_, _>>()
        .map_err(CliError::Geodesic)?;
    let mut matrix = vec![vec![0.0f64; n]; n];
    for (&(i, j), &d) in pairs.iter().zip(&distances) {
        matrix[i][j] = d;
        matrix[j][i] = d;
    }
    print!("{}", render_matrix(&matrix, args.output));
    Ok(())
}

fn render_matrix(matrix: &[Vec<f64>], format: OutputFormat) -> String {
    let n = matrix.len();
    match format {
        OutputFormat::Csv => render_delimited(matrix, ','),
        OutputFormat::Tsv => render_delimited(matrix, '\t'),
        OutputFormat::Json => {
            let value = serde_json::json!({
                "trees": n,
                "matrix": matrix,
            });
            format!("{value}\n")
        }
    }
}

fn render_delimited(matrix: &[Vec<f64>], sep: char) -> String {
    let mut out = String::new();
    for j in 0..matrix.len() {
        out.push(sep);
        out.push_str(&j.to_string());
    }
    out.push('\n');
    for (i, row) in matrix.iter().enumerate() {
        out.push_str(&i.to_string());
        for d in row {
            out.push(sep);
            out.push_str(&format!("{d:.12}"));
        }
        out.push('\n');
    }
    out
}

pub fn run_splits(args: &SplitsArgs) -> Result<(), CliError> {
    let (trees, _) = load_trees(&args.input)?;
    let (i, j) = match &args.pair {
        Some(_) => select_pair(&args.pair, trees.len())?,
        None if trees.len() == 2 => (0, 1),
        None => {
            return Err(CliError::NotEnoughTrees {
                found: trees.len(),
                need: 2,
            })
        }
    };
    let (t1, t2) = (&trees[i], &trees[j]);
    let commons = crate::splits::common_splits(t1, t2);
    let r1 = t1.restricted(|s| !commons.contains(s));
    let r2 = t2.restricted(|s| !commons.contains(s));
    let poset = IncompatibilityPoset::from_split_sets(r1.splits(), r2.splits());

    if args.dot {
        print!("{}", poset.to_dot());
        return Ok(());
    }

    for (index, tree) in [(i, t1), (j, t2)] {
        println!("tree {index}: {} split(s)", tree.splits().len());
        for (s, len) in tree.splits().iter() {
            println!("  {s}  {len:.6}");
        }
    }
    println!("shared: {} split(s)", commons.len());
    for s in &commons {
        println!(
            "  {s}  {:.6} vs {:.6}",
            t1.splits().get(s).unwrap(),
            t2.splits().get(s).unwrap()
        );
    }
    println!("classes: {}", poset.class_count());
    let minimal = poset.minimal_class_ids();
    for c in 0..poset.class_count() {
        let members: Vec<String> = poset.class_members(c).iter().map(|s| s.to_string()).collect();
        let crossing: Vec<String> = poset.class_crossing(c).iter().map(|s| s.to_string()).collect();
        let tag = if minimal.contains(&c) { "  (minimal)" } else { "" };
        println!("  class {c}: members [{}] crossing [{}]{tag}", members.join(", "), crossing.join(", "));
    }
    Ok(())
}
