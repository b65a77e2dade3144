//! Newick parsing, canonical serialization, and the shared taxa index.
//!
//! Input is standard Newick: nested parentheses, optional node labels,
//! branch lengths introduced by `:`, one statement per tree terminated
//! by `;`. Labels may be quoted with single quotes (doubling a quote
//! escapes it) and square-bracket comments are skipped. A file holds one
//! tree per line; lines starting with `#` and blank lines are ignored.
//!
//! Every tree is rooted. The root plays the role of the extra label `0`
//! in the split universe, so leaf names map to indexes `1..=n`, assigned
//! in lexicographic order by [`build_taxa_map`]. A branch length written
//! on the outermost node has no edge to live on and is discarded. Chains
//! of single-child nodes are merged by summing their lengths; a
//! single-child root is merged with its child, which is only possible
//! when the connecting edge has length zero, because a positive pendant
//! edge at the root has no coordinate in the distance model.
//!
//! Missing branch lengths are an error unless a default is supplied;
//! silently assuming a default would corrupt distances.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::splits::{Split, WeightedTree};

/// Errors from reading Newick text.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("missing branch length at byte {position} and no default length given")]
    MissingLength { position: usize },
    #[error("invalid branch length '{text}' at byte {position}")]
    BadLength { position: usize, text: String },
    #[error("duplicate leaf name '{name}'")]
    DuplicateLeaf { name: String },
    #[error("tree has {found} leaves; at least 2 are required")]
    TooFewLeaves { found: usize },
    #[error("the root carries a pendant edge of positive length {length}, which has no place in a rooted tree")]
    RootEdge { length: f64 },
}

/// A [`ParseError`] tagged with the 1-based line it occurred on.
#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {source}")]
pub struct FileParseError {
    pub line: usize,
    pub source: ParseError,
}

/// Errors from building or reconciling taxa maps.
#[derive(Debug, Error, PartialEq)]
pub enum TaxaError {
    #[error("empty leaf name")]
    EmptyName,
    #[error("duplicate leaf name '{0}'")]
    DuplicateName(String),
    #[error("trees disagree on their leaf sets; only in the first: {only_first:?}, only in the other: {only_other:?}")]
    LeafSetMismatch {
        only_first: Vec<String>,
        only_other: Vec<String>,
    },
    #[error("need at least 2 leaves, found {0}")]
    TooFewLeaves(usize),
}

/// Maps leaf names to the indexes `1..=n` used by splits.
///
/// Index `0` is reserved for the root. Names are sorted, so the mapping
/// is determined by the name set alone; two trees can be compared only
/// when their maps are equal.
#[derive(Clone, PartialEq, Eq)]
pub struct TaxaMap {
    names: Vec<String>,
}

impl TaxaMap {
    /// Builds a map from a collection of names, sorting them.
    pub fn from_names<I>(names: I) -> Result<Self, TaxaError>
    where
        I: IntoIterator<Item = String>,
    {
        let mut names: Vec<String> = names.into_iter().collect();
        if names.iter().any(String::is_empty) {
            return Err(TaxaError::EmptyName);
        }
        names.sort();
        if let Some(dup) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(TaxaError::DuplicateName(dup[0].clone()));
        }
        if names.len() < 2 {
            return Err(TaxaError::TooFewLeaves(names.len()));
        }
        Ok(TaxaMap { names })
    }

    /// Number of leaves `n`.
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Name of a leaf index in `1..=n`.
    pub fn name_of(&self, leaf: usize) -> &str {
        &self.names[leaf - 1]
    }

    /// Index of a name, if present.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|x| x.as_str().cmp(name)).ok().map(|i| i + 1)
    }

    /// All names in index order.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }
}

impl fmt::Debug for TaxaMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.names.iter().enumerate().map(|(i, s)| (i + 1, s)))
            .finish()
    }
}

/// One node of the parse tree.
#[derive(Clone, Debug, PartialEq)]
pub struct RawNode {
    /// Leaf name, or an (ignored) internal label such as a bootstrap value.
    pub label: Option<String>,
    /// Length of the edge above this node; `None` only at the root.
    pub length: Option<f64>,
    pub children: Vec<RawNode>,
}

impl RawNode {
    fn leaf(label: String, length: Option<f64>) -> Self {
        RawNode {
            label: Some(label),
            length,
            children: Vec::new(),
        }
    }

    fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A parsed, length-filled Newick statement.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTree {
    pub root: RawNode,
}

impl RawTree {
    /// Leaf names in traversal order.
    pub fn leaf_names(&self) -> Vec<&str> {
        let mut names = Vec::new();
        fn walk<'a>(node: &'a RawNode, out: &mut Vec<&'a str>) {
            if node.is_leaf() {
                out.push(node.label.as_deref().unwrap_or(""));
            }
            for child in &node.children {
                walk(child, out);
            }
        }
        walk(&self.root, &mut names);
        names
    }

    pub fn leaf_count(&self) -> usize {
        self.leaf_names().len()
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    default_length: Option<f64>,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, default_length: Option<f64>) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            default_length,
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    /// Skips whitespace and square-bracket comments.
    fn skip_trivia(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'[') => {
                    let open = self.pos;
                    while let Some(b) = self.peek() {
                        self.pos += 1;
                        if b == b']' {
                            break;
                        }
                    }
                    if self.bytes.get(self.pos - 1) != Some(&b']') {
                        self.pos = open;
                        return Err(self.syntax("unterminated [comment]"));
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn expect(&mut self, byte: u8) -> Result<(), ParseError> {
        self.skip_trivia()?;
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(format!("expected '{}'", byte as char)))
        }
    }

    /// Parses a possibly quoted label; empty when no label is present.
    fn label(&mut self) -> Result<String, ParseError> {
        self.skip_trivia()?;
        if self.peek() == Some(b'\'') {
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.peek() {
                    Some(b'\'') => {
                        self.pos += 1;
                        // A doubled quote is a literal quote.
                        if self.peek() == Some(b'\'') {
                            out.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(out);
                        }
                    }
                    Some(b) => {
                        out.push(b as char);
                        self.pos += 1;
                    }
                    None => return Err(self.syntax("unterminated quoted label")),
                }
            }
        }
        let start = self.pos;
        while let Some(b) = self.peek() {
            if matches!(b, b'(' | b')' | b'[' | b']' | b':' | b';' | b',') || b.is_ascii_whitespace() {
                break;
            }
            self.pos += 1;
        }
        Ok(std::str::from_utf8(&self.bytes[start..self.pos])
            .expect("input was a str")
            .to_string())
    }

    /// Parses `:length` if present, otherwise applies the default.
    fn length(&mut self) -> Result<Option<f64>, ParseError> {
        self.skip_trivia()?;
        if self.peek() != Some(b':') {
            return Ok(self.default_length);
        }
        self.pos += 1;
        self.skip_trivia()?;
        let start = self.pos;
        while let Some(b) = self.peek() {
            if matches!(b, b'+' | b'-' | b'.' | b'e' | b'E') || b.is_ascii_digit() {
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("input was a str");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(Some(v)),
            _ => Err(ParseError::BadLength {
                position: start,
                text: text.to_string(),
            }),
        }
    }

    fn subtree(&mut self) -> Result<RawNode, ParseError> {
        self.skip_trivia()?;
        if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut children = vec![self.subtree()?];
            loop {
                self.skip_trivia()?;
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                        children.push(self.subtree()?);
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.syntax("expected ',' or ')'")),
                }
            }
            let label = self.label()?;
            let length = self.length()?;
            Ok(RawNode {
                label: if label.is_empty() { None } else { Some(label) },
                length,
                children,
            })
        } else {
            let at = self.pos;
            let label = self.label()?;
            if label.is_empty() {
                self.pos = at;
                return Err(self.syntax("expected a leaf name or '('"));
            }
            let length_pos = self.pos;
            let length = self.length()?;
            if length.is_none() {
                return Err(ParseError::MissingLength {
                    position: length_pos,
                });
            }
            Ok(RawNode::leaf(label, length))
        }
    }

    fn tree(&mut self) -> Result<RawTree, ParseError> {
        let root = self.subtree()?;
        self.expect(b';')?;
        self.skip_trivia()?;
        if self.pos != self.bytes.len() {
            return Err(self.syntax("trailing input after ';'"));
        }
        Ok(RawTree { root })
    }
}

/// Collapses single-child chains; the child absorbs its parent and the
/// edge lengths add up.
fn merge_unary(node: &mut RawNode) {
    for child in &mut node.children {
        merge_unary(child);
    }
    while node.children.len() == 1 && !node.is_leaf() {
        let mut child = node.children.pop().expect("one child");
        let above = node.length.unwrap_or(0.0);
        child.length = Some(child.length.unwrap_or(0.0) + above);
        *node = child;
    }
}

/// Fills missing internal lengths with the default; leaves were already
/// checked during parsing. Returns the position-free missing error when
/// an internal edge has no length and no default exists.
fn fill_lengths(node: &mut RawNode, is_root: bool, default: Option<f64>) -> Result<(), ParseError> {
    if !is_root && node.length.is_none() {
        match default {
            Some(v) => node.length = Some(v),
            None => return Err(ParseError::MissingLength { position: 0 }),
        }
    }
    for child in &mut node.children {
        fill_lengths(child, false, default)?;
    }
    Ok(())
}

/// Parses one Newick statement.
///
/// Every edge ends up with a length: missing lengths take
/// `default_length` when given and are an error otherwise. Duplicate
/// leaf names and trees with fewer than two leaves are rejected. A
/// single-child root is merged into its child, which must sit at
/// distance zero.
pub fn parse_newick(text: &str, default_length: Option<f64>) -> Result<RawTree, ParseError> {
    let mut tree = Parser::new(text, default_length).tree()?;
    // The root has no edge above it; a length written there (or pulled
    // in from the default) carries no information and is dropped.
    if !tree.root.is_leaf() {
        tree.root.length = None;
    }
    fill_lengths(&mut tree.root, true, default_length)?;
    merge_unary(&mut tree.root);
    // merge_unary may have folded a unary root into its child. That
    // edge was a real one, and only zero is representable.
    if let Some(length) = tree.root.length.take() {
        if length > 0.0 && !tree.root.is_leaf() {
            return Err(ParseError::RootEdge { length });
        }
    }

    let names = tree.leaf_names();
    if names.len() < 2 {
        return Err(ParseError::TooFewLeaves { found: names.len() });
    }
    let mut seen = BTreeSet::new();
    for name in names {
        if !seen.insert(name) {
            return Err(ParseError::DuplicateLeaf {
                name: name.to_string(),
            });
        }
    }
    Ok(tree)
}

/// Parses a whole file: one tree per line, `#` comments and blank lines
/// skipped.
pub fn parse_newick_file(
    text: &str,
    default_length: Option<f64>,
) -> Result<Vec<RawTree>, FileParseError> {
    let mut trees = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        trees.push(parse_newick(line, default_length).map_err(|source| FileParseError {
            line: i + 1,
            source,
        })?);
    }
    Ok(trees)
}

/// Builds the shared name index for a set of trees.
///
/// All trees must have identical leaf-name sets; the error lists the
/// names missing from either side. Names map to `1..=n` in sorted order.
pub fn build_taxa_map(trees: &[RawTree]) -> Result<TaxaMap, TaxaError> {
    let mut iter = trees.iter();
    let first: BTreeSet<String> = match iter.next() {
        Some(t) => t.leaf_names().into_iter().map(String::from).collect(),
        None => return Err(TaxaError::TooFewLeaves(0)),
    };
    for tree in iter {
        let other: BTreeSet<String> = tree.leaf_names().into_iter().map(String::from).collect();
        if other != first {
            return Err(TaxaError::LeafSetMismatch {
                only_first: first.difference(&other).cloned().collect(),
                only_other: other.difference(&first).cloned().collect(),
            });
        }
    }
    TaxaMap::from_names(first)
}

/// Serializes a tree to canonical Newick.
///
/// The node hierarchy is rebuilt from the split nesting order, children
/// are sorted by their smallest leaf index, and lengths are printed with
/// the shortest decimal form that parses back to the same value, so
/// `write_newick(parse(s))` is a canonical form of `s` and writing is
/// idempotent.
pub fn write_newick(tree: &WeightedTree) -> String {
    let taxa = tree.taxa();
    let n = taxa.len();
    // Splits sorted by block size, smallest first, so the first
    // containing block found is the tightest one.
    let mut splits: Vec<(&Split, f64)> = tree.splits().iter().collect();
    splits.sort_by_key(|(s, _)| s.size());

    // parent[i]: index into `splits` of the tightest block strictly
    // containing entity i, where entities are leaves (0..n) and splits
    // (n..n+k). None means the root is the parent.
    let parent_of_leaf = |leaf: usize| splits.iter().position(|(s, _)| s.contains(leaf));
    // Distinct splits with a subset relation are strictly nested, so
    // any hit past `idx` (blocks only get bigger) is a proper parent.
    let parent_of_split = |idx: usize| {
        let (child, _) = splits[idx];
        splits
            .iter()
            .enumerate()
            .position(|(j, (s, _))| j > idx && child.block().is_subset(s.block()))
    };

    #[derive(Clone, Copy)]
    enum Entity {
        Leaf(usize),
        Node(usize),
    }

    let mut children: Vec<Vec<Entity>> = vec![Vec::new(); splits.len() + 1];
    let root_slot = splits.len();
    for leaf in 1..=n {
        let slot = parent_of_leaf(leaf).unwrap_or(root_slot);
        children[slot].push(Entity::Leaf(leaf));
    }
    for idx in 0..splits.len() {
        let slot = parent_of_split(idx).unwrap_or(root_slot);
        children[slot].push(Entity::Node(idx));
    }
    let min_leaf = |e: &Entity| match e {
        Entity::Leaf(l) => *l,
        Entity::Node(i) => splits[*i].0.members().next().expect("non-empty block"),
    };
    for kids in &mut children {
        kids.sort_by_key(min_leaf);
    }

    fn emit(
        entity: Entity,
        children: &[Vec<Entity>],
        splits: &[(&Split, f64)],
        taxa: &TaxaMap,
        tree: &WeightedTree,
        out: &mut String,
    ) {
        match entity {
            Entity::Leaf(leaf) => {
                out.push_str(&quote_label(taxa.name_of(leaf)));
                out.push(':');
                out.push_str(&format!("{}", tree.leaf_length(leaf)));
            }
            Entity::Node(idx) => {
                out.push('(');
                for (k, kid) in children[idx].iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    emit(*kid, children, splits, taxa, tree, out);
                }
                out.push(')');
                out.push(':');
                out.push_str(&format!("{}", splits[idx].1));
            }
        }
    }

    let mut out = String::from("(");
    for (k, kid) in children[root_slot].iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        emit(*kid, &children, &splits, taxa, tree, &mut out);
    }
    out.push_str(");");
    out
}

/// Quotes a label when it contains Newick structural characters.
fn quote_label(name: &str) -> String {
    let needs_quotes = name
        .chars()
        .any(|c| matches!(c, '(' | ')' | '[' | ']' | ':' | ';' | ',' | '\'') || c.is_whitespace());
    if needs_quotes {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}
