//! Finite trees on the naturals.
//!
//! A node is a finite tuple of naturals; a tree is a prefix-closed set of
//! nodes. Nodes are ordered lexicographically (a prefix sorts before its
//! extensions), so a `BTreeSet` of nodes iterates in depth-first pre-order
//! and every subtree occupies a contiguous range.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest admissible node length.
pub const MAX_DEPTH: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("node {node} is present but its prefix {missing_prefix} is not")]
    PrefixClosureViolation {
        node: TreeNode,
        missing_prefix: TreeNode,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("node {0} exceeds the maximum depth {MAX_DEPTH}")]
    TooDeep(TreeNode),
    #[error("segment endpoints {min} and {max} are not ordered by extension")]
    UnorderedSegment { min: TreeNode, max: TreeNode },
}

/// A finite tuple of naturals; the empty tuple is the root.
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeNode(Vec<u32>);

impl TreeNode {
    pub fn root() -> Self {
        TreeNode(Vec::new())
    }

    pub fn new(entries: Vec<u32>) -> Self {
        TreeNode(entries)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// `s ≤ t`: `t` extends `s` (or equals it).
    pub fn is_prefix_of(&self, other: &TreeNode) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn is_proper_prefix_of(&self, other: &TreeNode) -> bool {
        self.len() < other.len() && self.is_prefix_of(other)
    }

    pub fn comparable(&self, other: &TreeNode) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// The prefix of length `i` (`s_{|i}`).
    pub fn truncate(&self, i: usize) -> TreeNode {
        TreeNode(self.0[..i.min(self.len())].to_vec())
    }

    pub fn parent(&self) -> Option<TreeNode> {
        if self.is_root() {
            None
        } else {
            Some(self.truncate(self.len() - 1))
        }
    }

    pub fn child(&self, entry: u32) -> TreeNode {
        let mut entries = self.0.clone();
        entries.push(entry);
        TreeNode(entries)
    }

    pub fn concat(&self, other: &TreeNode) -> TreeNode {
        let mut entries = self.0.clone();
        entries.extend_from_slice(&other.0);
        TreeNode(entries)
    }

    /// Every prefix from the root up to and including `self`.
    pub fn prefixes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        (0..=self.len()).map(move |i| self.truncate(i))
    }

    /// Length-lexicographic comparison used for canonical output.
    pub fn cmp_length_lex(&self, other: &TreeNode) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl From<Vec<u32>> for TreeNode {
    fn from(entries: Vec<u32>) -> Self {
        TreeNode(entries)
    }
}

impl From<&[u32]> for TreeNode {
    fn from(entries: &[u32]) -> Self {
        TreeNode(entries.to_vec())
    }
}

impl fmt::Debug for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TreeNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A finite prefix-closed set of nodes. The empty tree is allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct FiniteTree {
    nodes: BTreeSet<TreeNode>,
}

impl FiniteTree {
    pub fn empty() -> Self {
        FiniteTree::default()
    }

    /// Builds a tree, rejecting sets that are not prefix-closed. Duplicates collapse.
    pub fn new<I: IntoIterator<Item = TreeNode>>(nodes: I) -> Result<Self, TreeError> {
        let nodes: BTreeSet<TreeNode> = nodes.into_iter().collect();
        for node in &nodes {
            if node.len() > MAX_DEPTH {
                return Err(TreeError::TooDeep(node.clone()));
            }
            // Checking the parent suffices: the parent is itself checked.
            if let Some(parent) = node.parent() {
                if !nodes.contains(&parent) {
                    return Err(TreeError::PrefixClosureViolation {
                        node: node.clone(),
                        missing_prefix: parent,
                    });
                }
            }
        }
        Ok(FiniteTree { nodes })
    }

    /// Prefix closure of an arbitrary node set.
    pub fn closure<'a, I: IntoIterator<Item = &'a TreeNode>>(nodes: I) -> Self {
        let mut out = BTreeSet::new();
        for node in nodes {
            for p in node.prefixes() {
                out.insert(p);
            }
        }
        FiniteTree { nodes: out }
    }

    pub(crate) fn from_closed_set(nodes: BTreeSet<TreeNode>) -> Self {
        debug_assert!(nodes
            .iter()
            .all(|n| n.parent().map_or(true, |p| nodes.contains(&p))));
        FiniteTree { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, node: &TreeNode) -> bool {
        self.nodes.contains(node)
    }

    /// Nodes in lexicographic (pre-order) order.
    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    pub fn node_set(&self) -> &BTreeSet<TreeNode> {
        &self.nodes
    }

    /// Nodes in length-lexicographic order, the canonical output order.
    pub fn canonical_nodes(&self) -> Vec<TreeNode> {
        let mut v: Vec<TreeNode> = self.nodes.iter().cloned().collect();
        v.sort_by(|a, b| a.cmp_length_lex(b));
        v
    }

    /// Children of `node` present in the tree, in increasing entry order.
    pub fn children<'a>(&'a self, node: &'a TreeNode) -> impl Iterator<Item = &'a TreeNode> + 'a {
        self.nodes
            .range(node.clone()..)
            .skip(1)
            .take_while(move |t| node.is_prefix_of(t))
            .filter(move |t| t.len() == node.len() + 1)
    }

    /// Entries `k` with `(k)` in the tree.
    pub fn root_children(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .filter(|n| n.len() == 1)
            .map(|n| n.entries()[0])
            .collect()
    }

    /// Nodes `t` with `node ≤ t`, in pre-order.
    pub fn descendants<'a>(
        &'a self,
        node: &'a TreeNode,
    ) -> impl Iterator<Item = &'a TreeNode> + 'a {
        self.nodes
            .range(node.clone()..)
            .take_while(move |t| node.is_prefix_of(t))
    }

    pub fn is_leaf(&self, node: &TreeNode) -> bool {
        self.descendants(node).nth(1).is_none()
    }

    /// Largest node length, `None` for the empty tree.
    pub fn height(&self) -> Option<usize> {
        self.nodes.iter().map(TreeNode::len).max()
    }

    pub fn is_subtree_of(&self, other: &FiniteTree) -> bool {
        self.nodes.is_subset(&other.nodes)
    }
}

/// Validates and builds a tree from a node list.
pub fn make_tree(node_list: Vec<TreeNode>) -> Result<FiniteTree, TreeError> {
    FiniteTree::new(node_list)
}

/// `T′`: the nodes having a proper extension in `T`.
pub fn derived_tree(tree: &FiniteTree) -> FiniteTree {
    // In a prefix-closed set, a node has a proper extension iff it is a parent.
    let nodes = tree.nodes().filter_map(TreeNode::parent).collect();
    FiniteTree::from_closed_set(nodes)
}

/// Least `n` with `Tⁿ = ∅` under iterated derivation.
pub fn order_index(tree: &FiniteTree) -> usize {
    let mut current = tree.clone();
    let mut n = 0;
    while !current.is_empty() {
        current = derived_tree(&current);
        n += 1;
    }
    n
}

/// `T(k) = {s : (k)⌢s ∈ T}`.
pub fn subtree_at(tree: &FiniteTree, k: u32) -> FiniteTree {
    let anchor = TreeNode::new(vec![k]);
    let nodes = tree
        .descendants(&anchor)
        .map(|t| TreeNode::from(&t.entries()[1..]))
        .collect();
    FiniteTree::from_closed_set(nodes)
}

/// `T_k = {s ∈ T : (k) ≤ s}`. Not a tree: the root is excluded.
pub fn restricted_at(tree: &FiniteTree, k: u32) -> Vec<TreeNode> {
    let anchor = TreeNode::new(vec![k]);
    tree.descendants(&anchor).cloned().collect()
}

/// Whether `set` is totally ordered under extension and order-convex in `tree`.
pub fn is_segment(tree: &FiniteTree, set: &BTreeSet<TreeNode>) -> bool {
    if !set.iter().all(|n| tree.contains(n)) {
        return false;
    }
    let mut chain: Vec<&TreeNode> = set.iter().collect();
    chain.sort_by_key(|n| n.len());
    if chain.windows(2).any(|w| !w[0].is_proper_prefix_of(w[1])) {
        return false;
    }
    match (chain.first(), chain.last()) {
        // Every node of the tree between min and max lies on max's path, and
        // all of those are in the tree, so convexity is a count check.
        (Some(min), Some(max)) => chain.len() == max.len() - min.len() + 1,
        _ => true,
    }
}

/// A nonempty segment `{u : min ≤ u ≤ max}`, stored by its endpoints.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Segment {
    min: TreeNode,
    max: TreeNode,
}

impl Segment {
    pub fn new(min: TreeNode, max: TreeNode) -> Result<Self, TreeError> {
        if !min.is_prefix_of(&max) {
            return Err(TreeError::UnorderedSegment { min, max });
        }
        Ok(Segment { min, max })
    }

    pub fn single(node: TreeNode) -> Self {
        Segment {
            min: node.clone(),
            max: node,
        }
    }

    pub fn min_node(&self) -> &TreeNode {
        &self.min
    }

    pub fn max_node(&self) -> &TreeNode {
        &self.max
    }

    pub fn contains(&self, node: &TreeNode) -> bool {
        self.min.is_prefix_of(node) && node.is_prefix_of(&self.max)
    }

    /// Chain nodes from `min` to `max`.
    pub fn nodes(&self) -> impl Iterator<Item = TreeNode> + '_ {
        (self.min.len()..=self.max.len()).map(move |i| self.max.truncate(i))
    }

    pub fn len(&self) -> usize {
        self.max.len() - self.min.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Whether the chain lies in `tree`; prefix-closure makes `max` sufficient.
    pub fn is_valid_in(&self, tree: &FiniteTree) -> bool {
        tree.contains(&self.max)
    }
}

/// Complete incomparability of two segments.
///
/// Two segments are completely incomparable exactly when their minimal nodes
/// are: if `u ∈ I1` and `v ∈ I2` were comparable, say `u ≤ v`, then `min1 ≤ u ≤ v`
/// and `min2 ≤ v`, so `min1` and `min2` are both prefixes of `v` and hence comparable.
pub fn segments_incomparable(first: &Segment, second: &Segment) -> bool {
    !first.min.comparable(&second.min)
}

/// Families of test trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeFamily {
    /// All tuples with entries `< k` and length `≤ d`.
    FullKary { k: u32, d: usize },
    /// The chain `∅, (0), (0,0), …` with `d + 1` nodes.
    Spine { d: usize },
    /// `n` nodes grown from the root, see [`generate_tree`].
    Random { n: usize, seed: u64 },
}

/// Generates a tree of the given family.
///
/// `Random { n, seed }` starts from the root and repeatedly picks an existing
/// node uniformly at random (in insertion order, via `ChaCha8Rng::seed_from_u64(seed)`
/// and `gen_range`) and attaches its next unused child entry. The result is
/// reproducible bit-for-bit per seed.
pub fn generate_tree(family: TreeFamily) -> Result<FiniteTree, TreeError> {
    match family {
        TreeFamily::FullKary { k, d } => {
            if k == 0 {
                return Err(TreeError::InvalidParameter("k must be at least 1".into()));
            }
            if d > MAX_DEPTH {
                return Err(TreeError::InvalidParameter(format!(
                    "d must be at most {MAX_DEPTH}"
                )));
            }
            let mut nodes = BTreeSet::new();
            let mut frontier = vec![TreeNode::root()];
            nodes.insert(TreeNode::root());
            for _ in 0..d {
                let mut next = Vec::with_capacity(frontier.len() * k as usize);
                for node in &frontier {
                    for e in 0..k {
                        let c = node.child(e);
                        nodes.insert(c.clone());
                        next.push(c);
                    }
                }
                frontier = next;
            }
            Ok(FiniteTree::from_closed_set(nodes))
        }
        TreeFamily::Spine { d } => {
            if d > MAX_DEPTH {
                return Err(TreeError::InvalidParameter(format!(
                    "d must be at most {MAX_DEPTH}"
                )));
            }
            let nodes = (0..=d).map(|i| TreeNode::new(vec![0; i])).collect();
            Ok(FiniteTree::from_closed_set(nodes))
        }
        TreeFamily::Random { n, seed } => {
            if n == 0 {
                return Ok(FiniteTree::empty());
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut order = vec![TreeNode::root()];
            let mut next_entry = vec![0u32];
            while order.len() < n {
                let i = rng.gen_range(0..order.len());
                if order[i].len() >= MAX_DEPTH {
                    continue;
                }
                let child = order[i].child(next_entry[i]);
                next_entry[i] += 1;
                order.push(child);
                next_entry.push(0);
            }
            Ok(FiniteTree::from_closed_set(order.into_iter().collect()))
        }
    }
}

/// JSON interchange form `{"nodes": [[…], …]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeDoc {
    pub nodes: Vec<TreeNode>,
}

impl From<&FiniteTree> for TreeDoc {
    fn from(tree: &FiniteTree) -> Self {
        TreeDoc {
            nodes: tree.canonical_nodes(),
        }
    }
}

impl TryFrom<TreeDoc> for FiniteTree {
    type Error = TreeError;

    fn try_from(doc: TreeDoc) -> Result<Self, TreeError> {
        FiniteTree::new(doc.nodes)
    }
}
