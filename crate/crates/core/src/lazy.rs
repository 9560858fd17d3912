//! Depth-probed exploration of possibly infinite trees.
//!
//! A finite window can never decide well-foundedness of an infinite tree.
//! [`probe_wf`] therefore only certifies well-foundedness when exhaustive
//! exploration halts, and otherwise exhibits a long chain as a candidate.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::tree::{FiniteTree, TreeNode};

/// Children of a node: a finite list, or every natural except a finite set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ChildSet {
    Finite(Vec<u32>),
    Cofinite { excluded: Vec<u32> },
}

impl ChildSet {
    pub fn none() -> Self {
        ChildSet::Finite(Vec::new())
    }

    /// The least child entry, if any.
    pub fn first(&self) -> Option<u32> {
        match self {
            ChildSet::Finite(v) => v.iter().copied().min(),
            ChildSet::Cofinite { excluded } => (0..=u32::MAX).find(|e| !excluded.contains(e)),
        }
    }
}

/// Source of child sets; implementations must answer every node in finite time.
pub trait ChildSource: Send + Sync {
    fn children_of(&self, node: &TreeNode) -> ChildSet;
}

impl<F> ChildSource for F
where
    F: Fn(&TreeNode) -> ChildSet + Send + Sync,
{
    fn children_of(&self, node: &TreeNode) -> ChildSet {
        self(node)
    }
}

struct FiniteSource(FiniteTree);

impl ChildSource for FiniteSource {
    fn children_of(&self, node: &TreeNode) -> ChildSet {
        if !self.0.contains(node) {
            return ChildSet::none();
        }
        ChildSet::Finite(
            self.0
                .children(node)
                .map(|c| c.entries()[node.len()])
                .collect(),
        )
    }
}

/// A tree given by a child-enumeration callback and a depth budget.
#[derive(Clone)]
pub struct LazyTree {
    source: Arc<dyn ChildSource>,
    depth_budget: usize,
}

impl fmt::Debug for LazyTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyTree")
            .field("depth_budget", &self.depth_budget)
            .finish_non_exhaustive()
    }
}

impl LazyTree {
    pub fn new<S: ChildSource + 'static>(source: S, depth_budget: usize) -> Self {
        LazyTree {
            source: Arc::new(source),
            depth_budget,
        }
    }

    pub fn from_finite(tree: FiniteTree, depth_budget: usize) -> Self {
        LazyTree::new(FiniteSource(tree), depth_budget)
    }

    /// The single branch `(0, 0, 0, …)`.
    pub fn zero_branch(depth_budget: usize) -> Self {
        LazyTree::new(
            |node: &TreeNode| {
                if node.entries().iter().all(|&e| e == 0) {
                    ChildSet::Finite(vec![0])
                } else {
                    ChildSet::none()
                }
            },
            depth_budget,
        )
    }

    /// Every tuple with entries `< k` and length `≤ max_len` (`None`: unbounded).
    pub fn kary(k: u32, max_len: Option<usize>, depth_budget: usize) -> Self {
        LazyTree::new(
            move |node: &TreeNode| {
                if max_len.is_some_and(|m| node.len() >= m)
                    || node.entries().iter().any(|&e| e >= k)
                {
                    ChildSet::none()
                } else {
                    ChildSet::Finite((0..k).collect())
                }
            },
            depth_budget,
        )
    }

    pub fn depth_budget(&self) -> usize {
        self.depth_budget
    }

    pub fn children_of(&self, node: &TreeNode) -> ChildSet {
        self.source.children_of(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ProbeVerdict {
    /// Exploration halted; every maximal path is shorter than the probe depth.
    WellFoundedCertified {
        nodes_explored: usize,
        height: usize,
    },
    /// A chain of the probe length exists. This is not a proof of a branch.
    BranchCandidate { prefix: TreeNode },
    /// No chain of the probe length was found, but some node has infinitely
    /// many children, so exhaustive exploration is impossible.
    Unresolved { infinite_at: TreeNode },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProbeError {
    #[error("probe depth {depth} exceeds the depth budget {budget}")]
    BudgetExceeded { depth: usize, budget: usize },
}

/// Explores `tree` to `depth`, looking for a node of length `depth`.
///
/// Children are visited in increasing entry order. At a node with a cofinite
/// child set only the least child is followed.
pub fn probe_wf(tree: &LazyTree, depth: usize) -> Result<ProbeVerdict, ProbeError> {
    if depth > tree.depth_budget {
        return Err(ProbeError::BudgetExceeded {
            depth,
            budget: tree.depth_budget,
        });
    }
    let mut stack = vec![TreeNode::root()];
    let mut explored = 0usize;
    let mut height = 0usize;
    let mut infinite_at: Option<TreeNode> = None;
    while let Some(node) = stack.pop() {
        explored += 1;
        height = height.max(node.len());
        if node.len() >= depth {
            return Ok(ProbeVerdict::BranchCandidate { prefix: node });
        }
        let mut kids: Vec<u32> = match tree.children_of(&node) {
            ChildSet::Finite(v) => v,
            set @ ChildSet::Cofinite { .. } => {
                if infinite_at.is_none() {
                    infinite_at = Some(node.clone());
                }
                set.first().into_iter().collect()
            }
        };
        kids.sort_unstable();
        kids.dedup();
        for e in kids.into_iter().rev() {
            stack.push(node.child(e));
        }
    }
    Ok(match infinite_at {
        Some(at) => ProbeVerdict::Unresolved { infinite_at: at },
        None => ProbeVerdict::WellFoundedCertified {
            nodes_explored: explored,
            height,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{generate_tree, TreeFamily};

    #[test]
    fn zero_branch_yields_candidate() {
        let verdict = probe_wf(&LazyTree::zero_branch(20), 10).unwrap();
        assert_eq!(
            verdict,
            ProbeVerdict::BranchCandidate {
                prefix: TreeNode::new(vec![0; 10])
            }
        );
    }

    #[test]
    fn bounded_tree_is_certified() {
        let verdict = probe_wf(&LazyTree::kary(2, Some(3), 20), 10).unwrap();
        assert_eq!(
            verdict,
            ProbeVerdict::WellFoundedCertified {
                nodes_explored: 15,
                height: 3
            }
        );
    }

    #[test]
    fn budget_is_enforced() {
        assert_eq!(
            probe_wf(&LazyTree::zero_branch(5), 6),
            Err(ProbeError::BudgetExceeded {
                depth: 6,
                budget: 5
            })
        );
    }

    #[test]
    fn finite_adapter_matches_height() {
        let tree = generate_tree(TreeFamily::Random { n: 25, seed: 7 }).unwrap();
        let h = tree.height().unwrap();
        let lazy = LazyTree::from_finite(tree.clone(), 64);
        assert!(matches!(
            probe_wf(&lazy, h + 1).unwrap(),
            ProbeVerdict::WellFoundedCertified {
                nodes_explored: 25,
                ..
            }
        ));
        assert!(matches!(
            probe_wf(&lazy, h).unwrap(),
            ProbeVerdict::BranchCandidate { .. }
        ));
    }

    #[test]
    fn cofinite_children_stay_unresolved() {
        let lazy = LazyTree::new(
            |node: &TreeNode| {
                if node.is_root() {
                    ChildSet::Cofinite {
                        excluded: vec![0, 1],
                    }
                } else {
                    ChildSet::none()
                }
            },
            10,
        );
        assert_eq!(
            probe_wf(&lazy, 4).unwrap(),
            ProbeVerdict::Unresolved {
                infinite_at: TreeNode::root()
            }
        );
        assert_eq!(
            probe_wf(&lazy, 1).unwrap(),
            ProbeVerdict::BranchCandidate {
                prefix: TreeNode::new(vec![2])
            }
        );
    }
}
