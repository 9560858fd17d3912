//! Arena over the prefix closure of a vector's support.
//!
//! Nodes are stored in pre-order, so every subtree is the contiguous range
//! `v..subtree_end[v]` and children come after their parent. Per-node data
//! indexed by "(node, depth of an ancestor)" pairs uses the flat layout from
//! [`SupportIndex::pair_offset`].

use std::collections::BTreeMap;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::tree::{Segment, TreeNode};

pub(crate) const NO_PARENT: u32 = u32::MAX;

/// Integer image of the coefficients: `coef[v] = numer[v] / denom`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Scaled {
    pub numer: Vec<i128>,
    pub denom: i128,
}

/// `Σ|numer|` stays below this, so squared sums of any sub-collection fit in `i128`.
const SCALED_MASS_LIMIT: i128 = 1 << 60;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SupportIndex {
    pub parent: Vec<u32>,
    pub depth: Vec<u32>,
    pub last_entry: Vec<u32>,
    pub child_start: Vec<u32>,
    pub children: Vec<u32>,
    pub subtree_end: Vec<u32>,
    pub pair_start: Vec<u32>,
    pub coef: Vec<BigRational>,
    pub scaled: Option<Scaled>,
}

impl SupportIndex {
    /// Builds the arena from coefficients keyed in lexicographic (pre-order) order.
    pub fn from_coeffs(coeffs: &BTreeMap<TreeNode, BigRational>) -> Self {
        // Upper bound on the closure size.
        let cap = 1 + coeffs.keys().map(TreeNode::len).sum::<usize>();
        let mut idx = SupportIndex {
            parent: Vec::with_capacity(cap),
            depth: Vec::with_capacity(cap),
            last_entry: Vec::with_capacity(cap),
            child_start: Vec::new(),
            children: Vec::new(),
            subtree_end: Vec::new(),
            pair_start: Vec::new(),
            coef: Vec::with_capacity(cap),
            scaled: None,
        };
        let mut path: Vec<u32> = Vec::new();
        let mut stack: Vec<u32> = Vec::new();
        for (node, value) in coeffs {
            let entries = node.entries();
            if stack.is_empty() {
                idx.push(NO_PARENT, 0, 0);
                stack.push(0);
            }
            let common = path.iter().zip(entries).take_while(|(a, b)| a == b).count();
            path.truncate(common);
            stack.truncate(common + 1);
            for (i, &e) in entries.iter().enumerate().skip(common) {
                let parent = *stack.last().expect("root on stack");
                let id = idx.push(parent, i as u32 + 1, e);
                stack.push(id);
                path.push(e);
            }
            let target = *stack.last().expect("nonempty stack") as usize;
            idx.coef[target] = value.clone();
        }
        idx.finish();
        idx
    }

    fn push(&mut self, parent: u32, depth: u32, entry: u32) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(parent);
        self.depth.push(depth);
        self.last_entry.push(entry);
        self.coef.push(BigRational::zero());
        id
    }

    fn finish(&mut self) {
        let n = self.len();
        let mut counts = vec![0u32; n + 1];
        for &p in &self.parent {
            if p != NO_PARENT {
                counts[p as usize + 1] += 1;
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        self.child_start = counts.clone();
        self.children = vec![0; n.saturating_sub(1)];
        let mut fill = counts;
        for v in 0..n {
            let p = self.parent[v];
            if p != NO_PARENT {
                self.children[fill[p as usize] as usize] = v as u32;
                fill[p as usize] += 1;
            }
        }
        self.subtree_end = vec![0; n];
        for v in (0..n).rev() {
            let mut end = v as u32 + 1;
            if let Some(&last) = self.children_of(v).last() {
                end = self.subtree_end[last as usize];
            }
            self.subtree_end[v] = end;
        }
        self.pair_start = Vec::with_capacity(n + 1);
        let mut acc = 0u32;
        for v in 0..n {
            self.pair_start.push(acc);
            acc += self.depth[v] + 1;
        }
        self.pair_start.push(acc);
        self.scaled = scale_to_integers(&self.coef);
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn children_of(&self, v: usize) -> &[u32] {
        &self.children[self.child_start[v] as usize..self.child_start[v + 1] as usize]
    }

    /// Flat position of the pair (node `v`, ancestor depth `j`), `j ≤ depth[v]`.
    pub fn pair_offset(&self, v: usize, j: usize) -> usize {
        self.pair_start[v] as usize + j
    }

    pub fn pair_count(&self) -> usize {
        *self.pair_start.last().unwrap_or(&0) as usize
    }

    pub fn node(&self, mut v: usize) -> TreeNode {
        let mut entries = Vec::with_capacity(self.depth[v] as usize);
        while self.parent[v] != NO_PARENT {
            entries.push(self.last_entry[v]);
            v = self.parent[v] as usize;
        }
        entries.reverse();
        TreeNode::new(entries)
    }

    /// The segment from the ancestor of `v` at depth `j` down to `v`.
    pub fn segment(&self, v: usize, j: usize) -> Segment {
        let max = self.node(v);
        let min = max.truncate(j);
        Segment::new(min, max).expect("ancestor is a prefix")
    }
}

fn scale_to_integers(coef: &[BigRational]) -> Option<Scaled> {
    let mut denom: i128 = 1;
    for c in coef {
        let d = c.denom().to_i128()?;
        denom = denom.lcm(&d);
        if denom > i64::MAX as i128 {
            return None;
        }
    }
    let mut numer = Vec::with_capacity(coef.len());
    let mut mass: i128 = 0;
    for c in coef {
        let n = if c.is_zero() {
            0
        } else {
            let factor = denom / c.denom().to_i128()?;
            c.numer().to_i128()?.checked_mul(factor)?
        };
        mass = mass.checked_add(n.abs())?;
        if mass >= SCALED_MASS_LIMIT {
            return None;
        }
        numer.push(n);
    }
    Some(Scaled { numer, denom })
}
