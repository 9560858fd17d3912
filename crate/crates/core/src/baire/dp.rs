//! Tree dynamic program for the incomparable-segment supremum.
//!
//! Pairwise completely incomparable segments are exactly segments with
//! pairwise incomparable minima. A segment starting at `a` is comparable with
//! every segment whose minimum lies below `a`, so choosing it uses up the
//! whole subtree of `a`. With `R` the prefix closure of the support
//! (pre-order arena), `best(v)` the optimum inside the subtree of `v` and
//! `open(v, a)` the best single segment from the ancestor `a` ending at or
//! below `v`:
//!
//! ```text
//! best(v)    = max( Σ_c best(c),  open(v, v) )
//! open(v, a) = max( seg(a..v),  max_c open(c, a) )
//! ```
//!
//! The answer is `best(root)`. Restricting endpoints to `R` loses nothing:
//! nodes outside `R` carry zero coefficients, and dropping zero coordinates
//! never changes the norm of a 1-unconditional basis. So the supremum over
//! all families is a maximum over the finitely many trimmed ones.
//!
//! Ties keep the first option in this order: not opening at `v`, closing the
//! segment at `v`, extending into the child with the smallest entry. The
//! resulting witness uses the shortest segments available.

use rayon::prelude::*;

use crate::basis::BasisKind;
use crate::tree::Segment;
use crate::Exec;

use super::support::SupportIndex;

/// Arithmetic the DP needs. `better` is strict, with tolerance for floats.
pub(crate) trait Score: Clone + Send + Sync {
    fn zero() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn abs(&self) -> Self;
    fn better(&self, other: &Self) -> bool;
}

impl Score for i128 {
    fn zero() -> Self {
        0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs(&self) -> Self {
        i128::abs(*self)
    }
    fn better(&self, other: &Self) -> bool {
        self > other
    }
}

impl Score for num_rational::BigRational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs(&self) -> Self {
        num_traits::Signed::abs(self)
    }
    fn better(&self, other: &Self) -> bool {
        self > other
    }
}

impl Score for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn better(&self, other: &Self) -> bool {
        crate::basis::compare_f64(*self, *other) == std::cmp::Ordering::Greater
    }
}

/// Incremental E-aggregate of a block: Σ|c| (ℓ₁), max|c| (c₀), Σc² (ℓ₂).
pub(crate) fn extend_aggregate<S: Score>(kind: BasisKind, acc: &S, c: &S) -> S {
    match kind {
        BasisKind::Lp1 => acc.add(&c.abs()),
        BasisKind::Lp2 => acc.add(&c.mul(c)),
        BasisKind::C0 => {
            let a = c.abs();
            if a.better(acc) {
                a
            } else {
                acc.clone()
            }
        }
    }
}

/// Aggregates for every (node, ancestor depth) pair, in the arena's flat layout.
pub(crate) fn pair_aggregates<S: Score>(idx: &SupportIndex, coef: &[S], kind: BasisKind) -> Vec<S> {
    let mut agg: Vec<S> = Vec::with_capacity(idx.pair_count());
    for v in 0..idx.len() {
        let d = idx.depth[v] as usize;
        if d > 0 {
            let p = idx.parent[v] as usize;
            for j in 0..d {
                let prev = agg[idx.pair_offset(p, j)].clone();
                agg.push(extend_aggregate(kind, &prev, &coef[v]));
            }
        }
        agg.push(extend_aggregate(kind, &S::zero(), &coef[v]));
    }
    agg
}

const CLOSE: u32 = u32::MAX;

struct Tables<S> {
    best: Vec<S>,
    opens_at_self: Vec<bool>,
    open: Vec<S>,
    open_choice: Vec<u32>,
}

struct NodeResult<S> {
    best: S,
    opens_at_self: bool,
    open: Vec<S>,
    open_choice: Vec<u32>,
}

impl<S> NodeResult<S> {
    fn new(best: S) -> Self {
        NodeResult {
            best,
            opens_at_self: false,
            open: Vec::new(),
            open_choice: Vec::new(),
        }
    }
}

/// Fills `out` for node `v`; `out.open` and `out.open_choice` are reused buffers.
fn solve_node<S: Score>(
    idx: &SupportIndex,
    seg_power: &(impl Fn(&S) -> S + Sync),
    agg: &[S],
    tables: &Tables<S>,
    v: usize,
    out: &mut NodeResult<S>,
) {
    let kids = idx.children_of(v);
    let mut sum = S::zero();
    for &c in kids {
        sum = sum.add(&tables.best[c as usize]);
    }
    let d = idx.depth[v] as usize;
    out.open.clear();
    out.open_choice.clear();
    for j in 0..=d {
        let mut value = seg_power(&agg[idx.pair_offset(v, j)]);
        let mut choice = CLOSE;
        for (pos, &c) in kids.iter().enumerate() {
            let candidate = &tables.open[idx.pair_offset(c as usize, j)];
            if candidate.better(&value) {
                value = candidate.clone();
                choice = pos as u32;
            }
        }
        out.open.push(value);
        out.open_choice.push(choice);
    }
    out.opens_at_self = out.open[d].better(&sum);
    out.best = if out.opens_at_self {
        out.open[d].clone()
    } else {
        sum
    };
}

fn store<S: Score>(idx: &SupportIndex, tables: &mut Tables<S>, v: usize, r: &NodeResult<S>) {
    tables.best[v] = r.best.clone();
    tables.opens_at_self[v] = r.opens_at_self;
    let base = idx.pair_offset(v, 0);
    let len = r.open.len();
    tables.open[base..base + len].clone_from_slice(&r.open);
    tables.open_choice[base..base + len].copy_from_slice(&r.open_choice);
}

/// Maximizes `Σ seg_power(aggregate(I))` over families of incomparable segments.
pub(crate) fn maximize<S: Score>(
    idx: &SupportIndex,
    coef: &[S],
    kind: BasisKind,
    seg_power: impl Fn(&S) -> S + Sync,
    exec: Exec,
    want_witness: bool,
) -> (S, Vec<Segment>) {
    if idx.is_empty() {
        return (S::zero(), Vec::new());
    }
    let agg = pair_aggregates(idx, coef, kind);
    let n = idx.len();
    let mut tables = Tables {
        best: vec![S::zero(); n],
        opens_at_self: vec![false; n],
        open: vec![S::zero(); idx.pair_count()],
        open_choice: vec![CLOSE; idx.pair_count()],
    };
    match exec {
        Exec::Sequential => {
            let mut scratch = NodeResult::new(S::zero());
            let max_depth = idx.depth.iter().copied().max().unwrap_or(0) as usize;
            scratch.open.reserve(max_depth + 1);
            scratch.open_choice.reserve(max_depth + 1);
            for v in (0..n).rev() {
                solve_node(idx, &seg_power, &agg, &tables, v, &mut scratch);
                store(idx, &mut tables, v, &scratch);
            }
        }
        Exec::Parallel => {
            let max_depth = idx.depth.iter().copied().max().unwrap_or(0) as usize;
            let mut levels: Vec<Vec<usize>> = vec![Vec::new(); max_depth + 1];
            for v in 0..n {
                levels[idx.depth[v] as usize].push(v);
            }
            for level in levels.iter().rev() {
                let results: Vec<NodeResult<S>> = level
                    .par_iter()
                    .map(|&v| {
                        let mut r = NodeResult::new(S::zero());
                        solve_node(idx, &seg_power, &agg, &tables, v, &mut r);
                        r
                    })
                    .collect();
                for (&v, r) in level.iter().zip(&results) {
                    store(idx, &mut tables, v, r);
                }
            }
        }
    }
    let witness = if want_witness {
        reconstruct(idx, &tables)
    } else {
        Vec::new()
    };
    (tables.best[0].clone(), witness)
}

fn reconstruct<S>(idx: &SupportIndex, tables: &Tables<S>) -> Vec<Segment> {
    enum Task {
        Best(usize),
        Open(usize, usize),
    }
    let mut out = Vec::new();
    let mut tasks = vec![Task::Best(0)];
    while let Some(task) = tasks.pop() {
        match task {
            Task::Best(v) => {
                if tables.opens_at_self[v] {
                    tasks.push(Task::Open(v, idx.depth[v] as usize));
                } else {
                    tasks.extend(idx.children_of(v).iter().map(|&c| Task::Best(c as usize)));
                }
            }
            Task::Open(v, j) => {
                let choice = tables.open_choice[idx.pair_offset(v, j)];
                if choice == CLOSE {
                    out.push(idx.segment(v, j));
                } else {
                    tasks.push(Task::Open(idx.children_of(v)[choice as usize] as usize, j));
                }
            }
        }
    }
    out.sort();
    out
}
