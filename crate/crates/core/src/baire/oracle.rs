//! Exhaustive enumeration of incomparable segment families.
//!
//! Nodes of the support closure are decided in pre-order: each node either
//! is not the minimum of a segment, or is the minimum of a segment ending at
//! some node of its subtree (and then its whole subtree is used up). Every
//! family of pairwise incomparable segments with endpoints in the closure
//! is visited exactly once.

use crate::basis::BasisKind;
use crate::tree::Segment;

use super::dp::Score;
use super::support::SupportIndex;

/// Aggregate of the chain from `a` down to `end`, folded from `end` upwards.
fn path_aggregate<S: Score>(
    idx: &SupportIndex,
    coef: &[S],
    kind: BasisKind,
    a: usize,
    end: usize,
) -> S {
    let mut acc = S::zero();
    let mut u = end;
    loop {
        let c = &coef[u];
        acc = match kind {
            BasisKind::Lp1 => acc.add(&c.abs()),
            BasisKind::Lp2 => acc.add(&c.mul(c)),
            BasisKind::C0 => {
                let m = c.abs();
                if m.better(&acc) {
                    m
                } else {
                    acc
                }
            }
        };
        if u == a {
            return acc;
        }
        u = idx.parent[u] as usize;
    }
}

struct Search<'a, S> {
    idx: &'a SupportIndex,
    // Segments starting at `a` occupy `row_start[a]..row_start[a + 1]`.
    row_start: Vec<usize>,
    ends: Vec<usize>,
    values: Vec<S>,
    best: S,
    best_family: Vec<(usize, usize)>,
    current: Vec<(usize, usize)>,
}

impl<S: Score> Search<'_, S> {
    /// `TRACK` records the current family so the maximizer can be reported.
    fn visit<const TRACK: bool>(&mut self, pos: usize, acc: S) {
        if pos == self.idx.len() {
            if acc.better(&self.best) {
                self.best = acc;
                if TRACK {
                    self.best_family.clone_from(&self.current);
                }
            }
            return;
        }
        self.visit::<TRACK>(pos + 1, acc.clone());
        let next = self.idx.subtree_end[pos] as usize;
        for k in self.row_start[pos]..self.row_start[pos + 1] {
            let total = acc.add(&self.values[k]);
            if TRACK {
                self.current.push((pos, self.ends[k]));
            }
            self.visit::<TRACK>(next, total);
            if TRACK {
                self.current.pop();
            }
        }
    }
}

/// Maximum of `Σ seg_power(block)` over all families, with the first maximizer
/// found when `want_witness` is set.
pub(crate) fn enumerate<S: Score>(
    idx: &SupportIndex,
    coef: &[S],
    kind: BasisKind,
    seg_power: impl Fn(&S) -> S,
    want_witness: bool,
) -> (S, Vec<Segment>) {
    let n = idx.len();
    let pairs: usize = (0..n).map(|a| idx.subtree_end[a] as usize - a).sum();
    let mut row_start = Vec::with_capacity(n + 1);
    let mut ends = Vec::with_capacity(pairs);
    let mut values = Vec::with_capacity(pairs);
    for a in 0..n {
        row_start.push(ends.len());
        for end in a..idx.subtree_end[a] as usize {
            ends.push(end);
            values.push(seg_power(&path_aggregate(idx, coef, kind, a, end)));
        }
    }
    row_start.push(ends.len());
    let mut search = Search {
        idx,
        row_start,
        ends,
        values,
        best: S::zero(),
        best_family: Vec::with_capacity(n),
        current: Vec::with_capacity(n),
    };
    if !want_witness {
        search.visit::<false>(0, S::zero());
        return (search.best, Vec::new());
    }
    search.visit::<true>(0, S::zero());
    let mut witness: Vec<Segment> = search
        .best_family
        .iter()
        .map(|&(a, end)| idx.segment(end, idx.depth[a] as usize))
        .collect();
    witness.sort();
    (search.best, witness)
}
