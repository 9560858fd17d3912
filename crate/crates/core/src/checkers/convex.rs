//! Minimal-norm convex combinations over a window of a family.
//!
//! Polyhedral norms are written as `‖z‖ = max_C Σ_{s∈C} w_s |z(s)|` over a
//! finite list of coordinate groups `C`:
//!
//! * ℓ₁, p = 1: nodes covered by a family of incomparable segments,
//! * c₀, p = 1: antichains,
//! * ℓ₁, p = 0: a single chain,
//! * c₀, p = 0: single nodes,
//! * L₁ step functions: all cells, weighted by the cell width.
//!
//! With `u_s ≥ ±z(s)` this becomes the linear program
//! `min t` subject to `t ≥ Σ_{s∈C} w_s u_s`, `a ≥ 0`, `Σ a = 1`, solved exactly.
//! Only groups restricted to the window's support matter, and since every
//! term is non-negative it suffices to list groups reaching down to leaves.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::baire::support::SupportIndex;
use crate::baire::{baire_norm_report, BaireVector, ExponentP};
use crate::basis::{BasisKind, NormValue};
use crate::rational::{self, to_f64};
use crate::simplex::{LinearProgram, Relation};
use crate::step::DyadicStep;
use crate::Exec;

use super::{CheckError, Element, VectorFamily};

/// Cap on the number of coordinate groups (generating functionals).
pub const FUNCTIONAL_LIMIT: usize = 100_000;

const SUBGRADIENT_STEPS: usize = 400;
const SUBGRADIENT_DENOM: i64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMethod {
    /// Exact LP optimum with a verified dual certificate.
    ExactLp,
    /// Projected subgradient; the value is the exact norm of the returned
    /// combination, an upper bound on the minimum.
    Subgradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockMin {
    pub coeffs: Vec<BigRational>,
    pub value: NormValue,
    pub method: BlockMethod,
    /// Number of coordinate groups in the LP (exact mode only).
    pub functionals: usize,
}

/// Minimizes `‖Σ aᵢ x_{start+i}‖` over convex `a` for the window `start..start+len`.
pub fn convex_block_min(
    family: &VectorFamily,
    start: usize,
    len: usize,
) -> Result<BlockMin, CheckError> {
    let size = family.len();
    if len == 0 || start.checked_add(len).map_or(true, |end| end > size) {
        return Err(CheckError::WindowOutOfRange { start, len, size });
    }
    let window: Vec<usize> = (start..start + len).collect();
    if len == 1 {
        return Ok(BlockMin {
            coeffs: vec![BigRational::one()],
            value: family.norm_at(start),
            method: if polyhedral(family) {
                BlockMethod::ExactLp
            } else {
                BlockMethod::Subgradient
            },
            functionals: 0,
        });
    }
    match family {
        VectorFamily::Baire { vectors, kind, p } => {
            if polyhedral(family) {
                let (cols, groups) = baire_groups(&vectors[start..start + len], *kind, p)?;
                solve_exact(family, &window, cols, groups)
            } else {
                Ok(subgradient(
                    family,
                    &vectors[start..start + len],
                    &window,
                    *kind,
                    p,
                ))
            }
        }
        VectorFamily::Step { vectors } => {
            let (cols, groups) = step_groups(&vectors[start..start + len]);
            solve_exact(family, &window, cols, groups)
        }
    }
}

fn polyhedral(family: &VectorFamily) -> bool {
    match family {
        VectorFamily::Baire { kind, p, .. } => {
            matches!(kind, BasisKind::Lp1 | BasisKind::C0)
                && match p {
                    ExponentP::Zero => true,
                    ExponentP::Finite(q) => q.is_one(),
                }
        }
        VectorFamily::Step { .. } => true,
    }
}

/// Per-coordinate values of each window vector, and weighted groups of coordinates.
type Columns = Vec<Vec<BigRational>>;
type Groups = Vec<Vec<(usize, BigRational)>>;

fn baire_groups(
    vectors: &[BaireVector],
    kind: BasisKind,
    p: &ExponentP,
) -> Result<(Columns, Groups), CheckError> {
    let mut union: BTreeMap<_, BigRational> = BTreeMap::new();
    for v in vectors {
        for node in v.support() {
            union.insert(node.clone(), BigRational::one());
        }
    }
    let idx = SupportIndex::from_coeffs(&union);
    // Arena positions carrying a support node, mapped to coordinate numbers.
    let mut coord = vec![usize::MAX; idx.len()];
    let mut nodes = Vec::new();
    for v in 0..idx.len() {
        if !idx.coef[v].is_zero() {
            coord[v] = nodes.len();
            nodes.push(idx.node(v));
        }
    }
    let cols: Columns = nodes
        .iter()
        .map(|s| vectors.iter().map(|v| v.coeff(s)).collect())
        .collect();
    let mut sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    if !idx.is_empty() {
        let raw = match (kind, p) {
            (BasisKind::C0, ExponentP::Zero) => (0..nodes.len()).map(|c| vec![c]).collect(),
            (BasisKind::Lp1, ExponentP::Zero) => leaf_paths(&idx, 0, &coord),
            (BasisKind::Lp1, _) => families(&idx, 0, &coord, true)?,
            _ => families(&idx, 0, &coord, false)?,
        };
        sets.extend(raw.into_iter().filter(|s| !s.is_empty()));
    }
    if sets.len() > FUNCTIONAL_LIMIT {
        return Err(CheckError::FunctionalSetTooLarge {
            count: sets.len(),
            limit: FUNCTIONAL_LIMIT,
        });
    }
    let groups = sets
        .into_iter()
        .map(|s| s.into_iter().map(|c| (c, BigRational::one())).collect())
        .collect();
    Ok((cols, groups))
}

/// Coordinates on every path from `v` down to a leaf of the arena.
fn leaf_paths(idx: &SupportIndex, v: usize, coord: &[usize]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let end = idx.subtree_end[v] as usize;
    for leaf in v..end {
        if !idx.children_of(leaf).is_empty() {
            continue;
        }
        let mut path = Vec::new();
        let mut u = leaf;
        loop {
            if coord[u] != usize::MAX {
                path.push(coord[u]);
            }
            if u == v {
                break;
            }
            u = idx.parent[u] as usize;
        }
        path.sort_unstable();
        out.push(path);
    }
    out
}

/// Covered coordinate sets of incomparable families inside the subtree of `v`.
/// `segments` chooses leaf-reaching segments (ℓ₁) instead of single nodes (c₀).
fn families(
    idx: &SupportIndex,
    v: usize,
    coord: &[usize],
    segments: bool,
) -> Result<Vec<Vec<usize>>, CheckError> {
    let mut out: Vec<Vec<usize>> = if segments {
        leaf_paths(idx, v, coord)
    } else if coord[v] != usize::MAX {
        vec![vec![coord[v]]]
    } else {
        Vec::new()
    };
    let mut product: Vec<Vec<usize>> = vec![Vec::new()];
    for &c in idx.children_of(v) {
        let child = families(idx, c as usize, coord, segments)?;
        let mut next = Vec::with_capacity(product.len() * (child.len() + 1));
        for base in &product {
            next.push(base.clone());
            for extra in child.iter().filter(|e| !e.is_empty()) {
                let mut merged = base.clone();
                merged.extend_from_slice(extra);
                next.push(merged);
            }
            if next.len() > FUNCTIONAL_LIMIT {
                return Err(CheckError::FunctionalSetTooLarge {
                    count: next.len(),
                    limit: FUNCTIONAL_LIMIT,
                });
            }
        }
        product = next;
    }
    out.extend(product);
    for set in &mut out {
        set.sort_unstable();
    }
    out.sort();
    out.dedup();
    Ok(out)
}

fn step_groups(vectors: &[DyadicStep]) -> (Columns, Groups) {
    let r = vectors
        .iter()
        .map(DyadicStep::resolution)
        .max()
        .unwrap_or(0);
    let refined: Vec<DyadicStep> = vectors.iter().map(|f| f.refine(r)).collect();
    let cells: BTreeSet<u64> = refined
        .iter()
        .flat_map(|f| f.cells().keys().copied())
        .collect();
    let cols: Columns = cells
        .iter()
        .map(|&i| refined.iter().map(|f| f.value_at(i)).collect())
        .collect();
    let width = BigRational::new(BigInt::one(), BigInt::one() << r);
    let group: Vec<(usize, BigRational)> = (0..cells.len()).map(|c| (c, width.clone())).collect();
    let groups = if group.is_empty() {
        Vec::new()
    } else {
        vec![group]
    };
    (cols, groups)
}

fn solve_exact(
    family: &VectorFamily,
    window: &[usize],
    cols: Columns,
    groups: Groups,
) -> Result<BlockMin, CheckError> {
    let l = window.len();
    let k = cols.len();
    let t = l + k;
    let vars = t + 1;
    let mut objective = vec![BigRational::zero(); vars];
    objective[t] = BigRational::one();
    let mut lp = LinearProgram::new(objective);
    for (c, values) in cols.iter().enumerate() {
        for sign in [1, -1] {
            let mut row = vec![BigRational::zero(); vars];
            row[l + c] = BigRational::one();
            for (i, v) in values.iter().enumerate() {
                row[i] = if sign == 1 { -v } else { v.clone() };
            }
            lp.push(row, Relation::Ge, BigRational::zero());
        }
    }
    for group in &groups {
        let mut row = vec![BigRational::zero(); vars];
        row[t] = BigRational::one();
        for (c, w) in group {
            row[l + c] = -w;
        }
        lp.push(row, Relation::Ge, BigRational::zero());
    }
    let mut simplex_row = vec![BigRational::zero(); vars];
    for v in simplex_row.iter_mut().take(l) {
        *v = BigRational::one();
    }
    lp.push(simplex_row, Relation::Eq, BigRational::one());
    let solution = lp.solve().map_err(|e| CheckError::Lp(e.to_string()))?;
    if !lp.verify(&solution) {
        return Err(CheckError::Lp("duality certificate failed".into()));
    }
    let coeffs = solution.x[..l].to_vec();
    let value = family.norm(&combine(family, window, &coeffs));
    if value.compare_rational(&solution.value) != std::cmp::Ordering::Equal {
        return Err(CheckError::Lp(format!(
            "LP value {} disagrees with the norm {value}",
            solution.value
        )));
    }
    Ok(BlockMin {
        coeffs,
        value,
        method: BlockMethod::ExactLp,
        functionals: groups.len(),
    })
}

fn combine(family: &VectorFamily, window: &[usize], coeffs: &[BigRational]) -> Element {
    let terms: Vec<(usize, BigRational)> =
        window.iter().copied().zip(coeffs.iter().cloned()).collect();
    family.combination(&terms)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &s) in sorted.iter().enumerate() {
        acc += s;
        let candidate = (acc - 1.0) / (i as f64 + 1.0);
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// Rationals with denominator [`SUBGRADIENT_DENOM`], non-negative, summing to one.
fn rationalize(a: &[f64]) -> Vec<BigRational> {
    let d = SUBGRADIENT_DENOM;
    let mut m: Vec<i64> = a
        .iter()
        .map(|x| (x * d as f64).round().max(0.0) as i64)
        .collect();
    let total: i64 = m.iter().sum();
    let largest = (0..m.len())
        .max_by_key(|&i| (m[i], std::cmp::Reverse(i)))
        .unwrap_or(0);
    m[largest] += d - total;
    if m[largest] < 0 {
        m.iter_mut().for_each(|x| *x = 0);
        m[0] = d;
    }
    m.into_iter().map(|x| rational::ratio(x, d)).collect()
}

fn subgradient(
    family: &VectorFamily,
    vectors: &[BaireVector],
    window: &[usize],
    kind: BasisKind,
    p: &ExponentP,
) -> BlockMin {
    let l = window.len();
    let pf = p.finite().map(to_f64);
    let scale = vectors
        .iter()
        .map(|v| {
            v.coeffs()
                .values()
                .map(|c| to_f64(c).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut a = vec![1.0 / l as f64; l];
    let mut best: Option<(Vec<BigRational>, NormValue)> = None;
    for step in 0..SUBGRADIENT_STEPS {
        let coeffs = rationalize(&a);
        let Element::Baire(z) = combine(family, window, &coeffs) else {
            unreachable!("baire family")
        };
        let report = baire_norm_report(&z, kind, p, Exec::Sequential);
        if best
            .as_ref()
            .map_or(true, |(_, v)| report.value.compare(v).is_lt())
        {
            best = Some((coeffs, report.value.clone()));
        }
        let f = report.value.to_f64();
        if f <= 0.0 {
            break;
        }
        let mut grad = vec![0.0; l];
        for seg in &report.witness {
            let nodes: Vec<_> = seg.nodes().collect();
            let zs: Vec<f64> = nodes.iter().map(|s| to_f64(&z.coeff(s))).collect();
            let block: f64 = match kind {
                BasisKind::Lp1 => zs.iter().map(|x| x.abs()).sum(),
                BasisKind::Lp2 => zs.iter().map(|x| x * x).sum::<f64>().sqrt(),
                BasisKind::C0 => zs.iter().map(|x| x.abs()).fold(0.0, f64::max),
            };
            if block <= 0.0 {
                continue;
            }
            let outer = match pf {
                Some(q) => (block / f).powf(q - 1.0),
                None => 1.0,
            };
            let argmax = (0..zs.len())
                .max_by(|&i, &j| zs[i].abs().total_cmp(&zs[j].abs()))
                .unwrap_or(0);
            for (i, v) in vectors.iter().enumerate() {
                let d: f64 = match kind {
                    BasisKind::Lp1 => nodes
                        .iter()
                        .zip(&zs)
                        .map(|(s, x)| x.signum() * to_f64(&v.coeff(s)))
                        .sum(),
                    BasisKind::Lp2 => {
                        nodes
                            .iter()
                            .zip(&zs)
                            .map(|(s, x)| x * to_f64(&v.coeff(s)))
                            .sum::<f64>()
                            / block
                    }
                    BasisKind::C0 => zs[argmax].signum() * to_f64(&v.coeff(&nodes[argmax])),
                };
                grad[i] += outer * d;
            }
        }
        let eta = 0.5 / (scale * ((step + 1) as f64).sqrt());
        for (x, g) in a.iter_mut().zip(&grad) {
            *x -= eta * g;
        }
        project_simplex(&mut a);
    }
    let (coeffs, value) = best.expect("at least one iterate");
    BlockMin {
        coeffs,
        value,
        method: BlockMethod::Subgradient,
        functionals: 0,
    }
}
