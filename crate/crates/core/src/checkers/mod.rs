//! Finite checkers: Cesàro means, Banach–Saks obstructions, alternating-sign
//! falsification, convex blocks and weak-nullity probing.
//!
//! Vector indices in this module are 0-based positions in the family.

mod convex;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::baire::{baire_norm, BaireError, BaireVector, ExponentP};
use crate::basis::{BasisKind, NormValue};
use crate::rational::{self, format_rational};
use crate::step::{l1_norm, step_combine, BushCondition, DyadicStep};
use crate::tree::{FiniteTree, TreeNode};
use crate::Exec;

pub use convex::{convex_block_min, BlockMethod, BlockMin, FUNCTIONAL_LIMIT};

/// Largest family accepted by [`bs_obstruction_check`].
pub const BS_FAMILY_LIMIT: usize = 10;
/// Largest number of norm evaluations [`abs_obstruction_falsify`] will plan.
pub const SAMPLER_LIMIT: u64 = 2_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckError {
    #[error("indices must be strictly increasing and below {len}")]
    BadIndexList { len: usize },
    #[error("vector {0} has norm above 1")]
    NotInUnitBall(usize),
    #[error("family has {size} vectors, the limit is {limit}")]
    FamilyTooLarge { size: usize, limit: usize },
    #[error("family has {size} vectors, at least {needed} are needed")]
    FamilyTooSmall { size: usize, needed: usize },
    #[error("window {start}+{len} does not fit a family of {size}")]
    WindowOutOfRange {
        start: usize,
        len: usize,
        size: usize,
    },
    #[error("{count} generating functionals exceed the limit {limit}")]
    FunctionalSetTooLarge { count: usize, limit: usize },
    #[error("sampler plans {count} evaluations, the limit is {limit}")]
    SamplerTooLarge { count: u64, limit: u64 },
    #[error("a family needs at least one vector")]
    EmptyFamily,
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error(transparent)]
    Baire(#[from] BaireError),
}

/// A finite ordered family in one normed space.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorFamily {
    Baire {
        vectors: Vec<BaireVector>,
        kind: BasisKind,
        p: ExponentP,
    },
    Step {
        vectors: Vec<DyadicStep>,
    },
}

/// A single vector of either space.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    Baire(BaireVector),
    Step(DyadicStep),
}

impl VectorFamily {
    pub fn baire(
        vectors: Vec<BaireVector>,
        kind: BasisKind,
        p: ExponentP,
    ) -> Result<Self, CheckError> {
        let first = vectors.first().ok_or(CheckError::EmptyFamily)?;
        if vectors.iter().any(|v| !v.same_tree(first)) {
            return Err(BaireError::TreeMismatch.into());
        }
        Ok(VectorFamily::Baire { vectors, kind, p })
    }

    pub fn step(vectors: Vec<DyadicStep>) -> Result<Self, CheckError> {
        if vectors.is_empty() {
            return Err(CheckError::EmptyFamily);
        }
        Ok(VectorFamily::Step { vectors })
    }

    pub fn len(&self) -> usize {
        match self {
            VectorFamily::Baire { vectors, .. } => vectors.len(),
            VectorFamily::Step { vectors } => vectors.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element(&self, i: usize) -> Element {
        match self {
            VectorFamily::Baire { vectors, .. } => Element::Baire(vectors[i].clone()),
            VectorFamily::Step { vectors } => Element::Step(vectors[i].clone()),
        }
    }

    pub fn norm(&self, x: &Element) -> NormValue {
        match (self, x) {
            (VectorFamily::Baire { kind, p, .. }, Element::Baire(v)) => baire_norm(v, *kind, p),
            (VectorFamily::Step { .. }, Element::Step(f)) => NormValue::exact(l1_norm(f), 1),
            _ => panic!("element from another space"),
        }
    }

    pub fn norm_at(&self, i: usize) -> NormValue {
        self.norm(&self.element(i))
    }

    /// `Σ cᵢ x_{nᵢ}` for `(nᵢ, cᵢ)` pairs.
    pub fn combination(&self, terms: &[(usize, BigRational)]) -> Element {
        match self {
            VectorFamily::Baire { vectors, .. } => {
                let mut acc: BTreeMap<_, BigRational> = BTreeMap::new();
                for (i, c) in terms {
                    if c.is_zero() {
                        continue;
                    }
                    for (node, v) in vectors[*i].coeffs() {
                        *acc.entry(node.clone()).or_insert_with(BigRational::zero) += c * v;
                    }
                }
                acc.retain(|_, v| !v.is_zero());
                Element::Baire(BaireVector::from_map(vectors[0].tree_arc().clone(), acc))
            }
            VectorFamily::Step { vectors } => {
                let one = BigRational::one();
                let mut acc = DyadicStep::zero();
                for (i, c) in terms {
                    acc = step_combine(&one, &acc, c, &vectors[*i]);
                }
                Element::Step(acc)
            }
        }
    }

    /// Every vector multiplied by `q`.
    pub fn scaled(&self, q: &BigRational) -> VectorFamily {
        match self {
            VectorFamily::Baire { vectors, kind, p } => VectorFamily::Baire {
                vectors: vectors.iter().map(|v| v.scale(q)).collect(),
                kind: *kind,
                p: p.clone(),
            },
            VectorFamily::Step { vectors } => VectorFamily::Step {
                vectors: vectors
                    .iter()
                    .map(|f| step_combine(q, f, &BigRational::zero(), f))
                    .collect(),
            },
        }
    }

    fn describe(&self) -> String {
        match self {
            VectorFamily::Baire { kind, p, .. } => format!("baire {kind} p={p}"),
            VectorFamily::Step { .. } => "l1-step".into(),
        }
    }
}

/// `x_k = δ_{(k)}` for `k = 1..=n` on the tree `{∅, (1), …, (n)}`.
pub fn delta_family(n: u32, kind: BasisKind, p: ExponentP) -> Result<VectorFamily, CheckError> {
    let nodes = std::iter::once(TreeNode::root()).chain((1..=n).map(|k| TreeNode::new(vec![k])));
    let tree = Arc::new(FiniteTree::new(nodes).expect("star is prefix-closed"));
    let vectors = (1..=n)
        .map(|k| BaireVector::unit(tree.clone(), TreeNode::new(vec![k]), BigRational::one()))
        .collect::<Result<Vec<_>, _>>()?;
    VectorFamily::baire(vectors, kind, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Violated,
    Inconclusive,
}

/// One convex block found by [`weak_null_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockRecord {
    pub start: usize,
    pub len: usize,
    pub coeffs: Vec<String>,
    pub value: NormValue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    /// `‖(1/m)(Σ_{k≤split} x_{nₖ} − Σ_{k>split} x_{nₖ})‖ = value`.
    BanachSaks {
        m: usize,
        split: usize,
        indices: Vec<usize>,
        value: NormValue,
    },
    /// `‖Σ cᵢ x_{nᵢ}‖ = value < bound = ε Σ|cᵢ|`.
    Alternating {
        level: u32,
        indices: Vec<usize>,
        coeffs: Vec<String>,
        value: NormValue,
        bound: String,
    },
    Bush {
        condition: BushCondition,
        k: usize,
        l: Option<usize>,
        value: String,
        threshold: String,
    },
    Blocks {
        blocks: Vec<BlockRecord>,
        tail_start: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub tested: String,
}

impl Verdict {
    pub fn pass(tested: String) -> Self {
        Verdict {
            status: Status::Pass,
            witness: None,
            tested,
        }
    }

    pub fn violated(witness: Witness, tested: String) -> Self {
        Verdict {
            status: Status::Violated,
            witness: Some(witness),
            tested,
        }
    }

    pub fn inconclusive(tested: String) -> Self {
        Verdict {
            status: Status::Inconclusive,
            witness: None,
            tested,
        }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn witness(&self) -> Option<&Witness> {
        self.witness.as_ref()
    }
}

fn check_epsilon(epsilon: &BigRational) -> Result<(), CheckError> {
    if epsilon.is_positive() {
        Ok(())
    } else {
        Err(CheckError::NonPositiveEpsilon)
    }
}

/// `m^{-1} Σₖ sₖ x_{nₖ}` with `sₖ = (−1)^k` (k from 1) when alternating, else 1.
pub fn cesaro_mean(
    family: &VectorFamily,
    indices: &[usize],
    alternating: bool,
) -> Result<(Element, NormValue), CheckError> {
    let len = family.len();
    if indices.is_empty()
        || indices.windows(2).any(|w| w[0] >= w[1])
        || indices.iter().any(|&i| i >= len)
    {
        return Err(CheckError::BadIndexList { len });
    }
    let weight = rational::ratio(1, indices.len() as i64);
    let terms: Vec<(usize, BigRational)> = indices
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            let negative = alternating && k % 2 == 0;
            (i, if negative { -&weight } else { weight.clone() })
        })
        .collect();
    let mean = family.combination(&terms);
    let value = family.norm(&mean);
    Ok((mean, value))
}

/// Strictly increasing `m`-tuples from `0..n` in lexicographic order.
fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if m > n {
        return out;
    }
    let mut current: Vec<usize> = (0..m).collect();
    loop {
        out.push(current.clone());
        let Some(pos) = (0..m).rev().find(|&i| current[i] != i + n - m) else {
            return out;
        };
        current[pos] += 1;
        for j in pos + 1..m {
            current[j] = current[j - 1] + 1;
        }
    }
}

fn map_ordered<T: Send, R: Send>(
    exec: Exec,
    items: Vec<T>,
    f: impl Fn(T) -> R + Sync + Send,
) -> Vec<R> {
    match exec {
        Exec::Sequential => items.into_iter().map(f).collect(),
        Exec::Parallel => items.into_par_iter().map(f).collect(),
    }
}

/// Tests every `m ≤ |F|`, increasing tuple and split `ℓ`; passes iff every mean
/// `‖(1/m)(Σ_{k≤ℓ} x_{nₖ} − Σ_{k>ℓ} x_{nₖ})‖` is at least ε.
pub fn bs_obstruction_check(
    family: &VectorFamily,
    epsilon: &BigRational,
    exec: Exec,
) -> Result<Verdict, CheckError> {
    check_epsilon(epsilon)?;
    let n = family.len();
    if n > BS_FAMILY_LIMIT {
        return Err(CheckError::FamilyTooLarge {
            size: n,
            limit: BS_FAMILY_LIMIT,
        });
    }
    for i in 0..n {
        if family.norm_at(i).compare_rational(&BigRational::one()) == Ordering::Greater {
            return Err(CheckError::NotInUnitBall(i));
        }
    }
    let mut count = 0usize;
    for m in 1..=n {
        let weight = rational::ratio(1, m as i64);
        let tuples = combinations(n, m);
        count += tuples.len() * m;
        let found = map_ordered(exec, tuples, |tuple| {
            for split in 1..=m {
                let terms: Vec<(usize, BigRational)> = tuple
                    .iter()
                    .enumerate()
                    .map(|(k, &i)| (i, if k < split { weight.clone() } else { -&weight }))
                    .collect();
                let value = family.norm(&family.combination(&terms));
                if value.compare_rational(epsilon) == Ordering::Less {
                    return Some(Witness::BanachSaks {
                        m,
                        split,
                        indices: tuple,
                        value,
                    });
                }
            }
            None
        });
        if let Some(w) = found.into_iter().flatten().next() {
            return Ok(Verdict::violated(w, bs_tested(family, m, count)));
        }
    }
    Ok(Verdict::pass(bs_tested(family, n, count)))
}

fn bs_tested(family: &VectorFamily, m: usize, count: usize) -> String {
    format!("{}; m = 1..={m}; {count} means", family.describe())
}

/// Coefficient vectors tried for each index tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerSpec {
    /// Highest `ℓ` tried; each level uses `2^ℓ` indices.
    pub max_level: u32,
    /// Extra grid values; every vector over the grid is tried after the sign patterns.
    pub grid: Vec<BigRational>,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec {
            max_level: 3,
            grid: Vec::new(),
        }
    }
}

impl SamplerSpec {
    fn per_tuple(&self, width: usize) -> u64 {
        let grid = (self.grid.len() as u64)
            .checked_pow(width as u32)
            .unwrap_or(u64::MAX);
        (width as u64)
            .saturating_add(1u64.checked_shl(width as u32).unwrap_or(u64::MAX))
            .saturating_add(grid)
    }

    /// Unit vectors, then `±1` patterns (`+` first), then grid vectors, in order.
    fn vectors(&self, width: usize) -> impl Iterator<Item = Vec<BigRational>> + '_ {
        let one = BigRational::one();
        let units = (0..width).map(move |i| {
            let mut v = vec![BigRational::zero(); width];
            v[i] = BigRational::one();
            v
        });
        let signs = (0..1u64 << width).map(move |mask| {
            (0..width)
                .map(|i| {
                    if mask >> (width - 1 - i) & 1 == 1 {
                        -&one
                    } else {
                        one.clone()
                    }
                })
                .collect()
        });
        let g = self.grid.len() as u64;
        let total = if g == 0 { 0 } else { g.pow(width as u32) };
        let grid = (0..total).filter_map(move |mut code| {
            let mut v = vec![BigRational::zero(); width];
            for slot in v.iter_mut().rev() {
                *slot = self.grid[(code % g) as usize].clone();
                code /= g;
            }
            v.iter().any(|c| !c.is_zero()).then_some(v)
        });
        units.chain(signs).chain(grid)
    }

    fn describe(&self) -> String {
        let grid: Vec<String> = self.grid.iter().map(format_rational).collect();
        format!(
            "levels 1..={}; unit vectors, all sign patterns, grid [{}]",
            self.max_level,
            grid.join(", ")
        )
    }
}

/// Searches `ℓ = 1..=max_level`, tuples `n(1) < … < n(2^ℓ)` with `n(1) ≥ ℓ`
/// (1-based, so 0-based index at least `ℓ − 1`), and sampled coefficients for
/// `‖Σ cᵢ x_{n(i)}‖ < ε Σ|cᵢ|`. Never passes.
pub fn abs_obstruction_falsify(
    family: &VectorFamily,
    epsilon: &BigRational,
    sampler: &SamplerSpec,
    exec: Exec,
) -> Result<Verdict, CheckError> {
    check_epsilon(epsilon)?;
    let n = family.len();
    if n < 2 {
        return Err(CheckError::FamilyTooSmall { size: n, needed: 2 });
    }
    let mut levels = Vec::new();
    let mut planned: u64 = 0;
    for level in 1..=sampler.max_level.min(30) {
        let width = 1usize << level;
        let offset = level as usize - 1;
        if offset + width > n {
            break;
        }
        let tuples = binomial(n - offset, width);
        planned = planned.saturating_add(tuples.saturating_mul(sampler.per_tuple(width)));
        levels.push(level);
    }
    if planned > SAMPLER_LIMIT {
        return Err(CheckError::SamplerTooLarge {
            count: planned,
            limit: SAMPLER_LIMIT,
        });
    }
    for &level in &levels {
        let width = 1usize << level;
        let offset = level as usize - 1;
        let tuples: Vec<Vec<usize>> = combinations(n - offset, width)
            .into_iter()
            .map(|t| t.into_iter().map(|i| i + offset).collect())
            .collect();
        let found = map_ordered(exec, tuples, |tuple| {
            for coeffs in sampler.vectors(width) {
                let mass: BigRational = coeffs.iter().map(|c| c.abs()).sum();
                let bound = epsilon * mass;
                let terms: Vec<(usize, BigRational)> =
                    tuple.iter().copied().zip(coeffs.iter().cloned()).collect();
                let value = family.norm(&family.combination(&terms));
                if value.compare_rational(&bound) == Ordering::Less {
                    return Some(Witness::Alternating {
                        level,
                        indices: tuple,
                        coeffs: coeffs.iter().map(format_rational).collect(),
                        value,
                        bound: format_rational(&bound),
                    });
                }
            }
            None
        });
        if let Some(w) = found.into_iter().flatten().next() {
            return Ok(Verdict::violated(w, abs_tested(family, sampler, &levels)));
        }
    }
    Ok(Verdict::inconclusive(abs_tested(family, sampler, &levels)))
}

fn abs_tested(family: &VectorFamily, sampler: &SamplerSpec, levels: &[u32]) -> String {
    let reached = levels
        .last()
        .map_or("none".to_string(), |l| format!("1..={l}"));
    format!(
        "{}; {}; levels reached {reached}",
        family.describe(),
        sampler.describe()
    )
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k.min(n - k) {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Greedy consecutive windows: from the current start, the shortest window whose
/// minimal convex block has norm below ε is taken. Passes when at least one
/// such block exists; the witness lists the blocks and where the search stopped.
pub fn weak_null_probe(
    family: &VectorFamily,
    epsilon: &BigRational,
) -> Result<Verdict, CheckError> {
    check_epsilon(epsilon)?;
    let n = family.len();
    if n < 2 {
        return Err(CheckError::FamilyTooSmall { size: n, needed: 2 });
    }
    let mut blocks = Vec::new();
    let mut start = 0;
    let mut evaluated = 0usize;
    'outer: while start < n {
        for len in 1..=n - start {
            let best = convex_block_min(family, start, len)?;
            evaluated += 1;
            if best.value.compare_rational(epsilon) == Ordering::Less {
                blocks.push(BlockRecord {
                    start,
                    len,
                    coeffs: best.coeffs.iter().map(format_rational).collect(),
                    value: best.value,
                });
                start += len;
                continue 'outer;
            }
        }
        break;
    }
    let tested = format!("{}; {evaluated} windows", family.describe());
    if blocks.is_empty() {
        Ok(Verdict::inconclusive(tested))
    } else {
        Ok(Verdict {
            status: Status::Pass,
            witness: Some(Witness::Blocks {
                blocks,
                tail_start: start,
            }),
            tested,
        })
    }
}
