//! Finitely supported vectors on a tree and the ℓ_p-Baire sum norms.
//!
//! For `x ∈ c₀₀(θ)`, `p ≥ 1` and an ingredient basis `E`,
//!
//! ```text
//! ‖x‖_{E,p,θ} = sup ( Σᵢ ‖Σ_{s∈Iᵢ} x(s) e_{|s|}‖_E^p )^{1/p}
//! ```
//!
//! over finite families of pairwise completely incomparable segments `Iᵢ`,
//! and `‖x‖_{E,0,θ}` is the supremum over single segments.

mod dp;
mod identities;
mod oracle;
pub(crate) mod support;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{basis_norm, BasisKind, NormValue};
use crate::rational::{self, to_f64};
use crate::tree::{FiniteTree, Segment, TreeNode};
use crate::Exec;

pub use identities::{
    check_block_window, check_branch_isometry, check_incomparable_additivity,
    check_root_decomposition, CheckReport,
};

use support::SupportIndex;

/// Default bound on the support closure size accepted by the oracle.
pub const ORACLE_NODE_LIMIT: usize = 14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaireError {
    #[error("node {0} is not in the tree")]
    NodeNotInTree(TreeNode),
    #[error("node {0} is listed twice")]
    DuplicateEntry(TreeNode),
    #[error("vectors live on different trees")]
    TreeMismatch,
    #[error("segment {min}..{max} is not a segment of the tree")]
    InvalidSegment { min: TreeNode, max: TreeNode },
    #[error("support closure has {nodes} nodes, the oracle accepts at most {limit}")]
    TooLargeForOracle { nodes: usize, limit: usize },
    #[error("supports of vectors {i} and {j} are comparable at {left} and {right}")]
    SupportsNotIncomparable {
        i: usize,
        j: usize,
        left: TreeNode,
        right: TreeNode,
    },
    #[error("support is not a chain: {left} and {right} are incomparable")]
    SupportNotChain { left: TreeNode, right: TreeNode },
    #[error("the root coefficient must be zero")]
    NonzeroRootCoefficient,
    #[error("this identity needs a finite exponent p ≥ 1")]
    ZeroExponent,
    #[error("{vectors} vectors but {coefficients} coefficients")]
    LengthMismatch { vectors: usize, coefficients: usize },
    #[error("vector {index} has ‖y‖^p = {value}, outside the window (1/2, 2)")]
    OutsideBlockWindow { index: usize, value: String },
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
}

/// The exponent `p ∈ [1, ∞)`, or `Zero` for the single-segment variant.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExponentP {
    Zero,
    Finite(BigRational),
}

impl ExponentP {
    pub fn new(p: BigRational) -> Result<Self, BaireError> {
        if p < BigRational::one() {
            return Err(BaireError::InvalidExponent(format!("p = {p} is below 1")));
        }
        Ok(ExponentP::Finite(p))
    }

    pub fn one() -> Self {
        ExponentP::Finite(BigRational::one())
    }

    pub fn two() -> Self {
        ExponentP::Finite(rational::int(2))
    }

    pub fn finite(&self) -> Option<&BigRational> {
        match self {
            ExponentP::Zero => None,
            ExponentP::Finite(p) => Some(p),
        }
    }
}

impl fmt::Display for ExponentP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentP::Zero => f.write_str("zero"),
            ExponentP::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for ExponentP {
    type Err = BaireError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "zero" || s == "0" {
            return Ok(ExponentP::Zero);
        }
        let p = rational::parse_rational(s).ok_or_else(|| {
            BaireError::InvalidExponent(format!("{s:?} is not \"zero\" or a rational"))
        })?;
        ExponentP::new(p)
    }
}

impl Serialize for ExponentP {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExponentP {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// How a (basis, exponent) pair is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// `‖x‖^p` is rational; carried exactly with inverse exponent `p`.
    Exact { p: u32 },
    /// binary64 with tolerance [`crate::basis::TOLERANCE`].
    Approx,
}

/// Exact for ℓ₁/c₀ with `p ∈ {1, 2}`, ℓ₂ with `p = 2`, and every `p = Zero`.
pub fn eval_mode(kind: BasisKind, p: &ExponentP) -> EvalMode {
    let Some(p) = p.finite() else {
        return EvalMode::Exact {
            p: if kind == BasisKind::Lp2 { 2 } else { 1 },
        };
    };
    let small = rational::as_small_natural(p);
    match (kind, small) {
        (BasisKind::Lp1 | BasisKind::C0, Some(k @ (1 | 2))) => EvalMode::Exact { p: k },
        (BasisKind::Lp2, Some(2)) => EvalMode::Exact { p: 2 },
        _ => EvalMode::Approx,
    }
}

/// An element of `c₀₀(θ)`: rational coefficients on finitely many nodes of a tree.
#[derive(Clone)]
pub struct BaireVector {
    tree: Arc<FiniteTree>,
    coeffs: BTreeMap<TreeNode, BigRational>,
    support: SupportIndex,
}

impl fmt::Debug for BaireVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BaireVector")
            .field("tree_nodes", &self.tree.len())
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for BaireVector {
    fn eq(&self, other: &Self) -> bool {
        self.same_tree(other) && self.coeffs == other.coeffs
    }
}

impl BaireVector {
    /// Builds a vector; zero coefficients are dropped, nodes must lie in the tree.
    pub fn new<I>(tree: Arc<FiniteTree>, entries: I) -> Result<Self, BaireError>
    where
        I: IntoIterator<Item = (TreeNode, BigRational)>,
    {
        let mut list: Vec<(TreeNode, BigRational)> = entries.into_iter().collect();
        if let Some((node, _)) = list.iter().find(|(node, _)| !tree.contains(node)) {
            return Err(BaireError::NodeNotInTree(node.clone()));
        }
        list.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = list.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(BaireError::DuplicateEntry(w[0].0.clone()));
        }
        list.retain(|(_, value)| !value.is_zero());
        Ok(Self::from_map(tree, list.into_iter().collect()))
    }

    pub(crate) fn from_map(tree: Arc<FiniteTree>, coeffs: BTreeMap<TreeNode, BigRational>) -> Self {
        debug_assert!(coeffs.values().all(|v| !v.is_zero()));
        let support = SupportIndex::from_coeffs(&coeffs);
        BaireVector {
            tree,
            coeffs,
            support,
        }
    }

    pub fn zero(tree: Arc<FiniteTree>) -> Self {
        Self::from_map(tree, BTreeMap::new())
    }

    /// `q·δ_node`.
    pub fn unit(tree: Arc<FiniteTree>, node: TreeNode, q: BigRational) -> Result<Self, BaireError> {
        Self::new(tree, [(node, q)])
    }

    pub fn tree(&self) -> &FiniteTree {
        &self.tree
    }

    pub fn tree_arc(&self) -> &Arc<FiniteTree> {
        &self.tree
    }

    pub fn coeffs(&self) -> &BTreeMap<TreeNode, BigRational> {
        &self.coeffs
    }

    pub fn coeff(&self, node: &TreeNode) -> BigRational {
        self.coeffs
            .get(node)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &TreeNode> {
        self.coeffs.keys()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Number of nodes in the prefix closure of the support.
    pub fn closure_size(&self) -> usize {
        self.support.len()
    }

    pub fn same_tree(&self, other: &BaireVector) -> bool {
        Arc::ptr_eq(&self.tree, &other.tree) || *self.tree == *other.tree
    }

    pub fn scale(&self, q: &BigRational) -> BaireVector {
        if q.is_zero() {
            return BaireVector::zero(self.tree.clone());
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|(k, v)| (k.clone(), v * q))
            .collect();
        Self::from_map(self.tree.clone(), coeffs)
    }

    /// Same coefficients viewed in another tree containing the support.
    pub fn retree(&self, tree: Arc<FiniteTree>) -> Result<BaireVector, BaireError> {
        BaireVector::new(
            tree,
            self.coeffs.iter().map(|(k, v)| (k.clone(), v.clone())),
        )
    }
}

/// `a·x + b·y`.
pub fn vector_combine(
    a: &BigRational,
    x: &BaireVector,
    b: &BigRational,
    y: &BaireVector,
) -> Result<BaireVector, BaireError> {
    if !x.same_tree(y) {
        return Err(BaireError::TreeMismatch);
    }
    let mut coeffs: BTreeMap<TreeNode, BigRational> = BTreeMap::new();
    for (node, v) in &x.coeffs {
        coeffs.insert(node.clone(), a * v);
    }
    for (node, v) in &y.coeffs {
        let entry = coeffs.entry(node.clone()).or_insert_with(BigRational::zero);
        *entry += b * v;
    }
    coeffs.retain(|_, v| !v.is_zero());
    Ok(BaireVector::from_map(x.tree.clone(), coeffs))
}

/// Coefficients of `x` along the chain of `segment`, from its minimum to its maximum.
pub fn segment_vector(x: &BaireVector, segment: &Segment) -> Result<Vec<BigRational>, BaireError> {
    if !segment.is_valid_in(&x.tree) {
        return Err(BaireError::InvalidSegment {
            min: segment.min_node().clone(),
            max: segment.max_node().clone(),
        });
    }
    Ok(segment.nodes().map(|n| x.coeff(&n)).collect())
}

/// A norm value together with a family attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormReport {
    pub value: NormValue,
    pub witness: Vec<Segment>,
}

/// `‖x‖_{E,p,θ}`. `p = Zero` evaluates [`baire_norm_zero`].
pub fn baire_norm(x: &BaireVector, kind: BasisKind, p: &ExponentP) -> NormValue {
    evaluate(x, kind, p, Exec::Sequential, false).value
}

/// [`baire_norm`] with an attaining family of segments.
pub fn baire_norm_report(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
    exec: Exec,
) -> NormReport {
    evaluate(x, kind, p, exec, true)
}

fn evaluate(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
    exec: Exec,
    want_witness: bool,
) -> NormReport {
    let Some(p_value) = p.finite() else {
        return baire_norm_zero_report(x, kind);
    };
    let idx = &x.support;
    match eval_mode(kind, p) {
        EvalMode::Exact { p: k } => {
            let (power, witness, denom) = if let Some(scaled) = &idx.scaled {
                let (v, w) = dp::maximize(
                    idx,
                    &scaled.numer,
                    kind,
                    exact_power::<i128>(kind, k),
                    exec,
                    want_witness,
                );
                (v, w, Some(scaled.denom))
            } else {
                let (v, w) = dp::maximize(
                    idx,
                    &idx.coef,
                    kind,
                    exact_power::<BigRational>(kind, k),
                    exec,
                    want_witness,
                );
                return NormReport {
                    value: NormValue::exact(v, k),
                    witness: w,
                };
            };
            NormReport {
                value: NormValue::exact(unscale(power, denom.expect("scaled"), k), k),
                witness,
            }
        }
        EvalMode::Approx => {
            let coef: Vec<f64> = idx.coef.iter().map(to_f64).collect();
            let pf = to_f64(p_value);
            let (v, w) = dp::maximize(idx, &coef, kind, approx_power(kind, pf), exec, want_witness);
            NormReport {
                value: NormValue::Approx(v.powf(1.0 / pf)),
                witness: w,
            }
        }
    }
}

/// `‖block‖_E^p` from the E-aggregate, for exact pairs.
fn exact_power<S: dp::Score>(kind: BasisKind, p: u32) -> impl Fn(&S) -> S + Sync {
    move |agg: &S| match (kind, p) {
        (BasisKind::Lp2, _) | (_, 1) => agg.clone(),
        _ => agg.mul(agg),
    }
}

fn approx_power(kind: BasisKind, p: f64) -> impl Fn(&f64) -> f64 + Sync {
    move |agg: &f64| {
        let norm = if kind == BasisKind::Lp2 {
            agg.sqrt()
        } else {
            *agg
        };
        norm.powf(p)
    }
}

/// `power / denom^(k·[E ≠ ℓ₂] + 2·[E = ℓ₂])` folded into the exponent `k`.
fn unscale(power: i128, denom: i128, k: u32) -> BigRational {
    if let Some(scale) = denom.checked_pow(k) {
        let g = power.gcd(&scale);
        if g != 0 {
            return BigRational::new_raw(BigInt::from(power / g), BigInt::from(scale / g));
        }
    }
    let d = BigInt::from(denom);
    let mut scale = BigInt::one();
    for _ in 0..k {
        scale *= &d;
    }
    BigRational::new(BigInt::from(power), scale)
}

/// `‖x‖_{E,0,θ}`: the largest block norm over single segments.
pub fn baire_norm_zero(x: &BaireVector, kind: BasisKind) -> NormValue {
    baire_norm_zero_report(x, kind).value
}

pub fn baire_norm_zero_report(x: &BaireVector, kind: BasisKind) -> NormReport {
    let idx = &x.support;
    let agg = dp::pair_aggregates(idx, &idx.coef, kind);
    let mut best = BigRational::zero();
    let mut at: Option<(usize, usize)> = None;
    for v in 0..idx.len() {
        // Deepest ancestor first so ties keep the shortest segment.
        for j in (0..=idx.depth[v] as usize).rev() {
            let value = &agg[idx.pair_offset(v, j)];
            if *value > best {
                best = value.clone();
                at = Some((v, j));
            }
        }
    }
    let inv = if kind == BasisKind::Lp2 { 2 } else { 1 };
    NormReport {
        value: NormValue::exact(best, inv),
        witness: at.map(|(v, j)| vec![idx.segment(v, j)]).unwrap_or_default(),
    }
}

/// Brute-force `‖x‖_{E,p,θ}` over every incomparable family, for closures of at most
/// [`ORACLE_NODE_LIMIT`] nodes.
pub fn baire_norm_oracle(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
) -> Result<NormValue, BaireError> {
    oracle_eval(x, kind, p, ORACLE_NODE_LIMIT, false).map(|r| r.value)
}

pub fn baire_norm_oracle_report(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
    limit: usize,
) -> Result<NormReport, BaireError> {
    oracle_eval(x, kind, p, limit, true)
}

fn oracle_eval(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
    limit: usize,
    want_witness: bool,
) -> Result<NormReport, BaireError> {
    let idx = &x.support;
    if idx.len() > limit {
        return Err(BaireError::TooLargeForOracle {
            nodes: idx.len(),
            limit,
        });
    }
    let Some(p_value) = p.finite() else {
        return Ok(oracle_zero(x, kind));
    };
    Ok(match eval_mode(kind, p) {
        EvalMode::Exact { p: k } => {
            if let Some(scaled) = &idx.scaled {
                let (v, w) = oracle::enumerate(
                    idx,
                    &scaled.numer,
                    kind,
                    exact_power::<i128>(kind, k),
                    want_witness,
                );
                NormReport {
                    value: NormValue::exact(unscale(v, scaled.denom, k), k),
                    witness: w,
                }
            } else {
                let (v, w) = oracle::enumerate(
                    idx,
                    &idx.coef,
                    kind,
                    exact_power::<BigRational>(kind, k),
                    want_witness,
                );
                NormReport {
                    value: NormValue::exact(v, k),
                    witness: w,
                }
            }
        }
        EvalMode::Approx => {
            let coef: Vec<f64> = idx.coef.iter().map(to_f64).collect();
            let pf = to_f64(p_value);
            let (v, w) = oracle::enumerate(idx, &coef, kind, approx_power(kind, pf), want_witness);
            NormReport {
                value: NormValue::Approx(v.powf(1.0 / pf)),
                witness: w,
            }
        }
    })
}

/// Single-segment enumeration through the public block evaluation.
fn oracle_zero(x: &BaireVector, kind: BasisKind) -> NormReport {
    let idx = &x.support;
    let mut best = NormValue::zero();
    let mut witness = Vec::new();
    for v in 0..idx.len() {
        for j in (0..=idx.depth[v] as usize).rev() {
            let seg = idx.segment(v, j);
            let block = segment_vector(x, &seg).expect("closure segments lie in the tree");
            let value = basis_norm(kind, &block);
            if value.compare(&best).is_gt() {
                best = value;
                witness = vec![seg];
            }
        }
    }
    if witness.is_empty() && kind == BasisKind::Lp2 {
        best = NormValue::exact(BigRational::zero(), 2);
    }
    NormReport {
        value: best,
        witness,
    }
}
