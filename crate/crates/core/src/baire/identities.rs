//! Exact norm identities for vectors with special supports.

use std::cmp::Ordering;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::basis::{basis_norm, compare_f64, deleted_first, BasisKind, NormValue};
use crate::rational::{self, to_f64};
use crate::tree::{subtree_at, TreeNode};

use super::{baire_norm, BaireError, BaireVector, ExponentP};

/// Outcome of an identity check: both sides and whether they agree.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub passed: bool,
    pub lhs: NormValue,
    pub rhs: NormValue,
    pub detail: String,
}

/// A p-th power, exact when possible.
#[derive(Debug, Clone)]
enum Power {
    Exact(BigRational),
    Approx(f64),
}

impl Power {
    fn of_norm(value: &NormValue, p: &BigRational) -> Power {
        match value.pow_exact(p) {
            Some(r) => Power::Exact(r),
            None => Power::Approx(value.to_f64().powf(to_f64(p))),
        }
    }

    fn of_scalar(a: &BigRational, p: &BigRational) -> Power {
        match rational::as_small_natural(p) {
            Some(k) => Power::Exact(rational::pow(&a.abs(), k)),
            None => Power::Approx(to_f64(&a.abs()).powf(to_f64(p))),
        }
    }

    fn to_f64(&self) -> f64 {
        match self {
            Power::Exact(r) => to_f64(r),
            Power::Approx(v) => *v,
        }
    }

    fn add(&self, other: &Power) -> Power {
        match (self, other) {
            (Power::Exact(a), Power::Exact(b)) => Power::Exact(a + b),
            _ => Power::Approx(self.to_f64() + other.to_f64()),
        }
    }

    fn mul(&self, other: &Power) -> Power {
        match (self, other) {
            (Power::Exact(a), Power::Exact(b)) => Power::Exact(a * b),
            _ => Power::Approx(self.to_f64() * other.to_f64()),
        }
    }

    fn cmp(&self, other: &Power) -> Ordering {
        match (self, other) {
            (Power::Exact(a), Power::Exact(b)) => a.cmp(b),
            _ => compare_f64(self.to_f64(), other.to_f64()),
        }
    }

    fn into_value(self) -> NormValue {
        match self {
            Power::Exact(r) => NormValue::exact(r, 1),
            Power::Approx(v) => NormValue::Approx(v),
        }
    }
}

fn finite_p(p: &ExponentP) -> Result<&BigRational, BaireError> {
    p.finite().ok_or(BaireError::ZeroExponent)
}

fn first_comparable_pair(x: &BaireVector, y: &BaireVector) -> Option<(TreeNode, TreeNode)> {
    for s in x.support() {
        for t in y.support() {
            if s.comparable(t) {
                return Some((s.clone(), t.clone()));
            }
        }
    }
    None
}

fn combine_all(ys: &[BaireVector], coeffs: &[BigRational]) -> Result<BaireVector, BaireError> {
    let mut acc = BaireVector::zero(ys[0].tree_arc().clone());
    let one = rational::int(1);
    for (y, a) in ys.iter().zip(coeffs) {
        acc = super::vector_combine(&one, &acc, a, y)?;
    }
    Ok(acc)
}

fn validate_family(ys: &[BaireVector], coeffs: &[BigRational]) -> Result<(), BaireError> {
    if ys.len() != coeffs.len() {
        return Err(BaireError::LengthMismatch {
            vectors: ys.len(),
            coefficients: coeffs.len(),
        });
    }
    if let Some(first) = ys.first() {
        if ys.iter().any(|y| !y.same_tree(first)) {
            return Err(BaireError::TreeMismatch);
        }
    }
    Ok(())
}

/// `‖Σ aᵢyᵢ‖^p = Σ |aᵢ|^p ‖yᵢ‖^p` for vectors with pairwise completely incomparable supports.
pub fn check_incomparable_additivity(
    ys: &[BaireVector],
    coeffs: &[BigRational],
    kind: BasisKind,
    p: &ExponentP,
) -> Result<CheckReport, BaireError> {
    let pv = finite_p(p)?;
    validate_family(ys, coeffs)?;
    for i in 0..ys.len() {
        for j in i + 1..ys.len() {
            if let Some((left, right)) = first_comparable_pair(&ys[i], &ys[j]) {
                return Err(BaireError::SupportsNotIncomparable { i, j, left, right });
            }
        }
    }
    if ys.is_empty() {
        return Ok(CheckReport {
            passed: true,
            lhs: NormValue::exact(BigRational::zero(), 1),
            rhs: NormValue::exact(BigRational::zero(), 1),
            detail: "empty family".into(),
        });
    }
    let combined = combine_all(ys, coeffs)?;
    let lhs = Power::of_norm(&baire_norm(&combined, kind, p), pv);
    let mut rhs = Power::Exact(BigRational::zero());
    for (y, a) in ys.iter().zip(coeffs) {
        let term = Power::of_scalar(a, pv).mul(&Power::of_norm(&baire_norm(y, kind, p), pv));
        rhs = rhs.add(&term);
    }
    Ok(report(lhs, rhs, format!("{} vectors", ys.len())))
}

fn report(lhs: Power, rhs: Power, detail: String) -> CheckReport {
    CheckReport {
        passed: lhs.cmp(&rhs) == Ordering::Equal,
        lhs: lhs.into_value(),
        rhs: rhs.into_value(),
        detail,
    }
}

/// On a chain-supported vector the Baire norm is the basis norm of the
/// depth-indexed coefficients from the root.
pub fn check_branch_isometry(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
) -> Result<CheckReport, BaireError> {
    let support: Vec<&TreeNode> = x.support().collect();
    let mut deepest = TreeNode::root();
    for s in &support {
        if s.len() > deepest.len() {
            deepest = (*s).clone();
        }
    }
    for s in &support {
        if !s.is_prefix_of(&deepest) {
            return Err(BaireError::SupportNotChain {
                left: (*s).clone(),
                right: deepest,
            });
        }
    }
    let chain: Vec<BigRational> = deepest.prefixes().map(|n| x.coeff(&n)).collect();
    let lhs = baire_norm(x, kind, p);
    let rhs = basis_norm(kind, &chain);
    Ok(CheckReport {
        passed: lhs.compare(&rhs) == Ordering::Equal,
        lhs,
        rhs,
        detail: format!("chain to {deepest}"),
    })
}

/// `‖x‖^p = Σ_λ ‖x restricted to θ_λ, read in θ(λ)‖^p` with basis `E*`, for `x(∅) = 0`.
pub fn check_root_decomposition(
    x: &BaireVector,
    kind: BasisKind,
    p: &ExponentP,
) -> Result<CheckReport, BaireError> {
    let pv = finite_p(p)?;
    if !x.coeff(&TreeNode::root()).is_zero() {
        return Err(BaireError::NonzeroRootCoefficient);
    }
    let mut lambdas: Vec<u32> = x.support().map(|s| s.entries()[0]).collect();
    lambdas.dedup();
    let lhs = Power::of_norm(&baire_norm(x, kind, p), pv);
    let starred = deleted_first(kind);
    let mut rhs = Power::Exact(BigRational::zero());
    for &lambda in &lambdas {
        let tree = Arc::new(subtree_at(x.tree(), lambda));
        let entries = x
            .coeffs()
            .iter()
            .filter(|(s, _)| s.entries()[0] == lambda)
            .map(|(s, v)| (TreeNode::from(&s.entries()[1..]), v.clone()));
        let piece = BaireVector::new(tree, entries)?;
        rhs = rhs.add(&Power::of_norm(&baire_norm(&piece, starred, p), pv));
    }
    Ok(report(lhs, rhs, format!("{} root branches", lambdas.len())))
}

/// Block window: if every `‖yᵢ‖^p ∈ (1/2, 2)` then
/// `(1/2) Σ|aᵢ|^p ≤ ‖Σ aᵢyᵢ‖^p ≤ 2 Σ|aᵢ|^p`.
/// The report's `lhs` is `‖Σ aᵢyᵢ‖^p` and `rhs` is `Σ|aᵢ|^p`.
pub fn check_block_window(
    ys: &[BaireVector],
    coeffs: &[BigRational],
    kind: BasisKind,
    p: &ExponentP,
) -> Result<CheckReport, BaireError> {
    let pv = finite_p(p)?;
    validate_family(ys, coeffs)?;
    let half = Power::Exact(rational::ratio(1, 2));
    let two = Power::Exact(rational::int(2));
    for (index, y) in ys.iter().enumerate() {
        let value = Power::of_norm(&baire_norm(y, kind, p), pv);
        if value.cmp(&half) != Ordering::Greater || value.cmp(&two) != Ordering::Less {
            return Err(BaireError::OutsideBlockWindow {
                index,
                value: value.into_value().to_string(),
            });
        }
    }
    let mut mass = Power::Exact(BigRational::zero());
    for a in coeffs {
        mass = mass.add(&Power::of_scalar(a, pv));
    }
    let lhs = if ys.is_empty() {
        Power::Exact(BigRational::zero())
    } else {
        Power::of_norm(&baire_norm(&combine_all(ys, coeffs)?, kind, p), pv)
    };
    let lower = half.mul(&mass);
    let upper = two.mul(&mass);
    let passed = lhs.cmp(&lower) != Ordering::Less && lhs.cmp(&upper) != Ordering::Greater;
    Ok(CheckReport {
        passed,
        lhs: lhs.into_value(),
        rhs: mass.into_value(),
        detail: format!("{} vectors", ys.len()),
    })
}
