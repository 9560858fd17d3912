//! Ingredient bases (ℓ₁, ℓ₂, c₀) and norm values.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, to_f64};

/// Tolerance for every comparison involving an approximate value.
pub const TOLERANCE: f64 = 1e-9;

/// The standard basis of ℓ₁, ℓ₂ or c₀. All three are normalized,
/// 1-unconditional and 1-symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BasisKind {
    #[serde(rename = "l1")]
    Lp1,
    #[serde(rename = "l2")]
    Lp2,
    #[serde(rename = "c0")]
    C0,
}

impl BasisKind {
    pub const ALL: [BasisKind; 3] = [BasisKind::Lp1, BasisKind::Lp2, BasisKind::C0];

    pub fn tag(self) -> &'static str {
        match self {
            BasisKind::Lp1 => "l1",
            BasisKind::Lp2 => "l2",
            BasisKind::C0 => "c0",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for BasisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "l1" => Ok(BasisKind::Lp1),
            "l2" => Ok(BasisKind::Lp2),
            "c0" => Ok(BasisKind::C0),
            other => Err(format!("unknown basis {other:?}, expected l1 | l2 | c0")),
        }
    }
}

/// A norm value, either exactly as `power_base^(1/inverse_exponent)` or as a float.
#[derive(Debug, Clone, PartialEq)]
pub enum NormValue {
    Exact {
        power_base: BigRational,
        inverse_exponent: BigRational,
    },
    Approx(f64),
}

impl NormValue {
    pub fn exact(power_base: BigRational, inverse_exponent: u32) -> Self {
        NormValue::Exact {
            power_base,
            inverse_exponent: rational::int(inverse_exponent.into()),
        }
    }

    pub fn zero() -> Self {
        NormValue::exact(BigRational::zero(), 1)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, NormValue::Exact { .. })
    }

    pub fn power_base(&self) -> Option<&BigRational> {
        match self {
            NormValue::Exact { power_base, .. } => Some(power_base),
            NormValue::Approx(_) => None,
        }
    }

    /// Integer inverse exponent of an exact value.
    fn integer_exponent(&self) -> Option<u32> {
        match self {
            NormValue::Exact {
                inverse_exponent, ..
            } => rational::as_small_natural(inverse_exponent),
            NormValue::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            NormValue::Exact {
                power_base,
                inverse_exponent,
            } => {
                let base = to_f64(power_base);
                if inverse_exponent.is_one() {
                    base
                } else if *inverse_exponent == rational::int(2) {
                    base.sqrt()
                } else {
                    base.powf(1.0 / to_f64(inverse_exponent))
                }
            }
            NormValue::Approx(v) => *v,
        }
    }

    /// `value^p` exactly, when `p / inverse_exponent` is a natural number.
    pub fn pow_exact(&self, p: &BigRational) -> Option<BigRational> {
        let NormValue::Exact {
            power_base,
            inverse_exponent,
        } = self
        else {
            return None;
        };
        let ratio = p / inverse_exponent;
        let k = rational::as_small_natural(&ratio)?;
        Some(rational::pow(power_base, k))
    }

    /// The exact value as a rational, when it is one.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.pow_exact(&BigRational::one())
    }

    /// Exact when both sides have integer inverse exponents, tolerant otherwise.
    pub fn compare(&self, other: &NormValue) -> Ordering {
        if let (Some(p), Some(q)) = (self.integer_exponent(), other.integer_exponent()) {
            if p > 0 && q > 0 {
                // a^(1/p) vs b^(1/q)  ⇔  a^q vs b^p, both sides non-negative.
                let lhs = rational::pow(self.power_base().expect("exact"), q);
                let rhs = rational::pow(other.power_base().expect("exact"), p);
                return lhs.cmp(&rhs);
            }
        }
        compare_f64(self.to_f64(), other.to_f64())
    }

    pub fn compare_rational(&self, r: &BigRational) -> Ordering {
        if r.is_negative() {
            return Ordering::Greater;
        }
        self.compare(&NormValue::exact(r.clone(), 1))
    }

    /// Multiplies the value by `|q|`.
    pub fn scale(&self, q: &BigRational) -> NormValue {
        match self {
            NormValue::Exact {
                power_base,
                inverse_exponent,
            } => match rational::as_small_natural(inverse_exponent) {
                Some(k) => NormValue::Exact {
                    power_base: power_base * rational::pow(&q.abs(), k),
                    inverse_exponent: inverse_exponent.clone(),
                },
                None => NormValue::Approx(self.to_f64() * to_f64(&q.abs())),
            },
            NormValue::Approx(v) => NormValue::Approx(v * to_f64(&q.abs())),
        }
    }
}

impl fmt::Display for NormValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormValue::Exact {
                power_base,
                inverse_exponent,
            } if inverse_exponent.is_one() => write!(f, "{power_base}"),
            NormValue::Exact {
                power_base,
                inverse_exponent,
            } => write!(f, "({power_base})^(1/{inverse_exponent})"),
            NormValue::Approx(v) => write!(f, "≈{v}"),
        }
    }
}

/// `{"exact": {"power_base", "inv_exp"} | null, "approx": number}`.
impl Serialize for NormValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("approx", &self.to_f64())?;
        match self {
            NormValue::Exact {
                power_base,
                inverse_exponent,
            } => {
                let mut exact = std::collections::BTreeMap::new();
                exact.insert("inv_exp", rational::format_rational(inverse_exponent));
                exact.insert("power_base", rational::format_rational(power_base));
                map.serialize_entry("exact", &exact)?;
            }
            NormValue::Approx(_) => map.serialize_entry("exact", &Option::<()>::None)?,
        }
        map.end()
    }
}

/// Tolerant float comparison: within `TOLERANCE` (relative above 1) counts as equal.
pub fn compare_f64(a: f64, b: f64) -> Ordering {
    let scale = 1f64.max(a.abs()).max(b.abs());
    if (a - b).abs() <= TOLERANCE * scale {
        Ordering::Equal
    } else if a < b {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

/// `‖Σ aᵢ eᵢ‖_E` for a finite coefficient list.
pub fn basis_norm(kind: BasisKind, coeffs: &[BigRational]) -> NormValue {
    match kind {
        BasisKind::Lp1 => NormValue::exact(coeffs.iter().map(|a| a.abs()).sum(), 1),
        BasisKind::Lp2 => NormValue::exact(coeffs.iter().map(|a| a * a).sum(), 2),
        BasisKind::C0 => NormValue::exact(
            coeffs
                .iter()
                .map(|a| a.abs())
                .max()
                .unwrap_or_else(BigRational::zero),
            1,
        ),
    }
}

/// `E*`, the basis with its first vector deleted. For the three symmetric
/// bases this is isometrically the same basis.
pub fn deleted_first(kind: BasisKind) -> BasisKind {
    kind
}
