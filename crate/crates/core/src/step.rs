//! Dyadic step functions on [0, 1) with exact L₁ norms, and δ-Rademacher bushes.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checkers::{Verdict, Witness};
use crate::rational::{self, format_rational};

/// Largest resolution accepted anywhere.
pub const MAX_RESOLUTION: u32 = 48;
/// Largest resolution accepted in the dense interchange format.
pub const MAX_DENSE_RESOLUTION: u32 = 20;
/// Bounds on the level count of [`rademacher_bush`].
pub const MAX_BUSH_LEVEL: u32 = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    #[error("resolution {0} exceeds the supported maximum")]
    ResolutionTooLarge(u32),
    #[error("resolution {resolution} needs {expected} values, got {got}")]
    WrongLength {
        resolution: u32,
        expected: u64,
        got: usize,
    },
    #[error("K = {0} is outside 1..=16")]
    KOutOfRange(u32),
    #[error("bush level {level} has {got} functions, expected {expected}")]
    BushShape {
        level: usize,
        expected: u64,
        got: usize,
    },
    #[error("a bush needs at least levels 0 and 1")]
    BushTooShort,
}

/// A function constant on each cell `[i·2^{-r}, (i+1)·2^{-r})`.
/// Only nonzero cells are stored.
#[derive(Clone)]
pub struct DyadicStep {
    resolution: u32,
    cells: BTreeMap<u64, BigRational>,
}

impl fmt::Debug for DyadicStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DyadicStep")
            .field("resolution", &self.resolution)
            .field("cells", &self.cells)
            .finish()
    }
}

/// Equality as functions: resolutions are refined to a common one first.
impl PartialEq for DyadicStep {
    fn eq(&self, other: &Self) -> bool {
        let r = self.resolution.max(other.resolution);
        self.refine(r).cells == other.refine(r).cells
    }
}

impl DyadicStep {
    /// From the dense list of `2^resolution` cell values.
    pub fn new(resolution: u32, values: Vec<BigRational>) -> Result<Self, StepError> {
        if resolution > MAX_DENSE_RESOLUTION {
            return Err(StepError::ResolutionTooLarge(resolution));
        }
        let expected = 1u64 << resolution;
        if values.len() as u64 != expected {
            return Err(StepError::WrongLength {
                resolution,
                expected,
                got: values.len(),
            });
        }
        let cells = values
            .into_iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, v)| (i as u64, v))
            .collect();
        Ok(DyadicStep { resolution, cells })
    }

    /// From `(cell, value)` pairs; later duplicates overwrite earlier ones.
    pub fn from_cells<I>(resolution: u32, cells: I) -> Result<Self, StepError>
    where
        I: IntoIterator<Item = (u64, BigRational)>,
    {
        if resolution > MAX_RESOLUTION {
            return Err(StepError::ResolutionTooLarge(resolution));
        }
        let size = 1u64 << resolution;
        let mut map = BTreeMap::new();
        for (i, v) in cells {
            if i >= size {
                return Err(StepError::WrongLength {
                    resolution,
                    expected: size,
                    got: i as usize + 1,
                });
            }
            if v.is_zero() {
                map.remove(&i);
            } else {
                map.insert(i, v);
            }
        }
        Ok(DyadicStep {
            resolution,
            cells: map,
        })
    }

    pub fn zero() -> Self {
        DyadicStep {
            resolution: 0,
            cells: BTreeMap::new(),
        }
    }

    pub fn constant(c: BigRational) -> Self {
        DyadicStep::from_cells(0, [(0, c)]).expect("resolution 0")
    }

    /// `height · 1_{[i·2^{-k}, (i+1)·2^{-k})}` with a 0-based cell index `i`.
    pub fn cell_indicator(k: u32, i: u64, height: BigRational) -> Result<Self, StepError> {
        DyadicStep::from_cells(k, [(i, height)])
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn is_zero(&self) -> bool {
        self.cells.is_empty()
    }

    /// Nonzero cells at the stored resolution.
    pub fn cells(&self) -> &BTreeMap<u64, BigRational> {
        &self.cells
    }

    /// Dense list of cell values; `None` above [`MAX_DENSE_RESOLUTION`].
    pub fn values(&self) -> Option<Vec<BigRational>> {
        if self.resolution > MAX_DENSE_RESOLUTION {
            return None;
        }
        let mut out = vec![BigRational::zero(); 1usize << self.resolution];
        for (&i, v) in &self.cells {
            out[i as usize] = v.clone();
        }
        Some(out)
    }

    /// Value on the cell with 0-based index `i` at this resolution.
    pub fn value_at(&self, i: u64) -> BigRational {
        self.cells
            .get(&i)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    /// The same function at a finer resolution `r ≥ self.resolution`.
    pub fn refine(&self, r: u32) -> DyadicStep {
        assert!(r >= self.resolution, "refine cannot coarsen");
        if r == self.resolution {
            return self.clone();
        }
        let factor = 1u64 << (r - self.resolution);
        let mut cells = BTreeMap::new();
        for (&i, v) in &self.cells {
            for j in 0..factor {
                cells.insert(i * factor + j, v.clone());
            }
        }
        DyadicStep {
            resolution: r,
            cells,
        }
    }
}

/// `a·f + b·g`, at the larger of the two resolutions.
pub fn step_combine(
    a: &BigRational,
    f: &DyadicStep,
    b: &BigRational,
    g: &DyadicStep,
) -> DyadicStep {
    let r = f.resolution.max(g.resolution);
    let (f, g) = (f.refine(r), g.refine(r));
    let mut cells: BTreeMap<u64, BigRational> = BTreeMap::new();
    if !a.is_zero() {
        for (&i, v) in &f.cells {
            cells.insert(i, a * v);
        }
    }
    if !b.is_zero() {
        for (&i, v) in &g.cells {
            *cells.entry(i).or_insert_with(BigRational::zero) += b * v;
        }
    }
    cells.retain(|_, v| !v.is_zero());
    DyadicStep {
        resolution: r,
        cells,
    }
}

/// `∫|f| = Σ |vᵢ| · 2^{-r}`.
pub fn l1_norm(f: &DyadicStep) -> BigRational {
    let total: BigRational = f.cells.values().map(|v| v.abs()).sum();
    total / BigRational::from_integer(BigInt::one() << f.resolution)
}

/// Levels `0..=K` of a dyadic-indexed family; level `k` holds `2^k` functions.
#[derive(Debug, Clone, PartialEq)]
pub struct BushLevels {
    levels: Vec<Vec<DyadicStep>>,
}

impl BushLevels {
    pub fn new(levels: Vec<Vec<DyadicStep>>) -> Result<Self, StepError> {
        if levels.len() < 2 {
            return Err(StepError::BushTooShort);
        }
        if levels.len() - 1 > MAX_RESOLUTION as usize {
            return Err(StepError::KOutOfRange(levels.len() as u32 - 1));
        }
        for (k, level) in levels.iter().enumerate() {
            let expected = 1u64 << k;
            if level.len() as u64 != expected {
                return Err(StepError::BushShape {
                    level: k,
                    expected,
                    got: level.len(),
                });
            }
        }
        Ok(BushLevels { levels })
    }

    /// The top level index `K`.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn levels(&self) -> &[Vec<DyadicStep>] {
        &self.levels
    }

    /// `x_k^l` with the 1-based `l`.
    pub fn get(&self, k: usize, l: usize) -> &DyadicStep {
        &self.levels[k][l - 1]
    }

    pub fn with_replaced(&self, k: usize, l: usize, f: DyadicStep) -> BushLevels {
        let mut levels = self.levels.clone();
        levels[k][l - 1] = f;
        BushLevels { levels }
    }
}

/// `x_k^l = 2^k · 1_{[(l-1)2^{-k}, l·2^{-k})}` for `k ≤ K`, `l = 1..2^k`.
pub fn rademacher_bush(k_max: u32) -> Result<BushLevels, StepError> {
    if !(1..=MAX_BUSH_LEVEL).contains(&k_max) {
        return Err(StepError::KOutOfRange(k_max));
    }
    let levels = (0..=k_max)
        .map(|k| {
            let height = BigRational::from_integer(BigInt::one() << k);
            (0..1u64 << k)
                .map(|i| DyadicStep::cell_indicator(k, i, height.clone()).expect("cell in range"))
                .collect()
        })
        .collect();
    BushLevels::new(levels)
}

/// `‖Σ_l (x_k^{2l-1} − x_k^{2l})‖₁` for `k ≥ 1`.
pub fn separation(bush: &BushLevels, k: usize) -> BigRational {
    let level = &bush.levels[k];
    let r = level.iter().map(DyadicStep::resolution).max().unwrap_or(0);
    let mut cells: BTreeMap<u64, BigRational> = BTreeMap::new();
    for (pos, f) in level.iter().enumerate() {
        let f = f.refine(r);
        let plus = pos % 2 == 0;
        for (&i, v) in &f.cells {
            let slot = cells.entry(i).or_insert_with(BigRational::zero);
            if plus {
                *slot += v;
            } else {
                *slot -= v;
            }
        }
    }
    cells.retain(|_, v| !v.is_zero());
    l1_norm(&DyadicStep {
        resolution: r,
        cells,
    })
}

/// Which bush condition a violation concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BushCondition {
    /// `x_{k-1}^l = (x_k^{2l-1} + x_k^{2l}) / 2`.
    Midpoint,
    /// `‖Σ_l (x_k^{2l-1} − x_k^{2l})‖ > 2^k δ`.
    Separation,
    /// `‖x_k^l‖ ≤ bound`.
    Bound,
}

/// Checks the midpoint identity everywhere, then separation at every `k ≥ 1`,
/// then the bound, reporting the first failure in that order.
pub fn bush_check(bush: &BushLevels, delta: &BigRational, bound: &BigRational) -> Verdict {
    let half = rational::ratio(1, 2);
    let k_max = bush.levels.len() - 1;
    for k in 1..=k_max {
        for l in 1..=bush.levels[k - 1].len() {
            let mid = step_combine(&half, bush.get(k, 2 * l - 1), &half, bush.get(k, 2 * l));
            let parent = bush.get(k - 1, l);
            if mid != *parent {
                let gap = l1_norm(&step_combine(
                    &BigRational::one(),
                    parent,
                    &-BigRational::one(),
                    &mid,
                ));
                return Verdict::violated(
                    Witness::Bush {
                        condition: BushCondition::Midpoint,
                        k: k - 1,
                        l: Some(l),
                        value: format_rational(&gap),
                        threshold: "0".into(),
                    },
                    tested(k_max),
                );
            }
        }
    }
    for k in 1..=k_max {
        let value = separation(bush, k);
        let threshold = delta * BigRational::from_integer(BigInt::one() << k);
        if value <= threshold {
            return Verdict::violated(
                Witness::Bush {
                    condition: BushCondition::Separation,
                    k,
                    l: None,
                    value: format_rational(&value),
                    threshold: format_rational(&threshold),
                },
                tested(k_max),
            );
        }
    }
    for (k, level) in bush.levels.iter().enumerate() {
        for (pos, f) in level.iter().enumerate() {
            let norm = l1_norm(f);
            if norm > *bound {
                return Verdict::violated(
                    Witness::Bush {
                        condition: BushCondition::Bound,
                        k,
                        l: Some(pos + 1),
                        value: format_rational(&norm),
                        threshold: format_rational(bound),
                    },
                    tested(k_max),
                );
            }
        }
    }
    Verdict::pass(tested(k_max))
}

fn tested(k_max: usize) -> String {
    format!("levels 0..={k_max}: midpoint, separation, bound")
}
