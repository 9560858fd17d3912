//! JSON interchange documents for trees, vectors, families, bushes and norms.

use std::sync::Arc;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baire::{BaireError, BaireVector, ExponentP, NormReport};
use crate::basis::{BasisKind, NormValue};
use crate::checkers::{CheckError, VectorFamily};
use crate::rational;
use crate::step::{BushLevels, DyadicStep, StepError};
use crate::tree::{FiniteTree, TreeDoc, TreeError, TreeNode};

/// A document that parsed as JSON but describes an invalid object.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DocError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Baire(#[from] BaireError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("vector document has no tree and none was supplied")]
    MissingTree,
    #[error("vector document tree differs from the supplied tree")]
    TreeConflict,
    #[error("bush declares K = {declared} but has {levels} levels")]
    BushDepth { declared: u32, levels: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    pub node: TreeNode,
    #[serde(with = "rational::serde_str")]
    pub coef: BigRational,
}

/// `{"tree": {...}, "entries": [{"node": [...], "coef": "p/q"}, ...]}`.
/// The tree may be omitted when it is supplied separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeDoc>,
    pub entries: Vec<EntryDoc>,
}

fn entries_of(x: &BaireVector) -> Vec<EntryDoc> {
    let mut entries: Vec<EntryDoc> = x
        .coeffs()
        .iter()
        .map(|(node, coef)| EntryDoc {
            node: node.clone(),
            coef: coef.clone(),
        })
        .collect();
    entries.sort_by(|a, b| a.node.cmp_length_lex(&b.node));
    entries
}

fn vector_from_entries(
    tree: &Arc<FiniteTree>,
    entries: Vec<EntryDoc>,
) -> Result<BaireVector, DocError> {
    Ok(BaireVector::new(
        tree.clone(),
        entries.into_iter().map(|e| (e.node, e.coef)),
    )?)
}

impl VectorDoc {
    pub fn from_vector(x: &BaireVector) -> Self {
        VectorDoc {
            tree: Some(TreeDoc::from(x.tree())),
            entries: entries_of(x),
        }
    }

    pub fn into_vector(self) -> Result<BaireVector, DocError> {
        self.into_vector_on(None)
    }

    /// Builds the vector on `tree` if given, else on the embedded tree.
    /// When both are present they must agree.
    pub fn into_vector_on(self, tree: Option<Arc<FiniteTree>>) -> Result<BaireVector, DocError> {
        let embedded = self.tree.map(FiniteTree::try_from).transpose()?;
        let tree = match (tree, embedded) {
            (Some(t), Some(e)) if *t != e => return Err(DocError::TreeConflict),
            (Some(t), _) => t,
            (None, Some(e)) => Arc::new(e),
            (None, None) => return Err(DocError::MissingTree),
        };
        vector_from_entries(&tree, self.entries)
    }
}

/// `{"resolution": r, "values": ["p/q", ...]}` with `2^r` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepDoc {
    pub resolution: u32,
    #[serde(with = "rational::serde_str_vec")]
    pub values: Vec<BigRational>,
}

impl StepDoc {
    pub fn from_step(f: &DyadicStep) -> Option<Self> {
        Some(StepDoc {
            resolution: f.resolution(),
            values: f.values()?,
        })
    }

    pub fn into_step(self) -> Result<DyadicStep, DocError> {
        Ok(DyadicStep::new(self.resolution, self.values)?)
    }
}

/// `{"K": k, "levels": [[step, ...], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BushDoc {
    #[serde(rename = "K")]
    pub k: u32,
    pub levels: Vec<Vec<StepDoc>>,
}

impl BushDoc {
    pub fn from_bush(bush: &BushLevels) -> Option<Self> {
        let levels = bush
            .levels()
            .iter()
            .map(|level| {
                level
                    .iter()
                    .map(StepDoc::from_step)
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(BushDoc {
            k: bush.depth(),
            levels,
        })
    }

    pub fn into_bush(self) -> Result<BushLevels, DocError> {
        if self.levels.len() != self.k as usize + 1 {
            return Err(DocError::BushDepth {
                declared: self.k,
                levels: self.levels.len(),
            });
        }
        let levels = self
            .levels
            .into_iter()
            .map(|level| {
                level
                    .into_iter()
                    .map(StepDoc::into_step)
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BushLevels::new(levels)?)
    }
}

/// `{"space": "baire", "tree", "basis", "p", "vectors": [[entry, ...], ...]}`
/// or `{"space": "l1-step", "vectors": [step, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", deny_unknown_fields)]
pub enum FamilyDoc {
    #[serde(rename = "baire")]
    Baire {
        tree: TreeDoc,
        basis: BasisKind,
        p: ExponentP,
        vectors: Vec<Vec<EntryDoc>>,
    },
    #[serde(rename = "l1-step")]
    Step { vectors: Vec<StepDoc> },
}

impl FamilyDoc {
    pub fn from_family(family: &VectorFamily) -> Option<Self> {
        Some(match family {
            VectorFamily::Baire { vectors, kind, p } => FamilyDoc::Baire {
                tree: TreeDoc::from(vectors[0].tree()),
                basis: *kind,
                p: p.clone(),
                vectors: vectors.iter().map(entries_of).collect(),
            },
            VectorFamily::Step { vectors } => FamilyDoc::Step {
                vectors: vectors
                    .iter()
                    .map(StepDoc::from_step)
                    .collect::<Option<Vec<_>>>()?,
            },
        })
    }

    pub fn into_family(self) -> Result<VectorFamily, DocError> {
        match self {
            FamilyDoc::Baire {
                tree,
                basis,
                p,
                vectors,
            } => {
                let tree = Arc::new(FiniteTree::try_from(tree)?);
                let vectors = vectors
                    .into_iter()
                    .map(|entries| vector_from_entries(&tree, entries))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(VectorFamily::baire(vectors, basis, p)?)
            }
            FamilyDoc::Step { vectors } => {
                let vectors = vectors
                    .into_iter()
                    .map(StepDoc::into_step)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(VectorFamily::step(vectors)?)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentDoc {
    pub min: TreeNode,
    pub max: TreeNode,
}

/// `{"exact": {...} | null, "approx": number, "witness": [{"min", "max"}, ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormDoc {
    #[serde(flatten)]
    pub value: NormValue,
    pub witness: Vec<SegmentDoc>,
}

impl From<&NormReport> for NormDoc {
    fn from(report: &NormReport) -> Self {
        NormDoc {
            value: report.value.clone(),
            witness: report
                .witness
                .iter()
                .map(|s| SegmentDoc {
                    min: s.min_node().clone(),
                    max: s.max_node().clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::step::rademacher_bush;

    #[test]
    fn vector_round_trip() {
        let text = r#"{"tree":{"nodes":[[],[0],[1]]},"entries":[{"node":[1],"coef":"1"},{"node":[0],"coef":"3/4"}]}"#;
        let doc: VectorDoc = serde_json::from_str(text).unwrap();
        let x = doc.into_vector().unwrap();
        assert_eq!(x.coeff(&TreeNode::new(vec![0])), ratio(3, 4));
        let again = serde_json::to_string(&VectorDoc::from_vector(&x)).unwrap();
        assert_eq!(
            again,
            r#"{"tree":{"nodes":[[],[0],[1]]},"entries":[{"node":[0],"coef":"3/4"},{"node":[1],"coef":"1"}]}"#
        );
    }

    #[test]
    fn invalid_documents() {
        let bad_coef = r#"{"tree":{"nodes":[[]]},"entries":[{"node":[],"coef":"0.5"}]}"#;
        assert!(serde_json::from_str::<VectorDoc>(bad_coef).is_err());
        let unknown = r#"{"nodes":[[]],"extra":1}"#;
        assert!(serde_json::from_str::<TreeDoc>(unknown).is_err());
        let outside: VectorDoc =
            serde_json::from_str(r#"{"tree":{"nodes":[[]]},"entries":[{"node":[2],"coef":"1"}]}"#)
                .unwrap();
        assert!(matches!(
            outside.into_vector(),
            Err(DocError::Baire(BaireError::NodeNotInTree(_)))
        ));
    }

    #[test]
    fn bush_round_trip() {
        let bush = rademacher_bush(2).unwrap();
        let doc = BushDoc::from_bush(&bush).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.starts_with(r#"{"K":2,"levels":[[{"resolution":0,"values":["1"]}]"#));
        let parsed: BushDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed.into_bush().unwrap(), bush);
        let wrong = BushDoc { k: 3, ..doc };
        assert!(matches!(wrong.into_bush(), Err(DocError::BushDepth { .. })));
    }

    #[test]
    fn family_round_trip() {
        let fam = crate::checkers::delta_family(3, BasisKind::C0, ExponentP::Zero).unwrap();
        let doc = FamilyDoc::from_family(&fam).unwrap();
        let text = serde_json::to_string(&doc).unwrap();
        assert!(text.starts_with(r#"{"space":"baire","#));
        let back: FamilyDoc = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_family().unwrap(), fam);

        let step = r#"{"space":"l1-step","vectors":[{"resolution":1,"values":["1","-1"]}]}"#;
        let fam = serde_json::from_str::<FamilyDoc>(step)
            .unwrap()
            .into_family()
            .unwrap();
        assert_eq!(fam.norm_at(0), NormValue::exact(int(1), 1));
    }

    #[test]
    fn norm_doc_shape() {
        let report = NormReport {
            value: NormValue::exact(ratio(25, 16), 2),
            witness: vec![],
        };
        let json = serde_json::to_value(NormDoc::from(&report)).unwrap();
        assert_eq!(json["exact"]["power_base"], "25/16");
        assert_eq!(json["exact"]["inv_exp"], "2");
        assert_eq!(json["approx"], 1.25);
        let approx = NormDoc {
            value: NormValue::Approx(0.5),
            witness: vec![],
        };
        assert!(serde_json::to_value(approx).unwrap()["exact"].is_null());
    }
}
