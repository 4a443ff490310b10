//! Trained models bundled with the schema needed to read and explain them,
//! and their JSON form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::dataset::{Attribute, ColumnSource, Encoding, Label, Schema};
use crate::ensemble::{predict_bp, prune_top_k, VoteEnsemble, WeightedRuleSet};
use crate::error::{check_len, Error, Result};
use crate::findrs::LearnerState;
use crate::rule::{Rule, RuleSet, Value};

/// A rule set with the sizes of the buckets that produced its rules.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleModel {
    pub rules: RuleSet,
    pub bucket_sizes: Vec<usize>,
}

impl RuleModel {
    pub fn from_state(state: &LearnerState) -> RuleModel {
        RuleModel {
            rules: state.rules().clone(),
            bucket_sizes: state.bucket_sizes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    FindRs(RuleModel),
    Bo {
        hypotheses: Vec<RuleModel>,
        seeds: Vec<u64>,
    },
    Bp(WeightedRuleSet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub schema: Schema,
    pub positive_class: String,
    pub tau: usize,
    pub kind: ModelKind,
}

impl Model {
    pub fn findrs(schema: Schema, positive_class: String, state: &LearnerState) -> Model {
        Model {
            schema,
            positive_class,
            tau: state.tau(),
            kind: ModelKind::FindRs(RuleModel::from_state(state)),
        }
    }

    pub fn bo(schema: Schema, positive_class: String, tau: usize, e: &VoteEnsemble) -> Model {
        Model {
            schema,
            positive_class,
            tau,
            kind: ModelKind::Bo {
                hypotheses: e.hypotheses.iter().map(RuleModel::from_state).collect(),
                seeds: e.seeds.clone(),
            },
        }
    }

    pub fn bp(schema: Schema, positive_class: String, tau: usize, w: WeightedRuleSet) -> Model {
        Model {
            schema,
            positive_class,
            tau,
            kind: ModelKind::Bp(w),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ModelKind::FindRs(_) => "findrs",
            ModelKind::Bo { .. } => "bo",
            ModelKind::Bp(_) => "bp",
        }
    }

    /// Rules in display order with their weights, when weighted. For vote
    /// ensembles every hypothesis is listed in turn.
    pub fn display_rules(&self) -> Vec<(Option<u64>, &Rule)> {
        match &self.kind {
            ModelKind::FindRs(m) => m.rules.rules().iter().map(|r| (None, r)).collect(),
            ModelKind::Bo { hypotheses, .. } => hypotheses
                .iter()
                .flat_map(|h| h.rules.rules())
                .map(|r| (None, r))
                .collect(),
            ModelKind::Bp(w) => w.ranked().map(|(r, a)| (Some(a), r)).collect(),
        }
    }

    /// Predicts from raw text cells, one per original attribute. Values not
    /// seen in training satisfy only unconstrained positions.
    pub fn predict_cells(&self, cells: &[&str]) -> Result<Label> {
        let av = self.schema.intern_cells(cells)?;
        let x = self.schema.encode_instance(&av)?;
        self.predict(&x)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&self.to_wire())?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let wire: Wire = serde_json::from_str(text)?;
        Model::from_wire(wire)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_owned()),
            _ => Error::Io(e),
        })?;
        Model::from_json(&text)
    }

    fn rule_values(&self, rules: &[Rule]) -> Vec<Vec<Option<String>>> {
        rules.iter().map(|r| self.schema.rule_to_values(r)).collect()
    }

    fn to_wire(&self) -> Wire {
        let header = Header {
            encoding: self.schema.encoding,
            attributes: self.schema.attributes.clone(),
            attribute_map: self.schema.columns.clone(),
            positive_class: self.positive_class.clone(),
            tau: self.tau,
        };
        match &self.kind {
            ModelKind::FindRs(m) => Wire::Findrs {
                header,
                rules: self.rule_values(m.rules.rules()),
                bucket_sizes: m.bucket_sizes.clone(),
            },
            ModelKind::Bo { hypotheses, seeds } => Wire::Bo {
                header,
                t: hypotheses.len(),
                seeds: seeds.clone(),
                hypotheses: hypotheses
                    .iter()
                    .map(|h| WireRules {
                        rules: self.rule_values(h.rules.rules()),
                        bucket_sizes: h.bucket_sizes.clone(),
                    })
                    .collect(),
            },
            ModelKind::Bp(w) => Wire::Bp {
                header,
                rules: self.rule_values(w.rules()),
                alphas: w.alphas().to_vec(),
                t: w.votes(),
                k: w.active(),
                gamma_k: w.gamma(),
                order: w.ranking().to_vec(),
            },
        }
    }

    fn from_wire(wire: Wire) -> Result<Model> {
        let header = match &wire {
            Wire::Findrs { header, .. } | Wire::Bo { header, .. } | Wire::Bp { header, .. } => {
                header.clone()
            }
        };
        let schema = Schema {
            encoding: header.encoding,
            attributes: header.attributes,
            columns: header.attribute_map,
        };
        validate_schema(&schema)?;
        let parse = |rules: &[Vec<Option<String>>]| -> Result<Vec<Rule>> {
            rules.iter().map(|r| schema.rule_from_values(r)).collect()
        };
        let rule_model = |rules: &[Vec<Option<String>>], sizes: Vec<usize>| -> Result<RuleModel> {
            let rules = RuleSet::new(parse(rules)?)?;
            check_len(rules.len(), sizes.len())?;
            Ok(RuleModel {
                rules,
                bucket_sizes: sizes,
            })
        };
        let kind = match &wire {
            Wire::Findrs {
                rules,
                bucket_sizes,
                ..
            } => ModelKind::FindRs(rule_model(rules, bucket_sizes.clone())?),
            Wire::Bo {
                t,
                seeds,
                hypotheses,
                ..
            } => {
                check_len(*t, hypotheses.len())?;
                check_len(*t, seeds.len())?;
                let hypotheses = hypotheses
                    .iter()
                    .map(|h| rule_model(&h.rules, h.bucket_sizes.clone()))
                    .collect::<Result<Vec<_>>>()?;
                ModelKind::Bo {
                    hypotheses,
                    seeds: seeds.clone(),
                }
            }
            Wire::Bp {
                rules,
                alphas,
                t,
                k,
                gamma_k,
                order,
                ..
            } => {
                let full = WeightedRuleSet::new(parse(rules)?, alphas.clone(), *t)?;
                let w = if full.is_empty() && *k == 0 {
                    full
                } else {
                    prune_top_k(&full, *k)?
                };
                if w.ranking() != order.as_slice() {
                    return Err(Error::InvalidArgument(
                        "rule order does not match the weights".into(),
                    ));
                }
                let g: f64 = w.gamma();
                if (g - gamma_k).abs() > 1e-9 {
                    return Err(Error::InvalidArgument(format!(
                        "gamma_K is {gamma_k} but the weights give {g}"
                    )));
                }
                ModelKind::Bp(w)
            }
        };
        Ok(Model {
            schema,
            positive_class: header.positive_class,
            tau: header.tau,
            kind,
        })
    }
}

fn validate_schema(schema: &Schema) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidArgument(msg));
    for (i, c) in schema.columns.iter().enumerate() {
        let Some(attr) = schema.attributes.get(c.attribute) else {
            return bad(format!("column {i} refers to unknown attribute {}", c.attribute));
        };
        match (schema.encoding, c.value) {
            (Encoding::Av, None) => {}
            (Encoding::Oh, Some(v)) if (v as usize) < attr.values.len() => {}
            _ => return bad(format!("column {i} does not fit the {} encoding", schema.encoding)),
        }
    }
    if schema.encoding == Encoding::Av && schema.columns.len() != schema.attributes.len() {
        return bad("attribute-value schema needs one column per attribute".into());
    }
    Ok(())
}

impl Classifier for Model {
    fn predict(&self, x: &[Value]) -> Result<Label> {
        check_len(self.schema.width(), x.len())?;
        match &self.kind {
            ModelKind::FindRs(m) => m.rules.covers(x).map(Label::from_bool),
            ModelKind::Bo { hypotheses, .. } => {
                let mut sum = 0i64;
                for h in hypotheses {
                    sum += Label::from_bool(h.rules.covers(x)?).sign();
                }
                Ok(Label::from_bool(sum > 0))
            }
            ModelKind::Bp(w) => predict_bp(w, x),
        }
    }
}

#[derive(Clone, Serialize, Deserialize)]
struct Header {
    encoding: Encoding,
    attributes: Vec<Attribute>,
    attribute_map: Vec<ColumnSource>,
    positive_class: String,
    tau: usize,
}

#[derive(Serialize, Deserialize)]
struct WireRules {
    rules: Vec<Vec<Option<String>>>,
    bucket_sizes: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Wire {
    Findrs {
        #[serde(flatten)]
        header: Header,
        rules: Vec<Vec<Option<String>>>,
        bucket_sizes: Vec<usize>,
    },
    Bo {
        #[serde(flatten)]
        header: Header,
        #[serde(rename = "T")]
        t: usize,
        seeds: Vec<u64>,
        hypotheses: Vec<WireRules>,
    },
    Bp {
        #[serde(flatten)]
        header: Header,
        rules: Vec<Vec<Option<String>>>,
        alphas: Vec<u64>,
        #[serde(rename = "T")]
        t: u64,
        #[serde(rename = "K")]
        k: usize,
        #[serde(rename = "gamma_K")]
        gamma_k: f64,
        /// Rule indices by decreasing weight.
        order: Vec<usize>,
    },
}
