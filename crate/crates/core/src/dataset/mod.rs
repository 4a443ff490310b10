//! Tabular ingestion, labelling, encoding and splitting.

mod discretize;
mod encode;
mod manifest;
mod split;
mod table;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::rule::{Constraint, Rule, Value, UNSEEN};

pub use discretize::{assign_bin, discretize, fit_edges, BinStrategy, Binning};
pub use encode::encode;
pub use manifest::{BinFit, Discretize, Manifest, MOST_FREQUENT};
pub use split::{split, split_indices, SplitSpec};
pub use table::{load_csv, load_csv_with, ColumnData, CsvOptions, RawTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// Attribute-value: one column per attribute, native categorical values.
    #[default]
    Av,
    /// One-hot: one binary column per (attribute, value) pair.
    Oh,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Av => "av",
            Encoding::Oh => "oh",
        })
    }
}

impl std::str::FromStr for Encoding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "av" => Ok(Encoding::Av),
            "oh" => Ok(Encoding::Oh),
            _ => Err(Error::InvalidArgument(format!("unknown encoding `{s}`"))),
        }
    }
}

/// Binary class label, `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_bool(positive: bool) -> Label {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn sign(self) -> i64 {
        match self {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Positive => "+",
            Label::Negative => "-",
        })
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_i8(self.sign() as i8)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(serde::de::Error::custom(format!("label must be 1 or -1, got {other}"))),
        }
    }
}

/// An original (attribute-value) attribute and its finite domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
    /// Bin edges when the attribute was produced by discretizing a numeric
    /// column; raw numbers are mapped through them at prediction time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bin_edges: Option<Vec<f64>>,
}

impl Attribute {
    pub fn index_of(&self, value: &str) -> Option<Value> {
        self.values.iter().position(|v| v == value).map(|i| i as Value)
    }
}

/// One column of an encoded dataset and where it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSource {
    /// Index of the original attribute.
    pub attribute: usize,
    /// For one-hot columns, the original value the column indicates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
}

/// Column layout of an encoded dataset plus the original attribute domains
/// needed to map back and forth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub encoding: Encoding,
    pub attributes: Vec<Attribute>,
    pub columns: Vec<ColumnSource>,
}

const BINARY: [&str; 2] = ["0", "1"];

impl Schema {
    pub fn attribute_value(attributes: Vec<Attribute>) -> Schema {
        let columns = (0..attributes.len())
            .map(|attribute| ColumnSource {
                attribute,
                value: None,
            })
            .collect();
        Schema {
            encoding: Encoding::Av,
            attributes,
            columns,
        }
    }

    /// Number of encoded columns (the instance arity).
    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn domain_size(&self, column: usize) -> usize {
        match self.encoding {
            Encoding::Av => self.attributes[self.columns[column].attribute].values.len(),
            Encoding::Oh => 2,
        }
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        (0..self.width()).map(|c| self.domain_size(c)).collect()
    }

    pub fn column_name(&self, column: usize) -> String {
        let src = &self.columns[column];
        let attr = &self.attributes[src.attribute];
        match src.value {
            None => attr.name.clone(),
            Some(v) => format!("{}={}", attr.name, attr.values[v as usize]),
        }
    }

    /// Text of value `v` in encoded column `column`.
    pub fn value_label(&self, column: usize, v: Value) -> Option<&str> {
        match self.encoding {
            Encoding::Av => {
                let attr = &self.attributes[self.columns[column].attribute];
                attr.values.get(v as usize).map(String::as_str)
            }
            Encoding::Oh => BINARY.get(v as usize).copied(),
        }
    }

    pub fn value_index(&self, column: usize, label: &str) -> Option<Value> {
        match self.encoding {
            Encoding::Av => self.attributes[self.columns[column].attribute].index_of(label),
            Encoding::Oh => BINARY.iter().position(|b| *b == label).map(|i| i as Value),
        }
    }

    /// Maps an attribute-value instance into this schema's columns.
    pub fn encode_instance(&self, av: &[Value]) -> Result<Vec<Value>> {
        check_len(self.attributes.len(), av.len())?;
        Ok(match self.encoding {
            Encoding::Av => av.to_vec(),
            Encoding::Oh => self
                .columns
                .iter()
                .map(|c| Value::from(Some(av[c.attribute]) == c.value))
                .collect(),
        })
    }

    /// Inverse of [`Schema::encode_instance`]. One-hot rows with no hot
    /// column for an attribute decode to [`UNSEEN`].
    pub fn decode_instance(&self, row: &[Value]) -> Result<Vec<Value>> {
        check_len(self.width(), row.len())?;
        match self.encoding {
            Encoding::Av => Ok(row.to_vec()),
            Encoding::Oh => {
                let mut av = vec![UNSEEN; self.attributes.len()];
                for (c, &bit) in self.columns.iter().zip(row) {
                    if bit == 1 {
                        let slot = &mut av[c.attribute];
                        if *slot != UNSEEN {
                            return Err(Error::InvalidArgument(format!(
                                "attribute `{}` has more than one hot column",
                                self.attributes[c.attribute].name
                            )));
                        }
                        *slot = c.value.expect("one-hot column carries its value");
                    }
                }
                Ok(av)
            }
        }
    }

    /// Interns raw text cells (one per original attribute) into an
    /// attribute-value instance. Unknown values become [`UNSEEN`].
    pub fn intern_cells(&self, cells: &[&str]) -> Result<Vec<Value>> {
        check_len(self.attributes.len(), cells.len())?;
        Ok(self
            .attributes
            .iter()
            .zip(cells)
            .map(|(attr, cell)| match &attr.bin_edges {
                Some(edges) => match cell.trim().parse::<f64>() {
                    Ok(x) => assign_bin(x, edges),
                    Err(_) => attr.index_of(cell).unwrap_or(UNSEEN),
                },
                None => attr.index_of(cell).unwrap_or(UNSEEN),
            })
            .collect())
    }

    /// Rule constraints as `null` or the value text, column by column.
    pub fn rule_to_values(&self, rule: &Rule) -> Vec<Option<String>> {
        rule.constraints()
            .iter()
            .enumerate()
            .map(|(col, c)| {
                c.value().map(|v| {
                    self.value_label(col, v)
                        .map(str::to_owned)
                        .unwrap_or_else(|| v.to_string())
                })
            })
            .collect()
    }

    pub fn rule_from_values(&self, values: &[Option<String>]) -> Result<Rule> {
        check_len(self.width(), values.len())?;
        values
            .iter()
            .enumerate()
            .map(|(col, v)| match v {
                None => Ok(Constraint::Any),
                Some(text) => self.value_index(col, text).map(Constraint::Value).ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "value `{text}` is not in the domain of column `{}`",
                        self.column_name(col)
                    ))
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Rule::new)
    }

    /// Human-readable conjunction, e.g. `color=red AND size≠small`.
    pub fn describe_conjunction(&self, rule: &Rule) -> String {
        let terms: Vec<String> = rule
            .constraints()
            .iter()
            .enumerate()
            .filter_map(|(col, c)| {
                let v = c.value()?;
                let src = &self.columns[col];
                let attr = &self.attributes[src.attribute];
                Some(match src.value {
                    None => format!("{}={}", attr.name, label_or_id(&attr.values, v)),
                    Some(ov) => {
                        let op = if v == 1 { "=" } else { "≠" };
                        format!("{}{op}{}", attr.name, label_or_id(&attr.values, ov))
                    }
                })
            })
            .collect();
        if terms.is_empty() {
            "TRUE".to_owned()
        } else {
            terms.join(" AND ")
        }
    }

    /// `IF … THEN positive`.
    pub fn describe_rule(&self, rule: &Rule) -> String {
        format!("IF {} THEN positive", self.describe_conjunction(rule))
    }

    /// Reports structural problems with a rule. Under one-hot encoding a
    /// rule can demand two hot columns of one attribute, or rule out every
    /// value of it; both are unsatisfiable.
    pub fn validate_rule(&self, rule: &Rule) -> Vec<String> {
        let mut issues = Vec::new();
        if rule.len() != self.width() {
            issues.push(format!(
                "rule has {} constraints, schema has {} columns",
                rule.len(),
                self.width()
            ));
            return issues;
        }
        for (col, c) in rule.constraints().iter().enumerate() {
            if let Some(v) = c.value() {
                if v as usize >= self.domain_size(col) {
                    issues.push(format!(
                        "column `{}` constrained to out-of-domain value {v}",
                        self.column_name(col)
                    ));
                }
            }
        }
        if self.encoding == Encoding::Oh {
            let mut hot: BTreeMap<usize, usize> = BTreeMap::new();
            let mut cold: BTreeMap<usize, usize> = BTreeMap::new();
            for (c, src) in rule.constraints().iter().zip(&self.columns) {
                match c.value() {
                    Some(1) => *hot.entry(src.attribute).or_default() += 1,
                    Some(0) => *cold.entry(src.attribute).or_default() += 1,
                    _ => {}
                }
            }
            for (&a, &n) in &hot {
                if n > 1 {
                    issues.push(format!(
                        "attribute `{}` requires {n} different values at once",
                        self.attributes[a].name
                    ));
                }
            }
            for (&a, &n) in &cold {
                if n == self.attributes[a].values.len() {
                    issues.push(format!(
                        "attribute `{}` excludes every value",
                        self.attributes[a].name
                    ));
                }
            }
        }
        issues
    }
}

fn label_or_id(values: &[String], v: Value) -> String {
    values
        .get(v as usize)
        .cloned()
        .unwrap_or_else(|| format!("#{v}"))
}

/// Categorical instances with binary labels over a shared schema.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub rows: Vec<Vec<Value>>,
    pub labels: Vec<Label>,
    /// Class name that was mapped to `+1`.
    pub positive_class: String,
}

impl Dataset {
    pub fn new(
        schema: Schema,
        rows: Vec<Vec<Value>>,
        labels: Vec<Label>,
        positive_class: String,
    ) -> Result<Dataset> {
        check_len(rows.len(), labels.len())?;
        let width = schema.width();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::InvalidArgument(format!(
                    "instance {i} has {} values, schema has {width} columns",
                    row.len()
                )));
            }
            for (col, &v) in row.iter().enumerate() {
                if v as usize >= schema.domain_size(col) {
                    return Err(Error::InvalidArgument(format!(
                        "instance {i}: value {v} outside domain of column `{}`",
                        schema.column_name(col)
                    )));
                }
            }
        }
        Ok(Dataset {
            schema,
            rows,
            labels,
            positive_class,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn encoding(&self) -> Encoding {
        self.schema.encoding
    }

    pub fn positives(&self) -> Vec<&[Value]> {
        self.with_label(Label::Positive)
    }

    pub fn negatives(&self) -> Vec<&[Value]> {
        self.with_label(Label::Negative)
    }

    fn with_label(&self, label: Label) -> Vec<&[Value]> {
        self.rows
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == label)
            .map(|(r, _)| r.as_slice())
            .collect()
    }

    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    /// Instances at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            positive_class: self.positive_class.clone(),
        }
    }

    /// Number of distinct feature vectors that occur with both labels.
    pub fn contradictions(&self) -> usize {
        let mut seen: HashMap<&[Value], (bool, bool)> = HashMap::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let e = seen.entry(row.as_slice()).or_default();
            if label.is_positive() {
                e.0 = true;
            } else {
                e.1 = true;
            }
        }
        seen.values().filter(|(p, n)| *p && *n).count()
    }
}

/// Turns a raw table into a binary-labelled categorical dataset: rows whose
/// label equals `positive_class` become `+1`, all others `-1`. Domains are
/// the observed values of each column.
pub fn binarize_labels(table: &RawTable, positive_class: &str) -> Result<Dataset> {
    let label_text = table.column(table.label()).text();
    if !label_text.iter().any(|l| l == positive_class) {
        let observed: HashSet<&str> = label_text.iter().map(String::as_str).collect();
        let mut observed: Vec<&str> = observed.into_iter().collect();
        observed.sort_unstable();
        return Err(Error::UnknownClass {
            class: positive_class.to_owned(),
            observed: observed.join(", "),
        });
    }
    let labels: Vec<Label> = label_text
        .iter()
        .map(|l| Label::from_bool(l == positive_class))
        .collect();

    let feature_cols: Vec<usize> = (0..table.width()).filter(|&c| c != table.label()).collect();
    let mut attributes = Vec::with_capacity(feature_cols.len());
    let mut codes: Vec<Vec<Value>> = Vec::with_capacity(feature_cols.len());
    for &c in &feature_cols {
        let name = table.names()[c].clone();
        match table.column(c) {
            ColumnData::Binned(b) => {
                let edges: Vec<f64> = b.edges.clone();
                let values = bin_labels(&edges);
                attributes.push(Attribute {
                    name,
                    values,
                    bin_edges: Some(edges),
                });
                codes.push(b.codes.clone());
            }
            col => {
                let text = col.text();
                let mut domain: Vec<&str> = text
                    .iter()
                    .map(String::as_str)
                    .collect::<HashSet<_>>()
                    .into_iter()
                    .collect();
                sort_domain(&mut domain);
                let index: HashMap<&str, Value> = domain
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (*v, i as Value))
                    .collect();
                codes.push(text.iter().map(|t| index[t.as_str()]).collect());
                attributes.push(Attribute {
                    name,
                    values: domain.into_iter().map(str::to_owned).collect(),
                    bin_edges: None,
                });
            }
        }
    }
    let rows = (0..table.rows())
        .map(|r| codes.iter().map(|col| col[r]).collect())
        .collect();
    let ds = Dataset::new(
        Schema::attribute_value(attributes),
        rows,
        labels,
        positive_class.to_owned(),
    )?;
    let contradictions = ds.contradictions();
    if contradictions > 0 {
        log::warn!("{contradictions} feature vectors occur with both labels");
    }
    Ok(ds)
}

/// Numeric-aware ordering: all-numeric domains sort by value, others
/// lexicographically.
fn sort_domain(domain: &mut [&str]) {
    let numeric: Option<Vec<f64>> = domain.iter().map(|v| v.parse::<f64>().ok()).collect();
    if numeric.is_some() {
        domain.sort_by(|a, b| {
            let (x, y) = (a.parse::<f64>().unwrap(), b.parse::<f64>().unwrap());
            x.total_cmp(&y).then_with(|| a.cmp(b))
        });
    } else {
        domain.sort_unstable();
    }
}

fn bin_labels(edges: &[f64]) -> Vec<String> {
    let n = edges.len().saturating_sub(1).max(1);
    if n == 1 {
        return vec!["all".to_owned()];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                format!("<{}", edges[1])
            } else if i == n - 1 {
                format!(">={}", edges[i])
            } else {
                format!("[{},{})", edges[i], edges[i + 1])
            }
        })
        .collect()
}
