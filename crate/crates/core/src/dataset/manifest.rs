//! Declarative dataset description (JSON).
//!
//! ```json
//! { "path": "../data/wine.csv", "label": "class", "positive_class": "2",
//!   "discretize": "all", "bins": 10, "encoding": "av" }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::discretize::BinStrategy;
use super::table::{load_csv_with, CsvOptions, RawTable};
use super::{binarize_labels, encode, Dataset, Encoding};
use crate::error::{Error, Result};

/// `positive_class` keyword selecting the most frequent label.
pub const MOST_FREQUENT: &str = "most-frequent";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Discretize {
    /// `"all"` (every numeric feature) or `"none"`.
    Keyword(String),
    Columns(Vec<String>),
}

impl Default for Discretize {
    fn default() -> Self {
        Discretize::Columns(Vec::new())
    }
}

/// Which rows bin edges are fitted on.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinFit {
    #[default]
    Full,
    Train,
}

fn default_bins() -> usize {
    10
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> char {
    ','
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub path: PathBuf,
    pub label: String,
    #[serde(default = "most_frequent")]
    pub positive_class: String,
    #[serde(default)]
    pub discretize: Discretize,
    #[serde(default = "default_bins")]
    pub bins: usize,
    #[serde(default)]
    pub encoding: Encoding,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub strategy: BinStrategy,
    #[serde(default)]
    pub bin_fit: BinFit,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    /// Default tolerance for this dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    /// Expensive dataset; skipped by batch runs unless requested.
    #[serde(default)]
    pub slow: bool,
    /// The data file may be absent; batch runs skip it with a notice.
    #[serde(default)]
    pub optional: bool,

    #[serde(skip)]
    base_dir: PathBuf,
}

fn most_frequent() -> String {
    MOST_FREQUENT.to_owned()
}

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Manifest> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::ManifestNotFound(path.to_owned()),
            _ => Error::Io(e),
        })?;
        let base = path.parent().unwrap_or(Path::new("")).to_owned();
        let mut m = Manifest::from_json(&text, base).map_err(|e| Error::InvalidManifest {
            path: path.to_owned(),
            message: e.to_string(),
        })?;
        if m.name.is_none() {
            m.name = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(|s| s.split('.').next().unwrap_or(s).to_owned());
        }
        Ok(m)
    }

    /// Parses a manifest whose relative `path` is resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: impl Into<PathBuf>) -> Result<Manifest> {
        let mut m: Manifest = serde_json::from_str(text)?;
        m.base_dir = base_dir.into();
        if m.bins < 2 {
            return Err(Error::InvalidArgument(format!("bins must be >= 2, got {}", m.bins)));
        }
        if let Discretize::Keyword(k) = &m.discretize {
            if k != "all" && k != "none" {
                return Err(Error::InvalidArgument(format!(
                    "discretize must be \"all\", \"none\" or a list of columns, got \"{k}\""
                )));
            }
        }
        if !m.delimiter.is_ascii() {
            return Err(Error::InvalidArgument("delimiter must be ASCII".into()));
        }
        Ok(m)
    }

    pub fn name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("dataset")
                .to_owned()
        })
    }

    pub fn data_path(&self) -> PathBuf {
        if self.path.is_absolute() {
            self.path.clone()
        } else {
            self.base_dir.join(&self.path)
        }
    }

    pub fn data_available(&self) -> bool {
        self.data_path().is_file()
    }

    /// The table as stored on disk, nothing discretized.
    pub fn load_raw(&self) -> Result<RawTable> {
        let opts = CsvOptions {
            label: self.label.clone(),
            has_header: self.has_header,
            delimiter: self.delimiter as u8,
        };
        load_csv_with(self.data_path(), &opts)
    }

    fn discretized_columns(&self, table: &RawTable) -> Vec<String> {
        match &self.discretize {
            Discretize::Keyword(k) if k == "all" => table.numeric_features(),
            Discretize::Keyword(_) => Vec::new(),
            Discretize::Columns(c) => c.clone(),
        }
    }

    /// Discretizes, labels and encodes `table`. Bin edges are fitted on
    /// `fit_rows` when given (train-only fitting), else on all rows.
    pub fn build(&self, mut table: RawTable, fit_rows: Option<&[usize]>) -> Result<Dataset> {
        let cols = self.discretized_columns(&table);
        if !cols.is_empty() {
            table.discretize_columns(&cols, self.bins, self.strategy, fit_rows)?;
        }
        let positive = if self.positive_class == MOST_FREQUENT {
            table.most_frequent_class()?
        } else {
            self.positive_class.clone()
        };
        let av = binarize_labels(&table, &positive)?;
        encode(&av, self.encoding)
    }

    pub fn dataset(&self) -> Result<Dataset> {
        self.build(self.load_raw()?, None)
    }

    pub fn with_encoding(&self, encoding: Encoding) -> Manifest {
        Manifest {
            encoding,
            ..self.clone()
        }
    }
}
