use std::borrow::Cow;
use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::discretize::{assign_bin, fit_edges, BinStrategy, Binning};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub label: String,
    pub has_header: bool,
    pub delimiter: u8,
}

impl CsvOptions {
    pub fn new(label: impl Into<String>) -> Self {
        CsvOptions {
            label: label.into(),
            has_header: true,
            delimiter: b',',
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Text(Vec<String>),
    /// Every cell parsed as a decimal number. The original text is kept:
    /// numeric columns that are not discretized are treated as categorical.
    Numeric { values: Vec<f64>, text: Vec<String> },
    Binned(Binning<f64>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Text(t) | ColumnData::Numeric { text: t, .. } => t.len(),
            ColumnData::Binned(b) => b.codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, ColumnData::Numeric { .. })
    }

    /// Cell text; binned columns render their bin index.
    pub fn text(&self) -> Cow<'_, [String]> {
        match self {
            ColumnData::Text(t) | ColumnData::Numeric { text: t, .. } => Cow::Borrowed(t),
            ColumnData::Binned(b) => Cow::Owned(b.codes.iter().map(|c| c.to_string()).collect()),
        }
    }
}

/// Column-major table of raw cells with one designated label column.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    names: Vec<String>,
    columns: Vec<ColumnData>,
    rows: usize,
    label: usize,
}

impl RawTable {
    pub fn new(names: Vec<String>, columns: Vec<ColumnData>, label: &str) -> Result<RawTable> {
        if names.len() != columns.len() {
            return Err(Error::LengthMismatch {
                expected: names.len(),
                found: columns.len(),
            });
        }
        let mut seen = HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(Error::DuplicateColumn(n.clone()));
            }
        }
        let rows = columns.first().map_or(0, ColumnData::len);
        for c in &columns {
            if c.len() != rows {
                return Err(Error::LengthMismatch {
                    expected: rows,
                    found: c.len(),
                });
            }
        }
        let label = names
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::UnknownColumn {
                name: label.to_owned(),
                available: names.join(", "),
            })?;
        Ok(RawTable {
            names,
            columns,
            rows,
            label,
        })
    }

    pub fn from_reader<R: Read>(reader: R, opts: &CsvOptions) -> Result<RawTable> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .delimiter(opts.delimiter)
            .from_reader(reader);
        let mut records = rdr.records();
        let mut names: Option<Vec<String>> = None;
        let mut cells: Vec<Vec<String>> = Vec::new();
        let mut line = 0usize;
        if opts.has_header {
            match records.next() {
                Some(rec) => {
                    line += 1;
                    names = Some(rec?.iter().map(str::to_owned).collect());
                }
                None => return Err(Error::Empty("csv file has no header")),
            }
        }
        for rec in records {
            let rec = rec?;
            line += 1;
            if rec.len() == 1 && rec.get(0) == Some("") {
                continue;
            }
            let width = names.as_ref().map(Vec::len).unwrap_or_else(|| {
                cells.first().map_or(rec.len(), Vec::len)
            });
            if rec.len() != width {
                return Err(Error::RaggedRow {
                    row: line,
                    expected: width,
                    found: rec.len(),
                });
            }
            cells.push(rec.iter().map(str::to_owned).collect());
        }
        let width = names
            .as_ref()
            .map(Vec::len)
            .or_else(|| cells.first().map(Vec::len))
            .unwrap_or(0);
        let names = names.unwrap_or_else(|| (0..width).map(|i| i.to_string()).collect());
        let header_lines = usize::from(opts.has_header);
        let mut columns = Vec::with_capacity(width);
        for c in 0..width {
            let mut text = Vec::with_capacity(cells.len());
            for (r, row) in cells.iter().enumerate() {
                if row[c].is_empty() {
                    return Err(Error::MissingValue {
                        row: r + 1 + header_lines,
                        column: names[c].clone(),
                    });
                }
                text.push(row[c].clone());
            }
            let numeric: Option<Vec<f64>> = text
                .iter()
                .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
                .collect();
            columns.push(match numeric {
                Some(values) if !text.is_empty() => ColumnData::Numeric { values, text },
                _ => ColumnData::Text(text),
            });
        }
        RawTable::new(names, columns, &opts.label)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, c: usize) -> &ColumnData {
        &self.columns[c]
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownColumn {
                name: name.to_owned(),
                available: self.names.join(", "),
            })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn width(&self) -> usize {
        self.columns.len()
    }

    pub fn label(&self) -> usize {
        self.label
    }

    /// Names of the numeric feature columns.
    pub fn numeric_features(&self) -> Vec<String> {
        (0..self.width())
            .filter(|&c| c != self.label && self.columns[c].is_numeric())
            .map(|c| self.names[c].clone())
            .collect()
    }

    /// The most frequent label; ties go to the lexicographically smallest.
    pub fn most_frequent_class(&self) -> Result<String> {
        let text = self.columns[self.label].text();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for t in text.iter() {
            *counts.entry(t.as_str()).or_default() += 1;
        }
        let best = counts
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(c, _)| c.to_owned())
            .ok_or(Error::Empty("label column"))?;
        log::info!("most frequent class: `{best}`");
        Ok(best)
    }

    /// Replaces the named numeric columns by their bin indices. Edges are
    /// fitted on `fit_rows` when given, otherwise on every row.
    pub fn discretize_columns(
        &mut self,
        names: &[String],
        bins: usize,
        strategy: BinStrategy,
        fit_rows: Option<&[usize]>,
    ) -> Result<()> {
        for name in names {
            let c = self.column_index(name)?;
            if c == self.label {
                return Err(Error::InvalidArgument(format!(
                    "cannot discretize the label column `{name}`"
                )));
            }
            let values = match &self.columns[c] {
                ColumnData::Numeric { values, .. } => values,
                ColumnData::Binned(_) => continue,
                ColumnData::Text(_) => return Err(Error::NotNumeric(name.clone())),
            };
            let edges = match fit_rows {
                Some(rows) => {
                    let sample: Vec<f64> = rows.iter().map(|&r| values[r]).collect();
                    fit_edges(&sample, bins, strategy)?
                }
                None => fit_edges(values, bins, strategy)?,
            };
            let codes = values.iter().map(|&v| assign_bin(v, &edges)).collect();
            self.columns[c] = ColumnData::Binned(Binning { codes, edges });
        }
        Ok(())
    }
}

pub fn load_csv(path: impl AsRef<Path>, label: &str, has_header: bool) -> Result<RawTable> {
    load_csv_with(
        path,
        &CsvOptions {
            has_header,
            ..CsvOptions::new(label)
        },
    )
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_owned()),
        _ => Error::Io(e),
    })?;
    RawTable::from_reader(std::io::BufReader::new(file), opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str, label: &str) -> Result<RawTable> {
        RawTable::from_reader(src.as_bytes(), &CsvOptions::new(label))
    }

    #[test]
    fn parses_small_file() {
        let t = parse("a,b,y\n1,x,p\n2,y,n\n3,x,p\n4,z,n\n", "y").unwrap();
        assert_eq!((t.rows(), t.width()), (4, 3));
        assert!(t.column(0).is_numeric());
        assert!(!t.column(1).is_numeric());
        assert_eq!(t.label(), 2);
        assert_eq!(t.numeric_features(), vec!["a"]);
    }

    #[test]
    fn headerless_columns_are_numbered() {
        let opts = CsvOptions {
            has_header: false,
            ..CsvOptions::new("2")
        };
        let t = RawTable::from_reader("1,x,p\n2,y,n\n".as_bytes(), &opts).unwrap();
        assert_eq!(t.names(), ["0", "1", "2"]);
        assert_eq!(t.rows(), 2);
    }

    #[test]
    fn reports_ragged_row() {
        match parse("a,b,y\n1,x,p\n2,n\n", "y") {
            Err(Error::RaggedRow { row, expected, found }) => {
                assert_eq!((row, expected, found), (3, 3, 2))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_unknown_label_and_missing_cell() {
        assert!(matches!(parse("a,y\n1,p\n", "class"), Err(Error::UnknownColumn { .. })));
        match parse("a,y\n1,p\n,n\n", "y") {
            Err(Error::MissingValue { row, column }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("a,a\n1,p\n", "a"), Err(Error::DuplicateColumn(_))));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_csv("/nonexistent/file.csv", "y", true),
            Err(Error::MissingFile(_))
        ));
    }

    #[test]
    fn most_frequent_breaks_ties_lexicographically() {
        let t = parse("a,y\n1,b\n2,a\n3,b\n4,a\n", "y").unwrap();
        assert_eq!(t.most_frequent_class().unwrap(), "a");
        let t = parse("a,y\n1,b\n2,a\n3,b\n", "y").unwrap();
        assert_eq!(t.most_frequent_class().unwrap(), "b");
    }

    #[test]
    fn discretizes_in_place() {
        let mut t = parse("a,y\n1,p\n1,p\n1,p\n2,n\n2,n\n2,n\n", "y").unwrap();
        t.discretize_columns(&["a".into()], 2, BinStrategy::Quantile, None)
            .unwrap();
        match t.column(0) {
            ColumnData::Binned(b) => assert_eq!(b.codes, vec![0, 0, 0, 1, 1, 1]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(t
            .discretize_columns(&["y".into()], 2, BinStrategy::Quantile, None)
            .is_err());
    }
}
