//! Typed columnar tables with missing values.
//!
//! A [`Relation`] is immutable once built. Besides the cell values it keeps,
//! per column, a dense order code for every tuple: two non-null cells compare
//! the same way their codes do, and `Null` maps to [`NULL_CODE`]. All order
//! checks downstream run on these codes.

mod io;
mod missing;
mod value;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

pub use io::{load_relation, write_delimited, LoadOptions, DEFAULT_NULL_TOKENS};
pub use missing::{build_missing_index, present_in, MissingIndex};
pub use value::{infer_column_kind, infer_column_kinds, ColumnKind, Decimal, Value};

/// Positional attribute id (column index).
pub type AttrId = usize;
/// Positional tuple id (0-based row index in input order).
pub type TupleId = usize;

/// Order code stored for `Null` cells.
pub const NULL_CODE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("duplicate attribute name `{0}`")]
    DuplicateAttribute(String),
    #[error("relation has no data rows")]
    Empty,
    #[error("row {row} has {found} values, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("column `{column}` has kind {kind} but row {row} holds a {found} value")]
    KindMismatch {
        column: String,
        kind: ColumnKind,
        row: usize,
        found: ColumnKind,
    },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("relation too large: {0} rows")]
    TooLarge(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    names: Vec<String>,
    kinds: Vec<ColumnKind>,
    columns: Vec<Vec<Value>>,
    codes: Vec<Vec<u32>>,
    distinct: Vec<u32>,
    len: usize,
}

impl Relation {
    /// Builds a relation from columns. Every non-null value must match its
    /// column's kind and all columns must have the same length.
    pub fn from_columns(
        names: Vec<String>,
        kinds: Vec<ColumnKind>,
        columns: Vec<Vec<Value>>,
    ) -> Result<Self, RelationError> {
        assert_eq!(names.len(), kinds.len(), "one kind per attribute");
        assert_eq!(names.len(), columns.len(), "one column per attribute");
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(RelationError::DuplicateAttribute(name.clone()));
            }
        }
        let len = columns.first().map_or(0, Vec::len);
        if len >= NULL_CODE as usize {
            return Err(RelationError::TooLarge(len));
        }
        for (a, column) in columns.iter().enumerate() {
            if column.len() != len {
                return Err(RelationError::Ragged {
                    row: len.min(column.len()),
                    expected: len,
                    found: column.len(),
                });
            }
            for (row, v) in column.iter().enumerate() {
                if let Some(found) = v.kind() {
                    if found != kinds[a] {
                        return Err(RelationError::KindMismatch {
                            column: names[a].clone(),
                            kind: kinds[a],
                            row,
                            found,
                        });
                    }
                }
            }
        }
        let (codes, distinct) = columns.iter().map(|c| order_codes(c)).unzip();
        Ok(Relation {
            names,
            kinds,
            columns,
            codes,
            distinct,
            len,
        })
    }

    /// Builds a relation from rows, taking each column's kind from its
    /// non-null values (`Text` for all-null columns).
    pub fn from_rows(names: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Self, RelationError> {
        let width = names.len();
        let mut columns: Vec<Vec<Value>> = (0..width).map(|_| Vec::with_capacity(rows.len())).collect();
        for (row, values) in rows.into_iter().enumerate() {
            if values.len() != width {
                return Err(RelationError::Ragged {
                    row,
                    expected: width,
                    found: values.len(),
                });
            }
            for (column, v) in columns.iter_mut().zip(values) {
                column.push(v);
            }
        }
        let kinds = columns
            .iter()
            .map(|c| {
                c.iter()
                    .find_map(Value::kind)
                    .unwrap_or(ColumnKind::Text)
            })
            .collect();
        Self::from_columns(names, kinds, columns)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of attributes.
    pub fn width(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, a: AttrId) -> &str {
        &self.names[a]
    }

    pub fn kind(&self, a: AttrId) -> ColumnKind {
        self.kinds[a]
    }

    pub fn kinds(&self) -> &[ColumnKind] {
        &self.kinds
    }

    pub fn value(&self, t: TupleId, a: AttrId) -> &Value {
        &self.columns[a][t]
    }

    pub fn column(&self, a: AttrId) -> &[Value] {
        &self.columns[a]
    }

    pub fn row(&self, t: TupleId) -> Vec<&Value> {
        self.columns.iter().map(|c| &c[t]).collect()
    }

    pub fn is_null(&self, t: TupleId, a: AttrId) -> bool {
        self.codes[a][t] == NULL_CODE
    }

    /// Dense order code of a cell; equal codes mean equal values.
    pub fn code(&self, t: TupleId, a: AttrId) -> u32 {
        self.codes[a][t]
    }

    pub fn codes(&self, a: AttrId) -> &[u32] {
        &self.codes[a]
    }

    /// Number of distinct non-null values in a column. Codes of non-null
    /// cells are all below this.
    pub fn distinct_count(&self, a: AttrId) -> u32 {
        self.distinct[a]
    }

    pub fn null_count(&self, a: AttrId) -> usize {
        self.codes[a].iter().filter(|&&c| c == NULL_CODE).count()
    }

    pub fn attr_id(&self, name: &str) -> Option<AttrId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn resolve(&self, name: &str) -> Result<AttrId, RelationError> {
        self.attr_id(name)
            .ok_or_else(|| RelationError::UnknownAttribute(name.to_string()))
    }

    pub fn tuple_ids(&self) -> std::ops::Range<TupleId> {
        0..self.len
    }
}

fn order_codes(column: &[Value]) -> (Vec<u32>, u32) {
    let mut order: Vec<TupleId> = (0..column.len()).filter(|&t| !column[t].is_null()).collect();
    order.sort_by(|&a, &b| {
        column[a]
            .partial_cmp(&column[b])
            .expect("column values share one kind")
    });
    let mut codes = vec![NULL_CODE; column.len()];
    let mut next = 0u32;
    for (i, &t) in order.iter().enumerate() {
        if i > 0 && column[order[i - 1]] != column[t] {
            next += 1;
        }
        codes[t] = next;
    }
    let distinct = if order.is_empty() { 0 } else { next + 1 };
    (codes, distinct)
}

/// A set of attributes; `r^E` is the set of tuples with no `Null` on any of them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Embedding(BTreeSet<AttrId>);

impl Embedding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn contains(&self, a: AttrId) -> bool {
        self.0.contains(&a)
    }

    pub fn insert(&mut self, a: AttrId) -> bool {
        self.0.insert(a)
    }

    pub fn with(&self, a: AttrId) -> Self {
        let mut e = self.clone();
        e.insert(a);
        e
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Attributes in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = AttrId> + '_ {
        self.0.iter().copied()
    }

    pub fn is_subset(&self, other: &Embedding) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn names<'r>(&self, r: &'r Relation) -> Vec<&'r str> {
        self.iter().map(|a| r.name(a)).collect()
    }

    pub fn display<'a>(&'a self, r: &'a Relation) -> EmbeddingDisplay<'a> {
        EmbeddingDisplay { e: self, r }
    }
}

impl FromIterator<AttrId> for Embedding {
    fn from_iter<I: IntoIterator<Item = AttrId>>(iter: I) -> Self {
        Embedding(iter.into_iter().collect())
    }
}

impl Extend<AttrId> for Embedding {
    fn extend<I: IntoIterator<Item = AttrId>>(&mut self, iter: I) {
        self.0.extend(iter)
    }
}

pub struct EmbeddingDisplay<'a> {
    e: &'a Embedding,
    r: &'a Relation,
}

impl fmt::Display for EmbeddingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.e.names(self.r).join(","))
    }
}
