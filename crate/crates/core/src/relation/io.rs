use std::io::{Read, Write};

use super::value::{infer_column_kind, ColumnKind, Value};
use super::{Relation, RelationError};

/// Cell spellings treated as missing when no others are configured.
pub const DEFAULT_NULL_TOKENS: [&str; 4] = ["", "?", "NULL", "⊥"];

#[derive(Clone, Debug)]
pub struct LoadOptions {
    pub delimiter: u8,
    /// Cells equal to one of these after trimming become `Null`.
    pub null_tokens: Vec<String>,
    /// First record names the attributes. Without a header, attributes are
    /// named by their 1-based column index.
    pub header: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            delimiter: b',',
            null_tokens: DEFAULT_NULL_TOKENS.iter().map(|s| s.to_string()).collect(),
            header: true,
        }
    }
}

impl LoadOptions {
    fn is_null(&self, cell: &str) -> bool {
        self.null_tokens.iter().any(|t| t.trim() == cell)
    }
}

fn parse_error(err: csv::Error) -> RelationError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(e) => RelationError::Io(e),
        other => RelationError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Reads delimited text into a [`Relation`]. Tuple ids follow input order.
pub fn load_relation<R: Read>(source: R, options: &LoadOptions) -> Result<Relation, RelationError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut names: Option<Vec<String>> = None;
    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(parse_error)? {
        let line = record.position().map_or(0, |p| p.line());
        match &names {
            None if options.header => {
                names = Some(record.iter().map(str::to_string).collect());
                cells = (0..record.len()).map(|_| Vec::new()).collect();
                continue;
            }
            None => {
                names = Some((1..=record.len()).map(|i| i.to_string()).collect());
                cells = (0..record.len()).map(|_| Vec::new()).collect();
            }
            Some(n) if n.len() != record.len() => {
                return Err(RelationError::Parse {
                    line,
                    message: format!("expected {} fields, found {}", n.len(), record.len()),
                });
            }
            Some(_) => {}
        }
        for (column, cell) in cells.iter_mut().zip(record.iter()) {
            column.push(cell.to_string());
        }
    }

    let names = names.ok_or(RelationError::Empty)?;
    if cells.first().is_none_or(|c| c.is_empty()) {
        return Err(RelationError::Empty);
    }

    let mut kinds = Vec::with_capacity(names.len());
    let mut columns = Vec::with_capacity(names.len());
    for raw in cells {
        let present: Vec<&str> = raw.iter().map(String::as_str).filter(|c| !options.is_null(c)).collect();
        let kind = infer_column_kind(&present);
        let column = raw
            .iter()
            .map(|c| {
                if options.is_null(c) {
                    Value::Null
                } else if kind == ColumnKind::Number {
                    Value::number(c).expect("kind inference accepted the cell")
                } else {
                    Value::text(c.as_str())
                }
            })
            .collect();
        kinds.push(kind);
        columns.push(column);
    }
    Relation::from_columns(names, kinds, columns)
}

/// Writes a relation as delimited text with a header, spelling `Null` as
/// `null_token`.
pub fn write_delimited<W: Write>(
    r: &Relation,
    sink: W,
    delimiter: u8,
    null_token: &str,
) -> Result<(), RelationError> {
    let mut writer = csv::WriterBuilder::new().delimiter(delimiter).from_writer(sink);
    writer.write_record(r.names()).map_err(parse_error)?;
    let mut fields = Vec::with_capacity(r.width());
    for t in r.tuple_ids() {
        fields.clear();
        for a in 0..r.width() {
            fields.push(match r.value(t, a) {
                Value::Null => null_token.to_string(),
                v => v.to_string(),
            });
        }
        writer.write_record(&fields).map_err(parse_error)?;
    }
    writer.flush()?;
    Ok(())
}
