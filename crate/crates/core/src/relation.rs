//! Typed in-memory relations with a designated join-key column, plus CSV
//! ingestion and emission. Relations are immutable once built, so shared
//! references are safe across threads.

use std::borrow::Cow;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

const DATE_FMT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnType {
    Integer,
    Character,
    String,
    Date,
}

impl ColumnType {
    pub fn name(self) -> &'static str {
        match self {
            ColumnType::Integer => "integer",
            ColumnType::Character => "character",
            ColumnType::String => "string",
            ColumnType::Date => "date",
        }
    }

    pub fn parse_name(s: &str) -> Option<Self> {
        match s {
            "integer" => Some(ColumnType::Integer),
            "character" => Some(ColumnType::Character),
            "string" => Some(ColumnType::String),
            "date" => Some(ColumnType::Date),
            _ => None,
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Char(char),
    Str(String),
    Date(NaiveDate),
}

impl Value {
    pub fn column_type(&self) -> ColumnType {
        match self {
            Value::Int(_) => ColumnType::Integer,
            Value::Char(_) => ColumnType::Character,
            Value::Str(_) => ColumnType::String,
            Value::Date(_) => ColumnType::Date,
        }
    }

    /// Canonical byte encoding used for key hashing and comparison.
    /// Strings borrow; the other types render to their CSV text form,
    /// which is injective within a column type.
    pub fn key_bytes(&self) -> Cow<'_, [u8]> {
        match self {
            Value::Str(s) => Cow::Borrowed(s.as_bytes()),
            Value::Char(c) => {
                let mut buf = [0u8; 4];
                Cow::Owned(c.encode_utf8(&mut buf).as_bytes().to_vec())
            }
            Value::Int(i) => Cow::Owned(i.to_string().into_bytes()),
            Value::Date(d) => Cow::Owned(d.format(DATE_FMT).to_string().into_bytes()),
        }
    }

    /// The CSV cell text for this value.
    pub fn render(&self) -> String {
        match self {
            Value::Int(i) => i.to_string(),
            Value::Char(c) => c.to_string(),
            Value::Str(s) => s.clone(),
            Value::Date(d) => d.format(DATE_FMT).to_string(),
        }
    }

    fn parse(text: &str, ty: ColumnType) -> Option<Value> {
        match ty {
            ColumnType::Integer => text.parse::<i64>().ok().map(Value::Int),
            ColumnType::Character => {
                let mut chars = text.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) => Some(Value::Char(c)),
                    _ => None,
                }
            }
            ColumnType::String => Some(Value::Str(text.to_string())),
            ColumnType::Date => NaiveDate::parse_from_str(text, DATE_FMT)
                .ok()
                .map(Value::Date),
        }
    }
}

pub type Tuple = Vec<Value>;

#[derive(Debug, Error)]
pub enum RelationError {
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("key column {0:?} is not in the schema")]
    UnknownKeyColumn(String),
    #[error("duplicate header {0:?}")]
    DuplicateHeader(String),
    #[error("missing column {0:?} in header")]
    MissingColumn(String),
    #[error("unexpected column {0:?} in header")]
    UnexpectedColumn(String),
    #[error("row {row}, column {column:?}: cannot parse {value:?} as {expected}")]
    TypeParseError {
        row: usize,
        column: String,
        value: String,
        expected: ColumnType,
    },
    #[error("row {row} has {got} values, schema has {want} columns")]
    RowWidth { row: usize, got: usize, want: usize },
    #[error("row {row}, column {column:?}: expected {want}, got {got}")]
    RowType {
        row: usize,
        column: String,
        want: ColumnType,
        got: ColumnType,
    },
    #[error("schema file line {line}: {message}")]
    SchemaFile { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Ordered columns plus the designated join attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    columns: Vec<(String, ColumnType)>,
    key_column: String,
    key_index: usize,
}

impl Schema {
    pub fn new(
        columns: Vec<(String, ColumnType)>,
        key_column: &str,
    ) -> Result<Self, RelationError> {
        for (i, (name, _)) in columns.iter().enumerate() {
            if columns[..i].iter().any(|(n, _)| n == name) {
                return Err(RelationError::DuplicateColumn(name.clone()));
            }
        }
        let key_index = columns
            .iter()
            .position(|(n, _)| n == key_column)
            .ok_or_else(|| RelationError::UnknownKeyColumn(key_column.to_string()))?;
        Ok(Self {
            columns,
            key_column: key_column.to_string(),
            key_index,
        })
    }

    #[inline]
    pub fn columns(&self) -> &[(String, ColumnType)] {
        &self.columns
    }

    #[inline]
    pub fn key_column(&self) -> &str {
        &self.key_column
    }

    #[inline]
    pub fn key_index(&self) -> usize {
        self.key_index
    }

    #[inline]
    pub fn key_type(&self) -> ColumnType {
        self.columns[self.key_index].1
    }

    /// Parses the sidecar format: one `column=<name>:<type>` line per
    /// column in order, one `key=<name>` line, `#` comments and blank
    /// lines ignored.
    pub fn from_sidecar_str(text: &str) -> Result<Self, RelationError> {
        let mut columns = Vec::new();
        let mut key = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("column=") {
                let (name, ty_name) = rest.split_once(':').ok_or(RelationError::SchemaFile {
                    line: line_no,
                    message: format!("expected column=<name>:<type>, got {line:?}"),
                })?;
                let ty = ColumnType::parse_name(ty_name).ok_or(RelationError::SchemaFile {
                    line: line_no,
                    message: format!("unknown type {ty_name:?}"),
                })?;
                columns.push((name.to_string(), ty));
            } else if let Some(name) = line.strip_prefix("key=") {
                if key.is_some() {
                    return Err(RelationError::SchemaFile {
                        line: line_no,
                        message: "key declared twice".to_string(),
                    });
                }
                key = Some(name.to_string());
            } else {
                return Err(RelationError::SchemaFile {
                    line: line_no,
                    message: format!("unrecognized line {line:?}"),
                });
            }
        }
        let key = key.ok_or(RelationError::SchemaFile {
            line: text.lines().count(),
            message: "no key=<name> line".to_string(),
        })?;
        Schema::new(columns, &key)
    }

    pub fn load_sidecar(path: &Path) -> Result<Self, RelationError> {
        Self::from_sidecar_str(&fs::read_to_string(path)?)
    }

    pub fn to_sidecar_string(&self) -> String {
        let mut out = String::new();
        for (name, ty) in &self.columns {
            out.push_str(&format!("column={name}:{ty}\n"));
        }
        out.push_str(&format!("key={}\n", self.key_column));
        out
    }
}

/// An immutable typed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    schema: Schema,
    rows: Vec<Tuple>,
}

impl Relation {
    /// Builds a relation, checking every row against the schema.
    pub fn new(schema: Schema, rows: Vec<Tuple>) -> Result<Self, RelationError> {
        for (i, row) in rows.iter().enumerate() {
            let row_no = i + 1;
            if row.len() != schema.columns.len() {
                return Err(RelationError::RowWidth {
                    row: row_no,
                    got: row.len(),
                    want: schema.columns.len(),
                });
            }
            for ((name, want), value) in schema.columns.iter().zip(row) {
                if value.column_type() != *want {
                    return Err(RelationError::RowType {
                        row: row_no,
                        column: name.clone(),
                        want: *want,
                        got: value.column_type(),
                    });
                }
            }
        }
        Ok(Self { schema, rows })
    }

    #[inline]
    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    #[inline]
    pub fn rows(&self) -> &[Tuple] {
        &self.rows
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Key bytes of one row, per [`Value::key_bytes`].
    #[inline]
    pub fn key_of(&self, row: usize) -> Cow<'_, [u8]> {
        self.rows[row][self.schema.key_index].key_bytes()
    }

    /// Reads a CSV file whose header names and order must match `schema`.
    /// Error rows are numbered like a text editor would: the header is
    /// row 1, the first data row is row 2.
    pub fn load_csv(path: &Path, schema: &Schema) -> Result<Self, RelationError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path)?;

        let header = reader.headers()?.clone();
        for (i, name) in header.iter().enumerate() {
            if header.iter().take(i).any(|h| h == name) {
                return Err(RelationError::DuplicateHeader(name.to_string()));
            }
        }
        for (name, _) in &schema.columns {
            if !header.iter().any(|h| h == name) {
                return Err(RelationError::MissingColumn(name.clone()));
            }
        }
        for name in header.iter() {
            if !schema.columns.iter().any(|(n, _)| n == name) {
                return Err(RelationError::UnexpectedColumn(name.to_string()));
            }
        }
        // By elimination the header is a permutation; require the
        // schema's order as well.
        for ((name, _), got) in schema.columns.iter().zip(header.iter()) {
            if name != got {
                return Err(RelationError::MissingColumn(name.clone()));
            }
        }

        let mut rows = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let row_no = i + 2;
            let record = record?;
            let mut row = Vec::with_capacity(schema.columns.len());
            for ((name, ty), text) in schema.columns.iter().zip(record.iter()) {
                let value =
                    Value::parse(text, *ty).ok_or_else(|| RelationError::TypeParseError {
                        row: row_no,
                        column: name.clone(),
                        value: text.to_string(),
                        expected: *ty,
                    })?;
                row.push(value);
            }
            rows.push(row);
        }
        Ok(Self {
            schema: schema.clone(),
            rows,
        })
    }

    /// Writes header plus rows, quoting only where RFC 4180 requires it.
    pub fn emit_csv<W: io::Write>(&self, out: W) -> Result<(), RelationError> {
        let mut writer = csv::WriterBuilder::new()
            .quote_style(csv::QuoteStyle::Necessary)
            .from_writer(out);
        writer.write_record(self.schema.columns.iter().map(|(n, _)| n.as_str()))?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| v.render()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn emit_csv_path(&self, path: &Path) -> Result<(), RelationError> {
        let file = fs::File::create(path)?;
        self.emit_csv(io::BufWriter::new(file))
    }
}
