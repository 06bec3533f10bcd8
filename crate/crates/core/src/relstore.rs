//! Schema-enforced relational engine.
//!
//! Tables carry no secondary indexes: every select is a full scan except a
//! lone equality on the primary key, which resolves by key lookup.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{matches_all, CompareOp, Condition, Document, FieldValue, ScanStats};

#[derive(Debug, Error)]
pub enum RelStoreError {
    #[error("table name must not be empty")]
    EmptyName,
    #[error("table `{0}` already exists")]
    DuplicateTable(String),
    #[error("table `{0}` does not exist")]
    UnknownTable(String),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema violation on `{column}`: {reason}")]
    SchemaViolation { column: String, reason: ViolationReason },
    #[error("row with primary key {0} already exists")]
    DuplicateKey(String),
    #[error("row with primary key {0} not found")]
    NotFound(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = RelStoreError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationReason {
    Missing,
    Type,
    Unknown,
}

impl std::fmt::Display for ViolationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ViolationReason::Missing => "missing",
            ViolationReason::Type => "type",
            ViolationReason::Unknown => "unknown column",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Number,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub column_type: ColumnType,
    #[serde(default = "default_required")]
    pub required: bool,
}

fn default_required() -> bool {
    true
}

impl Column {
    pub fn new(name: &str, column_type: ColumnType) -> Self {
        Column {
            name: name.to_string(),
            column_type,
            required: true,
        }
    }

    pub fn optional(mut self) -> Self {
        self.required = false;
        self
    }

    /// Type-check a value, widening integers into number columns.
    fn coerce(&self, value: &FieldValue) -> Option<FieldValue> {
        match (self.column_type, value) {
            (ColumnType::Text, FieldValue::Text(_))
            | (ColumnType::Integer, FieldValue::Integer(_))
            | (ColumnType::Number, FieldValue::Number(_)) => Some(value.clone()),
            (ColumnType::Number, FieldValue::Integer(i)) => Some(FieldValue::Number(*i as f64)),
            _ => None,
        }
    }
}

/// Column list plus primary key. Also the JSON header of a table snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
    pub primary_key: String,
}

impl Schema {
    pub fn new(columns: Vec<Column>, primary_key: &str) -> Result<Self> {
        let schema = Schema {
            columns,
            primary_key: primary_key.to_string(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if c.name.is_empty() {
                return Err(RelStoreError::InvalidSchema("empty column name".into()));
            }
            if !seen.insert(c.name.as_str()) {
                return Err(RelStoreError::InvalidSchema(format!("duplicate column `{}`", c.name)));
            }
        }
        match self.column(&self.primary_key) {
            None => Err(RelStoreError::InvalidSchema(format!(
                "primary key `{}` is not a column",
                self.primary_key
            ))),
            Some(c) if !c.required => Err(RelStoreError::InvalidSchema(format!(
                "primary key `{}` must be required",
                self.primary_key
            ))),
            Some(_) => Ok(()),
        }
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// The six-column charger table keyed by `id`.
    pub fn chargers() -> Schema {
        Schema::new(
            vec![
                Column::new("id", ColumnType::Integer),
                Column::new("name", ColumnType::Text),
                Column::new("address", ColumnType::Text),
                Column::new("latitude", ColumnType::Number),
                Column::new("longitude", ColumnType::Number),
                Column::new("type", ColumnType::Text),
            ],
            "id",
        )
        .expect("static schema is valid")
    }

    /// The charger table plus an optional `geohash` text column when any of
    /// `docs` carries one.
    pub fn chargers_for(docs: &[Document]) -> Schema {
        let mut schema = Schema::chargers();
        if docs.iter().any(|d| d.get(crate::geohash::FIELD).is_some()) {
            schema
                .columns
                .push(Column::new(crate::geohash::FIELD, ColumnType::Text).optional());
        }
        schema
    }
}

/// Primary-key values ordered by the index total order.
#[derive(Debug, Clone)]
struct PkValue(FieldValue);

impl PartialEq for PkValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other).is_eq()
    }
}
impl Eq for PkValue {}
impl PartialOrd for PkValue {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PkValue {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Default)]
pub struct RelStore {
    tables: HashMap<String, Table>,
}

impl RelStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_table(&mut self, name: &str, schema: Schema) -> Result<&mut Table> {
        if name.is_empty() {
            return Err(RelStoreError::EmptyName);
        }
        if self.tables.contains_key(name) {
            return Err(RelStoreError::DuplicateTable(name.to_string()));
        }
        let table = Table::new(name, schema)?;
        Ok(self.tables.entry(name.to_string()).or_insert(table))
    }

    pub fn table(&self, name: &str) -> Result<&Table> {
        self.tables
            .get(name)
            .ok_or_else(|| RelStoreError::UnknownTable(name.to_string()))
    }

    pub fn table_mut(&mut self, name: &str) -> Result<&mut Table> {
        self.tables
            .get_mut(name)
            .ok_or_else(|| RelStoreError::UnknownTable(name.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    schema: Schema,
    rows: BTreeMap<PkValue, Document>,
}

impl Table {
    pub fn new(name: &str, schema: Schema) -> Result<Self> {
        schema.validate()?;
        Ok(Table {
            name: name.to_string(),
            schema,
            rows: BTreeMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Always empty: the engine never builds secondary indexes.
    pub fn secondary_indexes(&self) -> Vec<String> {
        Vec::new()
    }

    /// Check a full row against the schema, producing the stored form with
    /// columns in schema order.
    fn conform(&self, row: &Document) -> Result<Document> {
        for (name, _) in row.fields() {
            if self.schema.column(name).is_none() {
                return Err(RelStoreError::SchemaViolation {
                    column: name.to_string(),
                    reason: ViolationReason::Unknown,
                });
            }
        }
        let pk = row.get(&self.schema.primary_key);
        let key = pk.map(|v| v.to_string()).unwrap_or_default();
        let mut out = Document::new(if key.is_empty() { "_".to_string() } else { key })
            .expect("non-empty key");
        for col in &self.schema.columns {
            match row.get(&col.name) {
                None if col.required => {
                    return Err(RelStoreError::SchemaViolation {
                        column: col.name.clone(),
                        reason: ViolationReason::Missing,
                    })
                }
                None => {}
                Some(v) => {
                    let stored = col.coerce(v).ok_or_else(|| RelStoreError::SchemaViolation {
                        column: col.name.clone(),
                        reason: ViolationReason::Type,
                    })?;
                    out.set(&col.name, stored).expect("column names are non-empty");
                }
            }
        }
        Ok(out)
    }

    /// Insert a row given as field map; the row's own document key is ignored
    /// and replaced by the rendered primary key.
    pub fn insert_row(&mut self, row: &Document) -> Result<ScanStats> {
        let stored = self.conform(row)?;
        let pk = PkValue(stored.get(&self.schema.primary_key).expect("required").clone());
        if self.rows.contains_key(&pk) {
            return Err(RelStoreError::DuplicateKey(pk.0.to_string()));
        }
        self.rows.insert(pk, stored);
        Ok(ScanStats::default())
    }

    fn check_columns(&self, conditions: &[Condition]) -> Result<()> {
        for c in conditions {
            if self.schema.column(&c.field).is_none() {
                return Err(RelStoreError::UnknownColumn(c.field.clone()));
            }
        }
        Ok(())
    }

    pub fn get(&self, pk: &FieldValue) -> Option<&Document> {
        self.rows.get(&PkValue(pk.clone()))
    }

    /// Multi-predicate select with any number of inequality columns.
    pub fn select(&self, conditions: &[Condition]) -> Result<(Vec<Document>, ScanStats)> {
        self.check_columns(conditions)?;
        if let [c] = conditions {
            if c.op == CompareOp::Eq && c.field == self.schema.primary_key {
                let hit = self.get(&c.value).cloned();
                let stats = ScanStats {
                    docs_examined: 1,
                    rows_scanned: hit.is_some() as u64,
                    ..Default::default()
                };
                return Ok((hit.into_iter().collect(), stats));
            }
        }
        let rows = self
            .rows
            .values()
            .filter(|r| matches_all(r, conditions))
            .cloned()
            .collect();
        Ok((
            rows,
            ScanStats {
                rows_scanned: self.rows.len() as u64,
                ..Default::default()
            },
        ))
    }

    /// Atomically change columns of one row.
    pub fn update_row<'a>(
        &mut self,
        pk: &FieldValue,
        changed: impl IntoIterator<Item = (&'a str, FieldValue)>,
    ) -> Result<ScanStats> {
        let key = PkValue(pk.clone());
        let current = self
            .rows
            .get(&key)
            .ok_or_else(|| RelStoreError::NotFound(pk.to_string()))?;
        let mut next = current.clone();
        for (column, value) in changed {
            if self.schema.column(column).is_none() {
                return Err(RelStoreError::SchemaViolation {
                    column: column.to_string(),
                    reason: ViolationReason::Unknown,
                });
            }
            next.set(column, value).expect("column names are non-empty");
        }
        let stored = self.conform(&next)?;
        let new_pk = PkValue(stored.get(&self.schema.primary_key).expect("required").clone());
        if new_pk != key {
            if self.rows.contains_key(&new_pk) {
                return Err(RelStoreError::DuplicateKey(new_pk.0.to_string()));
            }
            self.rows.remove(&key);
        }
        self.rows.insert(new_pk, stored);
        Ok(ScanStats {
            rows_scanned: 1,
            ..Default::default()
        })
    }

    pub fn read_all(&self) -> (Vec<Document>, ScanStats) {
        let rows: Vec<Document> = self.rows.values().cloned().collect();
        let stats = ScanStats {
            rows_scanned: rows.len() as u64,
            ..Default::default()
        };
        (rows, stats)
    }

    pub fn rows(&self) -> impl Iterator<Item = &Document> {
        self.rows.values()
    }

    pub fn write_snapshot(&self, mut out: impl Write) -> Result<()> {
        let header = serde_json::json!({
            "table": self.name,
            "columns": self.schema.columns,
            "primary_key": self.schema.primary_key,
        });
        writeln!(out, "{header}")?;
        for row in self.rows.values() {
            writeln!(out, "{}", row.to_json_line())?;
        }
        Ok(())
    }

    pub fn read_snapshot(input: impl BufRead) -> Result<Table> {
        #[derive(Deserialize)]
        struct Header {
            #[serde(default = "default_table")]
            table: String,
            #[serde(flatten)]
            schema: Schema,
        }
        fn default_table() -> String {
            "chargers".into()
        }
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| RelStoreError::Snapshot("empty snapshot".into()))??;
        let header: Header = serde_json::from_str(&first)
            .map_err(|e| RelStoreError::Snapshot(format!("bad header: {e}")))?;
        let mut table = Table::new(&header.table, header.schema)?;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row = Document::from_json_line(&line)
                .map_err(|e| RelStoreError::Snapshot(e.to_string()))?;
            table.insert_row(&row)?;
        }
        Ok(table)
    }
}
