//! Shared domain types: field values, documents, predicates and work counters,
//! plus the brute-force predicate oracle every engine is checked against.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// Documents larger than this (serialized) are rejected by the engines.
pub const MAX_DOCUMENT_BYTES: usize = 1024 * 1024;

/// Field name that carries the document key in the JSON-lines format.
pub const KEY_FIELD: &str = "_key";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("number is not finite: {0}")]
    NonFinite(f64),
    #[error("document key must not be empty")]
    EmptyKey,
    #[error("field name must not be empty")]
    EmptyFieldName,
    #[error("field `{0}` has an unsupported JSON value (only strings and numbers are allowed)")]
    UnsupportedValue(String),
    #[error("document line is not a JSON object")]
    NotAnObject,
    #[error("document line has no string `_key`")]
    MissingKey,
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("query has more than one {op} bound on field `{field}`")]
    DuplicateBound { field: String, op: CompareOp },
    #[error("limit must be positive")]
    ZeroLimit,
}

/// A scalar stored in a document field.
///
/// `Number` is always finite; construct through [`FieldValue::number`] or
/// `TryFrom<f64>` to keep that invariant.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum FieldValue {
    Text(String),
    Integer(i64),
    Number(f64),
}

/// Comparison class: values only compare meaningfully within a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ValueClass {
    Numeric,
    Text,
}

impl FieldValue {
    pub fn number(v: f64) -> Result<Self, ModelError> {
        if v.is_finite() {
            Ok(FieldValue::Number(v))
        } else {
            Err(ModelError::NonFinite(v))
        }
    }

    pub fn text(s: impl Into<String>) -> Self {
        FieldValue::Text(s.into())
    }

    pub fn class(&self) -> ValueClass {
        match self {
            FieldValue::Text(_) => ValueClass::Text,
            FieldValue::Integer(_) | FieldValue::Number(_) => ValueClass::Numeric,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            FieldValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            FieldValue::Integer(i) => Some(*i as f64),
            FieldValue::Number(f) => Some(*f),
            FieldValue::Text(_) => None,
        }
    }

    /// Compare two values of the same class. Integers and floats compare by
    /// exact numeric value; text compares by code point.
    pub fn partial_compare(&self, other: &FieldValue) -> Option<Ordering> {
        use FieldValue::*;
        match (self, other) {
            (Text(a), Text(b)) => Some(a.as_str().cmp(b.as_str())),
            (Integer(a), Integer(b)) => Some(a.cmp(b)),
            (Number(a), Number(b)) => a.partial_cmp(b),
            (Integer(a), Number(b)) => Some(cmp_int_float(*a, *b)),
            (Number(a), Integer(b)) => Some(cmp_int_float(*b, *a).reverse()),
            _ => None,
        }
    }

    /// Total order used by sorted indices: all numbers before all text.
    pub fn total_cmp(&self, other: &FieldValue) -> Ordering {
        self.partial_compare(other)
            .unwrap_or_else(|| self.class().cmp(&other.class()))
    }

    pub fn to_json(&self) -> Value {
        match self {
            FieldValue::Text(s) => Value::String(s.clone()),
            FieldValue::Integer(i) => Value::from(*i),
            FieldValue::Number(f) => Value::from(*f),
        }
    }

    pub fn from_json(field: &str, v: &Value) -> Result<Self, ModelError> {
        match v {
            Value::String(s) => Ok(FieldValue::Text(s.clone())),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(FieldValue::Integer(i))
                } else if let Some(f) = n.as_f64() {
                    FieldValue::number(f)
                } else {
                    Err(ModelError::UnsupportedValue(field.to_string()))
                }
            }
            _ => Err(ModelError::UnsupportedValue(field.to_string())),
        }
    }
}

/// Exact comparison of an integer with a finite float.
fn cmp_int_float(i: i64, f: f64) -> Ordering {
    // 2^63 is exactly representable; every i64 is below it.
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if f >= TWO_63 {
        return Ordering::Less;
    }
    if f < -TWO_63 {
        return Ordering::Greater;
    }
    let whole = f.trunc();
    match i.cmp(&(whole as i64)) {
        Ordering::Equal => 0.0_f64.partial_cmp(&(f - whole)).unwrap_or(Ordering::Equal),
        ord => ord,
    }
}

impl PartialEq for FieldValue {
    fn eq(&self, other: &Self) -> bool {
        self.partial_compare(other) == Some(Ordering::Equal)
    }
}

impl TryFrom<f64> for FieldValue {
    type Error = ModelError;
    fn try_from(v: f64) -> Result<Self, ModelError> {
        FieldValue::number(v)
    }
}

impl From<i64> for FieldValue {
    fn from(v: i64) -> Self {
        FieldValue::Integer(v)
    }
}

impl From<&str> for FieldValue {
    fn from(v: &str) -> Self {
        FieldValue::Text(v.to_string())
    }
}

impl From<String> for FieldValue {
    fn from(v: String) -> Self {
        FieldValue::Text(v)
    }
}

impl<'de> Deserialize<'de> for FieldValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Value::deserialize(d)?;
        FieldValue::from_json("value", &v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for FieldValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldValue::Text(s) => f.write_str(s),
            FieldValue::Integer(i) => write!(f, "{i}"),
            FieldValue::Number(n) => write!(f, "{n}"),
        }
    }
}

/// A key-addressed, schemaless record. Fields keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    key: String,
    fields: Vec<(String, FieldValue)>,
}

impl Document {
    pub fn new(key: impl Into<String>) -> Result<Self, ModelError> {
        let key = key.into();
        if key.is_empty() {
            return Err(ModelError::EmptyKey);
        }
        Ok(Document {
            key,
            fields: Vec::new(),
        })
    }

    /// Builder-style field setter. Panics on an empty field name.
    pub fn with(mut self, name: &str, value: impl Into<FieldValue>) -> Self {
        self.set(name, value.into()).expect("non-empty field name");
        self
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn get(&self, name: &str) -> Option<&FieldValue> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, v)| v)
    }

    /// Set a field, replacing in place if present and appending otherwise.
    /// Returns the previous value.
    pub fn set(&mut self, name: &str, value: FieldValue) -> Result<Option<FieldValue>, ModelError> {
        if name.is_empty() {
            return Err(ModelError::EmptyFieldName);
        }
        if let Some(slot) = self.fields.iter_mut().find(|(n, _)| n == name) {
            return Ok(Some(std::mem::replace(&mut slot.1, value)));
        }
        self.fields.push((name.to_string(), value));
        Ok(None)
    }

    pub fn fields(&self) -> impl Iterator<Item = (&str, &FieldValue)> {
        self.fields.iter().map(|(n, v)| (n.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    /// Keep only the named fields, in the order given.
    pub fn project(&self, names: &[String]) -> Document {
        let fields = names
            .iter()
            .filter_map(|n| self.get(n).map(|v| (n.clone(), v.clone())))
            .collect();
        Document {
            key: self.key.clone(),
            fields,
        }
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::with_capacity(self.fields.len() + 1);
        map.insert(KEY_FIELD.to_string(), Value::String(self.key.clone()));
        for (n, v) in &self.fields {
            map.insert(n.clone(), v.to_json());
        }
        Value::Object(map)
    }

    pub fn from_json(value: &Value) -> Result<Self, ModelError> {
        let map = value.as_object().ok_or(ModelError::NotAnObject)?;
        let key = map
            .get(KEY_FIELD)
            .and_then(Value::as_str)
            .ok_or(ModelError::MissingKey)?;
        let mut doc = Document::new(key)?;
        for (n, v) in map {
            if n == KEY_FIELD {
                continue;
            }
            doc.set(n, FieldValue::from_json(n, v)?)?;
        }
        Ok(doc)
    }

    /// One JSON-lines record.
    pub fn to_json_line(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json_line(line: &str) -> Result<Self, ModelError> {
        let v: Value = serde_json::from_str(line).map_err(|e| ModelError::Json(e.to_string()))?;
        Document::from_json(&v)
    }

    pub fn serialized_size(&self) -> usize {
        self.to_json_line().len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CompareOp {
    Eq,
    Ge,
    Le,
    Gt,
    Lt,
}

impl CompareOp {
    pub fn is_inequality(self) -> bool {
        !matches!(self, CompareOp::Eq)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ge => ">=",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Lt => "<",
        }
    }

    fn accepts(self, ord: Ordering) -> bool {
        match self {
            CompareOp::Eq => ord == Ordering::Equal,
            CompareOp::Ge => ord != Ordering::Less,
            CompareOp::Le => ord != Ordering::Greater,
            CompareOp::Gt => ord == Ordering::Greater,
            CompareOp::Lt => ord == Ordering::Less,
        }
    }
}

impl fmt::Display for CompareOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CompareOp::Eq => "EQ",
            CompareOp::Ge => "GE",
            CompareOp::Le => "LE",
            CompareOp::Gt => "GT",
            CompareOp::Lt => "LT",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub field: String,
    pub op: CompareOp,
    pub value: FieldValue,
}

impl Condition {
    pub fn new(field: impl Into<String>, op: CompareOp, value: impl Into<FieldValue>) -> Self {
        Condition {
            field: field.into(),
            op,
            value: value.into(),
        }
    }

    pub fn eq(field: &str, value: impl Into<FieldValue>) -> Self {
        Self::new(field, CompareOp::Eq, value)
    }

    /// Inclusive numeric bounds. Panics on non-finite input.
    pub fn ge(field: &str, value: f64) -> Self {
        Self::new(field, CompareOp::Ge, FieldValue::number(value).expect("finite bound"))
    }

    pub fn le(field: &str, value: f64) -> Self {
        Self::new(field, CompareOp::Le, FieldValue::number(value).expect("finite bound"))
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.field, self.op.symbol(), self.value)
    }
}

/// A conjunctive query with optional limit and projection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub conditions: Vec<Condition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection: Option<Vec<String>>,
}

impl QuerySpec {
    pub fn new(conditions: Vec<Condition>) -> Self {
        QuerySpec {
            conditions,
            ..Default::default()
        }
    }

    /// Field names non-empty, at most one lower and one upper bound per field,
    /// positive limit.
    pub fn validate(&self) -> Result<(), ModelError> {
        let mut lower: Vec<&str> = Vec::new();
        let mut upper: Vec<&str> = Vec::new();
        for c in &self.conditions {
            if c.field.is_empty() {
                return Err(ModelError::EmptyFieldName);
            }
            let seen = match c.op {
                CompareOp::Ge | CompareOp::Gt => &mut lower,
                CompareOp::Le | CompareOp::Lt => &mut upper,
                CompareOp::Eq => continue,
            };
            if seen.contains(&c.field.as_str()) {
                return Err(ModelError::DuplicateBound {
                    field: c.field.clone(),
                    op: c.op,
                });
            }
            seen.push(&c.field);
        }
        if self.limit == Some(0) {
            return Err(ModelError::ZeroLimit);
        }
        Ok(())
    }

    /// Distinct field names carrying inequality operators, in first-seen order.
    pub fn inequality_fields(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in self.conditions.iter().filter(|c| c.op.is_inequality()) {
            if !out.contains(&c.field.as_str()) {
                out.push(&c.field);
            }
        }
        out
    }
}

/// One mock charger registration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargerRecord {
    pub id: u64,
    pub name: String,
    pub address: String,
    pub latitude: f64,
    pub longitude: f64,
    #[serde(rename = "type")]
    pub charger_type: String,
}

impl ChargerRecord {
    /// `"{id}_{address without whitespace}"`.
    pub fn key(&self) -> String {
        derive_key(self.id, &self.address)
    }

    pub fn to_document(&self) -> Document {
        Document::new(self.key())
            .expect("derived keys are never empty")
            .with("id", self.id as i64)
            .with("name", self.name.as_str())
            .with("address", self.address.as_str())
            .with("latitude", FieldValue::Number(self.latitude))
            .with("longitude", FieldValue::Number(self.longitude))
            .with("type", self.charger_type.as_str())
    }
}

pub fn derive_key(id: u64, address: &str) -> String {
    let compact: String = address.chars().filter(|c| !c.is_whitespace()).collect();
    format!("{id}_{compact}")
}

/// Deterministic work counters. They depend only on the data and the query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub docs_examined: u64,
    pub index_comparisons: u64,
    pub rows_scanned: u64,
}

impl Add for ScanStats {
    type Output = ScanStats;
    fn add(self, rhs: ScanStats) -> ScanStats {
        ScanStats {
            docs_examined: self.docs_examined + rhs.docs_examined,
            index_comparisons: self.index_comparisons + rhs.index_comparisons,
            rows_scanned: self.rows_scanned + rhs.rows_scanned,
        }
    }
}

impl AddAssign for ScanStats {
    fn add_assign(&mut self, rhs: ScanStats) {
        *self = *self + rhs;
    }
}

/// True iff the document has the field and its value satisfies the operator.
/// Missing fields and cross-class comparisons never match.
pub fn condition_matches(doc: &Document, cond: &Condition) -> bool {
    doc.get(&cond.field)
        .and_then(|v| v.partial_compare(&cond.value))
        .is_some_and(|ord| cond.op.accepts(ord))
}

pub fn matches_all(doc: &Document, conditions: &[Condition]) -> bool {
    conditions.iter().all(|c| condition_matches(doc, c))
}

/// Reference filter: every document satisfying every condition, input order kept.
pub fn filter_brute_force(docs: &[Document], conditions: &[Condition]) -> Vec<Document> {
    docs.iter()
        .filter(|d| matches_all(d, conditions))
        .cloned()
        .collect()
}

/// The marketplace search used throughout the benchmarks: name, type,
/// and a latitude/longitude box with inclusive bounds.
pub fn canonical_query() -> Vec<Condition> {
    vec![
        Condition::eq("name", "Howard"),
        Condition::ge("latitude", 47.5),
        Condition::le("latitude", 48.0),
        Condition::ge("longitude", -122.5),
        Condition::le("longitude", -122.1),
        Condition::eq("type", "level2"),
    ]
}

/// The latitude-only range half of [`canonical_query`].
pub fn latitude_range() -> Vec<Condition> {
    vec![Condition::ge("latitude", 47.5), Condition::le("latitude", 48.0)]
}

/// Everything in [`canonical_query`] except the latitude range.
pub fn non_latitude_conditions() -> Vec<Condition> {
    canonical_query()
        .into_iter()
        .filter(|c| c.field != "latitude")
        .collect()
}

/// Three-document reference fixture.
pub fn fixture_f3() -> Vec<ChargerRecord> {
    let rec = |id, name: &str, address: &str, latitude, longitude, ty: &str| ChargerRecord {
        id,
        name: name.into(),
        address: address.into(),
        latitude,
        longitude,
        charger_type: ty.into(),
    };
    vec![
        rec(1, "Howard", "11899 118th Ave", 47.9, -122.5, "level2"),
        rec(2, "Gomez", "10000 Cedar Ct", 43.19, -124.9, "level1"),
        rec(3, "Howard", "11000 119th Ave", 47.9, -120.1, "level2"),
    ]
}

pub fn fixture_f3_documents() -> Vec<Document> {
    fixture_f3().iter().map(ChargerRecord::to_document).collect()
}
