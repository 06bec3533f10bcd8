//! Schemaless document engine with an automatic ordered index on every field.
//!
//! Queries may constrain any number of fields by equality but at most one
//! field by inequality. The inequality field's index locates the candidate
//! range; every remaining condition is then checked per candidate.

mod index;

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    matches_all, CompareOp, Condition, Document, FieldValue, ModelError, QuerySpec, ScanStats,
    MAX_DOCUMENT_BYTES,
};
use index::{Entry, OrderedIndex, Probe};

#[derive(Debug, Error)]
pub enum DocStoreError {
    #[error("collection name must not be empty")]
    EmptyName,
    #[error("collection `{0}` already exists")]
    DuplicateCollection(String),
    #[error("collection `{0}` does not exist")]
    UnknownCollection(String),
    #[error("document `{0}` already exists")]
    DuplicateKey(String),
    #[error("document `{key}` is {size} bytes serialized (limit {MAX_DOCUMENT_BYTES})")]
    DocumentTooLarge { key: String, size: usize },
    #[error("document `{0}` not found")]
    NotFound(String),
    #[error("inequality conditions on more than one field: {}", .0.join(", "))]
    MultipleInequalityFields(Vec<String>),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DocStoreError> = std::result::Result<T, E>;

/// Header line of a collection snapshot file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub collection: String,
    pub count: usize,
}

/// Named collections. Each collection is independent; `&`/`&mut` access gives
/// the readers-writer contract.
#[derive(Debug, Default)]
pub struct DocStore {
    collections: HashMap<String, Collection>,
}

impl DocStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_collection(&mut self, name: &str) -> Result<&mut Collection> {
        if name.is_empty() {
            return Err(DocStoreError::EmptyName);
        }
        if self.collections.contains_key(name) {
            return Err(DocStoreError::DuplicateCollection(name.to_string()));
        }
        Ok(self
            .collections
            .entry(name.to_string())
            .or_insert_with(|| Collection::new(name)))
    }

    pub fn collection(&self, name: &str) -> Result<&Collection> {
        self.collections
            .get(name)
            .ok_or_else(|| DocStoreError::UnknownCollection(name.to_string()))
    }

    pub fn collection_mut(&mut self, name: &str) -> Result<&mut Collection> {
        self.collections
            .get_mut(name)
            .ok_or_else(|| DocStoreError::UnknownCollection(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.collections.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone)]
pub struct Collection {
    name: String,
    docs: IndexMap<Arc<str>, Document>,
    indices: HashMap<String, OrderedIndex>,
}

impl Collection {
    pub fn new(name: &str) -> Self {
        Collection {
            name: name.to_string(),
            docs: IndexMap::new(),
            indices: HashMap::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn check_size(doc: &Document) -> Result<()> {
        let size = doc.serialized_size();
        if size > MAX_DOCUMENT_BYTES {
            return Err(DocStoreError::DocumentTooLarge {
                key: doc.key().to_string(),
                size,
            });
        }
        Ok(())
    }

    pub fn insert(&mut self, doc: Document) -> Result<ScanStats> {
        if self.docs.contains_key(doc.key()) {
            return Err(DocStoreError::DuplicateKey(doc.key().to_string()));
        }
        Self::check_size(&doc)?;
        let key: Arc<str> = Arc::from(doc.key());
        let mut comparisons = 0;
        for (field, value) in doc.fields() {
            self.indices
                .entry(field.to_string())
                .or_default()
                .insert(value.clone(), key.clone(), &mut comparisons);
        }
        self.docs.insert(key, doc);
        Ok(ScanStats {
            index_comparisons: comparisons,
            ..Default::default()
        })
    }

    /// Load many documents at once. Into an empty collection the indices are
    /// built by a single sort per field; otherwise this is repeated `insert`.
    /// Either all documents are loaded or none.
    pub fn bulk_load(&mut self, docs: Vec<Document>) -> Result<()> {
        let mut seen = std::collections::HashSet::with_capacity(docs.len());
        for doc in &docs {
            if self.docs.contains_key(doc.key()) || !seen.insert(doc.key()) {
                return Err(DocStoreError::DuplicateKey(doc.key().to_string()));
            }
            Self::check_size(doc)?;
        }
        drop(seen);
        if !self.docs.is_empty() {
            for doc in docs {
                self.insert(doc)?;
            }
            return Ok(());
        }
        let mut per_field: HashMap<String, Vec<Entry>> = HashMap::new();
        self.docs.reserve(docs.len());
        for doc in docs {
            let key: Arc<str> = Arc::from(doc.key());
            for (field, value) in doc.fields() {
                per_field.entry(field.to_string()).or_default().push(Entry {
                    value: value.clone(),
                    key: key.clone(),
                });
            }
            self.docs.insert(key, doc);
        }
        self.indices = per_field
            .into_iter()
            .map(|(f, entries)| (f, OrderedIndex::bulk(entries)))
            .collect();
        Ok(())
    }

    /// Primary-key lookup: one document examined, independent of size.
    pub fn get(&self, key: &str) -> Result<(Document, ScanStats)> {
        let doc = self
            .docs
            .get(key)
            .ok_or_else(|| DocStoreError::NotFound(key.to_string()))?;
        Ok((
            doc.clone(),
            ScanStats {
                docs_examined: 1,
                ..Default::default()
            },
        ))
    }

    /// Replace or add fields on an existing document and maintain every
    /// affected index. Applied all-or-nothing.
    pub fn update<'a>(
        &mut self,
        key: &str,
        changed: impl IntoIterator<Item = (&'a str, FieldValue)>,
    ) -> Result<ScanStats> {
        let current = self
            .docs
            .get(key)
            .ok_or_else(|| DocStoreError::NotFound(key.to_string()))?;
        let mut next = current.clone();
        for (field, value) in changed {
            next.set(field, value)?;
        }
        Self::check_size(&next)?;

        let (_, shared_key, old) = self.docs.get_full(key).expect("checked above");
        let shared_key = shared_key.clone();
        let mut comparisons = 0;
        for (field, value) in next.fields() {
            let previous = old.get(field);
            if previous.is_some_and(|p| p == value && same_repr(p, value)) {
                continue;
            }
            let index = self.indices.entry(field.to_string()).or_default();
            if let Some(p) = previous {
                index.remove(p, key, &mut comparisons);
            }
            index.insert(value.clone(), shared_key.clone(), &mut comparisons);
        }
        self.docs.insert(shared_key, next);
        Ok(ScanStats {
            docs_examined: 1,
            index_comparisons: comparisons,
            rows_scanned: 0,
        })
    }

    pub fn read_all(&self) -> (Vec<Document>, ScanStats) {
        let docs: Vec<Document> = self.docs.values().cloned().collect();
        let stats = ScanStats {
            docs_examined: docs.len() as u64,
            ..Default::default()
        };
        (docs, stats)
    }

    /// Borrowing iterator over all documents in insertion order.
    pub fn documents(&self) -> impl Iterator<Item = &Document> {
        self.docs.values()
    }

    pub fn query(&self, spec: &QuerySpec) -> Result<(Vec<Document>, ScanStats)> {
        spec.validate()?;
        let inequality = spec.inequality_fields();
        if inequality.len() > 1 {
            return Err(DocStoreError::MultipleInequalityFields(
                inequality.into_iter().map(String::from).collect(),
            ));
        }
        let mut stats = ScanStats::default();

        let candidates: Vec<&Document> = match inequality.first() {
            Some(field) => self.range_candidates(field, &spec.conditions, &mut stats),
            None => match spec.conditions.first() {
                Some(eq) => self.equality_candidates(eq, &mut stats),
                None => self.docs.values().collect(),
            },
        };
        if spec.conditions.is_empty() {
            stats.docs_examined = candidates.len() as u64;
        }

        let limit = spec.limit.unwrap_or(usize::MAX);
        let out = candidates
            .into_iter()
            .filter(|d| matches_all(d, &spec.conditions))
            .take(limit)
            .map(|d| match &spec.projection {
                Some(p) => d.project(p),
                None => d.clone(),
            })
            .collect();
        Ok((out, stats))
    }

    fn range_candidates(
        &self,
        field: &str,
        conditions: &[Condition],
        stats: &mut ScanStats,
    ) -> Vec<&Document> {
        let bounds: Vec<&Condition> = conditions
            .iter()
            .filter(|c| c.field == field && c.op.is_inequality())
            .collect();
        let class = bounds[0].value.class();
        if bounds.iter().any(|c| c.value.class() != class) {
            return Vec::new();
        }
        let Some(index) = self.indices.get(field) else {
            return Vec::new();
        };
        let mut lower = Probe::ClassStart(class);
        let mut upper = Probe::ClassEnd(class);
        for c in &bounds {
            match c.op {
                CompareOp::Ge => lower = Probe::Before(&c.value),
                CompareOp::Gt => lower = Probe::After(&c.value),
                CompareOp::Le => upper = Probe::After(&c.value),
                CompareOp::Lt => upper = Probe::Before(&c.value),
                CompareOp::Eq => unreachable!("filtered to inequalities"),
            }
        }
        self.collect_range(index, lower, upper, stats)
    }

    fn equality_candidates(&self, eq: &Condition, stats: &mut ScanStats) -> Vec<&Document> {
        match self.indices.get(&eq.field) {
            Some(index) => {
                self.collect_range(index, Probe::Before(&eq.value), Probe::After(&eq.value), stats)
            }
            None => Vec::new(),
        }
    }

    fn collect_range(
        &self,
        index: &OrderedIndex,
        lower: Probe<'_>,
        upper: Probe<'_>,
        stats: &mut ScanStats,
    ) -> Vec<&Document> {
        let start = index.rank_of(lower, &mut stats.index_comparisons);
        let end = index.rank_of(upper, &mut stats.index_comparisons);
        if start >= end {
            return Vec::new();
        }
        let docs: Vec<&Document> = index
            .range(start, end)
            .map(|e| &self.docs[&e.key])
            .collect();
        stats.docs_examined = docs.len() as u64;
        docs
    }

    pub fn indexed_fields(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.indices.keys().map(String::as_str).collect();
        v.sort_unstable();
        v
    }

    /// The `(value, key)` entries of one field's index in index order.
    pub fn index_entries(&self, field: &str) -> Option<Vec<(FieldValue, String)>> {
        self.indices.get(field).map(|idx| {
            idx.iter()
                .map(|e| (e.value.clone(), e.key.to_string()))
                .collect()
        })
    }

    pub fn write_snapshot(&self, mut out: impl Write) -> Result<()> {
        let header = SnapshotHeader {
            collection: self.name.clone(),
            count: self.docs.len(),
        };
        writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
        for doc in self.docs.values() {
            writeln!(out, "{}", doc.to_json_line())?;
        }
        Ok(())
    }

    pub fn read_snapshot(input: impl BufRead) -> Result<Collection> {
        let mut lines = input.lines();
        let first = lines
            .next()
            .ok_or_else(|| DocStoreError::Snapshot("empty snapshot".into()))??;
        let header: SnapshotHeader = serde_json::from_str(&first)
            .map_err(|e| DocStoreError::Snapshot(format!("bad header: {e}")))?;
        let mut docs = Vec::with_capacity(header.count);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            docs.push(Document::from_json_line(&line)?);
        }
        if docs.len() != header.count {
            return Err(DocStoreError::Snapshot(format!(
                "header declares {} documents, found {}",
                header.count,
                docs.len()
            )));
        }
        let mut coll = Collection::new(&header.collection);
        coll.bulk_load(docs)?;
        Ok(coll)
    }
}

/// Integer 1 and float 1.0 compare equal but are distinct stored values.
fn same_repr(a: &FieldValue, b: &FieldValue) -> bool {
    matches!(
        (a, b),
        (FieldValue::Integer(_), FieldValue::Integer(_))
            | (FieldValue::Number(_), FieldValue::Number(_))
            | (FieldValue::Text(_), FieldValue::Text(_))
    )
}
