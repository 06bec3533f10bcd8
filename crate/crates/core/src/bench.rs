//! Workload harness: runs each experiment against a freshly built engine,
//! records wall-clock time next to the deterministic work counters, and
//! derives throughput metrics.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::{self, DataGenError, GenSpec};
use crate::docstore::{Collection, DocStoreError};
use crate::model::{
    canonical_query, filter_brute_force, latitude_range, matches_all, non_latitude_conditions, CompareOp,
    Condition, Document, FieldValue, QuerySpec, ScanStats,
};
use crate::queryir::{self, ApiSchema, PrepareError};
use crate::relstore::{RelStoreError, Schema, Table};

pub const DEFAULT_SIZES: [u64; 6] = [10, 100, 1_000, 10_000, 100_000, 1_000_000];
pub const DEFAULT_AVG_DOC_BYTES: f64 = 76.0;
/// Iterative workloads at or above this size need `allow_large_iterative`.
pub const ITERATIVE_GATE: u64 = 1_000_000;

pub const CSV_COLUMNS: [&str; 11] = [
    "workload",
    "engine",
    "n",
    "r",
    "r_prime",
    "elapsed_ms",
    "op_count",
    "bytes",
    "docs_examined",
    "index_comparisons",
    "rows_scanned",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("workload {workload} is not supported on engine {engine}")]
    UnsupportedCombination { workload: Workload, engine: Engine },
    #[error("iterative workload {workload} at n = {n} requires allow_large_iterative")]
    GatedSize { workload: Workload, n: u64 },
    #[error("invalid workload spec: {0}")]
    InvalidSpec(String),
    #[error("empty input")]
    EmptyInput,
    #[error(transparent)]
    DataGen(#[from] DataGenError),
    #[error(transparent)]
    DocStore(#[from] DocStoreError),
    #[error(transparent)]
    RelStore(#[from] RelStoreError),
    #[error(transparent)]
    Query(#[from] PrepareError),
    #[error(transparent)]
    Execute(#[from] queryir::ExecuteError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Workload {
    SingleReadPk,
    IterativeReadSecondary,
    ReadAll,
    SingleUpdate,
    IterativeCreate,
    ReadAllFilter,
    ReadRangeFilter,
    MultiPredicate,
    ResolverQuery,
}

impl Workload {
    pub const ALL: [Workload; 9] = [
        Workload::SingleReadPk,
        Workload::IterativeReadSecondary,
        Workload::ReadAll,
        Workload::SingleUpdate,
        Workload::IterativeCreate,
        Workload::ReadAllFilter,
        Workload::ReadRangeFilter,
        Workload::MultiPredicate,
        Workload::ResolverQuery,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Workload::SingleReadPk => "single_read_pk",
            Workload::IterativeReadSecondary => "iterative_read_secondary",
            Workload::ReadAll => "read_all",
            Workload::SingleUpdate => "single_update",
            Workload::IterativeCreate => "iterative_create",
            Workload::ReadAllFilter => "read_all_filter",
            Workload::ReadRangeFilter => "read_range_filter",
            Workload::MultiPredicate => "multi_predicate",
            Workload::ResolverQuery => "resolver_query",
        }
    }

    pub fn is_iterative(self) -> bool {
        matches!(self, Workload::IterativeReadSecondary | Workload::IterativeCreate)
    }

    pub fn supports(self, engine: Engine) -> bool {
        match (self, engine) {
            (Workload::ResolverQuery, e) => e == Engine::Queryir,
            (_, Engine::Queryir) => false,
            (Workload::MultiPredicate, e) => e == Engine::Relstore,
            (Workload::ReadRangeFilter, e) => e == Engine::Docstore,
            _ => true,
        }
    }
}

impl fmt::Display for Workload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Workload {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Workload::ALL
            .into_iter()
            .find(|w| w.as_str() == s)
            .ok_or_else(|| format!("unknown workload `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Docstore,
    Relstore,
    Queryir,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Docstore, Engine::Relstore, Engine::Queryir];

    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Docstore => "docstore",
            Engine::Relstore => "relstore",
            Engine::Queryir => "queryir",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Engine::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown engine `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec {
    pub workload: Workload,
    pub engine: Engine,
    pub sizes: Vec<u64>,
    pub seed: u64,
    pub repetitions: u32,
    #[serde(default)]
    pub allow_large_iterative: bool,
}

impl WorkloadSpec {
    pub fn new(workload: Workload, engine: Engine, sizes: Vec<u64>, seed: u64) -> Self {
        WorkloadSpec {
            workload,
            engine,
            sizes,
            seed,
            repetitions: 1,
            allow_large_iterative: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.workload.supports(self.engine) {
            return Err(BenchError::UnsupportedCombination {
                workload: self.workload,
                engine: self.engine,
            });
        }
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(BenchError::InvalidSpec("sizes must be non-empty and positive".into()));
        }
        if self.repetitions == 0 {
            return Err(BenchError::InvalidSpec("repetitions must be positive".into()));
        }
        if self.workload.is_iterative() && !self.allow_large_iterative {
            if let Some(&n) = self.sizes.iter().find(|&&n| n >= ITERATIVE_GATE) {
                return Err(BenchError::GatedSize {
                    workload: self.workload,
                    n,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencySample {
    pub workload: Workload,
    pub engine: Engine,
    pub n: u64,
    /// Size of the set the engine returned.
    pub r: u64,
    /// Size after full condition matching.
    pub r_prime: u64,
    pub elapsed_ms: f64,
    pub op_count: u64,
    /// Sum of serialized sizes of the documents handed to the client.
    pub bytes: u64,
    #[serde(flatten)]
    pub scan_stats: ScanStats,
}

/// A prepared engine instance holding one dataset.
enum Store {
    Doc(Collection),
    Rel(Table),
}

fn build_store(engine: Engine, docs: &[Document]) -> Result<Store> {
    match engine {
        Engine::Docstore | Engine::Queryir => {
            let mut c = Collection::new("chargers");
            c.bulk_load(docs.to_vec())?;
            Ok(Store::Doc(c))
        }
        Engine::Relstore => {
            let mut t = Table::new("chargers", Schema::chargers_for(docs))?;
            for d in docs {
                t.insert_row(d)?;
            }
            Ok(Store::Rel(t))
        }
    }
}

fn bytes_of(docs: &[Document]) -> u64 {
    docs.iter().map(|d| d.serialized_size() as u64).sum()
}

struct Outcome {
    r: u64,
    r_prime: u64,
    op_count: u64,
    bytes: u64,
    stats: ScanStats,
}

impl Outcome {
    fn returned(docs: &[Document], matched: u64, op_count: u64, stats: ScanStats) -> Self {
        Outcome {
            r: docs.len() as u64,
            r_prime: matched,
            op_count,
            bytes: bytes_of(docs),
            stats,
        }
    }
}

fn id_eq(id: &FieldValue) -> Vec<Condition> {
    vec![Condition::new("id", CompareOp::Eq, id.clone())]
}

fn id_of(doc: &Document) -> Result<&FieldValue> {
    doc.get("id")
        .ok_or_else(|| BenchError::InvalidSpec(format!("document `{}` has no id field", doc.key())))
}

fn flipped_type(doc: &Document) -> FieldValue {
    let level1 = doc.get("type").and_then(FieldValue::as_text) == Some("level1");
    FieldValue::text(if level1 { "level2" } else { "level1" })
}

/// Execute one workload body against a prepared store. Timing is the
/// caller's job.
fn execute(workload: Workload, store: &mut Store, docs: &[Document]) -> Result<Outcome> {
    let first = &docs[0];
    let out = match (workload, store) {
        (Workload::SingleReadPk, Store::Doc(c)) => {
            let (doc, stats) = c.get(first.key())?;
            Outcome::returned(std::slice::from_ref(&doc), 1, 1, stats)
        }
        (Workload::SingleReadPk, Store::Rel(t)) => {
            let (rows, stats) = t.select(&id_eq(id_of(first)?))?;
            Outcome::returned(&rows, rows.len() as u64, 1, stats)
        }
        (Workload::IterativeReadSecondary, store) => {
            let (mut r, mut bytes, mut stats) = (0, 0, ScanStats::default());
            for doc in docs {
                let cond = id_eq(id_of(doc)?);
                let (found, s) = match store {
                    Store::Doc(c) => c.query(&QuerySpec::new(cond))?,
                    Store::Rel(t) => t.select(&cond)?,
                };
                r += found.len() as u64;
                bytes += bytes_of(&found);
                stats += s;
            }
            Outcome {
                r,
                r_prime: r,
                op_count: docs.len() as u64,
                bytes,
                stats,
            }
        }
        (Workload::ReadAll, store) => {
            let (all, stats) = match store {
                Store::Doc(c) => c.read_all(),
                Store::Rel(t) => t.read_all(),
            };
            Outcome::returned(&all, all.len() as u64, 1, stats)
        }
        (Workload::SingleUpdate, store) => {
            let change = [("type", flipped_type(first))];
            let stats = match store {
                Store::Doc(c) => c.update(first.key(), change)?,
                Store::Rel(t) => t.update_row(id_of(first)?, change)?,
            };
            Outcome {
                r: 0,
                r_prime: 0,
                op_count: 1,
                bytes: 0,
                stats,
            }
        }
        (Workload::IterativeCreate, store) => {
            let mut stats = ScanStats::default();
            for d in docs {
                stats += match store {
                    Store::Doc(c) => c.insert(d.clone())?,
                    Store::Rel(t) => t.insert_row(d)?,
                };
            }
            Outcome {
                r: 0,
                r_prime: 0,
                op_count: docs.len() as u64,
                bytes: 0,
                stats,
            }
        }
        (Workload::ReadAllFilter, store) => {
            let (all, stats) = match store {
                Store::Doc(c) => c.read_all(),
                Store::Rel(t) => t.read_all(),
            };
            let matched = filter_brute_force(&all, &canonical_query()).len() as u64;
            Outcome::returned(&all, matched, 1, stats)
        }
        (Workload::ReadRangeFilter, Store::Doc(c)) => {
            let (range, stats) = c.query(&QuerySpec::new(latitude_range()))?;
            let rest = non_latitude_conditions();
            let matched = range.iter().filter(|d| matches_all(d, &rest)).count() as u64;
            Outcome::returned(&range, matched, 1, stats)
        }
        (Workload::MultiPredicate, Store::Rel(t)) => {
            let (rows, stats) = t.select(&canonical_query())?;
            Outcome::returned(&rows, rows.len() as u64, 1, stats)
        }
        (Workload::ResolverQuery, Store::Doc(c)) => {
            let query = queryir::prepare(queryir::MARKETPLACE_QUERY, &ApiSchema::chargers())?;
            let out = queryir::execute(&query, c)?;
            let r = out.levels.first().map_or(0, |l| l.count as u64);
            Outcome {
                r,
                r_prime: out.documents.len() as u64,
                op_count: 1,
                bytes: bytes_of(&out.documents),
                stats: out.backend_stats,
            }
        }
        (workload, store) => {
            let engine = match store {
                Store::Doc(_) => Engine::Docstore,
                Store::Rel(_) => Engine::Relstore,
            };
            return Err(BenchError::UnsupportedCombination { workload, engine });
        }
    };
    Ok(out)
}

/// One sample per (size, repetition), each on a freshly built engine over
/// the dataset generated from the spec's seed.
/// Sequential: every operation completes before the next starts.
pub fn run(spec: &WorkloadSpec) -> Result<Vec<LatencySample>> {
    spec.validate()?;
    let mut samples = Vec::with_capacity(spec.sizes.len() * spec.repetitions as usize);
    for &n in &spec.sizes {
        let docs: Vec<Document> = datagen::records(&GenSpec::new(n, spec.seed))?
            .map(|r| r.to_document())
            .collect();
        samples.extend(run_dataset(spec, &docs)?);
    }
    Ok(samples)
}

/// Like [`run`] but over a caller-supplied dataset; `spec.sizes` and
/// `spec.seed` are ignored and `n` is the dataset size.
pub fn run_dataset(spec: &WorkloadSpec, docs: &[Document]) -> Result<Vec<LatencySample>> {
    if docs.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let n = docs.len() as u64;
    WorkloadSpec {
        sizes: vec![n],
        ..spec.clone()
    }
    .validate()?;
    let mut samples = Vec::with_capacity(spec.repetitions as usize);
    for _ in 0..spec.repetitions {
        let preload: &[Document] = if spec.workload == Workload::IterativeCreate { &[] } else { docs };
        let mut store = build_store(spec.engine, preload)?;
        let start = Instant::now();
        let out = execute(spec.workload, &mut store, docs)?;
        let elapsed_ms = start.elapsed().as_secs_f64() * 1000.0;
        samples.push(LatencySample {
            workload: spec.workload,
            engine: spec.engine,
            n,
            r: out.r,
            r_prime: out.r_prime,
            elapsed_ms,
            op_count: out.op_count,
            bytes: out.bytes,
            scan_stats: out.stats,
        });
    }
    Ok(samples)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// `None` on the mean row.
    pub n: Option<u64>,
    pub elapsed_ms: f64,
    pub ms_per_op: Option<f64>,
    /// `None` when elapsed time is zero (unbounded rate).
    pub ops_per_s: Option<f64>,
    pub kb_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub avg_doc_bytes: f64,
    pub rows: Vec<MetricsRow>,
    pub mean: MetricsRow,
}

impl MetricsTable {
    /// CSV with header `n,elapsed_ms,ms_per_op,ops_per_s,kb_per_s`; the mean
    /// row has `n = mean` and unbounded rates are written as `inf`.
    pub fn to_csv(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "inf".to_string(), |x| format!("{x:.3}"));
        let mut out = String::from("n,elapsed_ms,ms_per_op,ops_per_s,kb_per_s\n");
        for row in self.rows.iter().chain(std::iter::once(&self.mean)) {
            let n = row.n.map_or_else(|| "mean".to_string(), |n| n.to_string());
            out.push_str(&format!(
                "{n},{:.3},{},{},{}\n",
                row.elapsed_ms,
                cell(row.ms_per_op),
                cell(row.ops_per_s),
                cell(row.kb_per_s)
            ));
        }
        out
    }
}

fn rate(numerator: f64, elapsed_ms: f64) -> Option<f64> {
    (elapsed_ms > 0.0).then(|| numerator / (elapsed_ms / 1000.0))
}

/// Metrics of one sample.
pub fn sample_metrics(s: &LatencySample, avg_doc_bytes: f64) -> MetricsRow {
    MetricsRow {
        n: Some(s.n),
        elapsed_ms: s.elapsed_ms,
        ms_per_op: (s.op_count > 0).then(|| s.elapsed_ms / s.op_count as f64),
        ops_per_s: rate(s.op_count as f64, s.elapsed_ms),
        kb_per_s: rate(s.r as f64 * avg_doc_bytes / 1024.0, s.elapsed_ms),
    }
}

fn mean_of(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0;
    for v in values {
        sum += v?;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

/// Per-n rows (repetitions averaged, sizes ascending) plus a mean row over
/// the per-n rows.
pub fn metrics(samples: &[LatencySample], avg_doc_bytes: f64) -> Result<MetricsTable> {
    if samples.is_empty() {
        return Err(BenchError::EmptyInput);
    }
    let mut sizes: Vec<u64> = samples.iter().map(|s| s.n).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let rows: Vec<MetricsRow> = sizes
        .iter()
        .map(|&n| {
            let group: Vec<MetricsRow> = samples
                .iter()
                .filter(|s| s.n == n)
                .map(|s| sample_metrics(s, avg_doc_bytes))
                .collect();
            MetricsRow {
                n: Some(n),
                elapsed_ms: group.iter().map(|m| m.elapsed_ms).sum::<f64>() / group.len() as f64,
                ms_per_op: mean_of(group.iter().map(|m| m.ms_per_op)),
                ops_per_s: mean_of(group.iter().map(|m| m.ops_per_s)),
                kb_per_s: mean_of(group.iter().map(|m| m.kb_per_s)),
            }
        })
        .collect();
    let mean = MetricsRow {
        n: None,
        elapsed_ms: rows.iter().map(|m| m.elapsed_ms).sum::<f64>() / rows.len() as f64,
        ms_per_op: mean_of(rows.iter().map(|m| m.ms_per_op)),
        ops_per_s: mean_of(rows.iter().map(|m| m.ops_per_s)),
        kb_per_s: mean_of(rows.iter().map(|m| m.kb_per_s)),
    };
    Ok(MetricsTable {
        avg_doc_bytes,
        rows,
        mean,
    })
}

/// Flat CSV record; field order is the column order.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    workload: Workload,
    engine: Engine,
    n: u64,
    r: u64,
    r_prime: u64,
    elapsed_ms: f64,
    op_count: u64,
    bytes: u64,
    docs_examined: u64,
    index_comparisons: u64,
    rows_scanned: u64,
}

impl From<&LatencySample> for CsvRow {
    fn from(s: &LatencySample) -> Self {
        CsvRow {
            workload: s.workload,
            engine: s.engine,
            n: s.n,
            r: s.r,
            r_prime: s.r_prime,
            elapsed_ms: s.elapsed_ms,
            op_count: s.op_count,
            bytes: s.bytes,
            docs_examined: s.scan_stats.docs_examined,
            index_comparisons: s.scan_stats.index_comparisons,
            rows_scanned: s.scan_stats.rows_scanned,
        }
    }
}

impl From<CsvRow> for LatencySample {
    fn from(c: CsvRow) -> Self {
        LatencySample {
            workload: c.workload,
            engine: c.engine,
            n: c.n,
            r: c.r,
            r_prime: c.r_prime,
            elapsed_ms: c.elapsed_ms,
            op_count: c.op_count,
            bytes: c.bytes,
            scan_stats: ScanStats {
                docs_examined: c.docs_examined,
                index_comparisons: c.index_comparisons,
                rows_scanned: c.rows_scanned,
            },
        }
    }
}

/// Header line always written, even for no samples.
pub fn write_csv(samples: &[LatencySample], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for s in samples {
        w.serialize(CsvRow::from(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<Vec<LatencySample>> {
    csv::Reader::from_reader(input)
        .deserialize::<CsvRow>()
        .map(|row| Ok(row?.into()))
        .collect()
}

pub fn write_json(samples: &[LatencySample], out: impl Write) -> Result<()> {
    serde_json::to_writer_pretty(out, samples)?;
    Ok(())
}

pub fn read_json(input: impl Read) -> Result<Vec<LatencySample>> {
    Ok(serde_json::from_reader(input)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}`")),
        }
    }
}

pub fn export(samples: &[LatencySample], format: Format, out: impl Write) -> Result<()> {
    match format {
        Format::Csv => write_csv(samples, out),
        Format::Json => write_json(samples, out),
    }
}
