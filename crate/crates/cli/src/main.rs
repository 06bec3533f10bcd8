//! `storebench` command-line front end.

mod cond;
mod config;
mod error;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use storebench::analytics::{self, CostReport, UsageProfile};
use storebench::bench::{self, Engine, Format, Workload, WorkloadSpec, DEFAULT_AVG_DOC_BYTES};
use storebench::datagen::{self, CoordinateMode, GenSpec};
use storebench::docstore::Collection;
use storebench::geohash::{self, GeoBox, DEFAULT_COVER_LIMIT};
use storebench::queryir::{self, ApiSchema};
use storebench::relstore::{Schema, Table};
use storebench::{matches_all, Document, QuerySpec, ScanStats};

use config::Config;
use error::Failure;

#[derive(Debug, Parser)]
#[command(name = "storebench", version, about = "Document vs relational query-engine workbench")]
struct Cli {
    /// TOML file with default seed, sizes, price sheet, output directory,
    /// month length and geohash precision.
    #[arg(long, global = true, env = "STOREBENCH_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic charger dataset as JSON lines.
    Gen(GenArgs),
    /// Load a dataset into an engine and write its snapshot.
    Load(LoadArgs),
    /// Run one query against a dataset and print the result as JSON.
    Query(QueryArgs),
    /// Run workloads or summarize their samples.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Fit a latency regression to benchmark samples.
    Fit(FitArgs),
    /// Price a usage profile under both billing models.
    Cost(CostArgs),
    /// Sweep daily operation volume against a fixed server bill.
    Crossover(CrossoverArgs),
    /// Geohash utilities.
    #[command(subcommand)]
    Geohash(GeohashCommand),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: Option<u64>,
    /// Add a `geohash` field to every document.
    #[arg(long)]
    geohash: bool,
    /// Draw coordinates uniformly over the level range instead of from the levels.
    #[arg(long)]
    continuous: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LoadArgs {
    #[arg(long)]
    engine: Engine,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct QueryArgs {
    #[arg(long)]
    engine: Engine,
    /// Dataset or snapshot file.
    #[arg(long)]
    data: PathBuf,
    /// Conditions such as `latitude>=47.5,name=Howard`.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["query_text", "query_file"])]
    cond: Option<String>,
    /// Box `lat_min,lat_max,long_min,long_max` answered through geohash range queries.
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["cond", "query_text", "query_file"])]
    geobox: Option<String>,
    #[arg(long)]
    precision: Option<usize>,
    #[arg(long)]
    limit: Option<usize>,
    /// Comma-separated fields to keep in each result document.
    #[arg(long, value_delimiter = ',')]
    project: Option<Vec<String>>,
    /// Resolver-chain query text (queryir engine; defaults to the marketplace query).
    #[arg(long, conflicts_with = "query_file")]
    query_text: Option<String>,
    #[arg(long)]
    query_file: Option<PathBuf>,
    /// Print the execution plan instead of running the query.
    #[arg(long)]
    explain: bool,
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Run a workload and write one sample per (size, repetition).
    Run(BenchRunArgs),
    /// Per-size throughput metrics from a sample CSV.
    Metrics(BenchMetricsArgs),
}

#[derive(Debug, Args)]
struct BenchRunArgs {
    #[arg(long)]
    workload: Workload,
    #[arg(long)]
    engine: Engine,
    #[arg(long, value_delimiter = ',', conflicts_with = "data")]
    sizes: Option<Vec<u64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    repetitions: u32,
    #[arg(long)]
    allow_large_iterative: bool,
    /// Run over this dataset or snapshot instead of generating one per size.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Args)]
struct BenchMetricsArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long, default_value_t = DEFAULT_AVG_DOC_BYTES)]
    avg_doc_bytes: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    csv: PathBuf,
    /// Any of n, r, r_prime.
    #[arg(long, value_delimiter = ',', default_value = "n")]
    predictors: Vec<String>,
}

#[derive(Debug, Args)]
struct CostArgs {
    /// Usage profile JSON.
    #[arg(long)]
    usage: PathBuf,
    /// Price sheet JSON.
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    days_per_month: Option<u32>,
}

#[derive(Debug, Args)]
struct CrossoverArgs {
    #[arg(long)]
    prices: Option<PathBuf>,
    #[arg(long)]
    days_per_month: Option<u32>,
    /// Usage whose storage and egress stay fixed across the sweep (default 1.9 GB stored).
    #[arg(long)]
    base: Option<PathBuf>,
    /// Provisioned server usage (default 2 vCPU, 2 GB memory, 10 GB disk).
    #[arg(long)]
    server: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    step: u64,
    #[arg(long, default_value_t = 20)]
    steps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum GeohashCommand {
    /// Print the geohash of a point.
    Encode {
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        long: f64,
        #[arg(long)]
        precision: Option<usize>,
    },
    /// Print a cell's bounds as `lat_min lat_max long_min long_max`.
    Decode { hash: String },
    /// Print the cells covering a box, one per line.
    Cover {
        /// `lat_min,lat_max,long_min,long_max`
        #[arg(long = "box", allow_hyphen_values = true)]
        area: String,
        #[arg(long)]
        precision: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_COVER_LIMIT)]
        limit: usize,
        /// Print coalesced runs as `first last` instead of single cells.
        #[arg(long)]
        ranges: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            eprint!("error[UsageError]: {}", rendered.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.line());
            ExitCode::from(if f.tag == "UsageError" { 1 } else { 2 })
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Gen(a) => gen(&config, a),
        Command::Load(a) => load(&config, a),
        Command::Query(a) => query(&config, a),
        Command::Bench(BenchCommand::Run(a)) => bench_run(&config, a),
        Command::Bench(BenchCommand::Metrics(a)) => bench_metrics(&config, a),
        Command::Fit(a) => fit(a),
        Command::Cost(a) => cost(&config, a),
        Command::Crossover(a) => crossover(&config, a),
        Command::Geohash(c) => geohash_cmd(&config, c),
    }
}

fn usage(message: impl std::fmt::Display) -> Failure {
    Failure::new("UsageError", message)
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

pub(crate) fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_reader(open(path)?).map_err(|e| Failure::new("Json", format!("{}: {e}", path.display())))
}

/// Write `body` to `out` (resolved against the output directory) or stdout.
fn emit(config: &Config, out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<(), Failure>) -> Result<(), Failure> {
    match out {
        Some(out) => {
            let path = config.output_path(out);
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
            }
            let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w)?;
            w.flush().map_err(|e| Failure::io(&path, e))
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            body(&mut w)?;
            w.flush().map_err(|e| Failure::io(Path::new("<stdout>"), e))
        }
    }
}

fn emit_json(value: &Value) -> Result<(), Failure> {
    emit(&Config::default(), None, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Failure::new("Json", e))?;
        writeln!(w).map_err(|e| Failure::io(Path::new("<stdout>"), e))
    })
}

fn read_docs(path: &Path) -> Result<Vec<Document>, Failure> {
    Ok(datagen::read_documents(open(path)?)?.1)
}

fn gen(config: &Config, a: GenArgs) -> Result<(), Failure> {
    let mut spec = GenSpec::new(a.n, a.seed.unwrap_or(config.seed));
    if a.continuous {
        spec.coordinates = CoordinateMode::Continuous;
    }
    emit(config, a.out.as_deref(), |w| Ok(datagen::write_dataset(&spec, a.geohash, w)?))
}

fn load(config: &Config, a: LoadArgs) -> Result<(), Failure> {
    let docs = read_docs(&a.data)?;
    match a.engine {
        Engine::Docstore | Engine::Queryir => {
            let mut c = Collection::new("chargers");
            c.bulk_load(docs)?;
            emit(config, a.out.as_deref(), |w| Ok(c.write_snapshot(w)?))
        }
        Engine::Relstore => {
            let t = table_of(&docs)?;
            emit(config, a.out.as_deref(), |w| Ok(t.write_snapshot(w)?))
        }
    }
}

fn table_of(docs: &[Document]) -> Result<Table, Failure> {
    let mut t = Table::new("chargers", Schema::chargers_for(docs))?;
    for d in docs {
        t.insert_row(d)?;
    }
    Ok(t)
}

fn collection_of(docs: Vec<Document>) -> Result<Collection, Failure> {
    let mut c = Collection::new("chargers");
    c.bulk_load(docs)?;
    Ok(c)
}

fn result_json(docs: &[Document], stats: ScanStats) -> Value {
    json!({
        "count": docs.len(),
        "scan_stats": stats,
        "documents": docs.iter().map(Document::to_json).collect::<Vec<_>>(),
    })
}

fn parse_box(text: &str) -> Result<GeoBox, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("box `{text}`: {e}")))?;
    let [lat_min, lat_max, long_min, long_max] = parts[..] else {
        return Err(usage(format!("box `{text}` needs lat_min,lat_max,long_min,long_max")));
    };
    Ok(GeoBox::new(lat_min, lat_max, long_min, long_max)?)
}

fn query(config: &Config, a: QueryArgs) -> Result<(), Failure> {
    if a.engine != Engine::Queryir && (a.query_text.is_some() || a.query_file.is_some()) {
        return Err(usage("--query-text and --query-file need --engine queryir"));
    }
    if a.engine == Engine::Queryir && (a.cond.is_some() || a.geobox.is_some()) {
        return Err(usage("--engine queryir takes --query-text or --query-file, not --cond or --geobox"));
    }
    if a.geobox.is_some() && a.engine != Engine::Docstore {
        return Err(usage("--geobox needs --engine docstore"));
    }
    let mut spec = QuerySpec::new(match &a.cond {
        Some(text) => cond::parse_conditions(text).map_err(usage)?,
        None => Vec::new(),
    });
    spec.limit = a.limit;
    spec.projection = a.project.clone();
    spec.validate()?;

    if a.engine == Engine::Queryir {
        return resolver_query(a);
    }
    if let Some(area) = &a.geobox {
        return geobox_query(config, &a, parse_box(area)?, &spec);
    }
    if a.explain {
        let inequality: Vec<&str> = spec.inequality_fields();
        return emit_json(&json!({ "engine": a.engine, "spec": spec, "inequality_fields": inequality }));
    }
    let docs = read_docs(&a.data)?;
    let (found, stats) = match a.engine {
        Engine::Docstore => collection_of(docs)?.query(&spec)?,
        _ => {
            let (mut rows, stats) = table_of(&docs)?.select(&spec.conditions)?;
            if let Some(limit) = spec.limit {
                rows.truncate(limit);
            }
            if let Some(fields) = &spec.projection {
                rows = rows.iter().map(|d| d.project(fields)).collect();
            }
            (rows, stats)
        }
    };
    emit_json(&result_json(&found, stats))
}

fn resolver_query(a: QueryArgs) -> Result<(), Failure> {
    let text = match (&a.query_text, &a.query_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?,
        (None, None) => queryir::MARKETPLACE_QUERY.to_string(),
    };
    let prepared = queryir::prepare(&text, &ApiSchema::chargers())?;
    if a.explain {
        return emit_json(&json!({ "steps": queryir::explain(&prepared) }));
    }
    let collection = collection_of(read_docs(&a.data)?)?;
    let mut out = queryir::execute(&prepared, &collection)?;
    if let Some(limit) = a.limit {
        out.documents.truncate(limit);
    }
    if let Some(fields) = &a.project {
        out.documents = out.documents.iter().map(|d| d.project(fields)).collect();
    }
    let mut value = result_json(&out.documents, out.backend_stats);
    value["levels"] = json!(out.levels);
    value["size_hint_matches"] = json!(out.size_hint_matches);
    emit_json(&value)
}

/// Union of the geohash range queries covering the box, then exact
/// coordinate filtering plus any `--cond` conditions.
fn geobox_query(config: &Config, a: &QueryArgs, area: GeoBox, spec: &QuerySpec) -> Result<(), Failure> {
    let precision = a.precision.unwrap_or(config.geohash_precision);
    let specs = geohash::rewrite(&area, precision, DEFAULT_COVER_LIMIT)?;
    if a.explain {
        return emit_json(&json!({ "engine": a.engine, "range_queries": specs, "exact_filter": area.conditions() }));
    }
    let collection = collection_of(read_docs(&a.data)?)?;
    let mut exact = area.conditions();
    exact.extend(spec.conditions.iter().cloned());
    let (mut found, mut stats) = (Vec::new(), ScanStats::default());
    for s in &specs {
        let (docs, st) = collection.query(s)?;
        stats += st;
        found.extend(docs.into_iter().filter(|d| matches_all(d, &exact)));
    }
    found.sort_by(|x, y| x.key().cmp(y.key()));
    if let Some(limit) = spec.limit {
        found.truncate(limit);
    }
    if let Some(fields) = &spec.projection {
        found = found.iter().map(|d| d.project(fields)).collect();
    }
    let mut value = result_json(&found, stats);
    value["range_queries"] = json!(specs.len());
    emit_json(&value)
}

fn bench_run(config: &Config, a: BenchRunArgs) -> Result<(), Failure> {
    let sizes = a.sizes.clone().unwrap_or_else(|| config.sizes.clone());
    let mut spec = WorkloadSpec::new(a.workload, a.engine, sizes, a.seed.unwrap_or(config.seed));
    spec.repetitions = a.repetitions;
    spec.allow_large_iterative = a.allow_large_iterative;
    let samples = match &a.data {
        Some(path) => bench::run_dataset(&spec, &read_docs(path)?)?,
        None => bench::run(&spec)?,
    };
    emit(config, a.out.as_deref(), |w| Ok(bench::export(&samples, a.format, w)?))
}

fn bench_metrics(config: &Config, a: BenchMetricsArgs) -> Result<(), Failure> {
    let samples = bench::read_csv(open(&a.csv)?)?;
    let table = bench::metrics(&samples, a.avg_doc_bytes)?;
    emit(config, a.out.as_deref(), |w| {
        w.write_all(table.to_csv().as_bytes()).map_err(|e| Failure::io(Path::new("<output>"), e))
    })
}

fn fit(a: FitArgs) -> Result<(), Failure> {
    let samples = bench::read_csv(open(&a.csv)?)?;
    let names: Vec<&str> = a.predictors.iter().map(String::as_str).collect();
    let fit = analytics::fit_samples(&samples, &names)?;
    let mut value = json!({
        "predictors": names,
        "beta0": fit.intercept.estimate,
        "se_beta0": fit.intercept.std_error,
    });
    for (i, c) in fit.coefficients.iter().enumerate() {
        value[format!("beta{}", i + 1)] = json!(c.estimate);
        value[format!("se_beta{}", i + 1)] = json!(c.std_error);
    }
    value["r_squared"] = json!(fit.r_squared);
    value["rss"] = json!(fit.rss);
    value["samples"] = json!(fit.m);
    value["fit"] = json!(fit);
    emit_json(&value)
}

/// Exact amounts without trailing zeros, plus cent-rounded amounts.
fn report_json(report: &CostReport) -> Value {
    let lines: Vec<Value> = report
        .lines
        .iter()
        .map(|l| {
            json!({
                "item": l.item,
                "billed": l.billed.normalize(),
                "amount": l.amount.normalize(),
                "amount_cents": l.amount_cents(),
            })
        })
        .collect();
    json!({
        "lines": lines,
        "total": report.total.normalize(),
        "total_cents": report.total_cents(),
    })
}

fn cost(config: &Config, a: CostArgs) -> Result<(), Failure> {
    let prices = config.prices(a.prices.as_deref(), a.days_per_month)?;
    let usage: UsageProfile = read_json(&a.usage)?;
    let per_use = analytics::per_use_cost(&usage, &prices)?;
    let per_resource = analytics::per_resource_cost(&usage, &prices)?;
    emit_json(&json!({
        "per_use": report_json(&per_use),
        "per_resource": report_json(&per_resource),
    }))
}

fn crossover(config: &Config, a: CrossoverArgs) -> Result<(), Failure> {
    let prices = config.prices(a.prices.as_deref(), a.days_per_month)?;
    let base = match &a.base {
        Some(p) => read_json(p)?,
        None => UsageProfile {
            stored_gb: 1.9,
            ..Default::default()
        },
    };
    let server = match &a.server {
        Some(p) => read_json(p)?,
        None => UsageProfile::provisioned_server(),
    };
    let sweep = analytics::crossover(&prices, &base, &server, a.step, a.steps)?;
    emit(config, a.out.as_deref(), |w| {
        let io_err = |e| Failure::io(Path::new("<output>"), e);
        match a.format {
            Format::Csv => w.write_all(sweep.to_csv().as_bytes()).map_err(io_err),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &sweep).map_err(|e| Failure::new("Json", e))?;
                writeln!(w).map_err(io_err)
            }
        }
    })
}

fn geohash_cmd(config: &Config, c: GeohashCommand) -> Result<(), Failure> {
    let lines: Vec<String> = match c {
        GeohashCommand::Encode { lat, long, precision } => {
            vec![geohash::encode(lat, long, precision.unwrap_or(config.geohash_precision))?]
        }
        GeohashCommand::Decode { hash } => {
            let b = geohash::decode(&hash)?;
            vec![format!("{} {} {} {}", b.lat_min, b.lat_max, b.long_min, b.long_max)]
        }
        GeohashCommand::Cover {
            area,
            precision,
            limit,
            ranges,
        } => {
            let cells = geohash::cover(&parse_box(&area)?, precision.unwrap_or(config.geohash_precision), limit)?;
            if ranges {
                geohash::coalesce(&cells)
                    .into_iter()
                    .map(|(first, last)| format!("{first} {last}"))
                    .collect()
            } else {
                cells
            }
        }
    };
    emit(config, None, |w| {
        for line in &lines {
            writeln!(w, "{line}").map_err(|e| Failure::io(Path::new("<stdout>"), e))?;
        }
        Ok(())
    })
}
