//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rust_decimal::Decimal;

use common::{ids, reference_samples, random_conditions, resolver_text, split_for_docstore};
use storebench::analytics::{self, crossover, per_resource_cost, per_use_cost, PriceSheet, UsageProfile};
use storebench::bench::{self, Engine, Workload, WorkloadSpec};
use storebench::datagen::{self, CoordinateMode, GenSpec};
use storebench::docstore::{Collection, DocStoreError};
use storebench::geohash::{self, GeoBox};
use storebench::queryir::{self, ApiSchema};
use storebench::relstore::{Schema, Table};
use storebench::{filter_brute_force, CompareOp, Condition, Document, FieldValue, QuerySpec};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || format!("{name} = {got}, expected {want} ± {tol}"))
}

fn dec(s: &str) -> Decimal {
    Decimal::from_str(s).unwrap()
}

fn documents(spec: &GenSpec) -> Vec<Document> {
    datagen::generate(spec).unwrap().iter().map(|r| r.to_document()).collect()
}

fn collection(docs: &[Document]) -> Collection {
    let mut c = Collection::new("chargers");
    c.bulk_load(docs.to_vec()).unwrap();
    c
}

fn table(docs: &[Document]) -> Table {
    let mut t = Table::new("chargers", Schema::chargers()).unwrap();
    for d in docs {
        t.insert_row(d).unwrap();
    }
    t
}

fn regression_golden() -> Outcome {
    let fit = |file: &str| analytics::fit_samples(&reference_samples(file), &["n"]).map_err(|e| e.to_string());

    let fs = fit("latency_firestore.csv")?;
    within("firestore β0", fs.intercept.estimate, 340.139, 0.5)?;
    within("firestore β1", fs.coefficients[0].estimate, 0.066, 0.0005)?;
    within("firestore SE(β1)", fs.coefficients[0].std_error, 0.0004, 0.0001)?;

    let my = fit("latency_mysql.csv")?;
    within("mysql β0", my.intercept.estimate, 90.816, 0.5)?;
    within("mysql β1", my.coefficients[0].estimate, 0.0008, 0.00005)?;
    within("mysql SE(β1)", my.coefficients[0].std_error, 0.00002, 0.00001)?;

    let gq = fit("latency_graphql.csv")?;
    within("graphql β0", gq.intercept.estimate, 205.35, 0.5)?;
    within("graphql β1", gq.coefficients[0].estimate, 0.04, 0.001)?;

    Ok(format!(
        "firestore l = {:.3} + {:.5} n (SE {:.5}); mysql l = {:.3} + {:.6} n (SE {:.6}); graphql l = {:.3} + {:.5} n",
        fs.intercept.estimate,
        fs.coefficients[0].estimate,
        fs.coefficients[0].std_error,
        my.intercept.estimate,
        my.coefficients[0].estimate,
        my.coefficients[0].std_error,
        gq.intercept.estimate,
        gq.coefficients[0].estimate,
    ))
}

fn cost_golden() -> Outcome {
    let prices = PriceSheet::default();
    let use_report = per_use_cost(&UsageProfile::one_day_burst(), &prices).map_err(|e| e.to_string())?;
    let line = |item: &str| use_report.line(item).map(|l| l.amount).unwrap_or_default();
    ensure(line("writes") == dec("0.882"), || format!("writes {}", line("writes")))?;
    ensure(line("reads") == dec("0.285"), || format!("reads {}", line("reads")))?;
    ensure(line("storage") == dec("0.135"), || format!("storage {}", line("storage")))?;
    ensure(use_report.total == dec("1.302"), || format!("per-use total {}", use_report.total))?;

    let server = per_resource_cost(&UsageProfile::provisioned_server(), &prices).map_err(|e| e.to_string())?;
    let cents: Vec<Decimal> = ["vcpu", "memory", "storage", "egress"]
        .iter()
        .map(|i| server.line(i).unwrap().amount_cents())
        .collect();
    ensure(cents == [dec("30.15"), dec("3.14"), dec("1.70"), dec("0.01")], || format!("server lines {cents:?}"))?;
    ensure(server.total_cents() == dec("35.00"), || format!("server total {}", server.total_cents()))?;

    let base = UsageProfile {
        stored_gb: 1.9,
        ..Default::default()
    };
    let sweep = crossover(&prices, &base, &UsageProfile::provisioned_server(), 1_000_000, 1).map_err(|e| e.to_string())?;
    let at_million = sweep.curve[1].per_use;
    ensure((at_million - dec("35.20")).abs() <= dec("0.50"), || {
        format!("per-use at 10^6 ops/day = {at_million}, not within $0.50 of $35.20")
    })?;
    Ok(format!(
        "per-use {} (0.882 + 0.285 + 0.135); server {} (30.15 + 3.14 + 1.70 + 0.01); per-use at 10^6/day {}",
        use_report.total,
        server.total_cents(),
        at_million
    ))
}

fn result_set_sizes() -> Outcome {
    let spec = WorkloadSpec::new(Workload::ReadRangeFilter, Engine::Docstore, vec![1_000_000], 1);
    let samples = bench::run(&spec).map_err(|e| e.to_string())?;
    let s = &samples[0];
    ensure((198_000..=202_000).contains(&s.r), || format!("r = {} outside [198000, 202000]", s.r))?;
    ensure((3_700..=4_300).contains(&s.r_prime), || format!("r' = {} outside [3700, 4300]", s.r_prime))?;
    Ok(format!("n = 10^6: r = {}, r' = {}", s.r, s.r_prime))
}

fn differential() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let schema = ApiSchema::chargers();
    let mut checked = 0;
    let mut nonempty = 0;
    for mode in [CoordinateMode::Discrete, CoordinateMode::Continuous] {
        let mut spec = GenSpec::new(10_000, 7);
        spec.coordinates = mode;
        let docs = documents(&spec);
        let coll = collection(&docs);
        let tbl = table(&docs);
        for _ in 0..100 {
            let conds = random_conditions(&mut rng, &spec.names, &spec.types);
            let oracle = ids(&filter_brute_force(&docs, &conds));

            let (rows, _) = tbl.select(&conds).map_err(|e| e.to_string())?;
            let rel = ids(&rows);

            let (server, client) = split_for_docstore(&conds);
            let (found, _) = coll.query(&QuerySpec::new(server)).map_err(|e| e.to_string())?;
            let doc = ids(&filter_brute_force(&found, &client));

            let text = resolver_text(&mut rng, &conds);
            let query = queryir::prepare(&text, &schema).map_err(|e| format!("{e}\n{text}"))?;
            let out = queryir::execute(&query, &coll).map_err(|e| e.to_string())?;
            let res = ids(&out.documents);

            ensure(rel == oracle && doc == oracle && res == oracle, || {
                format!(
                    "mismatch for {conds:?}: oracle {}, relstore {}, docstore {}, resolver {}",
                    oracle.len(),
                    rel.len(),
                    doc.len(),
                    res.len()
                )
            })?;
            checked += 1;
            nonempty += usize::from(!oracle.is_empty());
        }
    }
    Ok(format!("{checked} random condition sets over n = 10^4 agree across all engines ({nonempty} non-empty)"))
}

fn semantic_restriction() -> Outcome {
    let docs = documents(&GenSpec::new(1_000, 5));
    let coll = collection(&docs);
    let tbl = table(&docs);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let bounds = [("latitude", 45.0), ("longitude", -122.0), ("id", 500.0)];
    let ops = [CompareOp::Ge, CompareOp::Le, CompareOp::Gt, CompareOp::Lt];
    for _ in 0..100 {
        let mut conds = Vec::new();
        let k = rng.gen_range(2..=3);
        for (field, v) in bounds.iter().take(k) {
            let op = ops[rng.gen_range(0..ops.len())];
            let value = if *field == "id" { FieldValue::Integer(*v as i64) } else { FieldValue::Number(*v) };
            conds.push(Condition::new(*field, op, value));
        }
        if rng.gen_bool(0.5) {
            conds.push(Condition::eq("type", "level2"));
        }
        match coll.query(&QuerySpec::new(conds.clone())) {
            Err(DocStoreError::MultipleInequalityFields(fields)) => {
                ensure(fields.len() == k, || format!("reported fields {fields:?} for {conds:?}"))?
            }
            other => return Err(format!("docstore accepted {conds:?}: {:?}", other.map(|(d, _)| d.len()))),
        }
        let (rows, _) = tbl.select(&conds).map_err(|e| format!("relstore rejected {conds:?}: {e}"))?;
        ensure(ids(&rows) == ids(&filter_brute_force(&docs, &conds)), || format!("relstore wrong for {conds:?}"))?;
    }
    Ok("100 multi-field inequality specs: docstore rejects with MultipleInequalityFields, relstore answers exactly".into())
}

fn complexity_counters() -> Outcome {
    let mut notes = Vec::new();
    for exp in 1..=6u32 {
        let n = 10u64.pow(exp);
        let records = datagen::generate(&GenSpec::new(n, 11)).unwrap();
        let docs: Vec<Document> = records.iter().map(|r| r.to_document()).collect();
        let coll = collection(&docs);
        let (_, get) = coll.get(&records[0].key()).map_err(|e| e.to_string())?;
        ensure(get.docs_examined == 1, || format!("get at n = {n} examined {}", get.docs_examined))?;
        let (_, all) = coll.read_all();
        ensure(all.docs_examined == n, || format!("read_all at n = {n} examined {}", all.docs_examined))?;
        drop(coll);
        let tbl = table(&docs);
        let (_, sel) = tbl.select(&[Condition::eq("type", "level2")]).map_err(|e| e.to_string())?;
        ensure(sel.rows_scanned == n, || format!("relstore select at n = {n} scanned {}", sel.rows_scanned))?;
    }
    notes.push("get = 1, read_all = n, relstore select = n for n = 10..10^6".to_string());

    let (c1, c2) = (1.0, 3.0);
    let mut ratios = Vec::new();
    for n in [10u64, 100, 1_000, 10_000, 100_000] {
        let spec = WorkloadSpec::new(Workload::IterativeReadSecondary, Engine::Docstore, vec![n], 3);
        let s = &bench::run(&spec).map_err(|e| e.to_string())?[0];
        let total = s.scan_stats.index_comparisons as f64;
        let nf = n as f64;
        ensure(c1 * nf <= total && total <= c2 * nf * nf.log2(), || {
            format!("n = {n}: {total} comparisons outside [{c1}·n, {c2}·n·log2 n]")
        })?;
        ratios.push(format!("{:.2}", total / (nf * nf.log2())));
    }
    notes.push(format!(
        "iterative secondary reads: comparisons/(n log2 n) = [{}] within [{c1}·n, {c2}·n·log2 n]",
        ratios.join(", ")
    ));
    Ok(notes.join("; "))
}

fn ols_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut cases: Vec<(Vec<Vec<f64>>, Vec<f64>)> = Vec::new();
    for file in ["latency_firestore.csv", "latency_mysql.csv", "latency_graphql.csv"] {
        let samples = reference_samples(file);
        let col = |f: fn(&bench::LatencySample) -> f64| samples.iter().map(f).collect::<Vec<f64>>();
        let l = col(|s| s.elapsed_ms);
        let (n, r, rp) = (col(|s| s.n as f64), col(|s| s.r as f64), col(|s| s.r_prime as f64));
        cases.push((vec![n.clone()], l.clone()));
        cases.push((vec![r.clone()], l.clone()));
        cases.push((vec![n.clone(), r.clone()], l.clone()));
        if file == "latency_graphql.csv" {
            cases.push((vec![n, r, rp], l));
        }
    }
    for _ in 0..50 {
        let m = rng.gen_range(5..40);
        let p = rng.gen_range(1..4);
        let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..m).map(|_| rng.gen_range(-1e3..1e6)).collect()).collect();
        let y = (0..m).map(|_| rng.gen_range(-1e4..1e4)).collect();
        cases.push((cols, y));
    }
    for (cols, y) in &cases {
        let names: Vec<String> = (0..cols.len()).map(|j| format!("x{j}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let f = analytics::fit(&names, cols, y).map_err(|e| e.to_string())?;
        let resid: Vec<f64> = (0..y.len())
            .map(|i| y[i] - f.predict(&cols.iter().map(|c| c[i]).collect::<Vec<_>>()).unwrap())
            .collect();
        let ones = vec![1.0; y.len()];
        for x in std::iter::once(&ones).chain(cols.iter()) {
            let dot: f64 = resid.iter().zip(x).map(|(e, v)| e * v).sum();
            let scale: f64 = resid.iter().zip(x).map(|(e, v)| (e * v).abs()).sum::<f64>().max(
                y.iter().zip(x).map(|(a, v)| (a * v).abs()).sum::<f64>() * f64::EPSILON,
            );
            worst = worst.max(dot.abs() / scale.max(f64::MIN_POSITIVE));
        }
    }
    ensure(worst <= 1e-9, || format!("worst relative residual correlation {worst:e}"))?;

    let n: Vec<f64> = [10.0, 100.0, 1e3, 1e4, 1e5, 1e6].to_vec();
    let l: Vec<f64> = n.iter().map(|v| 340.139 + 0.066 * v).collect();
    let exact = analytics::fit(&["n"], &[n], &l).map_err(|e| e.to_string())?;
    let sum_sq: f64 = l.iter().map(|v| v * v).sum();
    ensure(exact.rss <= 1e-9 * sum_sq, || format!("noiseless RSS {}", exact.rss))?;
    within("recovered intercept", exact.intercept.estimate, 340.139, 1e-6)?;
    within("recovered slope", exact.coefficients[0].estimate, 0.066, 1e-12)?;

    let three = analytics::fit(&["x"], &[vec![0.0, 1.0, 2.0]], &[0.0, 1.0, 3.0]).map_err(|e| e.to_string())?;
    within("3-point β1", three.coefficients[0].estimate, 1.5, 5e-5)?;
    within("3-point β0", three.intercept.estimate, -1.0 / 6.0, 5e-5)?;
    within("3-point SE", three.coefficients[0].std_error, 0.2887, 5e-5)?;
    Ok(format!(
        "{} fits with residual orthogonality ≤ {worst:.1e}; noiseless recovery exact; 3-point fit β1 = {:.4}, β0 = {:.4}, SE = {:.4}",
        cases.len(),
        three.coefficients[0].estimate,
        three.intercept.estimate,
        three.coefficients[0].std_error
    ))
}

fn geohash_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let lat = rng.gen_range(-90.0..=90.0);
        let long = rng.gen_range(-180.0..=180.0);
        let full = geohash::encode(lat, long, 12).map_err(|e| e.to_string())?;
        let mut outer = GeoBox::WORLD;
        for p in 1..=12 {
            let h = geohash::encode(lat, long, p).map_err(|e| e.to_string())?;
            ensure(full.starts_with(&h), || format!("{h} is not a prefix of {full}"))?;
            let cell = geohash::decode(&h).map_err(|e| e.to_string())?;
            ensure(cell.contains(lat, long), || format!("cell {h} misses ({lat}, {long})"))?;
            ensure(outer.contains_box(&cell), || format!("cell {h} escapes its parent"))?;
            outer = cell;
        }
    }

    let mut spec = GenSpec::new(10_000, 9);
    spec.coordinates = CoordinateMode::Continuous;
    let records = datagen::generate(&spec).unwrap();
    let docs: Vec<Document> = records.iter().map(|r| datagen::to_document(r, true)).collect();
    let coll = collection(&docs);
    let mut boxes = 0;
    let mut total_specs = 0;
    for _ in 0..200 {
        let (a, b) = (rng.gen_range(43.0..48.0), rng.gen_range(43.0..48.0));
        let (c, d) = (rng.gen_range(-125.0..-120.0), rng.gen_range(-125.0..-120.0));
        let area = GeoBox::new(f64::min(a, b), f64::max(a, b), f64::min(c, d), f64::max(c, d)).unwrap();
        let precision = rng.gen_range(1..=5);
        let specs = match geohash::rewrite(&area, precision, geohash::DEFAULT_COVER_LIMIT) {
            Ok(s) => s,
            Err(geohash::GeohashError::PrecisionTooFine { .. }) => continue,
            Err(e) => return Err(e.to_string()),
        };
        let mut candidates = std::collections::BTreeMap::new();
        for s in &specs {
            ensure(s.inequality_fields() == [geohash::FIELD], || format!("{s:?} is not single-field"))?;
            let (found, _) = coll.query(s).map_err(|e| e.to_string())?;
            for d in found {
                candidates.insert(d.key().to_string(), d);
            }
        }
        let candidates: Vec<Document> = candidates.into_values().collect();
        let expected = ids(&filter_brute_force(&docs, &area.conditions()));
        ensure(ids(&candidates).is_superset(&expected), || format!("cover of {area:?} lost matches"))?;
        let refined = ids(&filter_brute_force(&candidates, &area.conditions()));
        ensure(refined == expected, || format!("rewrite of {area:?} disagrees with the box filter"))?;
        boxes += 1;
        total_specs += specs.len();
    }
    ensure(boxes >= 100, || format!("only {boxes} boxes had a feasible cover"))?;
    Ok(format!(
        "10^4 points round-trip and nest at precisions 1..12; {boxes} boxes rewritten into {total_specs} single-field range specs match the box filter on n = 10^4"
    ))
}

fn non_reproducibility() -> Outcome {
    // Absolute cloud latencies are not targets. What must hold instead is that
    // every non-wall-clock column is reproducible run to run.
    let spec = WorkloadSpec::new(Workload::ReadAllFilter, Engine::Docstore, vec![1_000], 2);
    let a = bench::run(&spec).map_err(|e| e.to_string())?;
    let b = bench::run(&spec).map_err(|e| e.to_string())?;
    let strip = |v: &[bench::LatencySample]| {
        v.iter()
            .map(|s| (s.r, s.r_prime, s.op_count, s.bytes, s.scan_stats))
            .collect::<Vec<_>>()
    };
    ensure(strip(&a) == strip(&b), || "counters differ between identical runs".into())?;
    ensure(a.iter().all(|s| s.elapsed_ms >= 0.0), || "negative elapsed time".into())?;
    Ok("absolute cloud latencies (190 ms mean single read, 66,763 ms worst-case query) are network-dominated \
        and not asserted; their roles are carried by criteria 3, 4 and 6"
        .into())
}

fn main() {
    let criteria: [(u32, &str, Duration, fn() -> Outcome); 9] = [
        (1, "regression golden fits", Duration::from_secs(1), regression_golden),
        (2, "cost golden reports", Duration::from_secs(1), cost_golden),
        (3, "result-set sizes at n = 10^6", Duration::from_secs(60), result_set_sizes),
        (4, "cross-engine differential", Duration::from_secs(30), differential),
        (5, "single-inequality restriction", Duration::MAX, semantic_restriction),
        (6, "complexity counters", Duration::MAX, complexity_counters),
        (7, "OLS properties", Duration::MAX, ols_properties),
        (8, "geohash suite", Duration::MAX, geohash_suite),
        (9, "latency non-reproducibility", Duration::MAX, non_reproducibility),
    ];
    let mut failed = 0;
    for (id, title, budget, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(p.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!("took {:.2} s, budget {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()))
            }
        });
        match outcome {
            Ok(detail) => println!("criterion {id} PASS [{title}] ({:.2} s) {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("criterion {id} FAIL [{title}] ({:.2} s) {why}", elapsed.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} of 9 criteria failed");
        std::process::exit(1);
    }
    println!("acceptance: all 9 criteria passed");
}
