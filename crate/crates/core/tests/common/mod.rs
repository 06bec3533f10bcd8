#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rust_decimal::Decimal;

use storebench::bench::{self, LatencySample};
use storebench::queryir::Literal;
use storebench::{CompareOp, Condition, Document, FieldValue};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn reference_samples(name: &str) -> Vec<LatencySample> {
    let file = std::fs::File::open(fixture(name)).expect("fixture present");
    bench::read_csv(file).expect("fixture parses")
}

pub fn ids(docs: &[Document]) -> BTreeSet<i64> {
    docs.iter()
        .map(|d| match d.get("id") {
            Some(FieldValue::Integer(i)) => *i,
            other => panic!("document without integer id: {other:?}"),
        })
        .collect()
}

/// Normal-equations least squares in 28-digit decimal arithmetic: solves
/// `XᵀX β = Xᵀy` and inverts `XᵀX` by Gauss-Jordan elimination. Returns
/// `(β, SE(β))` with the intercept first.
pub fn normal_equations_oracle(columns: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = |v: f64| Decimal::from_str(&format!("{v}")).unwrap();
    let m = y.len();
    let p = columns.len() + 1;
    let row = |i: usize| -> Vec<Decimal> {
        std::iter::once(Decimal::ONE).chain(columns.iter().map(|c| d(c[i]))).collect()
    };
    let rows: Vec<Vec<Decimal>> = (0..m).map(row).collect();
    let yd: Vec<Decimal> = y.iter().map(|&v| d(v)).collect();

    // Augmented [XᵀX | Xᵀy | I].
    let width = 2 * p + 1;
    let mut a = vec![vec![Decimal::ZERO; width]; p];
    for (r, yi) in rows.iter().zip(&yd) {
        for j in 0..p {
            for k in 0..p {
                a[j][k] += r[j] * r[k];
            }
            a[j][p] += r[j] * yi;
        }
    }
    for (j, row) in a.iter_mut().enumerate() {
        row[p + 1 + j] = Decimal::ONE;
    }
    for col in 0..p {
        let pivot = (col..p).max_by_key(|&r| a[r][col].abs()).unwrap();
        a.swap(col, pivot);
        let pv = a[col][col];
        for k in 0..width {
            a[col][k] /= pv;
        }
        for r in 0..p {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for k in 0..width {
                    let delta = f * a[col][k];
                    a[r][k] -= delta;
                }
            }
        }
    }
    let beta: Vec<Decimal> = (0..p).map(|j| a[j][p]).collect();
    let rss: Decimal = rows
        .iter()
        .zip(&yd)
        .map(|(r, yi)| {
            let fitted: Decimal = r.iter().zip(&beta).map(|(x, b)| x * b).sum();
            (yi - fitted) * (yi - fitted)
        })
        .sum();
    let sigma2 = rss / Decimal::from(m - p);
    let to_f = |v: Decimal| f64::from_str(&v.to_string()).unwrap();
    let se = (0..p).map(|j| to_f(sigma2 * a[j][p + 1 + j]).sqrt()).collect();
    (beta.into_iter().map(to_f).collect(), se)
}

/// A random conjunction over latitude, longitude, name and type, using only
/// inclusive range bounds so every engine and the resolver chain can express
/// it. Bounds are drawn from the level lists half the time to exercise
/// boundary inclusivity.
pub fn random_conditions(rng: &mut impl Rng, names: &[String], types: &[String]) -> Vec<Condition> {
    let mut out = Vec::new();
    random_range(rng, &mut out, "latitude", &storebench::datagen::DEFAULT_LAT_LEVELS, 43.0, 48.1);
    random_range(rng, &mut out, "longitude", &storebench::datagen::DEFAULT_LONG_LEVELS, -125.0, -120.0);
    if rng.gen_bool(0.5) {
        out.push(Condition::eq("name", names.choose(rng).unwrap().as_str()));
    }
    if rng.gen_bool(0.5) {
        out.push(Condition::eq("type", types.choose(rng).unwrap().as_str()));
    }
    out
}

fn random_range(rng: &mut impl Rng, out: &mut Vec<Condition>, field: &str, levels: &[f64], lo: f64, hi: f64) {
    if rng.gen_bool(0.3) {
        return;
    }
    let mut draw = || {
        if rng.gen_bool(0.5) {
            *levels.choose(&mut *rng).unwrap()
        } else {
            rng.gen_range(lo..hi)
        }
    };
    let (a, b) = (draw(), draw());
    let (min, max) = if a <= b { (a, b) } else { (b, a) };
    let ge = Condition::new(field, CompareOp::Ge, FieldValue::Number(min));
    let le = Condition::new(field, CompareOp::Le, FieldValue::Number(max));
    match rng.gen_range(0..4) {
        0 => out.push(ge),
        1 => out.push(le),
        _ => out.extend([ge, le]),
    }
}

/// Resolver-chain query text for `conditions`: one chain field per
/// constrained field in random order, every argument on the root.
pub fn resolver_text(rng: &mut impl Rng, conditions: &[Condition]) -> String {
    let mut args = Vec::new();
    let mut fields: Vec<&str> = Vec::new();
    for c in conditions {
        let arg = match (c.field.as_str(), c.op) {
            ("latitude", CompareOp::Ge) => "latmin",
            ("latitude", CompareOp::Le) => "latmax",
            ("longitude", CompareOp::Ge) => "longmin",
            ("longitude", CompareOp::Le) => "longmax",
            ("name", CompareOp::Eq) => "name",
            ("type", CompareOp::Eq) => "type",
            other => panic!("not expressible as a resolver argument: {other:?}"),
        };
        let lit = match &c.value {
            FieldValue::Number(v) => Literal::Number(*v),
            FieldValue::Integer(v) => Literal::Number(*v as f64),
            FieldValue::Text(s) => Literal::Text(s.clone()),
        };
        args.push(format!("{arg}: {lit}"));
        if !fields.contains(&c.field.as_str()) {
            fields.push(c.field.as_str());
        }
    }
    if fields.is_empty() {
        fields.push("latitude");
    }
    fields.shuffle(rng);
    let mut text = String::from("query {\n");
    for (depth, f) in fields.iter().enumerate() {
        text.push_str(&"  ".repeat(depth + 1));
        text.push_str(f);
        if depth == 0 && !args.is_empty() {
            text.push_str(&format!("({})", args.join(", ")));
        }
        text.push_str(" {\n");
    }
    text.push_str(&"  ".repeat(fields.len() + 1));
    text.push_str("id\n");
    for depth in (0..fields.len()).rev() {
        text.push_str(&"  ".repeat(depth + 1));
        text.push_str("}\n");
    }
    text.push_str("}\n");
    text
}

/// Split off one inequality field (latitude preferred) so the rest can be
/// sent to the document engine: returns (server-side spec conditions,
/// client-side remainder).
pub fn split_for_docstore(conditions: &[Condition]) -> (Vec<Condition>, Vec<Condition>) {
    let range_field = conditions
        .iter()
        .filter(|c| c.op.is_inequality())
        .map(|c| c.field.clone())
        .min_by_key(|f| (f != "latitude", f.clone()));
    conditions
        .iter()
        .cloned()
        .partition(|c| !c.op.is_inequality() || Some(&c.field) == range_field.as_ref())
}
