use std::collections::BTreeSet;

use indexmap::IndexMap;
use proptest::prelude::*;
use rust_decimal::Decimal;

use storebench::analytics::{fit, per_resource_cost, per_use_cost, PriceSheet, UsageProfile};
use storebench::docstore::{Collection, DocStoreError};
use storebench::geohash::{self, GeoBox};
use storebench::queryir::{parse, FieldNode, Literal, QueryAst};
use storebench::relstore::{Schema, Table};
use storebench::{filter_brute_force, CompareOp, Condition, Document, FieldValue, QuerySpec};

const FIELDS: [&str; 4] = ["a", "b", "c", "d"];

fn value() -> impl Strategy<Value = FieldValue> {
    prop_oneof![
        (-5i64..5).prop_map(FieldValue::Integer),
        (-10i32..10).prop_map(|v| FieldValue::Number(v as f64 / 2.0)),
        prop::sample::select(vec!["", "a", "ab", "b", "z"]).prop_map(FieldValue::text),
    ]
}

fn op() -> impl Strategy<Value = CompareOp> {
    prop::sample::select(vec![CompareOp::Eq, CompareOp::Ge, CompareOp::Le, CompareOp::Gt, CompareOp::Lt])
}

fn documents(max: usize) -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec(prop::collection::vec(prop::option::of(value()), FIELDS.len()), 0..max).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, vals)| {
                let mut d = Document::new(format!("k{i:03}")).unwrap();
                for (f, v) in FIELDS.iter().zip(vals) {
                    if let Some(v) = v {
                        d.set(f, v).unwrap();
                    }
                }
                d
            })
            .collect()
    })
}

/// Conjunction with inequalities on at most one field and at most one bound
/// of each direction.
fn docstore_conditions() -> impl Strategy<Value = Vec<Condition>> {
    (
        prop::sample::select(FIELDS.to_vec()),
        prop::option::of((prop::bool::ANY, value())),
        prop::option::of((prop::bool::ANY, value())),
        prop::collection::vec((prop::sample::select(FIELDS.to_vec()), value()), 0..3),
    )
        .prop_map(|(range_field, lower, upper, eqs)| {
            let mut out = Vec::new();
            if let Some((strict, v)) = lower {
                out.push(Condition::new(range_field, if strict { CompareOp::Gt } else { CompareOp::Ge }, v));
            }
            if let Some((strict, v)) = upper {
                out.push(Condition::new(range_field, if strict { CompareOp::Lt } else { CompareOp::Le }, v));
            }
            out.extend(eqs.into_iter().map(|(f, v)| Condition::new(f, CompareOp::Eq, v)));
            out
        })
}

fn keys(docs: &[Document]) -> BTreeSet<String> {
    docs.iter().map(|d| d.key().to_string()).collect()
}

fn expected_entries(docs: &[Document], field: &str) -> Vec<(FieldValue, String)> {
    let mut v: Vec<(FieldValue, String)> = docs
        .iter()
        .filter_map(|d| d.get(field).map(|x| (x.clone(), d.key().to_string())))
        .collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    v
}

fn same_entries(a: &[(FieldValue, String)], b: &[(FieldValue, String)]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.0.total_cmp(&y.0).is_eq() && x.1 == y.1)
}

proptest! {
    #[test]
    fn docstore_query_matches_oracle(docs in documents(60), conds in docstore_conditions()) {
        let mut bulk = Collection::new("p");
        bulk.bulk_load(docs.clone()).unwrap();
        let mut incremental = Collection::new("p");
        for d in &docs {
            incremental.insert(d.clone()).unwrap();
        }
        let expected = keys(&filter_brute_force(&docs, &conds));
        let spec = QuerySpec::new(conds);
        for c in [&bulk, &incremental] {
            let (found, stats) = c.query(&spec).unwrap();
            prop_assert_eq!(keys(&found), expected.clone());
            prop_assert_eq!(found.len(), expected.len());
            let n = docs.len() as f64;
            if !spec.conditions.is_empty() {
                prop_assert!(stats.index_comparisons as f64 <= 2.0 * (n + 1.0).log2().ceil() + 2.0);
            }
        }
    }

    #[test]
    fn docstore_rejects_two_inequality_fields(docs in documents(10), f in 0usize..4, g in 1usize..4, a in op(), b in op()) {
        prop_assume!(a != CompareOp::Eq && b != CompareOp::Eq);
        let mut c = Collection::new("p");
        c.bulk_load(docs).unwrap();
        let second = FIELDS[(f + g) % 4];
        let spec = QuerySpec::new(vec![
            Condition::new(FIELDS[f], a, FieldValue::Integer(0)),
            Condition::new(second, b, FieldValue::Integer(0)),
        ]);
        prop_assert!(matches!(c.query(&spec), Err(DocStoreError::MultipleInequalityFields(_))));
    }

    #[test]
    fn indices_track_inserts_and_updates(
        docs in documents(40),
        updates in prop::collection::vec((0usize..40, prop::sample::select(FIELDS.to_vec()), value()), 0..40),
    ) {
        let mut c = Collection::new("p");
        let mut shadow = docs.clone();
        for d in &docs {
            c.insert(d.clone()).unwrap();
        }
        for (i, field, v) in updates {
            if shadow.is_empty() {
                break;
            }
            let i = i % shadow.len();
            c.update(&shadow[i].key().to_string(), [(field, v.clone())]).unwrap();
            shadow[i].set(field, v).unwrap();
        }
        for field in FIELDS {
            let got = c.index_entries(field).unwrap_or_default();
            prop_assert!(same_entries(&got, &expected_entries(&shadow, field)), "index {} out of sync", field);
        }
        let (all, stats) = c.read_all();
        prop_assert_eq!(stats.docs_examined, shadow.len() as u64);
        prop_assert_eq!(all, shadow);
    }

    #[test]
    fn relstore_select_matches_oracle(
        rows in prop::collection::vec((-50i64..50, -5.0f64..5.0, prop::sample::select(vec!["x", "y", "z"])), 0..60),
        conds in prop::collection::vec((prop::sample::select(vec!["id", "score", "tag"]), op(), -5i64..5), 0..4),
    ) {
        let schema = Schema::new(
            vec![
                storebench::relstore::Column::new("id", storebench::relstore::ColumnType::Integer),
                storebench::relstore::Column::new("score", storebench::relstore::ColumnType::Number),
                storebench::relstore::Column::new("tag", storebench::relstore::ColumnType::Text),
            ],
            "id",
        ).unwrap();
        let mut t = Table::new("t", schema).unwrap();
        let mut docs = Vec::new();
        for (id, score, tag) in rows {
            let d = Document::new(id.to_string()).unwrap()
                .with("id", id)
                .with("score", FieldValue::Number(score))
                .with("tag", tag);
            if t.insert_row(&d).is_ok() {
                docs.push(d);
            }
        }
        let conds: Vec<Condition> = conds
            .into_iter()
            .map(|(f, o, v)| match f {
                "tag" => Condition::new(f, o, ["x", "y", "z"][v.rem_euclid(3) as usize]),
                "score" => Condition::new(f, o, FieldValue::Number(v as f64)),
                _ => Condition::new(f, o, FieldValue::Integer(v * 10)),
            })
            .collect();
        let (found, stats) = t.select(&conds).unwrap();
        prop_assert_eq!(keys(&found), keys(&filter_brute_force(&docs, &conds)));
        let pk_lookup = matches!(conds.as_slice(), [c] if c.field == "id" && c.op == CompareOp::Eq);
        if !pk_lookup {
            prop_assert_eq!(stats.rows_scanned, docs.len() as u64);
        }
        prop_assert!(t.secondary_indexes().is_empty());
    }

    #[test]
    fn geohash_cells_contain_their_points(lat in -90.0f64..=90.0, long in -180.0f64..=180.0, p in 1usize..=12) {
        let h = geohash::encode(lat, long, p).unwrap();
        prop_assert_eq!(h.len(), p);
        let cell = geohash::decode(&h).unwrap();
        prop_assert!(cell.contains(lat, long));
        prop_assert!(geohash::decode(&h[..p - 1]).unwrap().contains_box(&cell));
        prop_assert_eq!(geohash::encode(lat, long, 12).unwrap()[..p].to_string(), h);
    }

    #[test]
    fn cover_holds_every_point_of_the_box(
        lat in 40.0f64..50.0, dlat in 0.0f64..2.0, long in -125.0f64..-115.0, dlong in 0.0f64..2.0,
        p in 1usize..=4, u in 0.0f64..=1.0, v in 0.0f64..=1.0,
    ) {
        let area = GeoBox::new(lat, lat + dlat, long, long + dlong).unwrap();
        let cells = geohash::cover(&area, p, 1 << 20).unwrap();
        let mut sorted = cells.clone();
        sorted.sort();
        sorted.dedup();
        prop_assert_eq!(&sorted, &cells);
        let (plat, plong) = (lat + u * dlat, long + v * dlong);
        let h = geohash::encode(plat, plong, p).unwrap();
        prop_assert!(cells.binary_search(&h).is_ok());
        let runs = geohash::coalesce(&cells);
        let covered: usize = runs.iter().map(|(a, b)| {
            let mut n = 1;
            let mut cur = a.clone();
            while &cur != b {
                cur = geohash::successor(&cur).unwrap();
                n += 1;
            }
            n
        }).sum();
        prop_assert_eq!(covered, cells.len());
    }

    #[test]
    fn successor_is_next_in_order(h in "[0-9b-hjkmnp-z]{1,6}") {
        if let Some(s) = geohash::successor(&h) {
            prop_assert!(s > h);
            prop_assert_eq!(s.len(), h.len());
        } else {
            prop_assert!(h.chars().all(|c| c == 'z'));
        }
    }

    #[test]
    fn printed_queries_parse_back(ast in query_ast()) {
        let text = ast.to_string();
        let back = parse(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, ast);
    }

    #[test]
    fn ols_first_order_conditions(
        m in 6usize..30,
        seed in prop::collection::vec(-1e3f64..1e3, 90),
        slope in -10.0f64..10.0,
    ) {
        let x1: Vec<f64> = (0..m).map(|i| seed[i] * 1e3).collect();
        let x2: Vec<f64> = (0..m).map(|i| seed[30 + i]).collect();
        let y: Vec<f64> = (0..m).map(|i| 5.0 + slope * x1[i] + seed[60 + i]).collect();
        let f = match fit(&["x1", "x2"], &[x1.clone(), x2.clone()], &y) {
            Ok(f) => f,
            Err(_) => return Ok(()),
        };
        let resid: Vec<f64> = (0..m).map(|i| y[i] - f.predict(&[x1[i], x2[i]]).unwrap()).collect();
        for x in [vec![1.0; m], x1, x2] {
            let dot: f64 = resid.iter().zip(&x).map(|(e, v)| e * v).sum();
            let scale: f64 = y.iter().zip(&x).map(|(a, v)| (a * v).abs()).sum::<f64>().max(1.0);
            prop_assert!(dot.abs() <= 1e-9 * scale, "dot {} scale {}", dot, scale);
        }
        prop_assert!(f.rss >= 0.0);
        prop_assert!(f.coefficients.iter().all(|c| c.std_error >= 0.0));
    }

    #[test]
    fn per_use_cost_is_monotone(base in usage(), field in 0usize..5, bump in 0.0f64..1e7) {
        let prices = PriceSheet::default();
        let mut more = base.clone();
        match field {
            0 => more.writes_per_day += bump,
            1 => more.reads_per_day += bump,
            2 => more.stored_gb += bump / 1e5,
            3 => more.egress_gb_per_month += bump / 1e5,
            _ => more.months += bump / 1e6,
        }
        let a = per_use_cost(&base, &prices).unwrap().total;
        let b = per_use_cost(&more, &prices).unwrap().total;
        prop_assert!(b >= a, "{} < {}", b, a);
        prop_assert!(a >= Decimal::ZERO);
    }

    #[test]
    fn per_resource_cost_ignores_operations(base in usage(), reads in 0.0f64..1e9, writes in 0.0f64..1e9) {
        let prices = PriceSheet::default();
        let mut busy = base.clone();
        busy.reads_per_day = reads;
        busy.writes_per_day = writes;
        prop_assert_eq!(per_resource_cost(&base, &prices).unwrap(), per_resource_cost(&busy, &prices).unwrap());
    }

    #[test]
    fn documents_round_trip_through_json(docs in documents(5)) {
        for d in docs {
            prop_assert_eq!(Document::from_json_line(&d.to_json_line()).unwrap(), d);
        }
    }
}

fn usage() -> impl Strategy<Value = UsageProfile> {
    (0.0f64..2e6, 0.0f64..2e6, prop::option::of(1u32..31), 0.0f64..5.0, 0.0f64..20.0, 0.5f64..3.0, 0.0f64..4.0)
        .prop_map(|(w, r, days, stored, egress, months, vcpus)| UsageProfile {
            writes_per_day: w,
            reads_per_day: r,
            active_days_per_month: days,
            stored_gb: stored,
            egress_gb_per_month: egress,
            months,
            vcpus,
            memory_gb: vcpus * 0.6,
            disk_gb: 10.0,
        })
}

fn ident() -> impl Strategy<Value = String> {
    "[a-z_][a-z0-9_-]{0,6}"
}

fn literal() -> impl Strategy<Value = Literal> {
    prop_oneof![
        any::<f64>().prop_filter("finite", |v| v.is_finite()).prop_map(Literal::Number),
        "[ -~\n]{0,8}".prop_map(Literal::Text),
    ]
}

fn field_node() -> impl Strategy<Value = FieldNode> {
    let leaf = (ident(), prop::collection::vec((ident(), literal()), 0..3), prop::collection::vec(ident(), 1..4))
        .prop_map(|(name, args, selections)| FieldNode {
            name,
            args: args.into_iter().collect::<IndexMap<_, _>>(),
            children: Vec::new(),
            selections,
        });
    leaf.prop_recursive(3, 8, 2, |inner| {
        (ident(), prop::collection::vec((ident(), literal()), 0..3), prop::collection::vec(inner, 1..3)).prop_map(
            |(name, args, children)| FieldNode {
                name,
                args: args.into_iter().collect::<IndexMap<_, _>>(),
                children,
                selections: Vec::new(),
            },
        )
    })
}

fn query_ast() -> impl Strategy<Value = QueryAst> {
    field_node().prop_map(|root| QueryAst { root })
}
