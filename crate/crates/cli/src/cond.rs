//! `--cond` syntax: comma-separated `field OP value` terms.

use storebench::{CompareOp, Condition, FieldValue};

const OPS: [(&str, CompareOp); 6] = [
    (">=", CompareOp::Ge),
    ("<=", CompareOp::Le),
    ("==", CompareOp::Eq),
    ("=", CompareOp::Eq),
    (">", CompareOp::Gt),
    ("<", CompareOp::Lt),
];

/// Parse `latitude>=47.5,name=Howard`. Integers become integer values, other
/// finite numbers become numbers, anything else (optionally quoted) is text.
pub fn parse_conditions(text: &str) -> Result<Vec<Condition>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(parse_term)
        .collect()
}

fn parse_term(term: &str) -> Result<Condition, String> {
    let (at, sym, op) = term
        .char_indices()
        .find_map(|(i, _)| {
            OPS.iter()
                .find(|(sym, _)| term[i..].starts_with(sym))
                .map(|&(sym, op)| (i, sym, op))
        })
        .ok_or_else(|| format!("condition `{term}` has no operator (>=, <=, >, <, =)"))?;
    let field = term[..at].trim();
    if field.is_empty() {
        return Err(format!("condition `{term}` has no field name"));
    }
    let raw = term[at + sym.len()..].trim();
    if raw.is_empty() {
        return Err(format!("condition `{term}` has no value"));
    }
    Ok(Condition::new(field, op, literal(raw)))
}

fn literal(raw: &str) -> FieldValue {
    if let Ok(i) = raw.parse::<i64>() {
        return FieldValue::Integer(i);
    }
    if let Some(v) = raw.parse::<f64>().ok().and_then(|f| FieldValue::number(f).ok()) {
        return v;
    }
    let unquoted = raw
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .unwrap_or(raw);
    FieldValue::text(unquoted)
}
