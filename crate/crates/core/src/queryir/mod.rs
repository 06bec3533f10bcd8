//! Nested-resolver query layer over the document engine.
//!
//! A query is a chain of resolvable fields. The root resolver issues exactly
//! one backend query built from its own condition; every descendant resolver
//! filters the set produced by its parent. Arguments are inherited down the
//! chain, so all of them may sit on the root as in [`MARKETPLACE_QUERY`].

mod ast;
mod parse;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::docstore::{Collection, DocStoreError};
use crate::model::{matches_all, CompareOp, Condition, Document, QuerySpec, ScanStats};

pub use ast::{FieldNode, Literal, QueryAst};
pub use parse::{parse, SyntaxError};

/// The marketplace search expressed as a resolver chain
/// latitude -> longitude -> name -> type.
pub const MARKETPLACE_QUERY: &str = r#"query {
    latitude(
        num: 1000000,
        latmin: 47.5,
        latmax: 48.0,
        longmin: -122.5,
        longmax: -122.1,
        name: 'Howard',
        type: 'level2')
    {
        longitude {
            name {
                type {
                    id
                    name
                    address
                    latitude
                    longitude
                    type
                }
            }
        }
    }
}"#;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArgType {
    Number,
    Text,
}

/// How a resolvable field turns inherited arguments into conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binding {
    /// Inclusive range on `field` from optional min/max arguments.
    Range { field: String, min_arg: String, max_arg: String },
    /// Equality on `field` from one argument.
    Equals { field: String, arg: String },
}

impl Binding {
    fn conditions(&self, env: &IndexMap<String, Literal>) -> Vec<Condition> {
        match self {
            Binding::Range { field, min_arg, max_arg } => {
                let mut out = Vec::new();
                if let Some(v) = env.get(min_arg) {
                    out.push(Condition::new(field.as_str(), CompareOp::Ge, v.to_value()));
                }
                if let Some(v) = env.get(max_arg) {
                    out.push(Condition::new(field.as_str(), CompareOp::Le, v.to_value()));
                }
                out
            }
            Binding::Equals { field, arg } => env
                .get(arg)
                .map(|v| vec![Condition::new(field.as_str(), CompareOp::Eq, v.to_value())])
                .unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverSpec {
    pub args: IndexMap<String, ArgType>,
    pub binding: Binding,
    pub children: Vec<String>,
    pub selectable: Vec<String>,
}

/// Declared API: resolvable fields, their arguments, allowed children and
/// selectable leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiSchema {
    pub fields: IndexMap<String, ResolverSpec>,
    /// Argument compared against the collection size; never a condition.
    pub size_hint_arg: Option<String>,
}

impl ApiSchema {
    /// Chain fields latitude, longitude, name and type, each accepting the
    /// full argument vocabulary and nesting under any other chain field.
    pub fn chargers() -> ApiSchema {
        let args: IndexMap<String, ArgType> = [
            ("num", ArgType::Number),
            ("latmin", ArgType::Number),
            ("latmax", ArgType::Number),
            ("longmin", ArgType::Number),
            ("longmax", ArgType::Number),
            ("name", ArgType::Text),
            ("type", ArgType::Text),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        let selectable: Vec<String> = ["id", "name", "address", "latitude", "longitude", "type", "geohash"]
            .map(String::from)
            .to_vec();
        let bindings = [
            ("latitude", Binding::Range { field: "latitude".into(), min_arg: "latmin".into(), max_arg: "latmax".into() }),
            ("longitude", Binding::Range { field: "longitude".into(), min_arg: "longmin".into(), max_arg: "longmax".into() }),
            ("name", Binding::Equals { field: "name".into(), arg: "name".into() }),
            ("type", Binding::Equals { field: "type".into(), arg: "type".into() }),
        ];
        let names: Vec<&str> = bindings.iter().map(|(n, _)| *n).collect();
        let fields = bindings
            .iter()
            .map(|(name, binding)| {
                let spec = ResolverSpec {
                    args: args.clone(),
                    binding: binding.clone(),
                    children: names.iter().filter(|c| *c != name).map(|c| c.to_string()).collect(),
                    selectable: selectable.clone(),
                };
                (name.to_string(), spec)
            })
            .collect();
        ApiSchema {
            fields,
            size_hint_arg: Some("num".into()),
        }
    }

    /// Every named child must itself be declared.
    pub fn check_closed(&self) -> Result<(), String> {
        for (name, spec) in &self.fields {
            for c in &spec.children {
                if !self.fields.contains_key(c) {
                    return Err(format!("field `{name}` names undeclared child `{c}`"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    UnknownField(String),
    NotAllowedChild { parent: String, child: String },
    UnknownArgument { field: String, arg: String },
    ArgTypeMismatch { field: String, arg: String },
    UnknownSelection { field: String, selection: String },
    SiblingFields { field: String },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::UnknownField(n) => write!(f, "UnknownField {n}"),
            Violation::NotAllowedChild { parent, child } => write!(f, "NotAllowedChild {parent}.{child}"),
            Violation::UnknownArgument { field, arg } => write!(f, "UnknownArgument {field}.{arg}"),
            Violation::ArgTypeMismatch { field, arg } => write!(f, "ArgTypeMismatch {field}.{arg}"),
            Violation::UnknownSelection { field, selection } => write!(f, "UnknownSelection {field}.{selection}"),
            Violation::SiblingFields { field } => write!(f, "SiblingFields {field}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResolverKind {
    BackendQuery,
    Filter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverStep {
    pub field: String,
    pub kind: ResolverKind,
    pub conditions: Vec<Condition>,
}

/// A query that passed [`validate`]; the only input [`execute`] accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedQuery {
    ast: QueryAst,
    steps: Vec<ResolverStep>,
    selections: Vec<String>,
    size_hint: Option<u64>,
}

impl ValidatedQuery {
    pub fn ast(&self) -> &QueryAst {
        &self.ast
    }

    /// All conditions of the chain, root first.
    pub fn conditions(&self) -> Vec<Condition> {
        self.steps.iter().flat_map(|s| s.conditions.iter().cloned()).collect()
    }
}

/// Check every name, argument and selection against the schema, reporting
/// all violations.
pub fn validate(ast: &QueryAst, schema: &ApiSchema) -> Result<ValidatedQuery, Vec<Violation>> {
    let mut violations = Vec::new();
    let mut steps = Vec::new();
    let mut env: IndexMap<String, Literal> = IndexMap::new();
    let mut size_hint = None;
    let mut node = &ast.root;
    let mut parent: Option<&str> = None;

    loop {
        let spec = schema.fields.get(&node.name);
        match (spec, parent) {
            (None, _) => violations.push(Violation::UnknownField(node.name.clone())),
            (Some(_), Some(p)) => {
                let allowed = schema.fields.get(p).is_some_and(|ps| ps.children.contains(&node.name));
                if !allowed {
                    violations.push(Violation::NotAllowedChild {
                        parent: p.to_string(),
                        child: node.name.clone(),
                    });
                }
            }
            (Some(_), None) => {}
        }
        for (arg, lit) in &node.args {
            match spec.map(|s| s.args.get(arg)) {
                Some(None) => violations.push(Violation::UnknownArgument {
                    field: node.name.clone(),
                    arg: arg.clone(),
                }),
                Some(Some(ty)) => {
                    let ok = matches!(
                        (ty, lit),
                        (ArgType::Number, Literal::Number(_)) | (ArgType::Text, Literal::Text(_))
                    );
                    if !ok {
                        violations.push(Violation::ArgTypeMismatch {
                            field: node.name.clone(),
                            arg: arg.clone(),
                        });
                    }
                }
                None => {}
            }
            env.insert(arg.clone(), lit.clone());
        }
        if let Some(spec) = spec {
            for sel in &node.selections {
                if !spec.selectable.contains(sel) {
                    violations.push(Violation::UnknownSelection {
                        field: node.name.clone(),
                        selection: sel.clone(),
                    });
                }
            }
            let kind = if parent.is_none() { ResolverKind::BackendQuery } else { ResolverKind::Filter };
            steps.push(ResolverStep {
                field: node.name.clone(),
                kind,
                conditions: spec.binding.conditions(&env),
            });
        }
        if node.children.len() > 1 {
            violations.push(Violation::SiblingFields { field: node.name.clone() });
        }
        match node.children.first() {
            Some(child) => {
                parent = Some(&node.name);
                node = child;
            }
            None => break,
        }
    }

    if let Some(arg) = &schema.size_hint_arg {
        if let Some(Literal::Number(n)) = env.get(arg) {
            if *n >= 0.0 && n.fract() == 0.0 {
                size_hint = Some(*n as u64);
            }
        }
    }

    if violations.is_empty() {
        Ok(ValidatedQuery {
            ast: ast.clone(),
            steps,
            selections: node.selections.clone(),
            size_hint,
        })
    } else {
        Err(violations)
    }
}

/// Resolver chain description: root is the backend query, the rest filter.
pub fn explain(query: &ValidatedQuery) -> Vec<ResolverStep> {
    query.steps.clone()
}

#[derive(Debug, Error)]
pub enum ExecuteError {
    #[error("backend: {0}")]
    Backend(#[from] DocStoreError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub field: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutput {
    /// Final matched set (r'), projected to the leaf selections.
    pub documents: Vec<Document>,
    /// Set size after each resolver, root (r) first.
    pub levels: Vec<LevelCount>,
    /// Work done by the backend query.
    pub backend_stats: ScanStats,
    /// Whether the advisory size argument equals the collection size.
    pub size_hint_matches: Option<bool>,
}

impl ExecOutput {
    /// `{"levels":[{"field":…, "count":…}]}`
    pub fn levels_json(&self) -> serde_json::Value {
        serde_json::json!({ "levels": self.levels })
    }

    pub fn documents_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.documents.iter().map(Document::to_json).collect())
    }
}

pub fn execute(query: &ValidatedQuery, backend: &Collection) -> Result<ExecOutput, ExecuteError> {
    let (root, rest) = query.steps.split_first().expect("validated chain has a root");
    let (mut current, backend_stats) = backend.query(&QuerySpec::new(root.conditions.clone()))?;
    let mut levels = vec![LevelCount {
        field: root.field.clone(),
        count: current.len(),
    }];
    for step in rest {
        current.retain(|d| matches_all(d, &step.conditions));
        levels.push(LevelCount {
            field: step.field.clone(),
            count: current.len(),
        });
    }
    let documents = if query.selections.is_empty() {
        current
    } else {
        current.iter().map(|d| d.project(&query.selections)).collect()
    };
    Ok(ExecOutput {
        documents,
        levels,
        backend_stats,
        size_hint_matches: query.size_hint.map(|n| n == backend.len() as u64),
    })
}

/// Parse and validate in one step; violations are joined into one message.
pub fn prepare(text: &str, schema: &ApiSchema) -> Result<ValidatedQuery, PrepareError> {
    let ast = parse(text)?;
    validate(&ast, schema).map_err(PrepareError::Invalid)
}

#[derive(Debug, Error)]
pub enum PrepareError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid query: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}
