use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::model::FieldValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Number(f64),
    Text(String),
}

impl Literal {
    pub fn to_value(&self) -> FieldValue {
        match self {
            Literal::Number(n) => FieldValue::Number(*n),
            Literal::Text(s) => FieldValue::Text(s.clone()),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldNode {
    pub name: String,
    pub args: IndexMap<String, Literal>,
    pub children: Vec<FieldNode>,
    pub selections: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryAst {
    pub root: FieldNode,
}

impl QueryAst {
    /// Nodes along the first-child path, root first.
    pub fn chain(&self) -> Vec<&FieldNode> {
        let mut out = vec![&self.root];
        while let Some(child) = out.last().and_then(|n| n.children.first()) {
            out.push(child);
        }
        out
    }

    /// Leaf selections of the deepest node on the chain.
    pub fn selections(&self) -> &[String] {
        &self.chain().last().expect("chain is never empty").selections
    }
}

impl FieldNode {
    fn write(&self, f: &mut fmt::Formatter<'_>, depth: usize) -> fmt::Result {
        let pad = "  ".repeat(depth);
        write!(f, "{pad}{}", self.name)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, (k, v)) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{k}: {v}")?;
            }
            f.write_str(")")?;
        }
        f.write_str(" {\n")?;
        for c in &self.children {
            c.write(f, depth + 1)?;
        }
        for s in &self.selections {
            writeln!(f, "{pad}  {s}")?;
        }
        writeln!(f, "{pad}}}")
    }
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("query {\n")?;
        self.root.write(f, 1)?;
        f.write_str("}\n")
    }
}
