//! One-line `error[Tag]: message` reporting.

use std::fmt::{Debug, Display};

/// Variants that only wrap another error; the tag is taken from what they wrap.
const WRAPPERS: [&str; 11] = [
    "DocStore", "RelStore", "Backend", "Model", "DataGen", "Execute", "Query", "Fit", "Cost", "Syntax", "Bench",
];

#[derive(Debug)]
pub struct Failure {
    pub tag: String,
    pub message: String,
}

impl Failure {
    pub fn new(tag: &str, message: impl Display) -> Self {
        Failure {
            tag: tag.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Failure::new("Io", format!("{}: {err}", path.display()))
    }

    pub fn line(&self) -> String {
        format!("error[{}]: {}", self.tag, self.message.replace('\n', " "))
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure {
            tag: tag_of(&err),
            message: err.to_string(),
        }
    }
}

/// Innermost variant name of an error's `Debug` form, descending through
/// wrapper variants: `DocStore(MultipleInequalityFields([..]))` gives
/// `MultipleInequalityFields`.
pub fn tag_of(err: &impl Debug) -> String {
    let text = format!("{err:?}");
    let mut rest = text.as_str();
    loop {
        let ident: String = rest.chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect();
        let after = &rest[ident.len()..];
        if WRAPPERS.contains(&ident.as_str()) && after.starts_with('(') {
            rest = &after[1..];
            continue;
        }
        return if ident.is_empty() { "Error".to_string() } else { ident };
    }
}
