use std::fs;
use std::path::Path;
use std::sync::Arc;

use deltaclose_core::codec::{self, Manifest};
use deltaclose_core::scalar::NumberField;
use deltaclose_core::{Error, Result};
use serde_json::Value;

use crate::args::Global;

pub struct Inputs {
    manifest: Option<Manifest>,
    field_flag: Option<Arc<NumberField>>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn parse_json(text: &str, origin: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| malformed(format!("{origin}: {e}")))
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

impl Inputs {
    pub fn new(g: &Global) -> Result<Self> {
        let manifest = match &g.manifest {
            Some(p) => Some(Manifest::parse(&parse_json(&read_file(p)?, &p.display().to_string())?)?),
            None => None,
        };
        let field_flag = match &g.field {
            Some(s) => {
                let t = s.trim();
                let v = if t == "Q" || t.starts_with("sqrt(") { Value::String(t.to_string()) } else { raw(t)? };
                Some(codec::decode_field(v.get("field").unwrap_or(&v))?)
            }
            None => None,
        };
        Ok(Inputs { manifest, field_flag })
    }

    /// Inline JSON, `@id` from the manifest, or a file path.
    pub fn read(&self, arg: &str) -> Result<Value> {
        match arg.trim().strip_prefix('@') {
            Some(id) => {
                let m = self.manifest.as_ref().ok_or_else(|| malformed(format!("@{id} needs --manifest")))?;
                Ok(m.get(id)?.1.clone())
            }
            None => raw(arg),
        }
    }

    /// The field declared by the documents, `--field`, or the manifest;
    /// every declaration must agree. Undeclared means ℚ.
    pub fn field(&self, docs: &[&Value]) -> Result<Arc<NumberField>> {
        let mut found: Vec<Arc<NumberField>> = Vec::new();
        for d in docs {
            if let Some(k) = codec::document_field(d) {
                found.push(k?);
            }
        }
        found.extend(self.field_flag.iter().cloned());
        found.extend(self.manifest.iter().map(|m| m.field.clone()));
        let first = match found.first() {
            Some(k) => k.clone(),
            None => return Ok(NumberField::rationals()),
        };
        if found.iter().any(|k| !k.same_as(&first)) {
            return Err(malformed("inputs declare different number fields"));
        }
        Ok(first)
    }
}

fn raw(arg: &str) -> Result<Value> {
    let t = arg.trim();
    if t.starts_with('{') || t.starts_with('[') || t.starts_with('"') {
        parse_json(t, "inline argument")
    } else {
        parse_json(&read_file(Path::new(t))?, t)
    }
}

/// `doc[key]` when the document wraps the object under that key.
pub fn part<'a>(doc: &'a Value, key: &str) -> &'a Value {
    doc.as_object().and_then(|m| m.get(key)).unwrap_or(doc)
}
