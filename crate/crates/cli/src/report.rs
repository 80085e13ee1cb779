use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::{json, Map, Value};

/// Floats are emitted as strings in shortest round-trip form.
pub fn num(x: f64) -> Value {
    Value::String(format!("{x:e}"))
}

pub fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

#[derive(Default)]
pub struct Certificates(BTreeMap<String, Value>);

impl Certificates {
    pub fn add(&mut self, name: &str, pass: bool, detail: Value) {
        let mut entry = Map::new();
        entry.insert("status".into(), Value::String(if pass { "pass" } else { "fail" }.into()));
        if !detail.is_null() {
            entry.insert("detail".into(), detail);
        }
        self.0.insert(name.to_string(), Value::Object(entry));
    }

    pub fn all_pass(&self) -> bool {
        self.0.values().all(|v| v["status"] == "pass")
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0.into_iter().collect())
    }
}

/// Tolerance atol + rtol·magnitude. Without explicit flags, the check's own
/// figure is used whenever it is looser than the defaults.
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub atol: Option<f64>,
    pub rtol: Option<f64>,
}

pub const DEFAULT_ATOL: f64 = 1e-12;
pub const DEFAULT_RTOL: f64 = 1e-9;

impl Tolerance {
    pub fn bound(&self, figure: f64, magnitude: f64) -> f64 {
        let scaled = self.atol.unwrap_or(DEFAULT_ATOL) + self.rtol.unwrap_or(DEFAULT_RTOL) * magnitude;
        if self.atol.is_some() || self.rtol.is_some() {
            scaled
        } else {
            scaled.max(figure)
        }
    }
}

/// Writes rows as CSV and `sidecar` as `<path>.json`.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>], sidecar: Value) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        let cells: Vec<String> = r.iter().map(|x| format!("{x:e}")).collect();
        writeln!(f, "{}", cells.join(","))?;
    }
    f.flush()?;
    let mut side = path.as_os_str().to_owned();
    side.push(".json");
    fs::write(side, serde_json::to_string_pretty(&sidecar)? + "\n")
}

pub fn coordinate_header(d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("x{i}")).collect()
}
