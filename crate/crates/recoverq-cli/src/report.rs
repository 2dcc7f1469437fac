//! Report assembly and emission.
//!
//! One run emits one structured JSON document (stdout by default, `--out` to
//! a file). Every floating-point number is rounded to 12 significant digits
//! before serialization, and object keys serialize in sorted order, so a
//! fixed command line on fixed inputs produces byte-identical reports.
//! Wall-clock timings are opt-in (`--timings`) because they break that
//! guarantee. Sweep commands additionally emit a CSV table next to `--out`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use recoverq::CMat;

use crate::CliError;

/// Rounds to 12 significant decimal digits (identity on zero and
/// non-finite values).
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific round-trip")
}

/// A JSON number carrying 12 significant digits; non-finite values become
/// strings, since JSON has no representation for them.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(sig12(x))
    } else {
        Value::String(format!("{x}"))
    }
}

/// A complex matrix as row-major re/im planes, rounded like every other
/// number in the report.
pub fn matrix_value(m: &CMat) -> Value {
    let plane = |f: fn(f64, f64) -> f64| -> Value {
        Value::Array(
            (0..m.nrows())
                .map(|i| {
                    Value::Array(
                        (0..m.ncols())
                            .map(|j| num(f(m[(i, j)].re, m[(i, j)].im)))
                            .collect(),
                    )
                })
                .collect(),
        )
    };
    json!({ "re": plane(|re, _| re), "im": plane(|_, im| im) })
}

/// Builder for the single report document of a run.
pub struct Report {
    fields: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut fields = Map::new();
        fields.insert("command".into(), json!(command));
        fields.insert("seed".into(), json!(seed));
        Report { fields }
    }

    pub fn set(&mut self, key: &str, value: Value) -> &mut Self {
        self.fields.insert(key.into(), value);
        self
    }

    pub fn finish(self) -> Value {
        Value::Object(self.fields)
    }
}

pub fn emit(out: Option<&Path>, report: Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::invalid(format!("report serialization failed: {e}")))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// CSV path derived from the report path: the extension is replaced by
/// `csv` (or appended when there is none).
pub fn csv_sibling(out: &Path) -> PathBuf {
    out.with_extension("csv")
}

/// Writes the fixed-header sweep table. Row order is the deterministic grid
/// order (copies-major, then the requested epsilon order).
pub fn write_sweep_csv(path: &Path, rows: &[(usize, f64, f64, f64)]) -> Result<(), CliError> {
    let mut text = String::from("n,epsilon,value_bits,residual\n");
    for (n, epsilon, value_bits, residual) in rows {
        let fmt = |x: f64| -> String {
            if x.is_finite() {
                format!("{}", sig12(x))
            } else {
                format!("{x}")
            }
        };
        text.push_str(&format!(
            "{n},{},{},{}\n",
            fmt(*epsilon),
            fmt(*value_bits),
            fmt(*residual)
        ));
    }
    fs::write(path, text)
        .map_err(|e| CliError::invalid(format!("cannot write {}: {e}", path.display())))
}
