//! Domain types shared by every stage of a run, and their JSON file formats.
//!
//! Three documents are supported, all carrying `"schema": 1`:
//!
//! * `similarity.json`: `{ "schema", "M", "messages"?, "A": [[f64]] }`
//! * `constellation.json`: `{ "schema", "M", "N", "points": [[[re, im], ...], ...] }`
//! * `report.json`: shaping metadata plus one trace of `[k, objective, grad_ratio]`
//!   triples per restart.
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! bit-exact. Bare `NaN` / `Infinity` tokens (as emitted by some JSON writers)
//! are accepted by the reader only so they can be reported as non-finite
//! entries instead of generic parse failures.

mod constellation;
mod report;
mod similarity;

use std::borrow::Cow;
use std::fs;
use std::path::Path;

pub(crate) use constellation::distance_sq;
pub use constellation::{
    load_constellation, parse_constellation, render_constellation, save_constellation,
    Constellation, POWER_TOLERANCE,
};
pub use report::{load_report, save_report, ReportFile, ShapingReport, StopReason, TraceEntry};
pub use similarity::{
    load_similarity, parse_similarity, render_similarity, save_similarity, MessageSet,
    SimilarityMatrix, SIMILARITY_TOLERANCE,
};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

fn check_schema(schema: u32) -> Result<()> {
    if schema == SCHEMA_VERSION {
        Ok(())
    } else {
        Err(Error::UnsupportedSchema(schema))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Rewrites bare `NaN`, `Infinity` and `-Infinity` tokens outside string
/// literals to `null`.
fn nullify_non_finite(text: &str) -> Cow<'_, str> {
    if !text.contains("NaN") && !text.contains("Infinity") {
        return Cow::Borrowed(text);
    }
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if in_string {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == '"' {
                in_string = false;
            }
        } else if c == '"' {
            in_string = true;
        } else {
            let token = ["-Infinity", "Infinity", "NaN"]
                .into_iter()
                .find(|t| rest.starts_with(t));
            if let Some(token) = token {
                out.push_str("null");
                rest = &rest[token.len()..];
                continue;
            }
        }
        out.push(c);
        rest = &rest[c.len_utf8()..];
    }
    Cow::Owned(out)
}

fn fmt_f64(value: f64) -> String {
    // serde_json renders finite floats with the shortest round-trip digits.
    serde_json::to_string(&value).expect("finite float serializes")
}
