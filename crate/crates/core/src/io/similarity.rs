use std::path::Path;

use serde::Deserialize;

use super::{check_schema, fmt_f64, nullify_non_finite, read_text, write_text, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Deviation from symmetry, zero diagonal or the unit interval that is
/// repaired on load rather than rejected.
pub const SIMILARITY_TOLERANCE: f64 = 1e-6;

/// The candidate messages of one run, indexed from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageSet {
    pub id: String,
    messages: Vec<String>,
}

impl MessageSet {
    pub fn new(id: impl Into<String>, messages: Vec<String>) -> Result<Self> {
        if messages.len() < 2 {
            return Err(Error::Invalid {
                field: "messages",
                reason: format!("need at least 2 messages, got {}", messages.len()),
            });
        }
        Ok(Self {
            id: id.into(),
            messages,
        })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }
}

/// Semantic-loss weights `A(i, j)`: the cost of decoding message `j` when
/// `i` was sent.
///
/// Always square with `M >= 2`, symmetric, zero on the diagonal and with
/// entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    m: usize,
    entries: Vec<f64>,
    messages: Option<Vec<String>>,
}

impl SimilarityMatrix {
    /// Validates `rows`, repairing deviations up to [`SIMILARITY_TOLERANCE`]:
    /// near-symmetric pairs are averaged, near-zero diagonals zeroed and
    /// near-range values clamped.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::Invalid {
                field: "A",
                reason: format!("need at least 2 messages, got {m}"),
            });
        }
        let mut entries = Vec::with_capacity(m * m);
        for row in rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    what: "similarity row length",
                    expected: m,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::from_entries(m, entries)
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| f(i, j)).collect()).collect();
        Self::from_rows(&rows)
    }

    /// Every off-diagonal entry equal to `value`.
    pub fn uniform(m: usize, value: f64) -> Result<Self> {
        Self::from_fn(m, |i, j| if i == j { 0.0 } else { value })
    }

    fn from_entries(m: usize, mut entries: Vec<f64>) -> Result<Self> {
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "similarity matrix",
                index,
            });
        }
        for i in 0..m {
            let value = entries[i * m + i];
            if value.abs() > SIMILARITY_TOLERANCE {
                return Err(Error::NonzeroDiagonal { index: i, value });
            }
            entries[i * m + i] = 0.0;
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let (a_ij, a_ji) = (entries[i * m + j], entries[j * m + i]);
                if (a_ij - a_ji).abs() > SIMILARITY_TOLERANCE {
                    return Err(Error::Asymmetric { i, j, a_ij, a_ji });
                }
                let mean = if a_ij == a_ji { a_ij } else { 0.5 * (a_ij + a_ji) };
                if !(-SIMILARITY_TOLERANCE..=1.0 + SIMILARITY_TOLERANCE).contains(&mean) {
                    return Err(Error::OutOfRange { i, j, value: mean });
                }
                let clamped = mean.clamp(0.0, 1.0);
                entries[i * m + j] = clamped;
                entries[j * m + i] = clamped;
            }
        }
        Ok(Self {
            m,
            entries,
            messages: None,
        })
    }

    /// Attaches message texts; their count must equal `M`.
    pub fn with_messages(mut self, messages: MessageSet) -> Result<Self> {
        if messages.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "message count",
                expected: self.m,
                found: messages.len(),
            });
        }
        self.messages = Some(messages.messages);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn messages(&self) -> Option<&[String]> {
        self.messages.as_deref()
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    /// Relabels messages: entry `(i, j)` of the result is `A(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "permutation length",
                expected: self.m,
                found: perm.len(),
            });
        }
        Self::from_fn(self.m, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.m).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Deserialize)]
struct SimilarityDoc {
    schema: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(default)]
    messages: Option<Vec<String>>,
    #[serde(rename = "A")]
    a: Vec<Vec<Option<f64>>>,
}

pub fn parse_similarity(text: &str) -> Result<SimilarityMatrix> {
    let doc: SimilarityDoc = serde_json::from_str(&nullify_non_finite(text))?;
    check_schema(doc.schema)?;
    if doc.a.len() != doc.m {
        return Err(Error::DimensionMismatch {
            what: "similarity rows vs M",
            expected: doc.m,
            found: doc.a.len(),
        });
    }
    let mut rows = Vec::with_capacity(doc.m);
    for (i, row) in doc.a.into_iter().enumerate() {
        let row = row
            .into_iter()
            .enumerate()
            .map(|(j, v)| {
                v.ok_or(Error::NonFinite {
                    what: "similarity matrix",
                    index: i * doc.m + j,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let matrix = SimilarityMatrix::from_rows(&rows)?;
    match doc.messages {
        Some(messages) => matrix.with_messages(MessageSet::new("", messages)?),
        None => Ok(matrix),
    }
}

pub fn load_similarity(path: impl AsRef<Path>) -> Result<SimilarityMatrix> {
    parse_similarity(&read_text(path.as_ref())?)
}

pub fn render_similarity(matrix: &SimilarityMatrix) -> String {
    let mut out = format!("{{\n  \"schema\": {SCHEMA_VERSION},\n  \"M\": {},\n", matrix.m);
    if let Some(messages) = &matrix.messages {
        let messages = serde_json::to_string(messages).expect("strings serialize");
        out.push_str(&format!("  \"messages\": {messages},\n"));
    }
    out.push_str("  \"A\": [\n");
    for i in 0..matrix.m {
        let row: Vec<String> = matrix.row(i).iter().map(|&v| fmt_f64(v)).collect();
        let sep = if i + 1 < matrix.m { "," } else { "" };
        out.push_str(&format!("    [{}]{sep}\n", row.join(", ")));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn save_similarity(matrix: &SimilarityMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_similarity(matrix))
}
