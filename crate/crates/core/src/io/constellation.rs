use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{check_schema, fmt_f64, nullify_non_finite, read_text, write_text, SCHEMA_VERSION};
use crate::error::{Error, Result};

/// Relative slack on the unit average-power constraint.
pub const POWER_TOLERANCE: f64 = 1e-9;

/// `M` complex signal vectors of length `N`, one per message, with average
/// power `(1/M) Σ ‖x_i‖² ≤ 1`.
///
/// Points are stored row-major: point `i` occupies `points[i*N..(i+1)*N]`,
/// which is also the layout of the stacked signal vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: usize,
    n: usize,
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(m: usize, n: usize, points: Vec<Complex64>) -> Result<Self> {
        if m < 2 {
            return Err(Error::Invalid {
                field: "M",
                reason: format!("need at least 2 messages, got {m}"),
            });
        }
        if n < 1 {
            return Err(Error::Invalid {
                field: "N",
                reason: "need at least one channel use".into(),
            });
        }
        if points.len() != m * n {
            return Err(Error::DimensionMismatch {
                what: "constellation entries",
                expected: m * n,
                found: points.len(),
            });
        }
        if let Some(index) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                what: "constellation",
                index,
            });
        }
        let average = points.iter().map(Complex64::norm_sqr).sum::<f64>() / m as f64;
        if average > 1.0 + POWER_TOLERANCE {
            return Err(Error::PowerConstraint { average });
        }
        Ok(Self { m, n, points })
    }

    pub fn from_vectors(vectors: &[Vec<Complex64>]) -> Result<Self> {
        let n = vectors.first().map_or(0, Vec::len);
        if let Some(bad) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "signal vector length",
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(vectors.len(), n, vectors.concat())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[Complex64]> {
        self.points.chunks(self.n)
    }

    /// The stacked vector `[x_1ᵀ, …, x_Mᵀ]ᵀ`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.points
    }

    pub fn average_power(&self) -> f64 {
        self.points.iter().map(Complex64::norm_sqr).sum::<f64>() / self.m as f64
    }

    pub fn min_distance_sq(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                best = best.min(distance_sq(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Multiplies every entry by `e^{jψ}`.
    pub fn rotated(&self, psi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, psi);
        Self {
            m: self.m,
            n: self.n,
            points: self.points.iter().map(|p| p * phase).collect(),
        }
    }

    /// Reorders messages: point `i` of the result is point `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.m {
            return Err(Error::DimensionMismatch {
                what: "permutation length",
                expected: self.m,
                found: perm.len(),
            });
        }
        let points = perm.iter().flat_map(|&p| self.point(p).iter().copied()).collect();
        Self::new(self.m, self.n, points)
    }
}

#[inline]
pub(crate) fn distance_sq(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

#[derive(Deserialize)]
struct ConstellationDoc {
    schema: u32,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    points: Vec<Vec<[Option<f64>; 2]>>,
}

pub fn parse_constellation(text: &str) -> Result<Constellation> {
    let doc: ConstellationDoc = serde_json::from_str(&nullify_non_finite(text))?;
    check_schema(doc.schema)?;
    if doc.points.len() != doc.m {
        return Err(Error::DimensionMismatch {
            what: "constellation points vs M",
            expected: doc.m,
            found: doc.points.len(),
        });
    }
    let mut points = Vec::with_capacity(doc.m * doc.n);
    for vector in &doc.points {
        if vector.len() != doc.n {
            return Err(Error::DimensionMismatch {
                what: "signal vector length vs N",
                expected: doc.n,
                found: vector.len(),
            });
        }
        for &[re, im] in vector {
            let index = points.len();
            match (re, im) {
                (Some(re), Some(im)) => points.push(Complex64::new(re, im)),
                _ => {
                    return Err(Error::NonFinite {
                        what: "constellation",
                        index,
                    })
                }
            }
        }
    }
    Constellation::new(doc.m, doc.n, points)
}

pub fn load_constellation(path: impl AsRef<Path>) -> Result<Constellation> {
    parse_constellation(&read_text(path.as_ref())?)
}

pub fn render_constellation(c: &Constellation) -> String {
    let mut out = format!(
        "{{\n  \"schema\": {SCHEMA_VERSION},\n  \"M\": {},\n  \"N\": {},\n  \"points\": [\n",
        c.m, c.n
    );
    for (i, point) in c.points().enumerate() {
        let coords: Vec<String> = point
            .iter()
            .map(|p| format!("[{}, {}]", fmt_f64(p.re), fmt_f64(p.im)))
            .collect();
        let sep = if i + 1 < c.m { "," } else { "" };
        out.push_str(&format!("    [{}]{sep}\n", coords.join(", ")));
    }
    out.push_str("  ]\n}\n");
    out
}

pub fn save_constellation(c: &Constellation, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &render_constellation(c))
}
