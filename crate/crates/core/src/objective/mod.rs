//! The semantic-loss union bound and its descent direction.
//!
//! For a constellation `x_1..x_M` at linear SNR `γ` the bound is
//!
//! ```text
//! SL(X) = (1/M) Σ_i Σ_{j≠i} A(i,j) · Q( sqrt(γ ‖x_i − x_j‖² / 2) )
//! ```
//!
//! Two evaluation routes exist. The production route in this module works
//! on pairwise distances of the unstacked points in `O(M²N)`. The route in
//! [`weights`] materializes the dense pair matrices `W_ij` with
//! `zᴴ W_ij z = ‖x_i − x_j‖²` and is kept as an independent check on small
//! instances.

mod weights;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

pub use weights::{bound_from_stacked, build_pair_weights, descent_direction, omega, PairWeightMatrix};

use crate::error::{Error, Result};
use crate::io::{distance_sq, Constellation, SimilarityMatrix};

/// Squared distance below which two points with nonzero loss weight are
/// treated as coincident; the gradient diverges there.
pub const D_FLOOR: f64 = 1e-10;

/// Gaussian tail probability `Q(x) = P(Z > x)` for standard normal `Z`.
#[inline]
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(gamma: f64) -> f64 {
    10.0 * gamma.log10()
}

/// Probability that ML detection in AWGN prefers `x_j` when `x_i` was sent,
/// `Q(sqrt(γ ‖x_i − x_j‖² / 2))`.
pub fn pairwise_error_prob(x_i: &[Complex64], x_j: &[Complex64], gamma: f64) -> Result<f64> {
    if x_i.len() != x_j.len() {
        return Err(Error::DimensionMismatch {
            what: "signal vector length",
            expected: x_i.len(),
            found: x_j.len(),
        });
    }
    Ok(q_function((gamma * distance_sq(x_i, x_j) / 2.0).sqrt()))
}

/// The stacked signal `z = [x_1ᵀ, …, x_Mᵀ]ᵀ` of length `M·N`.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSignal {
    m: usize,
    n: usize,
    z: Vec<Complex64>,
}

impl StackedSignal {
    pub fn new(m: usize, n: usize, z: Vec<Complex64>) -> Result<Self> {
        if z.len() != m * n {
            return Err(Error::DimensionMismatch {
                what: "stacked signal length",
                expected: m * n,
                found: z.len(),
            });
        }
        Ok(Self { m, n, z })
    }

    pub fn from_constellation(c: &Constellation) -> Self {
        Self {
            m: c.m(),
            n: c.n(),
            z: c.as_slice().to_vec(),
        }
    }

    pub fn to_constellation(&self) -> Result<Constellation> {
        Constellation::new(self.m, self.n, self.z.clone())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.z
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.z
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[Complex64] {
        &self.z[i * self.n..(i + 1) * self.n]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.z)
    }

    /// Rescales onto the power sphere `‖z‖² = M`.
    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroVector("stacked signal"));
        }
        let scale = (self.m as f64).sqrt() / norm;
        self.z.iter_mut().for_each(|v| *v *= scale);
        Ok(())
    }

    pub fn rotated(&self, psi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, psi);
        Self {
            m: self.m,
            n: self.n,
            z: self.z.iter().map(|v| v * phase).collect(),
        }
    }
}

/// Unordered index pairs `(i, j)` with `i < j`.
pub(crate) fn distinct_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |i| ((i + 1)..m).map(move |j| (i, j)))
}

pub(crate) fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum()
}

/// Loss weights, SNR and dimensions of one shaping problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveContext {
    similarity: SimilarityMatrix,
    gamma: f64,
    n: usize,
}

impl ObjectiveContext {
    /// `gamma` is the linear SNR; `n` the channel uses per message.
    pub fn new(similarity: SimilarityMatrix, gamma: f64, n: usize) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::Invalid {
                field: "gamma",
                reason: format!("SNR must be positive and finite, got {gamma}"),
            });
        }
        if n == 0 {
            return Err(Error::Invalid {
                field: "N",
                reason: "need at least one channel use".into(),
            });
        }
        Ok(Self {
            similarity,
            gamma,
            n,
        })
    }

    pub fn similarity(&self) -> &SimilarityMatrix {
        &self.similarity
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn m(&self) -> usize {
        self.similarity.dim()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.similarity.clone(), gamma, self.n)
    }

    pub(crate) fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if m != self.m() {
            return Err(Error::DimensionMismatch {
                what: "message count",
                expected: self.m(),
                found: m,
            });
        }
        if n != self.n {
            return Err(Error::DimensionMismatch {
                what: "channel uses",
                expected: self.n,
                found: n,
            });
        }
        Ok(())
    }

    /// The bound for a stacked vector laid out as `M` blocks of `N`.
    /// Dimensions are the caller's responsibility.
    pub(crate) fn bound_unchecked(&self, z: &[Complex64]) -> f64 {
        let (m, n) = (self.m(), self.n);
        let mut total = 0.0;
        for i in 0..m {
            let x_i = &z[i * n..(i + 1) * n];
            for j in (i + 1)..m {
                let a = self.similarity.get(i, j);
                if a == 0.0 {
                    continue;
                }
                let d = distance_sq(x_i, &z[j * n..(j + 1) * n]);
                total += a * q_function((self.gamma * d / 2.0).sqrt());
            }
        }
        // Each unordered pair stands for the (i,j) and (j,i) terms.
        2.0 * total / m as f64
    }

    /// The first pair with nonzero weight closer than [`D_FLOOR`], if any.
    pub(crate) fn find_coincident(&self, z: &[Complex64]) -> Option<Error> {
        let (m, n) = (self.m(), self.n);
        for i in 0..m {
            for j in (i + 1)..m {
                if self.similarity.get(i, j) == 0.0 {
                    continue;
                }
                let distance_sq = distance_sq(&z[i * n..(i + 1) * n], &z[j * n..(j + 1) * n]);
                if distance_sq < D_FLOOR {
                    return Some(Error::CoincidentPoints { i, j, distance_sq });
                }
            }
        }
        None
    }

    pub fn bound(&self, z: &StackedSignal) -> Result<f64> {
        self.check_dims(z.m, z.n)?;
        Ok(self.bound_unchecked(&z.z))
    }

    /// Negative gradient of the bound with respect to `z`, treating real and
    /// imaginary parts as independent coordinates (entry `k` holds
    /// `−∂/∂Re z_k − j ∂/∂Im z_k`). Equals `−Ω(z) z`.
    pub fn descent_direction(&self, z: &StackedSignal) -> Result<Vec<Complex64>> {
        self.check_dims(z.m, z.n)?;
        self.descent_direction_unchecked(&z.z)
    }

    pub(crate) fn descent_direction_unchecked(&self, z: &[Complex64]) -> Result<Vec<Complex64>> {
        let (m, n) = (self.m(), self.n);
        let mut g = vec![Complex64::new(0.0, 0.0); m * n];
        let scale = 2.0 / m as f64;
        for i in 0..m {
            for j in (i + 1)..m {
                let a = self.similarity.get(i, j);
                if a == 0.0 {
                    continue;
                }
                let (x_i, x_j) = (&z[i * n..(i + 1) * n], &z[j * n..(j + 1) * n]);
                let d = distance_sq(x_i, x_j);
                if d < D_FLOOR {
                    return Err(Error::CoincidentPoints {
                        i,
                        j,
                        distance_sq: d,
                    });
                }
                let c = scale * pair_coefficient(a, self.gamma, d);
                for k in 0..n {
                    let push = (x_i[k] - x_j[k]) * c;
                    g[i * n + k] += push;
                    g[j * n + k] -= push;
                }
            }
        }
        Ok(g)
    }
}

/// `sqrt(γ A² / (4π d)) · exp(−γ d / 4)`, the weight of `W_ij` in `−Ω(z)·M`.
#[inline]
pub(crate) fn pair_coefficient(a: f64, gamma: f64, d: f64) -> f64 {
    a * (gamma / (4.0 * PI * d)).sqrt() * (-gamma * d / 4.0).exp()
}

/// The union bound for a constellation.
pub fn semantic_loss_bound(c: &Constellation, ctx: &ObjectiveContext) -> Result<f64> {
    ctx.check_dims(c.m(), c.n())?;
    Ok(ctx.bound_unchecked(c.as_slice()))
}
