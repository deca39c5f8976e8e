//! Dense pair-matrix form of the bound.
//!
//! With `G = [I_N, …, I_N]` (`N × MN`), `R_G = Gᴴ G`, `e_i` the length-`MN`
//! indicator of block `i` and `E_ij = (e_i − e_j)(e_i − e_j)ᴴ`, the matrix
//! `W_ij = R_G ⊙ E_ij` satisfies `zᴴ W_ij z = ‖x_i − x_j‖²`. Building and
//! applying these matrices costs `O(M²·(MN)²)`, so this path only serves as
//! a cross-check for the distance-based evaluation.

use num_complex::Complex64;

use super::{pair_coefficient, q_function, ObjectiveContext, StackedSignal, D_FLOOR};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `W_ij` for one ordered message pair, stored dense and row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PairWeightMatrix {
    pub i: usize,
    pub j: usize,
    dim: usize,
    w: Vec<Complex64>,
}

impl PairWeightMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.w[row * self.dim + col]
    }

    pub fn apply(&self, z: &[Complex64]) -> Vec<Complex64> {
        self.w
            .chunks(self.dim)
            .map(|row| row.iter().zip(z).map(|(w, v)| w * v).sum())
            .collect()
    }

    /// `zᴴ W z`, which is real for Hermitian `W`.
    pub fn quadratic_form(&self, z: &[Complex64]) -> Complex64 {
        self.apply(z)
            .iter()
            .zip(z)
            .map(|(wz, v)| v.conj() * wz)
            .sum()
    }
}

/// `W_ij` for every ordered pair `i ≠ j`, in row-major pair order.
pub fn build_pair_weights(m: usize, n: usize) -> Vec<PairWeightMatrix> {
    let dim = m * n;
    // G = [I_N, I_N, …, I_N]
    let mut g = vec![ZERO; n * dim];
    for block in 0..m {
        for k in 0..n {
            g[k * dim + block * n + k] = Complex64::new(1.0, 0.0);
        }
    }
    // R_G = Gᴴ G
    let mut r = vec![ZERO; dim * dim];
    for row in 0..dim {
        for col in 0..dim {
            r[row * dim + col] = (0..n).map(|k| g[k * dim + row].conj() * g[k * dim + col]).sum();
        }
    }
    let indicator = |block: usize| -> Vec<f64> {
        (0..dim).map(|k| if k / n == block { 1.0 } else { 0.0 }).collect()
    };

    let mut out = Vec::with_capacity(m * (m - 1));
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            let (e_i, e_j) = (indicator(i), indicator(j));
            let diff: Vec<f64> = e_i.iter().zip(&e_j).map(|(a, b)| a - b).collect();
            let mut w = vec![ZERO; dim * dim];
            for row in 0..dim {
                for col in 0..dim {
                    w[row * dim + col] = r[row * dim + col] * (diff[row] * diff[col]);
                }
            }
            out.push(PairWeightMatrix { i, j, dim, w });
        }
    }
    out
}

fn check_weights(z: &StackedSignal, ctx: &ObjectiveContext, weights: &[PairWeightMatrix]) -> Result<()> {
    ctx.check_dims(z.m(), z.n())?;
    let m = ctx.m();
    if weights.len() != m * (m - 1) {
        return Err(Error::DimensionMismatch {
            what: "pair weight count",
            expected: m * (m - 1),
            found: weights.len(),
        });
    }
    if let Some(w) = weights.iter().find(|w| w.dim != m * ctx.n() || w.i >= m || w.j >= m) {
        return Err(Error::DimensionMismatch {
            what: "pair weight dimension",
            expected: m * ctx.n(),
            found: w.dim,
        });
    }
    Ok(())
}

/// The bound evaluated as `(1/M) Σ A(i,j) Q(sqrt(γ zᴴ W_ij z / 2))`.
pub fn bound_from_stacked(
    z: &StackedSignal,
    ctx: &ObjectiveContext,
    weights: &[PairWeightMatrix],
) -> Result<f64> {
    check_weights(z, ctx, weights)?;
    let total: f64 = weights
        .iter()
        .map(|w| {
            let d = w.quadratic_form(z.as_slice()).re.max(0.0);
            ctx.similarity().get(w.i, w.j) * q_function((ctx.gamma() * d / 2.0).sqrt())
        })
        .sum();
    Ok(total / ctx.m() as f64)
}

/// `Ω(z) = −(1/M) Σ sqrt(γ A(i,j)² / (4π zᴴW_ij z)) · exp(−γ zᴴW_ij z / 4) · W_ij`,
/// dense and row-major.
pub fn omega(z: &StackedSignal, ctx: &ObjectiveContext, weights: &[PairWeightMatrix]) -> Result<Vec<Complex64>> {
    check_weights(z, ctx, weights)?;
    let dim = z.as_slice().len();
    let mut out = vec![ZERO; dim * dim];
    for w in weights {
        let a = ctx.similarity().get(w.i, w.j);
        if a == 0.0 {
            continue;
        }
        let d = w.quadratic_form(z.as_slice()).re;
        if d < D_FLOOR {
            return Err(Error::CoincidentPoints {
                i: w.i.min(w.j),
                j: w.i.max(w.j),
                distance_sq: d,
            });
        }
        let c = -pair_coefficient(a, ctx.gamma(), d) / ctx.m() as f64;
        out.iter_mut().zip(&w.w).for_each(|(o, v)| *o += v * c);
    }
    Ok(out)
}

/// `g = −Ω(z) z` through the dense matrices.
pub fn descent_direction(
    z: &StackedSignal,
    ctx: &ObjectiveContext,
    weights: &[PairWeightMatrix],
) -> Result<Vec<Complex64>> {
    let omega = omega(z, ctx, weights)?;
    let dim = z.as_slice().len();
    Ok(omega
        .chunks(dim)
        .map(|row| -row.iter().zip(z.as_slice()).map(|(o, v)| o * v).sum::<Complex64>())
        .collect())
}
