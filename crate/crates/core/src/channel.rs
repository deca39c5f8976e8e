//! Monte Carlo AWGN transmission with maximum-likelihood detection.
//!
//! Noise is circularly-symmetric complex Gaussian with variance `1/γ` per
//! complex dimension (`1/(2γ)` per real component). Under this convention
//! the probability that minimum-distance detection confuses `x_i` with `x_j`
//! in a two-point comparison is exactly `Q(sqrt(γ‖x_i − x_j‖²/2))`, so the
//! simulated loss and the analytic union bound share one SNR axis.
//!
//! Trials are stratified: every message is sent `trials / M` times (the
//! remainder going to the lowest indices) and per-message averages are
//! combined with the uniform prior. Work is cut into fixed chunks, each with
//! its own ChaCha stream, and only integer confusion counts are accumulated,
//! so results are bit-identical for any number of worker threads.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{Constellation, SimilarityMatrix};
use crate::objective::{db_to_linear, semantic_loss_bound, ObjectiveContext};

const CHUNK_TRIALS: u64 = 1 << 16;
/// Stream-id bits reserved for the chunk index; the sweep point index sits above.
const POINT_STREAM_SHIFT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// Linear SNR.
    pub gamma: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn new(gamma: f64, trials: u64, seed: u64) -> Result<Self> {
        let config = Self { gamma, trials, seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || self.gamma.is_nan() {
            return Err(Error::Invalid {
                field: "gamma",
                reason: format!("must be positive, got {}", self.gamma),
            });
        }
        if self.trials < 1 {
            return Err(Error::Invalid {
                field: "trials",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEstimate {
    pub semantic_loss_mean: f64,
    pub semantic_loss_stderr: f64,
    pub message_error_rate: f64,
    pub trials_used: u64,
    m: usize,
    confusions: Vec<u64>,
}

impl SimEstimate {
    /// Number of trials where `sent` was transmitted and `detected` decoded.
    pub fn confusion(&self, sent: usize, detected: usize) -> u64 {
        self.confusions[sent * self.m + detected]
    }

    pub fn trials_for(&self, sent: usize) -> u64 {
        self.confusions[sent * self.m..(sent + 1) * self.m].iter().sum()
    }

    pub fn m(&self) -> usize {
        self.m
    }
}

/// `x + n` with `n` drawn per complex entry with variance `1/γ`.
pub fn transmit<R: Rng + ?Sized>(x: &[Complex64], gamma: f64, rng: &mut R) -> Vec<Complex64> {
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    transmit_into(x, (0.5 / gamma).sqrt(), rng, &mut y);
    y
}

fn transmit_into<R: Rng + ?Sized>(x: &[Complex64], sigma: f64, rng: &mut R, y: &mut [Complex64]) {
    for (out, xk) in y.iter_mut().zip(x) {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *out = xk + Complex64::new(re * sigma, im * sigma);
    }
}

/// Index of the constellation point nearest to `y`; ties go to the lowest index.
pub fn ml_detect(y: &[Complex64], c: &Constellation) -> Result<usize> {
    if y.len() != c.n() {
        return Err(Error::DimensionMismatch {
            what: "received vector length",
            expected: c.n(),
            found: y.len(),
        });
    }
    Ok(nearest(y, c))
}

#[inline]
fn nearest(y: &[Complex64], c: &Constellation) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, x) in c.points().enumerate() {
        let d: f64 = y.iter().zip(x).map(|(a, b)| (a - b).norm_sqr()).sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

fn check_inputs(c: &Constellation, a: &SimilarityMatrix) -> Result<()> {
    if c.m() != a.dim() {
        return Err(Error::DimensionMismatch {
            what: "similarity dimension vs constellation M",
            expected: c.m(),
            found: a.dim(),
        });
    }
    Ok(())
}

pub fn estimate_semantic_loss(
    c: &Constellation,
    a: &SimilarityMatrix,
    config: &ChannelConfig,
) -> Result<SimEstimate> {
    config.validate()?;
    check_inputs(c, a)?;
    Ok(simulate(c, a, config, 0))
}

fn simulate(c: &Constellation, a: &SimilarityMatrix, config: &ChannelConfig, stream_base: u64) -> SimEstimate {
    let m = c.m();
    let sigma = (0.5 / config.gamma).sqrt();
    let per_message = |i: usize| config.trials / m as u64 + u64::from((i as u64) < config.trials % m as u64);

    // (message, trials) work items in a fixed order.
    let mut items = Vec::new();
    for i in 0..m {
        let mut left = per_message(i);
        while left > 0 {
            let take = left.min(CHUNK_TRIALS);
            items.push((i, take));
            left -= take;
        }
    }

    let counts: Vec<(usize, Vec<u64>)> = items
        .par_iter()
        .enumerate()
        .map(|(index, &(sent, trials))| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream_base + index as u64);
            let mut row = vec![0u64; m];
            let mut y = vec![Complex64::new(0.0, 0.0); c.n()];
            let x = c.point(sent);
            for _ in 0..trials {
                transmit_into(x, sigma, &mut rng, &mut y);
                row[nearest(&y, c)] += 1;
            }
            (sent, row)
        })
        .collect();

    let mut confusions = vec![0u64; m * m];
    for (sent, row) in counts {
        for (slot, count) in confusions[sent * m..(sent + 1) * m].iter_mut().zip(row) {
            *slot += count;
        }
    }

    let mut loss_sum = 0.0;
    let mut error_sum = 0.0;
    let mut variance_sum = 0.0;
    let mut strata = 0usize;
    for i in 0..m {
        let row = &confusions[i * m..(i + 1) * m];
        let n_i: u64 = row.iter().sum();
        if n_i == 0 {
            continue;
        }
        strata += 1;
        let n = n_i as f64;
        let weighted: f64 = row.iter().zip(a.row(i)).map(|(&k, &w)| k as f64 * w).sum();
        let mean = weighted / n;
        loss_sum += mean;
        error_sum += (n_i - row[i]) as f64 / n;
        if n_i > 1 {
            let ss: f64 = row
                .iter()
                .zip(a.row(i))
                .map(|(&k, &w)| k as f64 * (w - mean) * (w - mean))
                .sum();
            variance_sum += ss / (n - 1.0) / n;
        }
    }
    let strata = strata as f64;
    SimEstimate {
        semantic_loss_mean: loss_sum / strata,
        semantic_loss_stderr: variance_sum.sqrt() / strata,
        message_error_rate: error_sum / strata,
        trials_used: config.trials,
        m,
        confusions,
    }
}

/// Estimate for the `point`-th entry of a multi-point experiment, drawing
/// from the same stream block [`sweep`] would use for that entry.
pub(crate) fn estimate_for_point(
    c: &Constellation,
    a: &SimilarityMatrix,
    config: &ChannelConfig,
    point: usize,
) -> Result<SimEstimate> {
    config.validate()?;
    check_inputs(c, a)?;
    Ok(simulate(c, a, config, (point as u64) << POINT_STREAM_SHIFT))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub estimate: SimEstimate,
    /// Analytic union bound at this SNR.
    pub bound: f64,
}

/// Simulation plus analytic bound at each SNR (in dB). Point `p` draws from
/// its own block of RNG streams, so the first point reproduces
/// [`estimate_semantic_loss`] with the same seed.
pub fn sweep(
    c: &Constellation,
    a: &SimilarityMatrix,
    gammas_db: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    check_inputs(c, a)?;
    let ctx = ObjectiveContext::new(a.clone(), 1.0, c.n())?;
    gammas_db
        .iter()
        .enumerate()
        .map(|(p, &snr_db)| {
            let config = ChannelConfig::new(db_to_linear(snr_db), trials, seed)?;
            let bound = semantic_loss_bound(c, &ctx.with_gamma(config.gamma)?)?;
            let estimate = estimate_for_point(c, a, &config, p)?;
            Ok(SweepPoint {
                snr_db,
                estimate,
                bound,
            })
        })
        .collect()
}
