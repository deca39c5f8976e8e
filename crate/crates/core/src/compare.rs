//! Shaped-versus-baseline comparison over an SNR grid.
//!
//! At every SNR the shaper is rerun at that SNR with the baseline added as
//! an extra start, so the shaped bound can never exceed the baseline bound
//! there. SNR gains at a target loss are read off the two curves by linear
//! interpolation of `log10(loss)` against SNR in dB.

use crate::baselines::{build_baseline, BaselineSpec};
use crate::channel::{estimate_for_point, ChannelConfig, SimEstimate};
use crate::error::{Error, Result};
use crate::io::{Constellation, SimilarityMatrix};
use crate::objective::{db_to_linear, semantic_loss_bound, ObjectiveContext};
use crate::shaper::{shape, ShapingConfig, ShapingResult};

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub snr_db: f64,
    pub shaped_bound: f64,
    pub baseline_bound: f64,
    pub shaped: SimEstimate,
    pub baseline: SimEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRow {
    pub target_loss: f64,
    /// `SNR_baseline − SNR_shaped` in dB on the bound curves, if both reach
    /// the target inside the grid.
    pub gain_bound_db: Option<f64>,
    /// Same on the simulated curves.
    pub gain_empirical_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub baseline: Constellation,
    pub rows: Vec<ComparisonRow>,
    pub gains: Vec<GainRow>,
    /// Shaping outcome at each SNR, in grid order.
    pub shaped: Vec<ShapingResult>,
}

/// SNR (dB) at which a loss curve first crosses `target`, interpolating
/// `log10(loss)` linearly between grid points. Points with zero loss are
/// skipped since they have no logarithm.
pub fn snr_at_loss(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    if !(target > 0.0) {
        return None;
    }
    let points: Vec<(f64, f64)> = curve.iter().copied().filter(|&(_, loss)| loss > 0.0).collect();
    let log_target = target.log10();
    for pair in points.windows(2) {
        let ((s0, l0), (s1, l1)) = (pair[0], pair[1]);
        let (y0, y1) = (l0.log10(), l1.log10());
        if y0 == log_target {
            return Some(s0);
        }
        if (y0 - log_target) * (y1 - log_target) <= 0.0 && y0 != y1 {
            return Some(s0 + (log_target - y0) / (y1 - y0) * (s1 - s0));
        }
    }
    points.last().filter(|&&(_, l)| l == target).map(|&(s, _)| s)
}

fn gain(shaped: &[(f64, f64)], baseline: &[(f64, f64)], target: f64) -> Option<f64> {
    Some(snr_at_loss(baseline, target)? - snr_at_loss(shaped, target)?)
}

/// Shapes at every SNR of `snrs_db` (seeded with the baseline), then
/// evaluates both constellations analytically and by simulation.
///
/// `template` supplies everything except the SNR and the baseline start;
/// its seed also drives the channel simulation.
pub fn compare_against_baseline(
    a: &SimilarityMatrix,
    baseline: BaselineSpec,
    snrs_db: &[f64],
    template: &ShapingConfig,
    trials: u64,
    targets: &[f64],
) -> Result<Comparison> {
    if a.dim() != baseline.m {
        return Err(Error::DimensionMismatch {
            what: "similarity dimension vs baseline M",
            expected: baseline.m,
            found: a.dim(),
        });
    }
    let reference = build_baseline(baseline)?;
    let ctx = ObjectiveContext::new(a.clone(), 1.0, baseline.n)?;

    let mut rows = Vec::with_capacity(snrs_db.len());
    let mut shaped = Vec::with_capacity(snrs_db.len());
    for (point, &snr_db) in snrs_db.iter().enumerate() {
        let gamma = db_to_linear(snr_db);
        let config = ShapingConfig {
            gamma,
            seed_with_baseline: Some(reference.clone()),
            ..template.clone()
        };
        let result = shape(&config, a, baseline.m, baseline.n)?;
        let at_gamma = ctx.with_gamma(gamma)?;
        let channel = ChannelConfig::new(gamma, trials, template.seed)?;
        rows.push(ComparisonRow {
            snr_db,
            shaped_bound: semantic_loss_bound(&result.constellation, &at_gamma)?,
            baseline_bound: semantic_loss_bound(&reference, &at_gamma)?,
            shaped: estimate_for_point(&result.constellation, a, &channel, point)?,
            baseline: estimate_for_point(&reference, a, &channel, point)?,
        });
        shaped.push(result);
    }

    let curve = |f: &dyn Fn(&ComparisonRow) -> f64| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.snr_db, f(r))).collect()
    };
    let shaped_bound = curve(&|r| r.shaped_bound);
    let baseline_bound = curve(&|r| r.baseline_bound);
    let shaped_emp = curve(&|r| r.shaped.semantic_loss_mean);
    let baseline_emp = curve(&|r| r.baseline.semantic_loss_mean);
    let gains = targets
        .iter()
        .map(|&target_loss| GainRow {
            target_loss,
            gain_bound_db: gain(&shaped_bound, &baseline_bound, target_loss),
            gain_empirical_db: gain(&shaped_emp, &baseline_emp, target_loss),
        })
        .collect();

    Ok(Comparison {
        baseline: reference,
        rows,
        gains,
        shaped,
    })
}
