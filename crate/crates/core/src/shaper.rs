//! Projected gradient descent on the power sphere `‖z‖² = M`.
//!
//! Each iteration computes the descent direction `g = −Ω(z) z`, removes its
//! radial component, and moves along the great circle through `z` in the
//! tangent direction:
//!
//! ```text
//! g⊥      = g − (zᴴg / ‖z‖²) z
//! z(θ)    = cos θ · z + sin θ · √M · g⊥ / ‖g⊥‖,   θ ∈ [0, π/2]
//! ```
//!
//! `θ` minimizes the bound along the circle. Iteration stops once
//! `‖g⊥‖ / ‖g‖ ≤ ε`, i.e. the gradient is (nearly) normal to the sphere.
//! Because `θ = 0` is always a line-search candidate the bound never
//! increases from one iterate to the next.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{distance_sq, Constellation, ShapingReport, SimilarityMatrix, StopReason, TraceEntry};
use crate::objective::{distinct_pairs, norm_sqr, ObjectiveContext, StackedSignal};

const INIT_ATTEMPTS: usize = 100;
const INIT_SEPARATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchConfig {
    /// Uniform coarse grid size on `[0, π/2]`, endpoints included.
    pub grid_points: usize,
    /// Golden-section refinement stops when the bracket is narrower than this.
    pub tol_theta: f64,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            grid_points: 64,
            tol_theta: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingConfig {
    /// Linear SNR.
    pub gamma: f64,
    /// Stop once `‖g⊥‖ / ‖g‖ ≤ epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
    pub line_search: LineSearchConfig,
    /// Extra starting point tried after the random restarts.
    pub seed_with_baseline: Option<Constellation>,
}

impl Default for ShapingConfig {
    fn default() -> Self {
        Self {
            gamma: 10.0,
            epsilon: 1e-2,
            max_iterations: 500,
            restarts: 50,
            seed: 0,
            line_search: LineSearchConfig::default(),
            seed_with_baseline: None,
        }
    }
}

impl ShapingConfig {
    pub fn validate(&self) -> Result<()> {
        let invalid = |field, reason: String| Err(Error::Invalid { field, reason });
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return invalid("gamma", format!("must be positive and finite, got {}", self.gamma));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon));
        }
        if self.max_iterations < 1 {
            return invalid("max_iterations", "must be at least 1".into());
        }
        if self.restarts < 1 {
            return invalid("restarts", "must be at least 1".into());
        }
        if self.line_search.grid_points < 2 {
            return invalid("line_search.grid_points", "must be at least 2".into());
        }
        if !(self.line_search.tol_theta > 0.0) {
            return invalid("line_search.tol_theta", "must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapingResult {
    /// Best constellation over all starts, with average power 1.
    pub constellation: Constellation,
    /// Report of the winning start.
    pub report: ShapingReport,
    /// Final bound of every start, in start order.
    pub all_final_objectives: Vec<f64>,
    /// Reports of every start, in start order.
    pub reports: Vec<ShapingReport>,
}

/// The RNG of random start `restart_index`: one ChaCha stream per start, so
/// draws do not depend on how starts are scheduled.
pub fn restart_rng(seed: u64, restart_index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart_index as u64);
    rng
}

/// Draws `z` with i.i.d. standard complex normal entries scaled to
/// `‖z‖² = M`, redrawing until all pairwise squared distances are at least
/// `0.01 / M`.
pub fn random_init<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<StackedSignal> {
    if m < 2 || n < 1 {
        return Err(Error::Invalid {
            field: "dimensions",
            reason: format!("need M >= 2 and N >= 1, got M = {m}, N = {n}"),
        });
    }
    let threshold = INIT_SEPARATION / m as f64;
    for _ in 0..INIT_ATTEMPTS {
        let z: Vec<Complex64> = (0..m * n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * FRAC_1_SQRT_2
            })
            .collect();
        let mut z = StackedSignal::new(m, n, z)?;
        if z.normalize().is_err() {
            continue;
        }
        let separated =
            distinct_pairs(m).all(|(i, j)| distance_sq(z.point(i), z.point(j)) >= threshold);
        if separated {
            return Ok(z);
        }
    }
    Err(Error::ResampleExhausted {
        attempts: INIT_ATTEMPTS,
    })
}

/// `g − (zᴴg / ‖z‖²) z`, the component of `g` orthogonal to `z` under the
/// complex inner product.
pub fn project(g: &[Complex64], z: &StackedSignal) -> Result<Vec<Complex64>> {
    let z = z.as_slice();
    if g.len() != z.len() {
        return Err(Error::DimensionMismatch {
            what: "direction length",
            expected: z.len(),
            found: g.len(),
        });
    }
    let zz = norm_sqr(z);
    if zz == 0.0 {
        return Err(Error::ZeroVector("z in projection"));
    }
    let coef = inner(z, g) / zz;
    Ok(g.iter().zip(z).map(|(gk, zk)| gk - zk * coef).collect())
}

/// `aᴴ b`.
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn unit_tangent(z: &StackedSignal, g_perp: &[Complex64]) -> Result<Vec<Complex64>> {
    if g_perp.len() != z.as_slice().len() {
        return Err(Error::DimensionMismatch {
            what: "direction length",
            expected: z.as_slice().len(),
            found: g_perp.len(),
        });
    }
    let norm = norm_sqr(g_perp).sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector("projected direction"));
    }
    let scale = (z.m() as f64).sqrt() / norm;
    Ok(g_perp.iter().map(|v| v * scale).collect())
}

fn on_circle(z: &[Complex64], tangent: &[Complex64], theta: f64) -> Vec<Complex64> {
    let (s, c) = theta.sin_cos();
    z.iter().zip(tangent).map(|(zk, tk)| zk * c + tk * s).collect()
}

/// `cos θ · z + sin θ · √M · g⊥ / ‖g⊥‖`.
pub fn rotate_update(z: &StackedSignal, g_perp: &[Complex64], theta: f64) -> Result<StackedSignal> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::Invalid {
            field: "theta",
            reason: format!("must lie in [0, π/2], got {theta}"),
        });
    }
    let tangent = unit_tangent(z, g_perp)?;
    StackedSignal::new(z.m(), z.n(), on_circle(z.as_slice(), &tangent, theta))
}

/// Minimizes the bound over `θ ∈ [0, π/2]` along the great circle of
/// [`rotate_update`]: best point of a uniform grid, refined by golden
/// section inside its neighbouring grid cells. Trial points where two
/// weighted messages coincide are skipped. Returns `0` when no trial beats
/// the current point.
pub fn line_search(
    z: &StackedSignal,
    g_perp: &[Complex64],
    ctx: &ObjectiveContext,
    config: &LineSearchConfig,
) -> Result<f64> {
    ctx.check_dims(z.m(), z.n())?;
    Ok(search_angle(z, g_perp, ctx, config)?.0)
}

fn search_angle(
    z: &StackedSignal,
    g_perp: &[Complex64],
    ctx: &ObjectiveContext,
    config: &LineSearchConfig,
) -> Result<(f64, f64)> {
    let tangent = unit_tangent(z, g_perp)?;
    let current = ctx.bound_unchecked(z.as_slice());
    let eval = |theta: f64| -> f64 {
        let trial = on_circle(z.as_slice(), &tangent, theta);
        if ctx.find_coincident(&trial).is_some() {
            f64::INFINITY
        } else {
            ctx.bound_unchecked(&trial)
        }
    };

    let mut best = (0.0, current);
    let consider = |theta: f64, value: f64, best: &mut (f64, f64)| {
        if value < best.1 {
            *best = (theta, value);
        }
    };

    let steps = config.grid_points - 1;
    let step = FRAC_PI_2 / steps as f64;
    let mut grid_best = (0usize, current);
    for k in 1..=steps {
        let theta = (k as f64 * step).min(FRAC_PI_2);
        let value = eval(theta);
        if value < grid_best.1 {
            grid_best = (k, value);
        }
        consider(theta, value, &mut best);
    }

    // Golden-section search inside the cells adjacent to the best grid point.
    let k = grid_best.0;
    let mut lo = k.saturating_sub(1) as f64 * step;
    let mut hi = (((k + 1).min(steps)) as f64 * step).min(FRAC_PI_2);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    consider(x1, f1, &mut best);
    consider(x2, f2, &mut best);
    while hi - lo > config.tol_theta {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
            consider(x1, f1, &mut best);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
            consider(x2, f2, &mut best);
        }
    }
    Ok(best)
}

/// Everything known about one iterate, handed to observers of
/// [`shape_once_observed`].
#[derive(Debug)]
pub struct IterationState<'a> {
    pub k: usize,
    pub z: &'a StackedSignal,
    pub gradient: &'a [Complex64],
    pub projected: &'a [Complex64],
    pub objective: f64,
    pub grad_ratio: f64,
}

/// One run of the descent from `init`, which is first scaled onto the sphere.
pub fn shape_once(
    init: &StackedSignal,
    config: &ShapingConfig,
    ctx: &ObjectiveContext,
) -> Result<(ShapingReport, StackedSignal)> {
    shape_once_observed(init, config, ctx, |_| {})
}

pub fn shape_once_observed(
    init: &StackedSignal,
    config: &ShapingConfig,
    ctx: &ObjectiveContext,
    mut observer: impl FnMut(&IterationState<'_>),
) -> Result<(ShapingReport, StackedSignal)> {
    config.validate()?;
    ctx.check_dims(init.m(), init.n())?;
    let mut z = init.clone();
    z.normalize()?;

    let mut trace = Vec::new();
    let mut k = 1;
    let stop_reason = loop {
        let objective = ctx.bound_unchecked(z.as_slice());
        let gradient = ctx.descent_direction_unchecked(z.as_slice())?;
        let projected = project(&gradient, &z)?;
        let g_norm = norm_sqr(&gradient).sqrt();
        let grad_ratio = if g_norm == 0.0 {
            0.0
        } else {
            norm_sqr(&projected).sqrt() / g_norm
        };
        trace.push(TraceEntry {
            k,
            objective,
            grad_ratio,
        });
        observer(&IterationState {
            k,
            z: &z,
            gradient: &gradient,
            projected: &projected,
            objective,
            grad_ratio,
        });

        if grad_ratio <= config.epsilon {
            break StopReason::Converged;
        }
        if k >= config.max_iterations {
            break StopReason::IterationCap;
        }
        let (theta, _) = search_angle(&z, &projected, ctx, &config.line_search)?;
        if theta == 0.0 {
            break StopReason::Stalled;
        }
        z = rotate_update(&z, &projected, theta)?;
        // Keeps rounding drift off the sphere from accumulating.
        z.normalize()?;
        k += 1;
    };

    let report = ShapingReport {
        restart_index: 0,
        seed: config.seed,
        stop_reason,
        final_objective: trace.last().map_or(f64::NAN, |e| e.objective),
        trace,
    };
    Ok((report, z))
}

/// Multi-start shaping: runs [`shape_once`] from `config.restarts` random
/// starts (plus the baseline start, if configured) and keeps the lowest
/// final bound, ties going to the earliest start.
pub fn shape(config: &ShapingConfig, a: &SimilarityMatrix, m: usize, n: usize) -> Result<ShapingResult> {
    config.validate()?;
    if a.dim() != m {
        return Err(Error::DimensionMismatch {
            what: "similarity dimension vs M",
            expected: m,
            found: a.dim(),
        });
    }
    let ctx = ObjectiveContext::new(a.clone(), config.gamma, n)?;
    let baseline = match &config.seed_with_baseline {
        Some(c) => {
            ctx.check_dims(c.m(), c.n())?;
            Some(StackedSignal::from_constellation(c))
        }
        None => None,
    };
    let starts = config.restarts + usize::from(baseline.is_some());

    let outcomes: Vec<Result<(ShapingReport, StackedSignal)>> = (0..starts)
        .into_par_iter()
        .map(|index| {
            let init = if index < config.restarts {
                random_init(m, n, &mut restart_rng(config.seed, index))?
            } else {
                baseline.clone().expect("baseline start exists")
            };
            let (mut report, z) = shape_once(&init, config, &ctx)?;
            report.restart_index = index;
            Ok((report, z))
        })
        .collect();

    let mut reports = Vec::with_capacity(starts);
    let mut best: Option<(usize, f64, StackedSignal)> = None;
    for outcome in outcomes {
        let (report, z) = outcome?;
        if best.as_ref().is_none_or(|(_, f, _)| report.final_objective < *f) {
            best = Some((reports.len(), report.final_objective, z));
        }
        reports.push(report);
    }
    let (best_index, _, z) = best.expect("at least one start");
    Ok(ShapingResult {
        constellation: z.to_constellation()?,
        report: reports[best_index].clone(),
        all_final_objectives: reports.iter().map(|r| r.final_objective).collect(),
        reports,
    })
}
