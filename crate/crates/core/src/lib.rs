//! Constellation shaping for message-level semantic communication.
//!
//! Each of `M` candidate messages is mapped to a complex signal vector of
//! length `N`. Decoding message `j` when `i` was sent costs `A(i, j)`, a
//! semantic-loss weight derived from sentence-embedding similarity. The
//! [`shaper`] places the signal vectors on the average-power sphere so that
//! the union bound on the expected semantic loss over an AWGN channel is
//! minimized, and [`channel`] checks the bound against simulated
//! maximum-likelihood detection.
//!
//! ```no_run
//! use semshape_core::{db_to_linear, load_similarity, shape, ShapingConfig};
//!
//! let a = load_similarity("similarity.json")?;
//! let config = ShapingConfig { gamma: db_to_linear(10.0), ..ShapingConfig::default() };
//! let result = shape(&config, &a, a.dim(), 1)?;
//! println!("bound = {}", result.report.final_objective);
//! # Ok::<(), semshape_core::Error>(())
//! ```

pub mod baselines;
pub mod channel;
pub mod compare;
pub mod error;
pub mod io;
pub mod objective;
pub mod shaper;

pub use baselines::{build_baseline, BaselineFamily, BaselineSpec};
pub use channel::{
    estimate_semantic_loss, ml_detect, sweep, transmit, ChannelConfig, SimEstimate, SweepPoint,
};
pub use compare::{compare_against_baseline, snr_at_loss, Comparison, ComparisonRow, GainRow};
pub use error::{Error, Result};
pub use io::{
    load_constellation, load_report, load_similarity, save_constellation, save_report,
    save_similarity, Constellation, MessageSet, ReportFile, ShapingReport, SimilarityMatrix,
    StopReason, TraceEntry,
};
pub use objective::{
    bound_from_stacked, build_pair_weights, db_to_linear, linear_to_db, pairwise_error_prob,
    q_function, semantic_loss_bound, ObjectiveContext, PairWeightMatrix, StackedSignal,
};
pub use shaper::{
    line_search, project, random_init, rotate_update, shape, shape_once, LineSearchConfig,
    ShapingConfig, ShapingResult,
};
