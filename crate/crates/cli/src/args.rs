use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use semshape_core::BaselineFamily;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "semshape", version, about = "Semantic-loss constellation shaping toolkit")]
pub struct Cli {
    /// Worker threads for restarts and Monte Carlo trials (default: all cores).
    /// Outputs do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a constellation for a similarity matrix.
    Shape(ShapeArgs),
    /// Print the analytic semantic-loss bound of a constellation.
    Evaluate(EvaluateArgs),
    /// Simulate ML detection over an SNR grid next to the analytic bound.
    Sweep(SweepArgs),
    /// Shape at every SNR of a grid and compare against a BPSK/QPSK baseline.
    Compare(CompareArgs),
    /// Write a BPSK/QPSK baseline constellation.
    Baseline(BaselineArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ShapeArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    /// Channel uses per message.
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long = "snr-db", default_value_t = 10.0, allow_negative_numbers = true)]
    pub snr_db: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long = "max-iters", default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also start from this baseline constellation.
    #[arg(long, value_parser = parse_family)]
    #[serde(serialize_with = "ser_family_opt")]
    pub baseline: Option<BaselineFamily>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long)]
    pub constellation: PathBuf,
    /// Comma list; `a,b,...,c` expands to an arithmetic progression.
    #[arg(long = "snr-db", default_value = "10", value_parser = parse_snr_list, allow_hyphen_values = true)]
    pub snr_db: SnrList,
    /// Directory for `bound.csv` and `manifest.json`; stdout only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long)]
    pub constellation: PathBuf,
    #[arg(long = "snr-db", default_value = "0,2,...,14", value_parser = parse_snr_list, allow_hyphen_values = true)]
    pub snr_db: SnrList,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for `sweep.csv` and `manifest.json`; stdout only if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub similarity: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_parser = parse_family)]
    #[serde(serialize_with = "ser_family")]
    pub baseline: BaselineFamily,
    #[arg(long = "snr-db", default_value = "0,2,...,14", value_parser = parse_snr_list, allow_hyphen_values = true)]
    pub snr_db: SnrList,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub restarts: usize,
    #[arg(long, default_value_t = 1e-2)]
    pub epsilon: f64,
    #[arg(long = "max-iters", default_value_t = 500)]
    pub max_iters: usize,
    /// Loss levels at which SNR gains are reported.
    #[arg(long = "target-loss", default_value = "1e-2", value_parser = parse_snr_list)]
    pub target_loss: SnrList,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    #[arg(long, value_parser = parse_family)]
    #[serde(serialize_with = "ser_family")]
    pub baseline: BaselineFamily,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// Output constellation file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct SnrList(pub Vec<f64>);

fn parse_family(s: &str) -> Result<BaselineFamily, String> {
    s.parse().map_err(|e: semshape_core::Error| e.to_string())
}

fn ser_family<S: serde::Serializer>(f: &BaselineFamily, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(f.name())
}

fn ser_family_opt<S: serde::Serializer>(f: &Option<BaselineFamily>, s: S) -> Result<S::Ok, S::Error> {
    match f {
        Some(f) => s.serialize_some(f.name()),
        None => s.serialize_none(),
    }
}

/// Parses `1,2.5,4` or the progression shorthand `a,b,...,c`
/// (`0,2,...,14` is 0 to 14 in steps of 2).
pub fn parse_snr_list(s: &str) -> Result<SnrList, String> {
    let tokens: Vec<&str> = s.split(',').map(str::trim).collect();
    let number = |t: &str| t.parse::<f64>().map_err(|_| format!("invalid number {t:?}"));
    let values = match tokens.iter().position(|&t| t == "...") {
        None => tokens.iter().map(|t| number(t)).collect::<Result<Vec<_>, _>>()?,
        Some(2) if tokens.len() == 4 => {
            let (first, second, last) = (number(tokens[0])?, number(tokens[1])?, number(tokens[3])?);
            let step = second - first;
            if !(step > 0.0) || last < first {
                return Err(format!("progression {s:?} must increase"));
            }
            let count = ((last - first) / step + 1e-9).floor() as usize + 1;
            if count > 100_000 {
                return Err(format!("progression {s:?} is too long"));
            }
            (0..count).map(|k| first + k as f64 * step).collect()
        }
        Some(_) => return Err(format!("expected `a,b,...,c`, got {s:?}")),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(format!("invalid list {s:?}"));
    }
    Ok(SnrList(values))
}
