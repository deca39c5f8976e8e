mod args;
mod manifest;

use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use semshape_core::io::SCHEMA_VERSION;
use semshape_core::{
    build_baseline, compare_against_baseline, db_to_linear, load_constellation, load_similarity,
    save_constellation, save_report, semantic_loss_bound, shape, sweep, BaselineSpec, ObjectiveContext,
    ReportFile, ShapingConfig,
};

use args::{BaselineArgs, Cli, Command, CompareArgs, EvaluateArgs, ShapeArgs, SweepArgs};
use manifest::RunManifest;

#[derive(Debug)]
pub enum CliError {
    /// Bad input or arguments; exit code 2.
    Usage(String),
    /// Failure while computing or writing results; exit code 3.
    Runtime(String),
}

impl From<semshape_core::Error> for CliError {
    fn from(e: semshape_core::Error) -> Self {
        if e.is_validation() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

/// Output-side failures are runtime errors even when the core reports them
/// as I/O problems.
fn written<T>(r: semshape_core::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Runtime(e.to_string()))
}

pub(crate) fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "nan".into())
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

fn finite_snr(snr_db: f64) -> Result<f64, CliError> {
    if snr_db.is_finite() {
        Ok(db_to_linear(snr_db))
    } else {
        Err(CliError::Usage(format!("SNR must be finite, got {snr_db}")))
    }
}

fn run_shape(args: &ShapeArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("shape", args, Some(args.seed));
    manifest.input("similarity", &args.similarity)?;
    let a = load_similarity(&args.similarity)?;
    let gamma = finite_snr(args.snr_db)?;
    let seed_with_baseline = match args.baseline {
        Some(family) => Some(build_baseline(BaselineSpec::new(family, a.dim(), args.n))?),
        None => None,
    };
    let config = ShapingConfig {
        gamma,
        epsilon: args.epsilon,
        max_iterations: args.max_iters,
        restarts: args.restarts,
        seed: args.seed,
        seed_with_baseline,
        ..ShapingConfig::default()
    };
    let result = shape(&config, &a, a.dim(), args.n)?;

    create_dir(&args.out)?;
    written(save_constellation(&result.constellation, args.out.join("constellation.json")))?;
    let report = ReportFile {
        schema: SCHEMA_VERSION,
        m: a.dim(),
        n: args.n,
        gamma,
        snr_db: args.snr_db,
        epsilon: args.epsilon,
        max_iterations: args.max_iters,
        seed: args.seed,
        best_restart: result.report.restart_index,
        final_objective: result.report.final_objective,
        restarts: result.reports,
    };
    written(save_report(&report, args.out.join("report.json")))?;
    manifest.output("constellation.json");
    manifest.output("report.json");
    manifest.write(&args.out)?;

    println!(
        "best restart {} of {}: bound {} after {} iterations ({})",
        report.best_restart,
        report.restarts.len(),
        num(report.final_objective),
        result.report.iterations(),
        serde_json::to_value(result.report.stop_reason)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default(),
    );
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("evaluate", args, None);
    manifest.input("similarity", &args.similarity)?;
    manifest.input("constellation", &args.constellation)?;
    let a = load_similarity(&args.similarity)?;
    let c = load_constellation(&args.constellation)?;
    let ctx = ObjectiveContext::new(a, 1.0, c.n())?;

    let mut csv = String::from("snr_db,bound\n");
    for &snr_db in &args.snr_db.0 {
        let bound = semantic_loss_bound(&c, &ctx.with_gamma(finite_snr(snr_db)?)?)?;
        let _ = writeln!(csv, "{},{}", num(snr_db), num(bound));
    }
    print!("{csv}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("bound.csv"), &csv)?;
        manifest.output("bound.csv");
        manifest.write(dir)?;
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("sweep", args, Some(args.seed));
    manifest.input("similarity", &args.similarity)?;
    manifest.input("constellation", &args.constellation)?;
    let a = load_similarity(&args.similarity)?;
    let c = load_constellation(&args.constellation)?;
    for &snr_db in &args.snr_db.0 {
        finite_snr(snr_db)?;
    }
    let points = sweep(&c, &a, &args.snr_db.0, args.trials, args.seed)?;

    let mut csv = String::from("snr_db,empirical_sl,stderr,bound,message_error_rate,trials\n");
    for p in &points {
        let e = &p.estimate;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            num(p.snr_db),
            num(e.semantic_loss_mean),
            num(e.semantic_loss_stderr),
            num(p.bound),
            num(e.message_error_rate),
            e.trials_used
        );
    }
    print!("{csv}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("sweep.csv"), &csv)?;
        manifest.output("sweep.csv");
        manifest.write(dir)?;
    }
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<(), CliError> {
    let mut manifest = RunManifest::new("compare", args, Some(args.seed));
    let digest = manifest.input("similarity", &args.similarity)?;
    let a = load_similarity(&args.similarity)?;
    for &snr_db in &args.snr_db.0 {
        finite_snr(snr_db)?;
    }
    let template = ShapingConfig {
        epsilon: args.epsilon,
        max_iterations: args.max_iters,
        restarts: args.restarts,
        seed: args.seed,
        ..ShapingConfig::default()
    };
    let spec = BaselineSpec::new(args.baseline, a.dim(), args.n);
    let cmp = compare_against_baseline(&a, spec, &args.snr_db.0, &template, args.trials, &args.target_loss.0)?;

    create_dir(&args.out)?;
    let mut rows = String::from(
        "snr_db,shaped_bound,baseline_bound,shaped_empirical_sl,shaped_stderr,\
         baseline_empirical_sl,baseline_stderr,shaped_message_error_rate,baseline_message_error_rate,trials\n",
    );
    for r in &cmp.rows {
        let _ = writeln!(
            rows,
            "{},{},{},{},{},{},{},{},{},{}",
            num(r.snr_db),
            num(r.shaped_bound),
            num(r.baseline_bound),
            num(r.shaped.semantic_loss_mean),
            num(r.shaped.semantic_loss_stderr),
            num(r.baseline.semantic_loss_mean),
            num(r.baseline.semantic_loss_stderr),
            num(r.shaped.message_error_rate),
            num(r.baseline.message_error_rate),
            r.shaped.trials_used
        );
    }
    write_file(&args.out.join("compare.csv"), &rows)?;

    let mut gains = String::from("target_loss,gain_bound_db,gain_empirical_db,baseline,M,N,similarity_sha256\n");
    for g in &cmp.gains {
        let _ = writeln!(
            gains,
            "{},{},{},{},{},{},{}",
            num(g.target_loss),
            opt_num(g.gain_bound_db),
            opt_num(g.gain_empirical_db),
            args.baseline,
            a.dim(),
            args.n,
            digest
        );
    }
    write_file(&args.out.join("gains.csv"), &gains)?;

    written(save_constellation(&cmp.baseline, args.out.join("baseline.json")))?;
    for (k, result) in cmp.shaped.iter().enumerate() {
        let name = format!("shaped_{k:02}.json");
        written(save_constellation(&result.constellation, args.out.join(&name)))?;
        manifest.output(name);
    }
    manifest.output("compare.csv");
    manifest.output("gains.csv");
    manifest.output("baseline.json");
    manifest.write(&args.out)?;

    print!("{gains}");
    Ok(())
}

fn run_baseline(args: &BaselineArgs) -> Result<(), CliError> {
    let c = build_baseline(BaselineSpec::new(args.baseline, args.m, args.n))?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    written(save_constellation(&c, &args.out))
}

fn run(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Shape(a) => run_shape(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Compare(a) => run_compare(a),
        Command::Baseline(a) => run_baseline(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))
            .and_then(|pool| pool.install(|| run(&cli.command))),
        None => run(&cli.command),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
