//! Command-line experiment runner.
//!
//! ```text
//! graphon-lab run --config <path> [--out <dir>] [--experiment <name>]
//!                 [--n <int>] [--dt <float>] [--t-end <float>]
//! graphon-lab sweep --config <path> [--out <dir>]
//! ```
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 envelope assertion failure.

use graphon_lab::experiment::{run_experiment, run_rate_sweep, ExperimentConfig, ExperimentKind};
use graphon_lab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const USAGE: &str = "usage:
  graphon-lab run --config <path> [--out <dir>] [--experiment <name>] [--n <int>] [--dt <float>] [--t-end <float>]
  graphon-lab sweep --config <path> [--out <dir>]";

struct Overrides {
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    experiment: Option<String>,
    n: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
}

fn parse_flags(args: &[String]) -> Result<Overrides, String> {
    let mut ov = Overrides {
        config: None,
        out: None,
        experiment: None,
        n: None,
        dt: None,
        t_end: None,
    };
    let mut it = args.iter();
    while let Some(flag) = it.next() {
        let mut value = |name: &str| -> Result<String, String> {
            it.next()
                .cloned()
                .ok_or_else(|| format!("flag {name} needs a value"))
        };
        match flag.as_str() {
            "--config" => ov.config = Some(PathBuf::from(value("--config")?)),
            "--out" => ov.out = Some(PathBuf::from(value("--out")?)),
            "--experiment" => ov.experiment = Some(value("--experiment")?),
            "--n" => {
                ov.n = Some(
                    value("--n")?
                        .parse()
                        .map_err(|_| "bad integer for --n".to_string())?,
                )
            }
            "--dt" => {
                ov.dt = Some(
                    value("--dt")?
                        .parse()
                        .map_err(|_| "bad float for --dt".to_string())?,
                )
            }
            "--t-end" => {
                ov.t_end = Some(
                    value("--t-end")?
                        .parse()
                        .map_err(|_| "bad float for --t-end".to_string())?,
                )
            }
            other => return Err(format!("unknown flag `{other}`")),
        }
    }
    Ok(ov)
}

fn load_config(ov: &Overrides) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &ov.config {
        Some(path) => ExperimentConfig::parse_file(path)?,
        None => {
            let kind = ov
                .experiment
                .as_deref()
                .and_then(ExperimentKind::parse)
                .ok_or(Error::Config {
                    line: 0,
                    field: "--config".into(),
                    message: "either --config or --experiment is required".into(),
                })?;
            ExperimentConfig::defaults(kind)
        }
    };
    if let Some(name) = &ov.experiment {
        let kind = ExperimentKind::parse(name).ok_or(Error::Config {
            line: 0,
            field: "--experiment".into(),
            message: format!("unknown experiment `{name}`"),
        })?;
        if ov.config.is_some() && kind != cfg.experiment {
            // Switching experiments re-resolves the per-experiment defaults;
            // the explicit flag overrides still apply below.
            cfg = ExperimentConfig::defaults(kind);
        }
        cfg.experiment = kind;
    }
    if let Some(out) = &ov.out {
        cfg.out_dir = out.clone();
    }
    if let Some(n) = ov.n {
        cfg.n = n;
    }
    if let Some(dt) = ov.dt {
        cfg.dt = dt;
    }
    if let Some(t_end) = ov.t_end {
        cfg.t_end = t_end;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config { .. }
        | Error::Io { .. }
        | Error::Parse { .. }
        | Error::UnknownKernel(_)
        | Error::InvalidParam(_)
        | Error::MissingConstant(_)
        | Error::DimensionMismatch { .. } => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let ov = match parse_flags(&args[1..]) {
        Ok(ov) => ov,
        Err(message) => {
            eprintln!("error: {message}\n{USAGE}");
            return ExitCode::from(2);
        }
    };

    match command.as_str() {
        "run" => {
            let cfg = match load_config(&ov) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            match run_experiment(&cfg) {
                Ok(summary) => {
                    println!(
                        "experiment {} finished: outputs in {}",
                        cfg.experiment.as_str(),
                        cfg.out_dir.display()
                    );
                    for report in &summary.envelopes {
                        println!(
                            "  envelope {:<28} {} (margin {})",
                            report.theorem.as_str(),
                            if report.pass { "pass" } else { "FAIL" },
                            graphon_lab::fmt_f64(report.margin)
                        );
                    }
                    if summary.overall_pass {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("error: an asserted envelope check failed");
                        ExitCode::from(4)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e))
                }
            }
        }
        "sweep" => {
            let mut cfg = match load_config(&ov) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            cfg.experiment = ExperimentKind::RateSweep;
            match run_rate_sweep(&cfg) {
                Ok(summary) => {
                    println!("rate sweep finished: outputs in {}", cfg.out_dir.display());
                    for row in &summary.rows {
                        println!(
                            "  N = {:<4} lambda2 = {} rate_l2 = {} rate_linf = {}",
                            row.n,
                            graphon_lab::fmt_f64(row.lambda2),
                            graphon_lab::fmt_f64(row.rate_l2),
                            graphon_lab::fmt_f64(row.rate_linf)
                        );
                    }
                    if summary.monotone {
                        ExitCode::SUCCESS
                    } else {
                        eprintln!("error: sweep monotonicity assertion failed");
                        ExitCode::from(4)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code_for(&e))
                }
            }
        }
        other => {
            eprintln!("error: unknown command `{other}`\n{USAGE}");
            ExitCode::from(2)
        }
    }
}
