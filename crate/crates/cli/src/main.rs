use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ifpinn::problems::ProblemId;
use ifpinn::window::WindowKind;
use ifpinn_cli::config::{ExperimentConfig, SweepAxis, OUTPUT_ROOT_VAR};
use ifpinn_cli::{presets, CliError, EXIT_NON_FINITE};

/// Hard-constrained PINN experiments for elliptic interface problems.
///
/// CONFIG arguments accept a file path or the name of a shipped preset
/// (`ifpinn presets`). Outputs go under $IFPINN_OUT (default ./ifpinn-out).
/// Exit codes: 0 success, 1 runtime failure, 2 invalid config or missing
/// checkpoint, 3 training stopped on a non-finite loss.
#[derive(Parser)]
#[command(name = "ifpinn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write report, history, profile, constraint and plot files.
    Run {
        /// Config file or preset name.
        config: String,
        /// Override the iteration count.
        #[arg(long)]
        iterations: Option<usize>,
        /// Override the seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one training per axis value and write an aggregated CSV.
    Sweep {
        /// Config file or preset name.
        config: String,
        /// window_k, beta, init_scheme or seed; defaults to the config's [sweep] section.
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values, e.g. `1.0,1.5,2.0`, `1,2,3`, `glorot,normal:0.1`.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<String>>,
        /// Sweep points trained concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the iteration count of every point.
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Evaluate boundary and interface residuals of the config's checkpoint.
    Verify {
        /// Config file or preset name.
        config: String,
        /// Override the number of dense samples per edge.
        #[arg(long)]
        dense: Option<usize>,
    },
    /// Write the reference solution of a benchmark problem as CSV.
    Oracle {
        /// p1, p2, p3 or p4.
        problem: ProblemId,
        #[arg(long)]
        out: PathBuf,
        /// Reference grid for p4.
        #[arg(long, default_value_t = 256)]
        nx: usize,
        #[arg(long, default_value_t = 128)]
        ny: usize,
    },
    /// Write window polynomial samples (tau, w, dw, d2w) as CSV.
    Window {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Vanishing order k.
        #[arg(long)]
        order: usize,
        #[arg(long, default_value_t = 201)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List shipped presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Interior,
    Dirichlet,
    Neumann,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(source: &str) -> Result<ExperimentConfig, CliError> {
    ExperimentConfig::load(source)
}

fn dispatch(cmd: Command) -> Result<i32, CliError> {
    match cmd {
        Command::Run {
            config,
            iterations,
            seed,
        } => {
            let mut cfg = load(&config)?;
            if let Some(n) = iterations {
                cfg.train.iterations = n;
            }
            if let Some(s) = seed {
                cfg.train.seed = s;
            }
            cfg.validate()?;
            let out = ifpinn_cli::run(&cfg)?;
            let r = &out.report;
            println!(
                "{} {} on {}: relative L2 {:.3e}, loss {:.3e}, {} iterations, {:.1}s",
                r.name, r.ansatz, r.problem, r.final_relative_l2, r.final_loss, r.iterations, r.wall_seconds
            );
            println!("artifacts in {}", out.dir.display());
            if let Some(a) = &r.aborted {
                eprintln!("training stopped at iteration {}: {}", a.iteration, a.reason);
                return Ok(EXIT_NON_FINITE);
            }
            Ok(0)
        }
        Command::Sweep {
            config,
            axis,
            values,
            jobs,
            iterations,
        } => {
            let mut cfg = load(&config)?;
            if let Some(n) = iterations {
                cfg.train.iterations = n;
            }
            let axis: SweepAxis = match (axis, &cfg.sweep) {
                (Some(a), _) => a.parse().map_err(CliError::Config)?,
                (None, Some(s)) => s.axis,
                (None, None) => return Err(CliError::Config("sweep: --axis is required (no [sweep] section)".into())),
            };
            let values = match (values, &cfg.sweep) {
                (Some(v), _) => v,
                (None, Some(s)) if s.axis == axis => s.values.clone(),
                _ => return Err(CliError::Config("sweep: --values is required".into())),
            };
            let (path, rows) = ifpinn_cli::sweep(&cfg, axis, &values, jobs)?;
            println!("{:>12}  {:>12}  {:>8}  seed", axis.to_string(), "rel. L2", "time/s");
            for r in &rows {
                println!("{:>12}  {:>12.3e}  {:>8.1}  {}", r.value, r.final_relative_l2, r.wall_seconds, r.seed);
            }
            println!("summary in {}", path.display());
            Ok(0)
        }
        Command::Verify { config, dense } => {
            let mut cfg = load(&config)?;
            if let Some(d) = dense {
                cfg.verify.dense = d;
            }
            cfg.validate()?;
            let v = ifpinn_cli::verify(&cfg)?;
            for e in &v.report.dense {
                println!(
                    "{:<16} {:<14} max {:.3e}  mean {:.3e}  ({} samples)",
                    e.condition, e.location, e.max, e.mean, e.samples
                );
            }
            if let Some(m) = v.summary.at_samples {
                println!("buffer rows at their samples: max relative residual {m:.3e}");
            }
            println!("report in {}", v.dir.join("verify.json").display());
            Ok(0)
        }
        Command::Oracle { problem, out, nx, ny } => {
            let csv = ifpinn_cli::oracle_csv(problem, nx, ny)?;
            write_out(&out, &csv)?;
            Ok(0)
        }
        Command::Window {
            kind,
            order,
            samples,
            out,
        } => {
            let kind = match kind {
                Kind::Interior => WindowKind::Interior,
                Kind::Dirichlet => WindowKind::Dirichlet,
                Kind::Neumann => WindowKind::Neumann,
            };
            let csv = ifpinn_cli::window_csv(kind, order, samples)?;
            match out {
                Some(p) => write_out(&p, &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::Presets { name } => {
            match name {
                Some(n) => match presets::get(&n) {
                    Some(t) => print!("{t}"),
                    None => return Err(CliError::Config(format!("no preset named `{n}`"))),
                },
                None => {
                    for n in presets::names() {
                        println!("{n}");
                    }
                    println!("(outputs go under ${OUTPUT_ROOT_VAR})");
                }
            }
            Ok(0)
        }
    }
}

fn write_out(path: &PathBuf, text: &str) -> Result<(), CliError> {
    if let Some(d) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(d)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
