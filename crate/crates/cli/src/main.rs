//! `fredrank`: seeded kernel-rank and local-invertibility experiments with
//! machine-readable reports.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use fredrank_cli::{payload_csv, run, verify_manifest, CliError, ExperimentConfig};

#[derive(Parser, Debug)]
#[command(
    name = "fredrank",
    version,
    about = "Kernel rank and local invertibility probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Report file; defaults to stdout (or $FREDRANK_OUT/<subcommand>-<seed>.json
    /// when the env var is set).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Report format: json (manifest) or csv (tables/curves only).
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo full-rank probe: random k x k kernel matrices.
    RankMc {
        /// Kernel, e.g. euclidean-sq:n=2, sphere-geo-sq:n=2, dot:exp-neg,
        /// indicator, null-example.
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long)]
        seed: u64,
        /// Relative singular-value threshold of the rank policy.
        #[arg(long, default_value_t = 1e-10)]
        rel_threshold: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Plateau estimate of a kernel's finite rank.
    FiniteRank {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        kmax: usize,
        #[arg(long, default_value_t = 20)]
        trials_per_k: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        rel_threshold: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Local-linear-independence probe on a window.
    LliProbe {
        /// Family: powers:0,1,2 | exp-neg-s-over-x:0,1 |
        /// taylor:<kernel>@orders=2,4,6[@p=..][@dir=..]
        #[arg(long)]
        family: String,
        /// Window box, e.g. 0.4..0.6 or 0.3..0.35x0.35..0.4.
        #[arg(long)]
        window: String,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        budget: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-10)]
        rel_threshold: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Taylor jet of a kernel slice, checked against the derivative oracle.
    Taylor {
        #[arg(long)]
        kernel: String,
        /// Frozen first argument (chart coordinates for sphere kernels).
        #[arg(long, value_delimiter = ',')]
        x: Vec<f64>,
        /// Expansion center p in V; defaults to the origin.
        #[arg(long, value_delimiter = ',')]
        p: Option<Vec<f64>>,
        /// Slice direction; defaults to the first axis.
        #[arg(long, value_delimiter = ',')]
        dir: Option<Vec<f64>>,
        #[arg(long, default_value_t = 6)]
        order: usize,
        /// Declared validity half-width of the slice.
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        /// Sampling half-width of the derivative oracle.
        #[arg(long, default_value_t = 0.2)]
        oracle_h: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Local-window recovery experiment for the discretized equation.
    Invert {
        #[arg(long)]
        kernel: String,
        /// Truth: exp-decay:RATE | poly:C0,C1,.. | bump:CENTER,WIDTH.
        #[arg(long)]
        truth: String,
        /// Measurement window inside U, e.g. 0.4..0.6.
        #[arg(long)]
        window: String,
        #[arg(long)]
        k: usize,
        /// direct | tsvd:R | tikhonov:LAMBDA | tikhonov-sweep.
        #[arg(long)]
        method: String,
        #[arg(long, default_value_t = 64)]
        quad_nodes: usize,
        #[arg(long)]
        seed: u64,
        /// Relative data noise; also drives discrepancy-based lambda picks.
        #[arg(long)]
        noise: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact moment cancellation + constancy of the null-vector example.
    NullCheck {
        #[arg(long, default_value_t = -2.0)]
        x_min: f64,
        #[arg(long, default_value_t = 2.0)]
        x_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
        /// Symbolic cancellation checked exactly for s <= smax.
        #[arg(long, default_value_t = 30)]
        smax: usize,
        /// Series terms kept in the floating-point constancy scan.
        #[arg(long, default_value_t = 6)]
        numeric_terms: usize,
        #[arg(long, default_value_t = 40)]
        quad_nodes: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Re-runs a manifest's config and compares payloads byte for byte.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn to_config(cmd: Command) -> (ExperimentConfig, OutputArgs) {
    match cmd {
        Command::RankMc {
            kernel,
            k,
            trials,
            seed,
            rel_threshold,
            out,
        } => (
            ExperimentConfig::RankMc {
                kernel,
                k,
                trials,
                seed,
                rel_threshold,
            },
            out,
        ),
        Command::FiniteRank {
            kernel,
            kmax,
            trials_per_k,
            seed,
            rel_threshold,
            out,
        } => (
            ExperimentConfig::FiniteRank {
                kernel,
                k_max: kmax,
                trials_per_k,
                seed,
                rel_threshold,
            },
            out,
        ),
        Command::LliProbe {
            family,
            window,
            k,
            budget,
            seed,
            rel_threshold,
            out,
        } => (
            ExperimentConfig::LliProbe {
                family,
                window,
                k,
                budget,
                seed,
                rel_threshold,
            },
            out,
        ),
        Command::Taylor {
            kernel,
            x,
            p,
            dir,
            order,
            radius,
            oracle_h,
            out,
        } => {
            let dim = x.len();
            (
                ExperimentConfig::Taylor {
                    kernel,
                    center: p.unwrap_or_else(|| vec![0.0; dim]),
                    dir: dir.unwrap_or_else(|| {
                        let mut d = vec![0.0; dim];
                        d[0] = 1.0;
                        d
                    }),
                    x,
                    order,
                    radius,
                    oracle_h,
                },
                out,
            )
        }
        Command::Invert {
            kernel,
            truth,
            window,
            k,
            method,
            quad_nodes,
            seed,
            noise,
            out,
        } => (
            ExperimentConfig::Invert {
                kernel,
                truth,
                window,
                k,
                method,
                quad_nodes,
                seed,
                noise_rel: noise,
            },
            out,
        ),
        Command::NullCheck {
            x_min,
            x_max,
            points,
            smax,
            numeric_terms,
            quad_nodes,
            out,
        } => (
            ExperimentConfig::NullCheck {
                x_min,
                x_max,
                points,
                s_max: smax,
                numeric_terms,
                quad_nodes,
            },
            out,
        ),
        Command::Verify { .. } => unreachable!("verify handled separately"),
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    if let Command::Verify { manifest } = cmd {
        verify_manifest(&manifest)?;
        println!("verify: pass ({})", manifest.display());
        return Ok(());
    }
    let (config, out) = to_config(cmd);
    let manifest = run(&config)?;
    let rendered = match out.format.as_str() {
        "json" => {
            serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Io(e.to_string()))?
        }
        "csv" => payload_csv(&config, &manifest.payload).ok_or_else(|| {
            CliError::BadConfig(format!(
                "csv format is not defined for {}",
                config.subcommand_name()
            ))
        })?,
        other => {
            return Err(CliError::BadConfig(format!(
                "unknown format '{other}' (expected json or csv)"
            )))
        }
    };
    let target = out.output.or_else(|| {
        std::env::var_os("FREDRANK_OUT").map(|dir| {
            let ext = if out.format == "csv" { "csv" } else { "json" };
            let seed = config.seed().unwrap_or(0);
            PathBuf::from(dir).join(format!("{}-{seed}.{ext}", config.subcommand_name()))
        })
    });
    match target {
        Some(path) => {
            // the report is rendered fully before the write: a failed run
            // never leaves a partial output file
            std::fs::write(&path, rendered).map_err(|e| CliError::Io(e.to_string()))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{rendered}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
