use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ellipalign::cli::{self, RunOptions};
use ellipalign::exec::{configure_threads, Execution};
use ellipalign::{AlignError, Result};

/// Field-free alignment of linear molecules by elliptically polarized pulses.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Args {
    /// Directory receiving the CSV outputs.
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,

    /// Worker threads for the ensemble; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Thermal alignment trace plus the requested signal, peak and comparison files.
    Simulate {
        config: PathBuf,
    },
    /// First-revival peaks over a range of ellipticities.
    Scan {
        config: PathBuf,
        /// Explicit a² values (fractions allowed), comma separated.
        #[arg(long, value_delimiter = ',', conflicts_with = "divisions")]
        a2: Option<Vec<String>>,
        /// Uniform grid on [0, 1/2] with steps of 1/(2·divisions).
        #[arg(long, default_value_t = 12)]
        divisions: u32,
    },
    /// Scale factor and residual of a measured signal against the model.
    Fit {
        config: PathBuf,
        measured: PathBuf,
    },
    /// cos² matrix elements up to a given J.
    Tables {
        #[arg(long, default_value_t = 8)]
        j_max: u32,
    },
    /// Noisy synthetic measurement for testing `fit`.
    #[command(hide = true)]
    Synth {
        config: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_fraction(text: &str) -> Result<f64> {
    let value = match text.trim().split_once('/') {
        Some((p, q)) => p.trim().parse::<f64>().ok().zip(q.trim().parse::<f64>().ok()).map(|(p, q)| p / q),
        None => text.trim().parse::<f64>().ok(),
    };
    value.ok_or_else(|| AlignError::domain(format!("`{text}` is not a number")))
}

fn run(args: Args) -> Result<()> {
    let execution = match args.threads {
        Some(1) => Execution::Sequential,
        Some(n) => {
            configure_threads(n).map_err(AlignError::domain)?;
            Execution::Parallel
        }
        None => Execution::default(),
    };
    let opts = RunOptions { output_dir: args.output_dir, execution };
    match args.command {
        Command::Simulate { config } => {
            let cfg = cli::load_config(&config)?;
            let report = cli::run_simulate(&cfg, &opts)?;
            let sim = &report.simulation;
            let (x, y) = (sim.first_revival(ellipalign::angular::Axis::X), sim.first_revival(ellipalign::angular::Axis::Y));
            println!("first revival: Sy {:.6e} at {:.2} ps, Sx {:.6e} at {:.2} ps", y.height, y.time, x.height, x.time);
            if let Some(dev) = report.superposition {
                println!("superposition deviation: x {:.4}, y {:.4}, z {:.4}", dev.x, dev.y, dev.z);
            }
            for file in report.files {
                println!("wrote {}", file.display());
            }
        }
        Command::Scan { config, a2, divisions } => {
            let cfg = cli::load_config(&config)?;
            let values = match a2 {
                Some(list) => list.iter().map(|s| parse_fraction(s)).collect::<Result<Vec<_>>>()?,
                None => {
                    if divisions == 0 {
                        return Err(AlignError::domain("--divisions must be at least 1"));
                    }
                    cli::a2_grid(divisions)
                }
            };
            let report = cli::run_scan(&cfg, &values, &opts)?;
            println!("{:>8} {:>10} {:>10}", "a2", "Sy_norm", "Sx_norm");
            for row in &report.rows {
                println!("{:>8.5} {:>10.5} {:>10.5}", row.a2, row.norm_y, row.norm_x);
            }
            println!("wrote {}", report.file.display());
        }
        Command::Fit { config, measured } => {
            let cfg = cli::load_config(&config)?;
            let result = cli::run_fit(&cfg, &measured, &opts);
            let file = opts.output_dir.join("fit.csv");
            if let Ok(report) = &result {
                for f in &report.fits {
                    println!("axis {}: scale {:.6}, residual {:.3e}", f.axis, f.fit.scale, f.fit.rms_residual);
                }
            }
            if file.exists() {
                println!("wrote {}", file.display());
            }
            result?;
        }
        Command::Tables { j_max } => {
            let path = cli::run_tables(j_max, &opts)?;
            println!("wrote {}", path.display());
        }
        Command::Synth { config, noise, seed } => {
            let cfg = cli::load_config(&config)?;
            let path = cli::run_synth(&cfg, noise, seed, &opts)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
