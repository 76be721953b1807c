use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ontogat::commands;
use ontogat::config::RunConfig;
use ontogat::gradcheck::DEFAULT_TOLERANCE;
use ontogat::metrics::Variant;
use ontogat::Result;

/// Ontology matching with graph attention over class neighbourhoods.
#[derive(Parser)]
#[command(name = "ontogat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train on a reference alignment; writes checkpoint, threshold and loss trace.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Align the configured ontology pair with a trained checkpoint.
    Match {
        #[arg(long)]
        config: PathBuf,
        /// Use this threshold instead of the threshold file.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Score a system alignment against a reference; prints CSV.
    Eval {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        reference: PathBuf,
        #[arg(long, value_parser = ["m1", "m2", "m3"])]
        variant: String,
        #[arg(long, num_args = 2, value_names = ["LEFT", "RIGHT"])]
        ontologies: Vec<PathBuf>,
    },
    /// Compare analytic gradients with finite differences on random toy graphs.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of consecutive seeds to check.
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long, hide = true)]
        corrupt_gradient: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            let s = commands::cmd_train(&cfg)?;
            println!(
                "trained on {} pairs; threshold {} (validation F1 {:.4}); final loss {:.6}",
                s.train_pairs,
                s.threshold,
                s.validation_f1,
                s.outcome.loss_trace.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Match { config, threshold } => {
            let cfg = RunConfig::load(&config)?;
            let a = commands::cmd_match(&cfg, threshold)?;
            println!(
                "{} cells written to {}",
                a.len(),
                cfg.output.alignment_tsv.display()
            );
        }
        Command::Eval {
            system,
            reference,
            variant,
            ontologies,
        } => {
            let variant: Variant = variant.parse()?;
            let csv =
                commands::cmd_eval(&system, &reference, variant, &ontologies[0], &ontologies[1])?;
            print!("{csv}");
        }
        Command::Gradcheck {
            seed,
            count,
            corrupt_gradient,
        } => {
            let reports = commands::cmd_gradcheck(seed, count, corrupt_gradient)?;
            for r in &reports {
                for b in &r.blocks {
                    println!("seed {} {} {:.3e}", r.seed, b.name, b.max_relative_error);
                }
                let verdict = if r.passed(DEFAULT_TOLERANCE) {
                    "PASS"
                } else {
                    "FAIL"
                };
                println!(
                    "seed {} {verdict} max {:.3e}",
                    r.seed,
                    r.max_relative_error()
                );
            }
            commands::gradcheck_verdict(&reports)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ONTOGAT_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
