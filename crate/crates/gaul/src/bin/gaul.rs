//! Experiment harness CLI: `run`, `theory`, and `compare`.

use clap::{Parser, Subcommand};
use gaul::harness::{
    self, compare_decay, parse_config, resolve_experiment, run, theory_csv, MethodSel,
};
use gaul::GaulError;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gaul", version, about = "Langevin sampling experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a key=value config file, writing CSVs.
    Run {
        /// Path to the experiment config file.
        config: PathBuf,
        /// Restore full-scale ensemble sizes (default runs at 1/10).
        #[arg(long)]
        full: bool,
        /// Override the run seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Restrict to one method (ol|ul|gaul|all).
        #[arg(long)]
        method: Option<String>,
    },
    /// Print the spectral/fixed-point theory table for a Gaussian experiment.
    Theory {
        /// Path to the experiment config file.
        config: PathBuf,
    },
    /// Compare two decay CSVs: terminal KL and steps-to-threshold.
    Compare {
        a: PathBuf,
        b: PathBuf,
        /// KL threshold for the time-to-threshold summary.
        #[arg(long)]
        threshold: f64,
    },
}

fn load_config(path: &PathBuf) -> Result<harness::ExperimentConfig, GaulError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

fn real_main() -> Result<(), GaulError> {
    if let Some(n) = harness::worker_threads() {
        // A failure here means a pool already exists; the cap still applies
        // to that pool's creator, so ignore it.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, full, seed, out, method } => {
            let mut cfg = load_config(&config)?;
            cfg.full = cfg.full || full;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output = Some(o);
            }
            if let Some(m) = method {
                cfg.method = MethodSel::parse(&m)?;
            }
            let manifest = run(&cfg)?;
            for file in &manifest.files {
                println!("wrote {}", file.display());
            }
            if let Some(msg) = manifest.divergences.first() {
                return Err(GaulError::Divergence { step: 0, detail: msg.clone() });
            }
            Ok(())
        }
        Command::Theory { config } => {
            let cfg = load_config(&config)?;
            let resolved = resolve_experiment(&cfg)?;
            print!("{}", theory_csv(&resolved)?);
            Ok(())
        }
        Command::Compare { a, b, threshold } => {
            let (sa, sb) = compare_decay(&a, &b, threshold)?;
            for (path, s) in [(&a, &sa), (&b, &sb)] {
                let reached = match s.step_to_threshold {
                    Some(step) => format!("step {step}"),
                    None => "not reached".to_string(),
                };
                println!(
                    "{}: terminal step {:?}, terminal kl {:?}, kl < {threshold} at {reached}",
                    path.display(),
                    s.terminal_step,
                    s.terminal_kl,
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (GaulError::Divergence { .. } | GaulError::Instability(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
