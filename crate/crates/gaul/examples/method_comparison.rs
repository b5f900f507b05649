//! Run the stiff 1-d Gaussian benchmark with all three methods and print
//! the KL decay side by side.
//!
//! "ol" is the plain unadjusted Langevin algorithm, "ul" the underdamped
//! variant, and "gaul" the gradient-adjusted underdamped sampler. The
//! same experiment is available from the CLI as
//! `gaul run <config with name=gauss1d-small>`; here we call the harness
//! directly and read the decay series back from the CSVs it writes.

use gaul::harness::{parse_decay_csv, run, ExperimentConfig};

fn main() -> gaul::Result<()> {
    let mut cfg = ExperimentConfig::named("gauss1d-small");
    cfg.m = Some(10_000);
    cfg.output = Some(std::env::temp_dir().join("gaul-method-comparison"));
    let manifest = run(&cfg)?;

    let mut series = Vec::new();
    for file in &manifest.files {
        let name = file.file_name().unwrap().to_string_lossy().into_owned();
        if let Some(label) = name.strip_suffix("-decay.csv") {
            series.push((label.to_string(), parse_decay_csv(file)?));
        }
    }
    series.sort_by(|x, y| x.0.cmp(&y.0));

    println!("Gaussian KL to the target, N(0, 1/100), M = 10^4 particles");
    print!("{:>6}", "step");
    for (label, _) in &series {
        print!(" {:>12}", label.rsplit('-').next().unwrap());
    }
    println!();
    let n = series[0].1.steps.len();
    for row in (0..n).step_by((n / 12).max(1)) {
        print!("{:>6}", series[0].1.steps[row]);
        for (_, s) in &series {
            print!(" {:>12.6}", s.kl[row]);
        }
        println!();
    }
    println!();
    println!("outputs written under {}", cfg.output.unwrap().display());
    Ok(())
}
