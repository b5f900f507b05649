//! Bit-exact reproducibility across worker-thread counts.
//!
//! The sampler draws all randomness from a counter-based generator keyed
//! on (seed, particle, step), and reduces statistics sequentially, so a
//! run is byte-identical no matter how the particle chunks are scheduled.
//! This example re-runs one experiment under thread pools of size 1, 2,
//! and 8 and compares every CSV byte for byte.

use gaul::harness::{run, ExperimentConfig};
use std::collections::BTreeMap;

fn main() -> gaul::Result<()> {
    let mut outputs: Vec<(usize, BTreeMap<String, Vec<u8>>)> = Vec::new();
    for threads in [1usize, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("pool");
        let mut cfg = ExperimentConfig::named("gauss1d-small");
        cfg.m = Some(5_000);
        cfg.output = Some(std::env::temp_dir().join(format!("gaul-determinism-{threads}")));
        let manifest = pool.install(|| run(&cfg))?;
        let mut files = BTreeMap::new();
        for file in &manifest.files {
            let name = file.file_name().unwrap().to_string_lossy().into_owned();
            files.insert(name, std::fs::read(file)?);
        }
        outputs.push((threads, files));
    }

    let (_, reference) = &outputs[0];
    println!("{} output files per run", reference.len());
    let mut all_equal = true;
    for (threads, files) in &outputs[1..] {
        for (name, bytes) in files {
            // The manifest records wall-clock time, which legitimately varies.
            if name == "manifest.txt" {
                continue;
            }
            let same = reference.get(name).map(|r| r == bytes).unwrap_or(false);
            if !same {
                all_equal = false;
            }
            println!("{threads} threads: {name}: {}", if same { "identical" } else { "DIFFERS" });
        }
    }
    println!();
    println!(
        "{}",
        if all_equal { "all CSVs byte-identical across 1/2/8 threads" } else { "MISMATCH" }
    );
    Ok(())
}
