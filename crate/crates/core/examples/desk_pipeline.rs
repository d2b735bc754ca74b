//! The whole methodology at desk scale: six generated sets and two random sets,
//! a 3-values-per-parameter sweep (243 runs per set), all four model families on
//! a 70:30 split, and the test MAPE table. Takes about a minute.
//!
//! cargo run --release -p tdc-core --example desk_pipeline [corpus_seed]

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdc::cluster::KRange;
use tdc::evotemplate::StoppingConfig;
use tdc::harness::{build_grid, split_per_set, sweep, ParamRanges, SplitSpec, SweepOptions};
use tdc::seqcore::{generate_set, random_set, GeneratorConfig};
use tdc::surrogate::{evaluate_families, render_mape_table, train_each, train_general, TrainConfig};

fn main() -> Result<(), tdc::Error> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<String> = (0..12).map(|i| format!("S{i:02}")).collect();
    let mut sets = Vec::new();
    for i in 0..6 {
        let templates = (0..i % 3 + 1)
            .map(|_| {
                let len = rng.gen_range(4..=7);
                (0..len).map(|_| alphabet[rng.gen_range(0..12)].clone()).collect()
            })
            .collect();
        sets.push(generate_set(&GeneratorConfig {
            name: format!("gen{i}"),
            templates,
            mutation_probability: 0.1 + 0.04 * i as f64,
            set_size: 40,
            seed: rng.gen(),
        })?);
    }
    for i in 0..2 {
        sets.push(random_set(&format!("rand{i}"), &alphabet[..8], 40, 3, 8, rng.gen())?);
    }

    let grid = build_grid(3, &ParamRanges::default(), seed)?;
    let mut samples = Vec::new();
    for set in &sets {
        let opts = SweepOptions { jobs: 4, progress: false };
        samples.extend(sweep(set, &grid, KRange::default(), &StoppingConfig::default(), seed, opts)?);
    }
    eprintln!("sweep: {} runs in {:.1}s", samples.len(), started.elapsed().as_secs_f64());

    let split = SplitSpec { train_fraction: 0.7, seed };
    let (train, _) = split_per_set(&samples, split)?;
    let cfg = TrainConfig { seed, ..TrainConfig::default() };
    let (each, _) = train_each(&train, &cfg)?;
    let general = train_general(&train, &cfg)?;
    let reports = evaluate_families(&each, Some(&general), &samples, split, 3)?;
    print!("{}", render_mape_table(&reports));
    for r in &reports {
        println!("{:<8} mean test MAPE {:.2}", r.family, r.mean_test_mape());
    }
    eprintln!("total {:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
