//! Sweep four small sets, train every model family and print the test MAPE
//! table plus the general model's top features for elapsed time.

use tdc::cluster::KRange;
use tdc::evotemplate::StoppingConfig;
use tdc::harness::{build_grid, split_per_set, sweep, ParamRanges, SplitSpec, SweepOptions};
use tdc::seqcore::{generate_set, random_set, GeneratorConfig};
use tdc::surrogate::{
    evaluate_families, feature_importance, render_mape_table, train_each, train_general, Target,
    TrainConfig,
};

fn main() -> Result<(), tdc::Error> {
    let states: Vec<String> = (0..8).map(|i| format!("S{i}")).collect();
    let mut sets = Vec::new();
    for i in 0..3 {
        sets.push(generate_set(&GeneratorConfig {
            name: format!("gen{i}"),
            templates: vec![states[i..i + 4].to_vec(), states[4..7 + i % 2].to_vec()],
            mutation_probability: 0.1 + 0.05 * i as f64,
            set_size: 30,
            seed: i as u64,
        })?);
    }
    sets.push(random_set("rand", &states, 30, 3, 7, 4)?);

    let grid = build_grid(2, &ParamRanges::default(), 1)?;
    let mut samples = Vec::new();
    for set in &sets {
        samples.extend(sweep(
            set,
            &grid,
            KRange::default(),
            &StoppingConfig::default(),
            1,
            SweepOptions::default(),
        )?);
    }
    let split = SplitSpec { train_fraction: 0.7, seed: 1 };
    let (train, _) = split_per_set(&samples, split)?;
    let cfg = TrainConfig { seed: 1, ..TrainConfig::default() };
    let (each, _) = train_each(&train, &cfg)?;
    let general = train_general(&train, &cfg)?;

    let reports = evaluate_families(&each, Some(&general), &samples, split, 2)?;
    print!("{}", render_mape_table(&reports));
    println!();
    for (name, share) in feature_importance(&general, Target::ElapsedSeconds).iter().take(5) {
        println!("{name:<26} {share:.3}");
    }
    Ok(())
}
