//! Train a general model on synthetic outcomes, then rank a candidate grid for a
//! new set under two objectives and print the table and scatter CSV.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tdc::cluster::RunOutcome;
use tdc::evotemplate::{GAParams, MutationProbability};
use tdc::harness::{build_grid, ParamRanges, TrainingSample};
use tdc::recommend::{recommend, render_scatter, render_table, ObjectiveSpec};
use tdc::seqcore::{compute_descriptor, random_set};
use tdc::surrogate::{train_general, TrainConfig};

fn main() -> Result<(), tdc::Error> {
    let states: Vec<String> = ["A", "B", "C", "D", "E", "F"].map(String::from).to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut samples = Vec::new();
    for s in 0..3 {
        let set = random_set(&format!("set{s}"), &states[..4 + s], 30, 2, 6, s as u64)?;
        let descriptor = compute_descriptor(&set);
        for i in 0..80 {
            let p = GAParams {
                increment: rng.gen_range(1.0..4.0),
                mutation_probability: MutationProbability::uniform(rng.gen_range(0.0..0.3)),
                mutation_number: rng.gen_range(0..6),
                parent_fraction: rng.gen_range(0.05..0.5),
                start_population_factor: rng.gen_range(1.0..3.0),
            };
            // Longer templates and bigger populations cost time but cluster better.
            let time = p.increment * p.start_population_factor * (1.0 + s as f64);
            samples.push(TrainingSample {
                set_name: set.name().to_string(),
                seed: i,
                params: p,
                descriptor: descriptor.clone(),
                outcome: RunOutcome {
                    elapsed_seconds: time,
                    num_clusters: 2 + p.mutation_number as usize % 3,
                    chi: 5.0 + 3.0 * p.increment,
                    dbi: 2.0 / p.increment + 0.1 * p.parent_fraction,
                    non_clustered: (10.0 / p.start_population_factor) as usize,
                },
            });
        }
    }
    let model = train_general(&samples, &TrainConfig::default())?;

    let grid = build_grid(2, &ParamRanges::default(), 4)?;
    let spec: ObjectiveSpec = "dbi:min,elapsed_seconds:min".parse()?;
    let new_set = "A,B,C\nA,C,D\nB,C\nA,B,C,D\nE,A\n";
    let rec = recommend("new", new_set, &model, &grid, &spec, true)?;
    print!("{}", render_table(&rec.rows, true));
    if let Some(points) = &rec.scatter {
        println!();
        print!("{}", render_scatter(&spec, points));
    }
    Ok(())
}
