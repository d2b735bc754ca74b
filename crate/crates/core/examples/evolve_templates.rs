//! Run the template GA on a generated set and print the Pareto front.

use tdc::evotemplate::{run_ga, GAParams, StoppingConfig};
use tdc::seqcore::{generate_set, GeneratorConfig};

fn main() -> Result<(), tdc::Error> {
    let set = generate_set(&GeneratorConfig {
        name: "two".into(),
        templates: vec![
            ["A", "B", "C", "D"].map(String::from).to_vec(),
            ["E", "F", "G"].map(String::from).to_vec(),
        ],
        mutation_probability: 0.1,
        set_size: 30,
        seed: 1,
    })?;
    let result = run_ga(&set, &GAParams::default(), &StoppingConfig::default(), 7)?;
    println!(
        "{} generations, {:.3}s",
        result.generations, result.elapsed_seconds
    );
    println!("length aligning template");
    for (t, v) in &result.front {
        println!("{:>6} {:>8} {}", v.length, v.aligning, set.alphabet().render(t.states()));
    }
    Ok(())
}
