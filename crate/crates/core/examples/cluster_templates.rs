//! Full TDC run: GA, k-medoids over the front, k selection and assignment.

use tdc::cluster::{run_tdc, KRange};
use tdc::evotemplate::{GAParams, StoppingConfig};
use tdc::seqcore::{generate_set, GeneratorConfig};

fn main() -> Result<(), tdc::Error> {
    let letters = |s: &str| s.chars().map(String::from).collect::<Vec<_>>();
    let set = generate_set(&GeneratorConfig {
        name: "three".into(),
        templates: vec![letters("ABCDE"), letters("FGHIJ"), letters("KLMNO")],
        mutation_probability: 0.05,
        set_size: 40,
        seed: 11,
    })?;
    let run = run_tdc(
        &set,
        &GAParams::default(),
        KRange::new(2, 8)?,
        &StoppingConfig::default(),
        2,
    )?;

    println!("k    chi      dbi");
    for s in &run.k_table {
        println!("{:<4} {:<8.3} {:.3}", s.k, s.chi, s.dbi);
    }
    let o = run.outcome;
    println!(
        "chosen k={} chi={:.3} dbi={:.3} non_clustered={} ({} generations)",
        o.num_clusters, o.chi, o.dbi, o.non_clustered, run.generations
    );
    for (rep, members) in run.representatives.iter().zip(&run.clusters) {
        println!("  {} <- {} sequences", set.alphabet().render(rep.states()), members.len());
    }
    Ok(())
}
