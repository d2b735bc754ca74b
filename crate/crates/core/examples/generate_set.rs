//! Generate a synthetic set from two templates and print it in file format.
//!
//! cargo run -p tdc-core --example generate_set

use tdc::seqcore::{compute_descriptor, generate_set, GeneratorConfig};

fn main() -> Result<(), tdc::Error> {
    let tokens = |s: &str| s.split(' ').map(String::from).collect::<Vec<_>>();
    let set = generate_set(&GeneratorConfig {
        name: "wards".into(),
        templates: vec![tokens("ER ICU SURG WARD HOME"), tokens("ER WARD HOME")],
        mutation_probability: 0.15,
        set_size: 12,
        seed: 42,
    })?;
    print!("{}", set.to_file_string());
    let d = compute_descriptor(&set);
    eprintln!(
        "{} sequences, lengths {}..{}, {} unique",
        set.len(),
        d.min_len,
        d.max_len,
        d.unique_count
    );
    Ok(())
}
