//! Parse a sequence file and print its descriptor as a CSV header plus row.
//!
//! cargo run -p tdc-core --example describe_set [path]

use tdc::seqcore::{compute_descriptor, parse_sequence_file};

const DEMO: &str = "A,B,C\nA,C\nA,B,B,C\nD,E\nD,E\nA,B,C,D,E,A,B\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEMO.to_string(),
    };
    let set = parse_sequence_file("demo", &text)?;
    let d = compute_descriptor(&set);
    println!("{}", d.csv_header().join(","));
    let row: Vec<String> = d.csv_values().iter().map(|v| format!("{v}")).collect();
    println!("{}", row.join(","));
    Ok(())
}
