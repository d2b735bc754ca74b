//! Sweep a small parameter grid over one set and print the training CSV.

use tdc::cluster::KRange;
use tdc::evotemplate::StoppingConfig;
use tdc::harness::{build_grid, samples_to_csv, sweep, ParamRanges, SweepOptions};
use tdc::seqcore::random_set;

fn main() -> Result<(), tdc::Error> {
    let states: Vec<String> = ["A", "B", "C", "D", "E"].map(String::from).to_vec();
    let set = random_set("rand", &states, 25, 2, 6, 5)?;
    let grid = build_grid(2, &ParamRanges::default(), 9)?;
    eprintln!("{} grid points", grid.len());
    let samples = sweep(
        &set,
        &grid,
        KRange::default(),
        &StoppingConfig::default(),
        9,
        SweepOptions { jobs: 0, progress: false },
    )?;
    print!("{}", samples_to_csv(&samples)?);
    Ok(())
}
