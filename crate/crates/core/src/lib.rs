//! Template discovery and clustering (TDC) for state sequences, and surrogate
//! models that predict the outcome of a TDC run from its GA parameters and the
//! shape of the input set.
//!
//! The pipeline, bottom-up:
//!
//! - [`seqcore`]: sequences, set descriptors, synthetic set generation;
//! - [`align`]: edit distance, template fitting, transition graphs;
//! - [`evotemplate`]: the bi-objective genetic algorithm producing templates;
//! - [`cluster`]: k-medoids over templates, CHI/DBI, and [`cluster::run_tdc`];
//! - [`harness`]: parameter grids, sweeps and the training-sample CSV;
//! - [`surrogate`]: random forests, model families and MAPE evaluation;
//! - [`recommend`]: predicted outcomes over a grid with non-dominated flags.

pub mod align;
pub mod cluster;
pub mod evotemplate;
pub mod harness;
pub mod recommend;
pub mod seqcore;
pub mod surrogate;

mod error;

pub use error::Error;

/// Mixes a master seed with a run index (SplitMix64 finalizer applied twice).
///
/// Seeds derived this way do not depend on execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
