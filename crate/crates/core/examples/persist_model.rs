//! Save a trained model file, load it back and predict through the loaded copy.

use tdc::cluster::RunOutcome;
use tdc::evotemplate::GAParams;
use tdc::harness::{corpus_hash, samples_to_csv, SplitSpec, TrainingSample};
use tdc::seqcore::{compute_descriptor, random_set};
use tdc::surrogate::{train_each, Family, ModelFile, TrainConfig};

fn main() -> Result<(), tdc::Error> {
    let states: Vec<String> = ["A", "B", "C"].map(String::from).to_vec();
    let mut samples = Vec::new();
    for s in 0..2u64 {
        let set = random_set(&format!("s{s}"), &states, 20, 2, 5, s)?;
        let descriptor = compute_descriptor(&set);
        for i in 0..20 {
            let params = GAParams {
                start_population_factor: 1.0 + i as f64 / 10.0,
                ..GAParams::default()
            };
            samples.push(TrainingSample {
                set_name: set.name().into(),
                seed: i,
                params,
                descriptor: descriptor.clone(),
                outcome: RunOutcome {
                    elapsed_seconds: params.start_population_factor * 2.0,
                    num_clusters: 3,
                    chi: 10.0,
                    dbi: 1.0,
                    non_clustered: s as usize,
                },
            });
        }
    }
    let (sets, _) = train_each(&samples, &TrainConfig::default())?;
    let file = ModelFile {
        family: Family::Each,
        corpus_hash: corpus_hash(samples_to_csv(&samples)?.as_bytes()),
        split: SplitSpec::default(),
        general: None,
        sets,
    };
    let path = std::env::temp_dir().join("tdc-example.model");
    file.save(&path)?;
    let loaded = ModelFile::load(&path)?;
    assert_eq!(loaded, file);
    println!("{} ({} bytes)", path.display(), std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0));

    let descriptor = compute_descriptor(&random_set("new", &states, 10, 2, 5, 99)?);
    let model = loaded.into_predictor(Some(1))?;
    let params = GAParams { start_population_factor: 2.0, ..GAParams::default() };
    println!("{} prediction: {:?}", model.family(), model.predict_outcome(&params, &descriptor)?);
    Ok(())
}
