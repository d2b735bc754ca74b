mod support;

use support::{quick_set_models, random_params, small_sets, synthetic_samples};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tdc::harness::{split_per_set, SplitSpec};
use tdc::seqcore::compute_descriptor;
use tdc::surrogate::{
    evaluate_families, render_mape_table, train_each, train_general, Family, HyperGrid, ModelFile,
    SurrogateError, TargetTransform, TrainConfig, FAMILY_ORDER,
};

fn quick_cfg() -> TrainConfig {
    TrainConfig {
        grid: HyperGrid {
            n_trees: vec![5],
            max_depth: vec![3, 6],
            min_samples_split: vec![2],
        },
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn training_is_bit_reproducible() {
    let samples = synthetic_samples(&small_sets(1, 3), 20, 2);
    let a = train_general(&samples, &quick_cfg()).unwrap();
    let b = train_general(&samples, &quick_cfg()).unwrap();
    assert_eq!(a, b);
    let (ea, _) = train_each(&samples, &quick_cfg()).unwrap();
    let (eb, _) = train_each(&samples, &quick_cfg()).unwrap();
    assert_eq!(ea, eb);
}

#[test]
fn small_sets_are_skipped_and_single_set_general_rejected() {
    let sets = small_sets(1, 2);
    let mut samples = synthetic_samples(&sets[..1], 20, 2);
    samples.extend(synthetic_samples(&sets[1..], 5, 3));
    let (models, skipped) = train_each(&samples, &quick_cfg()).unwrap();
    assert_eq!(models.len(), 1);
    assert_eq!(skipped.len(), 1);
    assert!(skipped[0].starts_with("TooFewSamples"));

    let one = synthetic_samples(&sets[..1], 20, 2);
    assert!(matches!(train_general(&one, &quick_cfg()), Err(SurrogateError::TooFewSets(_))));
}

#[test]
fn model_files_round_trip_exactly() {
    let samples = synthetic_samples(&small_sets(4, 3), 20, 5);
    let cfg = quick_cfg();
    let general = ModelFile {
        family: Family::General,
        corpus_hash: "ab12".into(),
        split: SplitSpec { train_fraction: 0.7, seed: 9 },
        general: Some(train_general(&samples, &cfg).unwrap()),
        sets: Vec::new(),
    };
    let text = general.to_text();
    let back = ModelFile::from_text(&text).unwrap();
    assert_eq!(back, general);
    assert_eq!(back.to_text(), text);

    let identity = TrainConfig { transform: TargetTransform::Identity, ..cfg.clone() };
    let (sets, _) = train_each(&samples, &identity).unwrap();
    let each = ModelFile {
        family: Family::Each,
        corpus_hash: "cd34".into(),
        split: SplitSpec::default(),
        general: None,
        sets,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("each.model");
    each.save(&path).unwrap();
    assert_eq!(ModelFile::load(&path).unwrap(), each);
}

#[test]
fn corrupt_model_files_are_rejected() {
    let samples = synthetic_samples(&small_sets(4, 2), 15, 5);
    let file = ModelFile {
        family: Family::General,
        corpus_hash: "x".into(),
        split: SplitSpec::default(),
        general: Some(train_general(&samples, &quick_cfg()).unwrap()),
        sets: Vec::new(),
    };
    let text = file.to_text();
    assert!(ModelFile::from_text("").is_err());
    assert!(ModelFile::from_text(&text.replacen("tdc-surrogate-model 1", "tdc-surrogate-model 99", 1)).is_err());
    let truncated: String = text.lines().take(text.lines().count() / 2).collect::<Vec<_>>().join("\n");
    assert!(ModelFile::from_text(&truncated).is_err());
}

#[test]
fn predictors_from_files() {
    let members = quick_set_models(3, 8);
    let file = ModelFile {
        family: Family::Each,
        corpus_hash: "h".into(),
        split: SplitSpec::default(),
        general: None,
        sets: members.clone(),
    };
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let params = random_params(&mut r);
    let d = compute_descriptor(&small_sets(50, 1)[0]);
    let avg = file.clone().into_predictor(None).unwrap();
    let knn = file.clone().into_predictor(Some(3)).unwrap();
    assert_eq!(avg.family(), "average");
    assert_eq!(knn.family(), "knn");
    assert_eq!(
        avg.predict_outcome(&params, &d).unwrap(),
        knn.predict_outcome(&params, &d).unwrap()
    );
    assert!(file.clone().into_predictor(Some(4)).is_err());
    assert!(file.into_predictor(Some(0)).is_err());
}

#[test]
fn evaluation_table_has_four_families_and_five_targets() {
    let samples = synthetic_samples(&small_sets(6, 4), 30, 7);
    let spec = SplitSpec { train_fraction: 0.7, seed: 1 };
    let (train, _) = split_per_set(&samples, spec).unwrap();
    let (each, _) = train_each(&train, &quick_cfg()).unwrap();
    let general = train_general(&train, &quick_cfg()).unwrap();
    let reports = evaluate_families(&each, Some(&general), &samples, spec, 3).unwrap();
    let families: Vec<&str> = reports.iter().map(|r| r.family.as_str()).collect();
    assert_eq!(families, FAMILY_ORDER);
    let table = render_mape_table(&reports);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0], "family,chi,dbi,elapsed_seconds,non_clustered,num_clusters");
    for (line, r) in lines[1..].iter().zip(&reports) {
        assert_eq!(line.split(',').count(), 6);
        assert!(r.mean_test_mape().is_finite());
        assert_eq!(r.n_train + r.n_test, samples.len());
    }
}
