//! Upload a set and ask for recommendations through the HTTP router, in process.
//! `cargo run -p tdc-service --example http_round_trip -- serve` binds 127.0.0.1:8080 instead.

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use tdc::cluster::RunOutcome;
use tdc::evotemplate::GAParams;
use tdc::harness::{build_grid, ParamRanges, SplitSpec, TrainingSample};
use tdc::seqcore::{compute_descriptor, random_set};
use tdc::surrogate::{train_general, Family, ModelFile, TrainConfig};
use tdc_service::store::SessionStore;
use tdc_service::{router, AppState, LoadedModel, ServiceConfig};

fn model() -> Result<ModelFile, tdc::Error> {
    let states: Vec<String> = ["A", "B", "C", "D"].map(String::from).to_vec();
    let mut samples = Vec::new();
    for s in 0..3u64 {
        let set = random_set(&format!("s{s}"), &states[..2 + s as usize], 20, 2, 5, s)?;
        let descriptor = compute_descriptor(&set);
        for i in 0..30 {
            let params = GAParams {
                increment: 1.0 + (i % 4) as f64,
                start_population_factor: 1.0 + i as f64 / 15.0,
                ..GAParams::default()
            };
            samples.push(TrainingSample {
                set_name: set.name().into(),
                seed: i,
                params,
                descriptor: descriptor.clone(),
                outcome: RunOutcome {
                    elapsed_seconds: params.start_population_factor * params.increment,
                    num_clusters: 2 + s as usize,
                    chi: 10.0 + params.increment,
                    dbi: 1.0 / params.increment,
                    non_clustered: i as usize % 3,
                },
            });
        }
    }
    Ok(ModelFile {
        family: Family::General,
        corpus_hash: "example".into(),
        split: SplitSpec::default(),
        general: Some(train_general(&samples, &TrainConfig::default())?),
        sets: Vec::new(),
    })
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let loaded = LoadedModel::from_file(model()?, None)?;
    let grid = build_grid(2, &ParamRanges::default(), 1)?;
    let state = Arc::new(AppState::new(Some(loaded), SessionStore::new(64), grid));
    if std::env::args().nth(1).as_deref() == Some("serve") {
        tdc_service::serve("127.0.0.1:8080".parse()?, state, ServiceConfig::default()).await?;
        return Ok(());
    }
    let app = router(state, &ServiceConfig::default());

    let res = app
        .clone()
        .oneshot(Request::post("/api/sets?name=demo.txt").body(Body::from("A B C\nA C\nB C D\n"))?)
        .await?;
    let created: serde_json::Value = serde_json::from_slice(&res.into_body().collect().await?.to_bytes())?;
    println!("uploaded: {created}");

    let req = serde_json::json!({
        "set_id": created["set_id"],
        "objectives": ["dbi:min", "elapsed_seconds:min"],
        "show_all": false,
    });
    let res = app
        .oneshot(
            Request::post("/api/recommendations")
                .header("content-type", "application/json")
                .body(Body::from(req.to_string()))?,
        )
        .await?;
    let status = res.status();
    let body: serde_json::Value = serde_json::from_slice(&res.into_body().collect().await?.to_bytes())?;
    println!("{status}: {} nondominated rows", body["rows"].as_array().map_or(0, |r| r.len()));
    for row in body["rows"].as_array().into_iter().flatten().take(3) {
        println!("  {} -> {}", row["params"], row["predicted"]);
    }
    Ok(())
}
