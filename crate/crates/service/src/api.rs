//! Request and response bodies. Every response carries `schema_version`;
//! requests reject unknown fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tdc::evotemplate::{GAParams, MutationProbability};
use tdc::harness::ParamGrid;
use tdc::recommend::{Recommendation, RecommendationRow, ScatterPoint};
use tdc::seqcore::SetDescriptor;
use tdc::surrogate::TARGETS;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorBody {
    pub min_len: usize,
    pub max_len: usize,
    pub median_len: f64,
    pub stdev_len: f64,
    pub outlier_count: usize,
    pub unique_count: usize,
    pub ngram_freqs: BTreeMap<String, f64>,
}

impl From<&SetDescriptor> for DescriptorBody {
    fn from(d: &SetDescriptor) -> Self {
        DescriptorBody {
            min_len: d.min_len,
            max_len: d.max_len,
            median_len: d.median_len,
            stdev_len: d.stdev_len,
            outlier_count: d.outlier_count,
            unique_count: d.unique_count,
            ngram_freqs: d.ngram_freqs.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetCreated {
    pub schema_version: u32,
    pub set_id: String,
    pub name: String,
    pub sequences: usize,
    pub descriptor: DescriptorBody,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetInfo {
    pub schema_version: u32,
    pub set_id: String,
    pub name: String,
    pub sequences: usize,
    pub descriptor: DescriptorBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsBody {
    pub increment: f64,
    /// `[p_sub, p_del, p_ins]`.
    pub mutation_probability: [f64; 3],
    pub mutation_number: u32,
    pub parent_fraction: f64,
    pub start_population_factor: f64,
}

impl From<&GAParams> for ParamsBody {
    fn from(p: &GAParams) -> Self {
        ParamsBody {
            increment: p.increment,
            mutation_probability: p.mutation_probability.as_array(),
            mutation_number: p.mutation_number,
            parent_fraction: p.parent_fraction,
            start_population_factor: p.start_population_factor,
        }
    }
}

impl From<&ParamsBody> for GAParams {
    fn from(p: &ParamsBody) -> Self {
        let [s, d, i] = p.mutation_probability;
        GAParams {
            increment: p.increment,
            mutation_probability: MutationProbability::new(s, d, i),
            mutation_number: p.mutation_number,
            parent_fraction: p.parent_fraction,
            start_population_factor: p.start_population_factor,
        }
    }
}

/// Replaces any subset of the server's candidate grid axes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverride {
    pub increment: Option<Vec<f64>>,
    pub mutation_probability: Option<Vec<[f64; 3]>>,
    pub mutation_number: Option<Vec<u32>>,
    pub parent_fraction: Option<Vec<f64>>,
    pub start_population_factor: Option<Vec<f64>>,
}

impl GridOverride {
    pub fn apply(&self, base: &ParamGrid) -> ParamGrid {
        ParamGrid {
            increment: self.increment.clone().unwrap_or_else(|| base.increment.clone()),
            mutation_probability: self.mutation_probability.as_ref().map_or_else(
                || base.mutation_probability.clone(),
                |v| v.iter().map(|&[s, d, i]| MutationProbability::new(s, d, i)).collect(),
            ),
            mutation_number: self
                .mutation_number
                .clone()
                .unwrap_or_else(|| base.mutation_number.clone()),
            parent_fraction: self
                .parent_fraction
                .clone()
                .unwrap_or_else(|| base.parent_fraction.clone()),
            start_population_factor: self
                .start_population_factor
                .clone()
                .unwrap_or_else(|| base.start_population_factor.clone()),
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendationRequest {
    pub set_id: String,
    /// `target` or `target:min|max`.
    pub objectives: Vec<String>,
    #[serde(default)]
    pub grid: Option<GridOverride>,
    #[serde(default = "yes")]
    pub show_all: bool,
}

/// Outcome values keyed by target name.
pub type Outcomes = BTreeMap<String, f64>;

fn outcomes(values: &[f64; 5]) -> Outcomes {
    TARGETS
        .iter()
        .map(|t| (t.name().to_string(), values[t.index()]))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowBody {
    pub params: ParamsBody,
    pub predicted: Outcomes,
    pub nondominated: bool,
}

impl From<&RecommendationRow> for RowBody {
    fn from(r: &RecommendationRow) -> Self {
        RowBody {
            params: (&r.params).into(),
            predicted: outcomes(&r.predicted),
            nondominated: r.nondominated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterBody {
    pub x: f64,
    pub y: f64,
    pub nondominated: bool,
}

impl From<&ScatterPoint> for ScatterBody {
    fn from(p: &ScatterPoint) -> Self {
        ScatterBody {
            x: p.x,
            y: p.y,
            nondominated: p.nondominated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelInfo {
    pub family: String,
    pub corpus_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationResponse {
    pub schema_version: u32,
    pub set_id: String,
    /// Normalized objectives, e.g. `dbi:min`.
    pub objectives: Vec<String>,
    /// Table column order for display.
    pub columns: Vec<String>,
    pub rows: Vec<RowBody>,
    pub scatter: Option<Vec<ScatterBody>>,
    pub model_info: ModelInfo,
}

impl RecommendationResponse {
    pub fn new(set_id: String, rec: &Recommendation, model_info: ModelInfo) -> Self {
        RecommendationResponse {
            schema_version: SCHEMA_VERSION,
            set_id,
            objectives: rec.objectives.objectives().iter().map(|o| o.to_string()).collect(),
            columns: tdc::recommend::TABLE_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows: rec.rows.iter().map(RowBody::from).collect(),
            scatter: rec
                .scatter
                .as_ref()
                .map(|pts| pts.iter().map(ScatterBody::from).collect()),
            model_info,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictionRequest {
    pub set_id: String,
    pub params: ParamsBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResponse {
    pub schema_version: u32,
    pub set_id: String,
    pub params: ParamsBody,
    pub predicted: Outcomes,
    pub model_info: ModelInfo,
}

impl PredictionResponse {
    pub fn new(set_id: String, params: ParamsBody, values: &[f64; 5], model_info: ModelInfo) -> Self {
        PredictionResponse {
            schema_version: SCHEMA_VERSION,
            set_id,
            params,
            predicted: outcomes(values),
            model_info,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub schema_version: u32,
    pub status: String,
    pub model_loaded: bool,
    pub corpus_hash: Option<String>,
    pub model_family: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub schema_version: u32,
    /// Error kind, e.g. `EmptyFile`.
    pub error: String,
    pub message: String,
    /// Offending request field, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}
