//! Predicted outcomes over a candidate parameter grid, with the configurations
//! that are non-dominated under user-chosen objectives flagged.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::evotemplate::GAParams;
use crate::harness::{format_mutation_probability, ParamGrid};
use crate::seqcore::{compute_descriptor, parse_sequence_file, SeqError, SequenceSet, SetDescriptor};
use crate::surrogate::{OutcomePredictor, SurrogateError, Target};

#[derive(Debug, Error)]
pub enum RecommendError {
    #[error("InvalidObjective: {0}")]
    InvalidObjective(String),
    #[error("EmptyObjectives: at least one objective is required")]
    EmptyObjectives,
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

impl Direction {
    /// CHI is maximized; every other outcome is minimized.
    pub fn default_for(t: Target) -> Self {
        match t {
            Target::Chi => Direction::Maximize,
            _ => Direction::Minimize,
        }
    }

    pub fn short(self) -> &'static str {
        match self {
            Direction::Minimize => "min",
            Direction::Maximize => "max",
        }
    }

    /// Value oriented so that larger is better.
    fn orient(self, v: f64) -> f64 {
        match self {
            Direction::Minimize => -v,
            Direction::Maximize => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Objective {
    pub target: Target,
    pub direction: Direction,
}

impl FromStr for Objective {
    type Err = RecommendError;

    /// `target` or `target:dir`, where dir is min/max/minimize/maximize.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, dir) = match s.split_once(':') {
            Some((n, d)) => (n.trim(), Some(d.trim())),
            None => (s.trim(), None),
        };
        let target: Target = name.parse().map_err(|_| {
            RecommendError::InvalidObjective(format!("objectives: unknown target {name:?}"))
        })?;
        let direction = match dir {
            None => Direction::default_for(target),
            Some("min") | Some("minimize") => Direction::Minimize,
            Some("max") | Some("maximize") => Direction::Maximize,
            Some(other) => {
                return Err(RecommendError::InvalidObjective(format!(
                    "objectives: unknown direction {other:?} for {name}"
                )))
            }
        };
        Ok(Objective { target, direction })
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.target, self.direction.short())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectiveSpec {
    objectives: Vec<Objective>,
}

impl ObjectiveSpec {
    pub fn new(objectives: Vec<Objective>) -> Result<Self, RecommendError> {
        if objectives.is_empty() {
            return Err(RecommendError::EmptyObjectives);
        }
        Ok(ObjectiveSpec { objectives })
    }

    pub fn parse<S: AsRef<str>>(items: &[S]) -> Result<Self, RecommendError> {
        Self::new(
            items
                .iter()
                .map(|s| s.as_ref().parse())
                .collect::<Result<_, _>>()?,
        )
    }

    pub fn objectives(&self) -> &[Objective] {
        &self.objectives
    }

    pub fn len(&self) -> usize {
        self.objectives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objectives.is_empty()
    }
}

impl FromStr for ObjectiveSpec {
    type Err = RecommendError;

    /// Comma-separated objectives, e.g. `dbi:min,elapsed_seconds:min`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let items: Vec<&str> = s.split(',').filter(|p| !p.trim().is_empty()).collect();
        Self::parse(&items)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecommendationRow {
    pub params: GAParams,
    /// Indexed by [`Target::index`].
    pub predicted: [f64; 5],
    pub nondominated: bool,
}

impl RecommendationRow {
    pub fn value(&self, t: Target) -> f64 {
        self.predicted[t.index()]
    }
}

/// One prediction per grid point, in grid order, flags unset.
pub fn predict_grid(
    model: &dyn OutcomePredictor,
    descriptor: &SetDescriptor,
    grid: &ParamGrid,
) -> Result<Vec<RecommendationRow>, RecommendError> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let params = grid.point(i);
            Ok(RecommendationRow {
                predicted: model.predict_outcome(&params, descriptor)?,
                params,
                nondominated: false,
            })
        })
        .collect()
}

fn oriented(row: &RecommendationRow, spec: &ObjectiveSpec) -> Vec<f64> {
    spec.objectives
        .iter()
        .map(|o| o.direction.orient(row.value(o.target)))
        .collect()
}

/// Flags every row that no other row dominates: at least as good on every chosen
/// objective and strictly better on one. Rows with equal objective tuples never
/// dominate each other, so they share a flag.
pub fn mark_nondominated(rows: &mut [RecommendationRow], spec: &ObjectiveSpec) {
    let points: Vec<Vec<f64>> = rows.iter().map(|r| oriented(r, spec)).collect();
    let dominated = |a: &[f64], b: &[f64]| {
        b.iter().zip(a).all(|(y, x)| y >= x) && b.iter().zip(a).any(|(y, x)| y > x)
    };
    for (i, row) in rows.iter_mut().enumerate() {
        row.nondominated = !points.iter().any(|p| dominated(&points[i], p));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub nondominated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recommendation {
    pub objectives: ObjectiveSpec,
    pub rows: Vec<RecommendationRow>,
    /// Present iff exactly two objectives were chosen; one point per returned row.
    pub scatter: Option<Vec<ScatterPoint>>,
}

/// Predicts, flags and sorts the grid for an already-parsed set. Rows are sorted
/// best-first on the first objective (stable, so grid order breaks ties).
pub fn recommend_for_set(
    set: &SequenceSet,
    model: &dyn OutcomePredictor,
    grid: &ParamGrid,
    spec: &ObjectiveSpec,
    show_all: bool,
) -> Result<Recommendation, RecommendError> {
    let descriptor = compute_descriptor(set);
    let mut rows = predict_grid(model, &descriptor, grid)?;
    mark_nondominated(&mut rows, spec);
    let first = spec.objectives[0];
    rows.sort_by(|a, b| {
        let (x, y) = (a.value(first.target), b.value(first.target));
        match first.direction {
            Direction::Minimize => x.total_cmp(&y),
            Direction::Maximize => y.total_cmp(&x),
        }
    });
    if !show_all {
        rows.retain(|r| r.nondominated);
    }
    let scatter = (spec.len() == 2).then(|| {
        let (tx, ty) = (spec.objectives[0].target, spec.objectives[1].target);
        rows.iter()
            .map(|r| ScatterPoint {
                x: r.value(tx),
                y: r.value(ty),
                nondominated: r.nondominated,
            })
            .collect()
    });
    Ok(Recommendation {
        objectives: spec.clone(),
        rows,
        scatter,
    })
}

/// Parses a sequence file and runs [`recommend_for_set`] on it.
pub fn recommend(
    set_name: &str,
    set_text: &str,
    model: &dyn OutcomePredictor,
    grid: &ParamGrid,
    spec: &ObjectiveSpec,
    show_all: bool,
) -> Result<Recommendation, RecommendError> {
    let set = parse_sequence_file(set_name, set_text)?;
    recommend_for_set(&set, model, grid, spec, show_all)
}

/// Table columns: the five GA parameters, then the outcomes in display order.
pub const TABLE_COLUMNS: [&str; 10] = [
    "increment",
    "mutation_probability",
    "mutation_number",
    "parent_fraction",
    "start_population_factor",
    "chi",
    "dbi",
    "non_clustered",
    "num_clusters",
    "elapsed_seconds",
];

/// Outcome columns of [`TABLE_COLUMNS`].
pub const TABLE_OUTCOMES: [Target; 5] = [
    Target::Chi,
    Target::Dbi,
    Target::NonClustered,
    Target::NumClusters,
    Target::ElapsedSeconds,
];

/// Cells of one table row. Predictions are rounded to two decimals.
pub fn table_cells(row: &RecommendationRow) -> Vec<String> {
    let p = &row.params;
    let mut cells = vec![
        p.increment.to_string(),
        format_mutation_probability(&p.mutation_probability),
        p.mutation_number.to_string(),
        p.parent_fraction.to_string(),
        p.start_population_factor.to_string(),
    ];
    cells.extend(TABLE_OUTCOMES.iter().map(|t| format!("{:.2}", row.value(*t))));
    cells
}

/// Table as CSV; `with_flags` appends a trailing `nondominated` column.
pub fn render_table(rows: &[RecommendationRow], with_flags: bool) -> String {
    let mut out = TABLE_COLUMNS.join(",");
    if with_flags {
        out.push_str(",nondominated");
    }
    out.push('\n');
    for r in rows {
        out.push_str(&table_cells(r).join(","));
        if with_flags {
            out.push_str(if r.nondominated { ",true" } else { ",false" });
        }
        out.push('\n');
    }
    out
}

/// Scatter triples as CSV with the objective names as the x and y headers.
pub fn render_scatter(spec: &ObjectiveSpec, points: &[ScatterPoint]) -> String {
    let o = spec.objectives();
    let mut out = format!("{},{},nondominated\n", o[0].target, o[1].target);
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.x, p.y, p.nondominated));
    }
    out
}
