//! Multi-objective genetic algorithm searching for short templates that many
//! sequences fit.
//!
//! Individuals are state strings. Each is scored by an [`ObjectiveVector`]: its
//! length (minimized) and its aligning number (maximized). The loop is
//! generational:
//!
//! 1. evaluate every individual and extract the Pareto front;
//! 2. stop once the front metric (sum of Euclidean norms of the front's objective
//!    vectors) has changed by less than `epsilon` relative for `patience`
//!    consecutive generations, or after `max_generations`;
//! 3. rank the population by non-domination rank, then higher aligning number,
//!    then shorter length, and keep the top `parent_fraction` share as parents;
//! 4. the next population is the current front verbatim plus offspring, each a
//!    one-point crossover of two distinct parents followed by [`mutate`].
//!
//! Template length is capped at `floor(increment * longest input sequence)`
//! for the whole run.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::align::{aligning_number, Template};
use crate::seqcore::{SequenceSet, StateId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("InvalidParams: {0}")]
    InvalidParams(String),
}

/// Per-mutation probabilities of the three edit kinds; the rest is a no-op.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationProbability {
    pub substitution: f64,
    pub deletion: f64,
    pub insertion: f64,
}

impl MutationProbability {
    pub fn new(substitution: f64, deletion: f64, insertion: f64) -> Self {
        MutationProbability {
            substitution,
            deletion,
            insertion,
        }
    }

    pub fn uniform(p: f64) -> Self {
        Self::new(p, p, p)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.substitution, self.deletion, self.insertion]
    }

    pub fn total(&self) -> f64 {
        self.substitution + self.deletion + self.insertion
    }
}

/// The five tunable GA parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GAParams {
    /// Max template length as a multiple of the longest input sequence.
    pub increment: f64,
    pub mutation_probability: MutationProbability,
    /// Upper bound on mutations applied to one offspring.
    pub mutation_number: u32,
    /// Share of the population used as parents.
    pub parent_fraction: f64,
    /// Initial population size as a multiple of the input set size.
    pub start_population_factor: f64,
}

impl Default for GAParams {
    fn default() -> Self {
        GAParams {
            increment: 3.0,
            mutation_probability: MutationProbability::uniform(0.1),
            mutation_number: 4,
            parent_fraction: 0.3,
            start_population_factor: 1.2,
        }
    }
}

impl GAParams {
    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |msg: String| Err(GaError::InvalidParams(msg));
        if !self.increment.is_finite() || self.increment < 1.0 {
            return bad(format!("increment {} must be >= 1", self.increment));
        }
        for p in self.mutation_probability.as_array() {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("mutation probability {p} outside [0, 1]"));
            }
        }
        if self.mutation_probability.total() > 1.0 + 1e-12 {
            return bad(format!(
                "mutation probabilities sum to {} > 1",
                self.mutation_probability.total()
            ));
        }
        if !(self.parent_fraction > 0.0 && self.parent_fraction <= 1.0) {
            return bad(format!(
                "parent fraction {} outside (0, 1]",
                self.parent_fraction
            ));
        }
        if !(self.start_population_factor.is_finite() && self.start_population_factor > 0.0) {
            return bad(format!(
                "start population factor {} must be > 0",
                self.start_population_factor
            ));
        }
        Ok(())
    }

    /// Maximum template length for inputs whose longest sequence is `max_input_len`.
    pub fn length_cap(&self, max_input_len: usize) -> usize {
        ((self.increment * max_input_len as f64).floor() as usize).max(max_input_len)
    }

    pub fn population_size(&self, set_size: usize) -> usize {
        ((self.start_population_factor * set_size as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectiveVector {
    pub length: usize,
    pub aligning: usize,
}

impl ObjectiveVector {
    pub fn new(length: usize, aligning: usize) -> Self {
        ObjectiveVector { length, aligning }
    }
}

/// Shorter-or-equal and aligning-at-least, with one strict.
pub fn dominates(a: ObjectiveVector, b: ObjectiveVector) -> bool {
    a.length <= b.length
        && a.aligning >= b.aligning
        && (a.length < b.length || a.aligning > b.aligning)
}

pub fn evaluate(set: &SequenceSet, template: &Template) -> ObjectiveVector {
    ObjectiveVector::new(template.len(), aligning_number(set, template))
}

/// Non-dominated members, one per distinct objective vector (the first seen).
pub fn pareto_front(evaluated: &[(Template, ObjectiveVector)]) -> Vec<(Template, ObjectiveVector)> {
    let mut front: Vec<(Template, ObjectiveVector)> = Vec::new();
    for (i, (t, v)) in evaluated.iter().enumerate() {
        if evaluated.iter().any(|(_, w)| dominates(*w, *v)) {
            continue;
        }
        if evaluated[..i].iter().any(|(_, w)| w == v) {
            continue;
        }
        front.push((t.clone(), *v));
    }
    front
}

/// Sum of the Euclidean norms of the front's objective vectors.
pub fn front_change_metric(front: &[ObjectiveVector]) -> f64 {
    front
        .iter()
        .map(|v| ((v.length * v.length + v.aligning * v.aligning) as f64).sqrt())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StoppingConfig {
    pub epsilon: f64,
    pub patience: usize,
    pub max_generations: usize,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        StoppingConfig {
            epsilon: 1e-3,
            patience: 5,
            max_generations: 200,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<(), GaError> {
        if !(self.epsilon > 0.0) || self.patience == 0 || self.max_generations == 0 {
            return Err(GaError::InvalidParams(format!(
                "stopping config must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GAResult {
    /// Mutually non-dominated, sorted by ascending length.
    pub front: Vec<(Template, ObjectiveVector)>,
    pub generations: usize,
    pub elapsed_seconds: f64,
    pub seed: u64,
    /// Largest aligning number on the front after each generation.
    pub best_aligning_history: Vec<usize>,
}

impl GAResult {
    pub fn templates(&self) -> Vec<Template> {
        self.front.iter().map(|(t, _)| t.clone()).collect()
    }
}

fn random_state(alphabet: &[StateId], rng: &mut impl Rng) -> StateId {
    *alphabet.choose(rng).expect("non-empty alphabet")
}

/// Random templates over the set's alphabet with lengths between the longest
/// input sequence and the increment cap.
pub fn init_population(
    set: &SequenceSet,
    params: &GAParams,
    seed: u64,
) -> Result<Vec<Template>, GaError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(init_with_rng(set, params, &mut rng))
}

fn init_with_rng(set: &SequenceSet, params: &GAParams, rng: &mut ChaCha8Rng) -> Vec<Template> {
    let alphabet: Vec<StateId> = set.alphabet().ids().collect();
    let lo = set.max_len();
    let hi = params.length_cap(lo);
    (0..params.population_size(set.len()))
        .map(|_| {
            let len = rng.gen_range(lo..=hi);
            Template((0..len).map(|_| random_state(&alphabet, rng)).collect())
        })
        .collect()
}

/// Applies up to `mutation_number` random edits; the length stays within `[1, cap]`.
pub fn mutate(
    template: &Template,
    params: &GAParams,
    alphabet: &[StateId],
    cap: usize,
    rng: &mut impl Rng,
) -> Template {
    let mut states = template.0.clone();
    let count = rng.gen_range(0..=params.mutation_number);
    let p = params.mutation_probability;
    for _ in 0..count {
        let u: f64 = rng.gen();
        if u < p.substitution {
            let pos = rng.gen_range(0..states.len());
            states[pos] = random_state(alphabet, rng);
        } else if u < p.substitution + p.deletion {
            if states.len() > 1 {
                let pos = rng.gen_range(0..states.len());
                states.remove(pos);
            }
        } else if u < p.total() && states.len() < cap {
            let pos = rng.gen_range(0..=states.len());
            states.insert(pos, random_state(alphabet, rng));
        }
    }
    Template(states)
}

/// Prefix of `a` up to a random cut joined with a suffix of `b` from a random cut.
/// Both parts are non-empty; the child is truncated to `cap`.
fn crossover(a: &Template, b: &Template, cap: usize, rng: &mut impl Rng) -> Template {
    let i = rng.gen_range(1..=a.len());
    let j = rng.gen_range(0..b.len());
    let mut child: Vec<StateId> = a.0[..i].iter().chain(&b.0[j..]).copied().collect();
    child.truncate(cap);
    Template(child)
}

/// Non-domination rank of every individual (0 = first front).
fn nondomination_ranks(objs: &[ObjectiveVector]) -> Vec<usize> {
    let n = objs.len();
    let mut rank = vec![usize::MAX; n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut level = 0;
    while !remaining.is_empty() {
        let current: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&i| !remaining.iter().any(|&j| dominates(objs[j], objs[i])))
            .collect();
        for &i in &current {
            rank[i] = level;
        }
        remaining.retain(|i| rank[*i] == usize::MAX);
        level += 1;
    }
    rank
}

pub fn run_ga(
    set: &SequenceSet,
    params: &GAParams,
    stop: &StoppingConfig,
    seed: u64,
) -> Result<GAResult, GaError> {
    params.validate()?;
    stop.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<StateId> = set.alphabet().ids().collect();
    let cap = params.length_cap(set.max_len());
    let pop_size = params.population_size(set.len());
    let n_parents = ((params.parent_fraction * pop_size as f64).ceil() as usize).clamp(1, pop_size);

    let mut population = init_with_rng(set, params, &mut rng);
    let mut previous_metric: Option<f64> = None;
    let mut stagnant = 0;
    let mut generations = 0;
    let mut history = Vec::new();

    loop {
        generations += 1;
        let evaluated: Vec<(Template, ObjectiveVector)> = population
            .into_iter()
            .map(|t| {
                let v = evaluate(set, &t);
                (t, v)
            })
            .collect();
        let front = pareto_front(&evaluated);
        let metric = front_change_metric(&front.iter().map(|(_, v)| *v).collect::<Vec<_>>());
        history.push(front.iter().map(|(_, v)| v.aligning).max().unwrap_or(0));

        if let Some(prev) = previous_metric {
            if (metric - prev).abs() / metric.max(1.0) < stop.epsilon {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
        }
        previous_metric = Some(metric);

        if stagnant >= stop.patience || generations >= stop.max_generations {
            let mut front = front;
            front.sort_by_key(|(_, v)| (v.length, std::cmp::Reverse(v.aligning)));
            return Ok(GAResult {
                front,
                generations,
                elapsed_seconds: started.elapsed().as_secs_f64(),
                seed,
                best_aligning_history: history,
            });
        }

        let objs: Vec<ObjectiveVector> = evaluated.iter().map(|(_, v)| *v).collect();
        let ranks = nondomination_ranks(&objs);
        let mut order: Vec<usize> = (0..evaluated.len()).collect();
        order.sort_by_key(|&i| (ranks[i], std::cmp::Reverse(objs[i].aligning), objs[i].length, i));
        let parents: Vec<&Template> = order[..n_parents.min(order.len())]
            .iter()
            .map(|&i| &evaluated[i].0)
            .collect();

        let mut next: Vec<Template> = front.into_iter().map(|(t, _)| t).collect();
        while next.len() < pop_size {
            let child = if parents.len() >= 2 {
                let picked: Vec<&&Template> = parents.choose_multiple(&mut rng, 2).collect();
                crossover(picked[0], picked[1], cap, &mut rng)
            } else {
                parents[0].clone()
            };
            next.push(mutate(&child, params, &alphabet, cap, &mut rng));
        }
        population = next;
    }
}
