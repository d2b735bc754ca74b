//! State sequences, sequence sets, set descriptors and the synthetic set generator.
//!
//! States are interned: a [`SequenceSet`] owns an [`Alphabet`] of token strings and
//! every sequence stores compact [`StateId`]s into it. The alphabet is kept sorted so
//! that two sets built from the same tokens agree on ids.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default upper bound on sequence length.
pub const DEFAULT_MAX_LEN: usize = 64;

const MAX_REDRAWS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SeqError {
    #[error("EmptyFile: no non-empty lines")]
    EmptyFile,
    #[error("MalformedLine: line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("InvalidState: {0:?}")]
    InvalidState(String),
    #[error("InvalidSequence: {0}")]
    InvalidSequence(String),
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
    #[error("DegenerateResult: generated an empty sequence {0} times in a row")]
    DegenerateResult(usize),
}

/// Index of a state inside an [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub u16);

/// A single state token, e.g. a hospital department code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(String);

impl State {
    pub fn new(token: impl Into<String>) -> Result<Self, SeqError> {
        let token = token.into();
        if token.is_empty() || token.chars().any(|c| c == ',' || c.is_whitespace()) {
            return Err(SeqError::InvalidState(token));
        }
        Ok(State(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sorted, deduplicated set of states.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Alphabet {
    states: Vec<State>,
}

impl Alphabet {
    pub fn new(states: impl IntoIterator<Item = State>) -> Self {
        let set: BTreeSet<State> = states.into_iter().collect();
        Alphabet {
            states: set.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<StateId> {
        self.states
            .binary_search_by(|s| s.as_str().cmp(token))
            .ok()
            .map(|i| StateId(i as u16))
    }

    pub fn state(&self, id: StateId) -> &State {
        &self.states[id.0 as usize]
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(|i| StateId(i as u16))
    }

    /// Renders a list of ids as a comma separated token string.
    pub fn render(&self, ids: &[StateId]) -> String {
        ids.iter()
            .map(|&id| self.state(id).as_str())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// An ordered, non-empty list of states.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateSequence(Vec<StateId>);

impl StateSequence {
    pub fn new(states: Vec<StateId>) -> Result<Self, SeqError> {
        Self::with_max_len(states, DEFAULT_MAX_LEN)
    }

    pub fn with_max_len(states: Vec<StateId>, max_len: usize) -> Result<Self, SeqError> {
        if states.is_empty() {
            return Err(SeqError::InvalidSequence("empty sequence".into()));
        }
        if states.len() > max_len {
            return Err(SeqError::InvalidSequence(format!(
                "length {} exceeds maximum {max_len}",
                states.len()
            )));
        }
        Ok(StateSequence(states))
    }

    pub fn states(&self) -> &[StateId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A named collection of sequences over a shared alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceSet {
    name: String,
    alphabet: Alphabet,
    sequences: Vec<StateSequence>,
}

impl SequenceSet {
    pub fn new(
        name: impl Into<String>,
        alphabet: Alphabet,
        sequences: Vec<StateSequence>,
    ) -> Result<Self, SeqError> {
        if sequences.is_empty() {
            return Err(SeqError::EmptyFile);
        }
        let n = alphabet.len();
        if let Some(bad) = sequences
            .iter()
            .flat_map(|s| s.states())
            .find(|id| id.0 as usize >= n)
        {
            return Err(SeqError::InvalidSequence(format!(
                "state id {} outside alphabet of size {n}",
                bad.0
            )));
        }
        Ok(SequenceSet {
            name: name.into(),
            alphabet,
            sequences,
        })
    }

    /// Builds a set from token lists, deriving the alphabet from the tokens.
    pub fn from_tokens<S: AsRef<str>>(
        name: impl Into<String>,
        rows: &[Vec<S>],
    ) -> Result<Self, SeqError> {
        let mut tokens = BTreeSet::new();
        for row in rows {
            for t in row {
                tokens.insert(State::new(t.as_ref())?);
            }
        }
        let alphabet = Alphabet::new(tokens);
        let sequences = rows
            .iter()
            .map(|row| {
                let ids = row
                    .iter()
                    .map(|t| alphabet.id_of(t.as_ref()).expect("token interned above"))
                    .collect();
                StateSequence::new(ids)
            })
            .collect::<Result<Vec<_>, _>>()?;
        SequenceSet::new(name, alphabet, sequences)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn sequences(&self) -> &[StateSequence] {
        &self.sequences
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.sequences.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Serializes to the line-per-sequence file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for s in &self.sequences {
            out.push_str(&self.alphabet.render(s.states()));
            out.push('\n');
        }
        out
    }
}

/// Parses one sequence per non-empty line; tokens are separated by commas or whitespace.
pub fn parse_sequence_file(name: &str, text: &str) -> Result<SequenceSet, SeqError> {
    let mut rows: Vec<Vec<&str>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for chunk in trimmed.split(',') {
            let chunk = chunk.trim();
            if chunk.is_empty() {
                return Err(SeqError::MalformedLine {
                    line: line_no,
                    reason: "empty token between separators".into(),
                });
            }
            row.extend(chunk.split_whitespace());
        }
        if row.len() > DEFAULT_MAX_LEN {
            return Err(SeqError::MalformedLine {
                line: line_no,
                reason: format!("{} states exceed the maximum of {DEFAULT_MAX_LEN}", row.len()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(SeqError::EmptyFile);
    }
    SequenceSet::from_tokens(name, &rows)
}

/// Length statistics, outlier count, cardinality and 1-/2-gram frequencies of a set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetDescriptor {
    pub min_len: usize,
    pub max_len: usize,
    pub median_len: f64,
    pub stdev_len: f64,
    pub outlier_count: usize,
    pub unique_count: usize,
    /// Keys are `"A"` for 1-grams and `"A>B"` for 2-grams.
    pub ngram_freqs: BTreeMap<String, f64>,
}

/// Names of the length-statistic descriptor columns, in CSV order.
pub const DESCRIPTOR_STAT_COLUMNS: [&str; 6] = [
    "min_len",
    "max_len",
    "median_len",
    "stdev_len",
    "outlier_count",
    "unique_count",
];

/// Separator between the two states of a 2-gram key.
pub const BIGRAM_SEP: char = '>';

impl SetDescriptor {
    pub fn stat_values(&self) -> [f64; 6] {
        [
            self.min_len as f64,
            self.max_len as f64,
            self.median_len,
            self.stdev_len,
            self.outlier_count as f64,
            self.unique_count as f64,
        ]
    }

    /// Frequency of an n-gram key; unseen keys read 0.
    pub fn ngram(&self, key: &str) -> f64 {
        self.ngram_freqs.get(key).copied().unwrap_or(0.0)
    }

    /// CSV header: stat columns then `ngram:<key>` columns in key order.
    pub fn csv_header(&self) -> Vec<String> {
        DESCRIPTOR_STAT_COLUMNS
            .iter()
            .map(|s| s.to_string())
            .chain(self.ngram_freqs.keys().map(|k| format!("ngram:{k}")))
            .collect()
    }

    pub fn csv_values(&self) -> Vec<f64> {
        self.stat_values()
            .into_iter()
            .chain(self.ngram_freqs.values().copied())
            .collect()
    }
}

/// Quantile by linear interpolation between closest ranks on sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn compute_descriptor(set: &SequenceSet) -> SetDescriptor {
    let mut lengths: Vec<f64> = set.sequences().iter().map(|s| s.len() as f64).collect();
    lengths.sort_by(f64::total_cmp);
    let n = lengths.len() as f64;

    let mean = lengths.iter().sum::<f64>() / n;
    let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / n;
    let q1 = quantile_sorted(&lengths, 0.25);
    let q3 = quantile_sorted(&lengths, 0.75);
    let iqr = q3 - q1;
    let (lo_fence, hi_fence) = (q1 - 1.5 * iqr, q3 + 1.5 * iqr);
    let outlier_count = lengths
        .iter()
        .filter(|&&l| l < lo_fence || l > hi_fence)
        .count();

    let unique_count = set.sequences().iter().collect::<HashSet<_>>().len();

    let alphabet = set.alphabet();
    let mut unigrams: BTreeMap<String, usize> = BTreeMap::new();
    let mut bigrams: BTreeMap<String, usize> = BTreeMap::new();
    for seq in set.sequences() {
        for &s in seq.states() {
            *unigrams
                .entry(alphabet.state(s).as_str().to_string())
                .or_default() += 1;
        }
        for w in seq.states().windows(2) {
            let key = format!(
                "{}{BIGRAM_SEP}{}",
                alphabet.state(w[0]),
                alphabet.state(w[1])
            );
            *bigrams.entry(key).or_default() += 1;
        }
    }
    let mut ngram_freqs = BTreeMap::new();
    for group in [unigrams, bigrams] {
        let total: usize = group.values().sum();
        for (k, c) in group {
            ngram_freqs.insert(k, c as f64 / total as f64);
        }
    }

    SetDescriptor {
        min_len: lengths[0] as usize,
        max_len: *lengths.last().unwrap() as usize,
        median_len: quantile_sorted(&lengths, 0.5),
        stdev_len: var.sqrt(),
        outlier_count,
        unique_count,
        ngram_freqs,
    }
}

/// Settings for [`generate_set`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub name: String,
    /// Templates as token lists; their union is the generated set's alphabet.
    pub templates: Vec<Vec<String>>,
    pub mutation_probability: f64,
    pub set_size: usize,
    pub seed: u64,
}

/// Produces a set of mutated copies of the given templates.
///
/// Each output sequence picks a template uniformly, then every template position
/// independently mutates with `mutation_probability`; a mutation is a substitution
/// by a different state, a deletion, or an insertion after the position, chosen
/// uniformly.
pub fn generate_set(cfg: &GeneratorConfig) -> Result<SequenceSet, SeqError> {
    if cfg.templates.is_empty() || cfg.templates.iter().any(|t| t.is_empty()) {
        return Err(SeqError::InvalidConfig("templates must be non-empty".into()));
    }
    if !(0.0..=1.0).contains(&cfg.mutation_probability) {
        return Err(SeqError::InvalidConfig(format!(
            "mutation probability {} outside [0, 1]",
            cfg.mutation_probability
        )));
    }
    if cfg.set_size == 0 {
        return Err(SeqError::InvalidConfig("set size must be at least 1".into()));
    }
    let tokens = cfg
        .templates
        .iter()
        .flatten()
        .map(State::new)
        .collect::<Result<Vec<_>, _>>()?;
    let alphabet = Alphabet::new(tokens);
    let templates: Vec<Vec<StateId>> = cfg
        .templates
        .iter()
        .map(|t| t.iter().map(|s| alphabet.id_of(s).unwrap()).collect())
        .collect();
    let ids: Vec<StateId> = alphabet.ids().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut sequences = Vec::with_capacity(cfg.set_size);
    for _ in 0..cfg.set_size {
        let mut failures = 0;
        loop {
            let template = templates.choose(&mut rng).unwrap();
            let mut out = Vec::with_capacity(template.len() + 2);
            for &s in template {
                if rng.gen::<f64>() < cfg.mutation_probability {
                    match rng.gen_range(0..3) {
                        0 => out.push(substitute(s, &ids, &mut rng)),
                        1 => {}
                        _ => {
                            out.push(s);
                            out.push(*ids.choose(&mut rng).unwrap());
                        }
                    }
                } else {
                    out.push(s);
                }
            }
            out.truncate(DEFAULT_MAX_LEN);
            if !out.is_empty() {
                sequences.push(StateSequence(out));
                break;
            }
            failures += 1;
            if failures >= MAX_REDRAWS {
                return Err(SeqError::DegenerateResult(failures));
            }
        }
    }
    SequenceSet::new(cfg.name.clone(), alphabet, sequences)
}

/// Uniform draw among the states other than `current` (or `current` itself for a
/// one-state alphabet).
fn substitute(current: StateId, ids: &[StateId], rng: &mut impl Rng) -> StateId {
    if ids.len() < 2 {
        return current;
    }
    let pick = ids[rng.gen_range(0..ids.len() - 1)];
    if pick >= current {
        ids[pick.0 as usize + 1]
    } else {
        pick
    }
}

/// Uniformly random sequences with lengths uniform in `min_len..=max_len`.
pub fn random_set(
    name: &str,
    alphabet: &[String],
    set_size: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> Result<SequenceSet, SeqError> {
    if alphabet.is_empty() || set_size == 0 || min_len == 0 || min_len > max_len {
        return Err(SeqError::InvalidConfig(
            "random set needs a non-empty alphabet, set size >= 1 and 1 <= min_len <= max_len"
                .into(),
        ));
    }
    if max_len > DEFAULT_MAX_LEN {
        return Err(SeqError::InvalidConfig(format!(
            "max_len {max_len} exceeds {DEFAULT_MAX_LEN}"
        )));
    }
    let alphabet = Alphabet::new(
        alphabet
            .iter()
            .map(State::new)
            .collect::<Result<Vec<_>, _>>()?,
    );
    let ids: Vec<StateId> = alphabet.ids().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sequences = (0..set_size)
        .map(|_| {
            let len = rng.gen_range(min_len..=max_len);
            StateSequence((0..len).map(|_| *ids.choose(&mut rng).unwrap()).collect())
        })
        .collect();
    SequenceSet::new(name, alphabet, sequences)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(rows: &[&[&str]]) -> SequenceSet {
        let rows: Vec<Vec<&str>> = rows.iter().map(|r| r.to_vec()).collect();
        SequenceSet::from_tokens("t", &rows).unwrap()
    }

    #[test]
    fn parses_commas() {
        let s = parse_sequence_file("x", "A,B\nA,C\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.alphabet().len(), 3);
        assert_eq!(s.to_file_string(), "A,B\nA,C\n");
    }

    #[test]
    fn parses_whitespace_and_skips_blank_lines() {
        let s = parse_sequence_file("x", "A B\n\nB A\n").unwrap();
        assert_eq!(s.to_file_string(), "A,B\nB,A\n");
    }

    #[test]
    fn empty_file() {
        assert_eq!(parse_sequence_file("x", ""), Err(SeqError::EmptyFile));
        assert_eq!(parse_sequence_file("x", "\n  \n"), Err(SeqError::EmptyFile));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_sequence_file("x", "A,B\nA,,C\n").unwrap_err();
        assert!(matches!(err, SeqError::MalformedLine { line: 2, .. }));
        let err = parse_sequence_file("x", "A,B,\n").unwrap_err();
        assert!(matches!(err, SeqError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn state_rejects_separators() {
        assert!(State::new("A B").is_err());
        assert!(State::new("A,B").is_err());
        assert!(State::new("").is_err());
        assert!(State::new("ICU").is_ok());
    }

    #[test]
    fn iqr_outliers() {
        let rows: Vec<Vec<&str>> = [1usize, 5, 5, 5, 5, 5, 5, 5, 5, 12]
            .iter()
            .map(|&l| vec!["A"; l])
            .collect();
        let d = compute_descriptor(&SequenceSet::from_tokens("t", &rows).unwrap());
        let mut sorted: Vec<f64> = vec![1., 5., 5., 5., 5., 5., 5., 5., 5., 12.];
        sorted.sort_by(f64::total_cmp);
        assert_eq!(quantile_sorted(&sorted, 0.25), 5.0);
        assert_eq!(quantile_sorted(&sorted, 0.75), 5.0);
        assert_eq!(d.outlier_count, 2);
        assert_eq!((d.min_len, d.max_len), (1, 12));
        assert_eq!(d.median_len, 5.0);
    }

    #[test]
    fn duplicate_pair() {
        let d = compute_descriptor(&set(&[&["A", "B"], &["A", "B"]]));
        assert_eq!(d.unique_count, 1);
        assert_eq!(d.ngram("A"), 0.5);
        assert_eq!(d.ngram("B"), 0.5);
        assert_eq!(d.ngram("A>B"), 1.0);
        assert_eq!(d.ngram("B>A"), 0.0);
    }

    #[test]
    fn singleton() {
        let d = compute_descriptor(&set(&[&["A"]]));
        assert_eq!((d.min_len, d.max_len), (1, 1));
        assert_eq!(d.median_len, 1.0);
        assert_eq!(d.stdev_len, 0.0);
        assert_eq!(d.outlier_count, 0);
        assert!(d.ngram_freqs.keys().all(|k| !k.contains(BIGRAM_SEP)));
    }

    #[test]
    fn stdev_is_population() {
        let d = compute_descriptor(&set(&[&["A"], &["A", "A", "A"]]));
        assert_eq!(d.stdev_len, 1.0);
    }

    #[test]
    fn csv_columns_are_stats_then_sorted_ngrams() {
        let d = compute_descriptor(&set(&[&["B", "A"], &["A"]]));
        assert_eq!(
            d.csv_header(),
            vec![
                "min_len",
                "max_len",
                "median_len",
                "stdev_len",
                "outlier_count",
                "unique_count",
                "ngram:A",
                "ngram:B",
                "ngram:B>A"
            ]
        );
        assert_eq!(d.csv_values().len(), 9);
    }

    fn cfg(p: f64, size: usize, seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            name: "g".into(),
            templates: vec![
                vec!["A".into(), "B".into(), "C".into()],
                vec!["D".into(), "E".into()],
            ],
            mutation_probability: p,
            set_size: size,
            seed,
        }
    }

    #[test]
    fn zero_mutation_reproduces_templates() {
        let s = generate_set(&cfg(0.0, 50, 3)).unwrap();
        for seq in s.sequences() {
            let r = s.alphabet().render(seq.states());
            assert!(r == "A,B,C" || r == "D,E", "{r}");
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(
            generate_set(&cfg(0.3, 40, 9)).unwrap(),
            generate_set(&cfg(0.3, 40, 9)).unwrap()
        );
        assert_ne!(
            generate_set(&cfg(0.3, 40, 9)).unwrap(),
            generate_set(&cfg(0.3, 40, 10)).unwrap()
        );
    }

    #[test]
    fn unchanged_fraction_matches_binomial_expectation() {
        let cfg = GeneratorConfig {
            name: "g".into(),
            templates: vec![vec!["A".into(), "B".into(), "C".into()]],
            mutation_probability: 0.5,
            set_size: 1000,
            seed: 42,
        };
        let s = generate_set(&cfg).unwrap();
        let template = s.alphabet().ids().collect::<Vec<_>>();
        let same = s
            .sequences()
            .iter()
            .filter(|q| q.states() == template.as_slice())
            .count() as f64
            / 1000.0;
        assert!((same - 0.125).abs() <= 0.04, "{same}");
    }

    #[test]
    fn random_set_bounds() {
        let alpha: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let s = random_set("r", &alpha, 30, 2, 5, 1).unwrap();
        assert_eq!(s.len(), 30);
        assert!(s.sequences().iter().all(|q| (2..=5).contains(&q.len())));
    }
}
