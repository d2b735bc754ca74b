//! Parameter grids, TDC sweeps and the training-sample CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cluster::{run_tdc, KRange, RunOutcome};
use crate::derive_seed;
use crate::evotemplate::{GAParams, MutationProbability, StoppingConfig};
use crate::seqcore::{compute_descriptor, SequenceSet, SetDescriptor, DESCRIPTOR_STAT_COLUMNS};

const MAX_DRAW_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("InvalidRange: {0}")]
    InvalidRange(String),
    #[error("TooFewSamples: {0}")]
    TooFewSamples(String),
    #[error("SchemaMismatch: column {column:?}: {reason}")]
    SchemaMismatch { column: String, reason: String },
    #[error("IoError: {0}")]
    Io(#[from] std::io::Error),
    #[error("IoError: {0}")]
    Csv(#[from] csv::Error),
    #[error("RunFailed: {0}")]
    Run(String),
}

/// Inclusive value ranges for the five GA parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRanges {
    pub increment: (f64, f64),
    /// Range of each of the three mutation probabilities.
    pub mutation_probability: (f64, f64),
    pub mutation_number: (u32, u32),
    pub parent_fraction: (f64, f64),
    pub start_population_factor: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        ParamRanges {
            increment: (1.0, 8.0),
            mutation_probability: (0.0, 0.4),
            mutation_number: (0, 6),
            parent_fraction: (0.05, 0.5),
            start_population_factor: (1.0, 3.0),
        }
    }
}

impl ParamRanges {
    fn validate(&self) -> Result<(), HarnessError> {
        let check = |name: &str, (lo, hi): (f64, f64), min: f64, max: f64| {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= min && hi <= max) {
                return Err(HarnessError::InvalidRange(format!(
                    "{name} range [{lo}, {hi}] must lie within [{min}, {max}]"
                )));
            }
            Ok(())
        };
        check("increment", self.increment, 1.0, f64::MAX)?;
        check("mutation_probability", self.mutation_probability, 0.0, 1.0)?;
        check("parent_fraction", self.parent_fraction, 0.0, 1.0)?;
        if self.parent_fraction.1 <= 0.0 {
            return Err(HarnessError::InvalidRange(
                "parent_fraction range must include values above 0".into(),
            ));
        }
        check(
            "start_population_factor",
            self.start_population_factor,
            f64::MIN_POSITIVE,
            f64::MAX,
        )?;
        if self.mutation_number.0 > self.mutation_number.1 {
            return Err(HarnessError::InvalidRange(format!(
                "mutation_number range {:?} is empty",
                self.mutation_number
            )));
        }
        Ok(())
    }
}

/// Candidate values per GA parameter; the grid is their Cartesian product.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub increment: Vec<f64>,
    pub mutation_probability: Vec<MutationProbability>,
    pub mutation_number: Vec<u32>,
    pub parent_fraction: Vec<f64>,
    pub start_population_factor: Vec<f64>,
}

impl ParamGrid {
    pub fn len(&self) -> usize {
        self.increment.len()
            * self.mutation_probability.len()
            * self.mutation_number.len()
            * self.parent_fraction.len()
            * self.start_population_factor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The `index`-th point in lexicographic order (increment varies slowest).
    pub fn point(&self, index: usize) -> GAParams {
        let mut rest = index;
        let mut take = |n: usize| {
            let i = rest % n;
            rest /= n;
            i
        };
        let f = take(self.start_population_factor.len());
        let p = take(self.parent_fraction.len());
        let m = take(self.mutation_number.len());
        let q = take(self.mutation_probability.len());
        let i = take(self.increment.len());
        GAParams {
            increment: self.increment[i],
            mutation_probability: self.mutation_probability[q],
            mutation_number: self.mutation_number[m],
            parent_fraction: self.parent_fraction[p],
            start_population_factor: self.start_population_factor[f],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = GAParams> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// A grid holding exactly one point.
    pub fn single(p: GAParams) -> Self {
        ParamGrid {
            increment: vec![p.increment],
            mutation_probability: vec![p.mutation_probability],
            mutation_number: vec![p.mutation_number],
            parent_fraction: vec![p.parent_fraction],
            start_population_factor: vec![p.start_population_factor],
        }
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn draw_distinct<T: PartialOrd + Clone>(
    name: &str,
    n: usize,
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> T,
) -> Result<Vec<T>, HarnessError> {
    let mut values: Vec<T> = Vec::with_capacity(n);
    let mut attempts = 0;
    while values.len() < n {
        let v = draw(rng);
        if !values.contains(&v) {
            values.push(v);
        }
        attempts += 1;
        if attempts > MAX_DRAW_ATTEMPTS {
            return Err(HarnessError::InvalidRange(format!(
                "cannot draw {n} distinct values for {name}"
            )));
        }
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(values)
}

/// Draws `values_per_param` distinct values per parameter, uniformly within
/// `ranges`. Continuous values are rounded to three decimals; a mutation-probability
/// triple whose sum exceeds 1 is rescaled to sum to 1.
pub fn build_grid(
    values_per_param: usize,
    ranges: &ParamRanges,
    seed: u64,
) -> Result<ParamGrid, HarnessError> {
    if values_per_param == 0 {
        return Err(HarnessError::InvalidRange(
            "values per parameter must be at least 1".into(),
        ));
    }
    ranges.validate()?;
    let n = values_per_param;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |(lo, hi): (f64, f64)| {
        move |rng: &mut ChaCha8Rng| {
            if lo == hi {
                lo
            } else {
                round3(rng.gen_range(lo..=hi))
            }
        }
    };
    let increment = draw_distinct("increment", n, &mut rng, uniform(ranges.increment))?;
    let component = uniform(ranges.mutation_probability);
    let mutation_probability = draw_distinct("mutation_probability", n, &mut rng, |rng| {
        let mut v = [component(rng), component(rng), component(rng)];
        let total: f64 = v.iter().sum();
        if total > 1.0 {
            for x in &mut v {
                *x /= total;
            }
        }
        v
    })?
    .into_iter()
    .map(|[s, d, i]| MutationProbability::new(s, d, i))
    .collect();
    let (mlo, mhi) = ranges.mutation_number;
    let mutation_number = draw_distinct("mutation_number", n, &mut rng, |rng| {
        rng.gen_range(mlo..=mhi)
    })?;
    let (plo, phi) = ranges.parent_fraction;
    let parent_fraction = draw_distinct("parent_fraction", n, &mut rng, |rng| {
        round3(rng.gen_range(plo..=phi)).max(0.001)
    })?;
    let start_population_factor = draw_distinct(
        "start_population_factor",
        n,
        &mut rng,
        uniform(ranges.start_population_factor),
    )?;
    Ok(ParamGrid {
        increment,
        mutation_probability,
        mutation_number,
        parent_fraction,
        start_population_factor,
    })
}

/// One TDC run as a supervised example: parameters and set descriptor in, outcome out.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub set_name: String,
    pub seed: u64,
    pub params: GAParams,
    pub descriptor: SetDescriptor,
    pub outcome: RunOutcome,
}

/// Column names of the seven flattened GA parameters.
pub const PARAM_COLUMNS: [&str; 7] = [
    "increment",
    "p_sub",
    "p_del",
    "p_ins",
    "mutation_number",
    "parent_fraction",
    "start_population_factor",
];

pub fn param_values(p: &GAParams) -> [f64; 7] {
    let m = p.mutation_probability;
    [
        p.increment,
        m.substitution,
        m.deletion,
        m.insertion,
        p.mutation_number as f64,
        p.parent_fraction,
        p.start_population_factor,
    ]
}

pub fn params_from_values(v: &[f64]) -> GAParams {
    GAParams {
        increment: v[0],
        mutation_probability: MutationProbability::new(v[1], v[2], v[3]),
        mutation_number: v[4].round() as u32,
        parent_fraction: v[5],
        start_population_factor: v[6],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
    /// Print one progress line per finished run on standard error.
    pub progress: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            jobs: 0,
            progress: false,
        }
    }
}

/// Runs TDC once per grid point. Run `i` uses `derive_seed(master_seed, i)`;
/// samples come back in grid order.
pub fn sweep(
    set: &SequenceSet,
    grid: &ParamGrid,
    krange: KRange,
    stop: &StoppingConfig,
    master_seed: u64,
    options: SweepOptions,
) -> Result<Vec<TrainingSample>, HarnessError> {
    let descriptor = compute_descriptor(set);
    let total = grid.len();
    let done = AtomicUsize::new(0);
    let run_one = |index: usize| -> Result<TrainingSample, HarnessError> {
        let params = grid.point(index);
        let seed = derive_seed(master_seed, index as u64);
        let run = run_tdc(set, &params, krange, stop, seed)
            .map_err(|e| HarnessError::Run(format!("grid point {index}: {e}")))?;
        let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
        if options.progress {
            eprintln!("sweep {}: {finished}/{total}", set.name());
        }
        Ok(TrainingSample {
            set_name: set.name().to_string(),
            seed,
            params,
            descriptor: descriptor.clone(),
            outcome: run.outcome,
        })
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| HarnessError::Run(e.to_string()))?;
    pool.install(|| (0..total).into_par_iter().map(run_one).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.7,
            seed: 0,
        }
    }
}

/// Shuffled index partition: the first `ceil(fraction * n)` (kept within
/// `1..n`) indices train.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>), HarnessError> {
    if n < 2 {
        return Err(HarnessError::TooFewSamples(format!(
            "need at least 2 samples to split, got {n}"
        )));
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(HarnessError::InvalidRange(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rand::seq::SliceRandom::shuffle(idx.as_mut_slice(), &mut rng);
    let n_train = ((spec.train_fraction * n as f64).ceil() as usize).clamp(1, n - 1);
    let test = idx.split_off(n_train);
    Ok((idx, test))
}

pub fn split<T: Clone>(samples: &[T], spec: SplitSpec) -> Result<(Vec<T>, Vec<T>), HarnessError> {
    let (train, test) = split_indices(samples.len(), spec)?;
    Ok((
        train.iter().map(|&i| samples[i].clone()).collect(),
        test.iter().map(|&i| samples[i].clone()).collect(),
    ))
}

/// Groups samples by set name, keeping their relative order.
pub fn by_set(samples: &[TrainingSample]) -> BTreeMap<String, Vec<TrainingSample>> {
    let mut out: BTreeMap<String, Vec<TrainingSample>> = BTreeMap::new();
    for s in samples {
        out.entry(s.set_name.clone()).or_default().push(s.clone());
    }
    out
}

/// Splits every set separately and concatenates the parts (sets in name order).
pub fn split_per_set(
    samples: &[TrainingSample],
    spec: SplitSpec,
) -> Result<(Vec<TrainingSample>, Vec<TrainingSample>), HarnessError> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (_, rows) in by_set(samples) {
        let (a, b) = split(&rows, spec)?;
        train.extend(a);
        test.extend(b);
    }
    Ok((train, test))
}

const NGRAM_PREFIX: &str = "ngram:";
const HEAD_COLUMNS: [&str; 2] = ["set_name", "seed"];

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes samples as CSV. N-gram columns are the sorted union over all samples;
/// absent n-grams are written as 0.
pub fn write_samples<W: Write>(samples: &[TrainingSample], out: W) -> Result<(), HarnessError> {
    let vocab: BTreeSet<&String> = samples
        .iter()
        .flat_map(|s| s.descriptor.ngram_freqs.keys())
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let header: Vec<String> = HEAD_COLUMNS
        .iter()
        .chain(PARAM_COLUMNS.iter())
        .chain(DESCRIPTOR_STAT_COLUMNS.iter())
        .map(|s| s.to_string())
        .chain(vocab.iter().map(|k| format!("{NGRAM_PREFIX}{k}")))
        .chain(RunOutcome::FIELDS.iter().map(|s| s.to_string()))
        .collect();
    w.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.set_name.clone(), s.seed.to_string()];
        row.extend(param_values(&s.params).iter().map(|&x| fmt_f64(x)));
        row.extend(s.descriptor.stat_values().iter().map(|&x| fmt_f64(x)));
        row.extend(vocab.iter().map(|k| fmt_f64(s.descriptor.ngram(k))));
        row.extend(s.outcome.values().iter().map(|&x| fmt_f64(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn samples_to_csv(samples: &[TrainingSample]) -> Result<String, HarnessError> {
    let mut buf = Vec::new();
    write_samples(samples, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn persist(samples: &[TrainingSample], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path)?;
    write_samples(samples, std::io::BufWriter::new(file))
}

fn schema_err(column: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::SchemaMismatch {
        column: column.to_string(),
        reason: reason.into(),
    }
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<TrainingSample>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|s| s.to_string()).collect();

    let fixed: Vec<&str> = HEAD_COLUMNS
        .iter()
        .chain(PARAM_COLUMNS.iter())
        .chain(DESCRIPTOR_STAT_COLUMNS.iter())
        .copied()
        .collect();
    for (i, want) in fixed.iter().enumerate() {
        match header.get(i) {
            Some(got) if got == want => {}
            Some(got) => return Err(schema_err(got, format!("expected {want:?} at position {i}"))),
            None => return Err(schema_err(want, "missing")),
        }
    }
    let tail = header.len().saturating_sub(RunOutcome::FIELDS.len());
    if tail < fixed.len() {
        return Err(schema_err(RunOutcome::FIELDS[0], "missing outcome columns"));
    }
    for (got, want) in header[tail..].iter().zip(RunOutcome::FIELDS) {
        if got != want {
            return Err(schema_err(got, format!("expected outcome column {want:?}")));
        }
    }
    let mut vocab = Vec::new();
    for col in &header[fixed.len()..tail] {
        match col.strip_prefix(NGRAM_PREFIX) {
            Some(key) if !key.is_empty() => vocab.push(key.to_string()),
            _ => return Err(schema_err(col, "unknown column")),
        }
    }

    let mut samples = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(schema_err(
                "*",
                format!("row {} has {} fields, expected {}", line + 2, record.len(), header.len()),
            ));
        }
        let num = |i: usize| -> Result<f64, HarnessError> {
            record[i]
                .parse::<f64>()
                .map_err(|_| schema_err(&header[i], format!("row {}: not a number: {:?}", line + 2, &record[i])))
        };
        let seed = record[1]
            .parse::<u64>()
            .map_err(|_| schema_err("seed", format!("row {}: not an integer", line + 2)))?;
        let p: Vec<f64> = (2..9).map(num).collect::<Result<_, _>>()?;
        let st: Vec<f64> = (9..15).map(num).collect::<Result<_, _>>()?;
        let mut ngram_freqs = BTreeMap::new();
        for (j, key) in vocab.iter().enumerate() {
            let v = num(15 + j)?;
            if v != 0.0 {
                ngram_freqs.insert(key.clone(), v);
            }
        }
        let o: Vec<f64> = (tail..header.len()).map(num).collect::<Result<_, _>>()?;
        samples.push(TrainingSample {
            set_name: record[0].to_string(),
            seed,
            params: params_from_values(&p),
            descriptor: SetDescriptor {
                min_len: st[0] as usize,
                max_len: st[1] as usize,
                median_len: st[2],
                stdev_len: st[3],
                outlier_count: st[4] as usize,
                unique_count: st[5] as usize,
                ngram_freqs,
            },
            outcome: RunOutcome::from_values([o[0], o[1], o[2], o[3], o[4]]),
        });
    }
    Ok(samples)
}

pub fn load(path: &Path) -> Result<Vec<TrainingSample>, HarnessError> {
    read_samples(std::fs::File::open(path)?)
}

/// Hex SHA-256 of a corpus file's bytes.
pub fn corpus_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Formats a mutation-probability triple as a single `p_sub/p_del/p_ins` field.
pub fn format_mutation_probability(m: &MutationProbability) -> String {
    format!("{}/{}/{}", m.substitution, m.deletion, m.insertion)
}

/// Header of a single-run outcome row: the five GA parameters, then the outcomes.
pub const RUN_ROW_COLUMNS: [&str; 10] = [
    "increment",
    "mutation_probability",
    "mutation_number",
    "parent_fraction",
    "start_population_factor",
    "elapsed_seconds",
    "num_clusters",
    "chi",
    "dbi",
    "non_clustered",
];

pub fn run_row(params: &GAParams, outcome: &RunOutcome) -> Vec<String> {
    vec![
        fmt_f64(params.increment),
        format_mutation_probability(&params.mutation_probability),
        params.mutation_number.to_string(),
        fmt_f64(params.parent_fraction),
        fmt_f64(params.start_population_factor),
        fmt_f64(outcome.elapsed_seconds),
        outcome.num_clusters.to_string(),
        fmt_f64(outcome.chi),
        fmt_f64(outcome.dbi),
        outcome.non_clustered.to_string(),
    ]
}
