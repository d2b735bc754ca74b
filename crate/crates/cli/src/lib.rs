//! The `tdc` command line: synthesize sets, run and sweep template discovery,
//! train and evaluate surrogate models, recommend parameters, serve the HTTP API.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use tdc::align::transition_graph;
use tdc::cluster::{run_tdc, KRange};
use tdc::evotemplate::{GAParams, MutationProbability, StoppingConfig};
use tdc::harness::{
    build_grid, corpus_hash, read_samples, run_row, samples_to_csv, split_per_set, sweep, ParamRanges,
    SplitSpec, SweepOptions, TrainingSample, RUN_ROW_COLUMNS,
};
use tdc::recommend::{recommend, render_scatter, render_table, ObjectiveSpec};
use tdc::seqcore::{
    compute_descriptor, generate_set, parse_sequence_file, random_set, GeneratorConfig, SequenceSet,
};
use tdc::surrogate::{
    evaluate_families, feature_importance, render_mape_table, train_each, train_general, Family,
    ModelFile, SurrogateForest, Target, TargetTransform, TrainConfig,
};
use tdc_service::store::SessionStore;
use tdc_service::{AppState, LoadedModel, ServiceConfig};

#[derive(Debug, Parser)]
#[command(name = "tdc", version, about = "Template discovery for clinical pathways and surrogate parameter tuning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic sequence set.
    Generate(GenerateArgs),
    /// Print the descriptor of a sequence file.
    Describe(DescribeArgs),
    /// Run template discovery once and print its outcome row.
    Tdc(TdcArgs),
    /// Run template discovery over a parameter grid for each input set.
    Sweep(SweepArgs),
    /// Train a surrogate model family from sweep samples.
    Train(TrainArgs),
    /// Test MAPE of the model families on their held-out rows.
    Evaluate(EvaluateArgs),
    /// Rank features by importance for one target.
    Importance(ImportanceArgs),
    /// Predict outcomes over a parameter grid for a new set and flag the best.
    Recommend(RecommendArgs),
    /// Serve the HTTP API and the browser page.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Template as comma- or space-separated tokens; repeat for several.
    #[arg(long = "template")]
    pub templates: Vec<String>,
    /// Per-position mutation probability of the templates.
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Draw uniformly random sequences over these comma-separated tokens instead.
    #[arg(long, conflicts_with = "templates")]
    pub random_alphabet: Option<String>,
    /// Length range `min:max` of random sequences.
    #[arg(long, default_value = "2:8")]
    pub lengths: String,
    #[arg(long, default_value_t = 40)]
    pub size: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "generated")]
    pub name: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    pub file: PathBuf,
}

/// The five GA parameters; unset ones take their defaults.
#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    #[arg(long)]
    pub increment: Option<f64>,
    /// `p` for all three, or `sub,del,ins`.
    #[arg(long = "mutation-prob")]
    pub mutation_prob: Option<String>,
    #[arg(long)]
    pub mutation_number: Option<u32>,
    #[arg(long)]
    pub parent_fraction: Option<f64>,
    #[arg(long = "start-pop-factor")]
    pub start_pop_factor: Option<f64>,
}

impl ParamArgs {
    pub fn params(&self) -> Result<GAParams> {
        let d = GAParams::default();
        let p = GAParams {
            increment: self.increment.unwrap_or(d.increment),
            mutation_probability: match &self.mutation_prob {
                Some(s) => parse_mutation(s)?,
                None => d.mutation_probability,
            },
            mutation_number: self.mutation_number.unwrap_or(d.mutation_number),
            parent_fraction: self.parent_fraction.unwrap_or(d.parent_fraction),
            start_population_factor: self.start_pop_factor.unwrap_or(d.start_population_factor),
        };
        p.validate()?;
        Ok(p)
    }
}

fn parse_mutation(s: &str) -> Result<MutationProbability> {
    let v: Vec<f64> = s
        .split([',', '/'])
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("InvalidParams: bad mutation probability {s:?}"))?;
    match v[..] {
        [p] => Ok(MutationProbability::uniform(p)),
        [a, b, c] => Ok(MutationProbability::new(a, b, c)),
        _ => bail!("InvalidParams: mutation probability takes 1 or 3 values, got {s:?}"),
    }
}

#[derive(Debug, Clone, Args)]
pub struct StopArgs {
    /// Front-change threshold for stagnation.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Stagnant generations before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub max_generations: Option<usize>,
}

impl StopArgs {
    pub fn config(&self) -> StoppingConfig {
        let d = StoppingConfig::default();
        StoppingConfig {
            epsilon: self.epsilon.unwrap_or(d.epsilon),
            patience: self.patience.unwrap_or(d.patience),
            max_generations: self.max_generations.unwrap_or(d.max_generations),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Args)]
pub struct TdcArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub params: ParamArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    /// Candidate cluster counts `lo:hi`.
    #[arg(long, default_value = "2:8")]
    pub krange: KRange,
    /// Outcome row CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for one transition graph per cluster.
    #[arg(long)]
    pub graphs: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "dot")]
    pub graph_format: GraphFormat,
}

/// A parameter grid drawn from the default ranges.
#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Distinct values drawn per parameter; the grid is their product.
    #[arg(long, default_value_t = 3)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Seeds the grid draw and every run.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[command(flatten)]
    pub stop: StopArgs,
    #[arg(long, default_value = "2:8")]
    pub krange: KRange,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub progress: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Each,
    General,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Seeds the train/test split, the tuning split and the forests.
    #[arg(long)]
    pub seed: u64,
    /// Share of every set's rows used for training.
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    #[arg(long, default_value = "log1p")]
    pub transform: TargetTransform,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// Model files from `train`; one per family.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    /// Neighbours in the nearest-sets ensemble.
    #[arg(long, default_value_t = 3)]
    pub knn_k: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub target: Target,
    /// Show only the first N features of each model.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Sequence file of the new set.
    pub file: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated `target[:min|max]`.
    #[arg(long)]
    pub objectives: ObjectiveSpec,
    /// Seeds the grid draw.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Per-set models: average over the k nearest sets instead of all.
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Print only the nondominated rows.
    #[arg(long)]
    pub nondominated_only: bool,
    /// Append a `nondominated` column to the table.
    #[arg(long)]
    pub flag_column: bool,
    /// Table CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scatter CSV, written when there are exactly two objectives.
    #[arg(long)]
    pub scatter: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// Seeds the default candidate grid.
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = tdc_service::DEFAULT_STORE_CAPACITY)]
    pub store_capacity: usize,
    /// Largest accepted upload in bytes.
    #[arg(long, default_value_t = tdc_service::DEFAULT_UPLOAD_LIMIT)]
    pub upload_limit: usize,
    /// Serve this directory instead of the built-in page.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

/// Writes through a temporary file in the target directory and renames it into
/// place, so a failed command leaves no partial output.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("IoError: cannot write in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.persist(path)
        .map_err(|e| anyhow!("IoError: cannot write {}: {}", path.display(), e.error))?;
    Ok(())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("IoError: cannot read {}", path.display()))
}

fn read_set(path: &Path) -> Result<SequenceSet> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "set".into());
    Ok(parse_sequence_file(&name, &read_text(path)?)?)
}

fn read_corpus(path: &Path) -> Result<Vec<TrainingSample>> {
    let text = read_text(path)?;
    Ok(read_samples(text.as_bytes())?)
}

fn tokens(s: &str) -> Vec<String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn parse_lengths(s: &str) -> Result<(usize, usize)> {
    let bad = || anyhow!("InvalidConfig: expected min:max lengths, got {s:?}");
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

fn csv_line(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

fn grid_for(args: &GridArgs, seed: u64) -> Result<tdc::harness::ParamGrid> {
    Ok(build_grid(args.grid, &ParamRanges::default(), seed)?)
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let set = match &a.random_alphabet {
        Some(alphabet) => {
            let (lo, hi) = parse_lengths(&a.lengths)?;
            random_set(&a.name, &tokens(alphabet), a.size, lo, hi, a.seed)?
        }
        None => {
            if a.templates.is_empty() {
                bail!("InvalidConfig: give at least one --template or --random-alphabet");
            }
            generate_set(&GeneratorConfig {
                name: a.name.clone(),
                templates: a.templates.iter().map(|t| tokens(t)).collect(),
                mutation_probability: a.noise,
                set_size: a.size,
                seed: a.seed,
            })?
        }
    };
    emit(a.out.as_deref(), &set.to_file_string())
}

pub fn describe(a: &DescribeArgs) -> Result<()> {
    let set = read_set(&a.file)?;
    let d = compute_descriptor(&set);
    let mut out = String::from("field,value\n");
    out.push_str(&format!("sequences,{}\n", set.len()));
    out.push_str(&format!("min_len,{}\n", d.min_len));
    out.push_str(&format!("max_len,{}\n", d.max_len));
    out.push_str(&format!("median_len,{}\n", d.median_len));
    out.push_str(&format!("stdev_len,{}\n", d.stdev_len));
    out.push_str(&format!("outlier_count,{}\n", d.outlier_count));
    out.push_str(&format!("unique_count,{}\n", d.unique_count));
    for (k, v) in &d.ngram_freqs {
        out.push_str(&format!("ngram:{k},{v}\n"));
    }
    emit(None, &out)
}

pub fn tdc_once(a: &TdcArgs) -> Result<()> {
    let set = read_set(&a.file)?;
    let params = a.params.params()?;
    let run = run_tdc(&set, &params, a.krange, &a.stop.config(), a.seed)?;
    let alphabet = set.alphabet();
    eprintln!(
        "{} generations, {} front templates, {} clusters",
        run.generations,
        run.front.len(),
        run.outcome.num_clusters
    );
    if let Some(e) = &run.degenerate {
        eprintln!("warning: {e}");
    }
    for (i, (t, members)) in run.representatives.iter().zip(&run.clusters).enumerate() {
        eprintln!("cluster {i}: {} ({} sequences)", alphabet.render(&t.0), members.len());
    }
    if let Some(dir) = &a.graphs {
        std::fs::create_dir_all(dir).with_context(|| format!("IoError: cannot create {}", dir.display()))?;
        for (i, members) in run.clusters.iter().enumerate() {
            let g = transition_graph(members);
            let (text, ext) = match a.graph_format {
                GraphFormat::Dot => (g.to_dot(alphabet, &format!("cluster_{i}")), "dot"),
                GraphFormat::Json => (g.to_json(alphabet) + "\n", "json"),
            };
            write_atomic(&dir.join(format!("cluster_{i}.{ext}")), text.as_bytes())?;
        }
    }
    let mut out = csv_line(&RUN_ROW_COLUMNS.map(String::from));
    out.push_str(&csv_line(&run_row(&params, &run.outcome)));
    emit(a.out.as_deref(), &out)
}

pub fn sweep_sets(a: &SweepArgs) -> Result<()> {
    let grid = grid_for(&a.grid, a.seed)?;
    let stop = a.stop.config();
    let mut samples = Vec::new();
    let mut names = std::collections::BTreeSet::new();
    for file in &a.files {
        let set = read_set(file)?;
        if !names.insert(set.name().to_string()) {
            bail!("InvalidConfig: two input sets are named {:?}", set.name());
        }
        eprintln!("sweeping {} ({} grid points)", set.name(), grid.len());
        let options = SweepOptions {
            jobs: a.jobs,
            progress: a.progress,
        };
        samples.extend(sweep(&set, &grid, a.krange, &stop, a.seed, options)?);
    }
    write_atomic(&a.out, samples_to_csv(&samples)?.as_bytes())
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let samples = read_corpus(&a.samples)?;
    let split = SplitSpec {
        train_fraction: a.train_fraction,
        seed: a.seed,
    };
    let (train_rows, _) = split_per_set(&samples, split)?;
    let cfg = TrainConfig {
        seed: a.seed,
        transform: a.transform,
        ..TrainConfig::default()
    };
    let hash = corpus_hash(samples_to_csv(&samples)?.as_bytes());
    let file = match a.family {
        FamilyArg::Each => {
            let (sets, skipped) = train_each(&train_rows, &cfg)?;
            for s in &skipped {
                eprintln!("warning: {s}");
            }
            if sets.is_empty() {
                bail!("TooFewSamples: no set has enough samples for a per-set model");
            }
            ModelFile {
                family: Family::Each,
                corpus_hash: hash,
                split,
                general: None,
                sets,
            }
        }
        FamilyArg::General => ModelFile {
            family: Family::General,
            corpus_hash: hash,
            split,
            general: Some(train_general(&train_rows, &cfg)?),
            sets: Vec::new(),
        },
    };
    write_atomic(&a.out, file.to_text().as_bytes())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let samples = read_corpus(&a.samples)?;
    let hash = corpus_hash(samples_to_csv(&samples)?.as_bytes());
    let mut each = None;
    let mut general: Option<SurrogateForest> = None;
    let mut split: Option<SplitSpec> = None;
    for path in &a.models {
        let file = ModelFile::load(path)?;
        if file.corpus_hash != hash {
            bail!(
                "CorpusMismatch: {} was trained on another samples file",
                path.display()
            );
        }
        if split.is_some_and(|s| s != file.split) {
            bail!("CorpusMismatch: model files use different train/test splits");
        }
        split = Some(file.split);
        match file.family {
            Family::Each => each = Some(file.sets),
            Family::General => general = file.general,
        }
    }
    let split = split.expect("at least one model");
    let reports = evaluate_families(
        each.as_deref().unwrap_or(&[]),
        general.as_ref(),
        &samples,
        split,
        a.knn_k,
    )?;
    emit(a.out.as_deref(), &render_mape_table(&reports))
}

pub fn importance(a: &ImportanceArgs) -> Result<()> {
    let file = ModelFile::load(&a.model)?;
    let forests: Vec<(String, &SurrogateForest)> = match file.family {
        Family::General => file.general.iter().map(|g| ("general".to_string(), g)).collect(),
        Family::Each => file.sets.iter().map(|m| (m.name.clone(), &m.forest)).collect(),
    };
    let mut out = String::from("model,feature,importance\n");
    for (name, forest) in forests {
        let ranked = feature_importance(forest, a.target);
        for (feature, v) in ranked.iter().take(a.top.unwrap_or(usize::MAX)) {
            out.push_str(&format!("{name},{feature},{v:.6}\n"));
        }
    }
    emit(None, &out)
}

pub fn recommend_params(a: &RecommendArgs) -> Result<()> {
    let predictor = ModelFile::load(&a.model)?.into_predictor(a.knn_k)?;
    let grid = grid_for(&a.grid, a.seed)?;
    let text = read_text(&a.file)?;
    let name = a
        .file
        .file_stem()
        .map_or("set".into(), |s| s.to_string_lossy().into_owned());
    let rec = recommend(&name, &text, predictor.as_ref(), &grid, &a.objectives, !a.nondominated_only)?;
    let table = render_table(&rec.rows, a.flag_column);
    match (&rec.scatter, &a.scatter) {
        (Some(points), Some(path)) => write_atomic(path, render_scatter(&a.objectives, points).as_bytes())?,
        (None, Some(_)) => eprintln!("warning: scatter needs exactly two objectives; not written"),
        _ => {}
    }
    emit(a.out.as_deref(), &table)
}

pub fn serve(a: &ServeArgs) -> Result<()> {
    let model = match &a.model {
        Some(p) => Some(LoadedModel::load(p, a.knn_k)?),
        None => {
            eprintln!("warning: no --model given; recommendations answer 503");
            None
        }
    };
    let grid = grid_for(&a.grid, a.seed)?;
    let state = Arc::new(AppState::new(model, SessionStore::new(a.store_capacity), grid));
    let config = ServiceConfig {
        upload_limit: a.upload_limit,
        static_dir: a.static_dir.clone(),
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(tdc_service::serve(a.listen, state, config))?;
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Describe(a) => describe(a),
        Command::Tdc(a) => tdc_once(a),
        Command::Sweep(a) => sweep_sets(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Importance(a) => importance(a),
        Command::Recommend(a) => recommend_params(a),
        Command::Serve(a) => serve(a),
    }
}
