//! Line-oriented model file.
//!
//! ```text
//! tdc-surrogate-model 1
//! family general|each
//! corpus <sha256 of the training CSV>
//! split <train_fraction> <seed>
//! models <count>
//! model <name>
//! descriptor <min> <max> <median> <stdev> <outliers> <unique> <key>=<freq>...  | descriptor -
//! schema pe_only|pe_plus_ps <vocab key>...
//! transform identity|log1p
//! forest <target> <n_trees> <max_depth> <min_samples_split> <feature_fraction> <seed>
//! importance <score>...
//! tree <n_nodes> (L <value> | S <feature> <threshold> <right>)...
//! end
//! ```
//!
//! Floats are written in shortest round-trip form, so load(save(m)) == m.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::{FromStr, SplitWhitespace};

use super::models::{AverageEnsemble, KnnEnsemble, OutcomePredictor, SetModel};
use super::tree::{Node, RegressionTree};
use super::{
    FeatureSchema, Forest, ForestHyperparams, SchemaKind, SurrogateError, SurrogateForest, Target,
    TargetTransform, TARGETS,
};
use crate::harness::SplitSpec;
use crate::seqcore::SetDescriptor;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "tdc-surrogate-model";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Each,
    General,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Each => "each",
            Family::General => "general",
        }
    }
}

impl FromStr for Family {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "each" => Ok(Family::Each),
            "general" => Ok(Family::General),
            other => Err(SurrogateError::Format(format!("unknown family {other:?}"))),
        }
    }
}

/// A trained model family plus the provenance needed to re-evaluate it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub family: Family,
    pub corpus_hash: String,
    /// The per-set train/test split applied before training.
    pub split: SplitSpec,
    /// Set when `family` is general.
    pub general: Option<SurrogateForest>,
    /// Per-set models when `family` is each.
    pub sets: Vec<SetModel>,
}

impl ModelFile {
    /// Predictor for this file: the general forest, or an ensemble over the per-set
    /// models (`knn_k = Some(k)` for the nearest-sets ensemble, `None` for the average).
    pub fn into_predictor(
        self,
        knn_k: Option<usize>,
    ) -> Result<Box<dyn OutcomePredictor>, SurrogateError> {
        match self.family {
            Family::General => Ok(Box::new(self.general.ok_or(SurrogateError::NoModels)?)),
            Family::Each => {
                if self.sets.is_empty() {
                    return Err(SurrogateError::NoModels);
                }
                Ok(match knn_k {
                    Some(k) => {
                        if k == 0 || k > self.sets.len() {
                            return Err(SurrogateError::InvalidK {
                                k,
                                n: self.sets.len(),
                            });
                        }
                        Box::new(KnnEnsemble {
                            members: self.sets,
                            k,
                        })
                    }
                    None => Box::new(AverageEnsemble { members: self.sets }),
                })
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {FORMAT_VERSION}");
        let _ = writeln!(out, "family {}", self.family.name());
        let _ = writeln!(out, "corpus {}", self.corpus_hash);
        let _ = writeln!(out, "split {} {}", self.split.train_fraction, self.split.seed);
        let members: Vec<(&str, Option<&SetDescriptor>, &SurrogateForest)> = match &self.general {
            Some(g) => vec![("general", None, g)],
            None => Vec::new(),
        }
        .into_iter()
        .chain(
            self.sets
                .iter()
                .map(|m| (m.name.as_str(), Some(&m.descriptor), &m.forest)),
        )
        .collect();
        let _ = writeln!(out, "models {}", members.len());
        for (name, descriptor, forest) in members {
            let _ = writeln!(out, "model {name}");
            match descriptor {
                None => out.push_str("descriptor -\n"),
                Some(d) => {
                    let _ = write!(
                        out,
                        "descriptor {} {} {} {} {} {}",
                        d.min_len, d.max_len, d.median_len, d.stdev_len, d.outlier_count, d.unique_count
                    );
                    for (k, v) in &d.ngram_freqs {
                        let _ = write!(out, " {k}={v}");
                    }
                    out.push('\n');
                }
            }
            write_forest(&mut out, forest);
            out.push_str("end\n");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SurrogateError> {
        let mut lines = Lines::new(text);
        let mut head = lines.expect(MAGIC)?;
        let version: u32 = parse(head.next(), "version")?;
        if version != FORMAT_VERSION {
            return Err(SurrogateError::Format(format!(
                "unsupported model format version {version}"
            )));
        }
        let family: Family = parse(lines.expect("family")?.next(), "family")?;
        let corpus_hash = lines.expect("corpus")?.next().unwrap_or("").to_string();
        let mut sp = lines.expect("split")?;
        let split = SplitSpec {
            train_fraction: parse(sp.next(), "train fraction")?,
            seed: parse(sp.next(), "split seed")?,
        };
        let count: usize = parse(lines.expect("models")?.next(), "model count")?;
        let mut general = None;
        let mut sets = Vec::new();
        for _ in 0..count {
            let name = lines.rest_of("model")?;
            let descriptor = read_descriptor(lines.expect("descriptor")?)?;
            let forest = read_forest(&mut lines)?;
            lines.expect("end")?;
            match (family, descriptor) {
                (Family::General, None) => general = Some(forest),
                (Family::Each, Some(descriptor)) => sets.push(SetModel {
                    name,
                    descriptor,
                    forest,
                }),
                _ => {
                    return Err(SurrogateError::Format(format!(
                        "model {name:?} does not match family {}",
                        family.name()
                    )))
                }
            }
        }
        Ok(ModelFile {
            family,
            corpus_hash,
            split,
            general,
            sets,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), SurrogateError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SurrogateError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn write_forest(out: &mut String, f: &SurrogateForest) {
    let _ = write!(out, "schema {}", f.schema.kind.name());
    for k in &f.schema.vocab {
        let _ = write!(out, " {k}");
    }
    out.push('\n');
    let _ = writeln!(out, "transform {}", f.transform.name());
    for (t, forest) in TARGETS.iter().zip(&f.forests) {
        let h = &forest.hyper;
        let _ = writeln!(
            out,
            "forest {} {} {} {} {} {}",
            t.name(),
            h.n_trees,
            h.max_depth,
            h.min_samples_split,
            h.feature_fraction,
            h.seed
        );
        out.push_str("importance");
        for v in &forest.importance {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
        for tree in &forest.trees {
            let _ = write!(out, "tree {}", tree.nodes().len());
            for n in tree.nodes() {
                match n {
                    Node::Leaf { value } => {
                        let _ = write!(out, " L {value}");
                    }
                    Node::Split {
                        feature,
                        threshold,
                        right,
                    } => {
                        let _ = write!(out, " S {feature} {threshold} {right}");
                    }
                }
            }
            out.push('\n');
        }
    }
}

fn read_forest(lines: &mut Lines<'_>) -> Result<SurrogateForest, SurrogateError> {
    let mut s = lines.expect("schema")?;
    let kind = match s.next() {
        Some("pe_only") => SchemaKind::PeOnly,
        Some("pe_plus_ps") => SchemaKind::PePlusPs,
        other => return Err(SurrogateError::Format(format!("unknown schema {other:?}"))),
    };
    let vocab: Vec<String> = s.map(str::to_string).collect();
    let schema = FeatureSchema { kind, vocab };
    let transform: TargetTransform = parse(lines.expect("transform")?.next(), "transform")?;
    let width = schema.width();
    let mut forests = Vec::new();
    for expected in TARGETS {
        let mut f = lines.expect("forest")?;
        let target: Target = f
            .next()
            .unwrap_or("")
            .parse()
            .map_err(|e: SurrogateError| SurrogateError::Format(e.to_string()))?;
        if target != expected {
            return Err(SurrogateError::Format(format!(
                "forest for {target} where {expected} was expected"
            )));
        }
        let hyper = ForestHyperparams {
            n_trees: parse(f.next(), "n_trees")?,
            max_depth: parse(f.next(), "max_depth")?,
            min_samples_split: parse(f.next(), "min_samples_split")?,
            feature_fraction: parse(f.next(), "feature_fraction")?,
            seed: parse(f.next(), "seed")?,
        };
        hyper
            .validate()
            .map_err(|e| SurrogateError::Format(e.to_string()))?;
        let n_trees = hyper.n_trees;
        let importance = lines
            .expect("importance")?
            .map(|v| parse(Some(v), "importance"))
            .collect::<Result<Vec<f64>, _>>()?;
        if importance.len() != width {
            return Err(SurrogateError::Format(format!(
                "{} importance scores for {width} features",
                importance.len()
            )));
        }
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let mut t = lines.expect("tree")?;
            let n: usize = parse(t.next(), "node count")?;
            let mut nodes = Vec::with_capacity(n);
            for _ in 0..n {
                nodes.push(match t.next() {
                    Some("L") => Node::Leaf {
                        value: parse(t.next(), "leaf value")?,
                    },
                    Some("S") => {
                        let feature: usize = parse(t.next(), "feature")?;
                        if feature >= width {
                            return Err(SurrogateError::Format(format!(
                                "feature {feature} outside schema of width {width}"
                            )));
                        }
                        Node::Split {
                            feature,
                            threshold: parse(t.next(), "threshold")?,
                            right: parse(t.next(), "right child")?,
                        }
                    }
                    other => {
                        return Err(SurrogateError::Format(format!("bad node tag {other:?}")))
                    }
                });
            }
            trees.push(RegressionTree::from_nodes(nodes)?);
        }
        forests.push(Forest {
            hyper,
            trees,
            importance,
        });
    }
    Ok(SurrogateForest {
        schema,
        transform,
        forests,
    })
}

fn read_descriptor(mut it: SplitWhitespace<'_>) -> Result<Option<SetDescriptor>, SurrogateError> {
    let first = it.next();
    if first == Some("-") {
        return Ok(None);
    }
    let min_len = parse(first, "min_len")?;
    let max_len = parse(it.next(), "max_len")?;
    let median_len = parse(it.next(), "median_len")?;
    let stdev_len = parse(it.next(), "stdev_len")?;
    let outlier_count = parse(it.next(), "outlier_count")?;
    let unique_count = parse(it.next(), "unique_count")?;
    let mut ngram_freqs = BTreeMap::new();
    for kv in it {
        let (k, v) = kv
            .rsplit_once('=')
            .ok_or_else(|| SurrogateError::Format(format!("bad n-gram entry {kv:?}")))?;
        ngram_freqs.insert(k.to_string(), parse(Some(v), "n-gram frequency")?);
    }
    Ok(Some(SetDescriptor {
        min_len,
        max_len,
        median_len,
        stdev_len,
        outlier_count,
        unique_count,
        ngram_freqs,
    }))
}

fn parse<T: FromStr>(token: Option<&str>, what: &str) -> Result<T, SurrogateError> {
    let token = token.ok_or_else(|| SurrogateError::Format(format!("missing {what}")))?;
    token
        .parse()
        .map_err(|_| SurrogateError::Format(format!("bad {what}: {token:?}")))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
        }
    }

    fn next_line(&mut self, keyword: &str) -> Result<(usize, &'a str), SurrogateError> {
        self.inner
            .next()
            .ok_or_else(|| SurrogateError::Format(format!("unexpected end of file, wanted {keyword:?}")))
    }

    /// Next line, which must start with `keyword`; returns the remaining tokens.
    fn expect(&mut self, keyword: &str) -> Result<SplitWhitespace<'a>, SurrogateError> {
        let (no, line) = self.next_line(keyword)?;
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some(keyword) {
            return Err(SurrogateError::Format(format!(
                "line {}: expected {keyword:?}",
                no + 1
            )));
        }
        Ok(tokens)
    }

    fn rest_of(&mut self, keyword: &str) -> Result<String, SurrogateError> {
        let (no, line) = self.next_line(keyword)?;
        line.strip_prefix(keyword)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .ok_or_else(|| SurrogateError::Format(format!("line {}: expected {keyword:?}", no + 1)))
    }
}
