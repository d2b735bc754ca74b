//! Edit distance, template fitting and cluster transition graphs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::seqcore::{Alphabet, SequenceSet, StateId, StateSequence};

/// A candidate common supersequence for a group of sequences.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Template(pub Vec<StateId>);

impl Template {
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

impl From<&StateSequence> for Template {
    fn from(s: &StateSequence) -> Self {
        Template(s.states().to_vec())
    }
}

/// Levenshtein distance with unit costs, using a single row of working memory
/// sized by the shorter input.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, x) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[short.len()]
}

/// True iff `seq` is a (not necessarily contiguous) subsequence of `template`.
pub fn is_subsequence<T: PartialEq>(seq: &[T], template: &[T]) -> bool {
    if seq.len() > template.len() {
        return false;
    }
    let mut it = template.iter();
    seq.iter().all(|s| it.any(|t| t == s))
}

pub fn fits(seq: &StateSequence, template: &Template) -> bool {
    is_subsequence(seq.states(), template.states())
}

/// Number of sequences in `set`, counted with multiplicity, that fit `template`.
pub fn aligning_number(set: &SequenceSet, template: &Template) -> usize {
    set.sequences()
        .iter()
        .filter(|s| fits(s, template))
        .count()
}

/// Directed transition counts between adjacent states of a cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionGraph {
    /// Sorted by descending count, then by `(from, to)`.
    pub edges: Vec<(StateId, StateId, usize)>,
}

pub fn transition_graph(cluster: &[StateSequence]) -> TransitionGraph {
    let mut counts: BTreeMap<(StateId, StateId), usize> = BTreeMap::new();
    for seq in cluster {
        for w in seq.states().windows(2) {
            *counts.entry((w[0], w[1])).or_default() += 1;
        }
    }
    let mut edges: Vec<_> = counts.into_iter().map(|((a, b), c)| (a, b, c)).collect();
    edges.sort_by(|x, y| y.2.cmp(&x.2).then((x.0, x.1).cmp(&(y.0, y.1))));
    TransitionGraph { edges }
}

impl TransitionGraph {
    /// Graphviz rendering; node labels are state tokens.
    pub fn to_dot(&self, alphabet: &Alphabet, name: &str) -> String {
        let mut out = format!("digraph \"{}\" {{\n", escape(name));
        for (a, b, c) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{c}\", weight={c}];",
                escape(alphabet.state(*a).as_str()),
                escape(alphabet.state(*b).as_str())
            );
        }
        out.push_str("}\n");
        out
    }

    /// JSON array of `{"from":..,"to":..,"count":..}` records.
    pub fn to_json(&self, alphabet: &Alphabet) -> String {
        let items: Vec<String> = self
            .edges
            .iter()
            .map(|(a, b, c)| {
                format!(
                    "{{\"from\":\"{}\",\"to\":\"{}\",\"count\":{c}}}",
                    escape(alphabet.state(*a).as_str()),
                    escape(alphabet.state(*b).as_str())
                )
            })
            .collect();
        format!("[{}]", items.join(","))
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
