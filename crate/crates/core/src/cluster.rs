//! Template clustering and the full template-discovery-and-clustering pipeline.
//!
//! Strings have no mean, so the "centers" of the template clustering are medoids
//! under Levenshtein distance (k-medoids with alternating assign/update steps).
//! The validity indices follow suit: the Calinski-Harabasz index uses squared
//! edit distances to medoids, the Davies-Bouldin index plain edit distances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::align::{aligning_number, fits, levenshtein, Template};
use crate::evotemplate::{run_ga, GAParams, GaError, StoppingConfig};
use crate::seqcore::{SequenceSet, StateSequence};

/// CHI value reported when the within-cluster dispersion is zero.
pub const CHI_SENTINEL_MAX: f64 = 1e6;
/// DBI value reported for degenerate runs (no clustering possible).
pub const DBI_SENTINEL: f64 = 0.0;

const MAX_ROUNDS: usize = 100;
/// Seeded initializations per k-medoids call; the lowest final cost wins.
const RESTARTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("InvalidK: k = {k} with {distinct} distinct items")]
    InvalidK { k: usize, distinct: usize },
    #[error("DegenerateClustering: {0}")]
    DegenerateClustering(String),
    #[error("CoincidentMedoids: medoids {0} and {1} are identical")]
    CoincidentMedoids(usize, usize),
    #[error("InvalidKRange: {0}")]
    InvalidKRange(String),
    #[error("FrontTooSmall: {front} distinct templates, krange starts at {min_k}")]
    FrontTooSmall { front: usize, min_k: usize },
    #[error(transparent)]
    Ga(#[from] GaError),
}

/// Pairwise Levenshtein distances between templates.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(items: &[Template]) -> Self {
        let n = items.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = levenshtein(items[i].states(), items[j].states()) as f64;
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        DistanceMatrix { n, d }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Indices into the clustered items.
    pub medoids: Vec<usize>,
    /// `assignment[item] = cluster index`.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Total within-cluster distance after each assign step.
    pub cost_history: Vec<f64>,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter(move |(_, &c)| c == cluster)
            .map(|(i, _)| i)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignment {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn medoid_templates(&self, items: &[Template]) -> Vec<Template> {
        self.medoids.iter().map(|&m| items[m].clone()).collect()
    }

    /// Total distance of items to their medoids after the last assignment.
    pub fn final_cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(0.0)
    }
}

fn distinct_count(items: &[Template]) -> usize {
    let mut v: Vec<&Template> = items.iter().collect();
    v.sort();
    v.dedup();
    v.len()
}

/// Nearest medoid per item (ties to the lower medoid index) and the total cost.
fn assign(dm: &DistanceMatrix, medoids: &[usize]) -> (Vec<usize>, f64) {
    let mut total = 0.0;
    let assignment = (0..dm.len())
        .map(|i| {
            let (best, dist) = medoids
                .iter()
                .enumerate()
                .map(|(c, &m)| (c, dm.get(i, m)))
                .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            total += dist;
            best
        })
        .collect();
    (assignment, total)
}

/// k-means++ style seeding: first medoid uniform, then proportional to squared
/// distance from the nearest chosen medoid.
fn seed_medoids(dm: &DistanceMatrix, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let n = dm.len();
    let mut medoids = vec![rng.gen_range(0..n)];
    while medoids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| {
                medoids
                    .iter()
                    .map(|&m| dm.get(i, m))
                    .fold(f64::INFINITY, f64::min)
                    .powi(2)
            })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.gen::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        medoids.push(pick.expect("k <= distinct items leaves positive weight"));
    }
    medoids
}

pub fn kmedoids(items: &[Template], k: usize, seed: u64) -> Result<Clustering, ClusterError> {
    kmedoids_with_matrix(&DistanceMatrix::new(items), items, k, seed)
}

pub fn kmedoids_with_matrix(
    dm: &DistanceMatrix,
    items: &[Template],
    k: usize,
    seed: u64,
) -> Result<Clustering, ClusterError> {
    let distinct = distinct_count(items);
    if k == 0 || k > distinct {
        return Err(ClusterError::InvalidK { k, distinct });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Clustering> = None;
    for _ in 0..RESTARTS {
        let run = alternate(dm, seed_medoids(dm, k, &mut rng), k);
        let better = match &best {
            None => true,
            Some(b) => run.final_cost() < b.final_cost(),
        };
        if better {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Assign/update alternation from the given initial medoids.
fn alternate(dm: &DistanceMatrix, mut medoids: Vec<usize>, k: usize) -> Clustering {
    let mut cost_history = Vec::new();
    let mut assignment;
    let mut rounds = 0;
    loop {
        let (a, cost) = assign(dm, &medoids);
        assignment = a;
        cost_history.push(cost);
        rounds += 1;
        let mut updated = medoids.clone();
        for (c, slot) in updated.iter_mut().enumerate() {
            let members: Vec<usize> = (0..dm.len()).filter(|&i| assignment[i] == c).collect();
            let current_cost: f64 = members.iter().map(|&j| dm.get(*slot, j)).sum();
            let (best, best_cost) = members
                .iter()
                .map(|&i| (i, members.iter().map(|&j| dm.get(i, j)).sum::<f64>()))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            if best_cost < current_cost {
                *slot = best;
            }
        }
        if updated == medoids || rounds >= MAX_ROUNDS {
            break;
        }
        medoids = updated;
    }
    Clustering {
        medoids,
        assignment,
        k,
        cost_history,
    }
}

/// Index of the item minimizing summed distance to all items (lowest index on ties).
fn one_medoid(dm: &DistanceMatrix) -> usize {
    (0..dm.len())
        .map(|i| (i, (0..dm.len()).map(|j| dm.get(i, j)).sum::<f64>()))
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
        .0
}

pub fn chi(items: &[Template], clustering: &Clustering) -> Result<f64, ClusterError> {
    chi_with_matrix(&DistanceMatrix::new(items), clustering)
}

pub fn chi_with_matrix(dm: &DistanceMatrix, clustering: &Clustering) -> Result<f64, ClusterError> {
    let (n, k) = (dm.len(), clustering.k);
    if k < 2 || n <= k {
        return Err(ClusterError::DegenerateClustering(format!(
            "CHI needs k >= 2 and n > k (k = {k}, n = {n})"
        )));
    }
    let global = one_medoid(dm);
    let sizes = clustering.sizes();
    let between: f64 = clustering
        .medoids
        .iter()
        .zip(&sizes)
        .map(|(&m, &size)| size as f64 * dm.get(m, global).powi(2))
        .sum::<f64>()
        / (k - 1) as f64;
    let within: f64 = (0..n)
        .map(|i| dm.get(i, clustering.medoids[clustering.assignment[i]]).powi(2))
        .sum::<f64>()
        / (n - k) as f64;
    if within == 0.0 {
        return Ok(CHI_SENTINEL_MAX);
    }
    Ok(between / within)
}

pub fn dbi(items: &[Template], clustering: &Clustering) -> Result<f64, ClusterError> {
    dbi_with_matrix(&DistanceMatrix::new(items), clustering)
}

pub fn dbi_with_matrix(dm: &DistanceMatrix, clustering: &Clustering) -> Result<f64, ClusterError> {
    let k = clustering.k;
    if k < 2 {
        return Err(ClusterError::DegenerateClustering(format!(
            "DBI needs k >= 2 (k = {k})"
        )));
    }
    let scatter: Vec<f64> = (0..k)
        .map(|c| {
            let m = clustering.medoids[c];
            let (sum, count) = clustering
                .members(c)
                .fold((0.0, 0usize), |(s, n), i| (s + dm.get(i, m), n + 1));
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = dm.get(clustering.medoids[i], clustering.medoids[j]);
            if sep == 0.0 {
                return Err(ClusterError::CoincidentMedoids(i.min(j), i.max(j)));
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// Inclusive range of candidate cluster counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KRange {
    pub lo: usize,
    pub hi: usize,
}

impl KRange {
    pub fn new(lo: usize, hi: usize) -> Result<Self, ClusterError> {
        if lo < 2 || hi < lo {
            return Err(ClusterError::InvalidKRange(format!(
                "{lo}:{hi} must satisfy 2 <= lo <= hi"
            )));
        }
        Ok(KRange { lo, hi })
    }
}

impl Default for KRange {
    fn default() -> Self {
        KRange { lo: 2, hi: 8 }
    }
}

impl std::str::FromStr for KRange {
    type Err = ClusterError;

    /// Parses `lo:hi`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ClusterError::InvalidKRange(format!("expected lo:hi, got {s:?}"));
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        KRange::new(
            lo.trim().parse().map_err(|_| bad())?,
            hi.trim().parse().map_err(|_| bad())?,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub chi: f64,
    pub dbi: f64,
    pub clustering: Clustering,
}

/// Smallest index whose value is a strict local maximum; endpoints compare to
/// their single neighbor. A single-element profile is its own maximum.
pub fn first_local_max(profile: &[f64]) -> Option<usize> {
    let n = profile.len();
    if n == 1 {
        return Some(0);
    }
    (0..n).find(|&i| {
        let left = i == 0 || profile[i] > profile[i - 1];
        let right = i + 1 == n || profile[i] > profile[i + 1];
        left && right
    })
}

/// Clusters `items` for every k in `krange` and picks the first local maximum of
/// CHI, falling back to the smallest DBI.
pub fn select_k(
    items: &[Template],
    krange: KRange,
    seed: u64,
) -> Result<(usize, Vec<KScore>), ClusterError> {
    select_k_with_matrix(&DistanceMatrix::new(items), items, krange, seed)
}

pub fn select_k_with_matrix(
    dm: &DistanceMatrix,
    items: &[Template],
    krange: KRange,
    seed: u64,
) -> Result<(usize, Vec<KScore>), ClusterError> {
    let distinct = distinct_count(items);
    if krange.lo < 2 || krange.hi < krange.lo || krange.hi > distinct {
        return Err(ClusterError::InvalidKRange(format!(
            "{}:{} not within [2, {distinct}]",
            krange.lo, krange.hi
        )));
    }
    let mut table = Vec::new();
    for k in krange.lo..=krange.hi {
        let clustering = kmedoids_with_matrix(dm, items, k, seed.wrapping_add(k as u64))?;
        // With every item its own cluster the within-dispersion is zero.
        let chi = match chi_with_matrix(dm, &clustering) {
            Ok(v) => v,
            Err(ClusterError::DegenerateClustering(_)) => CHI_SENTINEL_MAX,
            Err(e) => return Err(e),
        };
        let dbi = dbi_with_matrix(dm, &clustering)?;
        table.push(KScore {
            k,
            chi,
            dbi,
            clustering,
        });
    }
    let chis: Vec<f64> = table.iter().map(|s| s.chi).collect();
    let kbest = match first_local_max(&chis) {
        Some(i) => table[i].k,
        None => {
            table
                .iter()
                .fold(&table[0], |best, s| if s.dbi < best.dbi { s } else { best })
                .k
        }
    };
    Ok((kbest, table))
}

/// Sequences grouped by representative plus the indices of those fitting none.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// Sequence indices per representative.
    pub clusters: Vec<Vec<usize>>,
    pub non_clustered: Vec<usize>,
}

/// Sends every sequence to the nearest representative it fits.
pub fn assign_sequences(set: &SequenceSet, representatives: &[Template]) -> Assignment {
    let mut clusters = vec![Vec::new(); representatives.len()];
    let mut non_clustered = Vec::new();
    for (idx, seq) in set.sequences().iter().enumerate() {
        let best = representatives
            .iter()
            .enumerate()
            .filter(|(_, t)| fits(seq, t))
            .map(|(i, t)| (i, levenshtein(seq.states(), t.states())))
            .min_by_key(|&(i, d)| (d, i));
        match best {
            Some((i, _)) => clusters[i].push(idx),
            None => non_clustered.push(idx),
        }
    }
    Assignment {
        clusters,
        non_clustered,
    }
}

/// The five outcome measures of one pipeline run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// GA wall-clock time only.
    pub elapsed_seconds: f64,
    pub num_clusters: usize,
    pub chi: f64,
    pub dbi: f64,
    pub non_clustered: usize,
}

impl RunOutcome {
    pub const FIELDS: [&'static str; 5] = [
        "elapsed_seconds",
        "num_clusters",
        "chi",
        "dbi",
        "non_clustered",
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.elapsed_seconds,
            self.num_clusters as f64,
            self.chi,
            self.dbi,
            self.non_clustered as f64,
        ]
    }

    pub fn from_values(v: [f64; 5]) -> Self {
        RunOutcome {
            elapsed_seconds: v[0],
            num_clusters: v[1].round() as usize,
            chi: v[2],
            dbi: v[3],
            non_clustered: v[4].round() as usize,
        }
    }

    /// Degenerate runs report a single cluster and sentinel indices.
    pub fn is_degenerate(&self) -> bool {
        self.num_clusters == 1
    }
}

#[derive(Debug, Clone)]
pub struct TdcRun {
    pub outcome: RunOutcome,
    pub representatives: Vec<Template>,
    /// Input sequences grouped by representative.
    pub clusters: Vec<Vec<StateSequence>>,
    pub non_clustered: Vec<StateSequence>,
    pub front: Vec<Template>,
    pub k_table: Vec<KScore>,
    pub generations: usize,
    /// Set when the front was too small to cluster; the outcome then holds sentinels.
    pub degenerate: Option<ClusterError>,
}

/// GA, then template clustering, then assignment of the input sequences.
pub fn run_tdc(
    set: &SequenceSet,
    params: &GAParams,
    krange: KRange,
    stop: &StoppingConfig,
    seed: u64,
) -> Result<TdcRun, ClusterError> {
    let ga = run_ga(set, params, stop, seed)?;
    let front = ga.templates();
    let collect = |assignment: &Assignment| {
        let seqs = set.sequences();
        (
            assignment
                .clusters
                .iter()
                .map(|c| c.iter().map(|&i| seqs[i].clone()).collect())
                .collect(),
            assignment
                .non_clustered
                .iter()
                .map(|&i| seqs[i].clone())
                .collect(),
        )
    };

    // Templates that fit no sequence summarize no group; they are not clustered.
    let candidates: Vec<Template> = front
        .iter()
        .filter(|t| aligning_number(set, t) > 0)
        .cloned()
        .collect();
    let distinct = distinct_count(&candidates);
    if distinct < krange.lo {
        // Degenerate: the whole front acts as a single group.
        let representatives = if candidates.is_empty() {
            front.clone()
        } else {
            candidates
        };
        let assignment = assign_sequences(set, &representatives);
        let (clusters, non_clustered): (Vec<Vec<StateSequence>>, Vec<StateSequence>) =
            collect(&assignment);
        return Ok(TdcRun {
            outcome: RunOutcome {
                elapsed_seconds: ga.elapsed_seconds,
                num_clusters: 1,
                chi: CHI_SENTINEL_MAX,
                dbi: DBI_SENTINEL,
                non_clustered: assignment.non_clustered.len(),
            },
            representatives,
            clusters,
            non_clustered,
            front,
            k_table: Vec::new(),
            generations: ga.generations,
            degenerate: Some(ClusterError::FrontTooSmall {
                front: distinct,
                min_k: krange.lo,
            }),
        });
    }

    // CHI is undefined once every template is its own cluster, so k stays below
    // the distinct count unless the range allows nothing else.
    let krange = KRange {
        lo: krange.lo,
        hi: krange.hi.min(distinct - 1).max(krange.lo),
    };
    let dm = DistanceMatrix::new(&candidates);
    let (kbest, k_table) = select_k_with_matrix(&dm, &candidates, krange, seed)?;
    let chosen = k_table.iter().find(|s| s.k == kbest).expect("kbest from table");
    let representatives = chosen.clustering.medoid_templates(&candidates);
    let assignment = assign_sequences(set, &representatives);
    let (clusters, non_clustered) = collect(&assignment);
    Ok(TdcRun {
        outcome: RunOutcome {
            elapsed_seconds: ga.elapsed_seconds,
            num_clusters: kbest,
            chi: chosen.chi,
            dbi: chosen.dbi,
            non_clustered: assignment.non_clustered.len(),
        },
        representatives,
        clusters,
        non_clustered,
        front,
        k_table,
        generations: ga.generations,
        degenerate: None,
    })
}
