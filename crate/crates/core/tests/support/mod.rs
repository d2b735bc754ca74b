//! Independent oracles and criterion checks shared by the integration tests and
//! the acceptance runner. Every check returns `Ok(detail)` or `Err(detail)`.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdc::align::{levenshtein, Template};
use tdc::cluster::{chi, dbi, kmedoids, run_tdc, Clustering, KRange, RunOutcome, CHI_SENTINEL_MAX};
use tdc::evotemplate::{dominates, pareto_front, GAParams, MutationProbability, ObjectiveVector, StoppingConfig};
use tdc::harness::{
    build_grid, by_set, split, split_per_set, sweep, ParamRanges, SplitSpec, SweepOptions,
    TrainingSample,
};
use tdc::recommend::{mark_nondominated, Direction, Objective, ObjectiveSpec, RecommendationRow};
use tdc::seqcore::{compute_descriptor, generate_set, random_set, GeneratorConfig, SequenceSet, StateId};
use tdc::surrogate::{
    evaluate_families, feature_importance, mape, predict_average_ensemble, predict_knn_ensemble,
    train_each, train_general, train_tree, EvalReport, FeatureSchema, ForestHyperparams, Matrix,
    SetModel, SurrogateForest, Target, TargetTransform, TrainConfig, TreeParams, TARGETS,
};

pub type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_ids(rng: &mut ChaCha8Rng, alphabet: u16, min: usize, max: usize) -> Vec<StateId> {
    let len = rng.gen_range(min..=max);
    (0..len).map(|_| StateId(rng.gen_range(0..alphabet))).collect()
}

// ---------------------------------------------------------------- levenshtein

/// Full (n+1) x (m+1) dynamic-programming table.
pub fn levenshtein_oracle<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (n, m) = (a.len(), b.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[n][m]
}

pub fn check_levenshtein(pairs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..pairs {
        let alphabet = r.gen_range(1..=6);
        let a = random_ids(&mut r, alphabet, 0, 20);
        let b = random_ids(&mut r, alphabet, 0, 20);
        let (got, want) = (levenshtein(&a, &b), levenshtein_oracle(&a, &b));
        if got != want {
            return Err(format!("pair {case}: {a:?} vs {b:?}: got {got}, oracle {want}"));
        }
    }
    Ok(format!("{pairs} pairs exact"))
}

// ---------------------------------------------------------------- pareto front

/// Members no other member dominates, keeping the first of each objective vector.
pub fn pareto_oracle(items: &[(Template, ObjectiveVector)]) -> Vec<(Template, ObjectiveVector)> {
    let mut out: Vec<(Template, ObjectiveVector)> = Vec::new();
    for (i, (t, v)) in items.iter().enumerate() {
        let mut beaten = false;
        for (j, (_, w)) in items.iter().enumerate() {
            if i != j
                && w.length <= v.length
                && w.aligning >= v.aligning
                && (w.length < v.length || w.aligning > v.aligning)
            {
                beaten = true;
            }
        }
        if !beaten && !out.iter().any(|(_, w)| w == v) {
            out.push((t.clone(), *v));
        }
    }
    out
}

pub fn check_pareto_front(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..instances {
        let n = r.gen_range(1..=30);
        let items: Vec<(Template, ObjectiveVector)> = (0..n)
            .map(|i| {
                let v = ObjectiveVector::new(r.gen_range(1..=8), r.gen_range(0..=8));
                (Template(vec![StateId(i as u16)]), v)
            })
            .collect();
        let got = pareto_front(&items);
        let want = pareto_oracle(&items);
        if got != want {
            return Err(format!("instance {case}: got {got:?}, oracle {want:?}"));
        }
        for (_, a) in &got {
            if got.iter().any(|(_, b)| dominates(*b, *a)) {
                return Err(format!("instance {case}: front not mutually non-dominated"));
            }
        }
    }
    Ok(format!("{instances} instances exact"))
}

// ---------------------------------------------------------------- recommendation flags

pub fn row_with(values: [f64; 5]) -> RecommendationRow {
    RecommendationRow {
        params: GAParams::default(),
        predicted: values,
        nondominated: false,
    }
}

/// O(n^2) scan with the direction applied explicitly per coordinate.
pub fn flags_oracle(rows: &[RecommendationRow], spec: &ObjectiveSpec) -> Vec<bool> {
    let better_eq = |o: &Objective, x: f64, y: f64| match o.direction {
        Direction::Minimize => x <= y,
        Direction::Maximize => x >= y,
    };
    let strictly = |o: &Objective, x: f64, y: f64| match o.direction {
        Direction::Minimize => x < y,
        Direction::Maximize => x > y,
    };
    rows.iter()
        .map(|a| {
            !rows.iter().any(|b| {
                let os = spec.objectives();
                os.iter().all(|o| better_eq(o, b.value(o.target), a.value(o.target)))
                    && os.iter().any(|o| strictly(o, b.value(o.target), a.value(o.target)))
            })
        })
        .collect()
}

pub fn random_spec(r: &mut ChaCha8Rng) -> ObjectiveSpec {
    let mut targets = TARGETS.to_vec();
    let n = r.gen_range(1..=3);
    let mut objectives = Vec::new();
    for _ in 0..n {
        let t = targets.remove(r.gen_range(0..targets.len()));
        let direction = if r.gen_bool(0.5) { Direction::Minimize } else { Direction::Maximize };
        objectives.push(Objective { target: t, direction });
    }
    ObjectiveSpec::new(objectives).unwrap()
}

pub fn random_rows(r: &mut ChaCha8Rng, n: usize, levels: u32) -> Vec<RecommendationRow> {
    (0..n)
        .map(|_| {
            let mut v = [0.0; 5];
            for x in &mut v {
                *x = r.gen_range(0..levels) as f64 * 0.5;
            }
            row_with(v)
        })
        .collect()
}

pub fn check_mark_nondominated(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..instances {
        let spec = random_spec(&mut r);
        let n = r.gen_range(1..=25);
        let mut rows = random_rows(&mut r, n, 5);
        mark_nondominated(&mut rows, &spec);
        let got: Vec<bool> = rows.iter().map(|x| x.nondominated).collect();
        let want = flags_oracle(&rows, &spec);
        if got != want {
            return Err(format!("instance {case}: flags {got:?}, oracle {want:?}"));
        }
    }
    Ok(format!("{instances} instances exact"))
}

// ---------------------------------------------------------------- CHI / DBI

/// CHI from its definition: squared edit distances to medoids, global medoid =
/// item with the smallest summed distance (lowest index on ties).
pub fn chi_oracle(items: &[Template], c: &Clustering) -> f64 {
    let n = items.len();
    let d = |i: usize, j: usize| levenshtein_oracle(items[i].states(), items[j].states()) as f64;
    let mut global = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let s: f64 = (0..n).map(|j| d(i, j)).sum();
        if s < best {
            best = s;
            global = i;
        }
    }
    let mut between = 0.0;
    for (cl, &m) in c.medoids.iter().enumerate() {
        let size = c.assignment.iter().filter(|&&a| a == cl).count() as f64;
        between += size * d(m, global) * d(m, global);
    }
    let mut within = 0.0;
    for i in 0..n {
        let m = c.medoids[c.assignment[i]];
        within += d(i, m) * d(i, m);
    }
    let k = c.k as f64;
    if within == 0.0 {
        return CHI_SENTINEL_MAX;
    }
    (between / (k - 1.0)) / (within / (n as f64 - k))
}

/// DBI from its definition; `None` when two medoids coincide.
pub fn dbi_oracle(items: &[Template], c: &Clustering) -> Option<f64> {
    let d = |i: usize, j: usize| levenshtein_oracle(items[i].states(), items[j].states()) as f64;
    let k = c.k;
    let mut scatter = vec![0.0; k];
    for (cl, s) in scatter.iter_mut().enumerate() {
        let members: Vec<usize> = (0..items.len()).filter(|&i| c.assignment[i] == cl).collect();
        if !members.is_empty() {
            *s = members.iter().map(|&i| d(i, c.medoids[cl])).sum::<f64>() / members.len() as f64;
        }
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = 0.0f64;
        for j in 0..k {
            if i != j {
                let sep = d(c.medoids[i], c.medoids[j]);
                if sep == 0.0 {
                    return None;
                }
                worst = worst.max((scatter[i] + scatter[j]) / sep);
            }
        }
        total += worst;
    }
    Some(total / k as f64)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn check_cluster_indices(instances: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let mut done = 0;
    while done < instances {
        let n = r.gen_range(3..=8);
        let items: Vec<Template> = (0..n).map(|_| Template(random_ids(&mut r, 3, 1, 6))).collect();
        let mut distinct = items.clone();
        distinct.sort();
        distinct.dedup();
        if distinct.len() < 3 {
            continue;
        }
        let k = r.gen_range(2..distinct.len().min(4) + 1).min(n - 1);
        if k < 2 {
            continue;
        }
        let c = kmedoids(&items, k, r.gen()).map_err(|e| e.to_string())?;
        let got_chi = chi(&items, &c).map_err(|e| e.to_string())?;
        let want_chi = chi_oracle(&items, &c);
        if !rel_close(got_chi, want_chi, 1e-9) {
            return Err(format!("CHI {got_chi} vs oracle {want_chi} on {items:?}"));
        }
        match (dbi(&items, &c), dbi_oracle(&items, &c)) {
            (Ok(g), Some(w)) if rel_close(g, w, 1e-9) => {}
            (Err(_), None) => {}
            (g, w) => return Err(format!("DBI {g:?} vs oracle {w:?} on {items:?}")),
        }
        done += 1;
    }
    Ok(format!("{instances} instances within 1e-9 relative"))
}

// ---------------------------------------------------------------- CART

/// Greedy tree that tries every feature and every midpoint by brute force and
/// returns its per-row training predictions.
pub fn cart_oracle(x: &[Vec<f64>], y: &[f64], max_depth: usize, min_split: usize) -> Vec<f64> {
    fn sse(y: &[f64], idx: &[usize]) -> f64 {
        let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - m).powi(2)).sum()
    }
    fn grow(x: &[Vec<f64>], y: &[f64], idx: Vec<usize>, depth: usize, md: usize, ms: usize, out: &mut [f64]) {
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        let leaf = |out: &mut [f64]| {
            for &i in &idx {
                out[i] = mean;
            }
        };
        if depth >= md || idx.len() < ms || idx.iter().all(|&i| y[i] == y[idx[0]]) {
            return leaf(out);
        }
        let parent = sse(y, &idx);
        let mut best: Option<(f64, usize, f64)> = None;
        for f in 0..x[0].len() {
            let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
                let cost = sse(y, &l) + sse(y, &r);
                if best.map_or(true, |b| cost < b.0) {
                    best = Some((cost, f, t));
                }
            }
        }
        match best {
            Some((cost, f, t)) if parent - cost > 0.0 => {
                let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
                grow(x, y, l, depth + 1, md, ms, out);
                grow(x, y, r, depth + 1, md, ms, out);
            }
            _ => leaf(out),
        }
    }
    let mut out = vec![0.0; y.len()];
    grow(x, y, (0..y.len()).collect(), 0, max_depth, min_split, &mut out);
    out
}

fn mse(y: &[f64], p: &[f64]) -> f64 {
    y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64
}

pub fn check_cart(datasets: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for case in 0..datasets {
        let n = r.gen_range(2..=12);
        let cols = r.gen_range(1..=4);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..cols).map(|_| r.gen_range(0..6) as f64).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
        let depth = r.gen_range(1..=4);
        let min_split = r.gen_range(2..=4);
        let params = TreeParams {
            max_depth: depth,
            min_samples_split: min_split,
            feature_fraction: 1.0,
        };
        let rows: Vec<usize> = (0..n).collect();
        let fitted = train_tree(&Matrix::from_rows(&x), &y, &rows, params, &mut rng(0))
            .map_err(|e| e.to_string())?;
        let got: Vec<f64> = x.iter().map(|row| fitted.tree.predict(row)).collect();
        let want = cart_oracle(&x, &y, depth, min_split);
        let (a, b) = (mse(&y, &got), mse(&y, &want));
        if (a - b).abs() > 1e-9 * a.max(b).max(1.0) {
            return Err(format!("dataset {case}: tree MSE {a}, oracle MSE {b}"));
        }
    }
    Ok(format!("{datasets} datasets, equal training MSE"))
}

// ---------------------------------------------------------------- surrogate fixtures

/// Uniformly random GA parameters inside the default sweep ranges.
pub fn random_params(r: &mut ChaCha8Rng) -> GAParams {
    GAParams {
        increment: r.gen_range(1.0..3.0),
        mutation_probability: MutationProbability::new(
            r.gen_range(0.0..0.3),
            r.gen_range(0.0..0.3),
            r.gen_range(0.0..0.3),
        ),
        mutation_number: r.gen_range(0..=5),
        parent_fraction: r.gen_range(0.1..0.9),
        start_population_factor: r.gen_range(0.5..3.0),
    }
}

pub fn small_sets(seed: u64, n: usize) -> Vec<SequenceSet> {
    let states: Vec<String> = (0..6).map(|i| format!("S{i}")).collect();
    (0..n)
        .map(|i| {
            random_set(&format!("set{i}"), &states[..3 + i % 4], 20, 2 + i % 3, 5 + i % 4, seed + i as u64)
                .unwrap()
        })
        .collect()
}

/// Samples whose outcomes are an arbitrary smooth function of the parameters.
pub fn synthetic_samples(sets: &[SequenceSet], per_set: usize, seed: u64) -> Vec<TrainingSample> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for (si, set) in sets.iter().enumerate() {
        let descriptor = compute_descriptor(set);
        for i in 0..per_set {
            let params = random_params(&mut r);
            let noise: f64 = r.gen_range(0.0..0.1);
            let base = params.start_population_factor * (1.0 + si as f64) + params.increment;
            out.push(TrainingSample {
                set_name: set.name().to_string(),
                seed: i as u64,
                params,
                descriptor: descriptor.clone(),
                outcome: RunOutcome {
                    elapsed_seconds: base + noise,
                    num_clusters: 2 + (params.mutation_number as usize) % 3,
                    chi: 10.0 * params.parent_fraction + noise,
                    dbi: 0.5 + params.increment * 0.2 + noise,
                    non_clustered: (params.start_population_factor * 3.0) as usize,
                },
            });
        }
    }
    out
}

pub fn quick_hyper(seed: u64) -> ForestHyperparams {
    ForestHyperparams {
        n_trees: 8,
        max_depth: 5,
        min_samples_split: 2,
        feature_fraction: 0.5,
        seed,
    }
}

pub fn quick_set_models(n: usize, seed: u64) -> Vec<SetModel> {
    let sets = small_sets(seed, n);
    let samples = synthetic_samples(&sets, 25, seed);
    by_set(&samples)
        .into_iter()
        .enumerate()
        .map(|(i, (name, rows))| SetModel {
            descriptor: rows[0].descriptor.clone(),
            forest: SurrogateForest::fit(
                FeatureSchema::pe_only(),
                &rows,
                quick_hyper(seed + i as u64),
                TargetTransform::Log1p,
            )
            .unwrap(),
            name,
        })
        .collect()
}

pub fn check_ensemble_identities(inputs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let members = quick_set_models(5, seed);
    let refs: Vec<&SetModel> = members.iter().collect();
    let forests: Vec<&SurrogateForest> = members.iter().map(|m| &m.forest).collect();
    let probes = small_sets(seed + 100, 7);
    for i in 0..inputs {
        let params = random_params(&mut r);
        let descriptor = compute_descriptor(&probes[i % probes.len()]);
        let knn = predict_knn_ensemble(&refs, &descriptor, refs.len(), &params).map_err(|e| e.to_string())?;
        let avg = predict_average_ensemble(&forests, &params).map_err(|e| e.to_string())?;
        if knn != avg {
            return Err(format!("input {i}: knn(k=n) {knn:?} != average {avg:?}"));
        }
        for m in &members {
            let single = predict_average_ensemble(&[&m.forest], &params).map_err(|e| e.to_string())?;
            let direct = m.forest.predict(&params, None).map_err(|e| e.to_string())?;
            if single != direct {
                return Err(format!("input {i}: average(n=1) {single:?} != member {direct:?}"));
            }
        }
    }
    Ok(format!("{inputs} inputs exact, {} members", members.len()))
}

pub fn check_mape_units() -> Check {
    let m = mape(&[100.0, 200.0], &[110.0, 180.0]).map_err(|e| e.to_string())?;
    if m.value != 10.0 {
        return Err(format!("mape([100,200],[110,180]) = {}", m.value));
    }
    let y = [3.0, 7.5, 1e-3, 42.0];
    let z = mape(&y, &y).map_err(|e| e.to_string())?;
    if z.value != 0.0 {
        return Err(format!("mape(y, y) = {}", z.value));
    }
    Ok("10.0 and 0.0 exact".into())
}

// ---------------------------------------------------------------- importance

/// Trains the general model on a target equal to start_population_factor plus
/// noise and reports the top-ranked feature for that target.
pub fn check_importance(seed: u64) -> Check {
    let mut r = rng(seed);
    let sets = small_sets(seed, 4);
    let mut samples = Vec::new();
    for set in &sets {
        let descriptor = compute_descriptor(set);
        for i in 0..60 {
            let params = random_params(&mut r);
            let y = params.start_population_factor + r.gen_range(0.0..0.05);
            samples.push(TrainingSample {
                set_name: set.name().to_string(),
                seed: i,
                params,
                descriptor: descriptor.clone(),
                outcome: RunOutcome {
                    elapsed_seconds: y,
                    num_clusters: 2,
                    chi: y,
                    dbi: y,
                    non_clustered: 0,
                },
            });
        }
    }
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let general = train_general(&samples, &cfg).map_err(|e| e.to_string())?;
    let mut tops = Vec::new();
    for t in [Target::ElapsedSeconds, Target::Chi, Target::Dbi] {
        let ranked = feature_importance(&general, t);
        let top = ranked.first().map(|(n, _)| n.clone()).unwrap_or_default();
        if top != "start_population_factor" {
            return Err(format!("{t}: top feature {top:?}, ranking {ranked:?}"));
        }
        tops.push(format!("{t}={:.3}", ranked[0].1));
    }
    Ok(format!("start_population_factor first ({})", tops.join(" ")))
}

// ---------------------------------------------------------------- recovery

/// Three disjoint five-state templates, low mutation; counts runs that pick k = 3.
pub fn recovery_hits(runs: u64) -> Result<(usize, Vec<usize>), String> {
    let tpl = |c: &str| c.chars().map(|x| x.to_string()).collect::<Vec<_>>();
    let set = generate_set(&GeneratorConfig {
        name: "three".into(),
        templates: vec![tpl("ABCDE"), tpl("FGHIJ"), tpl("KLMNO")],
        mutation_probability: 0.05,
        set_size: 40,
        seed: 11,
    })
    .map_err(|e| e.to_string())?;
    let mut ks = Vec::new();
    for seed in 0..runs {
        let run = run_tdc(&set, &GAParams::default(), KRange::default(), &StoppingConfig::default(), seed)
            .map_err(|e| e.to_string())?;
        ks.push(run.outcome.num_clusters);
    }
    Ok((ks.iter().filter(|&&k| k == 3).count(), ks))
}

// ---------------------------------------------------------------- desk pipeline

/// Six generated sets (1-3 templates over 12 states, mutation 0.10-0.30) and two
/// uniformly random sets, 40 sequences each.
pub fn desk_corpus(seed: u64) -> Vec<SequenceSet> {
    let mut r = rng(seed);
    let alphabet: Vec<String> = (0..12).map(|i| format!("S{i:02}")).collect();
    let mut sets = Vec::new();
    for i in 0..6 {
        let n_templates = i % 3 + 1;
        let templates = (0..n_templates)
            .map(|_| {
                let len = r.gen_range(4..=7);
                (0..len).map(|_| alphabet[r.gen_range(0..12)].clone()).collect()
            })
            .collect();
        let cfg = GeneratorConfig {
            name: format!("gen{i}"),
            templates,
            mutation_probability: 0.1 + 0.04 * i as f64,
            set_size: 40,
            seed: r.gen(),
        };
        sets.push(generate_set(&cfg).unwrap());
    }
    for i in 0..2 {
        sets.push(random_set(&format!("rand{i}"), &alphabet[..8], 40, 3, 8, r.gen()).unwrap());
    }
    sets
}

pub struct DeskRun {
    pub samples: usize,
    pub reports: Vec<EvalReport>,
    /// Per set: targets on which the per-set model beats the constant train mean.
    pub wins_vs_mean: BTreeMap<String, usize>,
}

impl DeskRun {
    pub fn mean_test(&self, family: &str) -> f64 {
        self.reports
            .iter()
            .find(|r| r.family == family)
            .map_or(f64::NAN, |r| r.mean_test_mape())
    }
}

/// Sweeps 3 values per parameter on every corpus set, trains all families on a
/// 70:30 per-set split and evaluates them.
pub fn desk_pipeline(seed: u64, jobs: usize) -> Result<DeskRun, String> {
    let sets = desk_corpus(seed);
    let grid = build_grid(3, &ParamRanges::default(), seed).map_err(|e| e.to_string())?;
    let mut samples = Vec::new();
    for s in &sets {
        samples.extend(
            sweep(s, &grid, KRange::default(), &StoppingConfig::default(), seed, SweepOptions { jobs, progress: false })
                .map_err(|e| e.to_string())?,
        );
    }
    let spec = SplitSpec {
        train_fraction: 0.7,
        seed,
    };
    let (train, _) = split_per_set(&samples, spec).map_err(|e| e.to_string())?;
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    let (each, skipped) = train_each(&train, &cfg).map_err(|e| e.to_string())?;
    if !skipped.is_empty() {
        return Err(format!("skipped sets: {skipped:?}"));
    }
    let general = train_general(&train, &cfg).map_err(|e| e.to_string())?;
    let reports = evaluate_families(&each, Some(&general), &samples, spec, 3).map_err(|e| e.to_string())?;

    let mut wins_vs_mean = BTreeMap::new();
    for (name, rows) in by_set(&samples) {
        let (tr, te) = split(&rows, spec).map_err(|e| e.to_string())?;
        let model = each.iter().find(|m| m.name == name).ok_or("missing per-set model")?;
        let mut wins = 0;
        for t in TARGETS {
            let mean = tr.iter().map(|s| s.outcome.values()[t.index()]).sum::<f64>() / tr.len() as f64;
            let y: Vec<f64> = te.iter().map(|s| s.outcome.values()[t.index()]).collect();
            let p: Vec<f64> = te
                .iter()
                .map(|s| model.forest.predict(&s.params, None).map(|v| v[t.index()]))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let score = |pred: &[f64]| match mape(&y, pred) {
                Ok(m) => m.value,
                // All-zero truths: fall back to mean absolute error.
                Err(_) => y.iter().zip(pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64,
            };
            if score(&p) <= score(&vec![mean; y.len()]) {
                wins += 1;
            }
        }
        wins_vs_mean.insert(name, wins);
    }
    Ok(DeskRun {
        samples: samples.len(),
        reports,
        wins_vs_mean,
    })
}
