//! Exhaustive search on tiny instances versus the GA front.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tdc::align::Template;
use tdc::evotemplate::{evaluate, pareto_front, run_ga, GAParams, MutationProbability, ObjectiveVector, StoppingConfig};
use tdc::seqcore::{SequenceSet, StateId};

fn all_templates(alphabet: u16, max_len: usize) -> Vec<Template> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::<StateId>::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for t in &layer {
            for s in 0..alphabet {
                let mut u = t.clone();
                u.push(StateId(s));
                next.push(u);
            }
        }
        out.extend(next.iter().cloned().map(Template));
        layer = next;
    }
    out
}

fn micro_set(seed: u64) -> SequenceSet {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<&str>> = (0..8)
        .map(|_| (0..r.gen_range(1..=2)).map(|_| if r.gen_bool(0.5) { "A" } else { "B" }).collect())
        .collect();
    SequenceSet::from_tokens("micro", &rows).unwrap()
}

/// True optimum vectors, each weakly dominated by some GA front member.
fn covered(set: &SequenceSet, seed: u64) -> bool {
    let params = GAParams {
        increment: 2.0,
        mutation_probability: MutationProbability::new(0.3, 0.3, 0.3),
        mutation_number: 2,
        parent_fraction: 0.5,
        start_population_factor: 2.0,
    };
    let cap = params.length_cap(set.max_len());
    assert!(cap <= 4);
    let alphabet = set.alphabet().len() as u16;
    let evaluated: Vec<(Template, ObjectiveVector)> = all_templates(alphabet, cap)
        .into_iter()
        .map(|t| {
            let v = evaluate(set, &t);
            (t, v)
        })
        .collect();
    let truth = pareto_front(&evaluated);
    let stop = StoppingConfig {
        epsilon: 1e-3,
        patience: 60,
        max_generations: 400,
    };
    let ga = run_ga(set, &params, &stop, seed).unwrap();
    truth.iter().all(|(_, v)| {
        ga.front
            .iter()
            .any(|(_, w)| w.length <= v.length && w.aligning >= v.aligning)
    })
}

#[test]
fn ga_reaches_the_exhaustive_front_on_micro_instances() {
    let set = micro_set(3);
    let hits = (0..20).filter(|&s| covered(&set, s)).count();
    assert!(hits >= 19, "covered in {hits}/20 runs");
}

#[test]
fn single_state_set_gives_unit_template() {
    let set = SequenceSet::from_tokens("one", &[vec!["A"]]).unwrap();
    let ga = run_ga(&set, &GAParams::default(), &StoppingConfig::default(), 5).unwrap();
    assert!(ga.front.iter().any(|(_, v)| *v == ObjectiveVector::new(1, 1)));
}

#[test]
fn several_micro_sets() {
    for set_seed in 0..12 {
        let set = micro_set(100 + set_seed);
        let hits = (0..20).filter(|&s| covered(&set, s)).count();
        assert!(hits >= 19, "set {set_seed}: covered in {hits}/20 runs");
    }
}
