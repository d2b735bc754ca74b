//! Edit distance, template fitting and a transition graph in DOT form.

use tdc::align::{aligning_number, fits, levenshtein, transition_graph, Template};
use tdc::seqcore::SequenceSet;

fn main() {
    let rows = vec![
        vec!["ER", "ICU", "WARD"],
        vec!["ER", "WARD"],
        vec!["ER", "SURG", "WARD"],
        vec!["ICU", "HOME"],
    ];
    let set = SequenceSet::from_tokens("demo", &rows).unwrap();
    let a = set.alphabet();
    let id = |s: &str| a.id_of(s).unwrap();
    let template = Template(vec![id("ER"), id("ICU"), id("SURG"), id("WARD")]);

    for seq in set.sequences() {
        println!(
            "{:<16} fits={} distance={}",
            a.render(seq.states()),
            fits(seq, &template),
            levenshtein(seq.states(), template.states())
        );
    }
    println!("aligning number: {}", aligning_number(&set, &template));
    print!("{}", transition_graph(set.sequences()).to_dot(a, "demo"));
}
