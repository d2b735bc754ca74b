//! Command-line behaviour. Named to run before the acceptance target, which
//! exits non-zero while any criterion fails.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tdc");

fn tdc(args: &[&str], dir: &Path) -> Output {
    Command::new(BIN).args(args).current_dir(dir).output().unwrap()
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = tdc(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn stderr_line(out: &Output) -> String {
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error: "), "{err}");
    err
}

#[test]
fn generate_and_describe() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let text = ok(&["generate", "--template", "A B C", "--noise", "0", "--size", "5", "--seed", "1"], d);
    assert_eq!(text, "A,B,C\n".repeat(5));
    ok(&["generate", "--template", "A B C", "--size", "10", "--seed", "1", "--out", "s.txt"], d);
    let desc = ok(&["describe", "s.txt"], d);
    assert!(desc.starts_with("field,value\nsequences,10\n"));
    assert!(desc.contains("ngram:A,"));
}

#[test]
fn tdc_writes_row_and_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--template", "A B C D", "--template", "E F G", "--size", "30", "--seed", "2", "--out", "s.txt"], d);
    let row = ok(
        &["tdc", "s.txt", "--seed", "1", "--mutation-prob", "0.1,0.05,0.1", "--krange", "2:4", "--graphs", "g", "--out", "row.csv"],
        d,
    );
    assert!(row.is_empty());
    let csv = std::fs::read_to_string(d.join("row.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("increment,mutation_probability,"));
    assert!(lines[1].contains(",0.1/0.05/0.1,"));
    let graphs: Vec<_> = std::fs::read_dir(d.join("g")).unwrap().collect();
    assert!(!graphs.is_empty());
    let dot = std::fs::read_to_string(d.join("g").join("cluster_0.dot")).unwrap();
    assert!(dot.starts_with("digraph"));
}

#[test]
fn pipeline_commands_fit_together() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--template", "A B C", "--template", "D E F", "--size", "20", "--seed", "1", "--out", "a.txt"], d);
    ok(&["generate", "--random-alphabet", "A,B,C,D", "--size", "20", "--seed", "2", "--out", "b.txt"], d);
    ok(&["generate", "--template", "A D B", "--size", "20", "--seed", "3", "--out", "c.txt"], d);
    ok(&["sweep", "a.txt", "b.txt", "c.txt", "--seed", "1", "--grid", "2", "--out", "s.csv"], d);
    ok(&["train", "--samples", "s.csv", "--family", "each", "--seed", "1", "--out", "each.model"], d);
    ok(&["train", "--samples", "s.csv", "--family", "general", "--seed", "1", "--out", "gen.model"], d);

    let table = ok(&["evaluate", "--samples", "s.csv", "--model", "each.model", "--model", "gen.model"], d);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "family,chi,dbi,elapsed_seconds,non_clustered,num_clusters");
    let families: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(families, ["each", "general", "average", "knn"]);

    let imp = ok(&["importance", "--model", "gen.model", "--target", "dbi", "--top", "3"], d);
    assert!(imp.starts_with("model,feature,importance\n"));
    assert!(imp.lines().count() <= 4);

    let rec = ok(
        &["recommend", "b.txt", "--model", "each.model", "--knn-k", "2", "--objectives", "chi", "--seed", "1", "--grid", "2", "--nondominated-only", "--flag-column"],
        d,
    );
    let rows: Vec<&str> = rec.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.ends_with(",true")));

    // A samples file from a different sweep is refused.
    ok(&["sweep", "a.txt", "b.txt", "--seed", "2", "--grid", "2", "--out", "other.csv"], d);
    let err = stderr_line(&tdc(&["evaluate", "--samples", "other.csv", "--model", "gen.model"], d));
    assert!(err.contains("CorpusMismatch"), "{err}");
}

#[test]
fn errors_are_one_line_and_leave_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.txt"), "\n\n").unwrap();

    let err = stderr_line(&tdc(&["describe", "empty.txt"], d));
    assert!(err.contains("EmptyFile"));
    let err = stderr_line(&tdc(&["tdc", "empty.txt", "--seed", "1", "--out", "row.csv"], d));
    assert!(err.contains("EmptyFile"));
    assert!(!d.join("row.csv").exists());

    stderr_line(&tdc(&["tdc", "missing.txt"], d));
    stderr_line(&tdc(&["generate", "--template", "A", "--seed", "1", "--bogus"], d));
    let err = stderr_line(&tdc(&["tdc", "empty.txt", "--seed", "1", "--increment", "0.5"], d));
    assert!(err.contains("EmptyFile") || err.contains("increment"));

    std::fs::write(d.join("s.txt"), "A B\nB C\n").unwrap();
    let err = stderr_line(&tdc(&["tdc", "s.txt", "--seed", "1", "--increment", "0.5"], d));
    assert!(err.contains("InvalidParams"), "{err}");
    let err = stderr_line(&tdc(&["tdc", "s.txt", "--seed", "1", "--krange", "5:2"], d));
    assert!(err.contains("krange") || err.contains("InvalidKRange"), "{err}");
    let err = stderr_line(&tdc(&["recommend", "s.txt", "--model", "none.model", "--objectives", "foo", "--seed", "1"], d));
    assert!(err.contains("foo"), "{err}");

    std::fs::write(d.join("bad.model"), "not a model").unwrap();
    let err = stderr_line(&tdc(&["recommend", "s.txt", "--model", "bad.model", "--objectives", "dbi", "--seed", "1", "--out", "t.csv"], d));
    assert!(!err.is_empty());
    assert!(!d.join("t.csv").exists());

    let leftovers: Vec<_> = std::fs::read_dir(d)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn seed_is_required_for_randomized_commands() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("s.txt"), "A B\nB C\n").unwrap();
    for args in [
        &["generate", "--template", "A"][..],
        &["tdc", "s.txt"],
        &["sweep", "s.txt", "--out", "x.csv"],
        &["train", "--samples", "x.csv", "--family", "each", "--out", "m"],
        &["recommend", "s.txt", "--model", "m", "--objectives", "dbi"],
    ] {
        let err = stderr_line(&tdc(args, d));
        assert!(err.contains("--seed"), "{args:?}: {err}");
    }
}
