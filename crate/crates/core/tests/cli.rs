mod common;

use common::*;
use ontogat::matcher::AlignmentSet;
use ontogat::ontology::Ontology;

const TOY_LOSS_SNAPSHOT: [f64; 5] = [
    0.1616100547,
    0.1604230522,
    0.1592530771,
    0.1581000579,
    0.1569639191,
];

fn read(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn loss_trace(csv: &str) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn train_writes_checkpoint_threshold_and_loss() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &toy_config_text(dir.path()));
    let out = ontogat(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));

    let threshold: f64 = read(&dir.path().join("threshold.txt"))
        .trim()
        .parse()
        .unwrap();
    assert!(threshold > 0.0 && threshold < 1.0, "{threshold}");
    assert_eq!(read(&dir.path().join("threshold.txt")).lines().count(), 1);

    let csv = read(&dir.path().join("loss.csv"));
    assert!(csv.starts_with("epoch,mean_loss\n"));
    let trace = loss_trace(&csv);
    assert_eq!(trace.len(), 5);
    for w in trace.windows(2) {
        assert!(w[1] <= w[0] * 1.05, "{trace:?}");
    }
    for (got, want) in trace.iter().zip(TOY_LOSS_SNAPSHOT) {
        assert!((got - want).abs() < 1e-9, "{trace:?}");
    }
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn missing_embedding_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let text = toy_config_text(dir.path()).replace("embeddings.emb", "absent.emb");
    let cfg = write_config(dir.path(), &text);
    let out = ontogat(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("embedding file not found"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn zero_epochs_fails_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let text = toy_config_text(dir.path()).replace("epochs = 5", "epochs = 0");
    let cfg = write_config(dir.path(), &text);
    let out = ontogat(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("epochs"), "{}", stderr(&out));
    assert!(!dir.path().join("model.json").exists());
}

fn train_toy(dir: &std::path::Path, text: &str) -> std::path::PathBuf {
    let cfg = write_config(dir, text);
    let out = ontogat(&["train", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    cfg
}

#[test]
fn match_writes_both_formats_with_equal_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = train_toy(dir.path(), &toy_config_text(dir.path()));
    let out = ontogat(&["match", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let tsv = AlignmentSet::parse_tsv(&read(&dir.path().join("alignment.tsv"))).unwrap();
    let rdf = AlignmentSet::parse_rdf_xml(&read(&dir.path().join("alignment.rdf"))).unwrap();
    assert!(!tsv.is_empty());
    assert_eq!(tsv.len(), rdf.len());
}

#[test]
fn threshold_override_above_one_gives_empty_valid_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = train_toy(dir.path(), &toy_config_text(dir.path()));
    let out = ontogat(&[
        "match",
        "--config",
        cfg.to_str().unwrap(),
        "--threshold",
        "1.01",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(read(&dir.path().join("alignment.tsv")), "");
    let rdf = read(&dir.path().join("alignment.rdf"));
    assert!(rdf.starts_with("<?xml"));
    assert!(rdf.contains("<Alignment>"));
    assert!(AlignmentSet::parse_rdf_xml(&rdf).unwrap().is_empty());
}

#[test]
fn identical_ontologies_self_align() {
    let dir = tempfile::tempdir().unwrap();
    let text = toy_config_text(dir.path());
    train_toy(dir.path(), &text);
    let right = fixture("toy/right.json");
    let left = fixture("toy/left.json");
    let text = text.replace(&right.display().to_string(), &left.display().to_string());
    let cfg = write_config(dir.path(), &text);
    let out = ontogat(&["match", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let a = AlignmentSet::parse_tsv(&read(&dir.path().join("alignment.tsv"))).unwrap();
    let o = Ontology::load(&left).unwrap();
    assert_eq!(a.len(), o.len());
    assert!(a.iter().all(|c| c.left == c.right && c.confidence >= 0.99));
}

#[test]
fn dimension_mismatch_names_both_values() {
    let dir = tempfile::tempdir().unwrap();
    let text = toy_config_text(dir.path());
    train_toy(dir.path(), &text);
    let cfg = write_config(
        dir.path(),
        &text.replace("hidden_dim = 8", "hidden_dim = 9"),
    );
    let out = ontogat(&["match", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(
        err.contains("hidden_dim") && err.contains('8') && err.contains('9'),
        "{err}"
    );
}

#[test]
fn conference_pair_outputs_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"seed = 3
[input]
left = "{}"
right = "{}"
reference = "{}"
[embedding]
backend = "hash"
dim = 64
[model]
hidden_dim = 8
output_dim = 16
[train]
epochs = 2
[output]
checkpoint = "model.json"
threshold = "threshold.txt"
loss = "loss.csv"
alignment_tsv = "out/a.tsv"
alignment_rdf = "out/a.rdf"
"#,
        fixture("conference/cmt.json").display(),
        fixture("conference/ekaw.json").display(),
        fixture("conference/cmt-ekaw.json").display(),
    );
    let cfg = train_toy(dir.path(), &text);
    let out = ontogat(&["match", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let tsv = AlignmentSet::load(dir.path().join("out/a.tsv")).unwrap();
    let rdf = AlignmentSet::load(dir.path().join("out/a.rdf")).unwrap();
    assert_eq!(tsv.len(), rdf.len());
    let pairs = |a: &AlignmentSet| {
        a.iter()
            .map(|c| (c.left.clone(), c.right.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(pairs(&tsv), pairs(&rdf));

    let eval = ontogat(&[
        "eval",
        "--system",
        dir.path().join("out/a.rdf").to_str().unwrap(),
        "--reference",
        fixture("conference/cmt-ekaw.json").to_str().unwrap(),
        "--variant",
        "m3",
        "--ontologies",
        fixture("conference/cmt.json").to_str().unwrap(),
        fixture("conference/ekaw.json").to_str().unwrap(),
    ]);
    assert!(eval.status.success(), "{}", stderr(&eval));
    assert_eq!(stdout(&eval).lines().count(), 3);
}

fn eval(
    dir: &std::path::Path,
    system: &str,
    reference: &str,
    variant: &str,
) -> std::process::Output {
    let s = dir.join("system.tsv");
    let r = dir.join("reference.tsv");
    std::fs::write(&s, system).unwrap();
    std::fs::write(&r, reference).unwrap();
    ontogat(&[
        "eval",
        "--system",
        s.to_str().unwrap(),
        "--reference",
        r.to_str().unwrap(),
        "--variant",
        variant,
        "--ontologies",
        fixture("conference/cmt.json").to_str().unwrap(),
        fixture("conference/ekaw.json").to_str().unwrap(),
    ])
}

fn cell(l: &str, r: &str) -> String {
    format!(
        "http://conference.example.org/cmt#{l}\thttp://conference.example.org/ekaw#{r}\t=\t1.0\n"
    )
}

fn all_row(o: &std::process::Output) -> Vec<String> {
    let text = stdout(o);
    let line = text
        .lines()
        .find(|l| l.starts_with("ALL,"))
        .unwrap()
        .to_string();
    line.split(',').map(str::to_string).collect()
}

#[test]
fn eval_system_equal_to_reference_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let r = [cell("Paper", "Paper"), cell("Person", "Person")].concat();
    let out = eval(dir.path(), &r, &r, "m1");
    assert!(out.status.success(), "{}", stderr(&out));
    let row = all_row(&out);
    assert_eq!(
        &row[2..7],
        &["1.0000", "1.0000", "1.0000", "1.0000", "1.0000"]
    );
}

#[test]
fn eval_empty_system_uses_precision_convention() {
    let dir = tempfile::tempdir().unwrap();
    let out = eval(dir.path(), "", &cell("Paper", "Paper"), "m3");
    assert!(out.status.success(), "{}", stderr(&out));
    let row = all_row(&out);
    assert_eq!(row[2], "1.0000");
    assert_eq!(row[4], "0.0000");
    assert_eq!(row[6], "0.0000");
}

#[test]
fn eval_passes_counts_through() {
    let dir = tempfile::tempdir().unwrap();
    let reference = [
        cell("Paper", "Paper"),
        cell("Person", "Person"),
        cell("Review", "Review"),
        cell("Conference", "Conference"),
    ]
    .concat();
    let system = [
        cell("Paper", "Paper"),
        cell("Person", "Person"),
        cell("Author", "Student"),
    ]
    .concat();
    let out = eval(dir.path(), &system, &reference, "m1");
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(
        text.lines().next().unwrap(),
        "case,variant,precision,f05,f1,f2,recall,tp,fp,fn"
    );
    let row = all_row(&out);
    assert_eq!(
        row[1..],
        ["M1", "0.6667", "0.6250", "0.5714", "0.5263", "0.5000", "2", "1", "2"]
    );
}

#[test]
fn eval_rejects_unknown_variant() {
    let dir = tempfile::tempdir().unwrap();
    let out = eval(dir.path(), "", "", "m4");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("m4"));
}

#[test]
fn gradcheck_seed_zero_passes() {
    let out = ontogat(&["gradcheck", "--seed", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).contains("seed 0 PASS"));
    assert!(stdout(&out).contains("dense.W"));
}

#[test]
fn gradcheck_corrupted_gradient_exits_1() {
    let out = ontogat(&["gradcheck", "--seed", "0", "--corrupt-gradient"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("seed 0 FAIL"));
}

#[test]
fn gradcheck_ten_seeds_ten_pass_lines() {
    let out = ontogat(&["gradcheck", "--seed", "0", "--count", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(
        stdout(&out)
            .lines()
            .filter(|l| l.contains(" PASS "))
            .count(),
        10
    );
}
