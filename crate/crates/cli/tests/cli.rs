use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn fairdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairdiv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn minimize_gini_on_crossed_pair() {
    let o = fairdiv(&["minimize", path(&fixture("two_agent_crossed.json")), "--index", "gini"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("value: 0\n"), "{text}");
    assert!(text.contains("allocation: [0, 1]  (o1->a1, o2->a2)"), "{text}");
}

#[test]
fn eval_car_rental_everyone_gets_one() {
    let o = fairdiv(&[
        "eval",
        path(&fixture("car_rental.json")),
        path(&fixture("car_rental_ones.json")),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("gini: 0\n"));
    assert!(text.contains("subjective_gini: 23/55\n"), "{text}");
    assert!(text.contains("envy_free: false"));

    let o = fairdiv(&[
        "eval",
        path(&fixture("car_rental.json")),
        path(&fixture("car_rental_eights.json")),
        "--decimal",
    ]);
    assert!(stdout(&o).contains("subjective_gini: 0.336364\n"));
}

#[test]
fn minimize_all_lists_every_minimizer() {
    let o = fairdiv(&[
        "minimize",
        path(&fixture("subjective_gini_not_pareto.json")),
        "--index",
        "subjgini",
        "--all",
    ]);
    let text = stdout(&o);
    assert!(text.contains("minimizers: 2\n"), "{text}");
    assert_eq!(text.matches("allocation:").count(), 2);
}

#[test]
fn every_fixture_evaluates_and_minimizes() {
    let dir = fixture("");
    let tmp = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        if name.starts_with("car_rental_") {
            continue; // allocation files
        }
        let o = fairdiv(&["minimize", path(&p), "--index", "envy"]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let first = stdout(&o)
            .lines()
            .find(|l| l.starts_with("allocation: "))
            .unwrap()
            .trim_start_matches("allocation: ")
            .split("  ")
            .next()
            .unwrap()
            .to_string();
        let alloc = tmp.path().join(format!("{name}.alloc.json"));
        std::fs::write(&alloc, first).unwrap();
        let o = fairdiv(&["eval", path(&p), path(&alloc)]);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn gen_writes_valid_instances_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty.json");
    let o = fairdiv(&["gen", "--agents", "1", "--items", "0", "--max-util", "3", "--seed", "1", "-o", path(&empty)]);
    assert!(o.status.success());
    let o = fairdiv(&["minimize", path(&empty), "--index", "gini"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("value: 0\n"));

    let a = fairdiv(&["gen", "--agents", "3", "--items", "5", "--seed", "9"]);
    let b = fairdiv(&["gen", "--agents", "3", "--items", "5", "--seed", "9"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn online_runs_are_reproducible_and_traced() {
    let tmp = tempfile::tempdir().unwrap();
    let inst = fixture("envy_mechanism_utilitarian.json");
    let trace = tmp.path().join("trace.tsv");
    let args = ["online", path(&inst), "--mechanism", "envy", "--seed", "4", "--order", "random"];
    let a = fairdiv(&[&args[..], &["--trace", path(&trace)]].concat());
    let b = fairdiv(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("utilitarian: 7\n"));
    let lines = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(lines.lines().count(), 5);

    let sampled = fairdiv(&["online", path(&inst), "--mechanism", "gini", "--samples", "50", "--seed", "2"]);
    assert!(stdout(&sampled).contains("samples: 50\n"));
}

#[test]
fn support_prints_the_distribution() {
    let o = fairdiv(&["support", path(&fixture("gini_mechanism_ratio.json")), "--mechanism", "gini"]);
    let text = stdout(&o);
    assert!(text.starts_with("outcomes: 2\n"), "{text}");
    assert!(text.contains("1/2\t2\t1\t[0, 1]"));
    assert!(text.contains("1/2\t1/2\t1/4\t[1, 0]"));
}

#[test]
fn experiment_writes_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        "num_agents = 3\nitem_counts = [4]\nmax_util = \"m\"\ninstance_count = 2\nsample_count = 10\nmaster_seed = 1\n",
    )
    .unwrap();
    let csv = tmp.path().join("out.csv");
    let o = fairdiv(&["experiment", "--config", path(&cfg), "-o", path(&csv)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("mechanism,n,m,gini,subj_gini,envy,util_ratio,egal_ratio,"));
}

#[test]
fn exit_codes() {
    assert_eq!(fairdiv(&["minimize", "--index", "nope", "x.json"]).status.code(), Some(2));
    assert_eq!(fairdiv(&[]).status.code(), Some(2));
    let missing = fairdiv(&["eval", "missing.json", "missing-too.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("missing.json"));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"bids": [[1, -2]]}"#).unwrap();
    let o = fairdiv(&["minimize", path(&bad), "--index", "gini"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("negative"));

    let o = fairdiv(&["eval", path(&fixture("car_rental.json")), path(&fixture("two_agent_crossed.json"))]);
    assert_eq!(o.status.code(), Some(1));
}
