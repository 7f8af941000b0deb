use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/synthetic_200.csv");

fn smir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smir"))
        .args(args)
        .output()
        .expect("run smir")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn train_small(dir: &Path, extra: &[&str]) -> PathBuf {
    let out = dir.join("m.smir");
    let mut args = vec![
        "train", "--data", FIXTURE, "--epochs", "2", "--embed", "8", "--hidden", "8", "--out",
        p(&out),
    ];
    args.extend_from_slice(extra);
    let o = smir(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn stats_lists_every_tag() {
    let o = smir(&["stats", "--data", FIXTURE]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("sentences: 200"));
    for code in ["CUS", "INV", "EMP", "SOC", "material", "nonmaterial"] {
        assert!(text.contains(code), "{code} missing:\n{text}");
    }
}

#[test]
fn stats_json_counts() {
    let o = smir(&["stats", "--data", FIXTURE, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["total"], 200);
    assert_eq!(v["material"], 129);
    let positives: Vec<u64> = v["per_tag"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["positives"].as_u64().unwrap())
        .collect();
    assert_eq!(positives, [30, 42, 23, 27]);
}

#[test]
fn missing_file_exits_2() {
    let o = smir(&["stats", "--data", "/definitely/not/here.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:"));
}

#[test]
fn baseline_all_has_overall_and_four_tags() {
    let o = smir(&["baseline", "--data", FIXTURE, "--tag", "all", "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(names, ["overall", "CUS", "INV", "EMP", "SOC"]);
    assert_eq!(text.lines().next().unwrap(), "model,accuracy,recall,precision,f1");
}

#[test]
fn baseline_custom_lexicon_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.txt");
    fs::write(&lex, "[cus]\n\"policyholder*\"\n").unwrap();
    let default = smir(&["baseline", "--data", FIXTURE, "--tag", "cus", "--format", "csv"]);
    let custom = smir(&[
        "baseline", "--data", FIXTURE, "--tag", "cus", "--format", "csv", "--lexicon", p(&lex),
    ]);
    assert!(custom.status.success(), "{}", stderr(&custom));
    assert_ne!(stdout(&default), stdout(&custom));
}

#[test]
fn bad_lexicon_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let lex = dir.path().join("lex.txt");
    fs::write(&lex, "[cus]\n\"cus*tomer\"\n").unwrap();
    let o = smir(&["baseline", "--data", FIXTURE, "--lexicon", p(&lex)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn split_partitions_the_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test) = (dir.path().join("train.csv"), dir.path().join("test.csv"));
    let o = smir(&["split", "--data", FIXTURE, "--train-out", p(&train), "--test-out", p(&test)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = |path: &Path| fs::read_to_string(path).unwrap().lines().count() - 1;
    assert_eq!(rows(&train), 160);
    assert_eq!(rows(&test), 40);
}

#[test]
fn train_two_layers_then_predict_raw_text() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_small(dir.path(), &["--layers", "2"]);
    assert!(dir.path().join("m.smir.history.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.smir.report.json")).unwrap())
            .unwrap();
    assert_eq!(report["model"], "RNN (2 LSTM layers)");
    assert_eq!(report["task"], "overall");

    let doc = dir.path().join("doc.txt");
    fs::write(&doc, "The Company serves its customers. Net income rose.\nWe hired workers.").unwrap();
    let o = smir(&["predict", "--checkpoint", p(&model), "--text", p(&doc)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,sentence,probability,material");
    assert_eq!(lines.len(), 4);
    assert!(lines[2].starts_with("2,Net income rose.,"));
}

#[test]
fn history_has_train_and_validation_rows() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path(), &[]);
    let history = fs::read_to_string(dir.path().join("m.smir.history.csv")).unwrap();
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,split,accuracy,recall,precision,f1,loss");
    assert_eq!(lines.len(), 1 + 2 * 2);
    assert!(lines[1].starts_with("1,train,"));
    assert!(lines[2].starts_with("1,validation,"));
}

#[test]
fn predict_empty_data_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_small(dir.path(), &[]);
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let o = smir(&["predict", "--checkpoint", p(&model), "--data", p(&empty)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "id,probability");
}

#[test]
fn predict_requires_exactly_one_input() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("x.smir");
    let both = smir(&[
        "predict", "--checkpoint", p(&ckpt), "--data", FIXTURE, "--text", FIXTURE,
    ]);
    assert_eq!(both.status.code(), Some(2));
    let neither = smir(&["predict", "--checkpoint", p(&ckpt)]);
    assert_eq!(neither.status.code(), Some(2));
}

#[test]
fn predictions_file_scores_like_the_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let model = train_small(dir.path(), &[]);
    let preds = dir.path().join("preds.csv");
    let o = smir(&[
        "predict", "--checkpoint", p(&model), "--data", FIXTURE, "--out", p(&preds),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = smir(&[
        "compare", "--data", FIXTURE, "--baseline",
        "--checkpoint", &format!("lstm={}", p(&model)),
        "--predictions", &format!("external={}", p(&preds)),
        "--format", "csv",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("rule-based (baseline),"));
    let metrics = |row: &str| row.split_once(',').unwrap().1.to_string();
    assert_eq!(metrics(rows[1]), metrics(rows[2]));

    let stray = dir.path().join("stray.csv");
    fs::write(&stray, format!("{}nobody,0.5\n", fs::read_to_string(&preds).unwrap())).unwrap();
    let o = smir(&["compare", "--data", FIXTURE, "--predictions", p(&stray)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nobody"), "{}", stderr(&o));
}

#[test]
fn compare_rejects_reports_for_other_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("soc.json");
    fs::write(
        &report,
        r#"{"model":"m","task":"soc","accuracy":1,"recall":1,"precision":1,"f1":1,
            "counts":{"tp":1,"fp":0,"tn":0,"fn":0}}"#,
    )
    .unwrap();
    let o = smir(&["compare", "--data", FIXTURE, "--report", p(&report)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("soc"), "{}", stderr(&o));
}

#[test]
fn strict_turns_warnings_into_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("no_soc.csv");
    let mut csv = String::from("id,text,material,cus,inv,emp,soc\n");
    for i in 0..40 {
        let material = i % 2;
        csv.push_str(&format!("s{i},customers sentence number {i},{material},{material},0,0,0\n"));
    }
    fs::write(&data, csv).unwrap();
    let out = dir.path().join("m.smir");
    let base = [
        "train", "--data", p(&data), "--task", "soc", "--epochs", "1", "--embed", "4",
        "--hidden", "4", "--out", p(&out),
    ];
    let lenient = smir(&base);
    assert_eq!(lenient.status.code(), Some(0));
    assert!(stderr(&lenient).contains("warning:"));
    let mut strict = base.to_vec();
    strict.push("--strict");
    assert_eq!(smir(&strict).status.code(), Some(1));
}

#[test]
fn invalid_rows_are_rejected_with_row_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "id,text,material,cus,inv,emp,soc\na,fine,1,1,0,0,0\nb,tags without material,0,1,0,0,0\n").unwrap();
    let o = smir(&["stats", "--data", p(&data)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains('3'), "{}", stderr(&o));
}

#[test]
fn train_all_writes_one_checkpoint_per_stakeholder() {
    let dir = tempfile::tempdir().unwrap();
    train_small(dir.path(), &["--task", "all"]);
    for code in ["cus", "inv", "emp", "soc"] {
        assert!(dir.path().join(format!("m_{code}.smir")).exists(), "{code}");
    }
}
