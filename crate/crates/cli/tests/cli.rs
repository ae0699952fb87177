use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossgreed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: stdout {:?} stderr {:?}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const LANGUAGE_COUNTRY: &str =
    "language,country,label\nEnglish,Scotland,1\nSpanish,Mexico,1\nEnglish,Mexico,0\nSpanish,Scotland,0\n";

#[test]
fn crossed_example_search_flags_the_assumption() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "lc.csv", LANGUAGE_COUNTRY);
    let out = run(&[
        "search",
        "--dataset",
        &data,
        "--k",
        "2",
        "--method",
        "greedy",
        "--pad-to-k",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["schema_version"], "1");
    assert_eq!(r["command"], "search");
    assert_eq!(
        r["selection"]["selected_names"],
        serde_json::json!(["language", "country"])
    );
    assert_eq!(r["normalized_auc"]["exact"], "0");
    let check = &r["assumption_check"];
    assert_eq!(check["status"], "failed");
    assert_eq!(check["assumption_gap"]["exact"], "1/4");
    assert_eq!(check["joint_normalized_auc"]["exact"], "1");

    // Without padding the zero first-step gains stop the search.
    let r = json_of(&run(&["search", "--dataset", &data, "--k", "2", "--method", "greedy"]));
    assert_eq!(r["selection"]["early_stopped"], true);
    assert_eq!(r["assumption_check"]["status"], "failed");
}

#[test]
fn crossed_example_eval() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "lc.csv", LANGUAGE_COUNTRY);
    let r = json_of(&run(&["eval", "--dataset", &data, "--columns", "language,country"]));
    assert_eq!(r["joint_auc_star"]["exact"], "1");
    assert_eq!(r["naive_bayes_auc_star"]["exact"], "1/2");
    assert_eq!(r["assumption_gap"]["exact"], "1/4");
    assert_eq!(r["mutual_information"]["exact"], "1");
}

#[test]
fn independent_columns_agree_on_both_paths() {
    // Every (a, b) cell appears once per label, so a and b are independent given the label.
    let mut text = String::from("a,b,y\n");
    for y in 0..2 {
        for a in ["p", "q"] {
            for b in ["r", "s", "t"] {
                let reps = if y == 1 && a == "p" { 2 } else { 1 };
                for _ in 0..reps {
                    text.push_str(&format!("{a},{b},{y}\n"));
                }
            }
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "ind.csv", &text);
    let r = json_of(&run(&["eval", "--dataset", &data, "--columns", "a,b", "--label", "y"]));
    assert_eq!(r["assumption_gap"]["exact"], "0");
    assert_eq!(r["assumption_check"], "passed");
    assert_eq!(r["auc_paths_agree"], true);
    assert_eq!(r["joint_auc_star"], r["naive_bayes_auc_star"]);
}

#[test]
fn graph_eval_on_an_edge() {
    let dir = tempfile::tempdir().unwrap();
    let g = write(dir.path(), "g.txt", "0 1\n1 2\n2 3\n");
    let r = json_of(&run(&["eval", "--graph", &g, "--subset", "1,2"]));
    let red = &r["reduction"];
    assert_eq!(red["phi"]["exact"], "1/3");
    assert_eq!(red["mi_exact"], "1/3");
    assert_eq!(red["normalized_auc"]["exact"], "5/9");
    assert_eq!(red["consistent"], true);
}

#[test]
fn gen_hard_writes_both_row_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let exact = dir.path().join("exact.csv");
    let out = run(&[
        "gen-hard",
        "--family",
        "complete",
        "--n",
        "3",
        "--subset",
        "0,1",
        "--rows-out",
        exact.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["reduction"]["phi"]["exact"], "1/3");
    assert_eq!(r["rows_out"]["rows"], 12);
    let text = std::fs::read_to_string(&exact).unwrap();
    assert!(text.starts_with("x0,x1,x2,label,mass\n"));

    let sampled = dir.path().join("s.csv");
    let out = run(&[
        "gen-hard",
        "--family",
        "path",
        "--n",
        "4",
        "--sample",
        "25",
        "--seed",
        "3",
        "--rows-out",
        sampled.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&sampled).unwrap().lines().count(), 26);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = run(&["search", "--dataset", missing.to_str().unwrap(), "--k", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));

    let data = write(dir.path(), "lc.csv", LANGUAGE_COUNTRY);
    let out = run(&["eval", "--dataset", &data, "--columns", "language,planet"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "search",
        "--synthetic",
        "6",
        "--max-vocab",
        "6",
        "--k",
        "6",
        "--atom-cap",
        "10",
        "--pad-to-k",
    ]);
    assert_eq!(out.status.code(), Some(3));

    let bad = write(dir.path(), "bad.txt", "0 x\n");
    assert_eq!(run(&["gen-hard", "--graph", &bad]).status.code(), Some(2));
}

#[test]
fn zero_budget_gives_an_empty_selection() {
    let r = json_of(&run(&["search", "--synthetic", "5", "--k", "0"]));
    assert_eq!(r["selection"]["selected"], serde_json::json!([]));
    assert_eq!(r["normalized_auc"]["exact"], "0");
}

#[test]
fn verify_theory_paths() {
    let out = run(&["verify-theory", "--trials", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json_of(&out);
    assert_eq!(r["summary"], serde_json::json!({}));
    assert_eq!(r["passed"], true);

    let out = run(&["verify-theory", "--trials", "30", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["verify-theory", "--trials", "30", "--corrupt-m-tilde"]);
    assert_eq!(out.status.code(), Some(1));
    let r = json_of(&out);
    assert_eq!(r["failures"][0]["section"], "m_tilde_nonnegative");
    assert!(r["failures"][0]["instance"].as_str().unwrap().starts_with("r="));
}

#[test]
fn out_flag_writes_the_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = run(&[
        "search",
        "--synthetic",
        "4",
        "--k",
        "2",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(r["command"], "search");
}
