mod common;

use std::path::Path;

use common::{fixture_dir, relations, run_cli, ConnectionCounter};
use serde_json::Value;

fn s(p: &Path) -> String {
    p.display().to_string()
}

fn kgqa(name: &str) -> String {
    s(&fixture_dir("kgqa20").join(name))
}

fn offline_run() -> Vec<String> {
    vec![
        "--offline".into(),
        "--train".into(),
        kgqa("train.json"),
        "--fixtures".into(),
        kgqa("linking"),
        "--graph".into(),
        kgqa("graph.nt"),
    ]
}

fn run_owned(args: &[String]) -> (i32, String) {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_cli(&refs)
}

fn with_input(args: &[&str], input: &str) -> (i32, String) {
    let mut out = Vec::new();
    let mut input = input.as_bytes();
    let code = dblp_kgqa::cli::run(std::iter::once("dblp-kgqa").chain(args.iter().copied()), &mut out, &mut input);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn offline_mode_opens_no_connections() {
    let api = ConnectionCounter::start();
    let model = ConnectionCounter::start();
    let endpoint = ConnectionCounter::start();
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    std::fs::write(
        &config,
        format!("[endpoint]\nurl = \"{}/sparql\"\n[translator]\nserver_url = \"{}\"\n", endpoint.url(), model.url()),
    )
    .unwrap();

    let mut args = vec!["--config".to_string(), s(&config), "ask".into(), "--question".into()];
    args.push("Which papers did Luca Rossetto write?".into());
    args.extend(offline_run());
    args.extend(["--api-base-url".into(), api.url()]);
    let (code, out) = run_owned(&args);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("https://dblp.org/rec/"), "{out}");

    // A mention without a fixture is an error, not a network request.
    args[4] = "Which papers did Nobody Known write?".into();
    let (code, _) = run_owned(&args);
    assert_eq!(code, 0);

    std::thread::sleep(std::time::Duration::from_millis(50));
    assert_eq!((api.connections(), model.connections(), endpoint.connections()), (0, 0, 0));
}

#[test]
fn usage_errors_exit_with_two() {
    let mut args: Vec<String> = vec!["ask".into(), "--question".into(), "q".into(), "--backend".into(), "neural".into()];
    args.extend(offline_run());
    assert_eq!(run_owned(&args).0, 2, "neural backend is not allowed offline");

    let (code, _) = run_cli(&["ask", "--question", "q", "--offline", "--graph", &kgqa("graph.nt")]);
    assert_eq!(code, 2, "no templates and no training data");

    let (code, _) = run_cli(&["ask"]);
    assert_eq!(code, 2);
    let (code, _) = run_cli(&["no-such-command"]);
    assert_eq!(code, 2);
    let (code, out) = run_cli(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("build-templates"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[pipeline]\nunknown_key = 1\n").unwrap();
    let (code, _) = run_cli(&["--config", &s(&bad), "vocab"]);
    assert_eq!(code, 2);
}

#[test]
fn vocab_lists_relations_and_keywords() {
    let (code, out) = run_cli(&["vocab"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines.contains(&"ORDER BY"), "{out}");
    for r in relations() {
        assert!(lines.iter().any(|l| l.contains(r.as_str())), "missing {r}");
    }
}

#[test]
fn link_prints_ranked_candidates_from_fixtures() {
    let (code, out) = run_cli(&["link", "--mention", "Ann Lee", "--fixtures", &kgqa("linking")]);
    assert_eq!(code, 0, "{out}");
    let first: Vec<&str> = out.lines().next().unwrap().split('\t').collect();
    assert_eq!(first[0], "1");
    assert!(first[1].starts_with("https://dblp.org/pid/"));
    assert!(out.lines().count() >= 2, "homonym expected: {out}");
}

#[test]
fn batch_resume_and_parallel_output() {
    let dir = tempfile::tempdir().unwrap();
    let answers = dir.path().join("answers.json");
    let entities = dir.path().join("entities.json");
    let batch = |answers: &Path, entities: &Path, extra: &[&str]| {
        let mut args = vec![
            "batch".to_string(),
            "--questions".into(),
            kgqa("questions.json"),
            "--out-answers".into(),
            s(answers),
            "--out-entities".into(),
            s(entities),
        ];
        args.extend(offline_run());
        args.extend(extra.iter().map(|a| a.to_string()));
        run_owned(&args)
    };

    let (code, out) = batch(&answers, &entities, &[]);
    assert_eq!(code, 0, "{out}");
    let sequential = std::fs::read(&answers).unwrap();

    let par_answers = dir.path().join("par.json");
    let par_entities = dir.path().join("par_e.json");
    assert_eq!(batch(&par_answers, &par_entities, &["--jobs", "2"]).0, 0);
    assert_eq!(std::fs::read(&par_answers).unwrap(), sequential);
    assert_eq!(std::fs::read(&par_entities).unwrap(), std::fs::read(&entities).unwrap());

    // Seed a sentinel answer for q01; resume must keep it untouched.
    let mut seeded: Vec<Value> = serde_json::from_slice(&sequential).unwrap();
    seeded.retain(|e| e["id"] == "q01");
    seeded[0]["answers"] = serde_json::json!(["sentinel"]);
    std::fs::write(&answers, serde_json::to_vec(&seeded).unwrap()).unwrap();
    let (code, out) = batch(&answers, &entities, &["--resume"]);
    assert_eq!(code, 0);
    assert!(out.contains("1 kept from a previous run"), "{out}");
    let resumed: Vec<Value> = serde_json::from_slice(&std::fs::read(&answers).unwrap()).unwrap();
    assert_eq!(resumed.len(), 20);
    let q01 = resumed.iter().find(|e| e["id"] == "q01").unwrap();
    assert_eq!(q01["answers"], serde_json::json!(["sentinel"]));
}

#[test]
fn eval_rejects_unknown_ids() {
    let dir = tempfile::tempdir().unwrap();
    let answers = dir.path().join("a.json");
    let entities = dir.path().join("e.json");
    std::fs::write(&answers, r#"[{"id": "zz99", "answers": ["1"]}]"#).unwrap();
    std::fs::write(&entities, r#"[{"id": "zz99", "entities": []}]"#).unwrap();
    let (code, _) = run_cli(&[
        "eval",
        "--pred-answers",
        &s(&answers),
        "--pred-entities",
        &s(&entities),
        "--gold",
        &kgqa("gold.json"),
    ]);
    assert_eq!(code, 2);
}

#[test]
fn config_paths_are_relative_to_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for name in ["train.json", "graph.nt"] {
        std::fs::copy(kgqa(name), data.join(name)).unwrap();
    }
    let config = dir.path().join("conf.toml");
    std::fs::write(
        &config,
        format!(
            "train = \"data/train.json\"\noffline = true\n[endpoint]\ngraph = \"data/graph.nt\"\n[linker]\nfixture_path = \"{}\"\n",
            kgqa("linking").replace('\\', "/")
        ),
    )
    .unwrap();
    let (code, out) = run_cli(&[
        "--config",
        &s(&config),
        "ask",
        "--question",
        "How many papers did Ruijie Wang and Luca Rossetto write together?",
    ]);
    assert_eq!(code, 0, "{out}");
    assert_eq!(out, "1\n");
}

#[test]
fn repl_answers_each_line() {
    let mut args = vec!["ask".to_string(), "--repl".into()];
    args.extend(offline_run());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    let input = "How many papers did Ruijie Wang and Luca Rossetto write together?\n\n   \nWhich papers did Nobody Known write?\n";
    let (code, out) = with_input(&refs, input);
    assert_eq!(code, 0, "{out}");
    assert!(out.starts_with("> 1\n"), "{out}");
    assert_eq!(out.matches("> ").count(), 5, "{out}");
    assert!(out.contains("no answer") || out.contains("error"), "{out}");
}

#[test]
fn verbose_ask_prints_every_step() {
    let mut args = vec!["-v".to_string(), "ask".into(), "--question".into()];
    args.push("How many papers did Ruijie Wang and Luca Rossetto write together?".into());
    args.extend(offline_run());
    let (code, out) = run_owned(&args);
    assert_eq!(code, 0);
    for step in ["Step I ", "Step II ", "Step III ", "Step IV "] {
        assert!(out.contains(step), "missing {step}: {out}");
    }
}
