use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use halluc_core::eval::{AmberAnnotation, AmberResponse, Gold, ObjectLexicon, PopeDataset, PopeItem, PopeSampling};
use halluc_core::jsonl;
use halluc_core::model::{GeneratedResponse, Language, QueryRecord, ScoreRecord};
use halluc_core::pipeline::sha256_file;

fn halluc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halluc"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .env_remove("HALLUC_CONFIG")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn failed(out: Output) -> String {
    assert!(!out.status.success(), "expected failure");
    String::from_utf8(out.stderr).unwrap()
}

const THREE: &[&str] = &["--languages", "ru,uk,zh", "--seed", "5"];

fn with(base: &[&str], rest: &[&str]) -> Vec<String> {
    base.iter().chain(rest).map(|s| s.to_string()).collect()
}

fn run(dir: &Path, args: Vec<String>) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    halluc(dir, &refs)
}

#[test]
fn mock_generate_counts_and_digest() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    ok(run(&a, with(THREE, &["generate"])));
    ok(run(&b, with(THREE, &["--threads", "1", "generate"])));
    let responses: Vec<GeneratedResponse> = jsonl::read(&a.join("responses.jsonl")).unwrap();
    assert_eq!(responses.len(), 10 * 3 * 20);
    assert_eq!(
        sha256_file(&a.join("responses.jsonl")).unwrap(),
        sha256_file(&b.join("responses.jsonl")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("generate.manifest.json")).unwrap(),
        std::fs::read(b.join("generate.manifest.json")).unwrap()
    );
}

#[test]
fn external_responses_with_gaps_exit_nonzero() {
    let tmp = tempfile::tempdir().unwrap();
    let mock = tmp.path().join("mock");
    ok(run(&mock, with(THREE, &["generate"])));
    let mut responses: Vec<GeneratedResponse> = jsonl::read(&mock.join("responses.jsonl")).unwrap();
    responses.retain(|r| !(r.query_id == "q00001" && r.language == Language::Uk && r.index == 7));
    let external = tmp.path().join("external.jsonl");
    jsonl::write(&external, &responses).unwrap();

    let ext = tmp.path().join("ext");
    let queries = mock.join("queries.jsonl");
    let args = ["generate", "--queries", queries.to_str().unwrap(), "--responses", external.to_str().unwrap()];
    let err = failed(run(&ext, with(THREE, &args)));
    assert!(err.contains("1 gaps"), "{err}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ext.join("contract_report.json")).unwrap()).unwrap();
    assert_eq!(
        report["gaps"],
        serde_json::json!([{"query_id": "q00001", "language": "uk", "index": 7}])
    );
}

#[test]
fn bleu_on_faithful_only_gives_zero_d_nh() {
    let tmp = tempfile::tempdir().unwrap();
    let templates = tmp.path().join("templates.json");
    let mut set: serde_json::Value = serde_json::from_str(include_str!("../../core/data/mock_templates.json")).unwrap();
    set["english"]["faithful"] = serde_json::json!(["{answer}"]);
    std::fs::write(&templates, set.to_string()).unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(
        &config,
        format!(
            "[generation]\nhallucination_rate = 0.0\ninvalid_rate = 0.0\ntemplates = {:?}\n",
            templates.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = tmp.path().join("run");
    let base = with(THREE, &["--config", config.to_str().unwrap(), "--scorer", "bleu"]);
    ok(run(&out, [base.clone(), vec!["generate".into()]].concat()));
    ok(run(&out, [base, vec!["score".into()]].concat()));
    let scores: Vec<ScoreRecord> = jsonl::read(&out.join("scores.jsonl")).unwrap();
    assert_eq!(scores.len(), 600);
    assert!(scores.iter().all(|s| s.d_nh == 0.0 && s.d_h > 0.0));
}

#[test]
fn external_loss_without_sidecars_is_summarized() {
    let tmp = tempfile::tempdir().unwrap();
    ok(run(tmp.path(), with(THREE, &["generate"])));
    let err = failed(run(tmp.path(), with(THREE, &["--scorer", "external-loss", "score"])));
    assert!(err.contains("600 of 600"), "{err}");
    let listing = std::fs::read_to_string(tmp.path().join("score_errors.txt")).unwrap();
    assert_eq!(listing.lines().count(), 600);
    assert!(listing.lines().next().unwrap().contains("missing score input for (q00001, ru, 1)"));
}

#[test]
fn pair_build_rejects_small_n_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let err = failed(run(tmp.path(), with(THREE, &["--k", "3", "--n", "5", "generate"])));
    assert!(err.contains("insufficient responses"), "{err}");

    for dir in ["x", "y"] {
        let d = tmp.path().join(dir);
        for stage in ["generate", "score", "build-pairs"] {
            ok(run(&d, with(THREE, &[stage])));
        }
    }
    assert_eq!(
        sha256_file(&tmp.path().join("x/pairs.jsonl")).unwrap(),
        sha256_file(&tmp.path().join("y/pairs.jsonl")).unwrap()
    );
}

#[test]
fn full_chain_with_report() {
    let tmp = tempfile::tempdir().unwrap();
    for stage in ["generate", "score", "build-pairs"] {
        ok(run(tmp.path(), with(THREE, &[stage])));
    }
    ok(run(tmp.path(), with(THREE, &["mix", "--count", "320"])));
    let summary: serde_json::Value = serde_json::from_str(&ok(run(tmp.path(), with(THREE, &["train"])))).unwrap();
    assert_eq!(summary["pairs"], 320);
    assert_eq!(summary["exhausted"], true);
    let text = ok(run(tmp.path(), with(THREE, &["report"])));
    assert!(text.contains("[train]"));
    assert!(tmp.path().join("report.json").exists());
}

fn schema() -> jsonschema::Validator {
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../../../schemas/eval_report.schema.json")).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_schema_valid(path: &Path) {
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let errors: Vec<String> = schema().iter_errors(&report).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{}: {errors:?}", path.display());
}

fn pope_items(path: &Path) {
    let answers = [(Language::En, "Yes.", "No."), (Language::Zh, "是的", "没有"), (Language::Bg, "Да", "Не")];
    let mut items = Vec::new();
    for (i, (lang, yes, no)) in answers.iter().cycle().take(120).enumerate() {
        let gold = if i % 2 == 0 { Gold::Yes } else { Gold::No };
        items.push(PopeItem {
            id: format!("p{i}"),
            language: *lang,
            dataset: PopeDataset::ALL[i % 3],
            sampling: PopeSampling::ALL[(i / 3) % 3],
            gold,
            prediction_text: (if gold == Gold::Yes { yes } else { no }).to_string(),
        });
    }
    jsonl::write(path, &items).unwrap();
}

#[test]
fn pope_gold_equal_predictions_report_all_ones() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("pope.jsonl");
    pope_items(&input);
    let table = ok(halluc(tmp.path(), &["eval", "pope", "--input", input.to_str().unwrap(), "--csv"]));
    assert!(table.starts_with("pope\n"));
    let path = tmp.path().join("eval_pope.json");
    assert_schema_valid(&path);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    for row in report["rows"].as_array().unwrap() {
        for m in ["accuracy", "precision", "recall", "f1"] {
            assert_eq!(row["metrics"][m], 1.0, "{row}");
        }
        assert_eq!(row["metrics"]["unknown_prop"], 0.0);
    }
    assert!(tmp.path().join("eval_pope.csv").exists());
}

#[test]
fn mme_report_is_schema_valid() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("mme.jsonl");
    let lines = [
        r#"{"image_id":"a","subtask":"count","question_index":1,"gold":"yes","prediction_text":"Yes"}"#,
        r#"{"image_id":"a","subtask":"count","question_index":2,"gold":"no","prediction_text":"No"}"#,
        r#"{"image_id":"b","subtask":"count","question_index":1,"gold":"yes","prediction_text":"Yes"}"#,
        r#"{"image_id":"b","subtask":"count","question_index":2,"gold":"no","prediction_text":"Yes"}"#,
    ];
    std::fs::write(&input, lines.join("\n") + "\n").unwrap();
    let table = ok(halluc(tmp.path(), &["eval", "mme", "--input", input.to_str().unwrap()]));
    assert!(table.contains("125.0000"), "{table}");
    assert_schema_valid(&tmp.path().join("eval_mme.json"));

    std::fs::write(&input, lines[..3].join("\n") + "\n").unwrap();
    let err = failed(halluc(tmp.path(), &["eval", "mme", "--input", input.to_str().unwrap()]));
    assert!(err.contains("unpaired"), "{err}");
}

#[test]
fn amber_on_mock_hallucinated_captions() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("run.toml");
    std::fs::write(&config, "[generation]\nhallucination_rate = 1.0\ninvalid_rate = 0.0\n").unwrap();
    let cfg = config.to_str().unwrap();
    ok(halluc(tmp.path(), &["--config", cfg, "--languages", "en", "generate"]));

    let queries: Vec<QueryRecord> = jsonl::read(&tmp.path().join("queries.jsonl")).unwrap();
    let responses: Vec<GeneratedResponse> = jsonl::read(&tmp.path().join("responses.jsonl")).unwrap();
    let en = ObjectLexicon::default().matcher(Language::En).unwrap();
    let annotations: Vec<AmberAnnotation> = queries
        .iter()
        .map(|q| AmberAnnotation {
            image_id: q.image_ref.clone(),
            truth_objects: en.find_all(&q.answer_nh).into_iter().collect::<BTreeSet<_>>(),
        })
        .collect();
    let image_of = |id: &str| queries.iter().find(|q| q.id == id).unwrap().image_ref.clone();
    let captions: Vec<AmberResponse> = responses
        .iter()
        .map(|r| AmberResponse {
            language: r.language,
            image_id: image_of(&r.query_id),
            caption: r.text.clone(),
        })
        .collect();
    let (cap_path, ann_path): (PathBuf, PathBuf) = (tmp.path().join("captions.jsonl"), tmp.path().join("ann.jsonl"));
    jsonl::write(&cap_path, &captions).unwrap();
    jsonl::write(&ann_path, &annotations).unwrap();

    ok(halluc(
        tmp.path(),
        &["eval", "amber", "--input", cap_path.to_str().unwrap(), "--annotations", ann_path.to_str().unwrap()],
    ));
    let path = tmp.path().join("eval_amber.json");
    assert_schema_valid(&path);
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let row = &report["rows"][0];
    assert_eq!(row["language"], "en");
    assert_eq!(row["metrics"]["hal"], 1.0);
    assert_eq!(row["metrics"]["qc"], 1.0);
}

#[test]
fn config_from_environment_and_bad_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("env.toml");
    std::fs::write(&config, "languages = [\"tr\"]\nn = 6\nk = 2\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_halluc"))
        .args(["--out-dir", tmp.path().to_str().unwrap(), "generate"])
        .env("HALLUC_CONFIG", &config)
        .output()
        .unwrap();
    let summary: serde_json::Value = serde_json::from_str(&ok(out)).unwrap();
    assert_eq!(summary["records"], 10 * 6);
    assert_eq!(summary["languages"], serde_json::json!(["tr"]));

    let err = failed(halluc(tmp.path(), &["--languages", "xx", "generate"]));
    assert!(err.contains("unknown language"), "{err}");
    let err = failed(halluc(tmp.path(), &["--scorer", "meteor", "score"]));
    assert!(err.to_lowercase().contains("scorer"), "{err}");
}
