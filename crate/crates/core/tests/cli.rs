//! The command line, driven in process through `cli::run`.

mod common;

use std::path::Path;

use common::*;
use copypaste::cli;
use copypaste::longtail::{class_balanced_weights, instance_counts, RepeatFactorTable};
use copypaste::synthetic::SyntheticSpec;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["copypaste"];
    argv.extend_from_slice(args);
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn base_toml(seed: u64) -> String {
    format!(
        r#"target_size = [48, 48]
seed = {seed}
paste_policy = {{ kind = "random_subset", p = 0.5 }}
main_jitter = {{ kind = "lsj" }}
pasted_jitter = {{ kind = "ssj" }}

[mix.supervised]
annotations = "in/annotations.json"
images = "in/images"
"#
    )
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_synthetic(&dir.path().join("in"), &SyntheticSpec { num_images: 5, ..Default::default() });
    dir
}

#[test]
fn augment_writes_requested_samples() {
    let dir = setup();
    let cfg = write_config(dir.path(), &base_toml(1));
    let out = dir.path().join("out");
    let stats_file = dir.path().join("stats.json");
    let (code, stdout, stderr) = run(&[
        "augment", "--config", &cfg, "--out", out.to_str().unwrap(), "--num-samples", "8",
        "--stats", stats_file.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let stats: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(stats["samples_emitted"], 8);
    assert_eq!(std::fs::read_to_string(&stats_file).unwrap(), stdout);

    let json: Value = serde_json::from_str(&std::fs::read_to_string(out.join("annotations.json")).unwrap()).unwrap();
    let ids: Vec<u64> = json["images"].as_array().unwrap().iter().map(|i| i["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, (1..=8).collect::<Vec<_>>());
    assert!(json["annotations"].as_array().unwrap().iter().all(|a| ids.contains(&a["image_id"].as_u64().unwrap())));
    assert_eq!(std::fs::read_dir(out.join("images")).unwrap().count(), 8);
}

#[test]
fn augment_seed_controls_output() {
    let dir = setup();
    let cfg = write_config(dir.path(), &base_toml(0));
    let mut trees = Vec::new();
    for (name, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let out = dir.path().join(name);
        let (code, _, err) = run(&["augment", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0, "{err}");
        trees.push(tree_hashes(&out));
    }
    assert_eq!(trees[0], trees[1]);
    assert_ne!(trees[0], trees[2]);
}

#[test]
fn invalid_jitter_range_exits_2_naming_the_field() {
    let dir = setup();
    let body = base_toml(1).replace(r#"pasted_jitter = { kind = "ssj" }"#, r#"pasted_jitter = { kind = "range", min = 2.0, max = 0.5 }"#);
    let cfg = write_config(dir.path(), &body);
    let (code, _, stderr) = run(&["augment", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(stderr.contains("pasted_jitter"), "{stderr}");
}

#[test]
fn unknown_config_key_and_missing_files_exit_2() {
    let dir = setup();
    let cfg = write_config(dir.path(), &format!("blend_sigma = 3\n{}", base_toml(1)));
    let (code, _, stderr) = run(&["augment", "--config", &cfg, "--out", "x"]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("blend_sigma"), "{stderr}");

    let (code, _, _) = run(&["augment", "--config", "/nonexistent/run.toml", "--out", "x"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["rfs", "--dataset", "/nonexistent.json"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["no-such-command"]);
    assert_eq!(code, 2);
    let (code, stdout, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(stdout.contains(copypaste::VERSION));
}

#[test]
fn runtime_failures_exit_1() {
    let dir = setup();
    std::fs::write(dir.path().join("in/images/img_0.png"), b"garbage").unwrap();
    std::fs::write(dir.path().join("in/images/img_1.png"), b"garbage").unwrap();
    std::fs::write(dir.path().join("in/images/img_2.png"), b"garbage").unwrap();
    std::fs::write(dir.path().join("in/images/img_3.png"), b"garbage").unwrap();
    std::fs::write(dir.path().join("in/images/img_4.png"), b"garbage").unwrap();
    let cfg = write_config(dir.path(), &base_toml(1));
    let (code, _, stderr) = run(&["augment", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("item 0"), "{stderr}");
}

#[test]
fn rfs_and_cbweights_echo_defaults_and_match_library() {
    let dir = setup();
    let ann = dir.path().join("in/annotations.json");
    let (code, stdout, err) = run(&["rfs", "--dataset", ann.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.lines().next().unwrap().contains("t=0.001"), "{stdout}");

    let d = copypaste::annotations::load_dataset(&ann, "").unwrap();
    let table = RepeatFactorTable::build(&d, 0.001).unwrap();
    let body = stdout.lines().skip(1).collect::<Vec<_>>().join("\n");
    let mut rows = csv::Reader::from_reader(body.as_bytes());
    let parsed: Vec<copypaste::longtail::RepeatFactorRow> = rows.deserialize().map(|r| r.unwrap()).collect();
    assert_eq!(parsed, table.rows);

    let (code, stdout, _) = run(&["cbweights", "--dataset", ann.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(stdout.lines().next().unwrap().contains("beta=0.999"), "{stdout}");
    let weights = class_balanced_weights(&instance_counts(&d), 0.999).unwrap();
    let (code, json, _) = run(&["cbweights", "--dataset", ann.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let back: copypaste::longtail::ClassWeights = serde_json::from_str(&json).unwrap();
    assert_eq!(back, weights);
}

#[test]
fn rfs_single_category_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_synthetic(dir.path(), &SyntheticSpec { num_categories: 1, ..Default::default() });
    let (code, json, _) = run(&["rfs", "--dataset", files.annotations.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["threshold"], 0.001);
    assert_eq!(v["rows"][0]["frequency"], 1.0);
    assert_eq!(v["rows"][0]["repeat_factor"], 1.0);
}

#[test]
fn rfs_on_empty_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.json");
    std::fs::write(&path, r#"{"images":[],"annotations":[],"categories":[]}"#).unwrap();
    let (code, _, stderr) = run(&["rfs", "--dataset", path.to_str().unwrap()]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, _) = run(&["cbweights", "--dataset", path.to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn subcommands_are_idempotent() {
    let dir = setup();
    let ann = dir.path().join("in/annotations.json");
    for args in [
        vec!["rfs", "--dataset", ann.to_str().unwrap()],
        vec!["cbweights", "--dataset", ann.to_str().unwrap()],
        vec!["inspect", "--dataset", ann.to_str().unwrap()],
    ] {
        assert_eq!(run(&args), run(&args));
    }
}

#[test]
fn merge_pseudo_and_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let sup = write_synthetic(&dir.path().join("sup"), &SyntheticSpec { num_images: 3, ..Default::default() });
    let ps = write_synthetic(
        &dir.path().join("ps"),
        &SyntheticSpec { num_images: 4, with_scores: true, seed: 99, ..Default::default() },
    );
    let out = dir.path().join("merged.json");
    let (code, _, err) = run(&[
        "merge-pseudo", "--supervised", sup.annotations.to_str().unwrap(),
        "--supervised-images", sup.images.to_str().unwrap(),
        "--pseudo", ps.annotations.to_str().unwrap(),
        "--pseudo-images", ps.images.to_str().unwrap(),
        "--score-threshold", "0.5", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, summary, _) = run(&["inspect", "--dataset", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["images"], 7);
    let merged: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let pseudo_anns: Vec<&Value> =
        merged["annotations"].as_array().unwrap().iter().filter(|a| a["pseudo"] == true).collect();
    assert!(pseudo_anns.iter().all(|a| a["score"].as_f64().unwrap() >= 0.5));
}

#[test]
fn visualize_overlay_cases() {
    let dir = setup();
    let ann = dir.path().join("in/annotations.json");
    let images = dir.path().join("in/images");
    let png = dir.path().join("v.png");
    let (code, _, err) = run(&[
        "visualize", "--dataset", ann.to_str().unwrap(), "--images", images.to_str().unwrap(),
        "--image-id", "1", "--out", png.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(png.exists());

    let (code, _, stderr) = run(&[
        "visualize", "--dataset", ann.to_str().unwrap(), "--images", images.to_str().unwrap(),
        "--image-id", "999", "--out", png.to_str().unwrap(),
    ]);
    assert_eq!(code, 2);
    assert!(stderr.contains("999"));
}
