use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dwl::datasets::read_dwlm;
use dwl_cli::{load_bdr, load_dnet, RunConfig, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL, EXIT_OK};

fn dwl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dwl")).args(args).output().expect("binary runs")
}

fn code(args: &[&str]) -> i32 {
    dwl(args).status.code().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_config(dir: &Path, epochs: usize) -> std::path::PathBuf {
    let mut cfg = RunConfig::default();
    cfg.train.max_epochs = epochs;
    let path = dir.join("cfg.json");
    fs::write(&path, cfg.to_json()).unwrap();
    path
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&["--help"]), EXIT_OK);
    assert_eq!(code(&["no-such-command"]), EXIT_CONFIG);
    assert_eq!(code(&["bdr-fit", "--r", "0", "--out", p(&out)]), EXIT_CONFIG);
    assert_eq!(code(&["gen-data", "lowrank", "--d", "5", "--rank", "2", "--out", p(&out)]), EXIT_CONFIG);

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"seed": 1, "unknown": true}"#).unwrap();
    assert_eq!(code(&["train", "--config", p(&bad), "--out", p(&out)]), EXIT_CONFIG);
    assert_eq!(code(&["train", "--config", p(&tmp.path().join("missing.json")), "--out", p(&out)]), EXIT_IO);
    assert_eq!(code(&["eval", "--model", p(&tmp.path().join("nothing")), "--out", p(&out)]), EXIT_IO);

    let garbage = tmp.path().join("g.csv");
    fs::write(&garbage, "a,b,label\n1,x,0\n").unwrap();
    assert_eq!(code(&["bdr-fit", "--data", p(&garbage), "--out", p(&out)]), EXIT_IO);

    let huge = tmp.path().join("huge.csv");
    fs::write(&huge, "a,b,label\n1e200,2e200,0\n-3e200,1e200,1\n2e200,-1e200,0\n5e199,3e200,1\n").unwrap();
    assert_eq!(code(&["bdr-fit", "--data", p(&huge), "--r", "1", "--out", p(&out)]), EXIT_NUMERICAL);
}

#[test]
fn gen_data_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let blobs = tmp.path().join("blobs");
    assert_eq!(code(&["gen-data", "blobs", "--n", "10", "--k", "2", "--dim", "3", "--distractors", "1", "--out", p(&blobs)]), EXIT_OK);
    let text = fs::read_to_string(blobs.join("data.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').last(), Some("label"));
    assert_eq!(lines.count(), 20);

    let low = tmp.path().join("low");
    assert_eq!(code(&["gen-data", "lowrank", "--d", "6", "--n", "30", "--rank", "2", "--out", p(&low)]), EXIT_OK);
    assert_eq!(read_dwlm(&low.join("basis.dwlm")).unwrap().shape(), (6, 2));

    let bars = tmp.path().join("bars");
    assert_eq!(code(&["gen-data", "bars", "--size", "6", "--n", "4", "--out", p(&bars)]), EXIT_OK);
    assert_eq!(read_dwlm(&bars.join("x.dwlm")).unwrap().shape(), (8, 36));
}

#[test]
fn train_outputs_and_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 6);
    let out = tmp.path().join("run");
    assert_eq!(code(&["train", "--config", p(&cfg), "--seed", "2", "--out", p(&out)]), EXIT_OK);

    let history = fs::read_to_string(out.join("history.csv")).unwrap();
    let mut rows = history.lines();
    assert_eq!(rows.next(), Some("epoch,train_loss,train_acc,val_loss,val_acc"));
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("train_summary.json")).unwrap()).unwrap();
    assert_eq!(rows.count() as u64, summary["epochs_run"].as_u64().unwrap());

    let echoed = RunConfig::from_path(&out.join("config.json")).unwrap();
    assert_eq!(echoed.seed, 2);
    assert_eq!(echoed.train.max_epochs, 6);

    let model = load_dnet(&out.join("model")).unwrap();
    let again = tmp.path().join("resaved");
    dwl_cli::save_dnet(&again, &model, None).unwrap();
    assert_eq!(load_dnet(&again).unwrap(), model);

    let feats = tmp.path().join("feats");
    let o = dwl(&["export-features", "--config", p(&out.join("config.json")), "--model", p(&out.join("model")), "--tag", "fused", "--out", p(&feats)]);
    assert_eq!(o.status.code(), Some(EXIT_OK));
    let m = read_dwlm(&feats.join("features.dwlm")).unwrap();
    assert_eq!(m.cols(), 8 + 4);
    let line: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(line["width"].as_u64(), Some(12));
}

#[test]
fn bdr_fit_bundle_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    assert_eq!(code(&["gen-data", "lowrank", "--d", "8", "--n", "60", "--rank", "2", "--noise", "0.01", "--out", p(&tmp.path().join("d"))]), EXIT_OK);
    let data = tmp.path().join("d/data.csv");
    assert_eq!(code(&["bdr-fit", "--data", p(&data), "--r", "3", "--prior", "ard", "--out", p(&out)]), EXIT_OK);
    let model = load_bdr(&out).unwrap();
    assert_eq!(model.input_dim(), 8);
    assert_eq!(model.n_components(), 2);
    let g = model.q_orth.t_matmul(&model.q_orth).unwrap();
    assert!(g.sub(&dwl::numerics::Matrix::identity(model.n_components())).unwrap().max_abs() < 1e-10);
    assert!(load_dnet(&out).is_err());
}

#[test]
fn multi_seed_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 3);
    let out = tmp.path().join("many");
    assert_eq!(code(&["train", "--config", p(&cfg), "--seeds", "2", "--seed", "7", "--out", p(&out)]), EXIT_OK);
    assert!(out.join("seed_7/metrics.json").is_file());
    assert!(out.join("seed_8/model/manifest.json").is_file());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["seeds"], serde_json::json!([7, 8]));
}

#[test]
fn sweep_writes_rows_and_medians() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), 3);
    let out = tmp.path().join("sweep");
    assert_eq!(code(&["sweep-components", "--config", p(&cfg), "--r", "1,3", "--seeds", "2", "--out", p(&out)]), EXIT_OK);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("r,seed,r_eff,test_accuracy,epochs_to_95pct_of_best,wall_time"));
    let rest: Vec<&str> = lines.collect();
    assert_eq!(rest.iter().filter(|l| l.contains(",median,")).count(), 2);
    assert_eq!(rest.len(), 6);
}
