//! End-to-end runs of the `wxcast` binary.

use std::path::Path;
use std::process::{Command, Output};

fn wxcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wxcast")).args(args).current_dir(dir).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn synth_then_validate() {
    let dir = tempfile::tempdir().unwrap();
    let out = wxcast(&["synth", "--seed", "7", "--years", "7", "--out", "d.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = wxcast(&["validate", "d.csv"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("2557 days"));
}

#[test]
fn synth_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        assert_eq!(code(&wxcast(&["synth", "--seed", "3", "--city", "x", "--out", name], dir.path())), 0);
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.csv")).unwrap());
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = wxcast(&["--no-such-flag"], dir.path());
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&wxcast(&["grid"], dir.path())), 1);
    assert_eq!(code(&wxcast(&["train", "x.csv", "--model", "GRU", "--season", "summer", "--testing", "3"], dir.path())), 1);
    assert_eq!(code(&wxcast(&["synth", "--profile", "arctic"], dir.path())), 1);
    assert_eq!(code(&wxcast(&["--help"], dir.path())), 0);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "unknown_key = 1\n").unwrap();
    assert_eq!(code(&wxcast(&["synth", "--config", "c.toml", "--out", "d.csv"], dir.path())), 1);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wxcast(&["validate", "missing.csv"], dir.path())), 2);
    std::fs::write(dir.path().join("bad.csv"), "date,temperature_c,humidity_pct\n2019-01-01,1.0,140\n").unwrap();
    let out = wxcast(&["validate", "bad.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    // Three years cannot cover the default test year.
    assert_eq!(code(&wxcast(&["synth", "--years", "3", "--out", "short.csv"], dir.path())), 0);
    assert_eq!(code(&wxcast(&["validate", "short.csv"], dir.path())), 2);
}

#[test]
fn divergence_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wxcast(&["synth", "--out", "d.csv"], dir.path())), 0);
    let out = wxcast(
        &["train", "d.csv", "--model", "LSTM", "--season", "winter", "--testing", "3", "--lr", "1e200", "--epochs", "2"],
        dir.path(),
    );
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn train_saves_a_loadable_model() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&wxcast(&["synth", "--out", "d.csv"], dir.path())), 0);
    let out = wxcast(&["train", "d.csv", "--model", "ELM", "--season", "summer", "--testing", "4", "--out", "models"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let saved = wxcast_core::models::persist::load(dir.path().join("models/d_summer_t4_ELM.model")).unwrap();
    assert_eq!(saved.params.kind(), wxcast_core::ModelKind::Elm);
    assert_eq!(saved.spec.testing_id(), 4);
}

#[test]
fn grid_then_report_reproduces_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&wxcast(&["synth", "--seed", "2", "--out", "town.csv"], d)), 0);
    std::fs::write(
        d.join("c.toml"),
        "[grid]\ntestings = [2]\nseasons = [\"spring\"]\nepochs = [2500]\nfeedforward_learning_rates = [0.3]\nrecurrent_learning_rates = [0.003]\n",
    )
    .unwrap();
    let out = wxcast(&["grid", "town.csv", "--config", "c.toml", "--epoch-scale", "0.01", "--out", "r"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let grid = std::fs::read_to_string(d.join("r/grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 6);
    assert!(grid.lines().skip(1).all(|l| l.starts_with("town,2,spring,")));
    let out = wxcast(&["report", "r/manifest.json", "--out", "again"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for entry in std::fs::read_dir(d.join("again")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(d.join("r").join(name)).unwrap(), "{name:?}");
    }
}
