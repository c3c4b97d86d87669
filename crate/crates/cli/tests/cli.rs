use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn biocomp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biocomp"))
        .current_dir(dir)
        .env_remove("BIOCOMP_SEED")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Small corpus of heart and EDA channels only.
fn small_corpus(dir: &Path, n: usize, extra: &str) {
    fs::write(
        dir.join("pipeline.toml"),
        format!("corpus_root = \"corpus\"\noutput_dir = \"out\"\n\n[synth]\nchannels = [\"BVP\", \"EDA\"]\n{extra}"),
    )
    .unwrap();
    let out = biocomp(dir, &["synth", "--config", "pipeline.toml", "--n", &n.to_string()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn synth_then_validate() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(tmp.path(), 4, "");
    let stdout = String::from_utf8(biocomp(tmp.path(), &["validate", "--config", "pipeline.toml"]).stdout).unwrap();
    assert!(stdout.contains("4 sessions"), "{stdout}");
    let report = fs::read_to_string(tmp.path().join("out/validation.json")).unwrap();
    assert!(report.contains("P04"));
    assert_eq!(fs::read_dir(tmp.path().join("corpus")).unwrap().count(), 4);

    let again = biocomp(tmp.path(), &["synth", "--config", "pipeline.toml", "--n", "4"]);
    assert_eq!(code(&again), 2);
}

#[test]
fn synth_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["a", "b"] {
        let out = biocomp(tmp.path(), &["synth", "--n", "2", "--seed", "7", "--corpus", name]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for id in ["P01", "P02"] {
        for file in ["manifest.json", "BVP.csv", "EEG_RAW.csv", "EDA.csv"] {
            let a = fs::read(tmp.path().join("a").join(id).join(file)).unwrap();
            let b = fs::read(tmp.path().join("b").join(id).join(file)).unwrap();
            assert!(a == b, "{id}/{file} differs");
        }
    }
    let other = biocomp(tmp.path(), &["synth", "--n", "2", "--seed", "8", "--corpus", "c"]);
    assert_eq!(code(&other), 0);
    assert_ne!(
        fs::read(tmp.path().join("a/P01/BVP.csv")).unwrap(),
        fs::read(tmp.path().join("c/P01/BVP.csv")).unwrap()
    );
}

#[test]
fn invalid_corpora_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = biocomp(tmp.path(), &["validate", "--corpus", "empty", "--out", "o1"]);
    assert_eq!(code(&out), 2);
    assert!(fs::read_to_string(tmp.path().join("o1/validation.json"))
        .unwrap()
        .contains("no sessions"));

    small_corpus(tmp.path(), 2, "");
    fs::write(tmp.path().join("corpus/P02/BVP.csv"), "1600000000\nsixty-four\n0.1\n").unwrap();
    let out = biocomp(tmp.path(), &["validate", "--config", "pipeline.toml", "--out", "o2"]);
    assert_eq!(code(&out), 2);
    let report = fs::read_to_string(tmp.path().join("o2/validation.json")).unwrap();
    assert!(report.contains("BVP.csv"), "{report}");
    assert!(stderr(&out).contains("BVP.csv"));
}

#[test]
fn missing_eeg_channel_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(tmp.path(), 2, "");
    let out = biocomp(
        tmp.path(),
        &["features", "--config", "pipeline.toml", "--configs", "EEG"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("EEG_RAW"), "{}", stderr(&out));
}

#[test]
fn features_keep_answered_tasks_only() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(tmp.path(), 2, "unanswered_prob = 0.2\n");
    let out = biocomp(
        tmp.path(),
        &["features", "--config", "pipeline.toml", "--configs", "HEART,EDA"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let mut answered = 0;
    for id in ["P01", "P02"] {
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(tmp.path().join("corpus").join(id).join("manifest.json")).unwrap(),
        )
        .unwrap();
        answered += manifest["events"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|e| e["answer"] != "NONE")
            .count();
    }
    assert!(answered < 54);
    let heart = fs::read_to_string(tmp.path().join("out/features_HEART.csv")).unwrap();
    let mut lines = heart.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 3 + 9);
    assert_eq!(lines.count(), answered);
    let eda = fs::read_to_string(tmp.path().join("out/features_EDA.csv")).unwrap();
    assert_eq!(eda.lines().next().unwrap().split(',').count(), 3 + 6);
}

#[test]
fn evaluate_and_correlate() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(tmp.path(), 9, "");
    let args = [
        "evaluate",
        "--config",
        "pipeline.toml",
        "--configs",
        "HEART",
        "--families",
        "NB,TREE",
        "--jobs",
        "1",
    ];
    let out = biocomp(tmp.path(), &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let first = fs::read(tmp.path().join("out/report.json")).unwrap();
    for f in ["table_loro.csv", "table_holdout.csv", "medians.csv"] {
        assert!(tmp.path().join("out").join(f).is_file(), "{f}");
    }
    let medians = fs::read_to_string(tmp.path().join("out/medians.csv")).unwrap();
    assert_eq!(medians.lines().next().unwrap(), "Protocol,Signal,NB,TREE");

    let out = biocomp(tmp.path(), &args);
    assert_eq!(code(&out), 0);
    assert!(first == fs::read(tmp.path().join("out/report.json")).unwrap());

    let out = biocomp(tmp.path(), &["correlate", "--config", "pipeline.toml"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let scatter = fs::read_to_string(tmp.path().join("out/scatter.csv")).unwrap();
    assert_eq!(scatter.lines().next().unwrap(), "participant,gpa,best_bac");
    assert_eq!(scatter.lines().count(), 10);
    let c: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/correlation.json")).unwrap()).unwrap();
    assert_eq!(c["n"], 9);
}

#[test]
fn correlate_needs_two_participants() {
    let tmp = tempfile::tempdir().unwrap();
    small_corpus(tmp.path(), 2, "");
    // Keep only one participant with a GPA.
    let path = tmp.path().join("corpus/P02/manifest.json");
    let mut manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    manifest["participant"].as_object_mut().unwrap().remove("gpa");
    fs::write(&path, manifest.to_string()).unwrap();
    let out = biocomp(
        tmp.path(),
        &[
            "correlate",
            "--config",
            "pipeline.toml",
            "--configs",
            "HEART",
            "--families",
            "NB",
        ],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn bad_flags_and_config_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&biocomp(tmp.path(), &["evaluate", "--protocol", "kfold"])), 2);
    assert_eq!(code(&biocomp(tmp.path(), &["evaluate", "--configs", "GSR"])), 2);
    assert_eq!(code(&biocomp(tmp.path(), &["frobnicate"])), 2);
    fs::write(tmp.path().join("bad.toml"), "seed = \"x\"\n").unwrap();
    assert_eq!(code(&biocomp(tmp.path(), &["validate", "--config", "bad.toml"])), 2);
    assert_eq!(code(&biocomp(tmp.path(), &["--help"])), 0);
}

#[test]
fn seed_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str, env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_biocomp"));
        cmd.current_dir(tmp.path())
            .args(["synth", "--n", "2", "--corpus", name]);
        match env {
            Some(v) => cmd.env("BIOCOMP_SEED", v),
            None => cmd.env_remove("BIOCOMP_SEED"),
        };
        assert!(cmd.output().unwrap().status.success());
        fs::read(tmp.path().join(name).join("P01/manifest.json")).unwrap()
    };
    let env5 = run("e5", Some("5"));
    let flag = {
        let out = biocomp(tmp.path(), &["synth", "--n", "2", "--seed", "5", "--corpus", "f5"]);
        assert_eq!(code(&out), 0);
        fs::read(tmp.path().join("f5/P01/manifest.json")).unwrap()
    };
    assert!(env5 == flag);
    assert!(env5 != run("d", None));
}
