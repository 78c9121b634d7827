use std::path::Path;
use std::process::{Command, Output};

fn maskprop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_maskprop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = maskprop(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str]) -> String {
    let out = maskprop(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn count(dir: &Path, ext: &str) -> usize {
    std::fs::read_dir(dir)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == ext))
        .count()
}

#[test]
fn simulate_run_eval_render() {
    let tmp = tempfile::tempdir().unwrap();
    let d = |p: &str| tmp.path().join(p).to_str().unwrap().to_string();

    let msg = ok(&["simulate", "--scenario", "occlusion-fast", "--out", &d("seq")]);
    assert!(msg.contains("24 frames"), "{msg}");
    assert_eq!(count(&tmp.path().join("seq/frames"), "pgm"), 24);

    let msg = ok(&[
        "run", "--frames", &d("seq/frames"), "--masks", &d("seq/gt_masks"),
        "--segmenter", "matcher", "--out", &d("run"),
    ]);
    assert!(msg.contains("j_and_f"), "{msg}");
    for f in ["keypoints.csv", "selection_log.jsonl", "banks.jsonl", "config.json", "metrics.csv", "metrics.json"] {
        assert!(tmp.path().join("run").join(f).exists(), "missing {f}");
    }
    assert_eq!(count(&tmp.path().join("run/masks"), "pgm"), 24);

    // eval of the written masks reproduces the run's own summary
    ok(&["eval", "--pred", &d("run/masks"), "--gt", &d("seq/gt_masks"), "--out", &d("eval.csv")]);
    let read = |p: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join(p)).unwrap()).unwrap()
    };
    assert_eq!(read("eval.json"), read("run/metrics.json"));
    let csv = std::fs::read_to_string(tmp.path().join("eval.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("frame_index,j,f"));
    assert!(csv.lines().last().unwrap().starts_with("mean,"));

    let msg = ok(&[
        "render", "--run", &d("run"), "--frames", &d("seq/frames"), "--gt", &d("seq/gt_masks"), "--out", &d("viz"),
    ]);
    assert!(msg.contains("rendered 24"), "{msg}");
    assert_eq!(count(&tmp.path().join("viz"), "png"), 24);
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"segmenter": "matcher", "mgp_dense": false, "input": {"scenario": "linear"}}"#).unwrap();
    let out = tmp.path().join("run");
    ok(&[
        "run", "--config", cfg.to_str().unwrap(), "--mgp-sparse", "false", "--out", out.to_str().unwrap(),
    ]);
    let written: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(written["segmenter"], "matcher");
    assert_eq!(written["mgp_dense"], false);
    assert_eq!(written["mgp_sparse"], false);
    assert_eq!(written["stms_temporal"], true);
}

#[test]
fn sweep_prints_csv() {
    let out = ok(&["sweep", "--param", "flow_interval", "--values", "1,2", "--scenarios", "linear"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3, "{out}");
    assert!(lines[0].starts_with("flow_interval,"));
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let cases: [&[&str]; 5] = [
        &["simulate", "--scenario", "no-such-scene", "--out", out.to_str().unwrap()],
        &["run", "--scenario", "linear", "--segmenter", "psychic"],
        &["run"],
        &["sweep", "--param", "learning_rate", "--values", "1", "--scenarios", "linear"],
        &["eval", "--pred", "/nonexistent/pred", "--gt", "/nonexistent/gt", "--out", out.to_str().unwrap()],
    ];
    for args in cases {
        let err = fails(args);
        assert!(err.starts_with("error: "), "{args:?}: {err}");
        assert_eq!(err.trim_end().lines().count(), 1, "{args:?}: {err}");
    }
}
