use std::path::Path;
use std::process::{Command, Output};

use sua_core::RunConfig;
use sua_metrics::MetricReport;

fn sua(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sua")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = sua(args);
    assert!(
        out.status.success(),
        "sua {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn tiny_config(dir: &Path) -> String {
    let mut cfg = sua_harness::benchmark_config();
    cfg.synth.size = 32;
    cfg.synth.source_count = 3;
    cfg.synth.target_count = 3;
    cfg.render.base_width = 2;
    cfg.render.epochs = 2;
    cfg.render.decay_start = 1;
    cfg.segmenter.epochs = 2;
    let path = dir.join("config.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn subcommands_chain_into_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = |p: &str| dir.path().join(p).to_str().unwrap().to_owned();
    let cfg = tiny_config(dir.path());

    ok(&["--config", &cfg, "--out", &d("data"), "synth"]);
    for f in ["source/dataset.json", "target/image_2.suat", "source/mask_0.suat", "oracle/warp_1.suat"] {
        assert!(dir.path().join("data").join(f).exists(), "{f}");
    }

    ok(&["--config", &cfg, "--out", &d("potts"), "potts", "--input", &d("data/target/image_0.suat")]);
    ok(&[
        "--config",
        &cfg,
        "--out",
        &d("reg"),
        "register",
        "--src",
        &d("data/source/image_0.suat"),
        "--tgt",
        &d("data/target/image_0.png"),
    ]);
    for f in ["potts/sketch.png", "potts/structure_mask.png", "reg/phi_0.suat", "reg/phi_inv_0.suat", "reg/jacobian.png"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }

    ok(&["--config", &cfg, "--out", &d("models"), "train-render", "--target", &d("data/target")]);
    ok(&["--config", &cfg, "--out", &d("models"), "train-seg", "--target", &d("data/target")]);
    ok(&[
        "--config",
        &cfg,
        "--out",
        &d("translated"),
        "translate",
        "--source",
        &d("data/source"),
        "--target",
        &d("data/target"),
        "--renderer",
        &d("models/renderer.suaa"),
    ]);
    assert!(dir.path().join("translated/rendered_2.png").exists());

    ok(&[
        "--config",
        &cfg,
        "--out",
        &d("data/run"),
        "pipeline",
        "--source",
        &d("data/source"),
        "--target",
        &d("data/target"),
        "--renderer",
        &d("models/renderer.suaa"),
        "--segmenter",
        &d("models/segmenter.suaa"),
    ]);
    ok(&["--config", &cfg, "--out", &d("eval"), "eval", "--run", &d("data/run")]);
    let a = MetricReport::load(dir.path().join("data/run/report.json")).unwrap();
    let b = MetricReport::load(dir.path().join("eval/report.json")).unwrap();
    assert_eq!(a, b);
    for f in ["histograms.png", "deformation_grid.png", "jacobian.png", "evaluation.json"] {
        assert!(dir.path().join("eval").join(f).exists(), "{f}");
    }
}

#[test]
fn failures_exit_nonzero_with_a_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"potts": {"gamma": -1.0}}"#).unwrap();
    let out = sua(&["--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "synth"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error [config]"));

    let missing = dir.path().join("nope.png");
    let out = sua(&["--out", dir.path().to_str().unwrap(), "potts", "--input", missing.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error [data]"));
}

#[test]
fn seed_flag_reseeds_the_synthetic_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let run = |seed: &str, out: &str| {
        let o = dir.path().join(out);
        ok(&["--config", &cfg, "--seed", seed, "--out", o.to_str().unwrap(), "synth"]);
        std::fs::read(o.join("source/image_0.suat")).unwrap()
    };
    assert_eq!(run("3", "a"), run("3", "b"));
    assert_ne!(run("3", "a"), run("4", "c"));
}

#[test]
fn shipped_configs_match_the_built_in_ones() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let read = |f: &str| RunConfig::from_json(&std::fs::read_to_string(root.join(f)).unwrap()).unwrap();
    assert_eq!(read("default.json"), RunConfig::default());
    assert_eq!(read("benchmark.json"), sua_harness::benchmark_config());
}
