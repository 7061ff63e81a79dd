use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn isac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isac"))
        .args(args)
        .env_remove("ISAC_OUTPUT_DIR")
        .output()
        .expect("spawn isac")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
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

/// Data rows of a report CSV (comments and header dropped).
fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn tiny_config(dir: &Path, extra_training: &str) -> PathBuf {
    let text = format!(
        r#"
name = "tiny"
[training]
k = 16
lambda = 0.5
batch_size = 40
epochs = 400
n_enc = 2
n_dec = 3
initial_lr = 1e-3
seed = 3
init = "fresh"
snr_schedule = [{{ start_epoch = 0, snr_db = 3.0 }}, {{ start_epoch = 10, snr_db = 6.0 }}]
{extra_training}
"#
    );
    let path = dir.join("tiny.toml");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn shipped_configs_are_valid() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["k16_lambda0", "k16_lambda09", "k32_concat_lambda0", "k32_concat_lambda09"] {
        let text = fs::read_to_string(root.join(format!("{name}.toml"))).unwrap();
        let parsed: toml::Table = text.parse().unwrap();
        assert_eq!(parsed["name"].as_str(), Some(name));
        assert_eq!(parsed["training"]["epochs"].as_integer(), Some(400));
        assert_eq!(parsed["training"]["batch_size"].as_integer(), Some(1000));
        assert_eq!(parsed["training"]["n_enc"].as_integer(), Some(10));
        assert_eq!(parsed["training"]["n_dec"].as_integer(), Some(50));
    }
}

#[test]
fn baseline_info_lists_polar_and_zc() {
    let o = isac(&["baseline-info"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("polar code (32, 16)"));
    assert!(out.contains("zadoff-chu length 32: 16 roots"));
}

#[test]
fn zc_eval_reports_sixteen_ideal_sequences() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(&["eval", "--baseline", "zc", "--n", "32", "--out", p(dir.path())]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("16 Zadoff-Chu sequences"));
    let values = rows(&dir.path().join("zc_n32_acsl.csv"));
    assert_eq!(values.len(), 16);
    for r in &values {
        let db: f64 = r[1].parse().unwrap();
        // ACSL below -200 dB means every sidelobe is below 1e-10
        assert!(db < -200.0, "{db}");
    }
    let o = isac(&["eval", "--baseline", "zc", "--n", "31", "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
}

#[test]
fn polar_exhaustive_median_matches_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = isac(&[
        "eval", "--baseline", "polar", "--k", "16", "--mode", "acsl", "--exhaustive", "--out", p(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary = rows(&dir.path().join("polar_k16_summary.csv"));
    let median: f64 = summary[0][4].parse().unwrap();
    assert!((-16.3..=-14.7).contains(&median), "{median}");
    assert_eq!(rows(&dir.path().join("polar_k16_acsl.csv")).len(), 65536);
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ckpt");
    let o = isac(&["eval", "--ckpt", p(&missing), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("missing.ckpt"));

    let corrupt = dir.path().join("corrupt.ckpt");
    fs::write(&corrupt, b"isac-checkpoint\nversion 1\nnot really").unwrap();
    assert_eq!(code(&isac(&["eval", "--ckpt", p(&corrupt), "--out", p(dir.path())])), 2);

    let cfg = tiny_config(dir.path(), "learning_rate = 3");
    let o = isac(&["train", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));

    assert_eq!(code(&isac(&["eval", "--bogus"])), 2);
}

#[test]
fn smoke_training_is_reproducible_and_evaluable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = isac(&["train", p(&cfg), "--smoke", "--quiet", "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let ck = fs::read(a.join("checkpoint.ckpt")).unwrap();
    assert_eq!(ck, fs::read(b.join("checkpoint.ckpt")).unwrap());
    assert_eq!(
        fs::read(a.join("history.csv")).unwrap(),
        fs::read(b.join("history.csv")).unwrap()
    );
    let history = rows(&a.join("history.csv"));
    assert_eq!(history.len(), 20);
    assert_eq!(history[10][2], "6.0");
    assert!(fs::read_to_string(a.join("config.toml")).unwrap().contains("--smoke"));

    let ckpt = a.join("checkpoint.ckpt");
    let ev = dir.path().join("ev");
    let o = isac(&[
        "eval", "--ckpt", p(&ckpt), "--mode", "ber", "--snr", "0:1:10", "--messages", "300", "--out", p(&ev),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ber = rows(&ev.join("a_ber.csv"));
    assert_eq!(ber.len(), 11);
    assert!(ber.iter().all(|r| r[2] == "300"));

    let o = isac(&["eval", "--ckpt", p(&ckpt), "--exhaustive", "--out", p(&ev)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(rows(&ev.join("a_acsl.csv")).len(), 65536);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        for mode in [["--mode", "ber"], ["--mode", "acsl"]] {
            let o = isac(&[
                "eval", "--baseline", "polar", "--k", "32", mode[0], mode[1], "--samples", "5000", "--messages", "2500",
                "--snr", "1:1:3", "--threads", threads, "--out", p(&out),
            ]);
            assert_eq!(code(&o), 0, "{}", stderr(&o));
        }
        outputs.push(
            ["polar_k32_ber.csv", "polar_k32_acsl.csv", "polar_k32_summary.csv"].map(|f| fs::read(out.join(f)).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn plots_render_from_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for id in ["polar_a", "polar_b"] {
        let o = isac(&[
            "eval", "--baseline", "polar", "--id", id, "--mode", "ber", "--snr", "0:2:6", "--messages", "500",
            "--out", p(d),
        ]);
        assert_eq!(code(&o), 0);
    }
    isac(&["eval", "--baseline", "zc", "--out", p(d)]);
    isac(&["eval", "--baseline", "polar", "--samples", "2000", "--out", p(d)]);

    let svg = d.join("ber.svg");
    let o = isac(&[
        "plot", "--kind", "line", "-i", p(&d.join("polar_a_ber.csv")), "-i", p(&d.join("polar_b_ber.csv")), "-o",
        p(&svg),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("polar_b") && text.contains("<polyline"));

    let box_svg = d.join("acsl_box.svg");
    let o = isac(&[
        "plot", "--kind", "box", "-i", p(&d.join("polar_k16_summary.csv")), "-i", p(&d.join("zc_n32_summary.csv")),
        "-i", p(&d.join("polar_k16_acsl.csv")), "-o", p(&box_svg),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(fs::read_to_string(&box_svg).unwrap().matches("<rect").count() >= 5);

    let scatter = d.join("acsl_scatter.svg");
    let o = isac(&["plot", "--kind", "scatter", "-i", p(&d.join("polar_k16_acsl.csv")), "-o", p(&scatter)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let bad = d.join("bad_ber.csv");
    fs::write(&bad, "# schema: isac-ber-v1\ncode_id,snr_db,messages,bit_errors,ber\nx,1.0,10,zz,0.1\n").unwrap();
    let o = isac(&["plot", "--kind", "line", "-i", p(&bad), "-o", p(&d.join("bad.svg"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad_ber.csv:3"), "{}", stderr(&o));
}

#[test]
fn history_plot_renders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path(), "");
    let out = dir.path().join("run");
    assert_eq!(code(&isac(&["train", p(&cfg), "--smoke", "-q", "--out", p(&out)])), 0);
    let svg = dir.path().join("loss.svg");
    let o = isac(&["plot", "--kind", "line", "-i", p(&out.join("history.csv")), "-o", p(&svg)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains(">comms<") && text.contains(">sensing<"));
}
