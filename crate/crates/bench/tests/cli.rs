use std::path::Path;
use std::process::{Command, Output};

use semsnr_bench::csvio::{parse_num, read_table};

fn semsnr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semsnr")).args(args).output().expect("spawn semsnr")
}

fn ok(args: &[&str]) -> String {
    let o = semsnr(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.ini");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = read_table(path).unwrap();
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

const SMALL: &str = "[corpus]\nwidth = 64\nheight = 64\nlevels = 2, 10\nseeds = 2\nseed = 4\n";

#[test]
fn generate_estimate_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let corpus = tmp.path().join("c");
    let c = corpus.to_str().unwrap();
    let out = ok(&["generate", "--config", &cfg, "--out", c, "--jobs", "2"]);
    assert!(out.contains("wrote 4 images"), "{out}");
    assert_eq!(column(&corpus.join("truth.csv"), "image_id").len(), 4);
    assert_eq!(column(&corpus.join("manifest.csv"), "noisy").len(), 4);
    for id in column(&corpus.join("manifest.csv"), "image_id") {
        assert!(corpus.join(&id).join("noisy.pgm").is_file());
    }

    ok(&["estimate", "--corpus", c, "--methods", "all"]);
    let methods = column(&corpus.join("results.csv"), "method");
    assert_eq!(methods.len(), 4 * 9);
    assert_eq!(column(&corpus.join("summary.csv"), "method").len(), 9);
    let truth: std::collections::HashMap<String, String> = column(&corpus.join("truth.csv"), "image_id")
        .into_iter()
        .zip(column(&corpus.join("truth.csv"), "true_snr"))
        .collect();
    let ids = column(&corpus.join("results.csv"), "image_id");
    let oracle = column(&corpus.join("results.csv"), "oracle_snr");
    for (id, o) in ids.iter().zip(&oracle) {
        assert_eq!(&truth[id], o);
    }
    let lines = std::fs::read_to_string(corpus.join("diagnostics.jsonl")).unwrap();
    assert_eq!(lines.lines().count(), 36);

    std::fs::remove_file(corpus.join("summary.csv")).unwrap();
    let text = ok(&["report", "--out", c]);
    assert!(text.contains("chillsr") && text.contains("frank_alali"), "{text}");
    assert_eq!(column(&corpus.join("summary.csv"), "method").len(), 9);
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[corpus]\nwidth = 64\nbogus = 1\n");
    let out = tmp.path().join("c");
    let o = semsnr(&["generate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corpus.bogus"));

    let cfg = write_config(tmp.path(), "[sweep]\nparameter = dose\nvalues = 100, 25\n");
    let o = semsnr(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sweep.values"));

    let o = semsnr(&["estimate", "--corpus", out.to_str().unwrap(), "--methods", "nn,kalman"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_corpus_is_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = semsnr(&["estimate", "--corpus", tmp.path().join("nope").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let cfg = write_config(tmp.path(), SMALL);
    let corpus = tmp.path().join("c");
    ok(&["generate", "--config", &cfg, "--out", corpus.to_str().unwrap()]);
    let id = &column(&corpus.join("manifest.csv"), "image_id")[0];
    std::fs::remove_file(corpus.join(id).join("noisy.pgm")).unwrap();
    let o = semsnr(&["estimate", "--corpus", corpus.to_str().unwrap(), "--methods", "nn"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn median_beats_gaussian_on_impulse_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[corpus]\nwidth = 96\nheight = 96\nmodel = impulse\nlevels = 0.05\nseeds = 3\nseed = 2\n",
    );
    let corpus = tmp.path().join("c");
    let out = tmp.path().join("d");
    ok(&["generate", "--config", &cfg, "--out", corpus.to_str().unwrap()]);
    ok(&[
        "denoise",
        "--corpus",
        corpus.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--filter",
        "median:window=3;gaussian:sigma=1",
        "--filter",
        "wiener_local:window=5,noise_var=0",
    ]);
    let filters = column(&out.join("report.csv"), "filter");
    let mse: Vec<f64> = column(&out.join("report.csv"), "mse_output").iter().map(|v| parse_num(v).unwrap()).collect();
    let input: Vec<f64> = column(&out.join("report.csv"), "mse_input").iter().map(|v| parse_num(v).unwrap()).collect();
    assert_eq!(filters.len(), 9);
    for i in (0..9).step_by(3) {
        assert!(filters[i].starts_with("median"));
        assert!(mse[i] < mse[i + 1], "median {} vs gaussian {}", mse[i], mse[i + 1]);
        assert_eq!(mse[i + 2], input[i + 2]);
    }
    assert!(out.join("filtered").is_dir());
    assert_eq!(column(&out.join("denoise_summary.csv"), "filter").len(), 3);
}

#[test]
fn dose_sweep_follows_square_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nparameter = dose\nvalues = 25, 100, 400\nseeds = 3\nwidth = 128\nheight = 128\n",
    );
    let out = tmp.path().join("s");
    ok(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let p = out.join("sweep_summary.csv");
    let methods = column(&p, "method");
    let shot: Vec<f64> = column(&p, "median_shot_snr").iter().map(|v| parse_num(v).unwrap()).collect();
    let est: Vec<f64> = column(&p, "median_snr").iter().map(|v| parse_num(v).unwrap()).collect();
    assert_eq!(methods.len(), 3 * 8);
    for m in ["nn", "fol", "lsr", "nllsr", "asnn", "acldr", "chillsr", "smart"] {
        let idx: Vec<usize> = (0..methods.len()).filter(|&i| methods[i] == m).collect();
        assert_eq!(idx.len(), 3);
        for w in idx.windows(2) {
            assert!(est[w[1]] > est[w[0]], "{m}: {} then {}", est[w[0]], est[w[1]]);
            let ratio = shot[w[1]] / shot[w[0]];
            assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
        }
    }
    let svg = std::fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(column(&out.join("sweep.csv"), "method").len(), 3 * 3 * 8);
}

#[test]
fn yields_table() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path().join("y.csv");
    std::fs::write(&t, "material,energy_keV,delta,eta,source\nAl,1.0,0.25,0.16,test\n").unwrap();
    // 1.602176634e-11 A for 1 µs gives 100 electrons per pixel.
    let out = ok(&["yields", "--table", t.to_str().unwrap(), "--current", "1.602176634e-11", "--dwell", "1e-6", "--dqe", "0.25"]);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    let v = |i: usize| row[i].parse::<f64>().unwrap();
    assert_eq!(row[0], "Al");
    assert!((v(2) - 10.0).abs() < 1e-9);
    assert!((v(3) - 4.0).abs() < 1e-9);
    assert!((v(4) - 20f64.sqrt()).abs() < 1e-9);
    assert!((v(5) - 0.5 * 20f64.sqrt()).abs() < 1e-9);

    let o = semsnr(&["yields", "--table", t.to_str().unwrap(), "--current", "-1", "--dwell", "1e-6"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn contrast_sweep_leaves_estimates_unchanged() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "[sweep]\nparameter = contrast\nvalues = 0.5, 1, 3\nseeds = 1\nwidth = 64\nheight = 64\nmethods = single\n",
    );
    let out = tmp.path().join("s");
    ok(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let p = out.join("sweep.csv");
    let methods = column(&p, "method");
    let est: Vec<f64> = column(&p, "snr_linear").iter().map(|v| parse_num(v).unwrap()).collect();
    let n = methods.len() / 3;
    for i in 0..n {
        for k in 1..3 {
            assert_eq!(methods[i], methods[i + k * n]);
            assert!((est[i + k * n] / est[i] - 1.0).abs() < 1e-6, "{}", methods[i]);
        }
    }
}
