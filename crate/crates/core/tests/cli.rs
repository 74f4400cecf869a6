//! End-to-end runs of the `hogpipe` binary.

use std::path::Path;
use std::process::{Command, Output};

use hogpipe::detector::SvmModel;
use hogpipe::features::{FeatureFile, FeatureView};
use hogpipe::ingest::GrayFrame;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hogpipe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hogpipe")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
}

fn gradient_image(dir: &Path, w: usize, h: usize) -> String {
    let path = dir.join(format!("ramp_{w}x{h}.pgm"));
    GrayFrame::from_fn(w, h, |x, y| ((x * 255 / w + y * 97 / h) % 256) as u8).write_pgm(&path).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn extract_cell_and_block_views() {
    let dir = tempfile::tempdir().unwrap();
    let input = gradient_image(dir.path(), 640, 480);
    for (view, count, code) in [("cell", 43_200, FeatureView::CellRaw), ("block", 167_796, FeatureView::BlockNorm)] {
        let out = dir.path().join(format!("{view}.hogf"));
        let o = hogpipe(&["extract", "--input", &input, "--output", out.to_str().unwrap(), "--view", view]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert_eq!(value(&text, "pixels_in"), "307200");
        assert_eq!(value(&text, "values"), count.to_string());
        let file = FeatureFile::read(&out).unwrap();
        assert_eq!((file.width_cells, file.height_cells, file.view), (80, 60, code));
        assert_eq!(file.payload.len(), count);
    }
}

#[test]
fn extract_golden_and_bayer() {
    let dir = tempfile::tempdir().unwrap();
    let input = gradient_image(dir.path(), 64, 32);
    let out = dir.path().join("g.hogf");
    let o = hogpipe(&["extract", "--input", &input, "--bayer", "--output", out.to_str().unwrap(), "--view", "cell", "--golden"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(value(&stdout(&o), "model"), "golden");
    assert_eq!(FeatureFile::read(&out).unwrap().payload.len(), 8 * 4 * 9);
}

#[test]
fn extract_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.hogf");
    let out = out.to_str().unwrap();

    let o = hogpipe(&["extract", "--input", "/nonexistent.pgm", "--output", out, "--view", "cell"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());

    let bad = dir.path().join("bad.pgm");
    std::fs::write(&bad, b"P3\n1 1\n255\n0 0 0\n").unwrap();
    let o = hogpipe(&["extract", "--input", bad.to_str().unwrap(), "--output", out, "--view", "cell"]);
    assert_eq!(o.status.code(), Some(2));

    let odd = gradient_image(dir.path(), 30, 16);
    let o = hogpipe(&["extract", "--input", &odd, "--output", out, "--view", "cell"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn compare_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let input = gradient_image(dir.path(), 128, 96);
    let diff = dir.path().join("diff.hogf");
    let o = hogpipe(&["compare", "--input", &input, "--diff-output", diff.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let err: f64 = value(&stdout(&o), "mean_rel_err").parse().unwrap();
    assert!(err > 0.0 && err <= 0.03);
    assert_eq!(FeatureFile::read(&diff).unwrap().payload.len(), 15 * 11 * 36);

    let o = hogpipe(&["compare", "--input", &input, "--threshold", "0"]);
    assert_ne!(o.status.code(), Some(0));

    let flat = dir.path().join("flat.pgm");
    GrayFrame::from_fn(32, 32, |_, _| 90).write_pgm(&flat).unwrap();
    let o = hogpipe(&["compare", "--input", flat.to_str().unwrap(), "--threshold", "0"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(value(&stdout(&o), "mean_rel_err"), "0.000000");
}

#[test]
fn bench_reports_and_is_deterministic() {
    let a = hogpipe(&["bench", "--width", "16", "--height", "16", "--frames", "3", "--seed", "9"]);
    assert!(a.status.success());
    let b = hogpipe(&["bench", "--width", "16", "--height", "16", "--frames", "3", "--seed", "9"]);
    let (ta, tb) = (stdout(&a), stdout(&b));
    assert_eq!(value(&ta, "pixels_per_step"), value(&tb, "pixels_per_step"));
    for key in ["mp_per_s", "fps"] {
        assert!(value(&ta, key).parse::<f64>().unwrap() > 0.0);
    }

    let big = hogpipe(&["bench", "--width", "640", "--height", "480", "--frames", "2"]);
    assert!(value(&stdout(&big), "pixels_per_step").parse::<f64>().unwrap() >= 0.99);

    let o = hogpipe(&["bench", "--width", "17", "--height", "16", "--frames", "1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn detect_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("noise.pgm");
    let mut luma = vec![0; 640 * 480];
    ChaCha8Rng::seed_from_u64(1).fill_bytes(&mut luma);
    GrayFrame::new(640, 480, luma).unwrap().write_pgm(&img).unwrap();
    let img = img.to_str().unwrap();

    let all = dir.path().join("all.model");
    SvmModel::new(vec![1.0; 3780], 0.0, f64::NEG_INFINITY).unwrap().save(&all).unwrap();
    let csv = dir.path().join("all.csv");
    let o = hogpipe(&["detect", "--input", img, "--weights", all.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,y,score"));
    let scores: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(scores.len(), 3285);
    assert!(scores.windows(2).all(|p| p[0] >= p[1]));

    let none = dir.path().join("none.model");
    SvmModel::new(vec![1.0; 3780], 0.0, 1e9).unwrap().save(&none).unwrap();
    let o = hogpipe(&["detect", "--input", img, "--weights", none.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "x,y,score\n");

    let full = SvmModel::new(vec![0.5; 3780], 0.0, 0.0).unwrap().to_text();
    let truncated = dir.path().join("truncated.model");
    std::fs::write(&truncated, full.lines().take(1000).collect::<Vec<_>>().join("\n")).unwrap();
    let o = hogpipe(&["detect", "--input", img, "--weights", truncated.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    let garbled = dir.path().join("garbled.model");
    std::fs::write(&garbled, full.replacen("0.5", "half", 1)).unwrap();
    let o = hogpipe(&["detect", "--input", img, "--weights", garbled.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
