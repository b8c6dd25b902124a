use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mldict_core::imgproc::{read_pbm, write_pbm};
use mldict_core::{BinaryImage, Dictionary, Level};

fn mldict(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mldict"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn pbm(img: &BinaryImage) -> Vec<u8> {
    let mut v = Vec::new();
    write_pbm(img, &mut v).unwrap();
    v
}

fn drawing(w: usize, h: usize, seed: usize) -> BinaryImage {
    BinaryImage::from_fn(w, h, |x, y| {
        let cx = (seed * 37) % w;
        let cy = (seed * 53) % h;
        let dx = x as i64 - cx as i64;
        let dy = y as i64 - cy as i64;
        dx * dx + dy * dy < 300 || (y + seed) % 29 < 2 || (x / 9 + y / 13 + seed).is_multiple_of(11)
    })
}

/// Ten small line drawings as PBM files.
fn toy_corpus(root: &Path) -> PathBuf {
    let dir = root.join("toy");
    std::fs::create_dir_all(&dir).unwrap();
    for i in 0..10 {
        let img = drawing(64 + i * 8, 48 + i * 4, i);
        std::fs::write(dir.join(format!("img{i:02}.pbm")), pbm(&img)).unwrap();
    }
    dir
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn train_writes_manifest_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(tmp.path());
    let corpus = corpus.to_str().unwrap();
    let out = ok(&mldict(&["train", corpus, "--dicts", "a", "--seed", "7", "--chunk-size", "50"], tmp.path()));
    assert!(out.contains("trained on 10 images (0 skipped)"), "{out}");
    assert!(out.contains("top-k(0.90)"));
    ok(&mldict(&["--seed", "7", "--chunk-size", "50", "train", corpus, "--dicts", "b"], tmp.path()));

    let a = files_in(&tmp.path().join("a"));
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    for f in ["manifest.txt", "level2.mld", "level4.mld", "level8.mld", "level16.mld", "convergence_L2.csv"] {
        assert!(names.contains(&f), "{f} missing from {names:?}");
    }
    assert_eq!(a, files_in(&tmp.path().join("b")));

    // A different seed reshuffles chunks: same dictionaries, different series.
    ok(&mldict(&["train", corpus, "--dicts", "c", "--seed", "8", "--chunk-size", "50"], tmp.path()));
    let c = files_in(&tmp.path().join("c"));
    for ((na, ba), (nc, bc)) in a.iter().zip(&c) {
        assert_eq!(na, nc);
        if na.ends_with(".mld") || na == "manifest.txt" {
            assert_eq!(ba, bc, "{na}");
        }
    }
    assert_ne!(a, c);
}

#[test]
fn all_white_corpus_gives_one_level2_entry() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("white");
    std::fs::create_dir(&dir).unwrap();
    // Sides are multiples of 16 so padding adds no zero pixels.
    for (i, (w, h)) in [(48, 32), (16, 16), (32, 64)].into_iter().enumerate() {
        let img = BinaryImage::from_fn(w, h, |_, _| true);
        std::fs::write(dir.join(format!("{i}.pbm")), pbm(&img)).unwrap();
    }
    ok(&mldict(&["train", "white", "--dicts", "d"], tmp.path()));
    let d = Dictionary::from_bytes(&std::fs::read(tmp.path().join("d/level2.mld")).unwrap()).unwrap();
    assert_eq!(d.level(), Level::L2);
    assert_eq!(d.len(), 1);
    assert_eq!(d.canonical_entries()[0].0.digits(), "F");
}

#[test]
fn encode_decode_round_trip_and_ratio() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(tmp.path());
    ok(&mldict(&["train", corpus.to_str().unwrap(), "--dicts", "d"], tmp.path()));
    let img = drawing(100, 70, 42);
    std::fs::write(tmp.path().join("x.pbm"), pbm(&img)).unwrap();

    let out = ok(&mldict(&["encode", "x.pbm", "--dicts", "d", "-o", "x.mlbc"], tmp.path()));
    let size = std::fs::metadata(tmp.path().join("x.mlbc")).unwrap().len();
    let printed: f64 = out.trim().rsplit(' ').next().unwrap().parse().unwrap();
    let expect = (100.0 * 70.0) / (8.0 * size as f64);
    assert!((printed - expect).abs() < 5e-5, "{printed} vs {expect}");
    assert!(out.contains(&format!("{size} bytes")));

    ok(&mldict(&["decode", "x.mlbc", "--dicts", "d", "-o", "y.pbm"], tmp.path()));
    let back = read_pbm(&std::fs::read(tmp.path().join("y.pbm")).unwrap()).unwrap();
    assert_eq!(back, img);
    assert_eq!(std::fs::read(tmp.path().join("y.pbm")).unwrap(), pbm(&img));

    let info = ok(&mldict(&["inspect", "x.mlbc"], tmp.path()));
    assert!(info.contains("100x70"), "{info}");
    let info = ok(&mldict(&["inspect", "d/level4.mld"], tmp.path()));
    assert!(info.contains("dictionary L4"), "{info}");
    let info = ok(&mldict(&["inspect", "d"], tmp.path()));
    assert!(info.starts_with("dictionary set "), "{info}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(tmp.path());
    let corpus = corpus.to_str().unwrap();
    ok(&mldict(&["train", corpus, "--dicts", "d1", "--seed", "1"], tmp.path()));
    // Different mass fraction: different dictionaries, different manifest.
    ok(&mldict(&["train", corpus, "--dicts", "d2", "--mass-fraction", "0.5"], tmp.path()));
    std::fs::write(tmp.path().join("x.pbm"), pbm(&drawing(40, 40, 3))).unwrap();
    ok(&mldict(&["encode", "x.pbm", "--dicts", "d1", "-o", "x.mlbc"], tmp.path()));

    let code = |args: &[&str]| mldict(args, tmp.path()).status.code().unwrap();

    assert_eq!(code(&["decode", "x.mlbc", "--dicts", "d2", "-o", "y.pbm"]), 6, "wrong dictionary");

    let mut bytes = std::fs::read(tmp.path().join("x.mlbc")).unwrap();
    let n = bytes.len();
    bytes[n - 7] ^= 0x20;
    std::fs::write(tmp.path().join("bad.mlbc"), &bytes).unwrap();
    assert_eq!(code(&["decode", "bad.mlbc", "--dicts", "d1"]), 5, "corruption");

    assert_eq!(code(&["decode", "x.pbm", "--dicts", "d1"]), 4, "format");
    assert_eq!(code(&["encode", "x.pbm"]), 3, "no dictionary directory");
    assert_eq!(code(&["train", corpus, "--dicts", "z", "--mass-fraction", "1.5"]), 3);
    assert_eq!(code(&["decode", "missing.mlbc", "--dicts", "d1"]), 1, "io");
    assert_eq!(code(&["frobnicate"]), 2, "usage");

    std::fs::create_dir(tmp.path().join("empty")).unwrap();
    std::fs::write(tmp.path().join("empty/broken.png"), b"not a png").unwrap();
    let out = mldict(&["train", "empty", "--dicts", "e"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no usable images (1 unreadable)"));
}

#[test]
fn bench_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(tmp.path());
    let corpus = corpus.to_str().unwrap();
    ok(&mldict(&["train", corpus, "--dicts", "d"], tmp.path()));

    let out = ok(&mldict(&["bench", corpus, "--dicts", "d", "-o", "plain.csv"], tmp.path()));
    assert_eq!(out.lines().next().unwrap().split_whitespace().collect::<Vec<_>>(), ["image", "proposed"]);
    let csv = std::fs::read_to_string(tmp.path().join("plain.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("image,pixels,proposed_bytes,proposed_ratio,best"));
    assert_eq!(csv.lines().count(), 11);

    let out = ok(&mldict(
        &["bench", corpus, "--dicts", "d", "--codec", "copy=cp {input} {output}", "--codec", "fail=false", "-o", "b.csv"],
        tmp.path(),
    ));
    assert!(out.lines().next().unwrap().ends_with("copy  fail"), "{out}");
    let csv = std::fs::read_to_string(tmp.path().join("b.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("image,pixels,proposed_bytes,proposed_ratio,copy_bytes,copy_ratio,fail_bytes,fail_ratio,best")
    );
    for line in lines {
        let c: Vec<&str> = line.split(',').collect();
        let proposed: f64 = c[3].parse().unwrap();
        let copy: f64 = c[5].parse().unwrap();
        assert_eq!(c[6], "");
        let best = if copy > proposed { "copy" } else { "proposed" };
        assert_eq!(c[8], best);
    }
}

#[test]
fn stats_and_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = toy_corpus(tmp.path());
    let corpus = corpus.to_str().unwrap();
    std::fs::write(tmp.path().join("cfg.toml"), "dicts = \"fromcfg\"\nseed = 5\nchunk_size = 40\n").unwrap();
    ok(&mldict(&["train", corpus, "--config", "cfg.toml"], tmp.path()));
    assert!(tmp.path().join("fromcfg/manifest.txt").is_file());
    ok(&mldict(&["train", corpus, "--dicts", "flagged", "--seed", "5", "--chunk-size", "40"], tmp.path()));
    assert_eq!(files_in(&tmp.path().join("fromcfg")), files_in(&tmp.path().join("flagged")));
    // The flag beats the file.
    ok(&mldict(&["train", corpus, "--config", "cfg.toml", "--dicts", "over"], tmp.path()));
    assert!(tmp.path().join("over/manifest.txt").is_file());

    let out = ok(&mldict(&["stats", "--dicts", "flagged", "-o", "st"], tmp.path()));
    assert!(out.contains("top-k(0.90)"));
    for level in ["L2", "L4"] {
        let h = std::fs::read_to_string(tmp.path().join(format!("st/histogram_{level}.csv"))).unwrap();
        assert_eq!(h.lines().next(), Some("bin,low,high,count"));
        assert_eq!(h.lines().count(), 31);
        let m = std::fs::read_to_string(tmp.path().join(format!("st/mass_{level}.csv"))).unwrap();
        assert_eq!(m.lines().next(), Some("k,key,frequency,cumulative"));
    }

    std::fs::write(tmp.path().join("bad.toml"), "sede = 1\n").unwrap();
    assert_eq!(mldict(&["stats", "--config", "bad.toml"], tmp.path()).status.code(), Some(4));
}
