use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use siqa::dataset::{
    default_distortion_grid, load_manifest, make_synthetic_corpus, synthetic_pristine_pairs, DistortionKind,
    DistortionSpec, Eye,
};
use siqa::eval::extract_record;
use siqa::nss::read_feature_file;
use siqa::FusionParams;

fn siqa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siqa")).args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn small_corpus(dir: &Path, scenes: usize, specs: &[DistortionSpec]) -> PathBuf {
    let pairs = synthetic_pristine_pairs(scenes, 64, 64, 11).unwrap();
    make_synthetic_corpus(&pairs, specs, dir, 11).unwrap()
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.png");
    let o = siqa(&["synthesize", "--left", s(&missing), "--right", s(&missing), "--out", s(&dir.path().join("f"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nope.png"), "{}", stderr(&o));
}

#[test]
fn bad_arguments_exit_with_usage_code() {
    let o = siqa(&["evaluate", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_eyes_give_identical_previews_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(dir.path(), 1, &[]);
    let rec = load_manifest(&manifest).unwrap().records.remove(0);
    let left = s(&rec.left_path).to_string();
    for run in ["a", "b"] {
        let out = dir.path().join(format!("{run}.siqf"));
        let prev = dir.path().join(run);
        let o = siqa(&["synthesize", "--left", &left, "--right", &left, "--out", s(&out), "--preview-dir", s(&prev)]);
        assert!(o.status.success(), "{}", stderr(&o));
        assert!(String::from_utf8_lossy(&o.stdout).starts_with("synthesized 64x64"));
    }
    for name in ["contrast.png", "phase.png"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn extract_on_empty_corpus_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.tsv");
    std::fs::write(&manifest, "id\treference_id\tleft_path\tright_path\tdmos\tdistortion\tsymmetric\n").unwrap();
    let out = dir.path().join("f.tsv");
    let o = siqa(&["extract", "--manifest", s(&manifest), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(read_feature_file(&out).unwrap().records.is_empty());
}

#[test]
fn extract_matches_in_process_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DistortionSpec { kind: DistortionKind::Wn, level: 0.1, eye: Eye::Left };
    let manifest = small_corpus(dir.path(), 1, &[spec, DistortionSpec { eye: Eye::Both, ..spec }]);
    let corpus = load_manifest(&manifest).unwrap();
    assert_eq!(corpus.len(), 3);
    let out = dir.path().join("f.tsv");
    let o = siqa(&["extract", "--manifest", s(&manifest), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "computed 3, skipped 0, failed 0");
    let file = read_feature_file(&out).unwrap();
    for (r, f) in corpus.records.iter().zip(&file.records) {
        let want = extract_record(r, &FusionParams::default()).unwrap();
        assert_eq!(f.id, r.id);
        for (a, b) in f.phase.values().iter().zip(want.phase.values()).chain(f.contrast.values().iter().zip(want.contrast.values())) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
    let before = std::fs::read(&out).unwrap();
    let o = siqa(&["extract", "--manifest", s(&manifest), "--out", s(&out)]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "computed 0, skipped 3, failed 0");
    assert_eq!(std::fs::read(&out).unwrap(), before);

    // other fusion settings invalidate the cache
    let o = siqa(&["extract", "--manifest", s(&manifest), "--out", s(&out), "--g", "0.06"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "computed 3, skipped 0, failed 0");
}

#[test]
fn train_rejects_feature_rows_of_wrong_length() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DistortionSpec { kind: DistortionKind::Blur, level: 2.0, eye: Eye::Both };
    let manifest = small_corpus(dir.path(), 1, &[spec]);
    let feats = dir.path().join("f.tsv");
    assert!(siqa(&["extract", "--manifest", s(&manifest), "--out", s(&feats)]).status.success());
    let text = std::fs::read_to_string(&feats).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let last = lines.len() - 1;
    let cut = lines[last].rfind('\t').unwrap();
    lines[last].truncate(cut);
    std::fs::write(&feats, lines.join("\n") + "\n").unwrap();
    let o = siqa(&["train", "--manifest", s(&manifest), "--features", s(&feats), "--out", s(&dir.path().join("m"))]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains(&format!("line {}", last + 1)) && err.contains("35 values"), "{err}");
}

#[test]
fn evaluate_is_reproducible_and_scores_rank_noise() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = small_corpus(&dir.path().join("c"), 3, &default_distortion_grid());
    let feats = dir.path().join("f.tsv");
    assert!(siqa(&["extract", "--manifest", s(&manifest), "--out", s(&feats)]).status.success());

    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = siqa(&[
            "--seed", "5", "evaluate", "--manifest", s(&manifest), "--features", s(&feats), "--out-dir", s(&out),
            "--repeats", "1", "--max-epochs", "60",
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        for f in ["summary.txt", "scatter.tsv", "bland_altman.tsv"] {
            assert!(out.join(f).exists(), "{f}");
        }
        reports.push(std::fs::read_to_string(out.join("report.tsv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert!(reports[0].contains("# experiment.repeats=1"));

    let model = dir.path().join("model.txt");
    let o = siqa(&["train", "--manifest", s(&manifest), "--features", s(&feats), "--out", s(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let corpus = load_manifest(&manifest).unwrap();
    let find = |id: &str| corpus.records.iter().find(|r| r.id == id).unwrap().clone();
    let score = |id: &str| {
        let r = find(id);
        let o = siqa(&["score", "--model", s(&model), "--left", s(&r.left_path), "--right", s(&r.right_path)]);
        assert!(o.status.success(), "{}", stderr(&o));
        String::from_utf8_lossy(&o.stdout).trim().parse::<f64>().unwrap()
    };
    assert!(score("scene01_ref") < score("scene01_wn4_both"));

    let o = siqa(&["score", "--model", s(&model), "--manifest", s(&manifest)]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), corpus.len());
}
