use std::collections::BTreeMap;
use std::fs;

use siqa::dataset::{
    default_distortion_grid, load_manifest, make_synthetic_corpus, synthetic_pristine_pairs, Distortion,
    DistortionKind, DistortionSpec, Eye, PristinePair,
};
use siqa::GrayImage;

fn pairs(n: usize) -> Vec<PristinePair> {
    synthetic_pristine_pairs(n, 48, 40, 3).unwrap()
}

#[test]
fn hand_written_manifest_loads_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let img = GrayImage::new(siqa::Matrix::filled(16, 16, 0.5)).unwrap();
    for f in ["a_l.png", "a_r.png", "b_l.png", "b_r.png"] {
        img.save_png16(dir.path().join(f)).unwrap();
    }
    let text = "# name: fixture\n# dmos_range: -10 60\n\
id\treference_id\tleft_path\tright_path\tdmos\tdistortion\tsymmetric\n\
ref1\ts1\ta_l.png\ta_r.png\t0\tpristine\ttrue\n\
wn1\ts1\ta_l.png\tb_r.png\t42.5\twn\tfalse\n\
jp1\ts2\tb_l.png\tb_r.png\t-3\tjp2k\t1\n";
    let path = dir.path().join("m.tsv");
    fs::write(&path, text).unwrap();
    let c = load_manifest(&path).unwrap();
    assert_eq!(c.name, "fixture");
    assert_eq!(c.dmos_range, (-10.0, 60.0));
    let ids: Vec<&str> = c.records.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(ids, ["ref1", "wn1", "jp1"]);
    assert_eq!(c.records[1].dmos, 42.5);
    assert_eq!(c.records[1].distortion, Distortion::Wn);
    assert!(!c.records[1].symmetric);
    assert_eq!(c.records[2].distortion, Distortion::Jp2k);
    assert_eq!(c.records[2].right_path, dir.path().join("b_r.png"));
    assert_eq!(c.scenes(), ["s1", "s2"]);

    fs::write(&path, text.replace("42.5", "61")).unwrap();
    let err = load_manifest(&path).unwrap_err().to_string();
    assert!(err.contains("line 5"), "{err}");
}

#[test]
fn one_pair_one_spec_gives_two_records() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DistortionSpec { kind: DistortionKind::Wn, level: 0.05, eye: Eye::Both };
    let m = make_synthetic_corpus(&pairs(1), &[spec], dir.path(), 1).unwrap();
    let c = load_manifest(&m).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c.records[0].distortion, Distortion::Pristine);
    assert_eq!(c.records[1].distortion, Distortion::Wn);
}

#[test]
fn asymmetric_variant_copies_the_clean_eye() {
    let dir = tempfile::tempdir().unwrap();
    let spec = DistortionSpec { kind: DistortionKind::Blur, level: 2.0, eye: Eye::Left };
    let c = load_manifest(make_synthetic_corpus(&pairs(1), &[spec], dir.path(), 1).unwrap()).unwrap();
    let (pristine, distorted) = (&c.records[0], &c.records[1]);
    assert!(!distorted.symmetric);
    assert_eq!(fs::read(&distorted.right_path).unwrap(), fs::read(&pristine.right_path).unwrap());
    assert_ne!(fs::read(&distorted.left_path).unwrap(), fs::read(&pristine.left_path).unwrap());
}

#[test]
fn full_grid_on_two_scenes() {
    let dir = tempfile::tempdir().unwrap();
    let grid = default_distortion_grid();
    let c = load_manifest(make_synthetic_corpus(&pairs(2), &grid, dir.path(), 9).unwrap()).unwrap();
    assert_eq!(c.len(), 2 + 2 * 36);
    for r in &c.records {
        let l = GrayImage::load(&r.left_path).unwrap();
        let rr = GrayImage::load(&r.right_path).unwrap();
        assert_eq!((l.width(), l.height(), rr.width()), (48, 40, 48));
    }
    // pseudo-DMOS strictly increasing in level within (scene, kind, eye)
    let mut groups: BTreeMap<(String, String, bool, String), Vec<(f64, f64)>> = BTreeMap::new();
    for (r, s) in c.records.iter().filter(|r| r.distortion != Distortion::Pristine).zip(grid.iter().cycle()) {
        let eye = r.id.rsplit('_').next().unwrap().to_string();
        groups
            .entry((r.reference_id.clone(), r.distortion.to_string(), r.symmetric, eye))
            .or_default()
            .push((s.level, r.dmos));
    }
    assert_eq!(groups.len(), 2 * 3 * 3);
    for v in groups.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(v.len(), 4);
        assert!(v.windows(2).all(|w| w[0].1 < w[1].1), "{v:?}");
    }
}

#[test]
fn generation_is_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let grid: Vec<_> = default_distortion_grid().into_iter().step_by(5).collect();
    let ca = load_manifest(make_synthetic_corpus(&pairs(1), &grid, a.path(), 4).unwrap()).unwrap();
    let cb = load_manifest(make_synthetic_corpus(&pairs(1), &grid, b.path(), 4).unwrap()).unwrap();
    for (x, y) in ca.records.iter().zip(&cb.records) {
        assert_eq!(x.id, y.id);
        assert_eq!(fs::read(&x.left_path).unwrap(), fs::read(&y.left_path).unwrap());
        assert_eq!(fs::read(&x.right_path).unwrap(), fs::read(&y.right_path).unwrap());
    }
}

#[test]
fn unwritable_output_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let spec = DistortionSpec { kind: DistortionKind::Wn, level: 0.05, eye: Eye::Both };
    assert!(make_synthetic_corpus(&pairs(1), &[spec], &file, 1).is_err());
}
