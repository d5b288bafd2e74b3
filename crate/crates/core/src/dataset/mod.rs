//! Stereo corpora: manifests, distortion generators and synthetic corpora
//! with surrogate (pseudo-DMOS) scores.

mod distort;
mod manifest;
mod scene;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use distort::{
    distort_block, distort_blur, distort_wn, DistortionKind, DistortionSpec, Eye, BLOCK_STEP_UNIT,
};
pub use manifest::{
    load_manifest, write_manifest, Corpus, Distortion, StereoRecord, CORPUS_ROOT_ENV, MANIFEST_COLUMNS,
};
pub use scene::synthetic_scene;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::io_util::derive_seed;

/// Pseudo-DMOS range of synthetic corpora.
pub const PSEUDO_DMOS_RANGE: (f64, f64) = (0.0, 100.0);
/// Pseudo-DMOS weight of a single-eye distortion relative to both eyes.
pub const SINGLE_EYE_WEIGHT: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct PristinePair {
    pub scene_id: String,
    pub left: GrayImage,
    pub right: GrayImage,
}

/// Surrogate score, not a human rating: `100 * rank / levels`, halved when
/// only one eye is distorted. `rank` is the 1-based position of the level
/// among the distinct levels of its kind.
pub fn pseudo_dmos(rank: usize, levels: usize, eye: Eye) -> f64 {
    let severity = rank as f64 / levels as f64;
    let weight = if eye == Eye::Both { 1.0 } else { SINGLE_EYE_WEIGHT };
    PSEUDO_DMOS_RANGE.1 * severity * weight
}

/// Default grid used by `corpus-gen`: four levels per kind, every eye option.
pub fn default_distortion_grid() -> Vec<DistortionSpec> {
    let levels: [(DistortionKind, [f64; 4]); 3] = [
        (DistortionKind::Wn, [0.02, 0.05, 0.1, 0.2]),
        (DistortionKind::Blur, [1.0, 2.0, 3.0, 5.0]),
        (DistortionKind::Block, [4.0, 8.0, 16.0, 32.0]),
    ];
    let mut specs = Vec::new();
    for (kind, ls) in levels {
        for level in ls {
            for eye in Eye::ALL {
                specs.push(DistortionSpec { kind, level, eye });
            }
        }
    }
    specs
}

/// Procedural pristine pairs named `scene01`, `scene02`, ...
pub fn synthetic_pristine_pairs(count: usize, width: usize, height: usize, seed: u64) -> Result<Vec<PristinePair>> {
    (1..=count)
        .into_par_iter()
        .map(|k| {
            let scene_id = format!("scene{k:02}");
            let (left, right) = synthetic_scene(width, height, derive_seed(seed, &scene_id))?;
            Ok(PristinePair { scene_id, left, right })
        })
        .collect()
}

fn level_ranks(specs: &[DistortionSpec]) -> BTreeMap<DistortionKind, Vec<f64>> {
    let mut out: BTreeMap<DistortionKind, Vec<f64>> = BTreeMap::new();
    for s in specs {
        let v = out.entry(s.kind).or_default();
        if !v.contains(&s.level) {
            v.push(s.level);
        }
    }
    for v in out.values_mut() {
        v.sort_by(|a, b| a.total_cmp(b));
    }
    out
}

/// Writes distorted pairs and a manifest (`manifest.tsv`) into `out_dir`
/// and returns the manifest path.
///
/// Every pristine pair becomes one record plus one record per spec. The
/// undistorted eye of an asymmetric record is a byte copy of the pristine
/// file.
pub fn make_synthetic_corpus(
    pristine: &[PristinePair],
    specs: &[DistortionSpec],
    out_dir: impl AsRef<Path>,
    seed: u64,
) -> Result<PathBuf> {
    if pristine.is_empty() {
        return Err(Error::invalid("at least one pristine pair is required"));
    }
    for s in specs {
        s.validate()?;
    }
    for p in pristine {
        p.left.matrix().ensure_same_shape(p.right.matrix())?;
    }
    let out_dir = out_dir.as_ref();
    let img_dir = out_dir.join("images");
    fs::create_dir_all(&img_dir).map_err(|e| Error::io(&img_dir, e))?;
    let ranks = level_ranks(specs);

    let mut jobs = Vec::new();
    for p in pristine {
        jobs.push((p, None));
        for s in specs {
            jobs.push((p, Some(*s)));
        }
    }

    // pristine files first, distorted records copy from them
    let pristine_paths: Vec<(PathBuf, PathBuf)> = pristine
        .par_iter()
        .map(|p| {
            let l = img_dir.join(format!("{}_ref_L.png", p.scene_id));
            let r = img_dir.join(format!("{}_ref_R.png", p.scene_id));
            p.left.save_png16(&l)?;
            p.right.save_png16(&r)?;
            Ok((l, r))
        })
        .collect::<Result<_>>()?;

    let records: Vec<StereoRecord> = jobs
        .par_iter()
        .map(|(p, spec)| {
            let idx = pristine.iter().position(|q| std::ptr::eq(q, *p)).expect("member");
            let (ref_l, ref_r) = &pristine_paths[idx];
            let Some(spec) = spec else {
                return Ok(StereoRecord {
                    id: format!("{}_ref", p.scene_id),
                    reference_id: p.scene_id.clone(),
                    left_path: ref_l.clone(),
                    right_path: ref_r.clone(),
                    dmos: 0.0,
                    distortion: Distortion::Pristine,
                    symmetric: true,
                });
            };
            let levels = &ranks[&spec.kind];
            let rank = levels.iter().position(|&l| l == spec.level).expect("level") + 1;
            let id = format!("{}_{}{}_{}", p.scene_id, spec.kind.as_str(), rank, spec.eye.as_str());
            let left_path = img_dir.join(format!("{id}_L.png"));
            let right_path = img_dir.join(format!("{id}_R.png"));
            let (do_left, do_right) = match spec.eye {
                Eye::Both => (true, true),
                Eye::Left => (true, false),
                Eye::Right => (false, true),
            };
            for (apply, src, pristine_file, dst, tag) in [
                (do_left, &p.left, ref_l, &left_path, "L"),
                (do_right, &p.right, ref_r, &right_path, "R"),
            ] {
                if apply {
                    spec.apply(src, derive_seed(seed, &format!("{id}/{tag}")))?.save_png16(dst)?;
                } else {
                    fs::copy(pristine_file, dst).map_err(|e| Error::io(dst, e))?;
                }
            }
            Ok(StereoRecord {
                id,
                reference_id: p.scene_id.clone(),
                left_path,
                right_path,
                dmos: pseudo_dmos(rank, levels.len(), spec.eye),
                distortion: spec.kind.into(),
                symmetric: spec.eye == Eye::Both,
            })
        })
        .collect::<Result<_>>()?;

    let corpus = Corpus::new("synthetic", PSEUDO_DMOS_RANGE, records)?;
    let manifest = out_dir.join("manifest.tsv");
    write_manifest(&corpus, &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pseudo_dmos_is_monotone() {
        for eye in Eye::ALL {
            let s: Vec<f64> = (1..=4).map(|r| pseudo_dmos(r, 4, eye)).collect();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(pseudo_dmos(4, 4, Eye::Both), 100.0);
        assert_eq!(pseudo_dmos(2, 4, Eye::Left), 25.0);
    }

    #[test]
    fn default_grid_size() {
        assert_eq!(default_distortion_grid().len(), 36);
    }

    #[test]
    fn empty_pristine_list_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(make_synthetic_corpus(&[], &default_distortion_grid(), dir.path(), 0).is_err());
    }
}
