//! Tab-separated corpus manifests.
//!
//! ```text
//! # name: live-phase-ii
//! # dmos_range: 0 100
//! id  reference_id  left_path  right_path  dmos  distortion  symmetric
//! ```
//!
//! Relative image paths resolve against `$SIQA_CORPUS_ROOT` when it is set,
//! otherwise against the manifest's directory.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const CORPUS_ROOT_ENV: &str = "SIQA_CORPUS_ROOT";
pub const MANIFEST_COLUMNS: [&str; 7] = [
    "id",
    "reference_id",
    "left_path",
    "right_path",
    "dmos",
    "distortion",
    "symmetric",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distortion {
    Pristine,
    Wn,
    Blur,
    Block,
    Jp2k,
    Jpeg,
    Ff,
    Other,
}

impl Distortion {
    pub fn as_str(self) -> &'static str {
        match self {
            Distortion::Pristine => "pristine",
            Distortion::Wn => "wn",
            Distortion::Blur => "blur",
            Distortion::Block => "block",
            Distortion::Jp2k => "jp2k",
            Distortion::Jpeg => "jpeg",
            Distortion::Ff => "ff",
            Distortion::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "pristine" => Distortion::Pristine,
            "wn" => Distortion::Wn,
            "blur" => Distortion::Blur,
            "block" => Distortion::Block,
            "jp2k" => Distortion::Jp2k,
            "jpeg" => Distortion::Jpeg,
            "ff" => Distortion::Ff,
            "other" => Distortion::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl From<super::DistortionKind> for Distortion {
    fn from(k: super::DistortionKind) -> Self {
        match k {
            super::DistortionKind::Wn => Distortion::Wn,
            super::DistortionKind::Blur => Distortion::Blur,
            super::DistortionKind::Block => Distortion::Block,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereoRecord {
    pub id: String,
    /// Scene identifier shared by a reference pair and its distorted versions.
    pub reference_id: String,
    pub left_path: PathBuf,
    pub right_path: PathBuf,
    pub dmos: f64,
    pub distortion: Distortion,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    pub dmos_range: (f64, f64),
    pub records: Vec<StereoRecord>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, dmos_range: (f64, f64), records: Vec<StereoRecord>) -> Result<Self> {
        let corpus = Corpus {
            name: name.into(),
            dmos_range,
            records,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.dmos_range;
        if !(lo <= hi) {
            return Err(Error::invalid(format!("empty dmos range [{lo}, {hi}]")));
        }
        let mut ids = HashSet::new();
        for r in &self.records {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate record id '{}'", r.id)));
            }
            if !(r.dmos >= lo && r.dmos <= hi) {
                return Err(Error::invalid(format!("record '{}': dmos {} outside [{lo}, {hi}]", r.id, r.dmos)));
            }
            if r.reference_id.is_empty() {
                return Err(Error::invalid(format!("record '{}' has no reference_id", r.id)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct scene ids in first-appearance order.
    pub fn scenes(&self) -> Vec<&str> {
        let mut seen = HashSet::new();
        self.records
            .iter()
            .filter(|r| seen.insert(r.reference_id.as_str()))
            .map(|r| r.reference_id.as_str())
            .collect()
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn resolve(base: &Path, raw: &str) -> PathBuf {
    let p = Path::new(raw);
    if p.is_absolute() {
        return p.to_path_buf();
    }
    match std::env::var_os(CORPUS_ROOT_ENV) {
        Some(root) if !root.is_empty() => Path::new(&root).join(p),
        _ => base.join(p),
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_manifest(&text, base, &stem, true).map_err(|e| e.in_file(path))
}

pub(crate) fn parse_manifest(text: &str, base: &Path, default_name: &str, check_files: bool) -> Result<Corpus> {
    let mut name = default_name.to_string();
    let mut range = (f64::NEG_INFINITY, f64::INFINITY);
    let mut header_seen = false;
    let mut records: Vec<StereoRecord> = Vec::new();
    let mut ids = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            let meta = meta.trim();
            if let Some(v) = meta.strip_prefix("name:") {
                name = v.trim().to_string();
            } else if let Some(v) = meta.strip_prefix("dmos_range:") {
                let parts: Vec<f64> = v
                    .split_whitespace()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::parse(no, "dmos_range needs two numbers"))?;
                if parts.len() != 2 || !(parts[0] <= parts[1]) {
                    return Err(Error::parse(no, "dmos_range needs two numbers lo <= hi"));
                }
                range = (parts[0], parts[1]);
            }
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !header_seen {
            if fields != MANIFEST_COLUMNS {
                return Err(Error::parse(
                    no,
                    format!("header must be: {}", MANIFEST_COLUMNS.join(" | ")),
                ));
            }
            header_seen = true;
            continue;
        }
        if fields.len() != MANIFEST_COLUMNS.len() {
            return Err(Error::parse(no, format!("{} fields, expected 7", fields.len())));
        }
        let id = fields[0];
        if id.is_empty() {
            return Err(Error::parse(no, "empty id"));
        }
        if !ids.insert(id.to_string()) {
            return Err(Error::parse(no, format!("duplicate id '{id}'")));
        }
        if fields[1].is_empty() {
            return Err(Error::parse(no, "empty reference_id"));
        }
        let dmos: f64 = fields[4]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(no, format!("dmos '{}' is not a number", fields[4])))?;
        if dmos < range.0 || dmos > range.1 {
            return Err(Error::parse(
                no,
                format!("dmos {dmos} outside declared range [{}, {}]", range.0, range.1),
            ));
        }
        let distortion = Distortion::parse(fields[5])
            .ok_or_else(|| Error::parse(no, format!("unknown distortion '{}'", fields[5])))?;
        let symmetric = parse_bool(fields[6])
            .ok_or_else(|| Error::parse(no, format!("symmetric '{}' is not a boolean", fields[6])))?;
        let left_path = resolve(base, fields[2]);
        let right_path = resolve(base, fields[3]);
        if check_files {
            for p in [&left_path, &right_path] {
                if !p.is_file() {
                    return Err(Error::parse(no, format!("image not found: {}", p.display())));
                }
            }
        }
        records.push(StereoRecord {
            id: id.to_string(),
            reference_id: fields[1].to_string(),
            left_path,
            right_path,
            dmos,
            distortion,
            symmetric,
        });
    }
    if !header_seen {
        return Err(Error::parse(1, "missing header row"));
    }
    Corpus::new(name, range, records)
}

/// Writes a manifest; paths inside `base` are stored relative to it.
pub fn write_manifest(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or(Path::new(""));
    let rel = |p: &Path| -> String {
        p.strip_prefix(base).unwrap_or(p).to_string_lossy().into_owned()
    };
    write_atomic(path, |w| {
        writeln!(w, "# name: {}", corpus.name)?;
        if corpus.dmos_range.0.is_finite() && corpus.dmos_range.1.is_finite() {
            writeln!(w, "# dmos_range: {} {}", corpus.dmos_range.0, corpus.dmos_range.1)?;
        }
        writeln!(w, "{}", MANIFEST_COLUMNS.join("\t"))?;
        for r in &corpus.records {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.id,
                r.reference_id,
                rel(&r.left_path),
                rel(&r.right_path),
                r.dmos,
                r.distortion,
                r.symmetric
            )?;
        }
        Ok(())
    })
}
