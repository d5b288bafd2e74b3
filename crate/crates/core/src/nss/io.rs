//! Tab-separated feature files.
//!
//! ```text
//! # siqa-features v1
//! # config_hash=<hex>
//! image_id  kind  phase.s1.base.nu ... contrast.s2.d2.sigma_r2
//! scene01   phase     <40 values>
//! scene01   contrast  <36 values>
//! ```
//!
//! The header names every slot of both kinds; each data row carries the
//! values of its own kind only.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::{FeatureKind, FeatureVector};
use crate::error::{Error, Result};
use crate::io_util::{fmt_f64, write_atomic};

const MAGIC_LINE: &str = "# siqa-features v1";

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub phase: FeatureVector,
    pub contrast: FeatureVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureFile {
    pub config_hash: Option<String>,
    /// Complete records in file order.
    pub records: Vec<FeatureRecord>,
    /// Ids that only have one of their two rows.
    pub incomplete: Vec<String>,
}

impl FeatureFile {
    pub fn get(&self, id: &str) -> Option<&FeatureRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

fn header_row() -> String {
    let mut cols = vec!["image_id".to_string(), "kind".to_string()];
    for kind in [FeatureKind::Phase, FeatureKind::Contrast] {
        cols.extend(kind.slot_names().into_iter().map(|n| format!("{kind}.{n}")));
    }
    cols.join("\t")
}

pub fn write_feature_file(
    path: impl AsRef<Path>,
    config_hash: Option<&str>,
    records: &[FeatureRecord],
) -> Result<()> {
    write_atomic(path.as_ref(), |w| {
        writeln!(w, "{MAGIC_LINE}")?;
        if let Some(h) = config_hash {
            writeln!(w, "# config_hash={h}")?;
        }
        writeln!(w, "{}", header_row())?;
        for rec in records {
            for fv in [&rec.phase, &rec.contrast] {
                write!(w, "{}\t{}", rec.id, fv.kind())?;
                for &v in fv.values() {
                    write!(w, "\t{}", fmt_f64(v))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    })
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<FeatureFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_feature_file(&text).map_err(|e| e.in_file(path))
}

pub(crate) fn parse_feature_file(text: &str) -> Result<FeatureFile> {
    let mut config_hash = None;
    let mut seen_header = false;
    let mut order: Vec<String> = Vec::new();
    let mut partial: HashMap<String, (Option<FeatureVector>, Option<FeatureVector>)> =
        HashMap::new();
    let mut bad_rows = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if let Some(h) = meta.trim().strip_prefix("config_hash=") {
                config_hash = Some(h.to_string());
            }
            continue;
        }
        if !seen_header {
            if !line.starts_with("image_id\tkind") {
                return Err(Error::parse(lineno, "expected header row starting with image_id, kind"));
            }
            seen_header = true;
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 {
            return Err(Error::parse(lineno, "row needs image_id and kind"));
        }
        let kind = FeatureKind::parse(fields[1])
            .ok_or_else(|| Error::parse(lineno, format!("unknown kind '{}'", fields[1])))?;
        let raw = &fields[2..];
        if raw.len() != kind.len() {
            bad_rows.push(format!(
                "line {lineno} ({} {kind}: {} values, expected {})",
                fields[0],
                raw.len(),
                kind.len()
            ));
            continue;
        }
        let mut values = Vec::with_capacity(raw.len());
        for (k, s) in raw.iter().enumerate() {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("field {}: '{s}' is not a number", k + 3)))?;
            values.push(v);
        }
        let fv = FeatureVector::new(kind, values).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let id = fields[0].to_string();
        let slot = partial.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            (None, None)
        });
        let target = match kind {
            FeatureKind::Phase => &mut slot.0,
            FeatureKind::Contrast => &mut slot.1,
        };
        if target.is_some() {
            return Err(Error::parse(lineno, format!("duplicate {kind} row for '{id}'")));
        }
        *target = Some(fv);
    }
    if !bad_rows.is_empty() {
        return Err(Error::parse(
            0,
            format!("feature rows with wrong lengths: {}", bad_rows.join("; ")),
        ));
    }
    if !seen_header {
        return Err(Error::parse(1, "missing header row"));
    }

    let mut records = Vec::new();
    let mut incomplete = Vec::new();
    for id in order {
        match partial.remove(&id).expect("tracked id") {
            (Some(phase), Some(contrast)) => records.push(FeatureRecord { id, phase, contrast }),
            _ => incomplete.push(id),
        }
    }
    Ok(FeatureFile {
        config_hash,
        records,
        incomplete,
    })
}
