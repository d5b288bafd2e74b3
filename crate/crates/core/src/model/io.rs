//! Line-oriented model file.
//!
//! ```text
//! siqa-model 1
//! seed 42
//! train max_epochs=500 patience=25 part_a_fraction=... level0_valid_fraction=...
//! rprop eta_plus=... eta_minus=... delta0=... delta_min=... delta_max=...
//! net phase 40 25 1
//! w1 <40 values>          (one line per hidden unit)
//! b1 <25 values>
//! w2 <25 values>
//! b2 <value>
//! net contrast 36 25 1
//! ...
//! net refiner 2 3 1
//! ...
//! standardizer phase 40
//! mean <values>
//! std <values>
//! flagged <0|1 ...>
//! standardizer contrast 36
//! ...
//! standardizer refiner 2
//! ...
//! target <mean> <std>
//! end
//! ```
//!
//! Reals are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::mlp::Mlp;
use super::rprop::RpropConfig;
use super::stacked::{StackedConfig, StackedModel};
use super::standardize::{Standardizer, TargetScaler};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::io_util::{fmt_f64, write_atomic};

pub const MODEL_FORMAT: &str = "siqa-model";
pub const MODEL_VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_f64(v)).collect::<Vec<_>>().join(" ")
}

fn write_net(out: &mut String, name: &str, net: &Mlp) {
    let [i, h, o] = net.dims();
    let _ = writeln!(out, "net {name} {i} {h} {o}");
    for row in net.w1().chunks(i) {
        let _ = writeln!(out, "w1 {}", join(row));
    }
    let _ = writeln!(out, "b1 {}", join(net.b1()));
    let _ = writeln!(out, "w2 {}", join(net.w2()));
    let _ = writeln!(out, "b2 {}", fmt_f64(net.b2()));
}

fn write_standardizer(out: &mut String, name: &str, s: &Standardizer) {
    let _ = writeln!(out, "standardizer {name} {}", s.dim());
    let _ = writeln!(out, "mean {}", join(&s.mean));
    let _ = writeln!(out, "std {}", join(&s.std));
    let flags: Vec<&str> = s.flagged.iter().map(|&f| if f { "1" } else { "0" }).collect();
    let _ = writeln!(out, "flagged {}", flags.join(" "));
}

pub fn encode_model(model: &StackedModel) -> String {
    let c = &model.config;
    let r = &c.train.rprop;
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_FORMAT} {MODEL_VERSION}");
    let _ = writeln!(out, "seed {}", c.seed);
    let _ = writeln!(
        out,
        "train max_epochs={} patience={} part_a_fraction={} level0_valid_fraction={}",
        c.train.max_epochs,
        c.train.patience,
        fmt_f64(c.part_a_fraction),
        fmt_f64(c.level0_valid_fraction)
    );
    let _ = writeln!(
        out,
        "rprop eta_plus={} eta_minus={} delta0={} delta_min={} delta_max={}",
        fmt_f64(r.eta_plus),
        fmt_f64(r.eta_minus),
        fmt_f64(r.delta0),
        fmt_f64(r.delta_min),
        fmt_f64(r.delta_max)
    );
    write_net(&mut out, "phase", &model.net_phase);
    write_net(&mut out, "contrast", &model.net_contrast);
    write_net(&mut out, "refiner", &model.refiner);
    write_standardizer(&mut out, "phase", &model.phase_std);
    write_standardizer(&mut out, "contrast", &model.contrast_std);
    write_standardizer(&mut out, "refiner", &model.refiner_std);
    let _ = writeln!(out, "target {} {}", fmt_f64(model.target.mean), fmt_f64(model.target.std));
    let _ = writeln!(out, "end");
    out
}

pub fn save_model(model: &StackedModel, path: impl AsRef<Path>) -> Result<()> {
    let text = encode_model(model);
    write_atomic(path.as_ref(), |w| w.write_all(text.as_bytes()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<StackedModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_model(&text).map_err(|e| e.in_file(path))
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

struct Line<'a> {
    no: usize,
    key: &'a str,
    fields: Vec<&'a str>,
}

impl<'a> Line<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.no, msg)
    }

    fn reals(&self, expect: usize) -> Result<Vec<f64>> {
        if self.fields.len() != expect {
            return Err(self.err(format!(
                "'{}' has {} values, expected {expect}",
                self.key,
                self.fields.len()
            )));
        }
        self.fields
            .iter()
            .enumerate()
            .map(|(k, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| self.err(format!("'{}' field {}: bad number '{s}'", self.key, k + 1)))
            })
            .collect()
    }

    fn int(&self, k: usize) -> Result<usize> {
        let s = self.fields.get(k).ok_or_else(|| self.err(format!("'{}' is missing field {}", self.key, k + 1)))?;
        s.parse()
            .map_err(|_| self.err(format!("'{}' field {}: bad integer '{s}'", self.key, k + 1)))
    }

    /// Parses `name=value` pairs in the given order.
    fn named(&self, names: &[&str]) -> Result<Vec<&'a str>> {
        if self.fields.len() != names.len() {
            return Err(self.err(format!("'{}' expects {} settings", self.key, names.len())));
        }
        names
            .iter()
            .zip(&self.fields)
            .enumerate()
            .map(|(k, (name, f))| {
                f.strip_prefix(name)
                    .and_then(|r| r.strip_prefix('='))
                    .ok_or_else(|| self.err(format!("'{}' field {}: expected {name}=...", self.key, k + 1)))
            })
            .collect()
    }
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self, key: &str) -> Result<Line<'a>> {
        for (idx, raw) in self.inner.by_ref() {
            self.last = idx + 1;
            let mut toks = raw.split_whitespace();
            let Some(k) = toks.next() else { continue };
            let line = Line {
                no: idx + 1,
                key: k,
                fields: toks.collect(),
            };
            if k != key {
                return Err(line.err(format!("expected '{key}', found '{k}'")));
            }
            return Ok(line);
        }
        Err(Error::parse(self.last + 1, format!("unexpected end of file, expected '{key}'")))
    }
}

fn parse_num<T: std::str::FromStr>(line: &Line<'_>, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| line.err(format!("bad value for {what}: '{s}'")))
}

fn read_net(lines: &mut Lines<'_>, name: &str) -> Result<Mlp> {
    let head = lines.next("net")?;
    if head.fields.first() != Some(&name) {
        return Err(head.err(format!("expected network '{name}'")));
    }
    let (i, h, o) = (head.int(1)?, head.int(2)?, head.int(3)?);
    if o != 1 || i == 0 || h == 0 {
        return Err(head.err(format!("unsupported network shape {i}-{h}-{o}")));
    }
    let mut w1 = Vec::with_capacity(i * h);
    for _ in 0..h {
        w1.extend(lines.next("w1")?.reals(i)?);
    }
    let b1 = lines.next("b1")?.reals(h)?;
    let w2 = lines.next("w2")?.reals(h)?;
    let b2 = lines.next("b2")?.reals(1)?[0];
    Mlp::from_parts(i, h, &w1, &b1, &w2, b2).map_err(|e| head.err(e.to_string()))
}

fn read_standardizer(lines: &mut Lines<'_>, name: &str) -> Result<Standardizer> {
    let head = lines.next("standardizer")?;
    if head.fields.first() != Some(&name) {
        return Err(head.err(format!("expected standardizer '{name}'")));
    }
    let d = head.int(1)?;
    let mean = lines.next("mean")?.reals(d)?;
    let std_line = lines.next("std")?;
    let std = std_line.reals(d)?;
    if std.iter().any(|&s| s <= 0.0) {
        return Err(std_line.err("standard deviations must be > 0"));
    }
    let flag_line = lines.next("flagged")?;
    if flag_line.fields.len() != d {
        return Err(flag_line.err(format!("'flagged' needs {d} entries")));
    }
    let flagged = flag_line
        .fields
        .iter()
        .map(|f| match *f {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(flag_line.err(format!("bad flag '{other}'"))),
        })
        .collect::<Result<_>>()?;
    Ok(Standardizer { mean, std, flagged })
}

pub fn decode_model(text: &str) -> Result<StackedModel> {
    let mut lines = Lines::new(text);
    let head = lines.next(MODEL_FORMAT)?;
    let version = head.fields.first().copied().unwrap_or("");
    if version != MODEL_VERSION.to_string() {
        return Err(head.err(format!("unsupported model version '{version}'")));
    }
    let seed_line = lines.next("seed")?;
    let seed = parse_num(&seed_line, seed_line.fields.first().copied().unwrap_or(""), "seed")?;

    let t = lines.next("train")?;
    let tv = t.named(&["max_epochs", "patience", "part_a_fraction", "level0_valid_fraction"])?;
    let r = lines.next("rprop")?;
    let rv = r.named(&["eta_plus", "eta_minus", "delta0", "delta_min", "delta_max"])?;
    let config = StackedConfig {
        seed,
        train: TrainConfig {
            max_epochs: parse_num(&t, tv[0], "max_epochs")?,
            patience: parse_num(&t, tv[1], "patience")?,
            rprop: RpropConfig {
                eta_plus: parse_num(&r, rv[0], "eta_plus")?,
                eta_minus: parse_num(&r, rv[1], "eta_minus")?,
                delta0: parse_num(&r, rv[2], "delta0")?,
                delta_min: parse_num(&r, rv[3], "delta_min")?,
                delta_max: parse_num(&r, rv[4], "delta_max")?,
            },
        },
        part_a_fraction: parse_num(&t, tv[2], "part_a_fraction")?,
        level0_valid_fraction: parse_num(&t, tv[3], "level0_valid_fraction")?,
    };

    let net_phase = read_net(&mut lines, "phase")?;
    let net_contrast = read_net(&mut lines, "contrast")?;
    let refiner = read_net(&mut lines, "refiner")?;
    let phase_std = read_standardizer(&mut lines, "phase")?;
    let contrast_std = read_standardizer(&mut lines, "contrast")?;
    let refiner_std = read_standardizer(&mut lines, "refiner")?;
    let tl = lines.next("target")?;
    let tvals = tl.reals(2)?;
    if tvals[1] <= 0.0 {
        return Err(tl.err("target std must be > 0"));
    }
    let end = lines.next("end")?;
    if !end.fields.is_empty() {
        return Err(end.err("trailing fields after 'end'"));
    }

    let model = StackedModel {
        net_phase,
        net_contrast,
        refiner,
        phase_std,
        contrast_std,
        refiner_std,
        target: TargetScaler {
            mean: tvals[0],
            std: tvals[1],
        },
        config,
    };
    model.validate().map_err(|e| Error::parse(head.no, e.to_string()))?;
    Ok(model)
}
