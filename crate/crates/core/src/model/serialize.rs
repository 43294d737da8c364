//! Line-oriented text format for models, and the content hash used to tag
//! every emitted table.
//!
//! ```text
//! # brwlab-model 1
//! # scenario gw
//! # param rho=0:0.4,2:0.6
//! # origin 0
//! vertex 0 lost=0
//! atom 0 0.4 -
//! atom 0 0.6 0:2
//! product 1 rho=0:0.5,2:0.5 dispersal=0:0.5,1:0.5 killed=0
//! ```
//!
//! Configs and dispersal rows refer to vertex ids. Factorized laws are
//! written as a single `product` line instead of their expanded atoms.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::error::{BrwError, Result};
use crate::model::brw::{BrwModel, Labeling, ModelMeta, Projection};
use crate::model::config::OffspringConfig;
use crate::model::dist::IntDistribution;
use crate::model::law::{LawRepr, OffspringLaw};

const MAGIC: &str = "# brwlab-model 1";

pub fn write_model(model: &BrwModel) -> String {
    let mut out = String::new();
    let meta = model.meta();
    let ids = model.ids();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "# scenario {}", meta.scenario).unwrap();
    for (k, v) in &meta.params {
        writeln!(out, "# param {k}={v}").unwrap();
    }
    if let Some(t) = meta.truncation {
        writeln!(out, "# truncation {t}").unwrap();
    }
    writeln!(out, "# origin {}", meta.origin).unwrap();
    writeln!(out, "# labeling {}", labeling_text(&meta.labeling)).unwrap();
    if let Some(p) = model.projection() {
        let targets: Vec<String> = p.target_ids().iter().map(u64::to_string).collect();
        let map: Vec<String> = p.map().iter().map(usize::to_string).collect();
        writeln!(out, "# projection-targets {}", targets.join(",")).unwrap();
        writeln!(out, "# projection-map {}", map.join(",")).unwrap();
    }
    for (x, law) in model.laws().iter().enumerate() {
        writeln!(out, "vertex {} lost={}", ids[x], law.lost_mean()).unwrap();
        match law.repr() {
            LawRepr::Atoms(atoms) => {
                for (f, p) in atoms {
                    writeln!(out, "atom {} {} {}", ids[x], p, config_text(f, ids)).unwrap();
                }
            }
            LawRepr::Product { rho, dispersal, killed } => {
                let rho_text: Vec<String> = rho
                    .atoms()
                    .map(|(n, p)| format!("{n}:{p}"))
                    .collect();
                let disp: Vec<String> = dispersal.iter().map(|&(v, p)| format!("{}:{p}", ids[v])).collect();
                writeln!(
                    out,
                    "product {} rho={} dispersal={} killed={killed}",
                    ids[x],
                    rho_text.join(","),
                    disp.join(",")
                )
                .unwrap();
            }
        }
    }
    out
}

fn config_text(f: &OffspringConfig, ids: &[u64]) -> String {
    if f.is_empty() {
        return "-".into();
    }
    let parts: Vec<String> = f.entries().iter().map(|&(v, c)| format!("{}:{c}", ids[v])).collect();
    parts.join(",")
}

fn labeling_text(l: &Labeling) -> String {
    match l {
        Labeling::Plain => "plain".into(),
        Labeling::Line => "line".into(),
        Labeling::ZWindow { radius, dim } => format!("zwindow {radius} {dim}"),
        Labeling::Strip { radius, width } => format!("strip {radius} {width}"),
        Labeling::Tree { degree, depth } => format!("tree {degree} {depth}"),
    }
}

fn parse_labeling(text: &str, line: usize) -> Result<Labeling> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let num = |i: usize| -> Result<i64> {
        parts
            .get(i)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| BrwError::Parse { line, msg: format!("bad labeling `{text}`") })
    };
    Ok(match parts.first().copied() {
        Some("plain") => Labeling::Plain,
        Some("line") => Labeling::Line,
        Some("zwindow") => Labeling::ZWindow { radius: num(1)?, dim: num(2)? as usize },
        Some("strip") => Labeling::Strip { radius: num(1)?, width: num(2)? as usize },
        Some("tree") => Labeling::Tree { degree: num(1)? as usize, depth: num(2)? as usize },
        _ => return Err(BrwError::Parse { line, msg: format!("unknown labeling `{text}`") }),
    })
}

enum Pending {
    Atoms(Vec<(Vec<(u64, u64)>, f64)>),
    Product { rho: IntDistribution, dispersal: Vec<(u64, f64)>, killed: f64 },
}

pub fn read_model(text: &str) -> Result<BrwModel> {
    let mut meta = ModelMeta::default();
    let mut vertices: Vec<(u64, f64, Option<Pending>)> = Vec::new();
    let mut proj_targets: Option<Vec<u64>> = None;
    let mut proj_map: Option<Vec<usize>> = None;
    let mut saw_magic = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| BrwError::Parse { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == MAGIC {
            saw_magic = true;
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest.split_once(' ').unwrap_or((rest, ""));
            match key {
                "scenario" => meta.scenario = value.to_string(),
                "param" => {
                    let (k, v) = value.split_once('=').ok_or_else(|| err("bad param line".into()))?;
                    meta.params.insert(k.to_string(), v.to_string());
                }
                "truncation" => meta.truncation = Some(value.parse().map_err(|_| err("bad truncation".into()))?),
                "origin" => meta.origin = value.parse().map_err(|_| err("bad origin".into()))?,
                "labeling" => meta.labeling = parse_labeling(value, line_no)?,
                "projection-targets" => {
                    proj_targets = Some(parse_list(value).map_err(|_| err("bad projection targets".into()))?)
                }
                "projection-map" => proj_map = Some(parse_list(value).map_err(|_| err("bad projection map".into()))?),
                _ => {}
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.first().copied() {
            Some("vertex") => {
                let id: u64 = field(&fields, 1).parse().map_err(|_| err("bad vertex id".into()))?;
                let lost = field(&fields, 2)
                    .strip_prefix("lost=")
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("expected lost=<mean>".into()))?;
                vertices.push((id, lost, None));
            }
            Some("atom") => {
                let id: u64 = field(&fields, 1).parse().map_err(|_| err("bad vertex id".into()))?;
                let p: f64 = field(&fields, 2).parse().map_err(|_| err("bad probability".into()))?;
                let cfg = parse_config(field(&fields, 3)).map_err(err)?;
                let slot = current(&mut vertices, id).map_err(err)?;
                match slot {
                    None => *slot = Some(Pending::Atoms(vec![(cfg, p)])),
                    Some(Pending::Atoms(list)) => list.push((cfg, p)),
                    Some(Pending::Product { .. }) => return Err(err("atom after product line".into())),
                }
            }
            Some("product") => {
                let id: u64 = field(&fields, 1).parse().map_err(|_| err("bad vertex id".into()))?;
                let mut rho = None;
                let mut dispersal = Vec::new();
                let mut killed = 0.0;
                for f in &fields[2..] {
                    if let Some(v) = f.strip_prefix("rho=") {
                        rho = Some(IntDistribution::parse(v).map_err(|e| err(e.to_string()))?);
                    } else if let Some(v) = f.strip_prefix("dispersal=") {
                        for item in v.split(',').filter(|s| !s.is_empty()) {
                            let (a, b) = item.split_once(':').ok_or_else(|| err("bad dispersal".into()))?;
                            let a: u64 = a.parse().map_err(|_| err("bad dispersal id".into()))?;
                            let b: f64 = b.parse().map_err(|_| err("bad dispersal weight".into()))?;
                            dispersal.push((a, b));
                        }
                    } else if let Some(v) = f.strip_prefix("killed=") {
                        killed = v.parse().map_err(|_| err("bad killed".into()))?;
                    }
                }
                let rho = rho.ok_or_else(|| err("missing rho".into()))?;
                let slot = current(&mut vertices, id).map_err(err)?;
                if slot.is_some() {
                    return Err(err("vertex already has a law".into()));
                }
                *slot = Some(Pending::Product { rho, dispersal, killed });
            }
            _ => return Err(err(format!("unrecognised line `{line}`"))),
        }
    }
    if !saw_magic {
        return Err(BrwError::Parse { line: 1, msg: "missing model header".into() });
    }
    let ids: Vec<u64> = vertices.iter().map(|v| v.0).collect();
    let index: std::collections::HashMap<u64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let lookup = |id: u64| index.get(&id).copied().ok_or(BrwError::UnknownVertex(id));
    let mut laws = Vec::with_capacity(vertices.len());
    for (id, lost, pending) in vertices {
        let law = match pending {
            None => return Err(BrwError::InvalidLaw(format!("vertex {id} has no law"))),
            Some(Pending::Atoms(list)) => {
                let atoms = list
                    .into_iter()
                    .map(|(cfg, p)| {
                        let entries = cfg.into_iter().map(|(v, c)| Ok((lookup(v)?, c))).collect::<Result<Vec<_>>>()?;
                        Ok((OffspringConfig::new(entries), p))
                    })
                    .collect::<Result<Vec<_>>>()?;
                OffspringLaw::from_atoms(atoms)?
            }
            Some(Pending::Product { rho, dispersal, killed }) => {
                let row = dispersal.into_iter().map(|(v, p)| Ok((lookup(v)?, p))).collect::<Result<Vec<_>>>()?;
                OffspringLaw::from_product_parts(rho, row, killed)?
            }
        };
        laws.push(law.with_lost_mean(lost));
    }
    let mut model = BrwModel::new(ids, laws, meta)?;
    if let (Some(targets), Some(map)) = (proj_targets, proj_map) {
        model = model.with_projection(Projection::new(map, targets)?)?;
    }
    Ok(model)
}

fn field<'a>(fields: &[&'a str], i: usize) -> &'a str {
    fields.get(i).copied().unwrap_or("")
}

fn parse_list<T: std::str::FromStr>(text: &str) -> std::result::Result<Vec<T>, ()> {
    text.split(',').filter(|s| !s.is_empty()).map(|s| s.trim().parse().map_err(|_| ())).collect()
}

fn parse_config(text: &str) -> std::result::Result<Vec<(u64, u64)>, String> {
    if text == "-" {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            let (v, c) = item.split_once(':').ok_or_else(|| format!("bad config entry `{item}`"))?;
            let v: u64 = v.parse().map_err(|_| format!("bad vertex `{v}`"))?;
            let c: i64 = c.parse().map_err(|_| format!("bad count `{c}`"))?;
            if c < 0 {
                return Err(format!("negative count {c}"));
            }
            Ok((v, c as u64))
        })
        .collect()
}

fn current(vertices: &mut [(u64, f64, Option<Pending>)], id: u64) -> std::result::Result<&mut Option<Pending>, String> {
    match vertices.last_mut() {
        Some(v) if v.0 == id => Ok(&mut v.2),
        _ => Err(format!("law line for {id} does not follow its vertex line")),
    }
}

/// Git-style blob hash: SHA-256 of `"blob <len>\0" + content`, hex encoded.
pub fn content_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", text.len()).as_bytes());
    h.update(text.as_bytes());
    hex::encode(h.finalize())
}

pub fn model_hash(model: &BrwModel) -> String {
    content_hash(&write_model(model))
}
