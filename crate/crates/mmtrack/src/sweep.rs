//! Ablation sweeps: track and evaluate a set of scenes under every
//! combination of module toggles.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::{AppError, Result};
use crate::eval::{Counts, Metrics};
use crate::run;
use crate::scene::SceneFile;

/// Toggle names accepted in a grid.
pub const AXES: [&str; 3] = ["dbse", "imm", "dw"];

/// Values per axis; axes not listed keep the base configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepGrid {
    pub axes: BTreeMap<String, Vec<bool>>,
}

impl SweepGrid {
    /// Parses `"dw=on,off;dbse=on"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes = BTreeMap::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, values) = part
                .split_once('=')
                .ok_or_else(|| AppError::Config(format!("grid axis `{part}` needs name=values")))?;
            let name = name.trim();
            if !AXES.contains(&name) {
                return Err(AppError::Config(format!(
                    "unknown grid axis `{name}` (expected one of {})",
                    AXES.join(", ")
                )));
            }
            let values = values
                .split(',')
                .map(|v| match v.trim() {
                    "on" | "true" => Ok(true),
                    "off" | "false" => Ok(false),
                    other => Err(AppError::Config(format!("grid value `{other}` is not on/off"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            if values.is_empty() {
                return Err(AppError::Config(format!("grid axis `{name}` has no values")));
            }
            if axes.insert(name.to_string(), values).is_some() {
                return Err(AppError::Config(format!("grid axis `{name}` given twice")));
            }
        }
        Ok(SweepGrid { axes })
    }

    /// Every combination in lexicographic axis order.
    pub fn points(&self) -> Vec<Vec<(String, bool)>> {
        let mut points = vec![Vec::new()];
        for (name, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((name.clone(), v));
                        q
                    })
                })
                .collect();
        }
        points
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub settings: BTreeMap<String, bool>,
    pub metrics: Metrics,
}

pub fn label(point: &[(String, bool)]) -> String {
    if point.is_empty() {
        return "base".into();
    }
    point
        .iter()
        .map(|(n, v)| format!("{n}={}", if *v { "on" } else { "off" }))
        .collect::<Vec<_>>()
        .join(",")
}

fn config_for(base: &ConfigFile, point: &[(String, bool)]) -> ConfigFile {
    let mut cfg = base.clone();
    for (name, v) in point {
        match name.as_str() {
            "dbse" => cfg.ablation.dbse = *v,
            "imm" => cfg.ablation.imm = *v,
            "dw" => cfg.ablation.dw = *v,
            _ => unreachable!("axes validated at parse time"),
        }
    }
    cfg
}

/// Runs every (grid point, scene) pair in parallel; counts are summed over
/// scenes per grid point.
pub fn run_sweep(
    base: &ConfigFile,
    grid: &SweepGrid,
    scenes: &[SceneFile],
    match_distance: f64,
) -> Result<Vec<SweepRow>> {
    let points = grid.points();
    let configs = points
        .iter()
        .map(|p| config_for(base, p).resolve())
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..scenes.len()).map(move |s| (p, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(p, s)| run::track_and_evaluate(&scenes[s], &configs[p], match_distance).map(|(_, r)| (p, *r.counts())))
        .collect::<Result<Vec<_>>>()?;

    let mut totals = vec![Counts::default(); points.len()];
    for (p, c) in results {
        let t = &mut totals[p];
        t.tp += c.tp;
        t.fp += c.fp;
        t.fn_ += c.fn_;
        t.ids += c.ids;
        t.gt += c.gt;
        t.distance_sum += c.distance_sum;
    }
    Ok(points
        .iter()
        .zip(totals)
        .map(|(p, c)| SweepRow {
            label: label(p),
            settings: p.iter().cloned().collect(),
            metrics: c.into(),
        })
        .collect())
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(6);
    let mut out = format!(
        "{:<width$} {:>7} {:>7} {:>7} {:>5} {:>7} {:>8}\n",
        "config", "TP", "FP", "FN", "IDS", "GT", "MOTA"
    );
    for r in rows {
        let c = &r.metrics.counts;
        let mota = r.metrics.mota.map_or_else(|| "-".into(), |m| format!("{m:.4}"));
        out.push_str(&format!(
            "{:<width$} {:>7} {:>7} {:>7} {:>5} {:>7} {:>8}\n",
            r.label, c.tp, c.fp, c.fn_, c.ids, c.gt, mota
        ));
    }
    out
}
