//! Columnar data for damping-window score and DBSE weight curves.

use mmtrack_core::lifecycle::{dw_score, AssociationHistory};
use mmtrack_core::preprocess::{dbse_weight, default_dbse, DbseFunction};
use mmtrack_core::ObjectClass;

use crate::error::Result;

/// Association frames of the irregular fifth condition.
const IRREGULAR: [usize; 11] = [0, 1, 2, 5, 6, 10, 11, 12, 13, 17, 19];

/// Association flags for condition `1..=5` over `frames` frames:
/// 1. first frame only
/// 2. first three frames
/// 3. first frame and every second frame after
/// 4. first frame and every fourth frame after
/// 5. first frame and then at irregular gaps
pub fn condition_flags(condition: usize, frames: usize) -> Vec<bool> {
    (0..frames)
        .map(|k| match condition {
            1 => k == 0,
            2 => k < 3,
            3 => k % 2 == 0,
            4 => k % 4 == 0,
            5 => IRREGULAR.contains(&k),
            _ => panic!("condition must be in 1..=5"),
        })
        .collect()
}

/// `scores[c][t]`: score of condition `c + 1` at frame `t`, using the
/// history up to and including `t`.
pub fn dw_conditions(frames: usize, lambda: f64) -> Vec<Vec<f64>> {
    (1..=5)
        .map(|c| {
            let flags = condition_flags(c, frames);
            (0..frames)
                .map(|t| {
                    let h = AssociationHistory::from_flags(0, flags[..=t].to_vec());
                    dw_score(&h, t as i64, lambda)
                })
                .collect()
        })
        .collect()
}

pub fn dw_table(frames: usize, lambda: f64) -> String {
    let scores = dw_conditions(frames, lambda);
    let mut out = String::from("frame\tcondition1\tcondition2\tcondition3\tcondition4\tcondition5\n");
    for t in 0..frames {
        out.push_str(&t.to_string());
        for s in &scores {
            out.push_str(&format!("\t{:.6}", s[t]));
        }
        out.push('\n');
    }
    out
}

/// Weight curves of the canonical car/trailer, bus and bicycle functions at
/// ranges `step, 2·step, …, max_range`.
pub fn dbse_table(max_range: f64, step: f64) -> Result<String> {
    let params = default_dbse();
    let columns: [(&str, DbseFunction); 3] = [
        ("car_trailer", *params.get(ObjectClass::Car)),
        ("bus", *params.get(ObjectClass::Bus)),
        ("bicycle", *params.get(ObjectClass::Bicycle)),
    ];
    let mut out = String::from("distance");
    for (name, _) in &columns {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    let n = (max_range / step).floor() as usize;
    for k in 1..=n {
        let d = k as f64 * step;
        out.push_str(&format!("{d}"));
        for (_, f) in &columns {
            out.push_str(&format!("\t{:.6}", dbse_weight(f, d)?));
        }
        out.push('\n');
    }
    Ok(out)
}
