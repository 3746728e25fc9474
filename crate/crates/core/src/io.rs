//! Snapshot files: one JSON header line followed by CSV node rows.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landau::{FlowConfig, InitialCondition, LdGParams, Mode, Snapshot};

pub const SNAPSHOT_COLUMNS: &str = "i,j,q11,q12,q13,q21,q22,q23,q31,q32,q33";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub scenario: String,
    pub mode: Mode,
    pub params: LdGParams,
    pub seed: Option<u64>,
    pub grid: [usize; 2],
    pub step: usize,
    pub t: f64,
}

impl SnapshotHeader {
    pub fn new(cfg: &FlowConfig, snap: &Snapshot) -> Self {
        let seed = match cfg.initial {
            InitialCondition::RandomSmooth { seed, .. } => Some(seed),
            _ => None,
        };
        SnapshotHeader {
            scenario: cfg.scenario.clone(),
            mode: cfg.mode,
            params: cfg.params,
            seed,
            grid: snap.grid.n,
            step: snap.step,
            t: snap.t,
        }
    }
}

/// Encodes node values in row-major node order (first index fastest).
pub fn encode_snapshot(header: &SnapshotHeader, values: &[Matrix3<f64>]) -> Result<String> {
    let [n1, n2] = header.grid;
    if values.len() != n1 * n2 {
        return Err(Error::Config(format!("snapshot has {} values for a {n1}x{n2} grid", values.len())));
    }
    let mut out = serde_json::to_string(header).map_err(|e| Error::Config(e.to_string()))?;
    out.push('\n');
    out.push_str(SNAPSHOT_COLUMNS);
    out.push('\n');
    for (k, m) in values.iter().enumerate() {
        out.push_str(&format!("{},{}", k % n1, k / n1));
        for a in 0..3 {
            for b in 0..3 {
                out.push_str(&format!(",{:e}", m[(a, b)]));
            }
        }
        out.push('\n');
    }
    Ok(out)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn decode_snapshot(text: &str) -> Result<(SnapshotHeader, Vec<Matrix3<f64>>)> {
    let mut lines = text.lines();
    let header: SnapshotHeader =
        serde_json::from_str(lines.next().ok_or_else(|| bad("empty snapshot"))?).map_err(|e| bad(format!("header: {e}")))?;
    if !header.t.is_finite() {
        return Err(bad("header: non-finite t"));
    }
    if lines.next() != Some(SNAPSHOT_COLUMNS) {
        return Err(bad("missing column line"));
    }
    let [n1, n2] = header.grid;
    let total = n1.checked_mul(n2).filter(|&n| n > 0).ok_or_else(|| bad("invalid grid dimensions"))?;
    let mut values: Vec<Option<Matrix3<f64>>> = Vec::new();
    for (row, line) in lines.enumerate() {
        if row >= total {
            return Err(bad("more rows than grid nodes"));
        }
        if values.is_empty() {
            values.resize(total, None);
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(bad(format!("row {row}: expected 11 columns, found {}", fields.len())));
        }
        let i: usize = fields[0].parse().map_err(|_| bad(format!("row {row}: bad index")))?;
        let j: usize = fields[1].parse().map_err(|_| bad(format!("row {row}: bad index")))?;
        if i >= n1 || j >= n2 {
            return Err(bad(format!("row {row}: node ({i}, {j}) outside grid")));
        }
        let mut m = Matrix3::zeros();
        for (c, f) in fields[2..].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| bad(format!("row {row}: bad value '{f}'")))?;
            if !v.is_finite() {
                return Err(bad(format!("row {row}: non-finite value")));
            }
            m[(c / 3, c % 3)] = v;
        }
        let slot = &mut values[i + n1 * j];
        if slot.is_some() {
            return Err(bad(format!("row {row}: duplicate node ({i}, {j})")));
        }
        *slot = Some(m);
    }
    if values.len() != total {
        return Err(bad("missing rows"));
    }
    let values = values.into_iter().collect::<Option<Vec<_>>>().ok_or_else(|| bad("missing rows"))?;
    Ok((header, values))
}
