//! Columnar CSV export of outer path sets with a JSON sidecar for the
//! cashflow events. Floats use Rust's shortest round-trip rendering.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::paths::OuterPathSet;
use crate::error::{Error, Result};

pub const PATH_CSV_HEADER: &str = "path_id,t,X,V,deflator";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Sidecar {
    seed: u64,
    n_outer: usize,
    times: Vec<f64>,
    cashflow_events: Vec<Vec<(f64, f64)>>,
}

/// Sidecar location for a CSV path: `paths.csv` -> `paths.events.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("events.json")
}

pub fn paths_to_csv(set: &OuterPathSet) -> String {
    let mut s = String::with_capacity(set.values.len() * 48);
    s.push_str(PATH_CSV_HEADER);
    s.push('\n');
    for p in 0..set.n_outer {
        for (k, t) in set.times.iter().enumerate() {
            let _ = writeln!(s, "{p},{t},{},{},{}", set.state(p, k), set.value(p, k), set.deflator(p, k));
        }
    }
    s
}

pub fn write_paths(set: &OuterPathSet, csv: &Path) -> Result<()> {
    fs::write(csv, paths_to_csv(set)).map_err(|e| Error::io(csv, e))?;
    let side = sidecar_path(csv);
    let body = Sidecar {
        seed: set.seed,
        n_outer: set.n_outer,
        times: set.times.clone(),
        cashflow_events: set.cashflow_events.clone(),
    };
    let json = serde_json::to_string_pretty(&body).expect("sidecar serializes");
    fs::write(&side, json).map_err(|e| Error::io(&side, e))
}

pub fn read_paths(csv: &Path) -> Result<OuterPathSet> {
    let side = sidecar_path(csv);
    let raw = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: Sidecar =
        serde_json::from_str(&raw).map_err(|e| Error::Parse { path: side.clone(), msg: e.to_string() })?;
    let text = fs::read_to_string(csv).map_err(|e| Error::io(csv, e))?;
    let parse_err = |line: usize, msg: String| Error::Parse { path: csv.to_path_buf(), msg: format!("line {line}: {msg}") };

    let n_t = meta.times.len();
    let cells = meta.n_outer * n_t;
    let mut set = OuterPathSet {
        times: meta.times,
        n_outer: meta.n_outer,
        seed: meta.seed,
        states: vec![f64::NAN; cells],
        values: vec![f64::NAN; cells],
        deflators: vec![f64::NAN; cells],
        cashflow_events: meta.cashflow_events,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == PATH_CSV_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header `{PATH_CSV_HEADER}`"))),
    }
    let mut seen = 0usize;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(parse_err(i + 1, format!("expected 5 fields, got {}", f.len())));
        }
        let p: usize = f[0].parse().map_err(|e| parse_err(i + 1, format!("path_id: {e}")))?;
        let num = |j: usize, name: &str| -> Result<f64> {
            f[j].parse::<f64>().map_err(|e| parse_err(i + 1, format!("{name}: {e}")))
        };
        let t = num(1, "t")?;
        let k = set.index_of(t).ok_or_else(|| parse_err(i + 1, format!("time {t} not in sidecar grid")))?;
        if p >= set.n_outer {
            return Err(parse_err(i + 1, format!("path_id {p} >= n_outer {}", set.n_outer)));
        }
        let c = p * n_t + k;
        set.states[c] = num(2, "X")?;
        set.values[c] = num(3, "V")?;
        set.deflators[c] = num(4, "deflator")?;
        seen += 1;
    }
    if seen != cells || set.values.iter().any(|v| v.is_nan()) {
        return Err(Error::Parse { path: csv.to_path_buf(), msg: format!("expected {cells} rows, got {seen}") });
    }
    set.validate()?;
    Ok(set)
}
