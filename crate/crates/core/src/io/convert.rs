//! Conversion of node/edge CSV road exports into a network document.
//!
//! Nodes need `osmid`, `y` (latitude) and `x` (longitude), with optional `supply` and
//! `demand`. Edges need `u`, `v` and a speed as `speed_mps` or `speed_kph`; `name`,
//! `lanes`, `oneway` and a WKT `geometry` are optional. Other columns are ignored.

use std::path::Path;

use serde::Deserialize;

use crate::io::FileError;
use crate::roadnet::{EdgeRecord, NetworkDocument, NodeRecord};

#[derive(Debug, Deserialize)]
struct NodeRow {
    osmid: String,
    y: f64,
    x: f64,
    #[serde(default)]
    supply: Option<u64>,
    #[serde(default)]
    demand: Option<u64>,
}

#[derive(Debug, Deserialize)]
struct EdgeRow {
    u: String,
    v: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    speed_mps: Option<f64>,
    #[serde(default)]
    speed_kph: Option<f64>,
    #[serde(default)]
    lanes: Option<String>,
    #[serde(default)]
    oneway: Option<String>,
    #[serde(default)]
    geometry: Option<String>,
}

/// Parses `LINESTRING (lon lat, lon lat, ...)` into `[lat, lon]` pairs.
pub fn parse_wkt_linestring(text: &str) -> Result<Vec<[f64; 2]>, String> {
    let t = text.trim();
    let body = t
        .strip_prefix("LINESTRING")
        .map(str::trim_start)
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.trim_end().strip_suffix(')'))
        .ok_or_else(|| format!("not a WKT LINESTRING: {t:?}"))?;
    body.split(',')
        .map(|pair| {
            let nums: Vec<f64> = pair
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|e| format!("bad coordinate {s:?}: {e}")))
                .collect::<Result<_, _>>()?;
            match nums.as_slice() {
                [lon, lat] | [lon, lat, _] => Ok([*lat, *lon]),
                _ => Err(format!("bad coordinate pair {pair:?}")),
            }
        })
        .collect()
}

/// First integer in a lanes cell such as `2` or `['2', '3']`.
fn parse_lanes(cell: &str) -> Option<u32> {
    cell.split(|c: char| !c.is_ascii_digit()).find(|s| !s.is_empty()).and_then(|s| s.parse().ok())
}

fn parse_bool(cell: &str) -> Result<bool, String> {
    match cell.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" | "" => Ok(false),
        other => Err(format!("bad boolean {other:?}")),
    }
}

fn csv_error(path: &Path, source: csv::Error) -> FileError {
    FileError::Csv { path: path.to_path_buf(), source }
}

pub fn convert_csv(nodes: &Path, edges: &Path, dt_seconds: u32) -> Result<NetworkDocument, FileError> {
    let mut doc = NetworkDocument { dt_seconds, nodes: Vec::new(), edges: Vec::new() };
    let mut reader = csv::Reader::from_path(nodes).map_err(|e| csv_error(nodes, e))?;
    for row in reader.deserialize::<NodeRow>() {
        let row = row.map_err(|e| csv_error(nodes, e))?;
        doc.nodes.push(NodeRecord { id: row.osmid, lat: row.y, lon: row.x, supply: row.supply, demand: row.demand });
    }
    let mut reader = csv::Reader::from_path(edges).map_err(|e| csv_error(edges, e))?;
    for (k, row) in reader.deserialize::<EdgeRow>().enumerate() {
        let row = row.map_err(|e| csv_error(edges, e))?;
        let line = k + 2;
        let speed_mps = match (row.speed_mps, row.speed_kph) {
            (Some(s), _) => s,
            (None, Some(kph)) => kph / 3.6,
            (None, None) => return Err(FileError::invalid(edges, format!("line {line}: no speed_mps or speed_kph"))),
        };
        let geometry = match row.geometry.as_deref().map(str::trim) {
            None | Some("") => Vec::new(),
            Some(wkt) => parse_wkt_linestring(wkt).map_err(|m| FileError::invalid(edges, format!("line {line}: {m}")))?,
        };
        let oneway = match row.oneway.as_deref() {
            Some(cell) => parse_bool(cell).map_err(|m| FileError::invalid(edges, format!("line {line}: {m}")))?,
            None => false,
        };
        doc.edges.push(EdgeRecord {
            u: row.u,
            v: row.v,
            name: row.name.unwrap_or_default(),
            speed_mps,
            lanes: row.lanes.as_deref().and_then(parse_lanes).unwrap_or(1),
            geometry,
            oneway,
        });
    }
    Ok(doc)
}
