//! Fire scenario and fire update documents in geographic coordinates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fire::{FireScenario, Frame, GrowingCircle};
use crate::geometry::{project, FireComponent, FireSet, GeoOrigin, Polygon};
use crate::io::{read_json, FileError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleRecord {
    pub lat: f64,
    pub lon: f64,
    pub r0_m: f64,
    pub growth_m_per_instance: f64,
}

/// Rings of `[lat, lon]` pairs, either flat or grouped per polygon as in GeoJSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MultiPolygon {
    Rings(Vec<Vec<[f64; 2]>>),
    Polygons(Vec<Vec<Vec<[f64; 2]>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t: u32,
    pub multipolygon: MultiPolygon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FireDocument {
    Circles { circles: Vec<CircleRecord> },
    Frames { frames: Vec<FrameRecord> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateDocument {
    pub t_fire: u32,
    #[serde(flatten)]
    pub fire: FireDocument,
}

fn rings(mp: &MultiPolygon) -> Result<Vec<&Vec<[f64; 2]>>, String> {
    match mp {
        MultiPolygon::Rings(r) => Ok(r.iter().collect()),
        MultiPolygon::Polygons(polys) => polys
            .iter()
            .map(|p| match p.as_slice() {
                [outer] => Ok(outer),
                [] => Err("polygon without rings".to_string()),
                _ => Err("polygons with holes are not supported".to_string()),
            })
            .collect(),
    }
}

impl FireDocument {
    /// Projects the document into the network's planar frame.
    pub fn to_scenario(&self, origin: GeoOrigin) -> Result<FireScenario, String> {
        let proj = |lat: f64, lon: f64| project(lat, lon, origin).map_err(|e| e.to_string());
        match self {
            FireDocument::Circles { circles } => {
                let circles = circles
                    .iter()
                    .map(|c| {
                        Ok(GrowingCircle { center: proj(c.lat, c.lon)?, r0: c.r0_m, growth: c.growth_m_per_instance })
                    })
                    .collect::<Result<Vec<_>, String>>()?;
                FireScenario::circles(circles).map_err(|e| e.to_string())
            }
            FireDocument::Frames { frames } => {
                let mut out = Vec::with_capacity(frames.len());
                for f in frames {
                    let mut components = Vec::new();
                    for (k, ring) in rings(&f.multipolygon).map_err(|e| format!("frame {}: {e}", f.t))?.into_iter().enumerate() {
                        let pts = ring.iter().map(|&[lat, lon]| proj(lat, lon)).collect::<Result<Vec<_>, _>>()?;
                        let poly = Polygon::new(pts).map_err(|e| format!("frame {} polygon {k}: {e}", f.t))?;
                        components.push(FireComponent::Polygon { ring: poly });
                    }
                    out.push(Frame { t: f.t, fire: FireSet { components } });
                }
                FireScenario::frames(out).map_err(|e| e.to_string())
            }
        }
    }
}

pub fn read_fire(path: &Path, origin: GeoOrigin) -> Result<FireScenario, FileError> {
    let doc: FireDocument = read_json(path)?;
    doc.to_scenario(origin).map_err(|m| FileError::invalid(path, m))
}

pub fn read_update(path: &Path, origin: GeoOrigin) -> Result<(u32, FireScenario), FileError> {
    let doc: UpdateDocument = read_json(path)?;
    let scenario = doc.fire.to_scenario(origin).map_err(|m| FileError::invalid(path, m))?;
    Ok((doc.t_fire, scenario))
}
