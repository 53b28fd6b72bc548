//! GeoJSON export of a plan over an instance range.

use std::collections::{BTreeMap, HashMap};

use serde_json::{json, Value};
use thiserror::Error;

use crate::fire::{fire_set_at, FireCache, FireError};
use crate::geometry::{unproject, FireComponent, GeoOrigin, Point};
use crate::planner::EvacuationPlan;
use crate::roadnet::DynamicNetwork;
use crate::ten::ArcKind;
use crate::wten::scaled_capacity;

const CIRCLE_VERTICES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExportError {
    #[error("instance range [{from}..{to}] is outside the plan horizon [0..{horizon}]")]
    Range { from: u32, to: u32, horizon: u32 },
    #[error("plan refers to road {0:?} -> {1:?}, which is not in the network")]
    UnknownRoad(String, String),
    #[error("plan was made for {plan} nodes but the network has {network}")]
    NetworkMismatch { plan: usize, network: usize },
    #[error(transparent)]
    Fire(#[from] FireError),
}

fn lon_lat(p: Point, origin: GeoOrigin) -> Value {
    let (lat, lon) = unproject(p, origin);
    let round = |v: f64| (v * 1e7).round() / 1e7;
    json!([round(lon), round(lat)])
}

fn ring(points: &[Point], origin: GeoOrigin) -> Value {
    let mut coords: Vec<Value> = points.iter().map(|&p| lon_lat(p, origin)).collect();
    coords.push(lon_lat(points[0], origin));
    Value::Array(coords)
}

/// Movement flow per road and departure instance, keyed by arc index.
pub fn flows_by_road(net: &DynamicNetwork, plan: &EvacuationPlan) -> Result<BTreeMap<usize, BTreeMap<u32, u64>>, ExportError> {
    let roads: HashMap<(&str, &str), usize> = net
        .arcs()
        .iter()
        .enumerate()
        .map(|(k, a)| ((net.nodes()[a.from].id.as_str(), net.nodes()[a.to].id.as_str()), k))
        .collect();
    let mut out: BTreeMap<usize, BTreeMap<u32, u64>> = BTreeMap::new();
    for f in plan.flows.iter().filter(|f| f.kind == ArcKind::Movement) {
        let (u, v) = f.base_edge.as_ref().ok_or_else(|| ExportError::UnknownRoad(f.u.to_string(), f.v.to_string()))?;
        let k = *roads
            .get(&(u.as_str(), v.as_str()))
            .ok_or_else(|| ExportError::UnknownRoad(u.clone(), v.clone()))?;
        *out.entry(k).or_default().entry(f.depart_t).or_insert(0) += f.flow;
    }
    Ok(out)
}

/// One feature collection covering instances `t_from..=t_to`: every road with its flow
/// departing in the range, and the fire footprint at each instance.
pub fn export_geojson(net: &DynamicNetwork, plan: &EvacuationPlan, t_from: u32, t_to: u32) -> Result<Value, ExportError> {
    if t_from > t_to || t_to > plan.horizon {
        return Err(ExportError::Range { from: t_from, to: t_to, horizon: plan.horizon });
    }
    if plan.node_count != net.node_count() {
        return Err(ExportError::NetworkMismatch { plan: plan.node_count, network: net.node_count() });
    }
    let origin = net.origin();
    let cache = FireCache::build_range(net, &plan.scenario, t_from, t_to)?;
    let by_road = flows_by_road(net, plan)?;
    let mut features = Vec::new();
    for (k, arc) in net.arcs().iter().enumerate() {
        let per_t = by_road.get(&k);
        let in_range: Vec<(u32, u64)> = per_t
            .map(|m| m.range(t_from..=t_to).map(|(&t, &f)| (t, f)).collect())
            .unwrap_or_default();
        let flow: u64 = in_range.iter().map(|&(_, f)| f).sum();
        let capacity: Vec<Value> = (t_from..=t_to)
            .map(|t| {
                let c = if cache.is_overtaken(t, arc.from) {
                    0
                } else {
                    scaled_capacity(arc.capacity, cache.arc_dist(t, k), arc.travel_time)
                };
                json!([t, c])
            })
            .collect();
        features.push(json!({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": arc.geometry.vertices().iter().map(|&p| lon_lat(p, origin)).collect::<Vec<_>>(),
            },
            "properties": {
                "kind": "road",
                "name": arc.name,
                "from": net.nodes()[arc.from].id,
                "to": net.nodes()[arc.to].id,
                "flow": flow,
                "flow_by_t": in_range.iter().map(|&(t, f)| json!([t, f])).collect::<Vec<_>>(),
                "capacity_at_t": capacity,
                "used": flow > 0,
            },
        }));
    }
    for t in t_from..=t_to {
        for c in fire_set_at(&plan.scenario, t)?.components {
            let boundary = match &c {
                FireComponent::Circle(circle) => circle.boundary_points(CIRCLE_VERTICES),
                FireComponent::Polygon { ring } => ring.ring().to_vec(),
            };
            features.push(json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": [ring(&boundary, origin)] },
                "properties": { "kind": "fire", "t": t },
            }));
        }
    }
    Ok(json!({
        "type": "FeatureCollection",
        "properties": { "t_from": t_from, "t_to": t_to, "dt_seconds": plan.dt_seconds },
        "features": features,
    }))
}
