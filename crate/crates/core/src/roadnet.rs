//! Static road network: ingestion, node contraction and the derived
//! per-arc travel times and capacities.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{project, GeoOrigin, GeometryError, Point, Polyline};

pub const DEFAULT_DT_SECONDS: u32 = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoadnetError {
    #[error("edge {edge} references missing node {node:?}")]
    MissingNode { edge: usize, node: String },
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("network is disconnected: node {0:?} is unreachable from node {1:?}")]
    Disconnected(String, String),
    #[error("network has no nodes")]
    Empty,
    #[error("node {0:?} has both supply and demand")]
    SupplyAndDemand(String),
    #[error("edge {edge} is a self-loop on node {node:?}")]
    SelfLoop { edge: usize, node: String },
    #[error("edge {edge}: {reason}")]
    BadEdge { edge: usize, reason: String },
    #[error("source/sink collision while contracting {0:?} and {1:?}")]
    SourceSinkCollision(String, String),
    #[error("negative or non-finite tolerance {0}")]
    BadTolerance(f64),
    #[error("infeasible source {0:?}: no sink is reachable")]
    InfeasibleSource(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("terminal {0:?} must have a strictly positive amount")]
    NonPositiveTerminal(String),
    #[error("dt_seconds must be positive")]
    BadDt,
    #[error("geometry of edge {edge}: {source}")]
    Geometry { edge: usize, source: GeometryError },
    #[error("node {node:?}: {source}")]
    NodeGeometry { node: String, source: GeometryError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub point: Point,
    pub supply: u64,
    pub demand: u64,
}

impl Node {
    pub fn new(id: impl Into<String>, point: Point) -> Self {
        Node { id: id.into(), point, supply: 0, demand: 0 }
    }

    pub fn with_supply(mut self, supply: u64) -> Self {
        self.supply = supply;
        self
    }

    pub fn with_demand(mut self, demand: u64) -> Self {
        self.demand = demand;
        self
    }
}

/// A directed road arc between two node indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadArc {
    pub from: usize,
    pub to: usize,
    /// Travel time in instances, at least 1.
    pub travel_time: u32,
    /// People per instance.
    pub capacity: u64,
    pub geometry: Polyline,
    pub name: String,
    pub lanes: u32,
    /// Meters per second.
    pub speed: f64,
}

/// The dynamic network `G = (N, A)` with time-invariant travel times and base capacities.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicNetwork {
    nodes: Vec<Node>,
    arcs: Vec<RoadArc>,
    dt_seconds: u32,
    origin: GeoOrigin,
    index: HashMap<String, usize>,
}

impl DynamicNetwork {
    /// Validates and assembles a network. Parallel arcs are merged, keeping the
    /// largest capacity and the shortest travel time.
    pub fn new(
        nodes: Vec<Node>,
        arcs: Vec<RoadArc>,
        dt_seconds: u32,
        origin: GeoOrigin,
    ) -> Result<Self, RoadnetError> {
        if nodes.is_empty() {
            return Err(RoadnetError::Empty);
        }
        if dt_seconds == 0 {
            return Err(RoadnetError::BadDt);
        }
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id.clone(), i).is_some() {
                return Err(RoadnetError::DuplicateNode(n.id.clone()));
            }
            if n.supply > 0 && n.demand > 0 {
                return Err(RoadnetError::SupplyAndDemand(n.id.clone()));
            }
        }
        for (k, a) in arcs.iter().enumerate() {
            for end in [a.from, a.to] {
                if end >= nodes.len() {
                    return Err(RoadnetError::MissingNode { edge: k, node: format!("#{end}") });
                }
            }
            if a.from == a.to {
                return Err(RoadnetError::SelfLoop { edge: k, node: nodes[a.from].id.clone() });
            }
            if a.travel_time == 0 {
                return Err(RoadnetError::BadEdge { edge: k, reason: "travel time must be at least 1".into() });
            }
        }
        let net = DynamicNetwork { arcs: merge_parallel(arcs), nodes, dt_seconds, origin, index };
        net.check_connected()?;
        Ok(net)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[RoadArc] {
        &self.arcs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn dt_seconds(&self) -> u32 {
        self.dt_seconds
    }

    pub fn origin(&self) -> GeoOrigin {
        self.origin
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn find_arc(&self, from: usize, to: usize) -> Option<usize> {
        self.arcs.iter().position(|a| a.from == from && a.to == to)
    }

    pub fn sources(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].supply > 0).collect()
    }

    pub fn sinks(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].demand > 0).collect()
    }

    pub fn is_terminal(&self, i: usize) -> bool {
        self.nodes[i].supply > 0 || self.nodes[i].demand > 0
    }

    /// Holdover capacity `a_i(0)`: the supply of a source or the demand of a sink.
    pub fn holdover_capacity(&self, i: usize) -> u64 {
        self.nodes[i].supply.max(self.nodes[i].demand)
    }

    pub fn total_supply(&self) -> u64 {
        self.nodes.iter().map(|n| n.supply).sum()
    }

    pub fn total_demand(&self) -> u64 {
        self.nodes.iter().map(|n| n.demand).sum()
    }

    /// Sum of all arc travel times; bounds the travel time of any simple path.
    pub fn total_travel_time(&self) -> u64 {
        self.arcs.iter().map(|a| a.travel_time as u64).sum()
    }

    fn check_connected(&self) -> Result<(), RoadnetError> {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for a in &self.arcs {
            adj[a.from].push(a.to);
            adj[a.to].push(a.from);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(RoadnetError::Disconnected(self.nodes[i].id.clone(), self.nodes[0].id.clone())),
            None => Ok(()),
        }
    }

    /// Replaces all supplies and demands with the given terminal specification.
    pub fn with_terminals(&self, spec: &SourceSinkSpec) -> Result<DynamicNetwork, RoadnetError> {
        let mut nodes = self.nodes.clone();
        for n in &mut nodes {
            n.supply = 0;
            n.demand = 0;
        }
        for (id, s) in &spec.sources {
            let i = self.index_of(id).ok_or_else(|| RoadnetError::UnknownNode(id.clone()))?;
            if *s == 0 {
                return Err(RoadnetError::NonPositiveTerminal(id.clone()));
            }
            nodes[i].supply += s;
        }
        for (id, d) in &spec.sinks {
            let i = self.index_of(id).ok_or_else(|| RoadnetError::UnknownNode(id.clone()))?;
            if *d == 0 {
                return Err(RoadnetError::NonPositiveTerminal(id.clone()));
            }
            nodes[i].demand += d;
        }
        DynamicNetwork::new(nodes, self.arcs.clone(), self.dt_seconds, self.origin)
    }
}

fn merge_parallel(arcs: Vec<RoadArc>) -> Vec<RoadArc> {
    let mut slot: HashMap<(usize, usize), usize> = HashMap::new();
    let mut out: Vec<RoadArc> = Vec::with_capacity(arcs.len());
    for a in arcs {
        match slot.get(&(a.from, a.to)) {
            Some(&k) => {
                let kept = &mut out[k];
                let capacity = kept.capacity.max(a.capacity);
                if a.travel_time < kept.travel_time {
                    *kept = a;
                }
                kept.capacity = capacity;
            }
            None => {
                slot.insert((a.from, a.to), out.len());
                out.push(a);
            }
        }
    }
    out
}

/// Explicit source and sink assignment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSinkSpec {
    pub sources: Vec<(String, u64)>,
    pub sinks: Vec<(String, u64)>,
}

/// Safe-headway constants of the Moore capacity method.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MooreParams {
    pub vehicle_length_m: f64,
    pub reaction_time_s: f64,
    pub occupancy: f64,
}

impl Default for MooreParams {
    fn default() -> Self {
        MooreParams { vehicle_length_m: 5.0, reaction_time_s: 2.0, occupancy: 1.0 }
    }
}

/// People per instance on a road with the default Moore constants.
pub fn moore_capacity(speed: f64, lanes: u32, dt: f64) -> u64 {
    moore_capacity_with(&MooreParams::default(), speed, lanes, dt)
}

pub fn moore_capacity_with(params: &MooreParams, speed: f64, lanes: u32, dt: f64) -> u64 {
    if speed.is_nan() || speed <= 0.0 || lanes == 0 {
        return 0;
    }
    let per_lane = speed / (params.vehicle_length_m + speed * params.reaction_time_s);
    let people = per_lane * lanes as f64 * dt * params.occupancy;
    if people.is_finite() {
        people.floor().max(0.0) as u64
    } else {
        0
    }
}

/// Rounds a duration up to whole instances, never below one.
pub fn round_travel_time(seconds: f64, dt: f64) -> u32 {
    let k = (seconds / dt).ceil();
    if k.is_nan() || k < 1.0 {
        1
    } else {
        k as u32
    }
}

/// Network file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    #[serde(default = "default_dt")]
    pub dt_seconds: u32,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

fn default_dt() -> u32 {
    DEFAULT_DT_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supply: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    #[serde(default)]
    pub name: String,
    pub speed_mps: f64,
    #[serde(default = "one")]
    pub lanes: u32,
    /// `[lat, lon]` pairs ordered from `u` to `v`; may be empty.
    #[serde(default)]
    pub geometry: Vec<[f64; 2]>,
    #[serde(default)]
    pub oneway: bool,
}

fn one() -> u32 {
    1
}

/// Builds a dynamic network from a network document: projects coordinates about
/// the node centroid and derives travel times and capacities.
pub fn load_network(doc: &NetworkDocument) -> Result<DynamicNetwork, RoadnetError> {
    load_network_with(doc, &MooreParams::default())
}

pub fn load_network_with(doc: &NetworkDocument, moore: &MooreParams) -> Result<DynamicNetwork, RoadnetError> {
    if doc.nodes.is_empty() {
        return Err(RoadnetError::Empty);
    }
    if doc.dt_seconds == 0 {
        return Err(RoadnetError::BadDt);
    }
    let k = doc.nodes.len() as f64;
    let origin = GeoOrigin {
        lat: doc.nodes.iter().map(|n| n.lat).sum::<f64>() / k,
        lon: doc.nodes.iter().map(|n| n.lon).sum::<f64>() / k,
    };
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    let mut index = HashMap::new();
    for rec in &doc.nodes {
        let point = project(rec.lat, rec.lon, origin)
            .map_err(|source| RoadnetError::NodeGeometry { node: rec.id.clone(), source })?;
        if index.insert(rec.id.as_str(), nodes.len()).is_some() {
            return Err(RoadnetError::DuplicateNode(rec.id.clone()));
        }
        nodes.push(Node {
            id: rec.id.clone(),
            point,
            supply: rec.supply.unwrap_or(0),
            demand: rec.demand.unwrap_or(0),
        });
    }
    let dt = doc.dt_seconds as f64;
    let mut arcs = Vec::with_capacity(doc.edges.len() * 2);
    for (k, e) in doc.edges.iter().enumerate() {
        let lookup = |id: &String| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| RoadnetError::MissingNode { edge: k, node: id.clone() })
        };
        let (u, v) = (lookup(&e.u)?, lookup(&e.v)?);
        if u == v {
            return Err(RoadnetError::SelfLoop { edge: k, node: e.u.clone() });
        }
        if !(e.speed_mps.is_finite() && e.speed_mps > 0.0) {
            return Err(RoadnetError::BadEdge { edge: k, reason: format!("speed_mps must be positive, got {}", e.speed_mps) });
        }
        if e.lanes == 0 {
            return Err(RoadnetError::BadEdge { edge: k, reason: "lanes must be at least 1".into() });
        }
        let mut pts = Vec::with_capacity(e.geometry.len() + 2);
        pts.push(nodes[u].point);
        for &[lat, lon] in &e.geometry {
            pts.push(project(lat, lon, origin).map_err(|source| RoadnetError::Geometry { edge: k, source })?);
        }
        pts.push(nodes[v].point);
        let geometry = Polyline::dedup(pts).map_err(|source| RoadnetError::Geometry { edge: k, source })?;
        let travel_time = round_travel_time(geometry.length() / e.speed_mps, dt);
        let capacity = moore_capacity_with(moore, e.speed_mps, e.lanes, dt);
        let arc = RoadArc {
            from: u,
            to: v,
            travel_time,
            capacity,
            geometry,
            name: e.name.clone(),
            lanes: e.lanes,
            speed: e.speed_mps,
        };
        let reverse = (!e.oneway).then(|| RoadArc { from: v, to: u, geometry: arc.geometry.reversed(), ..arc.clone() });
        arcs.push(arc);
        arcs.extend(reverse);
    }
    DynamicNetwork::new(nodes, arcs, doc.dt_seconds, origin)
}

#[derive(Clone, Copy, PartialEq)]
struct PairKey(f64, usize, usize);

impl Eq for PairKey {}

impl PartialOrd for PairKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PairKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then(self.1.cmp(&other.1))
            .then(self.2.cmp(&other.2))
    }
}

struct Cluster {
    sum_x: f64,
    sum_y: f64,
    count: usize,
    first_member: usize,
    supply: u64,
    demand: u64,
    alive: bool,
}

impl Cluster {
    fn center(&self) -> Point {
        Point::new(self.sum_x / self.count as f64, self.sum_y / self.count as f64)
    }
}

/// Merges every pair of nodes closer than `tolerance` meters, closest pair first,
/// until no such pair remains. Merged nodes sit at the centroid of their members.
pub fn contract(net: &DynamicNetwork, tolerance: f64) -> Result<DynamicNetwork, RoadnetError> {
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(RoadnetError::BadTolerance(tolerance));
    }
    if tolerance == 0.0 {
        return Ok(net.clone());
    }
    let cell = |p: Point| ((p.x / tolerance).floor() as i64, (p.y / tolerance).floor() as i64);
    let mut clusters: Vec<Cluster> = net
        .nodes
        .iter()
        .enumerate()
        .map(|(i, n)| Cluster {
            sum_x: n.point.x,
            sum_y: n.point.y,
            count: 1,
            first_member: i,
            supply: n.supply,
            demand: n.demand,
            alive: true,
        })
        .collect();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, c) in clusters.iter().enumerate() {
        grid.entry(cell(c.center())).or_default().push(i);
    }
    let mut heap = BinaryHeap::new();
    let push_neighbors = |i: usize, clusters: &[Cluster], grid: &HashMap<(i64, i64), Vec<usize>>, heap: &mut BinaryHeap<Reverse<PairKey>>| {
        let p = clusters[i].center();
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        if j != i && clusters[j].alive {
                            let d = p.dist(clusters[j].center());
                            if d < tolerance {
                                heap.push(Reverse(PairKey(d, i.min(j), i.max(j))));
                            }
                        }
                    }
                }
            }
        }
    };
    for i in 0..clusters.len() {
        push_neighbors(i, &clusters, &grid, &mut heap);
    }
    let mut owner: Vec<usize> = (0..clusters.len()).collect();
    while let Some(Reverse(PairKey(_, a, b))) = heap.pop() {
        if !clusters[a].alive || !clusters[b].alive {
            continue;
        }
        let (ca, cb) = (&clusters[a], &clusters[b]);
        let supply = ca.supply + cb.supply;
        let demand = ca.demand + cb.demand;
        if supply > 0 && demand > 0 {
            return Err(RoadnetError::SourceSinkCollision(
                net.nodes[ca.first_member].id.clone(),
                net.nodes[cb.first_member].id.clone(),
            ));
        }
        let merged = Cluster {
            sum_x: ca.sum_x + cb.sum_x,
            sum_y: ca.sum_y + cb.sum_y,
            count: ca.count + cb.count,
            first_member: ca.first_member.min(cb.first_member),
            supply,
            demand,
            alive: true,
        };
        for k in [a, b] {
            clusters[k].alive = false;
            let key = cell(clusters[k].center());
            if let Some(list) = grid.get_mut(&key) {
                list.retain(|&x| x != k);
            }
        }
        let id = clusters.len();
        grid.entry(cell(merged.center())).or_default().push(id);
        clusters.push(merged);
        owner.push(id);
        owner[a] = id;
        owner[b] = id;
        push_neighbors(id, &clusters, &grid, &mut heap);
    }

    let find = |mut i: usize| {
        while owner[i] != i {
            i = owner[i];
        }
        i
    };
    // surviving clusters in order of their first original member
    let mut alive: Vec<usize> = (0..clusters.len()).filter(|&i| clusters[i].alive).collect();
    alive.sort_by_key(|&i| clusters[i].first_member);
    let new_index: BTreeMap<usize, usize> = alive.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let nodes: Vec<Node> = alive
        .iter()
        .map(|&c| {
            let cl = &clusters[c];
            Node {
                id: net.nodes[cl.first_member].id.clone(),
                point: cl.center(),
                supply: cl.supply,
                demand: cl.demand,
            }
        })
        .collect();
    let mut arcs = Vec::new();
    for a in &net.arcs {
        let (u, v) = (new_index[&find(a.from)], new_index[&find(a.to)]);
        if u == v {
            continue;
        }
        let mut pts = a.geometry.vertices().to_vec();
        let last = pts.len() - 1;
        pts[0] = nodes[u].point;
        pts[last] = nodes[v].point;
        let geometry = Polyline::dedup(pts)
            .or_else(|_| Polyline::new(vec![nodes[u].point, nodes[v].point]))
            .map_err(|source| RoadnetError::Geometry { edge: arcs.len(), source })?;
        arcs.push(RoadArc { from: u, to: v, geometry, ..a.clone() });
    }
    DynamicNetwork::new(nodes, arcs, net.dt_seconds, net.origin)
}

/// Shortest source-to-nearest-sink data used to seed the horizon search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HorizonBound {
    /// Node index of the source whose nearest sink is farthest.
    pub source: Option<usize>,
    /// Travel time of that shortest path.
    pub travel_time: u32,
    /// Number of arcs on that path.
    pub arc_count: u32,
}

impl HorizonBound {
    pub fn initial_horizon(&self) -> u32 {
        self.travel_time + self.arc_count
    }
}

/// Dijkstra from every source over travel times; ties prefer fewer arcs.
pub fn horizon_bound(net: &DynamicNetwork) -> Result<HorizonBound, RoadnetError> {
    let n = net.node_count();
    let mut out: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n];
    for a in net.arcs() {
        out[a.from].push((a.to, a.travel_time));
    }
    let sinks: Vec<bool> = (0..n).map(|i| net.nodes[i].demand > 0).collect();
    let mut best = HorizonBound { source: None, travel_time: 0, arc_count: 0 };
    for s in net.sources() {
        let mut dist = vec![(u64::MAX, u32::MAX); n];
        let mut heap = BinaryHeap::new();
        dist[s] = (0, 0);
        heap.push(Reverse((0u64, 0u32, s)));
        let mut found = None;
        while let Some(Reverse((d, k, u))) = heap.pop() {
            if (d, k) > dist[u] {
                continue;
            }
            if sinks[u] {
                found = Some((d, k));
                break;
            }
            for &(v, w) in &out[u] {
                let cand = (d + w as u64, k + 1);
                if cand < dist[v] {
                    dist[v] = cand;
                    heap.push(Reverse((cand.0, cand.1, v)));
                }
            }
        }
        let (d, k) = found.ok_or_else(|| RoadnetError::InfeasibleSource(net.nodes[s].id.clone()))?;
        let d = d as u32;
        if best.source.is_none() || d > best.travel_time {
            best = HorizonBound { source: Some(s), travel_time: d, arc_count: k };
        }
    }
    Ok(best)
}

/// Longest shortest source-to-nearest-sink travel time plus that path's arc count.
pub fn initial_horizon(net: &DynamicNetwork) -> Result<u32, RoadnetError> {
    horizon_bound(net).map(|b| b.initial_horizon())
}
