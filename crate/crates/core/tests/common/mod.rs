//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use evac_core::fire::{build_cache, FireScenario, GrowingCircle};
use evac_core::geometry::{GeoOrigin, Point, Polyline};
use evac_core::maxflow::solve_reference;
use evac_core::roadnet::{DynamicNetwork, Node, RoadArc};
use evac_core::wten::{build_window, WindowSpec};
use rand::rngs::StdRng;
use rand::Rng;

pub const ORIGIN: GeoOrigin = GeoOrigin { lat: 40.0, lon: -105.0 };

#[derive(Debug, Clone)]
pub struct Shape {
    pub nodes: usize,
    pub extra_arcs: usize,
    pub max_lambda: u32,
    pub max_capacity: u64,
    pub sources: usize,
    pub sinks: usize,
    pub max_supply: u64,
    /// Side of the square holding the nodes, in meters.
    pub extent: f64,
}

fn arc(points: &[Point], u: usize, v: usize, lambda: u32, capacity: u64) -> RoadArc {
    RoadArc {
        from: u,
        to: v,
        travel_time: lambda,
        capacity,
        geometry: Polyline::new(vec![points[u], points[v]]).unwrap(),
        name: format!("road {u}-{v}"),
        lanes: 1,
        speed: 10.0,
    }
}

/// Builds a network from explicit points and `(from, to, travel time, capacity)` arcs.
pub fn network_from(points: &[Point], arcs: &[(usize, usize, u32, u64)], supply: &[(usize, u64)], demand: &[(usize, u64)]) -> DynamicNetwork {
    let mut nodes: Vec<Node> = points.iter().enumerate().map(|(i, &p)| Node::new(format!("n{i}"), p)).collect();
    for &(i, s) in supply {
        nodes[i] = nodes[i].clone().with_supply(s);
    }
    for &(i, d) in demand {
        nodes[i] = nodes[i].clone().with_demand(d);
    }
    let arcs = arcs.iter().map(|&(u, v, l, c)| arc(points, u, v, l, c)).collect();
    DynamicNetwork::new(nodes, arcs, 60, ORIGIN).unwrap()
}

/// A connected network: a two-way random spanning tree plus extra one-way arcs.
/// Sources and sinks sit on distinct random nodes.
pub fn random_network(rng: &mut StdRng, shape: &Shape) -> DynamicNetwork {
    let n = shape.nodes.max(2);
    let points: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.gen_range(0.0..shape.extent), rng.gen_range(0.0..shape.extent)))
        .collect();
    let mut arcs = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        let lambda = rng.gen_range(1..=shape.max_lambda);
        arcs.push((u, v, lambda, rng.gen_range(1..=shape.max_capacity)));
        arcs.push((v, u, lambda, rng.gen_range(1..=shape.max_capacity)));
    }
    for _ in 0..shape.extra_arcs {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            arcs.push((u, v, rng.gen_range(1..=shape.max_lambda), rng.gen_range(1..=shape.max_capacity)));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let k_src = shape.sources.clamp(1, n - 1);
    let k_snk = shape.sinks.clamp(1, n - k_src);
    let supply: Vec<(usize, u64)> = order[..k_src].iter().map(|&i| (i, rng.gen_range(1..=shape.max_supply))).collect();
    let total: u64 = supply.iter().map(|s| s.1).sum();
    let demand: Vec<(usize, u64)> = order[k_src..k_src + k_snk].iter().map(|&j| (j, rng.gen_range(1..=total))).collect();
    network_from(&points, &arcs, &supply, &demand)
}

/// Growing circles placed somewhere over the network's square.
pub fn random_circles(rng: &mut StdRng, extent: f64, count: usize, max_r0: f64, max_growth: f64) -> FireScenario {
    let circles = (0..count)
        .map(|_| GrowingCircle {
            center: Point::new(rng.gen_range(-0.2 * extent..1.2 * extent), rng.gen_range(-0.2 * extent..1.2 * extent)),
            r0: rng.gen_range(1.0..max_r0),
            growth: rng.gen_range(0.0..max_growth),
        })
        .collect();
    FireScenario::circles(circles).unwrap()
}

/// True when no source or sink burns at instance 0.
pub fn terminals_clear(net: &DynamicNetwork, scenario: &FireScenario) -> bool {
    let cache = build_cache(net, scenario, 0).unwrap();
    net.sources().into_iter().chain(net.sinks()).all(|i| !cache.is_overtaken(0, i))
}

/// Max flow value at horizon `t` by the reference solver; 0 when nothing is routable.
pub fn reference_value(net: &DynamicNetwork, scenario: &FireScenario, t: u32) -> u64 {
    let cache = build_cache(net, scenario, t).unwrap();
    match build_window(net, &cache, &WindowSpec::initial(net, t)) {
        Ok(w) => solve_reference(&w).value,
        Err(_) => 0,
    }
}

/// Best value over `0..=t_max` and the first horizon reaching it.
pub fn brute_force_horizon(net: &DynamicNetwork, scenario: &FireScenario, t_max: u32) -> (u32, u64) {
    let values: Vec<u64> = (0..=t_max).map(|t| reference_value(net, scenario, t)).collect();
    let best = *values.iter().max().unwrap();
    let first = values.iter().position(|&v| v == best).unwrap() as u32;
    (first, best)
}
