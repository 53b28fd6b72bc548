//! Initial evacuation plans with a minimal horizon, and mid-evacuation plan updates.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use log::{debug, info};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::fire::{merge_scenarios, validate_monotone, FireCache, FireError, FireScenario, MonotoneViolation};
use crate::maxflow::{decompose_flows, solve_dinic, FlowError, FlowSolution, RouteBundle};
use crate::roadnet::{horizon_bound, DynamicNetwork, RoadnetError};
use crate::ten::{ArcKind, Label};
use crate::wten::{build_window, scaled_capacity, SupplyAt, WindowSpec, Wten, WtenError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error(transparent)]
    Roadnet(#[from] RoadnetError),
    #[error(transparent)]
    Fire(#[from] FireError),
    #[error(transparent)]
    Wten(#[from] WtenError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error("fire scenario is not monotone: {0}")]
    NonMonotone(#[from] MonotoneViolation),
    #[error("maximum horizon {t_max} is below the initial horizon {needed}")]
    HorizonTooSmall { t_max: u32, needed: u32 },
    #[error("invalid update: {0}")]
    BadUpdate(String),
    #[error("plan was made for {plan} nodes but the network has {network}")]
    NetworkMismatch { plan: usize, network: usize },
}

impl PlanError {
    /// True when the instance itself admits no evacuation, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            PlanError::Wten(WtenError::NoReachableSink | WtenError::NothingToEvacuate)
                | PlanError::Roadnet(RoadnetError::InfeasibleSource(_))
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlannerConfig {
    /// Allow waiting at every node, not only at sources and sinks.
    pub holdover_all: bool,
}

/// Flow on one arc of the expanded network, with absolute labels and instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArcFlow {
    pub u: Label,
    pub v: Label,
    pub base_edge: Option<(String, String)>,
    pub depart_t: u32,
    pub arrive_t: u32,
    pub flow: u64,
    pub kind: ArcKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrandedAt {
    pub label: Label,
    pub node: String,
    pub t: u32,
    pub amount: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvacuationPlan {
    #[serde(rename = "T_sol")]
    pub horizon: u32,
    pub dt_seconds: u32,
    pub node_count: usize,
    pub t_max: u32,
    pub tolerance_m: f64,
    pub complete: bool,
    pub evacuated: u64,
    pub total_supply: u64,
    pub stranded: u64,
    pub stranded_at: Vec<StrandedAt>,
    pub flows: Vec<ArcFlow>,
    pub routes: RouteBundle,
    pub scenario: FireScenario,
    pub fingerprint: String,
}

impl EvacuationPlan {
    pub fn super_sink(&self) -> Label {
        self.node_count as Label * (self.horizon as Label + 1) + 1
    }

    /// Base node (0-based) and instance of a non-super label.
    pub fn decode(&self, label: Label) -> (usize, u32) {
        let n = self.node_count as u64;
        (((label - 1) % n) as usize, ((label - 1) / n) as u32)
    }

    /// People delivered to sinks before instance `t`.
    pub fn delivered_before(&self, t: u32) -> u64 {
        let sink = self.super_sink();
        self.flows.iter().filter(|f| f.v == sink && f.depart_t < t).map(|f| f.flow).sum()
    }

    /// Supply at the labels reached by flow crossing from before `t_reopt` to `t_reopt` or later.
    pub fn boundary_supply(&self, t_reopt: u32) -> NewSourceSet {
        crossing(self.flows.iter().map(|f| (f.v, f.kind, f.depart_t, f.arrive_t, f.flow)), t_reopt)
    }
}

/// Hex SHA-256 of the canonical JSON form of a scenario.
pub fn fingerprint(scenario: &FireScenario) -> String {
    let json = serde_json::to_value(scenario).expect("scenario serializes").to_string();
    format!("{:x}", Sha256::digest(json.as_bytes()))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub fire: Duration,
    pub wten: Duration,
    pub flow: Duration,
    pub total: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlanStats {
    pub timings: PhaseTimings,
    pub wten_nodes: usize,
    pub wten_arcs: usize,
    /// Horizons tried, with the flow value reached at each.
    pub iterations: Vec<(u32, u64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub plan: EvacuationPlan,
    pub stats: PlanStats,
}

/// Supplies keyed by absolute label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NewSourceSet {
    pub supplies: BTreeMap<Label, u64>,
}

impl NewSourceSet {
    pub fn total(&self) -> u64 {
        self.supplies.values().sum()
    }
}

fn crossing(arcs: impl Iterator<Item = (Label, ArcKind, u32, u32, u64)>, t_reopt: u32) -> NewSourceSet {
    let mut supplies = BTreeMap::new();
    for (head, kind, depart, arrive, flow) in arcs {
        if kind != ArcKind::Super && flow > 0 && depart < t_reopt && t_reopt <= arrive {
            *supplies.entry(head).or_insert(0) += flow;
        }
    }
    NewSourceSet { supplies }
}

/// Labels that take over as sources when replanning from `t_reopt`. Labels are absolute.
pub fn derive_new_sources(w: &Wten, sol: &FlowSolution, t_reopt: u32) -> NewSourceSet {
    let n = w.base_nodes as Label;
    let shift = n * w.t_offset as Label;
    if t_reopt == 0 {
        let supplies = w
            .arcs
            .iter()
            .filter(|a| a.from == w.super_source)
            .map(|a| (a.to + shift, a.capacity))
            .collect();
        return NewSourceSet { supplies };
    }
    let t_of = |l: Label| w.decode(l).map_or(0, |(_, t)| t);
    crossing(
        w.arcs.iter().zip(&sol.flows).map(|(a, &f)| (a.to + shift, a.kind, t_of(a.from), t_of(a.to), f)),
        t_reopt,
    )
}

struct Attempt {
    wten: Wten,
    sol: FlowSolution,
}

struct Search {
    best: Attempt,
    iterations: Vec<(u32, u64)>,
}

/// Grows the horizon from `start` until `target` is reached, the value stalls for
/// `window` increments, or `t_max` is passed. When the best value is already reached at
/// `start`, the smallest horizon in `[floor, start]` reaching it is found by bisection.
fn search_horizon(
    start: u32,
    floor: u32,
    t_max: u32,
    target: u64,
    window: u64,
    mut solve: impl FnMut(u32) -> Result<Attempt, PlanError>,
) -> Result<Search, PlanError> {
    let mut iterations = Vec::new();
    let mut best: Option<(u32, Attempt)> = None;
    let mut stalled = 0u64;
    let mut t = start;
    loop {
        let attempt = solve(t)?;
        let value = attempt.sol.value;
        iterations.push((t, value));
        debug!("horizon {t}: value {value} of {target}");
        if best.as_ref().is_none_or(|(_, b)| value > b.sol.value) {
            best = Some((t, attempt));
            stalled = 0;
        } else {
            stalled += 1;
        }
        if value >= target || stalled >= window || t >= t_max {
            break;
        }
        t += 1;
    }
    let (mut best_t, mut best) = best.expect("at least one horizon is tried");
    if best_t == start && start > floor {
        let goal = best.sol.value;
        let (mut lo, mut hi) = (floor, start);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            let attempt = solve(mid)?;
            iterations.push((mid, attempt.sol.value));
            if attempt.sol.value >= goal {
                hi = mid;
                best_t = mid;
                best = attempt;
            } else {
                lo = mid + 1;
            }
        }
        debug!("shortest horizon reaching {goal} is {best_t}");
    }
    Ok(Search { best, iterations })
}

fn arc_flows(net: &DynamicNetwork, w: &Wten, sol: &FlowSolution, include_supply_arcs: bool) -> Vec<ArcFlow> {
    let n = net.node_count();
    let shift = n as Label * w.t_offset as Label;
    let id = |i: usize| net.nodes()[i].id.clone();
    let mut out = Vec::new();
    for (a, &flow) in w.arcs.iter().zip(&sol.flows) {
        if flow == 0 || (!include_supply_arcs && a.from == w.super_source) {
            continue;
        }
        let (u, v) = (if a.from == w.super_source { 0 } else { a.from + shift }, a.to + shift);
        let (depart_t, arrive_t, base_edge) = match a.kind {
            ArcKind::Movement => {
                let arc = &net.arcs()[a.base];
                let (_, t0) = w.decode(a.from).expect("movement tail");
                let (_, t1) = w.decode(a.to).expect("movement head");
                (t0, t1, Some((id(arc.from), id(arc.to))))
            }
            ArcKind::Holdover => {
                let (i, t0) = w.decode(a.from).expect("holdover tail");
                (t0, t0 + 1, Some((id(i), id(i))))
            }
            ArcKind::Super => {
                let end = if a.from == w.super_source { a.to } else { a.from };
                let (_, t) = w.decode(end).expect("terminal copy");
                (t, t, None)
            }
        };
        out.push(ArcFlow { u, v, base_edge, depart_t, arrive_t, flow, kind: a.kind });
    }
    out
}

fn sort_flows(flows: &mut [ArcFlow]) {
    flows.sort_by_key(|f| (f.u, f.v));
}

/// Plans from scratch: grows the horizon from the initial estimate until everyone is
/// evacuated or no more people can be, and returns the plan at the smallest horizon
/// reaching the best flow value.
pub fn plan_initial(
    net: &DynamicNetwork,
    scenario: &FireScenario,
    t_max: u32,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let started = Instant::now();
    validate_monotone(scenario, t_max)?;
    let start = horizon_bound(net)?.initial_horizon();
    if t_max < start {
        return Err(PlanError::HorizonTooSmall { t_max, needed: start });
    }
    let total = net.total_supply();
    let mut timings = PhaseTimings::default();
    let clock = Instant::now();
    let mut cache = FireCache::build_range(net, scenario, 0, start)?;
    timings.fire += clock.elapsed();
    info!("planning: {} nodes, {} arcs, supply {total}, starting at horizon {start}", net.node_count(), net.arc_count());

    let search = search_horizon(start, 0, t_max, total, net.total_travel_time().max(1), |t| {
        let clock = Instant::now();
        cache.extend_to(net, scenario, t)?;
        timings.fire += clock.elapsed();
        let clock = Instant::now();
        let mut spec = WindowSpec::initial(net, t);
        spec.holdover_all = cfg.holdover_all;
        let wten = build_window(net, &cache, &spec)?;
        if wten.t_max.iter().all(|(_, t)| t.is_none()) {
            return Err(WtenError::NoReachableSink.into());
        }
        if !net.sources().is_empty() && wten.sources.is_empty() {
            return Err(WtenError::NothingToEvacuate.into());
        }
        timings.wten += clock.elapsed();
        let clock = Instant::now();
        let sol = solve_dinic(&wten);
        timings.flow += clock.elapsed();
        Ok(Attempt { wten, sol })
    })?;

    let Attempt { wten, sol } = search.best;
    let clock = Instant::now();
    let mut flows = arc_flows(net, &wten, &sol, true);
    sort_flows(&mut flows);
    let routes = decompose_flows(
        &flows.iter().map(|f| (f.u, f.v, f.flow)).collect::<Vec<_>>(),
        0,
        wten.super_sink,
        &BTreeMap::new(),
    )?;
    timings.flow += clock.elapsed();
    timings.total = started.elapsed();
    info!("plan: horizon {}, evacuated {} of {total}", wten.horizon, sol.value);
    let plan = EvacuationPlan {
        horizon: wten.horizon,
        dt_seconds: net.dt_seconds(),
        node_count: net.node_count(),
        t_max,
        tolerance_m: 0.0,
        complete: sol.value == total,
        evacuated: sol.value,
        total_supply: total,
        stranded: 0,
        stranded_at: Vec::new(),
        flows,
        routes,
        scenario: scenario.clone(),
        fingerprint: fingerprint(scenario),
    };
    let stats = PlanStats {
        timings,
        wten_nodes: wten.node_count(),
        wten_arcs: wten.arc_count(),
        iterations: search.iterations,
    };
    Ok(PlanOutcome { plan, stats })
}

/// A revised fire prediction taking effect at `t_fire`; the plan may change from `t_reopt`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateRequest {
    pub t_reopt: u32,
    pub t_fire: u32,
    pub new_scenario: FireScenario,
}

/// Replans from `t_reopt` under the old fire combined with the new prediction. Flows that
/// leave before `t_reopt` are kept exactly; people caught by the fire at the seam are
/// reported as stranded.
pub fn plan_update(
    net: &DynamicNetwork,
    prev: &EvacuationPlan,
    req: &UpdateRequest,
    t_max: u32,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlanError> {
    let started = Instant::now();
    if prev.node_count != net.node_count() {
        return Err(PlanError::NetworkMismatch { plan: prev.node_count, network: net.node_count() });
    }
    let (t_reopt, t_fire) = (req.t_reopt, req.t_fire);
    if t_reopt == 0 {
        return Err(PlanError::BadUpdate("t_reopt must be at least 1".into()));
    }
    if t_reopt > t_fire {
        return Err(PlanError::BadUpdate(format!("t_reopt {t_reopt} is after t_fire {t_fire}")));
    }
    if t_fire > prev.horizon {
        return Err(PlanError::BadUpdate(format!("t_fire {t_fire} is beyond the plan horizon {}", prev.horizon)));
    }
    let t_max = t_max.max(prev.horizon);
    let mut timings = PhaseTimings::default();
    let clock = Instant::now();
    let combined = merge_scenarios(&prev.scenario, &req.new_scenario, t_fire, t_max)?;
    validate_monotone(&combined, t_max)?;

    let n = net.node_count();
    let boundary = prev.boundary_supply(t_reopt);
    let supplies: Vec<SupplyAt> = boundary
        .supplies
        .iter()
        .map(|(&label, &amount)| {
            let (node, t) = prev.decode(label);
            SupplyAt { node, t, amount }
        })
        .collect();
    let prev_sink = prev.super_sink();
    let mut delivered: BTreeMap<usize, u64> = BTreeMap::new();
    let prefix: Vec<&ArcFlow> = prev.flows.iter().filter(|f| f.depart_t < t_reopt).collect();
    for f in &prefix {
        if f.v == prev_sink {
            *delivered.entry(prev.decode(f.u).0).or_insert(0) += f.flow;
        }
    }
    let sinks: Vec<(usize, u64)> = net
        .sinks()
        .into_iter()
        .map(|j| (j, net.nodes()[j].demand.saturating_sub(delivered.get(&j).copied().unwrap_or(0))))
        .collect();
    let floor = supplies.iter().map(|s| s.t).max().unwrap_or(0).max(t_reopt);
    let start = prev.horizon.max(floor);
    let mut cache = FireCache::build_range(net, &combined, t_reopt, start)?;
    timings.fire += clock.elapsed();
    let target: u64 = supplies.iter().filter(|s| !cache.is_overtaken(s.t, s.node)).map(|s| s.amount).sum();
    info!(
        "update from {t_reopt}: {} people at the seam ({target} reachable), {} delivered earlier",
        boundary.total(),
        delivered.values().sum::<u64>()
    );

    let search = search_horizon(start, floor, t_max, target, net.total_travel_time().max(1), |t| {
        let clock = Instant::now();
        cache.extend_to(net, &combined, t)?;
        timings.fire += clock.elapsed();
        let clock = Instant::now();
        let spec = WindowSpec {
            t_start: t_reopt,
            t_end: t,
            supplies: supplies.clone(),
            sinks: sinks.clone(),
            holdover_all: cfg.holdover_all,
        };
        let wten = build_window(net, &cache, &spec)?;
        timings.wten += clock.elapsed();
        let clock = Instant::now();
        let sol = solve_dinic(&wten);
        timings.flow += clock.elapsed();
        Ok(Attempt { wten, sol })
    })?;

    let Attempt { wten, sol } = search.best;
    let clock = Instant::now();
    let horizon = wten.horizon + wten.t_offset;
    let sink = n as Label * (horizon as Label + 1) + 1;
    let mut flows: Vec<ArcFlow> = prefix
        .into_iter()
        .map(|f| {
            let mut f = f.clone();
            if f.v == prev_sink {
                f.v = sink;
            }
            f
        })
        .collect();
    flows.extend(arc_flows(net, &wten, &sol, false));
    sort_flows(&mut flows);

    let mut routed: BTreeMap<Label, u64> = BTreeMap::new();
    for (a, &f) in wten.arcs.iter().zip(&sol.flows) {
        if a.from == wten.super_source {
            routed.insert(a.to + n as Label * t_reopt as Label, f);
        }
    }
    let mut stranded_at = Vec::new();
    for (&label, &amount) in &boundary.supplies {
        let left = amount - routed.get(&label).copied().unwrap_or(0).min(amount);
        if left > 0 {
            let (node, t) = prev.decode(label);
            stranded_at.push(StrandedAt { label, node: net.nodes()[node].id.clone(), t, amount: left });
        }
    }
    let stranded: u64 = stranded_at.iter().map(|s| s.amount).sum();
    let absorb: BTreeMap<Label, u64> = stranded_at.iter().map(|s| (s.label, s.amount)).collect();
    let routes = decompose_flows(&flows.iter().map(|f| (f.u, f.v, f.flow)).collect::<Vec<_>>(), 0, sink, &absorb)?;
    let evacuated: u64 = flows.iter().filter(|f| f.v == sink).map(|f| f.flow).sum();
    timings.flow += clock.elapsed();
    timings.total = started.elapsed();
    info!("updated plan: horizon {horizon}, evacuated {evacuated} of {}, stranded {stranded}", prev.total_supply);

    let plan = EvacuationPlan {
        horizon,
        dt_seconds: prev.dt_seconds,
        node_count: n,
        t_max,
        tolerance_m: prev.tolerance_m,
        complete: evacuated == prev.total_supply,
        evacuated,
        total_supply: prev.total_supply,
        stranded,
        stranded_at,
        flows,
        routes,
        fingerprint: fingerprint(&combined),
        scenario: combined,
    };
    let stats = PlanStats {
        timings,
        wten_nodes: wten.node_count(),
        wten_arcs: wten.arc_count(),
        iterations: search.iterations,
    };
    Ok(PlanOutcome { plan, stats })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanCheckError {
    #[error("flow record {0}: {1}")]
    BadRecord(usize, String),
    #[error("arc {u}->{v} carries {flow} over capacity {capacity}")]
    OverCapacity { u: Label, v: Label, flow: u64, capacity: u64 },
    #[error("label {label}: in {inflow}, out {outflow}, stranded {stranded}")]
    Unbalanced { label: Label, inflow: u64, outflow: u64, stranded: u64 },
    #[error("sink {0:?} receives more than its demand")]
    OverDemand(String),
    #[error("source {0:?} sends more than its supply")]
    OverSupply(String),
    #[error("plan totals disagree: {0}")]
    Totals(String),
    #[error(transparent)]
    Fire(#[from] FireError),
}

/// Checks a plan against the network and the plan's own fire scenario: every arc exists
/// and respects its capacity, and flow is conserved at every label up to stranded people.
pub fn verify_plan(net: &DynamicNetwork, plan: &EvacuationPlan) -> Result<(), PlanCheckError> {
    let n = net.node_count();
    if plan.node_count != n {
        return Err(PlanCheckError::Totals(format!("plan has {} nodes, network {n}", plan.node_count)));
    }
    let cache = FireCache::build_range(net, &plan.scenario, 0, plan.horizon)?;
    let sink = plan.super_sink();
    let stranded: BTreeMap<Label, u64> = plan.stranded_at.iter().map(|s| (s.label, s.amount)).collect();
    let mut balance: BTreeMap<Label, (u64, u64)> = BTreeMap::new();
    let mut sent: BTreeMap<usize, u64> = BTreeMap::new();
    let mut received: BTreeMap<usize, u64> = BTreeMap::new();
    let alive = |label: Label, k: usize| -> Result<(usize, u32), PlanCheckError> {
        let (i, t) = plan.decode(label);
        if t > plan.horizon {
            return Err(PlanCheckError::BadRecord(k, format!("label {label} beyond the horizon")));
        }
        if cache.is_overtaken(t, i) && !stranded.contains_key(&label) {
            return Err(PlanCheckError::BadRecord(k, format!("label {label} is overtaken by the fire")));
        }
        Ok((i, t))
    };
    for (k, f) in plan.flows.iter().enumerate() {
        let capacity = match f.kind {
            ArcKind::Super if f.u == 0 => {
                let (i, t) = alive(f.v, k)?;
                if t != 0 {
                    return Err(PlanCheckError::BadRecord(k, "supply enters after instance 0".into()));
                }
                *sent.entry(i).or_insert(0) += f.flow;
                net.nodes()[i].supply
            }
            ArcKind::Super => {
                if f.v != sink {
                    return Err(PlanCheckError::BadRecord(k, format!("super arc to {} is not the super sink", f.v)));
                }
                let (j, _) = alive(f.u, k)?;
                *received.entry(j).or_insert(0) += f.flow;
                net.nodes()[j].demand
            }
            ArcKind::Holdover => {
                let (i, t) = alive(f.u, k)?;
                let (i2, t2) = alive(f.v, k)?;
                if i != i2 || t2 != t + 1 {
                    return Err(PlanCheckError::BadRecord(k, "holdover must wait one instance in place".into()));
                }
                if net.is_terminal(i) {
                    net.holdover_capacity(i)
                } else {
                    net.total_supply()
                }
            }
            ArcKind::Movement => {
                let (i, t) = alive(f.u, k)?;
                let (j, t2) = alive(f.v, k)?;
                let a = net
                    .find_arc(i, j)
                    .ok_or_else(|| PlanCheckError::BadRecord(k, format!("no road from {i} to {j}")))?;
                let arc = &net.arcs()[a];
                if t2 != t + arc.travel_time {
                    return Err(PlanCheckError::BadRecord(k, "arrival does not match the travel time".into()));
                }
                scaled_capacity(arc.capacity, cache.arc_dist(t, a), arc.travel_time)
            }
        };
        if f.flow > capacity {
            return Err(PlanCheckError::OverCapacity { u: f.u, v: f.v, flow: f.flow, capacity });
        }
        balance.entry(f.u).or_default().1 += f.flow;
        balance.entry(f.v).or_default().0 += f.flow;
    }
    for (&i, &s) in &sent {
        if s > net.nodes()[i].supply {
            return Err(PlanCheckError::OverSupply(net.nodes()[i].id.clone()));
        }
    }
    for (&j, &r) in &received {
        if r > net.nodes()[j].demand {
            return Err(PlanCheckError::OverDemand(net.nodes()[j].id.clone()));
        }
    }
    for (&label, &(inflow, outflow)) in &balance {
        if label == 0 || label == sink {
            continue;
        }
        let s = stranded.get(&label).copied().unwrap_or(0);
        if inflow != outflow + s {
            return Err(PlanCheckError::Unbalanced { label, inflow, outflow, stranded: s });
        }
    }
    let into_sink = balance.get(&sink).map_or(0, |b| b.0);
    if into_sink != plan.evacuated {
        return Err(PlanCheckError::Totals(format!("{into_sink} reach the super sink, plan says {}", plan.evacuated)));
    }
    if plan.stranded != stranded.values().sum::<u64>() {
        return Err(PlanCheckError::Totals("stranded total does not match its breakdown".into()));
    }
    if plan.routes.total() != plan.evacuated + plan.stranded {
        return Err(PlanCheckError::Totals("routes do not carry every person in the plan".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fire::{build_cache, GrowingCircle};
    use crate::geometry::Point;
    use crate::maxflow::solve_reference;
    use crate::roadnet::test_support::{network, with_terminals};
    use crate::wten::{build_wten, WtenArc};

    fn line(supply: u64, cap: u64, lambda: u32) -> DynamicNetwork {
        with_terminals(network(&[(0.0, 0.0), (100.0, 0.0)], &[(0, 1, lambda, cap)]), &[(0, supply)], &[(1, supply)])
    }

    fn circle(x: f64, y: f64, r0: f64, growth: f64) -> FireScenario {
        FireScenario::circles(vec![GrowingCircle { center: Point::new(x, y), r0, growth }]).unwrap()
    }

    #[test]
    fn line_network_minimal_horizon() {
        let net = line(10, 3, 2);
        // oracle: first horizon where the reference solver moves everyone
        let oracle = (0..20)
            .find(|&t| {
                let cache = build_cache(&net, &FireScenario::none(), t).unwrap();
                solve_reference(&build_wten(&net, &cache, t).unwrap()).value == 10
            })
            .unwrap();
        assert_eq!(oracle, 5);
        let out = plan_initial(&net, &FireScenario::none(), 20, &PlannerConfig::default()).unwrap();
        let plan = &out.plan;
        assert_eq!(plan.horizon, 5);
        assert!(plan.complete);
        let mut departures: Vec<(u32, u64)> = plan
            .flows
            .iter()
            .filter(|f| f.kind == ArcKind::Movement)
            .map(|f| (f.depart_t, f.flow))
            .collect();
        departures.sort();
        let times: Vec<u32> = departures.iter().map(|d| d.0).collect();
        let mut amounts: Vec<u64> = departures.iter().map(|d| d.1).collect();
        amounts.sort();
        assert_eq!(times, vec![0, 1, 2, 3]);
        assert_eq!(amounts, vec![1, 3, 3, 3]);
        verify_plan(&net, plan).unwrap();
    }

    #[test]
    fn zero_supply_is_complete_immediately() {
        let net = with_terminals(network(&[(0.0, 0.0), (100.0, 0.0)], &[(0, 1, 2, 3)]), &[], &[(1, 5)]);
        let out = plan_initial(&net, &FireScenario::none(), 10, &PlannerConfig::default()).unwrap();
        assert_eq!((out.plan.horizon, out.plan.evacuated, out.plan.complete), (0, 0, true));
        assert!(out.plan.routes.routes.is_empty());
    }

    #[test]
    fn engulfed_sink_is_infeasible() {
        let net = line(10, 3, 2);
        let err = plan_initial(&net, &circle(100.0, 0.0, 5.0, 1.0), 20, &PlannerConfig::default()).unwrap_err();
        assert_eq!(err, PlanError::Wten(WtenError::NoReachableSink));
        assert!(err.is_infeasible());
    }

    #[test]
    fn tmax_below_initial_horizon() {
        let err = plan_initial(&line(10, 3, 2), &FireScenario::none(), 2, &PlannerConfig::default()).unwrap_err();
        assert_eq!(err, PlanError::HorizonTooSmall { t_max: 2, needed: 3 });
    }

    #[test]
    fn incomplete_plan_reports_first_best_horizon() {
        // fire closes the only road at t=3; people leaving at t=0..2 escape
        let net = line(10, 2, 1);
        let fire = circle(50.0, -8.0, 5.0, 1.0);
        let out = plan_initial(&net, &fire, 12, &PlannerConfig::default()).unwrap();
        let oracle_best = (0..=12)
            .map(|t| {
                let cache = build_cache(&net, &fire, t).unwrap();
                solve_reference(&build_wten(&net, &cache, t).unwrap()).value
            })
            .collect::<Vec<_>>();
        let max = *oracle_best.iter().max().unwrap();
        assert!(max < 10);
        assert_eq!(out.plan.evacuated, max);
        assert_eq!(out.plan.horizon as usize, oracle_best.iter().position(|&v| v == max).unwrap());
        assert!(!out.plan.complete);
    }

    fn hand_wten() -> Wten {
        // labels for n = 3 over T = 4
        let arc = |from, to, capacity, kind| WtenArc { from, to, capacity, kind, base: 0 };
        Wten {
            horizon: 4,
            t_offset: 0,
            base_nodes: 3,
            nodes: vec![0, 1, 4, 5, 7, 9, 16],
            arcs: vec![
                arc(0, 1, 10, ArcKind::Super),
                arc(1, 4, 10, ArcKind::Holdover),
                arc(4, 9, 10, ArcKind::Movement),
                arc(4, 7, 10, ArcKind::Holdover),
                arc(5, 16, 10, ArcKind::Super),
            ],
            super_source: 0,
            super_sink: 16,
            sources: vec![1],
            sinks: vec![],
            t_max: vec![],
            unplaced: vec![],
        }
    }

    #[test]
    fn boundary_crossing_movement_arc() {
        // 1-based node 1 at t=1 is label 4; node 3 at t=3 is label 12
        let mut w = hand_wten();
        w.arcs[2].to = 12;
        w.nodes = vec![0, 1, 4, 5, 7, 12, 16];
        let sol = FlowSolution { value: 0, flows: vec![10, 10, 4, 6, 0] };
        let s = derive_new_sources(&w, &sol, 2);
        assert_eq!(s.supplies, BTreeMap::from([(7, 6), (12, 4)]));
    }

    #[test]
    fn holdover_at_source_crosses_like_movement() {
        let w = hand_wten();
        let sol = FlowSolution { value: 0, flows: vec![6, 6, 0, 6, 0] };
        assert_eq!(derive_new_sources(&w, &sol, 2).supplies, BTreeMap::from([(7, 6)]));
    }

    #[test]
    fn reopt_at_zero_gives_original_sources() {
        let w = hand_wten();
        let sol = FlowSolution { value: 0, flows: vec![0; 5] };
        assert_eq!(derive_new_sources(&w, &sol, 0).supplies, BTreeMap::from([(1, 10)]));
    }

    fn grid_fixture() -> DynamicNetwork {
        // 0 -- 1 -- 2 with a bypass 0 -- 3 -- 2; sink at 2
        let net = network(
            &[(0.0, 0.0), (200.0, 0.0), (400.0, 0.0), (200.0, 300.0)],
            &[(0, 1, 2, 4), (1, 2, 2, 4), (0, 3, 3, 3), (3, 2, 3, 3)],
        );
        with_terminals(net, &[(0, 24)], &[(2, 24)])
    }

    #[test]
    fn identity_update_keeps_value_and_prefix() {
        let net = grid_fixture();
        let fire = circle(200.0, -60.0, 5.0, 1.0);
        let prev = plan_initial(&net, &fire, 30, &PlannerConfig::default()).unwrap().plan;
        verify_plan(&net, &prev).unwrap();
        for t_reopt in 1..prev.horizon {
            let req = UpdateRequest { t_reopt, t_fire: t_reopt, new_scenario: fire.clone() };
            let next = plan_update(&net, &prev, &req, 30, &PlannerConfig::default()).unwrap().plan;
            assert_eq!(next.evacuated, prev.evacuated, "t_reopt={t_reopt}");
            assert_eq!(next.stranded, 0);
            let before = |p: &EvacuationPlan| {
                p.flows.iter().filter(|f| f.depart_t < t_reopt && f.v != p.super_sink()).cloned().collect::<Vec<_>>()
            };
            assert_eq!(before(&next), before(&prev));
            verify_plan(&net, &next).unwrap();
        }
    }

    #[test]
    fn enlarged_fire_never_helps() {
        let net = grid_fixture();
        let fire = circle(200.0, -60.0, 5.0, 1.0);
        let prev = plan_initial(&net, &fire, 30, &PlannerConfig::default()).unwrap().plan;
        let worse = circle(200.0, 150.0, 20.0, 10.0);
        let req = UpdateRequest { t_reopt: 2, t_fire: 3, new_scenario: worse };
        let next = plan_update(&net, &prev, &req, 30, &PlannerConfig::default()).unwrap().plan;
        assert!(next.evacuated <= prev.evacuated);
        verify_plan(&net, &next).unwrap();
        assert_eq!(next.evacuated + next.stranded + (prev.total_supply - prev.evacuated), prev.total_supply);
    }

    #[test]
    fn engulfed_route_leaves_only_prefix_deliveries() {
        // chain 0 -> 1 -> 2 -> 3 -> 4 with the sink at 4, cut at node 3 from t_fire
        let net = network(
            &[(0.0, 0.0), (100.0, 0.0), (200.0, 0.0), (300.0, 0.0), (400.0, 0.0)],
            &[(0, 1, 1, 2), (1, 2, 1, 2), (2, 3, 1, 2), (3, 4, 1, 2)],
        );
        let net = with_terminals(net, &[(0, 12)], &[(4, 12)]);
        let prev = plan_initial(&net, &FireScenario::none(), 30, &PlannerConfig::default()).unwrap().plan;
        assert!(prev.complete);
        let t_reopt = 6;
        let req = UpdateRequest { t_reopt, t_fire: t_reopt, new_scenario: circle(300.0, 0.0, 30.0, 0.0) };
        let next = plan_update(&net, &prev, &req, 30, &PlannerConfig::default()).unwrap().plan;
        let sink_label_max = prev.super_sink();
        let reached: u64 = prev
            .flows
            .iter()
            .filter(|f| f.kind == ArcKind::Movement && f.v != sink_label_max && prev.decode(f.v).0 == 4)
            .filter(|f| f.arrive_t <= t_reopt)
            .map(|f| f.flow)
            .sum();
        assert!(reached > 0 && reached < 12);
        assert_eq!(next.evacuated, reached);
        assert_eq!(next.evacuated + next.stranded, prev.total_supply);
        verify_plan(&net, &next).unwrap();
    }

    #[test]
    fn update_ordering_rules() {
        let net = grid_fixture();
        let prev = plan_initial(&net, &FireScenario::none(), 30, &PlannerConfig::default()).unwrap().plan;
        let bad = |t_reopt, t_fire| UpdateRequest { t_reopt, t_fire, new_scenario: FireScenario::none() };
        let cfg = PlannerConfig::default();
        assert!(matches!(plan_update(&net, &prev, &bad(3, 2), 30, &cfg), Err(PlanError::BadUpdate(_))));
        assert!(matches!(plan_update(&net, &prev, &bad(0, 2), 30, &cfg), Err(PlanError::BadUpdate(_))));
        assert!(matches!(plan_update(&net, &prev, &bad(1, prev.horizon + 1), 30, &cfg), Err(PlanError::BadUpdate(_))));
    }

    #[test]
    fn seam_accounting_balances() {
        let net = grid_fixture();
        let prev = plan_initial(&net, &circle(200.0, -60.0, 5.0, 1.0), 30, &PlannerConfig::default()).unwrap().plan;
        for t in 1..=prev.horizon {
            let residue = prev.total_supply - prev.evacuated;
            assert_eq!(prev.boundary_supply(t).total() + prev.delivered_before(t) + residue, prev.total_supply);
        }
    }
}
