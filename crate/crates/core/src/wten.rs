//! Wildfire time-expanded network: overtaken copies pruned, capacities scaled by the
//! distance to the fire, and a super source and sink attached.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::fire::FireCache;
use crate::roadnet::DynamicNetwork;
use crate::ten::{build_ten_with, label_of, ArcKind, Label};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WtenError {
    #[error("no reachable sink: every sink is overtaken by the fire at the start")]
    NoReachableSink,
    #[error("nothing to evacuate safely: every source is overtaken by the fire at the start")]
    NothingToEvacuate,
    #[error("window [{start}..{end}] is empty")]
    EmptyWindow { start: u32, end: u32 },
}

/// Capacities below this fraction of the original are zeroed.
pub const CUTOFF_FRACTION: f64 = 0.2;

/// Fraction of an arc's capacity surviving at fire distance `f` (meters) for travel time `lambda`.
pub fn capacity_fraction(f: f64, lambda: u32) -> f64 {
    let lambda = lambda as f64;
    if f >= lambda {
        1.0
    } else {
        f / lambda
    }
}

/// Splits a finite non-negative double into `m·2^e`.
fn decompose_f64(f: f64) -> (u64, i32) {
    let bits = f.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let frac = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    }
}

/// `floor(u·p)` for `p = capacity_fraction(f, lambda)`, zero when `p < 0.2`.
/// Evaluated in exact integer arithmetic on the binary value of `f`.
pub fn scaled_capacity(u: u64, f: f64, lambda: u32) -> u64 {
    debug_assert!(lambda >= 1);
    if f.is_nan() || f <= 0.0 {
        return 0;
    }
    if f >= lambda as f64 {
        return u;
    }
    // here f = m·2^e < lambda < 2^32, so e < 32
    let (m, e) = decompose_f64(f);
    let (num, den): (u128, u128) = if e >= 0 {
        ((m as u128) << e, lambda as u128)
    } else if -e >= 56 {
        // 5·m < 2^56 ≤ lambda·2^-e: below the cutoff
        return 0;
    } else {
        (m as u128, (lambda as u128) << (-e))
    };
    if 5 * num < den {
        return 0;
    }
    (u as u128 * num / den) as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WtenArc {
    pub from: Label,
    pub to: Label,
    pub capacity: u64,
    pub kind: ArcKind,
    /// Base arc of a movement arc; base node of a holdover or super arc.
    pub base: usize,
}

/// Supply placed at a base node at an absolute instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupplyAt {
    pub node: usize,
    pub t: u32,
    pub amount: u64,
}

/// The instance window and terminals of a build.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec {
    pub t_start: u32,
    pub t_end: u32,
    pub supplies: Vec<SupplyAt>,
    /// Base node and remaining demand.
    pub sinks: Vec<(usize, u64)>,
    pub holdover_all: bool,
}

impl WindowSpec {
    /// The whole horizon `[0..T]` with the network's own supplies and demands.
    pub fn initial(net: &DynamicNetwork, horizon: u32) -> Self {
        WindowSpec {
            t_start: 0,
            t_end: horizon,
            supplies: net
                .sources()
                .into_iter()
                .map(|i| SupplyAt { node: i, t: 0, amount: net.nodes()[i].supply })
                .collect(),
            sinks: net.sinks().into_iter().map(|j| (j, net.nodes()[j].demand)).collect(),
            holdover_all: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wten {
    /// Local horizon; local instance `t` is absolute instance `t + t_offset`.
    pub horizon: u32,
    pub t_offset: u32,
    pub base_nodes: usize,
    /// Surviving labels in increasing order, with the super source first and the super sink last.
    pub nodes: Vec<Label>,
    pub arcs: Vec<WtenArc>,
    pub super_source: Label,
    pub super_sink: Label,
    pub sources: Vec<Label>,
    pub sinks: Vec<Label>,
    /// Per sink base node, the last absolute instance it is not overtaken within the window.
    pub t_max: Vec<(usize, Option<u32>)>,
    /// Supply whose copy is overtaken, as (base node, absolute instance, amount).
    pub unplaced: Vec<SupplyAt>,
}

impl Wten {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn is_super(&self, label: Label) -> bool {
        label == self.super_source || label == self.super_sink
    }

    /// Base node (0-based) and absolute instance of a non-super label.
    pub fn decode(&self, label: Label) -> Option<(usize, u32)> {
        if self.is_super(label) {
            return None;
        }
        let n = self.base_nodes as u64;
        let z = label - 1;
        Some(((z % n) as usize, (z / n) as u32 + self.t_offset))
    }

    /// Local label of base node `idx` at absolute instance `t`.
    pub fn label(&self, idx: usize, t: u32) -> Label {
        label_of(idx, t - self.t_offset, self.base_nodes)
    }

    pub fn contains(&self, label: Label) -> bool {
        self.nodes.binary_search(&label).is_ok()
    }

    pub fn supply_capacity(&self) -> u64 {
        self.arcs.iter().filter(|a| a.from == self.super_source).map(|a| a.capacity).sum()
    }

    pub fn demand_capacity(&self) -> u64 {
        self.arcs.iter().filter(|a| a.to == self.super_sink).map(|a| a.capacity).sum()
    }

    /// One arc per line, `from to capacity kind`, sorted; the super source is label 0.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(Label, Label, u64, ArcKind)> =
            self.arcs.iter().map(|a| (a.from, a.to, a.capacity, a.kind)).collect();
        rows.sort();
        let mut out = String::new();
        for (u, v, c, k) in rows {
            let _ = writeln!(out, "{u} {v} {c} {}", k.as_str());
        }
        out
    }
}

/// Builds the network over `[0..T]` for the network's own sources and sinks.
pub fn build_wten(net: &DynamicNetwork, cache: &FireCache, horizon: u32) -> Result<Wten, WtenError> {
    let w = build_window(net, cache, &WindowSpec::initial(net, horizon))?;
    if w.t_max.iter().all(|(_, t)| t.is_none()) {
        return Err(WtenError::NoReachableSink);
    }
    if !net.sources().is_empty() && w.sources.is_empty() {
        return Err(WtenError::NothingToEvacuate);
    }
    Ok(w)
}

/// Builds the network over the window `[t_start..t_end]`, relabelled so that
/// `t_start` becomes local instance 0. Never fails for lack of sources or sinks.
pub fn build_window(net: &DynamicNetwork, cache: &FireCache, spec: &WindowSpec) -> Result<Wten, WtenError> {
    if spec.t_end < spec.t_start {
        return Err(WtenError::EmptyWindow { start: spec.t_start, end: spec.t_end });
    }
    let n = net.node_count();
    let local_horizon = spec.t_end - spec.t_start;
    let off = spec.t_start;
    let alive = |idx: usize, t_local: u32| !cache.is_overtaken(t_local + off, idx);
    let ten = build_ten_with(net, local_horizon, spec.holdover_all);
    let decode = |label: Label| {
        let z = label - 1;
        ((z % n as u64) as usize, (z / n as u64) as u32)
    };
    let live_arc = |from: Label, to: Label| {
        let (i, t) = decode(from);
        let (j, t2) = decode(to);
        alive(i, t) && alive(j, t2)
    };

    let super_source: Label = 0;
    let super_sink: Label = n as Label * (local_horizon as Label + 1) + 1;
    let mut nodes = vec![super_source];
    for t in 0..=local_horizon {
        for i in 0..n {
            if alive(i, t) {
                nodes.push(label_of(i, t, n));
            }
        }
    }
    nodes.push(super_sink);

    let kept: Vec<_> = ten.movement.iter().filter(|a| live_arc(a.from, a.to)).collect();
    let mut arcs: Vec<WtenArc> = kept
        .par_iter()
        .map(|a| {
            let (_, t) = decode(a.from);
            let lambda = net.arcs()[a.base].travel_time;
            WtenArc {
                from: a.from,
                to: a.to,
                capacity: scaled_capacity(a.capacity, cache.arc_dist(t + off, a.base), lambda),
                kind: ArcKind::Movement,
                base: a.base,
            }
        })
        .collect();
    arcs.extend(ten.holdover.iter().filter(|a| live_arc(a.from, a.to)).map(|a| WtenArc {
        from: a.from,
        to: a.to,
        capacity: a.capacity,
        kind: ArcKind::Holdover,
        base: a.base,
    }));

    let mut placed: BTreeMap<Label, (usize, u64)> = BTreeMap::new();
    let mut unplaced = Vec::new();
    for s in &spec.supplies {
        if s.amount == 0 {
            continue;
        }
        if s.t >= spec.t_start && s.t <= spec.t_end && alive(s.node, s.t - off) {
            placed.entry(label_of(s.node, s.t - off, n)).or_insert((s.node, 0)).1 += s.amount;
        } else {
            unplaced.push(*s);
        }
    }
    let sources: Vec<Label> = placed.keys().copied().collect();
    for (&label, &(node, amount)) in &placed {
        arcs.push(WtenArc { from: super_source, to: label, capacity: amount, kind: ArcKind::Super, base: node });
    }

    let mut sinks = Vec::new();
    let mut t_max = Vec::new();
    for &(j, demand) in &spec.sinks {
        let last = (0..=local_horizon).rev().find(|&t| alive(j, t));
        t_max.push((j, last.map(|t| t + off)));
        if let Some(t) = last {
            let label = label_of(j, t, n);
            sinks.push(label);
            if demand > 0 {
                arcs.push(WtenArc { from: label, to: super_sink, capacity: demand, kind: ArcKind::Super, base: j });
            }
        }
    }

    Ok(Wten {
        horizon: local_horizon,
        t_offset: off,
        base_nodes: n,
        nodes,
        arcs,
        super_source,
        super_sink,
        sources,
        sinks,
        t_max,
        unplaced,
    })
}
