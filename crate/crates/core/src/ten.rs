//! Plain time-expanded network.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::roadnet::DynamicNetwork;

/// Expanded-network node label. Copy `t` of base node `i` (1-based) is `i + n·t`.
pub type Label = u64;

/// Label of base node `i` (1-based) at instance `t` in a network of `n` nodes.
pub fn node_label(i: usize, t: u32, n: usize) -> Label {
    i as u64 + n as u64 * t as u64
}

/// Inverse of [`node_label`]: the 1-based base node and the instance.
pub fn decode_label(label: Label, n: usize) -> (usize, u32) {
    let n = n as u64;
    let z = label - 1;
    ((z % n) as usize + 1, (z / n) as u32)
}

/// Label of 0-based node index `idx` at instance `t`.
pub(crate) fn label_of(idx: usize, t: u32, n: usize) -> Label {
    node_label(idx + 1, t, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcKind {
    Movement,
    Holdover,
    Super,
}

impl ArcKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArcKind::Movement => "movement",
            ArcKind::Holdover => "holdover",
            ArcKind::Super => "super",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TenArc {
    pub from: Label,
    pub to: Label,
    pub capacity: u64,
    /// Index of the base arc for movement arcs, of the base node for holdover arcs.
    pub base: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ten {
    pub horizon: u32,
    pub base_nodes: usize,
    pub movement: Vec<TenArc>,
    pub holdover: Vec<TenArc>,
    pub sources: Vec<Label>,
    pub sinks: Vec<Label>,
}

impl Ten {
    pub fn node_count(&self) -> usize {
        (self.horizon as usize + 1) * self.base_nodes
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> {
        1..=self.node_count() as Label
    }

    pub fn arc_count(&self) -> usize {
        self.movement.len() + self.holdover.len()
    }

    /// One arc per line, `from to capacity kind`, sorted.
    pub fn dump(&self) -> String {
        let mut rows: Vec<(Label, Label, u64, ArcKind)> = self
            .movement
            .iter()
            .map(|a| (a.from, a.to, a.capacity, ArcKind::Movement))
            .chain(self.holdover.iter().map(|a| (a.from, a.to, a.capacity, ArcKind::Holdover)))
            .collect();
        rows.sort();
        let mut out = String::new();
        for (u, v, c, k) in rows {
            let _ = writeln!(out, "{u} {v} {c} {}", k.as_str());
        }
        out
    }
}

/// Time expansion over `[0..T]` with holdover at sources and sinks only.
pub fn build_ten(net: &DynamicNetwork, horizon: u32) -> Ten {
    build_ten_with(net, horizon, false)
}

/// Time expansion; `holdover_all` adds holdover arcs at every node. Nodes that are neither
/// sources nor sinks then hold up to the total supply.
pub fn build_ten_with(net: &DynamicNetwork, horizon: u32, holdover_all: bool) -> Ten {
    let n = net.node_count();
    let mut movement = Vec::new();
    for t in 0..horizon {
        for (k, a) in net.arcs().iter().enumerate() {
            let arrive = t as u64 + a.travel_time as u64;
            if arrive <= horizon as u64 {
                movement.push(TenArc {
                    from: label_of(a.from, t, n),
                    to: label_of(a.to, arrive as u32, n),
                    capacity: a.capacity,
                    base: k,
                });
            }
        }
    }
    let mut holdover = Vec::new();
    for i in 0..n {
        let capacity = if net.is_terminal(i) {
            net.holdover_capacity(i)
        } else if holdover_all {
            net.total_supply()
        } else {
            continue;
        };
        for t in 0..horizon {
            holdover.push(TenArc { from: label_of(i, t, n), to: label_of(i, t + 1, n), capacity, base: i });
        }
    }
    Ten {
        horizon,
        base_nodes: n,
        movement,
        holdover,
        sources: net.sources().into_iter().map(|i| label_of(i, 0, n)).collect(),
        sinks: net.sinks().into_iter().map(|i| label_of(i, horizon, n)).collect(),
    }
}
