//! Maximum flow on a [`Wten`] and decomposition of a flow into routes.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ten::Label;
use crate::wten::Wten;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowError {
    #[error("flow solution has {got} arc values for {expected} arcs")]
    LengthMismatch { got: usize, expected: usize },
    #[error("arc {from}->{to} carries {flow} over capacity {capacity}")]
    OverCapacity { from: Label, to: Label, flow: u64, capacity: u64 },
    #[error("flow is not conserved at label {label}: in {inflow}, out {outflow}")]
    Unbalanced { label: Label, inflow: u64, outflow: u64 },
    #[error("reported value {reported} differs from the super source out-flow {actual}")]
    ValueMismatch { reported: u64, actual: u64 },
    #[error("flow cannot be decomposed: stuck at label {0}")]
    Stuck(Label),
}

/// Integral flow on every arc of a [`Wten`], in arc order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowSolution {
    pub value: u64,
    pub flows: Vec<u64>,
}

struct Residual {
    head: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl Residual {
    /// Edge `2k` is arc `k`, edge `2k+1` its reverse. Adjacency is ordered by head label.
    fn new(w: &Wten) -> Self {
        let idx = |l: Label| w.nodes.binary_search(&l).expect("arc endpoint is a node");
        let n = w.nodes.len();
        let mut head = Vec::with_capacity(w.arcs.len() * 2);
        let mut cap = Vec::with_capacity(w.arcs.len() * 2);
        let mut adj = vec![Vec::new(); n];
        for (k, a) in w.arcs.iter().enumerate() {
            let (u, v) = (idx(a.from), idx(a.to));
            head.push(v);
            cap.push(a.capacity);
            head.push(u);
            cap.push(0);
            adj[u].push(2 * k);
            adj[v].push(2 * k + 1);
        }
        for list in &mut adj {
            list.sort_by_key(|&e| (head[e], e));
        }
        Residual { head, cap, adj }
    }
}

/// Dinic's blocking-flow algorithm.
pub fn solve_dinic(w: &Wten) -> FlowSolution {
    let mut g = Residual::new(w);
    let n = w.nodes.len();
    let (s, t) = (0, n - 1);
    let original: Vec<u64> = w.arcs.iter().map(|a| a.capacity).collect();
    let mut value = 0u64;
    let mut level = vec![u32::MAX; n];
    let mut next = vec![0usize; n];
    let mut queue = VecDeque::new();
    let mut path: Vec<usize> = Vec::new();
    loop {
        level.fill(u32::MAX);
        level[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &e in &g.adj[u] {
                let v = g.head[e];
                if g.cap[e] > 0 && level[v] == u32::MAX {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[t] == u32::MAX {
            break;
        }
        next.fill(0);
        path.clear();
        let mut u = s;
        loop {
            if u == t {
                let push = path.iter().map(|&e| g.cap[e]).min().expect("path to sink is non-empty");
                for &e in &path {
                    g.cap[e] -= push;
                    g.cap[e ^ 1] += push;
                }
                value += push;
                let k = path.iter().position(|&e| g.cap[e] == 0).expect("a bottleneck edge");
                path.truncate(k);
                u = path.last().map_or(s, |&e| g.head[e]);
                continue;
            }
            let mut advanced = false;
            while next[u] < g.adj[u].len() {
                let e = g.adj[u][next[u]];
                let v = g.head[e];
                if g.cap[e] > 0 && level[v] == level[u] + 1 {
                    path.push(e);
                    u = v;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if advanced {
                continue;
            }
            if u == s {
                break;
            }
            // dead end: drop u from the level graph and retreat
            level[u] = u32::MAX;
            let e = path.pop().expect("non-source node has an incoming path edge");
            u = g.head[e ^ 1];
            next[u] += 1;
        }
    }
    let flows = original.iter().enumerate().map(|(k, &c)| c - g.cap[2 * k]).collect();
    FlowSolution { value, flows }
}

/// Edmonds–Karp on a residual map keyed by node pairs; an independent cross-check for [`solve_dinic`].
pub fn solve_reference(w: &Wten) -> FlowSolution {
    let mut residual: HashMap<(Label, Label), u64> = HashMap::new();
    let mut neighbors: BTreeMap<Label, Vec<Label>> = BTreeMap::new();
    for a in &w.arcs {
        *residual.entry((a.from, a.to)).or_insert(0) += a.capacity;
        residual.entry((a.to, a.from)).or_insert(0);
        neighbors.entry(a.from).or_default().push(a.to);
        neighbors.entry(a.to).or_default().push(a.from);
    }
    for list in neighbors.values_mut() {
        list.sort_unstable();
        list.dedup();
    }
    let (s, t) = (w.super_source, w.super_sink);
    let mut value = 0u64;
    loop {
        let mut parent: HashMap<Label, Label> = HashMap::new();
        let mut queue = VecDeque::from([s]);
        parent.insert(s, s);
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &v in neighbors.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                if !parent.contains_key(&v) && residual[&(u, v)] > 0 {
                    parent.insert(v, u);
                    queue.push_back(v);
                }
            }
        }
        if !parent.contains_key(&t) {
            break;
        }
        let mut bottleneck = u64::MAX;
        let mut v = t;
        while v != s {
            let u = parent[&v];
            bottleneck = bottleneck.min(residual[&(u, v)]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[&v];
            *residual.get_mut(&(u, v)).unwrap() -= bottleneck;
            *residual.get_mut(&(v, u)).unwrap() += bottleneck;
            v = u;
        }
        value += bottleneck;
    }
    // net flow per node pair, split back over its arcs in order
    let mut pair_cap: HashMap<(Label, Label), u64> = HashMap::new();
    for a in &w.arcs {
        *pair_cap.entry((a.from, a.to)).or_insert(0) += a.capacity;
    }
    let mut left: HashMap<(Label, Label), u64> =
        pair_cap.iter().map(|(&k, &c)| (k, c.saturating_sub(residual[&k]))).collect();
    let flows = w
        .arcs
        .iter()
        .map(|a| {
            let rest = left.get_mut(&(a.from, a.to)).unwrap();
            let f = (*rest).min(a.capacity);
            *rest -= f;
            f
        })
        .collect();
    FlowSolution { value, flows }
}

/// Checks capacities, conservation at every non-terminal label, and the reported value.
pub fn check_feasible(w: &Wten, sol: &FlowSolution) -> Result<(), FlowError> {
    if sol.flows.len() != w.arcs.len() {
        return Err(FlowError::LengthMismatch { got: sol.flows.len(), expected: w.arcs.len() });
    }
    let mut balance: BTreeMap<Label, (u64, u64)> = BTreeMap::new();
    for (a, &f) in w.arcs.iter().zip(&sol.flows) {
        if f > a.capacity {
            return Err(FlowError::OverCapacity { from: a.from, to: a.to, flow: f, capacity: a.capacity });
        }
        balance.entry(a.from).or_default().1 += f;
        balance.entry(a.to).or_default().0 += f;
    }
    for (&label, &(inflow, outflow)) in &balance {
        if !w.is_super(label) && inflow != outflow {
            return Err(FlowError::Unbalanced { label, inflow, outflow });
        }
    }
    let out = balance.get(&w.super_source).map_or(0, |b| b.1);
    let into = balance.get(&w.super_sink).map_or(0, |b| b.0);
    if out != sol.value || into != sol.value {
        return Err(FlowError::ValueMismatch { reported: sol.value, actual: out });
    }
    Ok(())
}

/// One path of people from the super source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub amount: u64,
    pub steps: Vec<Label>,
    /// The route ends at a label where its people are stranded rather than at the super sink.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub stranded: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouteBundle {
    pub routes: Vec<Route>,
}

impl RouteBundle {
    pub fn total(&self) -> u64 {
        self.routes.iter().map(|r| r.amount).sum()
    }
}

/// Path decomposition of a feasible solution, always following the smallest next label.
pub fn decompose(w: &Wten, sol: &FlowSolution) -> Result<RouteBundle, FlowError> {
    check_feasible(w, sol)?;
    let arcs: Vec<(Label, Label, u64)> = w.arcs.iter().zip(&sol.flows).map(|(a, &f)| (a.from, a.to, f)).collect();
    decompose_flows(&arcs, w.super_source, w.super_sink, &BTreeMap::new())
}

/// Path decomposition of an acyclic flow whose labels increase along every arc.
/// `stranded` lists labels that absorb flow, so that there in-flow exceeds out-flow by the given amount.
pub fn decompose_flows(
    arcs: &[(Label, Label, u64)],
    source: Label,
    sink: Label,
    stranded: &BTreeMap<Label, u64>,
) -> Result<RouteBundle, FlowError> {
    let mut out: BTreeMap<Label, Vec<(Label, usize)>> = BTreeMap::new();
    let mut left: Vec<u64> = Vec::with_capacity(arcs.len());
    for (k, &(u, v, f)) in arcs.iter().enumerate() {
        left.push(f);
        if f > 0 {
            out.entry(u).or_default().push((v, k));
        }
    }
    for list in out.values_mut() {
        list.sort_unstable();
    }
    let mut absorb = stranded.clone();
    let mut cursor: HashMap<Label, usize> = HashMap::new();
    let mut routes = Vec::new();
    loop {
        let mut steps = vec![source];
        let mut used: Vec<usize> = Vec::new();
        let mut u = source;
        let mut ends_stranded = false;
        while u != sink {
            let list = out.get(&u).map(Vec::as_slice).unwrap_or(&[]);
            let at = cursor.entry(u).or_insert(0);
            while *at < list.len() && left[list[*at].1] == 0 {
                *at += 1;
            }
            if let Some(&(v, k)) = list.get(*at) {
                used.push(k);
                steps.push(v);
                u = v;
            } else if absorb.get(&u).is_some_and(|&r| r > 0) {
                ends_stranded = true;
                break;
            } else if u == source {
                return Ok(RouteBundle { routes });
            } else {
                return Err(FlowError::Stuck(u));
            }
        }
        let mut amount = used.iter().map(|&k| left[k]).min().unwrap_or(u64::MAX);
        if ends_stranded {
            amount = amount.min(absorb[&u]);
            *absorb.get_mut(&u).unwrap() -= amount;
        }
        for &k in &used {
            left[k] -= amount;
        }
        routes.push(Route { amount, steps, stranded: ends_stranded });
    }
}
