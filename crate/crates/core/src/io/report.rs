//! Run reports and their tabular summary.

use serde::{Deserialize, Serialize};

use crate::planner::{EvacuationPlan, PlanStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub fire_model_s: f64,
    pub wten_construction_s: f64,
    pub max_flow_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sizes {
    pub nodes: usize,
    pub arcs: usize,
    pub wten_nodes: usize,
    pub wten_arcs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    #[serde(rename = "T_sol")]
    pub horizon: u32,
    pub evacuated: u64,
    pub total_supply: u64,
    pub stranded: u64,
    pub complete: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iteration {
    #[serde(rename = "T")]
    pub horizon: u32,
    pub value: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub command: String,
    pub timings: Timings,
    pub sizes: Sizes,
    pub plan: Summary,
    pub iterations: Vec<Iteration>,
}

impl RunReport {
    pub fn new(command: &str, nodes: usize, arcs: usize, plan: &EvacuationPlan, stats: &PlanStats) -> Self {
        let t = &stats.timings;
        RunReport {
            command: command.to_string(),
            timings: Timings {
                fire_model_s: t.fire.as_secs_f64(),
                wten_construction_s: t.wten.as_secs_f64(),
                max_flow_s: t.flow.as_secs_f64(),
                total_s: t.total.as_secs_f64(),
            },
            sizes: Sizes { nodes, arcs, wten_nodes: stats.wten_nodes, wten_arcs: stats.wten_arcs },
            plan: Summary {
                horizon: plan.horizon,
                evacuated: plan.evacuated,
                total_supply: plan.total_supply,
                stranded: plan.stranded,
                complete: plan.complete,
            },
            iterations: stats.iterations.iter().map(|&(horizon, value)| Iteration { horizon, value }).collect(),
        }
    }
}

type Cell = Box<dyn Fn(&RunReport) -> String>;

/// Aligned table with one column per report.
pub fn render_table(reports: &[(String, RunReport)]) -> String {
    let secs = |v: f64| format!("{v:.3}");
    let rows: Vec<(&str, Cell)> = vec![
        ("fire model (s)", Box::new(move |r| secs(r.timings.fire_model_s))),
        ("WTEN construction (s)", Box::new(move |r| secs(r.timings.wten_construction_s))),
        ("max flow (s)", Box::new(move |r| secs(r.timings.max_flow_s))),
        ("total (s)", Box::new(move |r| secs(r.timings.total_s))),
        ("|N|", Box::new(|r| r.sizes.nodes.to_string())),
        ("|A|", Box::new(|r| r.sizes.arcs.to_string())),
        ("|N_W|", Box::new(|r| r.sizes.wten_nodes.to_string())),
        ("|A_W|", Box::new(|r| r.sizes.wten_arcs.to_string())),
        ("T_sol", Box::new(|r| r.plan.horizon.to_string())),
        ("evacuated", Box::new(|r| format!("{}/{}", r.plan.evacuated, r.plan.total_supply))),
        ("stranded", Box::new(|r| r.plan.stranded.to_string())),
    ];
    let mut grid: Vec<Vec<String>> = vec![std::iter::once(String::new()).chain(reports.iter().map(|(n, _)| n.clone())).collect()];
    for (label, cell) in &rows {
        grid.push(std::iter::once(label.to_string()).chain(reports.iter().map(|(_, r)| cell(r))).collect());
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in &grid {
        let mut line = format!("{:<w$}", row[0], w = widths[0]);
        for (c, cell) in row.iter().enumerate().skip(1) {
            line.push_str(&format!("  {:>w$}", cell, w = widths[c]));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
