//! Fire scenarios and the per-instance cache of overtaken nodes and arc distances.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{dist_polyline_fireset, Circle, FireComponent, FireSet, GeometryError, Point};
use crate::roadnet::DynamicNetwork;

/// Samples per circle boundary when checking frame containment.
const CIRCLE_SAMPLES: usize = 64;
const CONTAINMENT_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FireError {
    #[error("instance {t} is outside the fire scenario coverage (first frame at {first})")]
    OutOfCoverage { t: u32, first: u32 },
    #[error("frame instances must be strictly increasing (instance {0} repeats or goes back)")]
    UnorderedFrames(u32),
    #[error("circle {index}: {reason}")]
    BadCircle { index: usize, reason: String },
    #[error("fire cache covers [{start}..{end}], instance {t} requested")]
    CacheMiss { t: u32, start: u32, end: u32 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowingCircle {
    pub center: Point,
    pub r0: f64,
    /// Meters per instance.
    pub growth: f64,
}

impl GrowingCircle {
    pub fn radius_at(&self, t: u32) -> f64 {
        self.r0 + self.growth * t as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: u32,
    pub fire: FireSet,
}

/// A hazard scenario yielding the burnt region `F(t)` for each instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FireScenario {
    Circles { circles: Vec<GrowingCircle> },
    Frames { frames: Vec<Frame> },
}

impl FireScenario {
    /// A scenario with no fire at any instance.
    pub fn none() -> Self {
        FireScenario::Circles { circles: Vec::new() }
    }

    pub fn circles(circles: Vec<GrowingCircle>) -> Result<Self, FireError> {
        for (index, c) in circles.iter().enumerate() {
            if !(c.r0.is_finite() && c.r0 > 0.0) {
                return Err(FireError::BadCircle { index, reason: format!("r0 must be positive, got {}", c.r0) });
            }
            if !c.growth.is_finite() {
                return Err(FireError::BadCircle { index, reason: "growth must be finite".into() });
            }
            if !(c.center.x.is_finite() && c.center.y.is_finite()) {
                return Err(FireError::BadCircle { index, reason: "center must be finite".into() });
            }
        }
        Ok(FireScenario::Circles { circles })
    }

    pub fn frames(frames: Vec<Frame>) -> Result<Self, FireError> {
        for w in frames.windows(2) {
            if w[1].t <= w[0].t {
                return Err(FireError::UnorderedFrames(w[1].t));
            }
        }
        Ok(FireScenario::Frames { frames })
    }

    /// First covered instance; `None` means every instance is covered.
    pub fn first_instance(&self) -> Option<u32> {
        match self {
            FireScenario::Circles { .. } => None,
            FireScenario::Frames { frames } => Some(frames.first().map_or(u32::MAX, |f| f.t)),
        }
    }
}

/// The burnt region at instance `t`. Frames hold until the next frame; the last frame holds forever.
pub fn fire_set_at(scenario: &FireScenario, t: u32) -> Result<FireSet, FireError> {
    match scenario {
        FireScenario::Circles { circles } => {
            let mut components = Vec::with_capacity(circles.len());
            for c in circles {
                let r = c.radius_at(t);
                // a shrinking circle may vanish entirely
                if r > 0.0 {
                    components.push(FireComponent::Circle(Circle::new(c.center, r)?));
                }
            }
            Ok(FireSet { components })
        }
        FireScenario::Frames { frames } => {
            let k = frames.partition_point(|f| f.t <= t);
            if k == 0 {
                return Err(FireError::OutOfCoverage { t, first: frames.first().map_or(u32::MAX, |f| f.t) });
            }
            Ok(frames[k - 1].fire.clone())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("fire shrinks at instance {t}")]
pub struct MonotoneViolation {
    /// The later instance of the first pair with `F(t-1) ⊄ F(t)`.
    pub t: u32,
}

fn component_within(c: &FireComponent, next: &FireSet) -> bool {
    if let FireComponent::Circle(inner) = c {
        let covered = next.components.iter().any(|o| match o {
            FireComponent::Circle(outer) => {
                inner.center.dist(outer.center) + inner.radius <= outer.radius + CONTAINMENT_SLACK
            }
            FireComponent::Polygon { .. } => false,
        });
        if covered {
            return true;
        }
    }
    c.boundary_samples(CIRCLE_SAMPLES).into_iter().all(|p| {
        next.components
            .iter()
            .any(|o| o.contains(p) || o.dist_to_point(p) <= CONTAINMENT_SLACK)
    })
}

/// Checks `F(t) ⊆ F(t+1)` for all `t < T`; frames are checked on sampled boundary points.
pub fn validate_monotone(scenario: &FireScenario, horizon: u32) -> Result<(), MonotoneViolation> {
    match scenario {
        FireScenario::Circles { circles } => {
            if horizon >= 1 && circles.iter().any(|c| c.growth < 0.0) {
                return Err(MonotoneViolation { t: 1 });
            }
            Ok(())
        }
        FireScenario::Frames { frames } => {
            for w in frames.windows(2) {
                if w[1].t > horizon {
                    break;
                }
                if w[0].fire != w[1].fire
                    && !w[0].fire.components.iter().all(|c| component_within(c, &w[1].fire))
                {
                    return Err(MonotoneViolation { t: w[1].t });
                }
            }
            Ok(())
        }
    }
}

/// Per-instance overtaken nodes and arc-to-fire distances over a window of instances.
#[derive(Debug, Clone, PartialEq)]
pub struct FireCache {
    t_start: u32,
    overtaken: Vec<Vec<bool>>,
    arc_dist: Vec<Vec<f64>>,
}

struct Instance {
    overtaken: Vec<bool>,
    arc_dist: Vec<f64>,
}

fn compute_instance(net: &DynamicNetwork, scenario: &FireScenario, t: u32) -> Result<Instance, FireError> {
    let fire = fire_set_at(scenario, t)?;
    let overtaken = net.nodes().iter().map(|n| crate::geometry::contains(&fire, n.point)).collect();
    let arc_dist = net
        .arcs()
        .par_iter()
        .map(|a| dist_polyline_fireset(&a.geometry, &fire).unwrap_or(f64::INFINITY))
        .collect();
    Ok(Instance { overtaken, arc_dist })
}

/// Cache over `[0..T]`.
pub fn build_cache(net: &DynamicNetwork, scenario: &FireScenario, horizon: u32) -> Result<FireCache, FireError> {
    FireCache::build_range(net, scenario, 0, horizon)
}

impl FireCache {
    pub fn build_range(net: &DynamicNetwork, scenario: &FireScenario, t_start: u32, t_end: u32) -> Result<Self, FireError> {
        let mut cache = FireCache { t_start, overtaken: Vec::new(), arc_dist: Vec::new() };
        if t_end >= t_start {
            cache.extend_to(net, scenario, t_end)?;
        }
        Ok(cache)
    }

    /// Adds instances up to and including `t_end`.
    pub fn extend_to(&mut self, net: &DynamicNetwork, scenario: &FireScenario, t_end: u32) -> Result<(), FireError> {
        let from = self.t_start + self.overtaken.len() as u32;
        if t_end < from {
            return Ok(());
        }
        let fresh: Vec<Instance> = (from..=t_end)
            .into_par_iter()
            .map(|t| compute_instance(net, scenario, t))
            .collect::<Result<_, _>>()?;
        for inst in fresh {
            self.overtaken.push(inst.overtaken);
            self.arc_dist.push(inst.arc_dist);
        }
        Ok(())
    }

    pub fn t_start(&self) -> u32 {
        self.t_start
    }

    /// Last covered instance, or `None` for an empty cache.
    pub fn t_end(&self) -> Option<u32> {
        (!self.overtaken.is_empty()).then(|| self.t_start + self.overtaken.len() as u32 - 1)
    }

    pub fn covers(&self, t: u32) -> bool {
        t >= self.t_start && ((t - self.t_start) as usize) < self.overtaken.len()
    }

    fn slot(&self, t: u32) -> usize {
        assert!(
            self.covers(t),
            "fire cache covers [{}..{:?}], instance {t} requested",
            self.t_start,
            self.t_end()
        );
        (t - self.t_start) as usize
    }

    pub fn is_overtaken(&self, t: u32, node: usize) -> bool {
        self.overtaken[self.slot(t)][node]
    }

    /// Meters from the arc geometry to the fire; infinite when there is no fire.
    pub fn arc_dist(&self, t: u32, arc: usize) -> f64 {
        self.arc_dist[self.slot(t)][arc]
    }

    pub fn overtaken_nodes(&self, t: u32) -> Vec<usize> {
        let row = &self.overtaken[self.slot(t)];
        (0..row.len()).filter(|&i| row[i]).collect()
    }
}

/// Frames over `[0..T]`: the old fire before `t_fire`, the union of old and new from then on.
pub fn merge_scenarios(
    old: &FireScenario,
    new: &FireScenario,
    t_fire: u32,
    horizon: u32,
) -> Result<FireScenario, FireError> {
    let mut frames = Vec::with_capacity(horizon as usize + 1);
    for t in 0..=horizon {
        let mut fire = fire_set_at(old, t)?;
        if t >= t_fire {
            fire = fire.union(&fire_set_at(new, t)?);
        }
        frames.push(Frame { t, fire });
    }
    FireScenario::frames(frames)
}
