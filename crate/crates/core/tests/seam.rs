mod common;

use common::*;
use evac_core::fire::{FireScenario, GrowingCircle};
use evac_core::planner::{plan_initial, plan_update, verify_plan, ArcFlow, EvacuationPlan, PlannerConfig, UpdateRequest};
use evac_core::roadnet::initial_horizon;
use evac_core::ten::Label;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const T_MAX: u32 = 30;

/// Prefix flows with the super sink written as `None`, since its label moves with the horizon.
fn prefix(plan: &EvacuationPlan, t_reopt: u32) -> Vec<(Label, Option<Label>, u32, u32, u64)> {
    let sink = plan.super_sink();
    let mut out: Vec<_> = plan
        .flows
        .iter()
        .filter(|f: &&ArcFlow| f.depart_t < t_reopt)
        .map(|f| (f.u, (f.v != sink).then_some(f.v), f.depart_t, f.arrive_t, f.flow))
        .collect();
    out.sort();
    out
}

fn enlarged(s: &FireScenario, extra: f64) -> FireScenario {
    match s {
        FireScenario::Circles { circles } => FireScenario::circles(
            circles.iter().map(|c| GrowingCircle { growth: c.growth + extra, ..*c }).collect(),
        )
        .unwrap(),
        FireScenario::Frames { .. } => unreachable!(),
    }
}

#[test]
fn update_seam_properties() {
    let mut rng = StdRng::seed_from_u64(0x5eed_0005);
    let cfg = PlannerConfig::default();
    let mut checked = 0;
    while checked < 25 {
        let shape = Shape {
            nodes: rng.gen_range(3..=10),
            extra_arcs: rng.gen_range(0..=10),
            max_lambda: 3,
            max_capacity: 4,
            sources: rng.gen_range(1..=3),
            sinks: rng.gen_range(1..=2),
            max_supply: 15,
            extent: 1500.0,
        };
        let net = random_network(&mut rng, &shape);
        let count = rng.gen_range(1..=2);
        let fire = random_circles(&mut rng, shape.extent, count, 150.0, 40.0);
        if !terminals_clear(&net, &fire) || initial_horizon(&net).unwrap() > T_MAX {
            continue;
        }
        let prev = plan_initial(&net, &fire, T_MAX, &cfg).unwrap().plan;
        if prev.horizon < 2 {
            continue;
        }
        let t_fire = rng.gen_range(2..=prev.horizon);
        let t_reopt = rng.gen_range(1..t_fire);

        let crossing = prev.boundary_supply(t_reopt).total();
        assert_eq!(crossing + prev.delivered_before(t_reopt) + unsent(&prev), prev.total_supply);

        let same = UpdateRequest { t_reopt, t_fire, new_scenario: fire.clone() };
        let identity = plan_update(&net, &prev, &same, T_MAX, &cfg).unwrap().plan;
        assert_eq!(prefix(&identity, t_reopt), prefix(&prev, t_reopt));
        verify_plan(&net, &identity).unwrap();
        assert_eq!(identity.evacuated, prev.evacuated, "t_reopt {t_reopt}, t_fire {t_fire}");

        let hotter = UpdateRequest { t_reopt, t_fire, new_scenario: enlarged(&fire, rng.gen_range(20.0..150.0)) };
        let worse = plan_update(&net, &prev, &hotter, T_MAX, &cfg).unwrap().plan;
        assert_eq!(prefix(&worse, t_reopt), prefix(&prev, t_reopt));
        verify_plan(&net, &worse).unwrap();
        assert!(worse.evacuated <= prev.evacuated);
        checked += 1;
    }
}

/// People never sent from the super source.
fn unsent(plan: &EvacuationPlan) -> u64 {
    plan.total_supply - plan.flows.iter().filter(|f| f.u == 0).map(|f| f.flow).sum::<u64>()
}
