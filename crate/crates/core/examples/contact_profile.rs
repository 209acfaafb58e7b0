//! Per-state contact depth of CAT-RRT and RRT* paths in the cluttered scenario.

use contact_plan::evaluation::path_contact_profile;
use contact_plan::kinematics::SerialChain;
use contact_plan::planners::{plan, CostParams, PlannerKind, PlannerParams};
use contact_plan::world::build_scenario;

fn main() -> contact_plan::Result<()> {
    let s = build_scenario(4, &SerialChain::benchmark_arm())?;
    let params = PlannerParams {
        rng_seed: 1,
        ..Default::default()
    };
    for kind in [PlannerKind::CatRrt, PlannerKind::RrtStar] {
        let r = plan(kind, &s, &params, &CostParams::default())?;
        let Some(path) = &r.path else {
            println!("{kind}: no path");
            continue;
        };
        let p = path_contact_profile(&s.chain, path, &s.obstacles)?;
        println!("{kind}: {} states, peaks per link {:?}", p.state_count(), p.peaks());
        for (l, row) in p.depth.iter().enumerate() {
            let bar: String = row.iter().map(|&d| if d > 0.0 { '#' } else { '.' }).collect();
            println!("  link {l} {bar}");
        }
    }
    Ok(())
}
