//! CAT-RRT reaching a goal that requires contact, next to T-RRT which cannot.

use contact_plan::evaluation::path_contact_profile;
use contact_plan::kinematics::SerialChain;
use contact_plan::planners::{plan, CostParams, PlannerKind, PlannerParams};
use contact_plan::world::build_scenario;

fn main() -> contact_plan::Result<()> {
    let s = build_scenario(2, &SerialChain::benchmark_arm())?;
    let params = PlannerParams {
        rng_seed: 4,
        time_budget: 3.0,
        ..Default::default()
    };
    for kind in [PlannerKind::CatRrt, PlannerKind::TRrt] {
        let r = plan(kind, &s, &params, &CostParams::default())?;
        print!("{kind}: success={} iterations={} nodes={}", r.success, r.iterations, r.tree.len());
        if let Some(path) = &r.path {
            let profile = path_contact_profile(&s.chain, path, &s.obstacles)?;
            let mm: Vec<f64> = profile.totals().iter().map(|d| (d * 1000.0).round()).collect();
            print!(" path states={} contact depth per link (mm)={mm:?}", path.len());
        }
        if r.tests_evaluated > 0 {
            print!(" accepted {}/{} transition tests", r.tests_accepted, r.tests_evaluated);
        }
        println!();
    }
    Ok(())
}
