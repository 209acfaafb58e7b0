//! Per-link costs, overlap cost and the joint-space field near an obstacle cluster.

use contact_plan::costs::{overlap_cost, per_link_cost, vfrrt_field};
use contact_plan::kinematics::{JointConfig, SerialChain};
use contact_plan::planners::CostParams;
use contact_plan::world::build_scenario;

fn main() -> contact_plan::Result<()> {
    let s = build_scenario(2, &SerialChain::benchmark_arm())?;
    let costs = CostParams::default();
    let (model, apf, field) = (costs.model()?, costs.apf()?, costs.field()?);

    println!("overlap at start: {:.4}", overlap_cost(&s.chain, &s.q_start, &s.obstacles, &model)?);
    println!("overlap at goal:  {:.4}", overlap_cost(&s.chain, &s.q_goal, &s.obstacles, &model)?);

    let toward_goal = s.q_start.lerp(&s.q_goal, 0.05);
    let away: JointConfig = s.q_start.0.iter().zip(&toward_goal.0).map(|(a, b)| 2.0 * a - b).collect::<Vec<_>>().into();
    for (name, q_rand) in [("toward goal", &toward_goal), ("away from goal", &away)] {
        let c = per_link_cost(&s.chain, &s.q_start, q_rand, &s.q_goal, &s.obstacles, &apf)?;
        println!("per-link cost stepping {name}: {:.4?}", c.0);
    }

    let f = vfrrt_field(&s.chain, &s.q_start, &s.obstacles, &field)?;
    println!("joint-space field at start: {f:.4?}");
    Ok(())
}
