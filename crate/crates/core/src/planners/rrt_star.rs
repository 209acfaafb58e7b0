//! RRT* over the obstacle-overlap cost.
//!
//! Edge cost is the trapezoid integral of the overlap cost over the edge plus
//! `rrt_star_length_weight` times its joint-space length. There is no
//! acceptance gate: every steered state joins the tree through its cheapest
//! neighbour and then offers itself as a cheaper parent to the rest. After the
//! first goal hit the search keeps refining for `rrt_star_refine_iterations`
//! iterations (or until the budget ends) and returns the cheapest goal node.

use std::f64::consts::PI;

use super::{sample, seeded_rng, steer, Budget, DiagnosticsRow, Path, PlanResult, PlannerKind, PlannerParams, Tree, TreeNode};
use crate::costs::{overlap_cost_from_points, CostModel};
use crate::error::Result;
use crate::kinematics::{JointConfig, SerialChain};
use crate::planners::CostParams;
use crate::world::{PointObstacleSet, Scenario};

/// Neighbours expected inside the radius at `n = 1000`.
const NEIGHBOURS_AT_1000: f64 = 10.0;

/// Volume of the unit ball in `d` dimensions.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Constant of `r(n) = gamma * (ln n / n)^(1/d)` chosen so the ball covers
/// [`NEIGHBOURS_AT_1000`] uniform samples at `n = 1000`.
fn radius_constant(chain: &SerialChain) -> f64 {
    let d = chain.link_count();
    let volume: f64 = chain.limits().iter().map(|l| l.hi - l.lo).product();
    (NEIGHBOURS_AT_1000 * volume / (unit_ball_volume(d) * 1000f64.ln())).powf(1.0 / d as f64)
}

struct CostField<'a> {
    chain: &'a SerialChain,
    obstacles: &'a PointObstacleSet,
    model: CostModel,
    length_weight: f64,
}

impl CostField<'_> {
    fn state(&self, q: &JointConfig) -> Result<f64> {
        if self.obstacles.is_empty() {
            return Ok(0.0);
        }
        Ok(overlap_cost_from_points(&self.chain.control_points(q)?, self.obstacles, &self.model))
    }

    fn edge(&self, a: &JointConfig, ca: f64, b: &JointConfig, cb: f64) -> f64 {
        let len = a.distance(b);
        0.5 * (ca + cb) * len + self.length_weight * len
    }
}

/// Lower every descendant's cost-to-come by `delta`.
fn propagate(tree: &mut Tree, children: &[Vec<usize>], from: usize, delta: f64) {
    let mut stack = children[from].clone();
    while let Some(c) = stack.pop() {
        tree.node_mut(c).cost_to_come -= delta;
        stack.extend_from_slice(&children[c]);
    }
}

pub fn rrt_star_plan(scenario: &Scenario, params: &PlannerParams, costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    let chain = &scenario.chain;
    let goal = &scenario.q_goal;
    let field = CostField {
        chain,
        obstacles: &scenario.obstacles,
        model: costs.model()?,
        length_weight: params.rrt_star_length_weight,
    };
    let gamma = radius_constant(chain);
    let r_max = params.rrt_star_radius_factor * params.step_size;
    let dim = chain.link_count() as f64;

    let mut rng = seeded_rng(params.rng_seed);
    let budget = Budget::new(params);
    let mut tree = Tree::new(TreeNode {
        q: scenario.q_start.clone(),
        parent: None,
        temperature: None,
        state_cost: field.state(&scenario.q_start)?,
        cost_to_come: 0.0,
    });
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut goal_nodes: Vec<usize> = Vec::new();
    if scenario.q_start.distance(goal) <= params.goal_threshold {
        goal_nodes.push(0);
    }
    let mut first_hit: Option<u64> = None;
    let mut min_dist = scenario.q_start.distance(goal);
    let mut diagnostics = Vec::new();
    let mut it: u64 = 0;

    loop {
        if goal_nodes.is_empty() {
            if budget.exhausted(it + 1) {
                break;
            }
        } else {
            let hit = *first_hit.get_or_insert(it);
            if it - hit >= params.rrt_star_refine_iterations || budget.exhausted(it + 1) {
                break;
            }
        }
        it += 1;
        let q_rand = sample(&mut rng, chain, goal, params.goal_bias);
        let near = tree.nearest(&q_rand)?;
        let q_near = &tree.node(near).q;
        if *q_near != q_rand {
            let q_new = steer(chain, q_near, &q_rand, params.step_size);
            if q_new != *q_near {
                let c_new = field.state(&q_new)?;
                let n = tree.len() as f64 + 1.0;
                let radius = (gamma * (n.ln() / n).powf(1.0 / dim)).min(r_max).max(params.step_size);
                let neighbours = tree.within_radius(&q_new, radius);

                let mut parent = near;
                let mut best = tree.node(near).cost_to_come
                    + field.edge(&tree.node(near).q, tree.node(near).state_cost, &q_new, c_new);
                for &j in &neighbours {
                    let nj = tree.node(j);
                    let c = nj.cost_to_come + field.edge(&nj.q, nj.state_cost, &q_new, c_new);
                    if c < best {
                        best = c;
                        parent = j;
                    }
                }
                let d = q_new.distance(goal);
                let idx = tree.push(TreeNode {
                    q: q_new,
                    parent: Some(parent),
                    temperature: None,
                    state_cost: c_new,
                    cost_to_come: best,
                });
                children.push(Vec::new());
                children[parent].push(idx);

                for &j in &neighbours {
                    if j == parent || j == 0 {
                        continue;
                    }
                    let (nj, ni) = (tree.node(j), tree.node(idx));
                    let via = ni.cost_to_come + field.edge(&ni.q, ni.state_cost, &nj.q, nj.state_cost);
                    let delta = nj.cost_to_come - via;
                    if delta > 0.0 {
                        let old = nj.parent.expect("non-root node has a parent");
                        children[old].retain(|&c| c != j);
                        children[idx].push(j);
                        let node = tree.node_mut(j);
                        node.parent = Some(idx);
                        node.cost_to_come = via;
                        propagate(&mut tree, &children, j, delta);
                    }
                }

                min_dist = min_dist.min(d);
                if d <= params.goal_threshold {
                    goal_nodes.push(idx);
                }
            }
        }
        if params.diag_stride > 0 && it.is_multiple_of(params.diag_stride) {
            diagnostics.push(DiagnosticsRow {
                iteration: it,
                elapsed_s: budget.elapsed(),
                mean_temperature: f64::NAN,
                min_distance_to_goal: min_dist,
            });
        }
    }
    let wall_time_s = budget.elapsed();
    diagnostics.push(DiagnosticsRow {
        iteration: it,
        elapsed_s: wall_time_s,
        mean_temperature: f64::NAN,
        min_distance_to_goal: min_dist,
    });
    debug_assert!(tree.is_rooted_acyclic());
    let best_goal = goal_nodes.iter().copied().min_by(|&a, &b| {
        tree.node(a)
            .cost_to_come
            .total_cmp(&tree.node(b).cost_to_come)
            .then(a.cmp(&b))
    });
    let path = best_goal.map(|g| Path {
        states: tree.path_to(g),
    });
    Ok(PlanResult {
        planner: PlannerKind::RrtStar,
        success: path.is_some(),
        path,
        iterations: it,
        wall_time_s,
        diagnostics,
        upstream: None,
        tests_evaluated: 0,
        tests_accepted: 0,
        tree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::JointLimits;
    use crate::world::build_scenario;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-12);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn radius_covers_ten_neighbours_at_1000() {
        let arm = SerialChain::benchmark_arm();
        let g = radius_constant(&arm);
        let n = 1000f64;
        let r = g * (n.ln() / n).powf(0.25);
        let volume = (2.0 * PI).powi(4);
        let expected = n * unit_ball_volume(4) * r.powi(4) / volume;
        assert!(expected >= 10.0 - 1e-9);
    }

    #[test]
    fn free_space_path_is_nearly_straight() {
        // Two-joint corridor: the first joint sweeps, the second barely moves.
        let planar = SerialChain::planar(&[0.5, 0.5], 0.05, 3).unwrap();
        let limits = vec![JointLimits { lo: -1.0, hi: 1.0 }, JointLimits { lo: -0.15, hi: 0.15 }];
        let corridor = SerialChain::new(planar.links().to_vec(), limits).unwrap();
        let s = Scenario::new(
            "corridor",
            corridor,
            JointConfig(vec![-0.8, 0.0]),
            JointConfig(vec![0.8, 0.0]),
            PointObstacleSet::empty(),
        )
        .unwrap();
        let params = PlannerParams {
            rng_seed: 2,
            rrt_star_length_weight: 1.0,
            rrt_star_refine_iterations: 5000,
            ..Default::default()
        };
        let r = rrt_star_plan(&s, &params, &CostParams::default()).unwrap();
        assert!(r.success);
        let path = r.path.unwrap();
        let straight = s.q_start.distance(path.states.last().unwrap());
        assert!(path.joint_length() <= 1.05 * straight, "{} vs {}", path.joint_length(), straight);
    }

    #[test]
    fn cost_to_come_is_consistent_with_parents() {
        let s = build_scenario(2, &SerialChain::benchmark_arm()).unwrap();
        let costs = CostParams::default();
        let params = PlannerParams {
            rng_seed: 3,
            max_iterations: 1500,
            ..Default::default()
        };
        let r = rrt_star_plan(&s, &params, &costs).unwrap();
        let field = CostField {
            chain: &s.chain,
            obstacles: &s.obstacles,
            model: costs.model().unwrap(),
            length_weight: params.rrt_star_length_weight,
        };
        for node in r.tree.nodes().iter().skip(1) {
            let p = r.tree.node(node.parent.unwrap());
            let expect = p.cost_to_come + field.edge(&p.q, p.state_cost, &node.q, node.state_cost);
            assert!((node.cost_to_come - expect).abs() <= 1e-9 * expect.max(1.0));
        }
        assert!(r.tree.is_rooted_acyclic());
    }

    #[test]
    fn scenario_two_reaches_goal() {
        let s = build_scenario(2, &SerialChain::benchmark_arm()).unwrap();
        let params = PlannerParams {
            rng_seed: 1,
            ..Default::default()
        };
        assert!(rrt_star_plan(&s, &params, &CostParams::default()).unwrap().success);
    }
}
