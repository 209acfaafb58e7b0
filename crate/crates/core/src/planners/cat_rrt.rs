//! Contact-admissible transition-based RRT.
//!
//! Each tree node carries one temperature per link. A proposed extension is
//! scored with the per-link alignment cost and tested link by link against the
//! temperatures of the node it grows from: a passing link cools by `omega`
//! (clamped at `t_min`), the first failing link heats by `gamma` and rejects
//! the extension. Rejections are written back to the evaluated node so that
//! region becomes easier to enter; accepted children inherit the updated
//! vector. Without obstacles the test is skipped and the planner is plain RRT.

use rand_chacha::ChaCha8Rng;

use super::{grow, Admission, Extension, GrowContext, PlanResult, PlannerKind, PlannerParams, Tree};
use crate::costs::{per_link_cost_from_points, ApfParams, CostVector};
use crate::error::{Error, Result};
use crate::kinematics::{ControlPointSet, JointConfig};
use crate::planners::CostParams;
use crate::world::Scenario;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionParams {
    pub t_min: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl From<&PlannerParams> for TransitionParams {
    fn from(p: &PlannerParams) -> Self {
        TransitionParams {
            t_min: p.t_min,
            omega: p.omega,
            gamma: p.gamma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionOutcome {
    pub accepted: bool,
    /// Temperatures after the test. On rejection they belong back on the
    /// evaluated node; on acceptance they go to the new child.
    pub temperature: Vec<f64>,
    /// Link that rejected, if any.
    pub failed_link: Option<usize>,
}

/// Per-link transition test. Links are processed in order; decrements applied
/// before a rejecting link are kept.
pub fn cat_rrt_transition_test(
    costs: &CostVector,
    temperature: &[f64],
    params: &TransitionParams,
) -> Result<TransitionOutcome> {
    if costs.len() != temperature.len() {
        return Err(Error::DimensionMismatch {
            expected: temperature.len(),
            actual: costs.len(),
        });
    }
    let mut t = temperature.to_vec();
    for (i, (&c, ti)) in costs.0.iter().zip(t.iter_mut()).enumerate() {
        if c < *ti && *ti > params.t_min {
            *ti = (*ti - params.omega).max(params.t_min);
        } else if c > *ti {
            *ti += params.gamma;
            return Ok(TransitionOutcome {
                accepted: false,
                temperature: t,
                failed_link: Some(i),
            });
        }
    }
    Ok(TransitionOutcome {
        accepted: true,
        temperature: t,
        failed_link: None,
    })
}

struct CatExtension {
    apf: ApfParams,
    transition: TransitionParams,
    t_init: f64,
    goal_points: ControlPointSet,
    evaluated: u64,
    accepted: u64,
}

impl Extension for CatExtension {
    fn root_temperature(&self, dim: usize) -> Option<Vec<f64>> {
        Some(vec![self.t_init; dim])
    }

    fn admit(
        &mut self,
        ctx: &GrowContext<'_>,
        tree: &mut Tree,
        near: usize,
        q_new: &JointConfig,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Admission> {
        let parent_t = tree
            .node(near)
            .temperature
            .as_ref()
            .expect("cat-rrt nodes carry temperatures");
        let obstacles = &ctx.scenario.obstacles;
        if obstacles.is_empty() {
            return Ok(Admission::Accept {
                temperature: Some(parent_t.clone()),
                state_cost: 0.0,
            });
        }
        let near_points = ctx.chain.control_points(&tree.node(near).q)?;
        let new_points = ctx.chain.control_points(q_new)?;
        let costs = per_link_cost_from_points(&near_points, &new_points, &self.goal_points, obstacles, &self.apf);
        let outcome = cat_rrt_transition_test(&costs, parent_t, &self.transition)?;
        self.evaluated += 1;
        if outcome.accepted {
            self.accepted += 1;
            Ok(Admission::Accept {
                temperature: Some(outcome.temperature),
                state_cost: 0.0,
            })
        } else {
            tree.node_mut(near).temperature = Some(outcome.temperature);
            Ok(Admission::Reject)
        }
    }

    fn mean_temperature(&self, tree: &Tree, near: usize) -> f64 {
        let t = tree.node(near).temperature.as_ref().expect("temperatures");
        t.iter().sum::<f64>() / t.len() as f64
    }

    fn tests(&self) -> (u64, u64) {
        (self.evaluated, self.accepted)
    }
}

pub fn cat_rrt_plan(scenario: &Scenario, params: &PlannerParams, costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    let mut ext = CatExtension {
        apf: costs.apf()?,
        transition: params.into(),
        t_init: params.t_init,
        goal_points: scenario.chain.control_points(&scenario.q_goal)?,
        evaluated: 0,
        accepted: 0,
    };
    grow(PlannerKind::CatRrt, scenario, params, &mut ext)
}
