//! Transition-based RRT with a single global temperature.
//!
//! A state is scored by the obstacle-overlap cost. Downhill (or flat) moves
//! are always taken. Uphill moves pass with probability
//! `exp(-dc / (k * T))`, where `k` is the mean of the first positive state
//! costs seen. Each accepted uphill move cools `T` by
//! `2^(dc / (0.1 * cost_range))`; after `trrt_max_failures` consecutive uphill
//! rejections `T` is multiplied by `2^trrt_rate`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{grow, Admission, Extension, GrowContext, PlanResult, PlannerKind, PlannerParams, Tree};
use crate::costs::{overlap_cost_from_points, CostModel};
use crate::error::Result;
use crate::kinematics::{JointConfig, SerialChain};
use crate::planners::CostParams;
use crate::world::{PointObstacleSet, Scenario};

/// Metropolis transition test with adaptive global temperature.
#[derive(Debug, Clone)]
pub struct MetropolisGate {
    pub temperature: f64,
    rate: f64,
    max_failures: u32,
    failures: u32,
    norm_samples: usize,
    positive_costs: Vec<f64>,
    min_cost: f64,
    max_cost: f64,
}

impl MetropolisGate {
    pub fn new(params: &PlannerParams) -> Self {
        MetropolisGate {
            temperature: params.trrt_init_temperature,
            rate: params.trrt_rate,
            max_failures: params.trrt_max_failures,
            failures: 0,
            norm_samples: params.trrt_norm_samples.max(1) as usize,
            positive_costs: Vec::new(),
            min_cost: f64::INFINITY,
            max_cost: f64::NEG_INFINITY,
        }
    }

    /// Record a state cost for normalisation and cost-range tracking.
    pub fn observe(&mut self, cost: f64) {
        if cost > 0.0 && self.positive_costs.len() < self.norm_samples {
            self.positive_costs.push(cost);
        }
        self.min_cost = self.min_cost.min(cost);
        self.max_cost = self.max_cost.max(cost);
    }

    /// Normalisation constant: mean of the positive costs seen so far.
    pub fn normalisation(&self) -> f64 {
        if self.positive_costs.is_empty() {
            1.0
        } else {
            self.positive_costs.iter().sum::<f64>() / self.positive_costs.len() as f64
        }
    }

    /// Test a move from a state of cost `parent` to one of cost `child`. The
    /// RNG is only consumed for uphill moves.
    pub fn test(&mut self, parent: f64, child: f64, rng: &mut ChaCha8Rng) -> bool {
        let dc = child - parent;
        if dc <= 0.0 {
            return true;
        }
        let p = (-dc / (self.normalisation() * self.temperature)).exp();
        let u: f64 = rng.gen();
        if u < p {
            let range = (self.max_cost - self.min_cost).max(f64::MIN_POSITIVE);
            self.temperature /= 2f64.powf(dc / (0.1 * range));
            self.temperature = self.temperature.max(f64::MIN_POSITIVE);
            self.failures = 0;
            true
        } else {
            if self.failures >= self.max_failures {
                self.temperature *= 2f64.powf(self.rate);
                self.failures = 0;
            } else {
                self.failures += 1;
            }
            false
        }
    }
}

struct TExtension {
    gate: MetropolisGate,
    model: CostModel,
    root: f64,
    evaluated: u64,
    accepted: u64,
}

impl TExtension {
    fn cost(&self, chain: &SerialChain, obstacles: &PointObstacleSet, q: &JointConfig) -> Result<f64> {
        if obstacles.is_empty() {
            return Ok(0.0);
        }
        Ok(overlap_cost_from_points(&chain.control_points(q)?, obstacles, &self.model))
    }
}

impl Extension for TExtension {
    fn root_cost(&mut self, _q: &JointConfig) -> Result<f64> {
        Ok(self.root)
    }

    fn admit(
        &mut self,
        ctx: &GrowContext<'_>,
        tree: &mut Tree,
        near: usize,
        q_new: &JointConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Admission> {
        let c_new = self.cost(ctx.chain, &ctx.scenario.obstacles, q_new)?;
        let c_near = tree.node(near).state_cost;
        self.gate.observe(c_new);
        self.evaluated += 1;
        if self.gate.test(c_near, c_new, rng) {
            self.accepted += 1;
            Ok(Admission::Accept {
                temperature: None,
                state_cost: c_new,
            })
        } else {
            Ok(Admission::Reject)
        }
    }

    fn mean_temperature(&self, _tree: &Tree, _near: usize) -> f64 {
        self.gate.temperature
    }

    fn tests(&self) -> (u64, u64) {
        (self.evaluated, self.accepted)
    }
}

pub fn t_rrt_plan(scenario: &Scenario, params: &PlannerParams, costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    let mut ext = TExtension {
        gate: MetropolisGate::new(params),
        model: costs.model()?,
        root: 0.0,
        evaluated: 0,
        accepted: 0,
    };
    ext.root = ext.cost(&scenario.chain, &scenario.obstacles, &scenario.q_start)?;
    ext.gate.observe(ext.root);
    grow(PlannerKind::TRrt, scenario, params, &mut ext)
}
