//! Tree planners sharing one RRT growth loop.
//!
//! Every planner draws samples from the same seeded stream in the same order
//! (one uniform draw for the goal bias, then one per joint), so with no
//! obstacles the gated variants grow exactly the plain RRT tree.

mod cat_rrt;
pub mod nn;
mod rrt_star;
mod t_rrt;
mod vf_rrt;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::costs::{ApfParams, CostModel, FieldParams, FieldSign, Proximity, ScaleParams};
use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, SerialChain};
use crate::world::Scenario;

pub use cat_rrt::{cat_rrt_plan, cat_rrt_transition_test, TransitionOutcome, TransitionParams};
pub use nn::KdIndex;
pub use rrt_star::rrt_star_plan;
pub use t_rrt::{t_rrt_plan, MetropolisGate};
pub use vf_rrt::{vf_rrt_direction, vf_rrt_plan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    CatRrt,
    TRrt,
    RrtStar,
    VfRrt,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Rrt,
        PlannerKind::CatRrt,
        PlannerKind::TRrt,
        PlannerKind::RrtStar,
        PlannerKind::VfRrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Rrt => "rrt",
            PlannerKind::CatRrt => "cat_rrt",
            PlannerKind::TRrt => "t_rrt",
            PlannerKind::RrtStar => "rrt_star",
            PlannerKind::VfRrt => "vf_rrt",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownPlanner(s.to_string()))
    }
}

/// Planner settings. Field names double as `--param` keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerParams {
    /// Initial per-link temperature of the CAT-RRT root.
    pub t_init: f64,
    /// Floor below which CAT-RRT temperatures are not decremented.
    pub t_min: f64,
    /// CAT-RRT temperature decrement per passing link.
    pub omega: f64,
    /// CAT-RRT temperature increment on a failing link.
    pub gamma: f64,
    /// Joint-space extension length, radians.
    pub step_size: f64,
    /// Joint-space distance to the goal that counts as success.
    pub goal_threshold: f64,
    pub goal_bias: f64,
    /// Wall-clock budget, seconds.
    pub time_budget: f64,
    /// Iteration cap; 0 means unlimited.
    pub max_iterations: u64,
    pub rng_seed: u64,
    /// Record one diagnostics row every this many iterations.
    pub diag_stride: u64,

    /// Starting global temperature of T-RRT.
    pub trrt_init_temperature: f64,
    /// T-RRT temperature grows by `2^trrt_rate` after too many failures.
    pub trrt_rate: f64,
    /// Consecutive uphill rejections tolerated before T-RRT heats up.
    pub trrt_max_failures: u32,
    /// Positive state costs averaged into the T-RRT normalisation constant.
    pub trrt_norm_samples: u32,

    /// Weight of joint-space length in RRT* edge costs.
    pub rrt_star_length_weight: f64,
    /// RRT* neighbourhood radius cap, in multiples of `step_size`.
    pub rrt_star_radius_factor: f64,
    /// Iterations RRT* keeps refining after its first solution.
    pub rrt_star_refine_iterations: u64,

    /// Initial VF-RRT field gain.
    pub vf_lambda: f64,
    /// Extensions between VF-RRT gain updates.
    pub vf_update_every: u32,
    /// Exploration efficiency below which the VF-RRT gain shrinks.
    pub vf_efficiency_target: f64,
    /// Random states used to estimate the mean field norm.
    pub vf_norm_samples: u32,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            t_init: 0.0,
            t_min: -1e3,
            omega: 0.01,
            gamma: 0.1,
            step_size: 0.1,
            goal_threshold: 0.05,
            goal_bias: 0.05,
            time_budget: 10.0,
            max_iterations: 0,
            rng_seed: 0,
            diag_stride: 50,
            trrt_init_temperature: 1e-6,
            trrt_rate: 2.0,
            trrt_max_failures: 10,
            trrt_norm_samples: 100,
            rrt_star_length_weight: 0.1,
            rrt_star_radius_factor: 4.0,
            rrt_star_refine_iterations: 2000,
            vf_lambda: 0.5,
            vf_update_every: 100,
            vf_efficiency_target: 0.1,
            vf_norm_samples: 200,
        }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.to_string()));
        if !(self.omega > 0.0) {
            return bad("omega must be > 0");
        }
        if !(self.gamma > 0.0) {
            return bad("gamma must be > 0");
        }
        if !(self.step_size > 0.0) {
            return bad("step_size must be > 0");
        }
        if !(self.goal_threshold > 0.0) {
            return bad("goal_threshold must be > 0");
        }
        if !(0.0..1.0).contains(&self.goal_bias) {
            return bad("goal_bias must be in [0, 1)");
        }
        if !(self.time_budget > 0.0) {
            return bad("time_budget must be > 0");
        }
        if !(self.trrt_init_temperature > 0.0) {
            return bad("trrt_init_temperature must be > 0");
        }
        if !(self.rrt_star_radius_factor > 0.0) || self.rrt_star_length_weight < 0.0 {
            return bad("rrt_star_radius_factor must be > 0 and rrt_star_length_weight >= 0");
        }
        if !(self.vf_lambda >= 0.0) || self.vf_update_every == 0 {
            return bad("vf_lambda must be >= 0 and vf_update_every > 0");
        }
        Ok(())
    }
}

/// Cost-heuristic settings shared by all planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Maximum of the scaling function is `a / b`.
    pub a: f64,
    pub b: f64,
    /// Repulsion weight of the per-link field.
    pub alpha: f64,
    /// Attraction weight of the per-link field.
    pub beta: f64,
    pub proximity: Proximity,
    pub vfrrt_field_sign: FieldSign,
    /// Relative singular-value cutoff of the Jacobian pseudo-inverse used by
    /// the joint-space field.
    pub vfrrt_pinv_cutoff: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            a: 1.0,
            b: 0.1,
            alpha: 1.0,
            beta: 0.5,
            proximity: Proximity::InverseDistance,
            vfrrt_field_sign: FieldSign::Repulsive,
            vfrrt_pinv_cutoff: 0.05,
        }
    }
}

impl CostParams {
    pub fn model(&self) -> Result<CostModel> {
        Ok(CostModel::new(ScaleParams::new(self.a, self.b)?, self.proximity))
    }

    pub fn apf(&self) -> Result<ApfParams> {
        ApfParams::new(self.alpha, self.beta, self.model()?)
    }

    pub fn field(&self) -> Result<FieldParams> {
        FieldParams::new(self.model()?, self.vfrrt_field_sign).with_cutoff(self.vfrrt_pinv_cutoff)
    }
}

/// Sequence of joint states from the start into the goal ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub states: Vec<JointConfig>,
}

impl Path {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Joint-space length.
    pub fn joint_length(&self) -> f64 {
        self.states.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub q: JointConfig,
    pub parent: Option<usize>,
    /// Per-link temperatures (CAT-RRT only).
    pub temperature: Option<Vec<f64>>,
    /// Cost of the state itself (T-RRT and RRT*).
    pub state_cost: f64,
    /// Accumulated edge cost from the root (RRT* only).
    pub cost_to_come: f64,
}

/// Growing tree plus its spatial index.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
    index: KdIndex,
}

impl Tree {
    pub fn new(root: TreeNode) -> Self {
        let mut index = KdIndex::new(root.q.dim());
        index.insert(root.q.as_slice());
        Tree {
            nodes: vec![root],
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub(crate) fn node_mut(&mut self, i: usize) -> &mut TreeNode {
        &mut self.nodes[i]
    }

    pub fn push(&mut self, node: TreeNode) -> usize {
        debug_assert!(node.parent.is_some_and(|p| p < self.nodes.len()));
        let i = self.index.insert(node.q.as_slice());
        self.nodes.push(node);
        debug_assert_eq!(i + 1, self.nodes.len());
        i
    }

    /// Index of the node closest to `q` in joint space; ties go to the
    /// earliest inserted node.
    pub fn nearest(&self, q: &JointConfig) -> Result<usize> {
        self.index
            .nearest(q.as_slice())
            .map(|(i, _)| i)
            .ok_or(Error::EmptyTree)
    }

    pub fn within_radius(&self, q: &JointConfig, r: f64) -> Vec<usize> {
        self.index.within_radius(q.as_slice(), r)
    }

    /// States from the root to node `i`.
    pub fn path_to(&self, i: usize) -> Vec<JointConfig> {
        let mut out = vec![self.nodes[i].q.clone()];
        let mut cur = i;
        while let Some(p) = self.nodes[cur].parent {
            out.push(self.nodes[p].q.clone());
            cur = p;
        }
        out.reverse();
        out
    }

    /// Root has no parent and every other node reaches it through its parent chain.
    pub fn is_rooted_acyclic(&self) -> bool {
        if self.nodes.first().is_none_or(|r| r.parent.is_some()) {
            return false;
        }
        let n = self.nodes.len();
        for start in 1..n {
            let mut cur = start;
            let mut steps = 0;
            while let Some(p) = self.nodes[cur].parent {
                cur = p;
                steps += 1;
                if steps > n {
                    return false;
                }
            }
            if cur != 0 {
                return false;
            }
        }
        true
    }
}

/// Free function form of [`Tree::nearest`].
pub fn nearest_neighbor(tree: &Tree, q: &JointConfig) -> Result<usize> {
    tree.nearest(q)
}

/// Move from `q_near` toward `q_rand` by at most `step_size`, clamped to the
/// chain's joint limits.
pub fn steer(chain: &SerialChain, q_near: &JointConfig, q_rand: &JointConfig, step_size: f64) -> JointConfig {
    let d = q_near.distance(q_rand);
    let mut out = if d <= step_size {
        q_rand.clone()
    } else {
        q_near.lerp(q_rand, step_size / d)
    };
    chain.clamp(&mut out);
    out
}

/// Uniform sample within the joint limits, or the goal with probability `goal_bias`.
pub fn sample(rng: &mut ChaCha8Rng, chain: &SerialChain, goal: &JointConfig, goal_bias: f64) -> JointConfig {
    let u: f64 = rng.gen();
    if u < goal_bias {
        return goal.clone();
    }
    JointConfig(chain.limits().iter().map(|l| rng.gen_range(l.lo..=l.hi)).collect())
}

/// One row of the per-run time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub iteration: u64,
    pub elapsed_s: f64,
    /// Mean temperature of the evaluated node (CAT-RRT) or the global
    /// temperature (T-RRT); NaN for the others.
    pub mean_temperature: f64,
    pub min_distance_to_goal: f64,
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub planner: PlannerKind,
    pub success: bool,
    pub path: Option<Path>,
    pub iterations: u64,
    pub wall_time_s: f64,
    pub diagnostics: Vec<DiagnosticsRow>,
    /// Upstream criterion of the returned path (VF-RRT only).
    pub upstream: Option<f64>,
    /// Transition tests evaluated and accepted (gated planners).
    pub tests_evaluated: u64,
    pub tests_accepted: u64,
    pub tree: Tree,
}

impl PlanResult {
    /// `(q, parent)` per node in insertion order.
    pub fn tree_edges(&self) -> Vec<(JointConfig, Option<usize>)> {
        self.tree.nodes().iter().map(|n| (n.q.clone(), n.parent)).collect()
    }
}

/// Run `kind` on `scenario`.
pub fn plan(kind: PlannerKind, scenario: &Scenario, params: &PlannerParams, costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    match kind {
        PlannerKind::Rrt => rrt_plan(scenario, params, costs),
        PlannerKind::CatRrt => cat_rrt_plan(scenario, params, costs),
        PlannerKind::TRrt => t_rrt_plan(scenario, params, costs),
        PlannerKind::RrtStar => rrt_star_plan(scenario, params, costs),
        PlannerKind::VfRrt => vf_rrt_plan(scenario, params, costs),
    }
}

pub fn rrt_plan(scenario: &Scenario, params: &PlannerParams, _costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    grow(PlannerKind::Rrt, scenario, params, &mut PlainExtension)
}

/// Outcome of gating a proposed extension.
pub(crate) enum Admission {
    Reject,
    Accept { temperature: Option<Vec<f64>>, state_cost: f64 },
}

/// Planner-specific hooks into [`grow`].
pub(crate) trait Extension {
    fn root_temperature(&self, _dim: usize) -> Option<Vec<f64>> {
        None
    }

    fn root_cost(&mut self, _q: &JointConfig) -> Result<f64> {
        Ok(0.0)
    }

    /// Proposed new state, or `None` to skip the iteration.
    fn extend(&mut self, ctx: &GrowContext<'_>, tree: &Tree, near: usize, q_rand: &JointConfig) -> Result<Option<JointConfig>> {
        let q_near = &tree.node(near).q;
        if q_near == q_rand {
            return Ok(None);
        }
        let q_new = steer(ctx.chain, q_near, q_rand, ctx.params.step_size);
        Ok((q_new != *q_near).then_some(q_new))
    }

    fn admit(
        &mut self,
        _ctx: &GrowContext<'_>,
        _tree: &mut Tree,
        _near: usize,
        _q_new: &JointConfig,
        _rng: &mut ChaCha8Rng,
    ) -> Result<Admission> {
        Ok(Admission::Accept {
            temperature: None,
            state_cost: 0.0,
        })
    }

    fn mean_temperature(&self, _tree: &Tree, _near: usize) -> f64 {
        f64::NAN
    }

    fn tests(&self) -> (u64, u64) {
        (0, 0)
    }
}

struct PlainExtension;

impl Extension for PlainExtension {}

pub(crate) struct GrowContext<'a> {
    pub chain: &'a SerialChain,
    pub scenario: &'a Scenario,
    pub params: &'a PlannerParams,
}

pub(crate) struct Budget {
    start: Instant,
    time_budget: f64,
    max_iterations: u64,
}

impl Budget {
    pub fn new(params: &PlannerParams) -> Self {
        Budget {
            start: Instant::now(),
            time_budget: params.time_budget,
            max_iterations: params.max_iterations,
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    /// True once iteration `it` (1-based) may not run.
    pub fn exhausted(&self, it: u64) -> bool {
        (self.max_iterations > 0 && it > self.max_iterations) || self.elapsed() >= self.time_budget
    }
}

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// The shared RRT loop: sample, find nearest, extend, gate, insert, stop in
/// the goal ball.
pub(crate) fn grow<E: Extension>(
    kind: PlannerKind,
    scenario: &Scenario,
    params: &PlannerParams,
    ext: &mut E,
) -> Result<PlanResult> {
    let chain = &scenario.chain;
    let ctx = GrowContext {
        chain,
        scenario,
        params,
    };
    let goal = &scenario.q_goal;
    let mut rng = seeded_rng(params.rng_seed);
    let budget = Budget::new(params);
    let root_cost = ext.root_cost(&scenario.q_start)?;
    let mut tree = Tree::new(TreeNode {
        q: scenario.q_start.clone(),
        parent: None,
        temperature: ext.root_temperature(chain.link_count()),
        state_cost: root_cost,
        cost_to_come: 0.0,
    });
    let mut min_dist = scenario.q_start.distance(goal);
    let mut diagnostics = Vec::new();
    let mut goal_node = (min_dist <= params.goal_threshold).then_some(0);
    let mut it: u64 = 0;
    let mut last_near = 0;
    while goal_node.is_none() {
        if budget.exhausted(it + 1) {
            break;
        }
        it += 1;
        let q_rand = sample(&mut rng, chain, goal, params.goal_bias);
        let near = tree.nearest(&q_rand)?;
        last_near = near;
        if let Some(q_new) = ext.extend(&ctx, &tree, near, &q_rand)? {
            if let Admission::Accept {
                temperature,
                state_cost,
            } = ext.admit(&ctx, &mut tree, near, &q_new, &mut rng)?
            {
                let d = q_new.distance(goal);
                let idx = tree.push(TreeNode {
                    q: q_new,
                    parent: Some(near),
                    temperature,
                    state_cost,
                    cost_to_come: 0.0,
                });
                min_dist = min_dist.min(d);
                if d <= params.goal_threshold {
                    goal_node = Some(idx);
                }
            }
        }
        if params.diag_stride > 0 && it.is_multiple_of(params.diag_stride) {
            diagnostics.push(DiagnosticsRow {
                iteration: it,
                elapsed_s: budget.elapsed(),
                mean_temperature: ext.mean_temperature(&tree, near),
                min_distance_to_goal: min_dist,
            });
        }
    }
    let wall_time_s = budget.elapsed();
    diagnostics.push(DiagnosticsRow {
        iteration: it,
        elapsed_s: wall_time_s,
        mean_temperature: ext.mean_temperature(&tree, last_near),
        min_distance_to_goal: min_dist,
    });
    debug_assert!(tree.is_rooted_acyclic());
    let path = goal_node.map(|g| Path {
        states: tree.path_to(g),
    });
    let (tests_evaluated, tests_accepted) = ext.tests();
    Ok(PlanResult {
        planner: kind,
        success: path.is_some(),
        path,
        iterations: it,
        wall_time_s,
        diagnostics,
        upstream: None,
        tests_evaluated,
        tests_accepted,
        tree,
    })
}
