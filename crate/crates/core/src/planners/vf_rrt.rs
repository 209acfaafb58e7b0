//! Vector-field RRT.
//!
//! Each extension leaves `q_near` along the unit random direction plus
//! `lambda * f(q_near) / f_typ`, where `f` is the joint-space obstacle field
//! and `f_typ` its median norm over random states. Every `vf_update_every`
//! extensions the exploration efficiency (share of new nodes that landed more
//! than half a step from the rest of the tree) is compared with
//! `vf_efficiency_target`: below it `lambda` halves, otherwise it doubles back
//! toward `vf_lambda`. With no obstacles the field vanishes and the planner is
//! plain RRT.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{grow, sample, Admission, Extension, GrowContext, PlanResult, PlannerKind, PlannerParams, Tree};
use crate::costs::{upstream_criterion, vfrrt_field, FieldParams};
use crate::error::Result;
use crate::kinematics::JointConfig;
use crate::planners::CostParams;
use crate::world::Scenario;

/// Unit extension direction: `normalize(r / |r| + weight * field)`. Falls back
/// to the random direction if the blend cancels out.
pub fn vf_rrt_direction(random_dir: &[f64], field: &[f64], weight: f64) -> Vec<f64> {
    let rn = random_dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    if rn == 0.0 {
        return random_dir.to_vec();
    }
    let blend: Vec<f64> = random_dir
        .iter()
        .zip(field)
        .map(|(r, f)| r / rn + weight * f)
        .collect();
    let bn = blend.iter().map(|x| x * x).sum::<f64>().sqrt();
    if bn == 0.0 || !bn.is_finite() {
        return random_dir.iter().map(|r| r / rn).collect();
    }
    blend.into_iter().map(|x| x / bn).collect()
}

/// Seed offset of the stream used to estimate the mean field norm, so the
/// main sampling stream stays aligned with plain RRT.
const NORM_STREAM: u64 = 0x5646_5252_5400_0001;

struct VfExtension {
    field: FieldParams,
    lambda: f64,
    lambda_max: f64,
    f_typ: f64,
    window: u32,
    novel: u32,
    attempts: u32,
    target: f64,
}

impl VfExtension {
    fn adapt(&mut self) {
        if self.attempts < self.window {
            return;
        }
        let efficiency = f64::from(self.novel) / f64::from(self.attempts);
        self.lambda = if efficiency < self.target {
            0.5 * self.lambda
        } else {
            (2.0 * self.lambda).min(self.lambda_max)
        };
        self.novel = 0;
        self.attempts = 0;
    }
}

impl Extension for VfExtension {
    fn extend(&mut self, ctx: &GrowContext<'_>, tree: &Tree, near: usize, q_rand: &JointConfig) -> Result<Option<JointConfig>> {
        let q_near = &tree.node(near).q;
        if q_near == q_rand {
            return Ok(None);
        }
        let step = ctx.params.step_size;
        let f = vfrrt_field(ctx.chain, q_near, &ctx.scenario.obstacles, &self.field)?;
        let weight = self.lambda / self.f_typ;
        let q_new = if f.iter().all(|x| *x == 0.0) || weight == 0.0 {
            super::steer(ctx.chain, q_near, q_rand, step)
        } else {
            let dir: Vec<f64> = q_rand.0.iter().zip(&q_near.0).map(|(a, b)| a - b).collect();
            let u = vf_rrt_direction(&dir, &f, weight);
            let len = step.min(q_near.distance(q_rand));
            let mut q = JointConfig(q_near.0.iter().zip(&u).map(|(a, d)| a + len * d).collect());
            ctx.chain.clamp(&mut q);
            q
        };
        if q_new == *q_near {
            return Ok(None);
        }
        self.attempts += 1;
        let nearest = tree.nearest(&q_new)?;
        if tree.node(nearest).q.distance(&q_new) > 0.5 * step {
            self.novel += 1;
        }
        self.adapt();
        Ok(Some(q_new))
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
}

/// Median field norm over `samples` uniform states; 1 if the field vanishes.
/// The median is used because the pseudo-inverse makes the norm heavy-tailed
/// near singular poses.
fn typical_field_norm(scenario: &Scenario, field: &FieldParams, samples: u32, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ NORM_STREAM);
    let mut norms = Vec::with_capacity(samples.max(1) as usize);
    for _ in 0..samples.max(1) {
        let q = sample(&mut rng, &scenario.chain, &scenario.q_goal, 0.0);
        let f = vfrrt_field(&scenario.chain, &q, &scenario.obstacles, field)?;
        norms.push(f.iter().map(|x| x * x).sum::<f64>().sqrt());
    }
    norms.sort_by(f64::total_cmp);
    let median = norms[norms.len() / 2];
    Ok(if median > 0.0 { median } else { 1.0 })
}

pub fn vf_rrt_plan(scenario: &Scenario, params: &PlannerParams, costs: &CostParams) -> Result<PlanResult> {
    params.validate()?;
    let field = costs.field()?;
    let f_typ = if scenario.obstacles.is_empty() {
        1.0
    } else {
        typical_field_norm(scenario, &field, params.vf_norm_samples, params.rng_seed)?
    };
    let mut ext = VfExtension {
        field,
        lambda: params.vf_lambda,
        lambda_max: params.vf_lambda,
        f_typ,
        window: params.vf_update_every,
        novel: 0,
        attempts: 0,
        target: params.vf_efficiency_target,
    };
    let mut result = grow(PlannerKind::VfRrt, scenario, params, &mut ext)?;
    if let Some(path) = result.path.as_ref().filter(|p| p.len() >= 2) {
        let upstream = upstream_criterion(&path.states, |q| {
            vfrrt_field(&scenario.chain, q, &scenario.obstacles, &field).unwrap_or_default()
        })?;
        result.upstream = Some(upstream);
    }
    Ok(result)
}
