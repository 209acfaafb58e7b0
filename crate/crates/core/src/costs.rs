//! Cost heuristics shared by the planners.
//!
//! Everything is built on the bounded scaling function
//! `S(v) = a v / (b |v| + 1)`, which keeps every obstacle interaction below
//! `a / b` in magnitude. What `S` is applied to is selected by [`Proximity`]:
//! the raw control-point/obstacle displacement, or the inverse-distance
//! vector `v / |v|^2` whose length is `1 / distance`.

use nalgebra::{DVector, Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{truncated_pseudo_inverse, ControlPointSet, JointConfig, SerialChain, PINV_RELATIVE_CUTOFF};
use crate::world::PointObstacleSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub a: f64,
    pub b: f64,
}

impl ScaleParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0) {
            return Err(Error::InvalidParams(format!("scale needs a > 0, b > 0 (a={a}, b={b})")));
        }
        Ok(ScaleParams { a, b })
    }

    /// Supremum of `|S(v)|`.
    pub fn bound(&self) -> f64 {
        self.a / self.b
    }
}

/// Input fed to the scaling function for every control-point/obstacle pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Proximity {
    /// `S(p - p_k)`: magnitude grows with distance and saturates at `a/b`.
    Displacement,
    /// `S((p - p_k) / |p - p_k|^2)`: magnitude `a / (b + d)`, largest at contact.
    #[default]
    InverseDistance,
}

/// Direction convention of the joint-space field used by VF-RRT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FieldSign {
    /// Obstacle minus control point: the field points toward obstacles.
    AsPrinted,
    /// Negated: the field points away from obstacles.
    #[default]
    Repulsive,
}

/// Scale plus the proximity mapping; everything the overlap and field terms need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    pub scale: ScaleParams,
    pub proximity: Proximity,
}

impl CostModel {
    pub fn new(scale: ScaleParams, proximity: Proximity) -> Self {
        CostModel { scale, proximity }
    }

    /// Scaled interaction for a displacement `delta` between two points.
    #[inline]
    pub fn term(&self, delta: Vector3<f64>) -> Vector3<f64> {
        match self.proximity {
            Proximity::Displacement => scale_vector(delta, &self.scale),
            Proximity::InverseDistance => {
                let n = delta.norm();
                if n == 0.0 {
                    return Vector3::zeros();
                }
                // S(delta / n^2) = a delta / (n (b + n))
                delta * (self.scale.a / (n * (self.scale.b + n)))
            }
        }
    }
}

/// Repulsion/attraction weights of the per-link potential field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApfParams {
    pub alpha: f64,
    pub beta: f64,
    pub model: CostModel,
}

impl ApfParams {
    pub fn new(alpha: f64, beta: f64, model: CostModel) -> Result<Self> {
        if alpha < 0.0 || beta < 0.0 || (alpha == 0.0 && beta == 0.0) {
            return Err(Error::InvalidParams(format!(
                "need alpha >= 0, beta >= 0, not both zero (alpha={alpha}, beta={beta})"
            )));
        }
        Ok(ApfParams { alpha, beta, model })
    }
}

/// Signed per-link costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVector(pub Vec<f64>);

impl CostVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `a v / (b |v| + 1)`.
#[inline]
pub fn scale_vector(v: Vector3<f64>, params: &ScaleParams) -> Vector3<f64> {
    v * (params.a / (params.b * v.norm() + 1.0))
}

fn mean_displacement(from: &[Point3<f64>], to: &[Point3<f64>]) -> Vector3<f64> {
    let sum = from
        .iter()
        .zip(to)
        .fold(Vector3::zeros(), |acc, (a, b)| acc + (b - a));
    sum / from.len() as f64
}

/// `(1/K)(1/N_l) sum_k sum_i term(p_i - p_k)`, i.e. pointing away from the obstacles.
fn mean_repulsion(points: &[Point3<f64>], obstacles: &PointObstacleSet, model: &CostModel) -> Vector3<f64> {
    let k = obstacles.len();
    if k == 0 {
        return Vector3::zeros();
    }
    let mut sum = Vector3::zeros();
    for p in points {
        for o in obstacles.points() {
            sum += model.term(p - o);
        }
    }
    sum / (k * points.len()) as f64
}

/// Desired Cartesian motion of each link: mean repulsion from the obstacles
/// plus mean attraction toward the goal pose, from precomputed control points.
pub fn desired_vectors_from_points(
    near: &ControlPointSet,
    goal: &ControlPointSet,
    obstacles: &PointObstacleSet,
    params: &ApfParams,
) -> Vec<Vector3<f64>> {
    near.per_link
        .iter()
        .zip(&goal.per_link)
        .map(|(pn, pg)| {
            params.alpha * mean_repulsion(pn, obstacles, &params.model)
                + params.beta * mean_displacement(pn, pg)
        })
        .collect()
}

pub fn per_link_desired_vectors(
    chain: &SerialChain,
    q_near: &JointConfig,
    q_goal: &JointConfig,
    obstacles: &PointObstacleSet,
    params: &ApfParams,
) -> Result<Vec<Vector3<f64>>> {
    let near = chain.control_points(q_near)?;
    let goal = chain.control_points(q_goal)?;
    Ok(desired_vectors_from_points(&near, &goal, obstacles, params))
}

pub fn directional_vectors_from_points(near: &ControlPointSet, rand: &ControlPointSet) -> Vec<Vector3<f64>> {
    near.per_link
        .iter()
        .zip(&rand.per_link)
        .map(|(pn, pr)| mean_displacement(pn, pr))
        .collect()
}

/// Mean displacement of each link's control points from `q_near` to `q_rand`.
pub fn per_link_directional_vectors(
    chain: &SerialChain,
    q_near: &JointConfig,
    q_rand: &JointConfig,
) -> Result<Vec<Vector3<f64>>> {
    let near = chain.control_points(q_near)?;
    let rand = chain.control_points(q_rand)?;
    Ok(directional_vectors_from_points(&near, &rand))
}

pub fn per_link_cost_from_points(
    near: &ControlPointSet,
    rand: &ControlPointSet,
    goal: &ControlPointSet,
    obstacles: &PointObstacleSet,
    params: &ApfParams,
) -> CostVector {
    let desired = desired_vectors_from_points(near, goal, obstacles, params);
    let direction = directional_vectors_from_points(near, rand);
    CostVector(
        desired
            .iter()
            .zip(&direction)
            .map(|(v, d)| -v.dot(d))
            .collect(),
    )
}

/// Alignment cost per link: negative when the sampled motion follows the
/// desired direction, positive when it opposes it.
pub fn per_link_cost(
    chain: &SerialChain,
    q_near: &JointConfig,
    q_rand: &JointConfig,
    q_goal: &JointConfig,
    obstacles: &PointObstacleSet,
    params: &ApfParams,
) -> Result<CostVector> {
    let near = chain.control_points(q_near)?;
    let rand = chain.control_points(q_rand)?;
    let goal = chain.control_points(q_goal)?;
    Ok(per_link_cost_from_points(&near, &rand, &goal, obstacles, params))
}

/// Per-link mean of `term(p_k - p_i)` (pointing toward the obstacles).
fn attraction_to_obstacles(cps: &ControlPointSet, obstacles: &PointObstacleSet, model: &CostModel) -> Vec<Vector3<f64>> {
    cps.per_link
        .iter()
        .map(|pts| -mean_repulsion(pts, obstacles, model))
        .collect()
}

pub fn overlap_cost_from_points(cps: &ControlPointSet, obstacles: &PointObstacleSet, model: &CostModel) -> f64 {
    if obstacles.is_empty() {
        return 0.0;
    }
    attraction_to_obstacles(cps, obstacles, model)
        .iter()
        .map(|v| v.norm())
        .sum()
}

/// Scalar obstacle-overlap cost: sum over links of the norm of the mean scaled
/// obstacle interaction. Zero without obstacles.
pub fn overlap_cost(
    chain: &SerialChain,
    q: &JointConfig,
    obstacles: &PointObstacleSet,
    model: &CostModel,
) -> Result<f64> {
    let cps = chain.control_points(q)?;
    Ok(overlap_cost_from_points(&cps, obstacles, model))
}

/// Midpoint-rule line integral of `|f| - <f, q'>` along a piecewise-linear
/// joint-space path. Zero-length segments contribute nothing.
pub fn upstream_criterion<F>(path: &[JointConfig], mut field: F) -> Result<f64>
where
    F: FnMut(&JointConfig) -> Vec<f64>,
{
    if path.len() < 2 {
        return Err(Error::PathTooShort {
            required: 2,
            actual: path.len(),
        });
    }
    let mut total = 0.0;
    for seg in path.windows(2) {
        let len = seg[0].distance(&seg[1]);
        if len == 0.0 {
            continue;
        }
        let mid = seg[0].lerp(&seg[1], 0.5);
        let f = field(&mid);
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        let along: f64 = f
            .iter()
            .zip(seg[0].0.iter().zip(&seg[1].0))
            .map(|(fi, (a, b))| fi * (b - a) / len)
            .sum();
        // Cauchy-Schwarz makes the integrand non-negative up to rounding.
        total += (norm - along).max(0.0) * len;
    }
    Ok(total)
}

/// Settings of the joint-space obstacle field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldParams {
    pub model: CostModel,
    pub sign: FieldSign,
    /// Singular values at or below this fraction of the largest are dropped
    /// when inverting link Jacobians.
    pub pinv_cutoff: f64,
}

impl FieldParams {
    pub fn new(model: CostModel, sign: FieldSign) -> Self {
        FieldParams {
            model,
            sign,
            pinv_cutoff: PINV_RELATIVE_CUTOFF,
        }
    }

    pub fn with_cutoff(self, pinv_cutoff: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&pinv_cutoff) {
            return Err(Error::InvalidParams(format!("pinv cutoff must be in [0, 1), got {pinv_cutoff}")));
        }
        Ok(FieldParams { pinv_cutoff, ..self })
    }
}

/// Joint-space field: every link's mean obstacle interaction mapped through the
/// pseudo-inverse of the Jacobian at the centroid of its control points,
/// zero-padded to the chain dimension and summed.
pub fn vfrrt_field(chain: &SerialChain, q: &JointConfig, obstacles: &PointObstacleSet, field: &FieldParams) -> Result<Vec<f64>> {
    let model = &field.model;
    let n = chain.link_count();
    if obstacles.is_empty() {
        chain.check_dim(q)?;
        return Ok(vec![0.0; n]);
    }
    let poses = chain.forward_kinematics(q)?;
    let cps = chain.control_points_from_poses(&poses);
    let toward = attraction_to_obstacles(&cps, obstacles, model);
    let mut out = DVector::zeros(n);
    for (l, (pts, r)) in cps.per_link.iter().zip(&toward).enumerate() {
        let centroid = Point3::from(pts.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / pts.len() as f64);
        let jac = chain.link_jacobian_from_poses(&poses, l, &centroid);
        let dq = truncated_pseudo_inverse(&jac, field.pinv_cutoff) * DVector::from_column_slice(r.as_slice());
        let mut head = out.rows_mut(0, l + 1);
        head += &dq;
    }
    let s = match field.sign {
        FieldSign::AsPrinted => 1.0,
        FieldSign::Repulsive => -1.0,
    };
    Ok(out.iter().map(|x| s * x).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(a: f64, b: f64, proximity: Proximity) -> CostModel {
        CostModel::new(ScaleParams::new(a, b).unwrap(), proximity)
    }

    #[test]
    fn scale_examples() {
        let p = ScaleParams::new(1.0, 1.0).unwrap();
        assert_eq!(scale_vector(Vector3::zeros(), &p), Vector3::zeros());
        assert_relative_eq!(scale_vector(Vector3::new(1.0, 0.0, 0.0), &p), Vector3::new(0.5, 0.0, 0.0));
        let p = ScaleParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(
            scale_vector(Vector3::new(3.0, 4.0, 0.0), &p),
            Vector3::new(1.0, 4.0 / 3.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn scale_params_validation() {
        assert!(ScaleParams::new(0.0, 1.0).is_err());
        assert!(ScaleParams::new(1.0, -1.0).is_err());
        let m = model(1.0, 1.0, Proximity::Displacement);
        assert!(ApfParams::new(0.0, 0.0, m).is_err());
        assert!(ApfParams::new(-1.0, 1.0, m).is_err());
        assert!(ApfParams::new(0.0, 1.0, m).is_ok());
    }

    #[test]
    fn inverse_distance_term_magnitude() {
        let m = model(2.0, 0.5, Proximity::InverseDistance);
        for d in [1e-6, 0.01, 0.3, 2.0, 50.0] {
            let t = m.term(Vector3::new(0.0, d, 0.0));
            assert_relative_eq!(t.norm(), 2.0 / (0.5 + d), max_relative = 1e-14);
            assert!(t.y > 0.0);
        }
        assert_eq!(m.term(Vector3::zeros()), Vector3::zeros());
    }

    #[test]
    fn single_point_overlap_matches_closed_form() {
        // One control point at the middle of a single link, one obstacle at distance d.
        let chain = SerialChain::planar(&[1.0], 0.05, 1).unwrap();
        let q = JointConfig::zeros(1);
        for d in [0.05, 0.3, 1.7] {
            let obs = PointObstacleSet::new(vec![Point3::new(0.5, d, 0.0)], 0.05).unwrap();
            let raw = overlap_cost(&chain, &q, &obs, &model(1.0, 10.0, Proximity::Displacement)).unwrap();
            assert_relative_eq!(raw, d / (10.0 * d + 1.0), max_relative = 1e-14);
            let inv = overlap_cost(&chain, &q, &obs, &model(1.0, 10.0, Proximity::InverseDistance)).unwrap();
            assert_relative_eq!(inv, 1.0 / (10.0 + d), max_relative = 1e-14);
        }
    }

    #[test]
    fn overlap_zero_without_obstacles() {
        let arm = SerialChain::benchmark_arm();
        let c = overlap_cost(&arm, &JointConfig::zeros(4), &PointObstacleSet::empty(), &model(1.0, 10.0, Proximity::InverseDistance));
        assert_eq!(c.unwrap(), 0.0);
    }

    #[test]
    fn overlap_decreases_as_cluster_recedes() {
        let arm = SerialChain::benchmark_arm();
        let q = JointConfig::zeros(4);
        let m = model(1.0, 0.1, Proximity::InverseDistance);
        let mut prev = f64::INFINITY;
        for d in [0.1, 0.5, 1.0, 2.0] {
            let obs = PointObstacleSet::new(
                crate::world::obstacle_cluster(Point3::new(0.8, 0.0, 0.1 + d)),
                0.05,
            )
            .unwrap();
            let c = overlap_cost(&arm, &q, &obs, &m).unwrap();
            assert!(c < prev, "cost {c} at {d} not below {prev}");
            prev = c;
        }
    }

    #[test]
    fn desired_vectors_without_obstacles() {
        let arm = SerialChain::benchmark_arm();
        let q = JointConfig(vec![0.1, -0.2, 0.3, 0.4]);
        let apf = ApfParams::new(1.0, 1.0, model(1.0, 10.0, Proximity::InverseDistance)).unwrap();
        let v = per_link_desired_vectors(&arm, &q, &q, &PointObstacleSet::empty(), &apf).unwrap();
        assert!(v.iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn desired_vector_is_mean_goal_displacement() {
        // Goal pose shifted by (0, 0, 0.1): a prismatic-like shift via a base offset.
        let arm = SerialChain::benchmark_arm();
        let q = JointConfig(vec![0.1, -0.2, 0.3, 0.4]);
        let near = arm.control_points(&q).unwrap();
        let shift = Vector3::new(0.0, 0.0, 0.1);
        let goal = ControlPointSet {
            per_link: near.per_link.iter().map(|l| l.iter().map(|p| p + shift).collect()).collect(),
        };
        let apf = ApfParams::new(0.0, 1.0, model(1.0, 10.0, Proximity::InverseDistance)).unwrap();
        for v in desired_vectors_from_points(&near, &goal, &PointObstacleSet::empty(), &apf) {
            assert_relative_eq!(v, shift, epsilon = 1e-15);
        }
    }

    #[test]
    fn directional_vectors_zero_for_unmoved_links() {
        let arm = SerialChain::benchmark_arm();
        let a = JointConfig(vec![0.1, -0.2, 0.3, 0.4]);
        let b = JointConfig(vec![0.1, -0.2, 0.3, 1.4]);
        let d = per_link_directional_vectors(&arm, &a, &b).unwrap();
        for v in &d[..3] {
            assert_eq!(v.norm(), 0.0);
        }
        assert!(d[3].norm() > 0.0);
        assert!(per_link_directional_vectors(&arm, &a, &a).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn cost_sign_follows_alignment() {
        let arm = SerialChain::benchmark_arm();
        let near = JointConfig(vec![0.0, 0.0, 0.0, 0.0]);
        let goal = JointConfig(vec![0.5, 0.0, 0.0, 0.0]);
        let apf = ApfParams::new(0.0, 1.0, model(1.0, 10.0, Proximity::InverseDistance)).unwrap();
        let obs = PointObstacleSet::empty();
        let toward = per_link_cost(&arm, &near, &JointConfig(vec![0.1, 0.0, 0.0, 0.0]), &goal, &obs, &apf).unwrap();
        let away = per_link_cost(&arm, &near, &JointConfig(vec![-0.1, 0.0, 0.0, 0.0]), &goal, &obs, &apf).unwrap();
        assert!(toward.0.iter().all(|c| *c < 0.0));
        assert!(away.0.iter().all(|c| *c > 0.0));
        let still = per_link_cost(&arm, &near, &near, &goal, &obs, &apf).unwrap();
        assert!(still.0.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn upstream_examples() {
        let line = vec![JointConfig(vec![0.0, 0.0]), JointConfig(vec![0.5, 0.0]), JointConfig(vec![1.0, 0.0])];
        assert_eq!(upstream_criterion(&line, |_| vec![0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(upstream_criterion(&line, |_| vec![3.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(upstream_criterion(&line, |_| vec![-1.0, 0.0]).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(
            upstream_criterion(&line[..1], |_| vec![0.0, 0.0]),
            Err(Error::PathTooShort { .. })
        ));
    }

    #[test]
    fn field_zero_without_obstacles() {
        let arm = SerialChain::benchmark_arm();
        let f = vfrrt_field(&arm, &JointConfig::zeros(4), &PointObstacleSet::empty(), &FieldParams::new(model(1.0, 1.0, Proximity::InverseDistance), FieldSign::AsPrinted)).unwrap();
        assert_eq!(f, vec![0.0; 4]);
    }

    #[test]
    fn field_single_link_sign() {
        // Link along +x, obstacle ahead in +y: as printed the field rotates the
        // link toward the obstacle (positive about z), the repulsive variant away.
        let chain = SerialChain::planar(&[1.0], 0.05, 3).unwrap();
        let q = JointConfig::zeros(1);
        let obs = PointObstacleSet::new(vec![Point3::new(1.0, 0.5, 0.0)], 0.05).unwrap();
        for prox in [Proximity::Displacement, Proximity::InverseDistance] {
            let m = model(1.0, 1.0, prox);
            let f = vfrrt_field(&chain, &q, &obs, &FieldParams::new(m, FieldSign::AsPrinted)).unwrap();
            assert!(f[0] > 0.0);
            let g = vfrrt_field(&chain, &q, &obs, &FieldParams::new(m, FieldSign::Repulsive)).unwrap();
            assert_relative_eq!(g[0], -f[0]);

            // Hand evaluation: J at the centroid (0.5, 0, 0) is (0, 0.5, 0)^T,
            // so J^+ picks 2 * y of the mean interaction.
            let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(0.5, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
            let mean_y: f64 = pts.iter().map(|p| m.term(obs.points()[0] - p).y).sum::<f64>() / 3.0;
            assert_relative_eq!(f[0], 2.0 * mean_y, max_relative = 1e-12);
        }
    }

    #[test]
    fn field_scales_linearly_in_a() {
        let arm = SerialChain::benchmark_arm();
        let q = JointConfig(vec![0.3, -0.4, 0.2, 0.6]);
        let obs = PointObstacleSet::new(crate::world::obstacle_cluster(Point3::new(0.6, 0.3, -0.2)), 0.05).unwrap();
        let f1 = vfrrt_field(&arm, &q, &obs, &FieldParams::new(model(1.0, 2.0, Proximity::Displacement), FieldSign::Repulsive)).unwrap();
        let f2 = vfrrt_field(&arm, &q, &obs, &FieldParams::new(model(2.0, 2.0, Proximity::Displacement), FieldSign::Repulsive)).unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            assert_relative_eq!(*b, 2.0 * a, max_relative = 1e-12);
        }
    }
}
