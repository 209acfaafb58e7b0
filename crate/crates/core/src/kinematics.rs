//! Revolute serial chain with capsule links.
//!
//! Every link owns one revolute joint at its origin. The world pose of link `i`
//! is `pose(i-1) * fixed_offset(i) * rot(joint_axis(i), q[i])` and its capsule
//! axis runs from the link origin to `(length, 0, 0)` in the link frame.
//! Control points are spread uniformly along that axis.

use std::path::Path;

use nalgebra::{DMatrix, Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const AXIS_NORM_TOL: f64 = 1e-9;
/// Singular values below this fraction of the largest one are treated as zero.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-8;

/// A point in joint space, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointConfig(pub Vec<f64>);

impl JointConfig {
    pub fn new(q: Vec<f64>) -> Self {
        JointConfig(q)
    }

    pub fn zeros(dim: usize) -> Self {
        JointConfig(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean distance in joint space.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `self + t * (other - self)`.
    pub fn lerp(&self, other: &JointConfig, t: f64) -> JointConfig {
        JointConfig(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        )
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(q: Vec<f64>) -> Self {
        JointConfig(q)
    }
}

/// Closed joint range `[lo, hi]`, radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointLimits {
    pub lo: f64,
    pub hi: f64,
}

impl JointLimits {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub length: f64,
    pub capsule_radius: f64,
    pub joint_axis: Unit<Vector3<f64>>,
    pub fixed_offset: Isometry3<f64>,
    pub control_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerialChain {
    links: Vec<LinkSpec>,
    limits: Vec<JointLimits>,
}

/// Control points of one configuration, grouped per link, world frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPointSet {
    pub per_link: Vec<Vec<Point3<f64>>>,
}

impl ControlPointSet {
    pub fn flat_count(&self) -> usize {
        self.per_link.iter().map(Vec::len).sum()
    }

    pub fn link_count(&self) -> usize {
        self.per_link.len()
    }
}

impl SerialChain {
    pub fn new(links: Vec<LinkSpec>, limits: Vec<JointLimits>) -> Result<Self> {
        if links.is_empty() {
            return Err(Error::InvalidChain("chain needs at least one link".into()));
        }
        if links.len() != limits.len() {
            return Err(Error::InvalidChain(format!(
                "{} links but {} joint limits",
                links.len(),
                limits.len()
            )));
        }
        for (i, (link, lim)) in links.iter().zip(&limits).enumerate() {
            if !(link.length > 0.0 && link.length.is_finite()) {
                return Err(Error::InvalidChain(format!("link {i}: length must be > 0")));
            }
            if !(link.capsule_radius > 0.0 && link.capsule_radius.is_finite()) {
                return Err(Error::InvalidChain(format!("link {i}: radius must be > 0")));
            }
            if (link.joint_axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                return Err(Error::InvalidChain(format!("link {i}: joint axis not unit")));
            }
            if link.control_points == 0 {
                return Err(Error::InvalidChain(format!(
                    "link {i}: needs at least one control point"
                )));
            }
            if !(lim.lo < lim.hi) {
                return Err(Error::InvalidChain(format!(
                    "joint {i}: limit lo {} must be < hi {}",
                    lim.lo, lim.hi
                )));
            }
        }
        Ok(SerialChain { links, limits })
    }

    /// Planar chain rotating about world z, links laid end to end along x.
    pub fn planar(lengths: &[f64], capsule_radius: f64, control_points: usize) -> Result<Self> {
        let mut links = Vec::with_capacity(lengths.len());
        let mut parent_len = 0.0;
        for &len in lengths {
            links.push(LinkSpec {
                length: len,
                capsule_radius,
                joint_axis: Vector3::z_axis(),
                fixed_offset: Isometry3::translation(parent_len, 0.0, 0.0),
                control_points,
            });
            parent_len = len;
        }
        let limits = vec![
            JointLimits {
                lo: -std::f64::consts::PI,
                hi: std::f64::consts::PI,
            };
            lengths.len()
        ];
        SerialChain::new(links, limits)
    }

    /// The benchmark arm: four 0.4 m capsule links (radius 0.05 m), joint axes
    /// alternating z / y, three control points per link.
    pub fn benchmark_arm() -> Self {
        let axes = [
            Vector3::z_axis(),
            Vector3::y_axis(),
            Vector3::z_axis(),
            Vector3::y_axis(),
        ];
        let mut links = Vec::with_capacity(4);
        for (i, axis) in axes.into_iter().enumerate() {
            let parent_len = if i == 0 { 0.0 } else { 0.4 };
            links.push(LinkSpec {
                length: 0.4,
                capsule_radius: 0.05,
                joint_axis: axis,
                fixed_offset: Isometry3::translation(parent_len, 0.0, 0.0),
                control_points: 3,
            });
        }
        let limits = vec![
            JointLimits {
                lo: -std::f64::consts::PI,
                hi: std::f64::consts::PI,
            };
            4
        ];
        SerialChain::new(links, limits).expect("benchmark arm is valid")
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn limits(&self) -> &[JointLimits] {
        &self.limits
    }

    pub fn link_count(&self) -> usize {
        self.links.len()
    }

    pub fn total_length(&self) -> f64 {
        self.links.iter().map(|l| l.length).sum()
    }

    pub fn control_point_count(&self) -> usize {
        self.links.iter().map(|l| l.control_points).sum()
    }

    pub fn check_dim(&self, q: &JointConfig) -> Result<()> {
        if q.dim() != self.links.len() {
            return Err(Error::DimensionMismatch {
                expected: self.links.len(),
                actual: q.dim(),
            });
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.dim() == self.limits.len() && q.0.iter().zip(&self.limits).all(|(x, l)| l.contains(*x))
    }

    pub fn clamp(&self, q: &mut JointConfig) {
        for (x, l) in q.0.iter_mut().zip(&self.limits) {
            *x = l.clamp(*x);
        }
    }

    /// World pose of every link frame.
    pub fn forward_kinematics(&self, q: &JointConfig) -> Result<Vec<Isometry3<f64>>> {
        self.check_dim(q)?;
        if q.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("joint angles must be finite".into()));
        }
        let mut poses = Vec::with_capacity(self.links.len());
        let mut pose = Isometry3::identity();
        for (link, &angle) in self.links.iter().zip(&q.0) {
            let joint = UnitQuaternion::from_axis_angle(&link.joint_axis, angle);
            pose = pose * link.fixed_offset * Isometry3::from_parts(Translation3::identity(), joint);
            poses.push(pose);
        }
        Ok(poses)
    }

    /// Control point positions in the local frame of `link`.
    pub fn local_control_points(&self, link: usize) -> Vec<Point3<f64>> {
        let spec = &self.links[link];
        let n = spec.control_points;
        if n == 1 {
            return vec![Point3::new(0.5 * spec.length, 0.0, 0.0)];
        }
        (0..n)
            .map(|j| Point3::new(spec.length * j as f64 / (n - 1) as f64, 0.0, 0.0))
            .collect()
    }

    pub fn control_points(&self, q: &JointConfig) -> Result<ControlPointSet> {
        let poses = self.forward_kinematics(q)?;
        Ok(self.control_points_from_poses(&poses))
    }

    pub fn control_points_from_poses(&self, poses: &[Isometry3<f64>]) -> ControlPointSet {
        let per_link = poses
            .iter()
            .enumerate()
            .map(|(l, pose)| {
                self.local_control_points(l)
                    .into_iter()
                    .map(|p| pose * p)
                    .collect()
            })
            .collect();
        ControlPointSet { per_link }
    }

    /// Capsule axis segment of every link, world frame.
    pub fn link_segments(&self, q: &JointConfig) -> Result<Vec<(Point3<f64>, Point3<f64>)>> {
        let poses = self.forward_kinematics(q)?;
        Ok(poses
            .iter()
            .zip(&self.links)
            .map(|(pose, link)| (pose * Point3::origin(), pose * Point3::new(link.length, 0.0, 0.0)))
            .collect())
    }

    /// Tip of the final link.
    pub fn end_effector(&self, q: &JointConfig) -> Result<Point3<f64>> {
        let poses = self.forward_kinematics(q)?;
        let last = self.links.len() - 1;
        Ok(poses[last] * Point3::new(self.links[last].length, 0.0, 0.0))
    }

    /// Positional Jacobian of a world point `p` rigidly attached to `link`
    /// (0-based). Returns a `3 x (link + 1)` matrix; column `j` is
    /// `axis_j x (p - origin_j)`.
    pub fn link_jacobian(&self, q: &JointConfig, link: usize, p: &Point3<f64>) -> Result<DMatrix<f64>> {
        if link >= self.links.len() {
            return Err(Error::LinkOutOfRange {
                index: link,
                links: self.links.len(),
            });
        }
        let poses = self.forward_kinematics(q)?;
        Ok(self.link_jacobian_from_poses(&poses, link, p))
    }

    pub(crate) fn link_jacobian_from_poses(
        &self,
        poses: &[Isometry3<f64>],
        link: usize,
        p: &Point3<f64>,
    ) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(3, link + 1);
        for (j, pose) in poses.iter().enumerate().take(link + 1) {
            let axis = pose.rotation * self.links[j].joint_axis.into_inner();
            let origin = pose.translation.vector;
            let col = axis.cross(&(p.coords - origin));
            jac.fixed_view_mut::<3, 1>(0, j).copy_from(&col);
        }
        jac
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: ChainSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        SerialChain::try_from(spec)
    }

    pub fn to_spec(&self) -> ChainSpec {
        ChainSpec {
            link: self
                .links
                .iter()
                .zip(&self.limits)
                .map(|(l, lim)| {
                    let (roll, pitch, yaw) = l.fixed_offset.rotation.euler_angles();
                    let t = l.fixed_offset.translation.vector;
                    LinkEntry {
                        length: l.length,
                        radius: l.capsule_radius,
                        axis: [l.joint_axis.x, l.joint_axis.y, l.joint_axis.z],
                        offset: Some(OffsetEntry {
                            xyz: [t.x, t.y, t.z],
                            rpy: [roll, pitch, yaw],
                        }),
                        control_points: l.control_points,
                        limits: [lim.lo, lim.hi],
                    }
                })
                .collect(),
        }
    }
}

/// Moore-Penrose pseudo-inverse via SVD. Singular values below
/// [`PINV_RELATIVE_CUTOFF`] times the largest are dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    truncated_pseudo_inverse(m, PINV_RELATIVE_CUTOFF)
}

/// SVD pseudo-inverse that drops singular values at or below
/// `relative_cutoff` times the largest one.
pub fn truncated_pseudo_inverse(m: &DMatrix<f64>, relative_cutoff: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(cols, rows);
    }
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return DMatrix::zeros(cols, rows);
    }
    let cutoff = relative_cutoff * sigma_max;
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            continue;
        }
        // out += v_k * u_k^T / s
        let v_k = v_t.row(k).transpose();
        let u_k = u.column(k);
        out += (v_k * u_k.transpose()) / s;
    }
    out
}

/// On-disk chain description (TOML, one `[[link]]` table per link).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub link: Vec<LinkEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub length: f64,
    pub radius: f64,
    pub axis: [f64; 3],
    /// Defaults to a pure translation to the parent's tip.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<OffsetEntry>,
    #[serde(default = "default_control_points")]
    pub control_points: usize,
    pub limits: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffsetEntry {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

fn default_control_points() -> usize {
    3
}

impl TryFrom<ChainSpec> for SerialChain {
    type Error = Error;

    fn try_from(spec: ChainSpec) -> Result<Self> {
        let mut links = Vec::with_capacity(spec.link.len());
        let mut limits = Vec::with_capacity(spec.link.len());
        let mut parent_len = 0.0;
        for (i, e) in spec.link.into_iter().enumerate() {
            let axis = Vector3::new(e.axis[0], e.axis[1], e.axis[2]);
            if (axis.norm() - 1.0).abs() > AXIS_NORM_TOL {
                return Err(Error::InvalidChain(format!("link {i}: joint axis not unit")));
            }
            let fixed_offset = match e.offset {
                Some(o) => Isometry3::from_parts(
                    Translation3::new(o.xyz[0], o.xyz[1], o.xyz[2]),
                    UnitQuaternion::from_euler_angles(o.rpy[0], o.rpy[1], o.rpy[2]),
                ),
                None => Isometry3::translation(parent_len, 0.0, 0.0),
            };
            links.push(LinkSpec {
                length: e.length,
                capsule_radius: e.radius,
                joint_axis: Unit::new_unchecked(axis),
                fixed_offset,
                control_points: e.control_points,
            });
            limits.push(JointLimits {
                lo: e.limits[0],
                hi: e.limits[1],
            });
            parent_len = e.length;
        }
        SerialChain::new(links, limits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn planar2() -> SerialChain {
        SerialChain::planar(&[1.0, 1.0], 0.05, 3).unwrap()
    }

    fn tip(chain: &SerialChain, q: &[f64], link: usize) -> Point3<f64> {
        let poses = chain.forward_kinematics(&JointConfig::new(q.to_vec())).unwrap();
        poses[link] * Point3::new(chain.links()[link].length, 0.0, 0.0)
    }

    #[test]
    fn planar_fk_straight() {
        let c = planar2();
        assert_relative_eq!(tip(&c, &[0.0, 0.0], 0), Point3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(tip(&c, &[0.0, 0.0], 1), Point3::new(2.0, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn planar_fk_rotated() {
        let c = planar2();
        assert_relative_eq!(tip(&c, &[FRAC_PI_2, 0.0], 0), Point3::new(0.0, 1.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(tip(&c, &[FRAC_PI_2, 0.0], 1), Point3::new(0.0, 2.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(
            tip(&c, &[FRAC_PI_2, -FRAC_PI_2], 1),
            Point3::new(1.0, 1.0, 0.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn fk_dimension_mismatch() {
        let c = planar2();
        let err = c.forward_kinematics(&JointConfig::new(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, actual: 1 }));
    }

    #[test]
    fn control_points_uniform() {
        let c = SerialChain::planar(&[1.0], 0.05, 3).unwrap();
        let cps = c.control_points(&JointConfig::zeros(1)).unwrap();
        let pts = &cps.per_link[0];
        assert_relative_eq!(pts[0], Point3::new(0.0, 0.0, 0.0));
        assert_relative_eq!(pts[1], Point3::new(0.5, 0.0, 0.0));
        assert_relative_eq!(pts[2], Point3::new(1.0, 0.0, 0.0));

        let c = SerialChain::planar(&[1.0, 1.0], 0.05, 2).unwrap();
        let cps = c.control_points(&JointConfig::zeros(2)).unwrap();
        assert_eq!(cps.flat_count(), 4);
        assert_eq!(cps.link_count(), 2);
    }

    #[test]
    fn rotated_control_points_follow_base_rotation() {
        // Rotating the base joint of a straight chain rotates every point about z.
        let c = planar2();
        let zero = c.control_points(&JointConfig::zeros(2)).unwrap();
        let rot = c.control_points(&JointConfig::new(vec![0.7, 0.0])).unwrap();
        let r = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.7);
        for (a, b) in zero.per_link.iter().flatten().zip(rot.per_link.iter().flatten()) {
            assert_relative_eq!(r * a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobian_single_link_tip() {
        let c = SerialChain::planar(&[1.0], 0.05, 3).unwrap();
        let q = JointConfig::zeros(1);
        let j = c.link_jacobian(&q, 0, &Point3::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(j.shape(), (3, 1));
        assert_relative_eq!(j[(0, 0)], 0.0);
        assert_relative_eq!(j[(1, 0)], 1.0);
        assert_relative_eq!(j[(2, 0)], 0.0);

        let j0 = c.link_jacobian(&q, 0, &Point3::origin()).unwrap();
        assert_relative_eq!(j0.norm(), 0.0);
    }

    #[test]
    fn jacobian_link_out_of_range() {
        let c = planar2();
        assert!(matches!(
            c.link_jacobian(&JointConfig::zeros(2), 2, &Point3::origin()),
            Err(Error::LinkOutOfRange { index: 2, links: 2 })
        ));
    }

    #[test]
    fn pinv_square_and_zero() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 0.5]);
        let p = pseudo_inverse(&m);
        assert_relative_eq!(p, m.clone().try_inverse().unwrap(), epsilon = 1e-12);
        assert_relative_eq!(pseudo_inverse(&DMatrix::zeros(3, 2)), DMatrix::<f64>::zeros(2, 3));
    }

    #[test]
    fn chain_validation() {
        let mut link = SerialChain::benchmark_arm().links()[0].clone();
        link.control_points = 0;
        let lim = JointLimits { lo: -1.0, hi: 1.0 };
        assert!(SerialChain::new(vec![link.clone()], vec![lim]).is_err());
        link.control_points = 2;
        assert!(SerialChain::new(vec![link.clone()], vec![JointLimits { lo: 1.0, hi: 1.0 }]).is_err());
        assert!(SerialChain::new(vec![], vec![]).is_err());
        assert!(SerialChain::new(vec![link], vec![lim]).is_ok());
    }

    #[test]
    fn chain_file_round_trip() {
        let arm = SerialChain::benchmark_arm();
        let text = toml::to_string(&arm.to_spec()).unwrap();
        let back = SerialChain::from_toml(&text).unwrap();
        for (a, b) in arm.links().iter().zip(back.links()) {
            assert_relative_eq!(a.fixed_offset, b.fixed_offset, epsilon = 1e-12);
            assert_eq!(a.control_points, b.control_points);
        }
    }

    #[test]
    fn chain_file_defaults_offset_to_parent_tip() {
        let text = r#"
            [[link]]
            length = 0.5
            radius = 0.04
            axis = [0.0, 0.0, 1.0]
            limits = [-1.0, 1.0]

            [[link]]
            length = 0.3
            radius = 0.04
            axis = [0.0, 1.0, 0.0]
            control_points = 5
            limits = [-2.0, 2.0]
        "#;
        let c = SerialChain::from_toml(text).unwrap();
        assert_eq!(c.control_point_count(), 8);
        let ee = c.end_effector(&JointConfig::zeros(2)).unwrap();
        assert_relative_eq!(ee, Point3::new(0.8, 0.0, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn chain_file_rejects_bad_axis() {
        let text = r#"
            [[link]]
            length = 0.5
            radius = 0.04
            axis = [0.0, 0.0, 2.0]
            limits = [-1.0, 1.0]
        "#;
        assert!(SerialChain::from_toml(text).is_err());
    }
}
