//! Brute-force reference implementations shared by the integration tests.
//! Plain arrays and explicit loops only; nothing here calls into the costs or
//! kinematics modules.

#![allow(dead_code)]

use nalgebra::{DMatrix, Isometry3, Point3, SymmetricEigen, Unit, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use contact_plan::kinematics::{JointLimits, LinkSpec, SerialChain};

pub type V3 = [f64; 3];
pub type M4 = [[f64; 4]; 4];

pub fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: V3, b: V3) -> V3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn mul(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

pub fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn identity() -> M4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn matmul(a: &M4, b: &M4) -> M4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                m[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    m
}

/// Homogeneous transform rotating by `angle` about unit `axis`, then translating by `t`.
pub fn rodrigues(axis: V3, angle: f64, t: V3) -> M4 {
    let (s, c) = angle.sin_cos();
    let [x, y, z] = axis;
    let k = [[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]];
    let mut m = identity();
    for i in 0..3 {
        for j in 0..3 {
            let kk: f64 = (0..3).map(|r| k[i][r] * k[r][j]).sum();
            m[i][j] += s * k[i][j] + (1.0 - c) * kk;
        }
        m[i][3] = t[i];
    }
    m
}

pub fn apply(m: &M4, p: V3) -> V3 {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * p[0] + m[i][1] * p[1] + m[i][2] * p[2] + m[i][3];
    }
    out
}

pub fn rotate(m: &M4, v: V3) -> V3 {
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        *o = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
    }
    out
}

/// Chain description from which both the library chain and the oracle are built.
#[derive(Debug, Clone)]
pub struct ChainDraw {
    pub lengths: Vec<f64>,
    pub axes: Vec<V3>,
    pub offset_axes: Vec<V3>,
    pub offset_angles: Vec<f64>,
    pub offset_shifts: Vec<V3>,
    pub control_points: Vec<usize>,
}

fn unit(rng: &mut ChaCha8Rng) -> V3 {
    loop {
        let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = norm(v);
        if n > 0.1 && n <= 1.0 {
            return mul(v, 1.0 / n);
        }
    }
}

impl ChainDraw {
    pub fn random(rng: &mut ChaCha8Rng, max_links: usize, max_points: usize) -> Self {
        let n = rng.gen_range(1..=max_links);
        let mut d = ChainDraw {
            lengths: Vec::new(),
            axes: Vec::new(),
            offset_axes: Vec::new(),
            offset_angles: Vec::new(),
            offset_shifts: Vec::new(),
            control_points: Vec::new(),
        };
        for i in 0..n {
            d.lengths.push(rng.gen_range(0.1..0.6));
            d.axes.push(unit(rng));
            d.offset_axes.push(unit(rng));
            d.offset_angles.push(rng.gen_range(-1.0..1.0));
            let along = if i == 0 { 0.0 } else { d.lengths[i - 1] };
            d.offset_shifts.push([
                along + rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
                rng.gen_range(-0.05..0.05),
            ]);
            d.control_points.push(rng.gen_range(1..=max_points));
        }
        d
    }

    pub fn link_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn chain(&self) -> SerialChain {
        let links = (0..self.link_count())
            .map(|i| {
                let rotvec = Vector3::from(self.offset_axes[i]) * self.offset_angles[i];
                LinkSpec {
                    length: self.lengths[i],
                    capsule_radius: 0.05,
                    joint_axis: Unit::new_normalize(Vector3::from(self.axes[i])),
                    fixed_offset: Isometry3::new(Vector3::from(self.offset_shifts[i]), rotvec),
                    control_points: self.control_points[i],
                }
            })
            .collect();
        let limits = vec![
            JointLimits {
                lo: -std::f64::consts::PI,
                hi: std::f64::consts::PI,
            };
            self.link_count()
        ];
        SerialChain::new(links, limits).unwrap()
    }

    /// Link frames after each joint rotation.
    pub fn poses(&self, q: &[f64]) -> Vec<M4> {
        let mut t = identity();
        let mut out = Vec::new();
        for i in 0..self.link_count() {
            let off = rodrigues(self.offset_axes[i], self.offset_angles[i], self.offset_shifts[i]);
            let joint = rodrigues(self.axes[i], q[i], [0.0; 3]);
            t = matmul(&matmul(&t, &off), &joint);
            out.push(t);
        }
        out
    }

    pub fn local_points(&self, link: usize) -> Vec<V3> {
        let n = self.control_points[link];
        let len = self.lengths[link];
        if n == 1 {
            return vec![[0.5 * len, 0.0, 0.0]];
        }
        (0..n).map(|j| [len * j as f64 / (n - 1) as f64, 0.0, 0.0]).collect()
    }

    pub fn control_points(&self, q: &[f64]) -> Vec<Vec<V3>> {
        self.poses(q)
            .iter()
            .enumerate()
            .map(|(l, pose)| self.local_points(l).into_iter().map(|p| apply(pose, p)).collect())
            .collect()
    }

    /// `3 x (link + 1)` positional Jacobian of world point `p` on `link`.
    pub fn jacobian(&self, q: &[f64], link: usize, p: V3) -> Vec<V3> {
        let poses = self.poses(q);
        (0..=link)
            .map(|j| {
                let axis = rotate(&poses[j], self.axes[j]);
                let origin = [poses[j][0][3], poses[j][1][3], poses[j][2][3]];
                cross(axis, sub(p, origin))
            })
            .collect()
    }
}

/// Naive cost settings mirroring `CostParams`.
#[derive(Debug, Clone, Copy)]
pub struct Naive {
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub inverse_distance: bool,
}

impl Naive {
    pub fn scale(&self, v: V3) -> V3 {
        mul(v, self.a / (self.b * norm(v) + 1.0))
    }

    /// Interaction of a control point with an obstacle, pointing along `delta`.
    pub fn term(&self, delta: V3) -> V3 {
        if !self.inverse_distance {
            return self.scale(delta);
        }
        let n2 = dot(delta, delta);
        if n2 == 0.0 {
            return [0.0; 3];
        }
        self.scale(mul(delta, 1.0 / n2))
    }

    pub fn desired(&self, near: &[Vec<V3>], goal: &[Vec<V3>], obstacles: &[V3]) -> Vec<V3> {
        let k = obstacles.len();
        near.iter()
            .zip(goal)
            .map(|(pn, pg)| {
                let nl = pn.len() as f64;
                let mut rep = [0.0; 3];
                for o in obstacles {
                    let mut inner = [0.0; 3];
                    for p in pn {
                        inner = add(inner, self.term(sub(*p, *o)));
                    }
                    rep = add(rep, mul(inner, 1.0 / nl));
                }
                if k > 0 {
                    rep = mul(rep, 1.0 / k as f64);
                }
                let mut att = [0.0; 3];
                for (p, g) in pn.iter().zip(pg) {
                    att = add(att, sub(*g, *p));
                }
                add(mul(rep, self.alpha), mul(att, self.beta / nl))
            })
            .collect()
    }

    pub fn directional(&self, near: &[Vec<V3>], rand: &[Vec<V3>]) -> Vec<V3> {
        near.iter()
            .zip(rand)
            .map(|(pn, pr)| {
                let mut d = [0.0; 3];
                for (p, r) in pn.iter().zip(pr) {
                    d = add(d, sub(*r, *p));
                }
                mul(d, 1.0 / pn.len() as f64)
            })
            .collect()
    }

    pub fn per_link_cost(&self, near: &[Vec<V3>], rand: &[Vec<V3>], goal: &[Vec<V3>], obstacles: &[V3]) -> Vec<f64> {
        self.desired(near, goal, obstacles)
            .iter()
            .zip(self.directional(near, rand))
            .map(|(v, d)| -dot(*v, d))
            .collect()
    }

    /// Per-link mean interaction pointing toward the obstacles.
    pub fn toward(&self, cps: &[Vec<V3>], obstacles: &[V3]) -> Vec<V3> {
        cps.iter()
            .map(|pts| {
                let mut s = [0.0; 3];
                for p in pts {
                    for o in obstacles {
                        s = add(s, self.term(sub(*o, *p)));
                    }
                }
                mul(s, 1.0 / (pts.len() * obstacles.len()) as f64)
            })
            .collect()
    }

    pub fn overlap(&self, cps: &[Vec<V3>], obstacles: &[V3]) -> f64 {
        if obstacles.is_empty() {
            return 0.0;
        }
        self.toward(cps, obstacles).iter().map(|v| norm(*v)).sum()
    }
}

/// Pseudo-inverse through the eigen-decomposition of `J^T J`, keeping
/// singular values above `cutoff * sigma_max`. Also returns the singular
/// value ratios so callers can avoid instances sitting on the cutoff.
pub fn eigen_pinv(jac: &[V3], cutoff: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = jac.len();
    let gram = DMatrix::from_fn(n, n, |i, j| dot(jac[i], jac[j]));
    let eig = SymmetricEigen::new(gram);
    let sigmas: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    let smax = sigmas.iter().cloned().fold(0.0, f64::max);
    let ratios = sigmas.iter().map(|s| if smax > 0.0 { s / smax } else { 0.0 }).collect();
    // pinv = sum_k v_k v_k^T J^T / sigma_k^2, an n x 3 matrix.
    let mut out = vec![vec![0.0; 3]; n];
    for (k, &s) in sigmas.iter().enumerate() {
        if smax == 0.0 || s <= cutoff * smax {
            continue;
        }
        let v = eig.eigenvectors.column(k);
        for r in 0..n {
            for c in 0..3 {
                let jt_c: f64 = (0..n).map(|m| v[m] * jac[m][c]).sum();
                out[r][c] += v[r] * jt_c / (s * s);
            }
        }
    }
    (out, ratios)
}

/// Joint-space field: sign times the sum over links of the padded
/// pseudo-inverse of the centroid Jacobian applied to the link's mean
/// interaction toward the obstacles. `None` if some singular value ratio sits
/// within 10% of the cutoff.
pub fn naive_field(draw: &ChainDraw, q: &[f64], obstacles: &[V3], naive: &Naive, cutoff: f64, sign: f64) -> Option<Vec<f64>> {
    let n = draw.link_count();
    if obstacles.is_empty() {
        return Some(vec![0.0; n]);
    }
    let cps = draw.control_points(q);
    let toward = naive.toward(&cps, obstacles);
    let mut out = vec![0.0; n];
    for (l, pts) in cps.iter().enumerate() {
        let mut c = [0.0; 3];
        for p in pts {
            c = add(c, *p);
        }
        let c = mul(c, 1.0 / pts.len() as f64);
        let (pinv, ratios) = eigen_pinv(&draw.jacobian(q, l, c), cutoff);
        if ratios.iter().any(|r| (r / cutoff - 1.0).abs() < 0.1) {
            return None;
        }
        for (j, row) in pinv.iter().enumerate() {
            out[j] += sign * dot([row[0], row[1], row[2]], toward[l]);
        }
    }
    Some(out)
}

pub fn to_v3(p: &Point3<f64>) -> V3 {
    [p.x, p.y, p.z]
}

/// `|x - y| <= tol * |y|` in the Euclidean norm, with exact equality for zero.
pub fn rel_close(x: &[f64], y: &[f64], tol: f64) -> bool {
    let diff: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let scale: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
    x.len() == y.len() && diff <= tol * scale
}
