//! Point obstacles, voxel downsampling, and the four benchmark scenarios.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use nalgebra::{Point3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{ChainSpec, JointConfig, SerialChain};

/// Default obstacle sphere radius, meters.
pub const DEFAULT_SPHERE_RADIUS: f64 = 0.05;
/// Grid pitch of a scenario obstacle cluster, meters.
pub const CLUSTER_PITCH: f64 = 0.05;

/// Point obstacles derived from a point cloud. Each point is the centre of a
/// sphere of `sphere_radius` for contact evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct PointObstacleSet {
    points: Vec<Point3<f64>>,
    sphere_radius: f64,
}

impl PointObstacleSet {
    pub fn new(points: Vec<Point3<f64>>, sphere_radius: f64) -> Result<Self> {
        if !(sphere_radius > 0.0 && sphere_radius.is_finite()) {
            return Err(Error::InvalidScenario("sphere_radius must be > 0".into()));
        }
        if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidScenario("obstacle coordinates must be finite".into()));
        }
        Ok(PointObstacleSet {
            points,
            sphere_radius,
        })
    }

    pub fn empty() -> Self {
        PointObstacleSet {
            points: Vec::new(),
            sphere_radius: DEFAULT_SPHERE_RADIUS,
        }
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sphere_radius(&self) -> f64 {
        self.sphere_radius
    }
}

/// Parse whitespace-separated `x y z` triples, one per line. Blank lines and
/// lines starting with `#` are skipped.
pub fn load_point_cloud<R: BufRead>(source: R) -> Result<Vec<Point3<f64>>> {
    let mut points = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let mut xyz = [0.0; 3];
        for (slot, f) in xyz.iter_mut().zip(&fields) {
            let v: f64 = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("`{f}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("`{f}` is not finite"),
                });
            }
            *slot = v;
        }
        points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
    }
    Ok(points)
}

pub fn load_point_cloud_file(path: impl AsRef<Path>) -> Result<Vec<Point3<f64>>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_point_cloud(std::io::BufReader::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoxelParams {
    pub leaf_size: f64,
}

impl Default for VoxelParams {
    fn default() -> Self {
        VoxelParams { leaf_size: 0.05 }
    }
}

/// Replace every occupied cubic cell by the centroid of its points.
///
/// Cells are `[i*leaf, (i+1)*leaf)` on each axis, anchored at the origin.
/// Output is ordered by ascending `(i, j, k)` cell index.
pub fn voxel_downsample(points: &[Point3<f64>], params: VoxelParams) -> Vec<Point3<f64>> {
    assert!(params.leaf_size > 0.0, "leaf_size must be positive");
    let mut cells: BTreeMap<(i64, i64, i64), (Vector3<f64>, usize)> = BTreeMap::new();
    for p in points {
        let key = (
            (p.x / params.leaf_size).floor() as i64,
            (p.y / params.leaf_size).floor() as i64,
            (p.z / params.leaf_size).floor() as i64,
        );
        let entry = cells.entry(key).or_insert((Vector3::zeros(), 0));
        entry.0 += p.coords;
        entry.1 += 1;
    }
    cells
        .into_values()
        .map(|(sum, n)| Point3::from(sum / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub chain: SerialChain,
    pub q_start: JointConfig,
    pub q_goal: JointConfig,
    pub obstacles: PointObstacleSet,
}

impl Scenario {
    pub fn new(
        name: impl Into<String>,
        chain: SerialChain,
        q_start: JointConfig,
        q_goal: JointConfig,
        obstacles: PointObstacleSet,
    ) -> Result<Self> {
        chain.check_dim(&q_start)?;
        chain.check_dim(&q_goal)?;
        if !chain.within_limits(&q_start) || !chain.within_limits(&q_goal) {
            return Err(Error::InvalidScenario(
                "start and goal must lie within joint limits".into(),
            ));
        }
        if q_start == q_goal {
            return Err(Error::InvalidScenario("start equals goal".into()));
        }
        Ok(Scenario {
            name: name.into(),
            chain,
            q_start,
            q_goal,
            obstacles,
        })
    }

    pub fn from_file(path: impl AsRef<Path>, chain: Option<SerialChain>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        file.into_scenario(chain)
    }

    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: self.name.clone(),
            q_start: self.q_start.0.clone(),
            q_goal: self.q_goal.0.clone(),
            obstacles: ObstacleEntry {
                sphere_radius: self.obstacles.sphere_radius(),
                points: self.obstacles.points().iter().map(|p| [p.x, p.y, p.z]).collect(),
            },
            chain: Some(self.chain.to_spec()),
        }
    }
}

/// TOML form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub q_start: Vec<f64>,
    pub q_goal: Vec<f64>,
    pub obstacles: ObstacleEntry,
    /// Falls back to the chain given on the command line, then the benchmark arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleEntry {
    #[serde(default = "default_sphere_radius")]
    pub sphere_radius: f64,
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
}

fn default_sphere_radius() -> f64 {
    DEFAULT_SPHERE_RADIUS
}

impl ScenarioFile {
    pub fn into_scenario(self, chain: Option<SerialChain>) -> Result<Scenario> {
        let chain = match (chain, self.chain) {
            (Some(c), _) => c,
            (None, Some(spec)) => SerialChain::try_from(spec)?,
            (None, None) => SerialChain::benchmark_arm(),
        };
        let points = self
            .obstacles
            .points
            .iter()
            .map(|p| Point3::new(p[0], p[1], p[2]))
            .collect();
        let obstacles = PointObstacleSet::new(points, self.obstacles.sphere_radius)?;
        Scenario::new(
            self.name,
            chain,
            JointConfig(self.q_start),
            JointConfig(self.q_goal),
            obstacles,
        )
    }
}

/// 3x3x3 grid of points with [`CLUSTER_PITCH`] spacing centred on `centre`.
pub fn obstacle_cluster(centre: Point3<f64>) -> Vec<Point3<f64>> {
    let mut pts = Vec::with_capacity(27);
    for i in -1..=1 {
        for j in -1..=1 {
            for k in -1..=1 {
                pts.push(centre + Vector3::new(i as f64, j as f64, k as f64) * CLUSTER_PITCH);
            }
        }
    }
    pts
}

/// Centre for a cluster that sits beside `link` of the chain posed at `q`.
///
/// `along` is the fraction of the link length, `side` a direction in the link
/// frame (normalised) and `standoff` the distance from the link axis to the
/// cluster centre.
pub fn cluster_beside_link(
    chain: &SerialChain,
    q: &JointConfig,
    link: usize,
    along: f64,
    side: Vector3<f64>,
    standoff: f64,
) -> Result<Point3<f64>> {
    let poses = chain.forward_kinematics(q)?;
    let spec = &chain.links()[link];
    let local = Point3::new(along * spec.length, 0.0, 0.0) + side.normalize() * standoff;
    Ok(poses[link] * local)
}

/// Start and goal of scenarios 1 and 2 for the benchmark arm.
const S12_START: [f64; 4] = [-1.2, 0.3, 0.4, 0.2];
const S12_GOAL: [f64; 4] = [1.2, 0.3, -0.4, 0.2];
/// Start and goal of scenarios 3 and 4.
const S34_START: [f64; 4] = [-1.0, 0.2, 0.5, 0.3];
const S34_GOAL: [f64; 4] = [1.0, 0.2, -0.5, 0.3];

/// Build one of the four benchmark scenarios for `chain`.
///
/// The layouts assume a chain with at least four links; the canonical
/// start/goal are truncated or zero-padded to the chain's dimension and
/// clamped to its joint limits.
///
/// 1. one cluster between start and goal, both free;
/// 2. goal in contact with a cluster beside the last link;
/// 3. two clusters touching the arm at the start, one at the goal;
/// 4. scenario 3 plus a cluster blocking the direct route.
pub fn build_scenario(id: u32, chain: &SerialChain) -> Result<Scenario> {
    let n = chain.link_count();
    let last = n - 1;
    let fit = |q: [f64; 4]| {
        let mut v: Vec<f64> = (0..n).map(|i| q.get(i).copied().unwrap_or(0.0)).collect();
        for (x, l) in v.iter_mut().zip(chain.limits()) {
            *x = l.clamp(*x);
        }
        JointConfig(v)
    };
    let up = Vector3::new(0.0, 0.0, 1.0);
    let side = Vector3::new(0.0, 1.0, 0.0);
    let (name, q_start, q_goal, points) = match id {
        1 => {
            let (qs, qg) = (fit(S12_START), fit(S12_GOAL));
            let mid = qs.lerp(&qg, 0.5);
            let c = cluster_beside_link(chain, &mid, last, 0.5, up, 0.0)?;
            ("scenario1", qs, qg, obstacle_cluster(c))
        }
        2 => {
            let (qs, qg) = (fit(S12_START), fit(S12_GOAL));
            let c = cluster_beside_link(chain, &qg, last, 0.5, up, 0.09)?;
            ("scenario2", qs, qg, obstacle_cluster(c))
        }
        3 | 4 => {
            let (qs, qg) = (fit(S34_START), fit(S34_GOAL));
            let mut pts = Vec::new();
            let l1 = last.saturating_sub(2);
            pts.extend(obstacle_cluster(cluster_beside_link(chain, &qs, l1, 0.5, side, 0.09)?));
            pts.extend(obstacle_cluster(cluster_beside_link(chain, &qs, last, 0.5, up, 0.09)?));
            pts.extend(obstacle_cluster(cluster_beside_link(chain, &qg, last, 0.5, -up, 0.09)?));
            if id == 4 {
                let mid = qs.lerp(&qg, 0.5);
                let l2 = last.saturating_sub(1);
                pts.extend(obstacle_cluster(cluster_beside_link(chain, &mid, l2, 1.0, up, 0.0)?));
            }
            (if id == 3 { "scenario3" } else { "scenario4" }, qs, qg, pts)
        }
        other => return Err(Error::UnknownScenario(other)),
    };
    let obstacles = PointObstacleSet::new(points, DEFAULT_SPHERE_RADIUS)?;
    Scenario::new(name, chain.clone(), q_start, q_goal, obstacles)
}
