//! Path metrics, capsule-sphere contact depth and multi-trial orchestration.
//!
//! Depths are computed in metres and reported in millimetres. Trials run in
//! parallel on a rayon pool whose size is capped by `CONTACT_PLAN_THREADS`;
//! records always come back in trial order.

use std::io::Write;

use nalgebra::Point3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kinematics::{JointConfig, SerialChain};
use crate::planners::{plan, CostParams, DiagnosticsRow, Path, PlanResult, PlannerKind, PlannerParams};
use crate::world::{PointObstacleSet, Scenario};

/// Environment variable capping trial-level parallelism.
pub const THREADS_ENV: &str = "CONTACT_PLAN_THREADS";

/// Distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: &Point3<f64>, a: &Point3<f64>, b: &Point3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

/// End-effector path length in metres.
pub fn path_length(chain: &SerialChain, path: &Path) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::PathTooShort { required: 1, actual: 0 });
    }
    let mut total = 0.0;
    let mut prev = chain.end_effector(&path.states[0])?;
    for q in &path.states[1..] {
        let p = chain.end_effector(q)?;
        total += (p - prev).norm();
        prev = p;
    }
    Ok(total)
}

/// Per-link penetration depth in metres, summed over obstacles.
pub fn contact_depth(chain: &SerialChain, q: &JointConfig, obstacles: &PointObstacleSet) -> Result<Vec<f64>> {
    let segments = chain.link_segments(q)?;
    let rs = obstacles.sphere_radius();
    Ok(segments
        .iter()
        .zip(chain.links())
        .map(|((a, b), link)| {
            let reach = link.capsule_radius + rs;
            obstacles
                .points()
                .iter()
                .map(|p| (reach - point_segment_distance(p, a, b)).max(0.0))
                .sum()
        })
        .collect())
}

/// Contact depth of every link along a path.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactProfile {
    /// `depth[l][m]`: depth of link `l` at state `m`, metres.
    pub depth: Vec<Vec<f64>>,
}

impl ContactProfile {
    pub fn link_count(&self) -> usize {
        self.depth.len()
    }

    pub fn state_count(&self) -> usize {
        self.depth.first().map_or(0, Vec::len)
    }

    /// Per-link sum over states, metres.
    pub fn totals(&self) -> Vec<f64> {
        self.depth.iter().map(|row| row.iter().sum()).collect()
    }

    /// Per-link number of maximal runs of consecutive non-zero depth.
    pub fn peaks(&self) -> Vec<usize> {
        self.depth
            .iter()
            .map(|row| {
                let mut runs = 0;
                let mut inside = false;
                for &d in row {
                    if d > 0.0 && !inside {
                        runs += 1;
                    }
                    inside = d > 0.0;
                }
                runs
            })
            .collect()
    }

    /// Peaks summed over links.
    pub fn total_peaks(&self) -> usize {
        self.peaks().iter().sum()
    }

    /// States in which any link has positive depth.
    pub fn states_in_collision(&self) -> usize {
        (0..self.state_count())
            .filter(|&m| self.depth.iter().any(|row| row[m] > 0.0))
            .count()
    }
}

pub fn path_contact_profile(chain: &SerialChain, path: &Path, obstacles: &PointObstacleSet) -> Result<ContactProfile> {
    if path.is_empty() {
        return Err(Error::PathTooShort { required: 1, actual: 0 });
    }
    let mut depth = vec![Vec::with_capacity(path.len()); chain.link_count()];
    for q in &path.states {
        for (row, d) in depth.iter_mut().zip(contact_depth(chain, q, obstacles)?) {
            row.push(d);
        }
    }
    Ok(ContactProfile { depth })
}

/// One planner run. Path-derived fields are `None` on failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub planner: PlannerKind,
    pub scenario: String,
    pub seed: u64,
    pub success: bool,
    pub iterations: u64,
    pub wall_time_s: f64,
    pub path_length_m: Option<f64>,
    pub per_link_contact_depth_mm: Option<Vec<f64>>,
    pub states_in_collision: Option<usize>,
    pub contact_peaks: Option<usize>,
    pub path_states: Option<usize>,
}

/// Aggregate over the successful trials of one (planner, scenario) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub planner: PlannerKind,
    pub scenario: String,
    pub trials: usize,
    pub successes: usize,
    /// Means over successes; `None` when there are none.
    pub mean_wall_time_s: Option<f64>,
    pub mean_path_length_m: Option<f64>,
    pub mean_contact_depth_mm: Option<Vec<f64>>,
    pub mean_states_in_collision: Option<f64>,
}

impl TrialSummary {
    pub fn from_records(planner: PlannerKind, scenario: &str, records: &[TrialRecord]) -> Self {
        let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
        let n = ok.len() as f64;
        let mean = |f: &dyn Fn(&TrialRecord) -> f64| (!ok.is_empty()).then(|| ok.iter().map(|r| f(r)).sum::<f64>() / n);
        let depth = (!ok.is_empty()).then(|| {
            let links = ok[0].per_link_contact_depth_mm.as_ref().map_or(0, Vec::len);
            (0..links)
                .map(|l| {
                    ok.iter()
                        .map(|r| r.per_link_contact_depth_mm.as_ref().map_or(0.0, |d| d[l]))
                        .sum::<f64>()
                        / n
                })
                .collect()
        });
        TrialSummary {
            planner,
            scenario: scenario.to_string(),
            trials: records.len(),
            successes: ok.len(),
            mean_wall_time_s: mean(&|r| r.wall_time_s),
            mean_path_length_m: mean(&|r| r.path_length_m.unwrap_or(0.0)),
            mean_contact_depth_mm: depth,
            mean_states_in_collision: mean(&|r| r.states_in_collision.unwrap_or(0) as f64),
        }
    }
}

/// Everything a batch of trials produces.
#[derive(Debug, Clone)]
pub struct TrialBatch {
    pub records: Vec<TrialRecord>,
    pub summary: TrialSummary,
    /// Per-trial diagnostics, indexed like `records`.
    pub diagnostics: Vec<Vec<DiagnosticsRow>>,
}

/// Turn a planner result into a trial record.
pub fn record_from_result(scenario: &Scenario, seed: u64, result: &PlanResult) -> Result<TrialRecord> {
    let (length, depth, collisions, peaks, states) = match &result.path {
        Some(path) => {
            let profile = path_contact_profile(&scenario.chain, path, &scenario.obstacles)?;
            (
                Some(path_length(&scenario.chain, path)?),
                Some(profile.totals().iter().map(|d| d * 1e3).collect()),
                Some(profile.states_in_collision()),
                Some(profile.total_peaks()),
                Some(path.len()),
            )
        }
        None => (None, None, None, None, None),
    };
    Ok(TrialRecord {
        planner: result.planner,
        scenario: scenario.name.clone(),
        seed,
        success: result.success,
        iterations: result.iterations,
        wall_time_s: result.wall_time_s,
        path_length_m: length,
        per_link_contact_depth_mm: depth,
        states_in_collision: collisions,
        contact_peaks: peaks,
        path_states: states,
    })
}

/// Worker count: `CONTACT_PLAN_THREADS` if set and positive, else all cores.
pub fn worker_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run `n_trials` seeds `params.rng_seed + i` of one planner.
pub fn run_trials(
    scenario: &Scenario,
    planner: PlannerKind,
    params: &PlannerParams,
    costs: &CostParams,
    n_trials: usize,
) -> Result<TrialBatch> {
    if n_trials == 0 {
        return Err(Error::Config("n_trials must be >= 1".into()));
    }
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads().min(n_trials))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<(TrialRecord, Vec<DiagnosticsRow>)>> = pool.install(|| {
        (0..n_trials)
            .into_par_iter()
            .map(|i| {
                let seed = params.rng_seed.wrapping_add(i as u64);
                let p = PlannerParams {
                    rng_seed: seed,
                    ..params.clone()
                };
                let result = plan(planner, scenario, &p, costs)?;
                Ok((record_from_result(scenario, seed, &result)?, result.diagnostics))
            })
            .collect()
    });
    let mut records = Vec::with_capacity(n_trials);
    let mut diagnostics = Vec::with_capacity(n_trials);
    for o in outcomes {
        let (r, d) = o?;
        records.push(r);
        diagnostics.push(d);
    }
    let summary = TrialSummary::from_records(planner, &scenario.name, &records);
    Ok(TrialBatch {
        records,
        summary,
        diagnostics,
    })
}

/// Column order of `trials.csv`. Wall time and iteration counts are left out
/// because a run stopped by the clock is not reproducible; they live in
/// `summary.csv` and `diagnostics.csv`.
pub fn trials_header(links: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "planner",
        "scenario",
        "seed",
        "success",
        "path_states",
        "path_length_m",
        "states_in_collision",
        "contact_peaks",
    ]
    .map(String::from)
    .to_vec();
    h.extend((0..links).map(|l| format!("contact_depth_mm_link{l}")));
    h
}

/// Column order of `summary.csv` and the comparison table.
pub fn summary_header(links: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "planner",
        "scenario",
        "trials",
        "successes",
        "mean_wall_time_s",
        "mean_path_length_m",
        "mean_states_in_collision",
    ]
    .map(String::from)
    .to_vec();
    h.extend((0..links).map(|l| format!("mean_contact_depth_mm_link{l}")));
    h
}

/// Column order of `diagnostics.csv`.
pub const DIAGNOSTICS_HEADER: [&str; 7] = [
    "planner",
    "scenario",
    "seed",
    "iteration",
    "elapsed_s",
    "mean_temperature",
    "min_distance_to_goal",
];

/// Float cell: shortest round-trip representation, empty for missing values.
fn cell(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{v}"),
        _ => String::new(),
    }
}

pub fn write_trials_csv<W: Write>(out: W, links: usize, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trials_header(links))?;
    for r in records {
        let mut row = vec![
            r.planner.to_string(),
            r.scenario.clone(),
            r.seed.to_string(),
            r.success.to_string(),
            r.path_states.map_or(String::new(), |n| n.to_string()),
            cell(r.path_length_m),
            r.states_in_collision.map_or(String::new(), |n| n.to_string()),
            r.contact_peaks.map_or(String::new(), |n| n.to_string()),
        ];
        for l in 0..links {
            row.push(cell(r.per_link_contact_depth_mm.as_ref().map(|d| d[l])));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, links: usize, summaries: &[TrialSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(summary_header(links))?;
    for s in summaries {
        let mut row = vec![
            s.planner.to_string(),
            s.scenario.clone(),
            s.trials.to_string(),
            s.successes.to_string(),
            cell(s.mean_wall_time_s),
            cell(s.mean_path_length_m),
            cell(s.mean_states_in_collision),
        ];
        for l in 0..links {
            row.push(cell(s.mean_contact_depth_mm.as_ref().map(|d| d[l])));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(out: W, batch: &TrialBatch) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for (r, rows) in batch.records.iter().zip(&batch.diagnostics) {
        for d in rows {
            w.write_record([
                r.planner.to_string(),
                r.scenario.clone(),
                r.seed.to_string(),
                d.iteration.to_string(),
                cell(Some(d.elapsed_s)),
                cell(Some(d.mean_temperature)),
                cell(Some(d.min_distance_to_goal)),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Column order of a contact-profile CSV (one row per path state).
pub fn profile_header(links: usize) -> Vec<String> {
    let mut h = vec!["state".to_string()];
    h.extend((0..links).map(|l| format!("depth_mm_link{l}")));
    h
}

pub fn write_profile_csv<W: Write>(out: W, profile: &ContactProfile) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(profile_header(profile.link_count()))?;
    for m in 0..profile.state_count() {
        let mut row = vec![m.to_string()];
        row.extend(profile.depth.iter().map(|d| cell(Some(d[m] * 1e3))));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}
