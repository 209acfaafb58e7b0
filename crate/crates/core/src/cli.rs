//! Benchmark runs driven from the command line or a config file.
//!
//! Precedence is command line > config file > defaults. Every run writes a
//! `config.toml` snapshot holding all effective settings; feeding it back with
//! `--config` reproduces `trials.csv` byte for byte.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{
    path_contact_profile, run_trials, write_diagnostics_csv, write_profile_csv, write_summary_csv, write_trials_csv,
    TrialBatch, TrialSummary,
};
use crate::kinematics::SerialChain;
use crate::planners::{plan, CostParams, PlannerKind, PlannerParams};
use crate::world::{build_scenario, load_point_cloud_file, voxel_downsample, PointObstacleSet, Scenario, VoxelParams};

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.csv";
pub const SNAPSHOT_FILE: &str = "config.toml";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const PROFILE_FILE: &str = "profile.csv";

/// Where the scenario comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    /// Built-in benchmark scenario 1-4.
    Builtin(u32),
    /// TOML scenario file.
    File(PathBuf),
}

impl ScenarioSource {
    /// Digits select a built-in scenario, anything else is a path.
    pub fn parse(s: &str) -> Self {
        match s.parse::<u32>() {
            Ok(id) => ScenarioSource::Builtin(id),
            Err(_) => ScenarioSource::File(PathBuf::from(s)),
        }
    }
}

/// Everything needed to reproduce one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub planner: PlannerKind,
    pub trials: usize,
    /// Chain description replacing the benchmark arm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<PathBuf>,
    /// Point cloud (x y z per line) replacing the scenario's obstacles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obstacles: Option<PathBuf>,
    /// Voxel leaf applied to `obstacles`, metres.
    #[serde(default = "default_leaf")]
    pub voxel_leaf: f64,
    #[serde(default)]
    pub planner_params: PlannerParams,
    #[serde(default)]
    pub cost_params: CostParams,
}

fn default_leaf() -> f64 {
    VoxelParams::default().leaf_size
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: ScenarioSource::Builtin(1),
            planner: PlannerKind::CatRrt,
            trials: 1,
            chain: None,
            obstacles: None,
            voxel_leaf: default_leaf(),
            planner_params: PlannerParams::default(),
            cost_params: CostParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if !(self.voxel_leaf > 0.0) {
            return Err(Error::Config("voxel_leaf must be > 0".into()));
        }
        self.planner_params.validate()?;
        self.cost_params.apf()?;
        self.cost_params.field()?;
        Ok(())
    }

    /// Apply one `key=value` override. Keys are field names of
    /// [`PlannerParams`] or [`CostParams`].
    pub fn set_param(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected key=value, got {assignment:?}")))?;
        let (key, raw) = (key.trim(), raw.trim());
        let value = parse_value(raw);
        let planner_keys = table_of(&self.planner_params)?;
        let cost_keys = table_of(&self.cost_params)?;
        if planner_keys.contains_key(key) {
            self.planner_params = with_field(&self.planner_params, key, value, &planner_keys[key])?;
        } else if cost_keys.contains_key(key) {
            self.cost_params = with_field(&self.cost_params, key, value, &cost_keys[key])?;
        } else {
            return Err(Error::Config(format!("unknown parameter {key:?}")));
        }
        Ok(())
    }

    /// Build the scenario this config describes.
    pub fn load_scenario(&self) -> Result<Scenario> {
        let chain = self.chain.as_ref().map(SerialChain::from_file).transpose()?;
        let mut scenario = match &self.scenario {
            ScenarioSource::Builtin(id) => build_scenario(*id, chain.as_ref().unwrap_or(&SerialChain::benchmark_arm()))?,
            ScenarioSource::File(path) => Scenario::from_file(path, chain)?,
        };
        if let Some(path) = &self.obstacles {
            let raw = load_point_cloud_file(path)?;
            let points = voxel_downsample(
                &raw,
                VoxelParams {
                    leaf_size: self.voxel_leaf,
                },
            );
            scenario.obstacles = PointObstacleSet::new(points, scenario.obstacles.sphere_radius())?;
        }
        Ok(scenario)
    }
}

fn parse_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}

fn table_of<T: Serialize>(value: &T) -> Result<toml::Table> {
    toml::Table::try_from(value).map_err(|e| Error::Config(e.to_string()))
}

fn with_field<T>(current: &T, key: &str, mut value: toml::Value, existing: &toml::Value) -> Result<T>
where
    T: Serialize + for<'de> Deserialize<'de>,
{
    // Integers are accepted for float fields.
    if let (toml::Value::Float(_), toml::Value::Integer(i)) = (existing, &value) {
        value = toml::Value::Float(*i as f64);
    }
    let mut table = table_of(current)?;
    table.insert(key.to_string(), value);
    toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("parameter {key:?}: {e}")))
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub batch: TrialBatch,
    pub files: Vec<PathBuf>,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

/// Run the configured trials and write `trials.csv`, `summary.csv`,
/// `diagnostics.csv` and `config.toml` into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let scenario = config.load_scenario()?;
    let batch = run_trials(
        &scenario,
        config.planner,
        &config.planner_params,
        &config.cost_params,
        config.trials,
    )?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let links = scenario.chain.link_count();
    let files: Vec<PathBuf> = [TRIALS_FILE, SUMMARY_FILE, DIAGNOSTICS_FILE, SNAPSHOT_FILE]
        .iter()
        .map(|f| out.join(f))
        .collect();
    write_trials_csv(create(&files[0])?, links, &batch.records)?;
    write_summary_csv(create(&files[1])?, links, std::slice::from_ref(&batch.summary))?;
    write_diagnostics_csv(create(&files[2])?, &batch)?;
    fs::write(&files[3], config.to_toml()?).map_err(|e| Error::io(&files[3], e))?;
    Ok(RunOutcome { batch, files })
}

/// Run several planner configs on one scenario and write a single table,
/// one row per config, to `out/comparison.csv`.
pub fn compare(configs: &[RunConfig], out: &Path) -> Result<Vec<TrialSummary>> {
    if configs.len() < 2 {
        return Err(Error::Config("compare needs at least two configs".into()));
    }
    let first = &configs[0];
    for c in configs {
        c.validate()?;
        if c.scenario != first.scenario || c.chain != first.chain || c.obstacles != first.obstacles {
            return Err(Error::Config("compare needs every config to use the same scenario".into()));
        }
    }
    let scenario = first.load_scenario()?;
    let mut summaries = Vec::with_capacity(configs.len());
    for c in configs {
        let batch = run_trials(&scenario, c.planner, &c.planner_params, &c.cost_params, c.trials)?;
        summaries.push(batch.summary);
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let path = out.join(COMPARISON_FILE);
    write_summary_csv(create(&path)?, scenario.chain.link_count(), &summaries)?;
    Ok(summaries)
}

/// Plan once with the config's seed and write the per-state contact depth of
/// the path to `out/profile.csv`. Returns whether a path was found.
pub fn profile(config: &RunConfig, out: &Path) -> Result<bool> {
    config.validate()?;
    let scenario = config.load_scenario()?;
    let result = plan(config.planner, &scenario, &config.planner_params, &config.cost_params)?;
    let Some(path) = &result.path else {
        return Ok(false);
    };
    let prof = path_contact_profile(&scenario.chain, path, &scenario.obstacles)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_profile_csv(create(&out.join(PROFILE_FILE))?, &prof)?;
    Ok(true)
}
