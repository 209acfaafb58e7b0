use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use contact_plan::cli::{compare, profile, run, RunConfig, ScenarioSource};
use contact_plan::planners::PlannerKind;
use contact_plan::Result;

#[derive(Parser)]
#[command(name = "contact-plan", version, about = "Contact-admissible RRT planners and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials of one planner and write trials, summary, diagnostics and a config snapshot.
    Run {
        #[command(flatten)]
        common: Common,
        /// rrt, cat_rrt, t_rrt, rrt_star or vf_rrt.
        #[arg(long)]
        planner: Option<String>,
    },
    /// Run several planners on one scenario and write a single comparison table.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated planner names.
        #[arg(long, value_delimiter = ',', required = true)]
        planners: Vec<String>,
    },
    /// Plan once and write the per-state contact depth of the path.
    Profile {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        planner: Option<String>,
    },
}

#[derive(Args)]
struct Common {
    /// Built-in scenario id (1-4) or a scenario TOML file.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Seconds per trial.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Base seed; trial i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Chain description TOML.
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Point cloud with one `x y z` per line.
    #[arg(long)]
    obstacles: Option<PathBuf>,
    /// Start from a saved config snapshot.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, planner: Option<&str>) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(p) = planner {
            c.planner = p.parse::<PlannerKind>()?;
        }
        if let Some(s) = &self.scenario {
            c.scenario = ScenarioSource::parse(s);
        }
        if let Some(n) = self.trials {
            c.trials = n;
        }
        if let Some(t) = self.time_budget {
            c.planner_params.time_budget = t;
        }
        if let Some(s) = self.seed {
            c.planner_params.rng_seed = s;
        }
        if self.chain.is_some() {
            c.chain = self.chain.clone();
        }
        if self.obstacles.is_some() {
            c.obstacles = self.obstacles.clone();
        }
        for p in &self.params {
            c.set_param(p)?;
        }
        c.validate()?;
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { common, planner } => {
            let config = common.resolve(planner.as_deref())?;
            let outcome = run(&config, &common.out)?;
            let s = &outcome.batch.summary;
            println!("{} on {}: {}/{} successful", s.planner, s.scenario, s.successes, s.trials);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare { common, planners } => {
            let configs = planners
                .iter()
                .map(|p| common.resolve(Some(p)))
                .collect::<Result<Vec<_>>>()?;
            for s in compare(&configs, &common.out)? {
                println!("{} on {}: {}/{} successful", s.planner, s.scenario, s.successes, s.trials);
            }
        }
        Command::Profile { common, planner } => {
            let config = common.resolve(planner.as_deref())?;
            if profile(&config, &common.out)? {
                println!("wrote {}", common.out.join(contact_plan::cli::PROFILE_FILE).display());
            } else {
                println!("no path found");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
