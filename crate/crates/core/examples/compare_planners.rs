//! Small benchmark of every planner on one scenario, written as CSV.

use contact_plan::cli::{compare, RunConfig, ScenarioSource};
use contact_plan::planners::PlannerKind;

fn main() -> contact_plan::Result<()> {
    let scenario: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let configs: Vec<RunConfig> = PlannerKind::ALL
        .iter()
        .map(|&planner| {
            let mut c = RunConfig {
                scenario: ScenarioSource::Builtin(scenario),
                planner,
                trials: 5,
                ..Default::default()
            };
            c.planner_params.time_budget = 2.0;
            c
        })
        .collect();
    let out = std::env::temp_dir().join("contact-plan-compare");
    for s in compare(&configs, &out)? {
        let length = s.mean_path_length_m.map_or("-".into(), |l| format!("{l:.3} m"));
        println!("{:<9} {}/{} solved, mean end-effector path {length}", s.planner.to_string(), s.successes, s.trials);
    }
    println!("table written to {}", out.join("comparison.csv").display());
    Ok(())
}
