//! Repeated rejections heat a link until a high-cost region becomes admissible.

use contact_plan::costs::CostVector;
use contact_plan::planners::{cat_rrt_transition_test, TransitionParams};

fn main() -> contact_plan::Result<()> {
    let params = TransitionParams {
        t_min: -1.0,
        omega: 0.01,
        gamma: 0.125,
    };
    // Link 0 is cheap, link 1 sits in a region costing 0.8.
    let costs = CostVector(vec![-0.2, 0.8]);
    let mut t = vec![0.0, 0.0];
    for attempt in 1.. {
        let o = cat_rrt_transition_test(&costs, &t, &params)?;
        println!("attempt {attempt}: accepted={} temperatures={:.3?}", o.accepted, o.temperature);
        t = o.temperature;
        if o.accepted {
            break;
        }
    }
    Ok(())
}
