//! Forward kinematics, control points and a link Jacobian of the benchmark arm.

use contact_plan::kinematics::{pseudo_inverse, JointConfig, SerialChain};

fn main() -> contact_plan::Result<()> {
    let arm = SerialChain::benchmark_arm();
    let q = JointConfig(vec![0.3, -0.6, 0.9, 0.4]);

    for (l, pose) in arm.forward_kinematics(&q)?.iter().enumerate() {
        let t = pose.translation.vector;
        println!("link {l} origin: ({:.3}, {:.3}, {:.3})", t.x, t.y, t.z);
    }
    let ee = arm.end_effector(&q)?;
    println!("end effector: ({:.3}, {:.3}, {:.3})", ee.x, ee.y, ee.z);

    let cps = arm.control_points(&q)?;
    let tip = cps.per_link[3][2];
    let jac = arm.link_jacobian(&q, 3, &tip)?;
    println!("jacobian of the tip:{jac:.3}");
    println!("pseudo-inverse:{:.3}", pseudo_inverse(&jac));
    Ok(())
}
