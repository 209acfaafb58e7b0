//! Load a point cloud and thin it with a voxel grid before using it as obstacles.

use std::io::Cursor;

use contact_plan::world::{load_point_cloud, voxel_downsample, PointObstacleSet, VoxelParams};

fn main() -> contact_plan::Result<()> {
    // A dense 0.1 m cube sampled every centimetre.
    let mut text = String::from("# x y z\n");
    for i in 0..10 {
        for j in 0..10 {
            for k in 0..10 {
                text.push_str(&format!("{} {} {}\n", 0.5 + 0.01 * i as f64, 0.01 * j as f64, 0.2 + 0.01 * k as f64));
            }
        }
    }
    let raw = load_point_cloud(Cursor::new(text))?;
    for leaf in [0.02, 0.05, 0.1] {
        let kept = voxel_downsample(&raw, VoxelParams { leaf_size: leaf });
        println!("leaf {leaf:.2} m: {} -> {} points", raw.len(), kept.len());
    }
    let obstacles = PointObstacleSet::new(voxel_downsample(&raw, VoxelParams::default()), 0.05)?;
    println!("obstacle set: {} spheres of radius {} m", obstacles.len(), obstacles.sphere_radius());
    Ok(())
}
