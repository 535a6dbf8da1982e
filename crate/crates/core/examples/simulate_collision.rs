//! Two blocks, one elastic and one plasticine, thrown at each other above
//! the floor. Prints per-frame centroids and the gap between the objects,
//! and writes the trajectory when given a path.
//!
//!     cargo run --release --example simulate_collision -- [out.msv]

use mpm_sysid::bench::TrajectoryFile;
use mpm_sysid::materials::{MaterialFamily, MaterialParams};
use mpm_sysid::mpm::{rollout, GridSpec, Particle, SimConfig, WorldState};
use mpm_sysid::sysid::centroid;
use mpm_sysid::tensor3::Vec3;

fn block(center: Vec3, n: usize, spacing: f64, v: Vec3, object: usize, density: f64) -> Vec<Particle> {
    let vol = spacing.powi(3);
    let half = (n as f64 - 1.0) * 0.5;
    let mut out = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let off = Vec3::new(i as f64 - half, j as f64 - half, k as f64 - half).scale_f(spacing);
                out.push(Particle::at_rest(center + off, v, density * vol, vol, object));
            }
        }
    }
    out
}

fn main() -> mpm_sysid::Result<()> {
    let mut cfg = SimConfig::default().with_timing(24.0, 250);
    cfg.grid = GridSpec { dims: [40, 40, 40], dx: 0.01, origin: Vec3::ZERO };
    cfg.floor_height = 0.04;

    let mut jelly = MaterialParams::new(MaterialFamily::Elastic);
    jelly.youngs_modulus = 2e4;
    let mut clay = MaterialParams::new(MaterialFamily::Plasticine);
    clay.youngs_modulus = 2e4;
    clay.yield_stress = 400.0;

    let particles = vec![
        block(Vec3::new(0.12, 0.2, 0.14), 8, 0.005, Vec3::new(1.2, 0.0, 0.3), 0, jelly.density),
        block(Vec3::new(0.28, 0.2, 0.14), 8, 0.005, Vec3::new(-1.2, 0.0, 0.3), 1, clay.density),
    ];
    if let Some(warning) = cfg.cfl_warning(&[jelly, clay]) {
        eprintln!("warning: {warning}");
    }
    let mut world = WorldState::new(cfg, particles, vec![jelly, clay])?;
    let traj = rollout(&mut world, 24, 1)?;

    println!("frame  elastic centroid            plasticine centroid         gap (m)");
    for (f, objs) in traj.positions.iter().enumerate() {
        let (a, b) = (centroid(&objs[0]), centroid(&objs[1]));
        let gap = objs[0].iter().map(|p| objs[1].iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min)).fold(f64::INFINITY, f64::min);
        println!("{f:>5}  ({:.3}, {:.3}, {:.3})  ({:.3}, {:.3}, {:.3})  {gap:.4}", a.x, a.y, a.z, b.x, b.y, b.z);
    }
    if let Some(path) = std::env::args().nth(1) {
        TrajectoryFile::from_trajectory(&traj).write(path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
