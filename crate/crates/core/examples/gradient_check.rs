//! Dual-number gradients of a tracking loss against central differences,
//! for every active entry of one object of each family.
//!
//!     cargo run --release --example gradient_check

use mpm_sysid::materials::{MaterialFamily, MaterialParams};
use mpm_sysid::mpm::{rollout, GridSpec, Particle, SimConfig, WorldState};
use mpm_sysid::sensitivity::{
    build_world, finite_difference, loss_and_grad, relative_error, ParamVector, Stage, TrackingObjective, FD_STEP,
};
use mpm_sysid::tensor3::Vec3;

fn world(family: MaterialFamily, center_z: f64) -> mpm_sysid::Result<WorldState> {
    let mut cfg = SimConfig::default().with_timing(24.0, 100);
    cfg.grid = GridSpec { dims: [24, 24, 24], dx: 0.01, origin: Vec3::ZERO };
    cfg.floor_height = 0.04;
    let spacing = 0.0051;
    let vol: f64 = spacing * spacing * spacing;
    let mut parts = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let x = Vec3::new(0.12, 0.12, center_z) + Vec3::new(i as f64 - 1.5, j as f64 - 1.5, k as f64 - 1.5).scale_f(spacing);
                parts.push(Particle::at_rest(x, Vec3::ZERO, 1000.0 * vol, vol, 0));
            }
        }
    }
    let mut p = MaterialParams::new(family);
    p.youngs_modulus = 2e4;
    p.bulk_modulus = 2e4;
    WorldState::new(cfg, vec![parts], vec![p])
}

fn main() -> mpm_sysid::Result<()> {
    for family in [MaterialFamily::Elastic, MaterialFamily::Plasticine, MaterialFamily::Sand, MaterialFamily::NewtonianFluid] {
        println!("{}", family.name());
        // velocities on an airborne block, materials on one hitting the floor
        let setups = [(Stage::Velocity, 0.14, Vec3::new(0.3, 0.05, 0.1)), (Stage::Physics, 0.065, Vec3::new(0.3, 0.05, -0.4))];
        for (stage, z, v0) in setups {
            let w = world(family, z)?;
            let truth = ParamVector::encode(&w.params, &[v0], Stage::Physics)?;
            let objective = TrackingObjective { targets: rollout(&mut build_world::<f64>(&w, &truth)?, 2, 1)?.positions };
            let mut pv = truth.with_stage(stage);
            // start away from the targets so the gradient is not zero
            let start: Vec<f64> = pv.active_values().iter().map(|v| v + 0.05).collect();
            pv.set_active_values(&start);
            let report = loss_and_grad(&w, &objective, &pv)?;
            let fd = finite_difference(&w, &objective, &pv, FD_STEP)?;
            let scale = report.grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            for ((i, g), f) in pv.active_indices().into_iter().zip(&report.grad).zip(&fd) {
                let err = relative_error(*g, *f, 1e-6 * scale);
                println!("  {:<40} dual {g:+.6e}  fd {f:+.6e}  rel {err:.1e}", format!("{:?}", pv.slots[i]));
            }
        }
    }
    Ok(())
}
