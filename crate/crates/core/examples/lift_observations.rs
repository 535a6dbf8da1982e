//! Generates a small scene and lifts its first frame back to particles
//! from silhouettes alone, then compares the lifted shells with the
//! observed surfaces.
//!
//!     cargo run --release --example lift_observations

use std::path::Path;

use mpm_sysid::bench::{gen_scene, read_json, SceneConfig};
use mpm_sysid::observe::chamfer;
use mpm_sysid::sysid::lift_scene;

fn main() -> mpm_sysid::Result<()> {
    let cfg: SceneConfig = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/small.json"))?;
    let scene = gen_scene(&cfg)?;
    let obs = scene.obs.truncated(1);
    let (world, shells) = lift_scene(&cfg.identify_inputs(), &obs)?;
    for (k, ps) in world.particles.iter().enumerate() {
        let lifted: Vec<_> = shells[k].iter().map(|&i| ps[i].x).collect();
        let volume: f64 = ps.iter().map(|p| p.volume0).sum();
        let truth_volume: f64 = scene.world0.particles[k].iter().map(|p| p.volume0).sum();
        println!(
            "object {k} ({}): {} particles, volume {:.3e} m^3 (truth {:.3e}), shell CD {:.4} x1e3 mm^2",
            world.params[k].family.name(),
            ps.len(),
            volume,
            truth_volume,
            chamfer(&lifted, &obs.surfaces[0][k])?,
        );
    }
    Ok(())
}
