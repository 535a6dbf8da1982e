//! Swaps the materials of the two objects of a scene and measures how far
//! the re-simulated trajectory departs from the original. Uses the true
//! parameters on the lifted geometry, so no fit is needed.
//!
//!     cargo run --release --example novel_interaction

use std::path::Path;

use mpm_sysid::bench::{eval_with, gen_scene, read_json, SceneConfig, TrajectoryFile};
use mpm_sysid::mpm::rollout;
use mpm_sysid::sysid::{lift_scene, world_with};

fn main() -> mpm_sysid::Result<()> {
    let cfg: SceneConfig = read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/small.json"))?;
    let scene = gen_scene(&cfg)?;
    let (lifted, _) = lift_scene(&cfg.identify_inputs(), &scene.obs.truncated(1))?;
    let truth = &scene.truth;

    let mut original = world_with(&lifted, &truth.params, &truth.v0)?;
    for (ps, params) in original.particles.iter_mut().zip(&original.params) {
        for p in ps {
            p.mass = params.density * p.volume0;
        }
    }
    // geometry and velocities stay; each object takes the other's material
    let mut swapped = world_with(&lifted, &[truth.params[1], truth.params[0]], &truth.v0)?;
    for (ps, params) in swapped.particles.iter_mut().zip(&swapped.params) {
        for p in ps {
            p.mass = params.density * p.volume0;
        }
    }

    let run = |w: &mpm_sysid::mpm::WorldState| -> mpm_sysid::Result<TrajectoryFile> {
        Ok(TrajectoryFile::from_trajectory(&rollout(&mut w.clone(), cfg.frames, 1)?))
    };
    let (a, b) = (run(&original)?, run(&swapped)?);
    let report = eval_with(&b, &a, cfg.frames, 0)?;
    println!("frame  object CD (x1e3 mm^2) swapped vs original");
    for f in &report.frames {
        let cds: Vec<String> = f.objects.iter().map(|m| format!("{:.4}", m.cd)).collect();
        println!("{:>5}  {}", f.frame, cds.join("  "));
    }
    println!("mean {:.4}", report.observable.cd);
    Ok(())
}
