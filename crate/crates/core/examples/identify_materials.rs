//! End-to-end identification on the tiny benchmark scene: lift, fit the
//! initial velocities, fit the materials, and compare with the truth.
//!
//!     cargo run --release --example identify_materials -- [velocity_iters physics_iters [scene.json]]
//!
//! Iterations default to 30 per stage. The tiny scene (24^3 grid, 150
//! particles per object) runs in under a minute but is too coarse for the
//! moduli to be recovered well; `scenes/small.json` takes a few minutes and
//! lands within about 0.2 decades of the true moduli.

use std::path::Path;

use mpm_sysid::bench::{gen_scene, read_json, SceneConfig};
use mpm_sysid::materials::ParamKind;
use mpm_sysid::sysid::identify;

fn main() -> mpm_sysid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = args.get(2).map_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/tiny.json"), Into::into);
    let mut cfg: SceneConfig = read_json(&config)?;
    cfg.fit.velocity_iters = args.first().and_then(|a| a.parse().ok()).unwrap_or(30);
    cfg.fit.physics_iters = args.get(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let scene = gen_scene(&cfg)?;
    let fit = identify(&cfg.identify_inputs(), &scene.obs, &cfg.fit)?;

    println!(
        "velocity stage loss {:.4e} -> {:.4e}",
        fit.velocity_loss.first().copied().unwrap_or(f64::NAN),
        fit.velocity_loss.last().copied().unwrap_or(f64::NAN)
    );
    // losses are only comparable at equal horizons
    for (it, (loss, h)) in fit.loss_history.iter().zip(&fit.curriculum_history).enumerate() {
        if it == 0 || it + 1 == fit.loss_history.len() || fit.curriculum_history[it - 1] != *h {
            println!("physics iteration {it:>3}: horizon {h} frames, loss {loss:.4e}");
        }
    }
    for (k, (hat, truth)) in fit.params_hat.iter().zip(&scene.truth.params).enumerate() {
        println!("object {k} ({})", hat.family.name());
        println!("  E      {:>10.1} (initial {:>10.1}, truth {:>10.1}) Pa", hat.youngs_modulus, fit.initial_params[k].youngs_modulus, truth.youngs_modulus);
        println!("  nu     {:>10.3} (initial {:>10.3}, truth {:>10.3})", hat.poisson_ratio, fit.initial_params[k].poisson_ratio, truth.poisson_ratio);
        if hat.family.active_params().contains(&ParamKind::LogYield) {
            println!("  tau_Y  {:>10.1} (initial {:>10.1}, truth {:>10.1}) Pa", hat.yield_stress, fit.initial_params[k].yield_stress, truth.yield_stress);
        }
        let (v, t) = (fit.v0_hat[k], scene.truth.v0[k]);
        println!("  v0     ({:+.3}, {:+.3}, {:+.3}) truth ({:+.3}, {:+.3}, {:+.3}) m/s", v.x, v.y, v.z, t.x, t.y, t.z);
    }
    Ok(())
}
