use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::mpm::rollout;
use crate::sensitivity::{finite_difference, loss_and_grad, relative_error, IdObjective, ParamVector, Stage, FD_STEP};
use crate::sysid::{centroid_velocity, identify, lift_scene, swap_materials, world_with, FitResult, Granularity};
use crate::tensor3::Vec3;

use super::eval::eval;
use super::io::{read_config, read_json, read_observations, write_json, write_scene};
use super::msv::TrajectoryFile;
use super::scene::gen_scene;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "MOSIV_THREADS";

#[derive(Parser, Debug)]
#[command(name = "mpm-sysid", about = "Synthetic multi-object material identification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossKind {
    Object,
    Scene,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scene directory from a scene config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Lift a scene's first frame and simulate it with the given parameters.
    Sim {
        #[arg(long)]
        scene: PathBuf,
        /// Fit result or truth file carrying parameters and velocities.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        frames: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Identify per-object materials from a scene's observations.
    Fit {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, value_enum, default_value = "object")]
        loss: LossKind,
        #[arg(long, value_enum, default_value = "on")]
        cd: Switch,
        #[arg(long, value_enum, default_value = "on")]
        alpha: Switch,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        velocity_iters: Option<usize>,
        #[arg(long)]
        physics_iters: Option<usize>,
    },
    /// Compare a predicted trajectory with ground truth.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        horizon: usize,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Re-simulate a fitted scene with permuted materials.
    Swap {
        #[arg(long)]
        fit: PathBuf,
        /// Comma-separated permutation, e.g. "1,0".
        #[arg(long)]
        perm: String,
        #[arg(long)]
        out: PathBuf,
        /// Scene directory; defaults to the one recorded in the fit.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// Compare dual-number gradients with central differences on a scene.
    Gradcheck {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 2)]
        frames: usize,
    },
}

/// Parameters and initial velocities; reads truth files and fit results.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsFile {
    #[serde(alias = "params_hat")]
    pub params: Vec<MaterialParams>,
    #[serde(alias = "v0_hat")]
    pub v0: Vec<Vec3>,
}

fn threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| Error::config(format!("{THREADS_ENV}={s:?} is not a positive integer"))),
        Err(_) => Ok(1),
    }
}

fn lifted_world(scene: &Path, params: &[MaterialParams], v0: &[Vec3]) -> Result<crate::mpm::WorldState> {
    let cfg = read_config(scene)?;
    let obs = read_observations(scene, &cfg, true)?.truncated(1);
    let (world, _) = lift_scene(&cfg.identify_inputs(), &obs)?;
    world_with(&world, params, v0)
}

fn parse_perm(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| Error::config(format!("bad permutation entry {t:?}"))))
        .collect()
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Gen { config, out } => {
            let cfg = read_json(&config)?;
            let scene = gen_scene(&cfg)?;
            write_scene(&out, &scene)?;
            eprintln!("wrote {} ({} frames, {} objects)", out.display(), scene.gt.len(), scene.truth.params.len());
        }
        Command::Sim { scene, params, frames, out } => {
            let p: ParamsFile = read_json(&params)?;
            let mut world = lifted_world(&scene, &p.params, &p.v0)?;
            TrajectoryFile::from_trajectory(&rollout(&mut world, frames, 1)?).write(&out)?;
        }
        Command::Fit { scene, loss, cd, alpha, out, velocity_iters, physics_iters } => {
            let cfg = read_config(&scene)?;
            let mut fit_cfg = cfg.fit.clone();
            fit_cfg.loss.granularity = match loss {
                LossKind::Object => Granularity::ObjectWise,
                LossKind::Scene => Granularity::SceneWise,
            };
            fit_cfg.loss.use_cd = matches!(cd, Switch::On);
            fit_cfg.loss.use_alpha = matches!(alpha, Switch::On);
            fit_cfg.velocity_iters = velocity_iters.unwrap_or(fit_cfg.velocity_iters);
            fit_cfg.physics_iters = physics_iters.unwrap_or(fit_cfg.physics_iters);
            let obs = read_observations(&scene, &cfg, true)?;
            let mut fit = identify(&cfg.identify_inputs(), &obs, &fit_cfg)?;
            fit.scene = Some(scene.clone());
            write_json(&out, &fit)?;
            eprintln!(
                "fit done in {:.1} s, final loss {:.4e}",
                fit.wall_time.as_secs_f64(),
                fit.loss_history.last().copied().unwrap_or(f64::NAN)
            );
        }
        Command::Eval { pred, gt, horizon, format } => {
            let report = eval(&TrajectoryFile::read(&pred)?, &TrajectoryFile::read(&gt)?, horizon)?;
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
                Format::Csv => print!("{}", report.to_csv()),
            }
        }
        Command::Swap { fit, perm, out, scene } => {
            let mut result: FitResult = read_json(&fit)?;
            let scene = scene.or_else(|| result.scene.clone()).ok_or_else(|| Error::config("fit records no scene; pass --scene"))?;
            let frames = read_config(&scene)?.frames;
            let fitted = lifted_world(&scene, &result.params_hat, &result.v0_hat)?;
            result.world = Some(fitted.clone());
            let mut swapped = swap_materials(&result, &parse_perm(&perm)?)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            let params = ParamsFile { params: swapped.params.clone(), v0: result.v0_hat.clone() };
            TrajectoryFile::from_trajectory(&rollout(&mut swapped, frames, 1)?).write(&out.join("swapped.msv"))?;
            TrajectoryFile::from_trajectory(&rollout(&mut fitted.clone(), frames, 1)?).write(&out.join("fitted.msv"))?;
            write_json(&out.join("params.json"), &params)?;
        }
        Command::Gradcheck { scene, frames } => {
            let cfg = read_config(&scene)?;
            let obs = read_observations(&scene, &cfg, true)?.truncated(frames.max(2));
            let (world, shells) = lift_scene(&cfg.identify_inputs(), &obs)?;
            let objective = IdObjective { obs: &obs, shells: &shells, cfg: cfg.fit.loss, horizon: obs.num_frames() };
            let v0 = centroid_velocity(&obs)?;
            let mut worst: f64 = 0.0;
            for stage in [Stage::Velocity, Stage::Physics] {
                let pv = ParamVector::encode(&world.params, &v0, stage)?;
                let analytic = loss_and_grad(&world, &objective, &pv)?.grad;
                let fd = finite_difference(&world, &objective, &pv, FD_STEP)?;
                let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
                for ((i, a), f) in pv.active_indices().into_iter().zip(&analytic).zip(&fd) {
                    let err = relative_error(*a, *f, 1e-6 * scale);
                    worst = worst.max(err);
                    println!("{:?} dual {a:+.6e} fd {f:+.6e} rel {err:.2e}", pv.slots[i]);
                }
            }
            println!("worst relative error {worst:.2e}");
            if worst >= 1e-3 {
                return Err(Error::config(format!("gradient check failed: worst relative error {worst:.2e}")));
            }
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 on usage or validation errors, 2 on numerical divergence.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let n = match threads() {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    // a pool may already exist when called repeatedly in one process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_divergence() {
                2
            } else {
                1
            }
        }
    }
}
