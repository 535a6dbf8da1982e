use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{
    bounds, enforce_disjoint, hull_interior, lattice_in, refine_occupancy_in, sample_spacing, to_particles, LiftConfig,
    OccupancyGrid,
};
use crate::materials::MaterialParams;
use crate::mpm::{advance_frames, SimConfig, WorldState};
use crate::observe::{gather, mean_spacing, surface_extract, ObservationSet};
use crate::sensitivity::{build_world, loss_and_grad, GradReport, IdObjective, ParamVector, Slot, Stage};
use crate::tensor3::Vec3;

use super::loss::{LossConfig, Shells};
use super::optim::{AdamState, Curriculum, CurriculumTracker};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub loss: LossConfig,
    pub velocity_iters: usize,
    pub physics_iters: usize,
    pub velocity_lr: f64,
    pub physics_lr: f64,
    /// Frames (including frame 0) supervising the velocity stage.
    pub velocity_horizon: usize,
    pub curriculum: Curriculum,
    /// Physics-stage iterations between state re-synchronizations; 0
    /// disables them.
    pub resync_every: usize,
    pub max_backtracks: usize,
    /// Observed frames available to the fit; `None` uses all of them.
    pub fit_frames: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            loss: LossConfig::default(),
            velocity_iters: 80,
            physics_iters: 200,
            velocity_lr: 0.02,
            physics_lr: 0.01,
            velocity_horizon: 5,
            curriculum: Curriculum::default(),
            resync_every: 50,
            max_backtracks: 5,
            fit_frames: None,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.curriculum.validate()?;
        if self.velocity_horizon < 2 {
            return Err(Error::config("velocity horizon needs at least 2 frames"));
        }
        if !(self.velocity_lr > 0.0 && self.physics_lr > 0.0) {
            return Err(Error::config("learning rates must be positive"));
        }
        Ok(())
    }

    fn observations(&self, obs: &ObservationSet) -> ObservationSet {
        match self.fit_frames {
            Some(n) => obs.truncated(n),
            None => obs.clone(),
        }
    }
}

/// Outcome of an identification run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub params_hat: Vec<MaterialParams>,
    pub v0_hat: Vec<Vec3>,
    /// Physics-stage starting guess.
    pub initial_params: Vec<MaterialParams>,
    /// Velocity-stage starting guess (centroid finite difference).
    pub initial_v0: Vec<Vec3>,
    pub velocity_loss: Vec<f64>,
    pub loss_history: Vec<f64>,
    /// Horizon (frames) of every physics iteration.
    pub curriculum_history: Vec<usize>,
    pub resync_iterations: Vec<usize>,
    pub config: FitConfig,
    pub seed: u64,
    /// Scene directory the observations came from, when known.
    #[serde(default)]
    pub scene: Option<std::path::PathBuf>,
    /// Excluded from the JSON so repeated runs write identical files.
    #[serde(skip)]
    pub wall_time: Duration,
    /// Lifted world carrying the recovered parameters and velocities.
    #[serde(skip)]
    pub world: Option<WorldState>,
    #[serde(skip)]
    pub shells: Shells,
}

pub fn centroid(points: &[Vec3]) -> Vec3 {
    let n = points.len().max(1) as f64;
    points.iter().fold(Vec3::ZERO, |acc, p| acc + *p).scale_f(1.0 / n)
}

/// Per-object centroid displacement between observed frames 0 and 1, as a
/// velocity.
pub fn centroid_velocity(obs: &ObservationSet) -> Result<Vec<Vec3>> {
    if obs.num_frames() < 2 {
        return Err(Error::FrameMismatch { needed: 2, available: obs.num_frames() });
    }
    Ok((0..obs.num_objects())
        .map(|k| (centroid(&obs.surfaces[1][k]) - centroid(&obs.surfaces[0][k])).scale_f(obs.frame_rate))
        .collect())
}

/// Mass-weighted mean velocity of every object.
pub fn object_velocities(world: &WorldState) -> Vec<Vec3> {
    world
        .particles
        .iter()
        .map(|ps| {
            let m: f64 = ps.iter().map(|p| p.mass).sum();
            ps.iter().fold(Vec3::ZERO, |acc, p| acc + p.v.scale_f(p.mass)).scale_f(1.0 / m.max(f64::MIN_POSITIVE))
        })
        .collect()
}

struct Problem<'a> {
    world0: &'a WorldState,
    shells: &'a [Vec<usize>],
    obs: &'a ObservationSet,
    loss: LossConfig,
}

impl Problem<'_> {
    fn eval(&self, pv: &ParamVector, horizon: usize) -> Result<GradReport> {
        let objective = IdObjective { obs: self.obs, shells: self.shells, cfg: self.loss, horizon };
        loss_and_grad(self.world0, &objective, pv)
    }

    /// Adam step from `pv`, halving the increment while the candidate
    /// diverges.
    fn step(
        &self,
        pv: &ParamVector,
        report: &GradReport,
        adam: &mut AdamState,
        horizon: usize,
        max_backtracks: usize,
    ) -> Result<(ParamVector, GradReport)> {
        let delta = adam.step(&report.grad)?;
        let x = pv.active_values();
        let mut scale = 1.0;
        for _ in 0..=max_backtracks {
            let mut cand = pv.clone();
            cand.set_active_values(&x.iter().zip(&delta).map(|(a, d)| a + d * scale).collect::<Vec<_>>());
            match self.eval(&cand, horizon) {
                Ok(r) => return Ok((cand, r)),
                Err(Error::NonFiniteLoss) => scale *= 0.5,
                Err(e) => return Err(e),
            }
        }
        Err(Error::DivergedOptimization(format!("no finite loss after {max_backtracks} halvings")))
    }
}

fn first_eval(problem: &Problem, pv: &ParamVector, horizon: usize) -> Result<GradReport> {
    problem.eval(pv, horizon).map_err(|e| match e {
        Error::NonFiniteLoss => Error::DivergedOptimization("initial guess does not simulate".into()),
        e => e,
    })
}

/// Velocity stage: Adam on the initial velocities over the first
/// `velocity_horizon` frames, starting from the centroid finite difference.
/// Returns the best velocities seen and the loss curve.
pub fn fit_velocity(
    world0: &WorldState,
    shells: &[Vec<usize>],
    obs: &ObservationSet,
    cfg: &FitConfig,
) -> Result<(Vec<Vec3>, Vec<f64>)> {
    cfg.validate()?;
    let obs = cfg.observations(obs);
    if obs.num_frames() < 3 {
        return Err(Error::FrameMismatch { needed: 3, available: obs.num_frames() });
    }
    cfg.loss.check_observations(&obs)?;
    let problem = Problem { world0, shells, obs: &obs, loss: cfg.loss };
    let horizon = cfg.velocity_horizon.min(obs.num_frames());
    let mut pv = ParamVector::encode(&world0.params, &centroid_velocity(&obs)?, Stage::Velocity)?;
    let mut adam = AdamState::new(pv.num_active(), cfg.velocity_lr);
    let mut report = first_eval(&problem, &pv, horizon)?;
    let mut best = (report.loss, pv.clone());
    let mut curve = Vec::with_capacity(cfg.velocity_iters + 1);
    for _ in 0..cfg.velocity_iters {
        curve.push(report.loss);
        (pv, report) = problem.step(&pv, &report, &mut adam, horizon, cfg.max_backtracks)?;
        if report.loss < best.0 {
            best = (report.loss, pv.clone());
        }
    }
    curve.push(report.loss);
    let (_, v0) = best.1.decode(&world0.params)?;
    Ok((v0, curve))
}

/// Re-synchronization: corrects each object's initial velocity by the gap
/// between observed and simulated surface-centroid displacement over the
/// first frame.
fn resync(problem: &Problem, pv: &mut ParamVector) -> Result<()> {
    let mut world = build_world::<f64>(problem.world0, pv)?;
    let before: Vec<Vec3> = world.particles.iter().zip(problem.shells).map(|(ps, s)| centroid(&gather(&shell_x(ps), s))).collect();
    advance_frames(&mut world, 1).map_err(|e| if e.is_divergence() { Error::NonFiniteLoss } else { e })?;
    let fps = problem.obs.frame_rate;
    for (k, ps) in world.particles.iter().enumerate() {
        let after = centroid(&gather(&shell_x(ps), &problem.shells[k]));
        let observed = centroid(&problem.obs.surfaces[1][k]) - centroid(&problem.obs.surfaces[0][k]);
        let corr = (observed - (after - before[k])).scale_f(fps);
        for (slot, e) in pv.slots.iter().zip(pv.entries.iter_mut()) {
            if let Slot::Velocity { object, axis } = *slot {
                if object == k {
                    *e += corr.get(axis);
                }
            }
        }
    }
    Ok(())
}

fn shell_x(ps: &[crate::mpm::Particle]) -> Vec<Vec3> {
    ps.iter().map(|p| p.x).collect()
}

/// Physics stage: Adam on the material entries under the horizon
/// curriculum, with periodic re-synchronization of the initial velocities.
/// `world0` carries the initial material guess; `v0` the fitted velocities.
pub fn fit_params(
    world0: &WorldState,
    shells: &[Vec<usize>],
    obs: &ObservationSet,
    v0: &[Vec3],
    cfg: &FitConfig,
) -> Result<FitResult> {
    let started = Instant::now();
    cfg.validate()?;
    let obs = cfg.observations(obs);
    if obs.num_frames() < 2 {
        return Err(Error::FrameMismatch { needed: 2, available: obs.num_frames() });
    }
    cfg.loss.check_observations(&obs)?;
    let problem = Problem { world0, shells, obs: &obs, loss: cfg.loss };
    let mut tracker = CurriculumTracker::new(cfg.curriculum, obs.num_frames());
    let mut pv = ParamVector::encode(&world0.params, v0, Stage::Physics)?;
    let mut adam = AdamState::new(pv.num_active(), cfg.physics_lr);
    let mut report = first_eval(&problem, &pv, tracker.horizon)?;
    let mut best = (report.loss, pv.clone());
    let mut history = Vec::with_capacity(cfg.physics_iters + 1);
    let mut horizons = Vec::with_capacity(cfg.physics_iters + 1);
    let mut resyncs = Vec::new();
    for it in 0..cfg.physics_iters {
        if it > 0 && cfg.resync_every > 0 && it % cfg.resync_every == 0 {
            resync(&problem, &mut pv)?;
            report = problem.eval(&pv, tracker.horizon)?;
            best = (report.loss, pv.clone());
            resyncs.push(it);
        }
        history.push(report.loss);
        horizons.push(tracker.horizon);
        if tracker.record(report.loss) {
            let grad_report = report.clone();
            report = problem.eval(&pv, tracker.horizon)?;
            best = (report.loss, pv.clone());
            // the step still follows the gradient measured at this iteration
            report.grad = grad_report.grad;
        }
        (pv, report) = problem.step(&pv, &report, &mut adam, tracker.horizon, cfg.max_backtracks)?;
        if report.loss < best.0 {
            best = (report.loss, pv.clone());
        }
    }
    history.push(report.loss);
    horizons.push(tracker.horizon);
    let (params_hat, v0_hat) = best.1.decode(&world0.params)?;
    let world = build_world::<f64>(world0, &best.1)?;
    Ok(FitResult {
        params_hat,
        v0_hat,
        initial_params: world0.params.clone(),
        initial_v0: v0.to_vec(),
        velocity_loss: Vec::new(),
        loss_history: history,
        curriculum_history: horizons,
        resync_iterations: resyncs,
        config: cfg.clone(),
        seed: 0,
        scene: None,
        wall_time: started.elapsed(),
        world: Some(world),
        shells: shells.to_vec(),
    })
}

/// Everything the identification needs besides the observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifyInputs {
    pub sim: SimConfig,
    /// Family, density and starting values of every object.
    pub initial_params: Vec<MaterialParams>,
    pub lift: LiftConfig,
    /// Silhouette erosion applied before the hull test, px.
    pub erode_px: f64,
    pub seed: u64,
}

/// Lifts frame-0 observations to particles: visual hull per object on a
/// shared lattice, occupancy refinement, overlap removal and sampling.
/// Returns the world (objects at rest) and each object's surface shell.
pub fn lift_scene(inputs: &IdentifyInputs, obs: &ObservationSet) -> Result<(WorldState, Shells)> {
    obs.validate()?;
    if !obs.has_masks() {
        return Err(Error::config("lifting needs frame-0 silhouettes"));
    }
    let k = obs.num_objects();
    if inputs.initial_params.len() != k {
        return Err(Error::ShapeMismatch(format!("{} materials for {k} observed objects", inputs.initial_params.len())));
    }
    let surfaces = &obs.surfaces[0];
    let all: Vec<Vec3> = surfaces.iter().flatten().copied().collect();
    let (lo, hi) = bounds(&all).ok_or(Error::EmptyInput)?;
    let base = OccupancyGrid::frame(lo, hi, &inputs.lift);
    let fine = (0..inputs.lift.levels).fold(base.clone(), |g, _| g.upsampled());
    let mut grids = Vec::with_capacity(k);
    for (obj, surface) in surfaces.iter().enumerate() {
        let (slo, shi) = bounds(surface).ok_or(Error::EmptyInput)?;
        let pad = Vec3::splat(0.5 * sample_spacing(surface));
        let masks: Vec<_> = obs.masks[0].iter().map(|views| views[obj].clone()).collect();
        let rough = hull_interior(&lattice_in(&fine, slo - pad, shi + pad), &masks, &obs.cameras, inputs.erode_px)?;
        grids.push(refine_occupancy_in(&rough, base.clone(), &inputs.lift)?);
    }
    let grids = enforce_disjoint(&grids, surfaces)?;
    let mut particles = Vec::with_capacity(k);
    for (obj, g) in grids.iter().enumerate() {
        particles.push(to_particles(g, &inputs.initial_params[obj], &inputs.lift, obj, inputs.seed)?);
    }
    let world = WorldState::new(inputs.sim.clone(), particles, inputs.initial_params.clone())?;
    let shells = shells_of(&world);
    Ok((world, shells))
}

/// Surface shell of every object at shell size twice the mean particle
/// spacing.
pub fn shells_of(world: &WorldState) -> Shells {
    world
        .particles
        .iter()
        .map(|ps| {
            let spacing = mean_spacing(&ps.iter().map(|p| p.volume0).collect::<Vec<_>>());
            surface_extract(&shell_x(ps), 2.0 * spacing)
        })
        .collect()
}

/// Lifting, then the velocity stage, then the physics stage.
pub fn identify(inputs: &IdentifyInputs, obs: &ObservationSet, cfg: &FitConfig) -> Result<FitResult> {
    let started = Instant::now();
    cfg.validate()?;
    cfg.loss.check_observations(obs)?;
    let (world0, shells) = lift_scene(inputs, obs)?;
    let (v0, velocity_loss) = fit_velocity(&world0, &shells, obs, cfg)?;
    let mut fit = fit_params(&world0, &shells, obs, &v0, cfg)?;
    fit.initial_v0 = centroid_velocity(&cfg.observations(obs))?;
    fit.velocity_loss = velocity_loss;
    fit.seed = inputs.seed;
    fit.wall_time = started.elapsed();
    Ok(fit)
}

/// The fitted world with object `k` carrying `params_hat[perm[k]]`;
/// geometry and velocities are kept and masses follow the new density.
pub fn swap_materials(fit: &FitResult, perm: &[usize]) -> Result<WorldState> {
    let k = fit.params_hat.len();
    let mut seen = vec![false; k];
    if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::InvalidPermutation(k));
    }
    let mut world = fit.world.clone().ok_or_else(|| Error::config("fit result carries no world"))?;
    for (obj, &src) in perm.iter().enumerate() {
        let params = fit.params_hat[src];
        for p in &mut world.particles[obj] {
            p.mass = params.density * p.volume0;
        }
        world.params[obj] = params;
    }
    world.step_index = 0;
    Ok(world)
}

/// Plain world with the given materials and uniform initial velocities.
pub fn world_with(world0: &WorldState, params: &[MaterialParams], v0: &[Vec3]) -> Result<WorldState> {
    let mut w = world0.clone();
    w.params = params.to_vec();
    for (ps, v) in w.particles.iter_mut().zip(v0) {
        for p in ps {
            p.v = *v;
        }
    }
    Ok(w)
}
