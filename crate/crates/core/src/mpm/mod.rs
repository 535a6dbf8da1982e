//! Differentiable MLS/APIC material point method with one background grid per
//! object and node-level contact between them.
//!
//! Everything is generic over [`Real`], so the same stepper runs on plain
//! `f64` or on dual numbers carrying parameter tangents.

mod boundary;
mod grid;
mod transfer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{lame_for, LameParams, MaterialParams};
use crate::tensor3::{Mat3, Real, Vec3};

pub use boundary::{contact_pair, floor_response, FloorMode, MASS_EPS, WALL_LAYERS};
pub use grid::{bspline_stencil, GridSpec, ObjectGrid, Stencil, DOMAIN_MARGIN};

use boundary::UpdateParams;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Substep, s.
    pub dt: f64,
    /// m/s^2.
    pub gravity: Vec3,
    /// Height of the floor plane, m.
    pub floor_height: f64,
    pub floor_friction: f64,
    pub floor_mode: FloorMode,
    pub substeps_per_frame: usize,
    /// Hz.
    pub frame_rate: f64,
    pub grid: GridSpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        let dx = 0.1 / 16.0;
        Self {
            dt: 1.0 / 4800.0,
            gravity: Vec3::new(0.0, 0.0, -9.8),
            floor_height: 4.0 * dx,
            floor_friction: 0.4,
            floor_mode: FloorMode::Separate,
            substeps_per_frame: 200,
            frame_rate: 24.0,
            grid: GridSpec { dims: [64, 64, 64], dx, origin: Vec3::ZERO },
        }
    }
}

impl SimConfig {
    /// Config whose substep is `1 / (frame_rate * substeps)`.
    pub fn with_timing(mut self, frame_rate: f64, substeps_per_frame: usize) -> Self {
        self.frame_rate = frame_rate;
        self.substeps_per_frame = substeps_per_frame;
        self.dt = 1.0 / (frame_rate * substeps_per_frame as f64);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.dt > 0.0) || self.substeps_per_frame == 0 || !(self.frame_rate > 0.0) {
            return Err(Error::config("dt, substeps_per_frame and frame_rate must be positive"));
        }
        let drift = (self.dt * self.substeps_per_frame as f64 - 1.0 / self.frame_rate).abs();
        if drift > 1e-12 {
            return Err(Error::config(format!(
                "dt * substeps_per_frame differs from 1/frame_rate by {drift:e}"
            )));
        }
        if !self.gravity.is_finite() || !self.floor_height.is_finite() || !(self.floor_friction >= 0.0) {
            return Err(Error::config("gravity, floor height and floor friction must be finite"));
        }
        Ok(())
    }

    /// `dx / (10 c)` for the fastest dilatational wave among `params`.
    pub fn cfl_bound(&self, params: &[MaterialParams]) -> f64 {
        let c_max = params
            .iter()
            .map(|p| {
                let modulus = if p.family.is_fluid() {
                    p.bulk_modulus
                } else {
                    lame_for(p).map_or(0.0, |l| l.lambda + 2.0 * l.mu)
                };
                (modulus / p.density).sqrt()
            })
            .fold(0.0, f64::max);
        if c_max > 0.0 {
            self.grid.dx / (10.0 * c_max)
        } else {
            f64::INFINITY
        }
    }

    /// Warning text when `dt` exceeds [`SimConfig::cfl_bound`].
    pub fn cfl_warning(&self, params: &[MaterialParams]) -> Option<String> {
        let bound = self.cfl_bound(params);
        (self.dt > bound).then(|| format!("dt {:.3e} s exceeds the CFL bound {:.3e} s", self.dt, bound))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle<S = f64> {
    /// m.
    pub x: Vec3<S>,
    /// m/s.
    pub v: Vec3<S>,
    /// Elastic deformation gradient.
    pub f: Mat3<S>,
    /// APIC affine matrix, m^2/s.
    pub b: Mat3<S>,
    /// kg.
    pub mass: f64,
    /// Rest volume, m^3.
    pub volume0: f64,
    pub object_id: usize,
}

impl Particle<f64> {
    /// Particle at rest state: `F = I`, `B = 0`.
    pub fn at_rest(x: Vec3, v: Vec3, mass: f64, volume0: f64, object_id: usize) -> Self {
        Self { x, v, f: Mat3::identity(), b: Mat3::zero(), mass, volume0, object_id }
    }

    pub fn lift<S: Real>(&self) -> Particle<S> {
        Particle {
            x: Vec3::cst(&self.x),
            v: Vec3::cst(&self.v),
            f: Mat3::cst(&self.f),
            b: Mat3::cst(&self.b),
            mass: self.mass,
            volume0: self.volume0,
            object_id: self.object_id,
        }
    }
}

impl<S: Real> Particle<S> {
    pub fn val(&self) -> Particle<f64> {
        Particle {
            x: self.x.val(),
            v: self.v.val(),
            f: self.f.val(),
            b: self.b.val(),
            mass: self.mass,
            volume0: self.volume0,
            object_id: self.object_id,
        }
    }
}

/// Full simulation state: one particle set, grid and parameter set per object.
#[derive(Clone, Debug)]
pub struct WorldState<S = f64> {
    pub particles: Vec<Vec<Particle<S>>>,
    pub grids: Vec<ObjectGrid<S>>,
    pub params: Vec<MaterialParams<S>>,
    pub config: SimConfig,
    pub step_index: u64,
}

impl WorldState<f64> {
    pub fn new(
        config: SimConfig,
        particles: Vec<Vec<Particle>>,
        params: Vec<MaterialParams>,
    ) -> Result<Self> {
        config.validate()?;
        if particles.len() != params.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} particle sets but {} parameter sets",
                particles.len(),
                params.len()
            )));
        }
        if particles.is_empty() {
            return Err(Error::config("world needs at least one object"));
        }
        for (k, (set, p)) in particles.iter().zip(&params).enumerate() {
            p.validate()?;
            if set.is_empty() {
                return Err(Error::config(format!("object {k} has no particles")));
            }
            if let Some(bad) = set.iter().position(|q| {
                q.object_id != k || !(q.mass > 0.0) || !(q.volume0 > 0.0) || !q.x.is_finite()
            }) {
                return Err(Error::config(format!("object {k}: invalid particle {bad}")));
            }
        }
        let grids = particles.iter().map(|_| ObjectGrid::new(config.grid)).collect();
        Ok(Self { particles, grids, params, config, step_index: 0 })
    }

    /// Copy of the world whose scalars carry zero tangents.
    pub fn lift<S: Real>(&self) -> WorldState<S> {
        WorldState {
            particles: self.particles.iter().map(|s| s.iter().map(Particle::lift).collect()).collect(),
            grids: self.grids.iter().map(|g| ObjectGrid::new(g.spec)).collect(),
            params: self.params.iter().map(MaterialParams::lift).collect(),
            config: self.config,
            step_index: self.step_index,
        }
    }
}

impl<S: Real> WorldState<S> {
    pub fn num_objects(&self) -> usize {
        self.particles.len()
    }

    pub fn val(&self) -> WorldState<f64> {
        WorldState {
            particles: self.particles.iter().map(|s| s.iter().map(Particle::val).collect()).collect(),
            grids: self.grids.iter().map(|g| ObjectGrid::new(g.spec)).collect(),
            params: self.params.iter().map(MaterialParams::val).collect(),
            config: self.config,
            step_index: self.step_index,
        }
    }

    pub fn positions(&self) -> Vec<Vec<Vec3<S>>> {
        self.particles.iter().map(|s| s.iter().map(|p| p.x).collect()).collect()
    }

    pub fn total_mass(&self, object: usize) -> f64 {
        self.particles[object].iter().map(|p| p.mass).sum()
    }

    pub fn total_momentum(&self) -> Vec3<S> {
        self.particles
            .iter()
            .flatten()
            .fold(Vec3::zero(), |acc, p| acc + p.v.scale_f(p.mass))
    }

    /// Index of the frame the next step belongs to.
    pub fn frame(&self) -> u64 {
        self.step_index / self.config.substeps_per_frame as u64
    }

    fn lames(&self) -> Result<Vec<LameParams<S>>> {
        self.params.iter().map(lame_for).collect()
    }
}

fn parallel() -> bool {
    rayon::current_num_threads() > 1
}

/// Runs `f` once per object, on the rayon pool when it has more than one
/// worker. Objects are independent, so both paths give identical bits.
fn per_object<T, F>(items: &mut [T], f: F) -> Result<()>
where
    T: Send,
    F: Fn(usize, &mut T) -> Result<()> + Sync + Send,
{
    if parallel() && items.len() > 1 {
        items.par_iter_mut().enumerate().try_for_each(|(k, t)| f(k, t))
    } else {
        items.iter_mut().enumerate().try_for_each(|(k, t)| f(k, t))
    }
}

/// Scatters particle mass and APIC momentum to each object's grid.
pub fn p2g<S: Real>(world: &mut WorldState<S>) -> Result<()> {
    let mut work: Vec<_> = world.particles.iter().zip(world.grids.iter_mut()).collect();
    per_object(&mut work, |k, (parts, grid)| transfer::p2g_object(k, parts, grid))
}

/// Internal elastic forces on each object's grid; gravity is not included.
pub fn grid_forces<S: Real>(world: &mut WorldState<S>) -> Result<()> {
    let lames = world.lames()?;
    let mut work: Vec<_> = world
        .particles
        .iter()
        .zip(world.grids.iter_mut())
        .zip(world.params.iter().zip(&lames))
        .collect();
    per_object(&mut work, |_, ((parts, grid), (params, lame))| {
        transfer::forces_object(parts, grid, params, lame)
    })
}

/// Explicit grid velocity update with gravity, floor and wall constraints.
pub fn grid_update<S: Real>(world: &mut WorldState<S>) -> Result<()> {
    let c = &world.config;
    let u = UpdateParams {
        dt: c.dt,
        gravity: c.gravity,
        floor_height: c.floor_height,
        floor_friction: c.floor_friction,
        floor_mode: c.floor_mode,
    };
    per_object(&mut world.grids, |_, grid| {
        boundary::grid_update_object(grid, &u);
        Ok(())
    })
}

/// Pairwise inelastic contact with Coulomb friction at shared nodes.
pub fn contact_resolve<S: Real>(world: &mut WorldState<S>) {
    let mu: Vec<S> = world.params.iter().map(|p| p.contact_friction).collect();
    boundary::contact_resolve_all(&mut world.grids, &mu);
}

/// Grid-to-particle transfer, advection and plastic projection.
pub fn g2p_advect<S: Real>(world: &mut WorldState<S>) -> Result<()> {
    let lames = world.lames()?;
    let dt = world.config.dt;
    let mut work: Vec<_> = world
        .particles
        .iter_mut()
        .zip(world.grids.iter())
        .zip(world.params.iter().zip(&lames))
        .collect();
    per_object(&mut work, |_, ((parts, grid), (params, lame))| {
        transfer::g2p_object(parts, grid, params, lame, dt)
    })
}

/// One substep: p2g, grid forces, grid update, contact, g2p.
pub fn step<S: Real>(world: &mut WorldState<S>) -> Result<()> {
    p2g(world)?;
    grid_forces(world)?;
    grid_update(world)?;
    contact_resolve(world);
    g2p_advect(world)?;
    world.step_index += 1;
    Ok(())
}

/// Runs whole frames.
pub fn advance_frames<S: Real>(world: &mut WorldState<S>, frames: usize) -> Result<()> {
    for _ in 0..frames * world.config.substeps_per_frame {
        step(world)?;
    }
    Ok(())
}

/// Particle positions at recorded frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S = f64> {
    pub frame_rate: f64,
    /// Frame index of each snapshot, relative to the rollout start.
    pub frames: Vec<usize>,
    /// `positions[snapshot][object][particle]`.
    pub positions: Vec<Vec<Vec<Vec3<S>>>>,
}

impl<S: Real> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn val(&self) -> Trajectory<f64> {
        Trajectory {
            frame_rate: self.frame_rate,
            frames: self.frames.clone(),
            positions: self
                .positions
                .iter()
                .map(|f| f.iter().map(|o| o.iter().map(Vec3::val).collect()).collect())
                .collect(),
        }
    }
}

/// Steps `n_frames` whole frames, snapshotting at the start of every
/// `record_stride`-th frame (frame 0 is the initial state).
pub fn rollout<S: Real>(
    world: &mut WorldState<S>,
    n_frames: usize,
    record_stride: usize,
) -> Result<Trajectory<S>> {
    if n_frames == 0 || record_stride == 0 {
        return Err(Error::config("rollout needs n_frames >= 1 and record_stride >= 1"));
    }
    let mut traj = Trajectory {
        frame_rate: world.config.frame_rate,
        frames: Vec::with_capacity(n_frames.div_ceil(record_stride)),
        positions: Vec::new(),
    };
    for frame in 0..n_frames {
        if frame % record_stride == 0 {
            traj.frames.push(frame);
            traj.positions.push(world.positions());
        }
        advance_frames(world, 1)?;
    }
    Ok(traj)
}
