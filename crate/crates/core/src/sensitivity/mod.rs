//! Forward-mode parameter sensitivities of rollout losses.
//!
//! All active optimization entries are carried together as the tangents of
//! one dual-number rollout; the tangent width is the smallest supported
//! width that fits them.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{squash_poisson, unsquash_poisson, MaterialParams, ParamKind, POISSON_MAX, POISSON_MIN};
use crate::mpm::{advance_frames, WorldState};
use crate::observe::ObservationSet;
use crate::sysid::{frame_loss, supervised_frames, LossConfig};
use crate::tensor3::{Dual, Real, Vec3};

/// Friction angle bounds in optimization space, radians.
pub const FRICTION_ANGLE_MIN: f64 = 0.01;
pub const FRICTION_ANGLE_MAX: f64 = 1.3;
/// Default central-difference step in optimization space.
pub const FD_STEP: f64 = 1e-3;
/// Largest supported number of simultaneously active entries.
pub const MAX_ACTIVE: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Velocity,
    Physics,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Material { object: usize, kind: ParamKind },
    Velocity { object: usize, axis: usize },
}

/// Optimization-space coordinates of every object's material and initial
/// velocity. Only the entries of the current stage are active.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub entries: Vec<f64>,
    pub slots: Vec<Slot>,
    pub stage: Stage,
}

fn to_opt(params: &MaterialParams, kind: ParamKind) -> f64 {
    match kind {
        ParamKind::LogYoungs => params.youngs_modulus.log10(),
        ParamKind::Poisson => {
            let eps = 1e-9;
            unsquash_poisson(params.poisson_ratio.clamp(POISSON_MIN + eps, POISSON_MAX - eps))
        }
        ParamKind::LogYield => params.yield_stress.log10(),
        ParamKind::LogViscosity => params.viscosity.log10(),
        ParamKind::LogBulk => params.bulk_modulus.log10(),
        ParamKind::FrictionAngle => params.friction_angle,
        ParamKind::ContactFriction => params.contact_friction,
    }
}

fn pow10<S: Real>(e: S) -> S {
    (e * std::f64::consts::LN_10).exp()
}

fn from_opt<S: Real>(params: &mut MaterialParams<S>, kind: ParamKind, u: S) {
    match kind {
        ParamKind::LogYoungs => params.youngs_modulus = pow10(u),
        ParamKind::Poisson => params.poisson_ratio = squash_poisson(u),
        ParamKind::LogYield => params.yield_stress = pow10(u),
        ParamKind::LogViscosity => params.viscosity = pow10(u),
        ParamKind::LogBulk => params.bulk_modulus = pow10(u),
        ParamKind::FrictionAngle => {
            params.friction_angle = if u.val() < FRICTION_ANGLE_MIN {
                S::cst(FRICTION_ANGLE_MIN)
            } else if u.val() > FRICTION_ANGLE_MAX {
                S::cst(FRICTION_ANGLE_MAX)
            } else {
                u
            }
        }
        ParamKind::ContactFriction => {
            params.contact_friction = if u.val() < 0.0 { S::zero() } else { u };
        }
    }
}

impl ParamVector {
    /// Layout: per object, its family's material entries then the three
    /// velocity components.
    pub fn encode(params: &[MaterialParams], v0: &[Vec3], stage: Stage) -> Result<Self> {
        if params.len() != v0.len() {
            return Err(Error::ShapeMismatch(format!("{} materials for {} velocities", params.len(), v0.len())));
        }
        let mut entries = Vec::new();
        let mut slots = Vec::new();
        for (object, (p, v)) in params.iter().zip(v0).enumerate() {
            p.validate()?;
            for &kind in p.family.active_params() {
                entries.push(to_opt(p, kind));
                slots.push(Slot::Material { object, kind });
            }
            for axis in 0..3 {
                entries.push(v.get(axis));
                slots.push(Slot::Velocity { object, axis });
            }
        }
        Ok(Self { entries, slots, stage })
    }

    pub fn is_active(&self, slot: &Slot) -> bool {
        matches!(
            (self.stage, slot),
            (Stage::Velocity, Slot::Velocity { .. }) | (Stage::Physics, Slot::Material { .. })
        )
    }

    /// Indices into `entries` of the active coordinates, in layout order.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.slots.len()).filter(|&i| self.is_active(&self.slots[i])).collect()
    }

    pub fn num_active(&self) -> usize {
        self.slots.iter().filter(|s| self.is_active(s)).count()
    }

    pub fn active_values(&self) -> Vec<f64> {
        self.active_indices().into_iter().map(|i| self.entries[i]).collect()
    }

    pub fn set_active_values(&mut self, values: &[f64]) {
        for (i, &v) in self.active_indices().into_iter().zip(values) {
            self.entries[i] = v;
        }
    }

    pub fn with_stage(&self, stage: Stage) -> Self {
        Self { stage, ..self.clone() }
    }

    /// Physical parameters and velocities. `templates` supply the family,
    /// the density and every field the family does not optimize.
    pub fn decode(&self, templates: &[MaterialParams]) -> Result<(Vec<MaterialParams>, Vec<Vec3>)> {
        let (params, v0) = self.decode_tracked::<f64>(templates)?;
        Ok((params, v0))
    }

    /// As [`decode`](Self::decode), with active entry `j` seeded along
    /// tangent direction `j`.
    pub fn decode_tracked<S: Real>(
        &self,
        templates: &[MaterialParams],
    ) -> Result<(Vec<MaterialParams<S>>, Vec<Vec3<S>>)> {
        let mut params: Vec<MaterialParams<S>> = templates.iter().map(MaterialParams::lift).collect();
        let mut v0 = vec![Vec3::<S>::zero(); templates.len()];
        let mut tangent = 0;
        for (slot, &u) in self.slots.iter().zip(&self.entries) {
            let x = if self.is_active(slot) {
                tangent += 1;
                S::seed(u, tangent - 1)
            } else {
                S::cst(u)
            };
            match *slot {
                Slot::Material { object, kind } => {
                    let p = params.get_mut(object).ok_or(Error::IndexOutOfRange { index: object, len: templates.len() })?;
                    if !p.family.active_params().contains(&kind) {
                        return Err(Error::config(format!("{kind:?} is not a {} parameter", p.family.name())));
                    }
                    from_opt(p, kind, x);
                }
                Slot::Velocity { object, axis } => {
                    let v = v0.get_mut(object).ok_or(Error::IndexOutOfRange { index: object, len: templates.len() })?;
                    v.set(axis, x);
                }
            }
        }
        Ok((params, v0))
    }
}

/// A scalar loss accumulated over the frames of one rollout.
pub trait Objective: Sync {
    /// Frames simulated, counting the initial frame 0.
    fn horizon(&self) -> usize;

    fn frame_loss<S: Real>(&self, frame: usize, positions: &[Vec<Vec3<S>>]) -> Result<S>;

    fn frames(&self) -> Range<usize> {
        supervised_frames(self.horizon())
    }
}

/// The identification loss against observations, truncated to a horizon.
pub struct IdObjective<'a> {
    pub obs: &'a ObservationSet,
    pub shells: &'a [Vec<usize>],
    pub cfg: LossConfig,
    pub horizon: usize,
}

impl Objective for IdObjective<'_> {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn frame_loss<S: Real>(&self, frame: usize, positions: &[Vec<Vec3<S>>]) -> Result<S> {
        frame_loss(positions, self.shells, self.obs, frame, &self.cfg)
    }
}

/// Mean squared distance between particles and fixed per-particle targets,
/// `targets[frame][object][particle]`. Smooth in every parameter.
pub struct TrackingObjective {
    pub targets: Vec<Vec<Vec<Vec3>>>,
}

impl Objective for TrackingObjective {
    fn horizon(&self) -> usize {
        self.targets.len()
    }

    fn frame_loss<S: Real>(&self, frame: usize, positions: &[Vec<Vec3<S>>]) -> Result<S> {
        let target = &self.targets[frame];
        let mut acc = S::zero();
        let mut n = 0;
        for (p, t) in positions.iter().zip(target) {
            if p.len() != t.len() {
                return Err(Error::ShapeMismatch("tracking target size".into()));
            }
            for (a, b) in p.iter().zip(t) {
                acc += (*a - Vec3::cst(b)).norm_sq();
            }
            n += p.len();
        }
        Ok(acc / n.max(1) as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradReport {
    pub loss: f64,
    /// Derivative with respect to each active entry, in layout order.
    pub grad: Vec<f64>,
    pub per_frame: Vec<f64>,
}

/// Simulation world for `pv`: object `k` gets the decoded material and a
/// uniform initial velocity `v0[k]`.
pub fn build_world<S: Real>(world0: &WorldState, pv: &ParamVector) -> Result<WorldState<S>> {
    let (params, v0) = pv.decode_tracked::<S>(&world0.params)?;
    for p in &params {
        p.val().validate()?;
    }
    let mut world = world0.lift::<S>();
    for (obj, parts) in world.particles.iter_mut().enumerate() {
        for p in parts.iter_mut() {
            p.v = v0[obj];
        }
    }
    world.params = params;
    Ok(world)
}

fn divergence(e: Error) -> Error {
    if e.is_divergence() {
        Error::NonFiniteLoss
    } else {
        e
    }
}

/// Rolls out `world` over the objective's horizon; returns the mean frame
/// loss and the per-frame values.
pub fn evaluate<S: Real, O: Objective>(mut world: WorldState<S>, objective: &O) -> Result<(S, Vec<f64>)> {
    let horizon = objective.horizon();
    let frames = objective.frames();
    if frames.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut total = S::zero();
    let mut per_frame = Vec::with_capacity(frames.len());
    for f in 0..horizon {
        if f > 0 {
            advance_frames(&mut world, 1).map_err(divergence)?;
        }
        if frames.contains(&f) {
            let pos = world.positions();
            if pos.iter().flatten().any(|x| !x.val().is_finite()) {
                return Err(Error::NonFiniteLoss);
            }
            let l = objective.frame_loss(f, &pos)?;
            if !l.val().is_finite() {
                return Err(Error::NonFiniteLoss);
            }
            per_frame.push(l.val());
            total += l;
        }
    }
    Ok((total / frames.len() as f64, per_frame))
}

fn run<S: Real, O: Objective>(world0: &WorldState, objective: &O, pv: &ParamVector) -> Result<GradReport> {
    let world = build_world::<S>(world0, pv)?;
    let (loss, per_frame) = evaluate(world, objective)?;
    let grad: Vec<f64> = (0..pv.num_active()).map(|j| loss.tangent(j)).collect();
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss);
    }
    Ok(GradReport { loss: loss.val(), grad, per_frame })
}

/// Loss and its gradient with respect to the active entries of `pv`.
pub fn loss_and_grad<O: Objective>(world0: &WorldState, objective: &O, pv: &ParamVector) -> Result<GradReport> {
    match pv.num_active() {
        0 => run::<f64, O>(world0, objective, pv),
        1 => run::<Dual<1>, O>(world0, objective, pv),
        2 => run::<Dual<2>, O>(world0, objective, pv),
        3 => run::<Dual<3>, O>(world0, objective, pv),
        4 => run::<Dual<4>, O>(world0, objective, pv),
        5 | 6 => run::<Dual<6>, O>(world0, objective, pv),
        7 | 8 => run::<Dual<8>, O>(world0, objective, pv),
        9..=12 => run::<Dual<12>, O>(world0, objective, pv),
        13..=16 => run::<Dual<16>, O>(world0, objective, pv),
        17..=MAX_ACTIVE => run::<Dual<24>, O>(world0, objective, pv),
        p => Err(Error::config(format!("{p} active entries exceed the supported {MAX_ACTIVE}"))),
    }
}

/// Loss only, on the plain `f64` path.
pub fn loss_value<O: Objective>(world0: &WorldState, objective: &O, pv: &ParamVector) -> Result<f64> {
    Ok(evaluate(build_world::<f64>(world0, pv)?, objective)?.0)
}

/// Central differences of the loss along each active entry.
pub fn finite_difference<O: Objective>(world0: &WorldState, objective: &O, pv: &ParamVector, h: f64) -> Result<Vec<f64>> {
    pv.active_indices()
        .into_iter()
        .map(|i| {
            let mut plus = pv.clone();
            plus.entries[i] += h;
            let mut minus = pv.clone();
            minus.entries[i] -= h;
            Ok((loss_value(world0, objective, &plus)? - loss_value(world0, objective, &minus)?) / (2.0 * h))
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

#[cfg(test)]
mod tests;
