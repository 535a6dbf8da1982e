use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpm::Trajectory;
use crate::observe::{chamfer_tracked, gather, mask_l1_soft, ObservationSet};
use crate::tensor3::{Real, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    /// Each simulated object is matched only against its own observations.
    ObjectWise,
    /// All objects are pooled before matching.
    SceneWise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub granularity: Granularity,
    pub use_cd: bool,
    pub use_alpha: bool,
    pub cd_weight: f64,
    pub alpha_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { granularity: Granularity::ObjectWise, use_cd: true, use_alpha: true, cd_weight: 1.0, alpha_weight: 1.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.use_cd && !self.use_alpha {
            return Err(Error::config("loss needs at least one of the chamfer and silhouette terms"));
        }
        if !(self.cd_weight >= 0.0 && self.alpha_weight >= 0.0) {
            return Err(Error::config("loss weights must be non-negative"));
        }
        Ok(())
    }

    pub fn check_observations(&self, obs: &ObservationSet) -> Result<()> {
        self.validate()?;
        if self.use_alpha && !obs.has_masks() {
            return Err(Error::config("silhouette term enabled but the observations carry no masks"));
        }
        Ok(())
    }
}

/// Particle indices whose positions form each object's simulated surface.
pub type Shells = Vec<Vec<usize>>;

/// Loss of one supervised frame. `positions[object]` holds every particle
/// of the object; `shells` selects its surface samples.
pub fn frame_loss<S: Real>(
    positions: &[Vec<Vec3<S>>],
    shells: &[Vec<usize>],
    obs: &ObservationSet,
    frame: usize,
    cfg: &LossConfig,
) -> Result<S> {
    if frame >= obs.num_frames() {
        return Err(Error::FrameMismatch { needed: frame + 1, available: obs.num_frames() });
    }
    let k = obs.num_objects();
    if positions.len() != k || shells.len() != k {
        return Err(Error::ShapeMismatch(format!(
            "{} simulated objects and {} shells for {k} observed objects",
            positions.len(),
            shells.len()
        )));
    }
    let mut total = S::zero();
    let targets = &obs.surfaces[frame];
    if cfg.use_cd {
        let cd = match cfg.granularity {
            Granularity::ObjectWise => {
                let mut acc = S::zero();
                for ((p, shell), target) in positions.iter().zip(shells).zip(targets) {
                    acc += chamfer_tracked(&gather(p, shell), target)?;
                }
                acc
            }
            Granularity::SceneWise => {
                let sim: Vec<Vec3<S>> =
                    positions.iter().zip(shells).flat_map(|(p, shell)| shell.iter().map(|&i| p[i])).collect();
                let target: Vec<Vec3> = targets.iter().flatten().copied().collect();
                chamfer_tracked(&sim, &target)?
            }
        };
        total += cd * cfg.cd_weight;
    }
    if cfg.use_alpha {
        let views = &obs.masks[frame];
        let mut acc = S::zero();
        for (view, cam) in obs.cameras.iter().enumerate() {
            match cfg.granularity {
                Granularity::ObjectWise => {
                    for (p, target) in positions.iter().zip(&views[view]) {
                        acc += mask_l1_soft(p, cam, obs.radius_px, target)?;
                    }
                }
                Granularity::SceneWise => {
                    let all: Vec<Vec3<S>> = positions.iter().flatten().copied().collect();
                    acc += mask_l1_soft(&all, cam, obs.radius_px, &obs.union_mask(frame, view)?)?;
                }
            }
        }
        total += acc / obs.cameras.len() as f64 * cfg.alpha_weight;
    }
    Ok(total)
}

/// Frames that contribute to the loss over a horizon of `n` observed
/// frames. Frame 0 is the initial condition and is skipped unless it is the
/// only frame.
pub fn supervised_frames(n: usize) -> std::ops::Range<usize> {
    if n <= 1 {
        0..n
    } else {
        1..n
    }
}

/// Identification loss of a recorded trajectory: the mean frame loss over
/// the supervised observation frames.
pub fn loss_id(traj: &Trajectory, shells: &[Vec<usize>], obs: &ObservationSet, cfg: &LossConfig) -> Result<f64> {
    cfg.check_observations(obs)?;
    let frames = supervised_frames(obs.num_frames());
    let mut total = 0.0;
    for f in frames.clone() {
        let snap = traj
            .frames
            .iter()
            .position(|&g| g == f)
            .ok_or(Error::FrameMismatch { needed: f + 1, available: traj.len() })?;
        total += frame_loss(&traj.positions[snap], shells, obs, f, cfg)?;
    }
    Ok(total / frames.len().max(1) as f64)
}
