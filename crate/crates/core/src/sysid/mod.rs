//! System identification: the observation loss, Adam, the horizon
//! curriculum and the two-stage fitting schedule.

mod fit;
mod loss;
mod optim;

pub use fit::{
    centroid, centroid_velocity, fit_params, fit_velocity, identify, lift_scene, object_velocities, shells_of,
    swap_materials, world_with, FitConfig, FitResult, IdentifyInputs,
};
pub use loss::{frame_loss, loss_id, supervised_frames, Granularity, LossConfig, Shells};
pub use optim::{AdamState, Curriculum, CurriculumTracker};
