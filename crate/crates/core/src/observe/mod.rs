//! Cameras, silhouettes, surface samples and point-set metrics.

mod camera;
mod metrics;
mod raster;
mod surface;

pub use camera::{hemisphere_cameras, project, Camera, MIN_DEPTH};
pub use metrics::{
    chamfer, chamfer_brute_force, chamfer_tracked, emd, hungarian, matched_mean_distance, nearest_pairs, NnIndex,
    EMD_SUBSAMPLE, M2_TO_REPORT,
};
pub use raster::{
    mask_l1, mask_l1_soft, rasterize_silhouette, read_pgm, write_pgm, Silhouette, SOFT_BAND_PX,
    SOFT_TEMPERATURE_PX,
};
pub use surface::{gather, mean_spacing, read_xyz, surface_extract, write_xyz};

use crate::error::{Error, Result};
use crate::tensor3::Vec3;

/// Default splat radius, px.
pub const DEFAULT_RADIUS_PX: f64 = 1.5;

/// Per-frame target geometry of every object.
#[derive(Clone, Debug, Default)]
pub struct ObservationSet {
    pub frame_rate: f64,
    /// `surfaces[frame][object]`.
    pub surfaces: Vec<Vec<Vec<Vec3>>>,
    /// `masks[frame][view][object]`; empty when no silhouettes exist.
    pub masks: Vec<Vec<Vec<Silhouette>>>,
    pub cameras: Vec<Camera>,
    pub radius_px: f64,
}

impl ObservationSet {
    pub fn num_frames(&self) -> usize {
        self.surfaces.len()
    }

    pub fn num_objects(&self) -> usize {
        self.surfaces.first().map_or(0, Vec::len)
    }

    pub fn has_masks(&self) -> bool {
        !self.masks.is_empty() && !self.cameras.is_empty()
    }

    /// Pixelwise OR over objects for one frame and view.
    pub fn union_mask(&self, frame: usize, view: usize) -> Result<Silhouette> {
        let per_obj = &self.masks[frame][view];
        let mut acc = per_obj.first().cloned().ok_or(Error::EmptySet)?;
        for m in &per_obj[1..] {
            acc = acc.union(m)?;
        }
        Ok(acc.tagged(view, usize::MAX, frame))
    }

    /// Keeps the first `n` frames.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.surfaces.truncate(n);
        out.masks.truncate(n);
        out
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_objects();
        if self.surfaces.is_empty() || k == 0 {
            return Err(Error::EmptyInput);
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::config("observation frame rate must be positive"));
        }
        for (f, objs) in self.surfaces.iter().enumerate() {
            if objs.len() != k {
                return Err(Error::config(format!("frame {f} has {} objects, expected {k}", objs.len())));
            }
            if objs.iter().any(Vec::is_empty) {
                return Err(Error::config(format!("frame {f} has an empty surface")));
            }
        }
        if self.masks.is_empty() {
            return Ok(());
        }
        if self.masks.len() != self.surfaces.len() {
            return Err(Error::FrameMismatch { needed: self.surfaces.len(), available: self.masks.len() });
        }
        for cam in &self.cameras {
            cam.validate()?;
        }
        for views in &self.masks {
            if views.len() != self.cameras.len() {
                return Err(Error::config("mask views do not match the camera count"));
            }
            for (cam, objs) in self.cameras.iter().zip(views) {
                if objs.len() != k {
                    return Err(Error::config("mask objects do not match the surface objects"));
                }
                for m in objs {
                    if (m.width, m.height) != (cam.width, cam.height) {
                        return Err(Error::ResolutionMismatch((m.width, m.height), (cam.width, cam.height)));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Observations of a recorded trajectory: surfaces are the positions of each
/// object's `shells` particles, masks splat every particle. Empty `cameras`
/// yields surfaces only.
pub fn observe_trajectory(
    positions: &[Vec<Vec<Vec3>>],
    frame_rate: f64,
    shells: &[Vec<usize>],
    cameras: &[Camera],
    radius_px: f64,
) -> Result<ObservationSet> {
    let surfaces = positions
        .iter()
        .map(|objs| {
            if objs.len() != shells.len() {
                return Err(Error::ShapeMismatch(format!("{} objects but {} shells", objs.len(), shells.len())));
            }
            Ok(objs.iter().zip(shells).map(|(x, s)| gather(x, s)).collect())
        })
        .collect::<Result<Vec<Vec<Vec<Vec3>>>>>()?;
    let masks = if cameras.is_empty() {
        Vec::new()
    } else {
        positions
            .iter()
            .enumerate()
            .map(|(f, objs)| {
                cameras
                    .iter()
                    .enumerate()
                    .map(|(v, cam)| {
                        objs.iter()
                            .enumerate()
                            .map(|(k, x)| rasterize_silhouette(x, cam, radius_px).tagged(v, k, f))
                            .collect()
                    })
                    .collect()
            })
            .collect()
    };
    let obs = ObservationSet { frame_rate, surfaces, masks, cameras: cameras.to_vec(), radius_px };
    obs.validate()?;
    Ok(obs)
}
