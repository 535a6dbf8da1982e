//! Scene directories:
//!
//! ```text
//! scene.json                    SceneConfig
//! cameras.json                  camera rig
//! truth.json                    drawn parameters, velocities and poses
//! gt.msv                        ground-truth particle trajectory
//! obs/surface_f{FFF}_o{K}.xyz   surface samples per frame and object
//! obs/mask_f{FFF}_v{VV}_o{K}.pgm silhouettes per frame, view and object
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::observe::{read_pgm, read_xyz, write_pgm, write_xyz, Camera, ObservationSet};

use super::msv::TrajectoryFile;
use super::scene::{GeneratedScene, SceneConfig, Truth};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format { path: path.to_path_buf(), reason: e.to_string() })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn surface_path(dir: &Path, frame: usize, object: usize) -> PathBuf {
    dir.join("obs").join(format!("surface_f{frame:03}_o{object}.xyz"))
}

pub fn mask_path(dir: &Path, frame: usize, view: usize, object: usize) -> PathBuf {
    dir.join("obs").join(format!("mask_f{frame:03}_v{view:02}_o{object}.pgm"))
}

pub fn write_scene(dir: &Path, scene: &GeneratedScene) -> Result<()> {
    let obs_dir = dir.join("obs");
    std::fs::create_dir_all(&obs_dir).map_err(|e| Error::io(&obs_dir, e))?;
    write_json(&dir.join("scene.json"), &scene.config)?;
    write_json(&dir.join("cameras.json"), &scene.obs.cameras)?;
    write_json(&dir.join("truth.json"), &scene.truth)?;
    TrajectoryFile::from_trajectory(&scene.gt).write(&dir.join("gt.msv"))?;
    for (f, objs) in scene.obs.surfaces.iter().enumerate() {
        for (k, pts) in objs.iter().enumerate() {
            write_xyz(&surface_path(dir, f, k), pts)?;
        }
    }
    for (f, views) in scene.obs.masks.iter().enumerate() {
        for (v, objs) in views.iter().enumerate() {
            for (k, m) in objs.iter().enumerate() {
                write_pgm(&mask_path(dir, f, v, k), m)?;
            }
        }
    }
    Ok(())
}

pub fn read_config(dir: &Path) -> Result<SceneConfig> {
    let cfg: SceneConfig = read_json(&dir.join("scene.json"))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_truth(dir: &Path) -> Result<Truth> {
    read_json(&dir.join("truth.json"))
}

/// Observations of a scene directory; silhouettes are loaded only when
/// `with_masks`.
pub fn read_observations(dir: &Path, cfg: &SceneConfig, with_masks: bool) -> Result<ObservationSet> {
    let cameras: Vec<Camera> = read_json(&dir.join("cameras.json"))?;
    let k = cfg.objects.len();
    let surfaces = (0..cfg.frames)
        .map(|f| (0..k).map(|o| read_xyz(&surface_path(dir, f, o))).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    let masks = if with_masks {
        (0..cfg.frames)
            .map(|f| {
                (0..cameras.len())
                    .map(|v| (0..k).map(|o| Ok(read_pgm(&mask_path(dir, f, v, o))?.tagged(v, o, f))).collect())
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<_>>>>>()?
    } else {
        Vec::new()
    };
    let obs = ObservationSet { frame_rate: cfg.fps, surfaces, masks, cameras, radius_px: cfg.radius_px };
    obs.validate()?;
    Ok(obs)
}
