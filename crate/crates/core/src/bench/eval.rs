use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observe::{chamfer, emd, EMD_SUBSAMPLE};
use crate::tensor3::Vec3;

use super::msv::TrajectoryFile;

/// CD in 10^3 mm^2, EMD in m; EMD is absent when disabled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cd: f64,
    pub emd: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameMetrics {
    pub frame: usize,
    pub objects: Vec<Metrics>,
    /// Union of all objects on both sides.
    pub scene: Metrics,
}

/// Averages over a run of frames; `cd` and `emd` average the per-object
/// values over objects and frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitMean {
    pub frames: [usize; 2],
    pub cd: f64,
    pub emd: Option<f64>,
    pub per_object_cd: Vec<f64>,
    pub scene_cd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub horizon: usize,
    pub frames: Vec<FrameMetrics>,
    pub observable: SplitMean,
    /// `None` when the horizon covers every frame.
    pub future: Option<SplitMean>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

fn split(frames: &[FrameMetrics], lo: usize, hi: usize) -> SplitMean {
    let run = &frames[lo..hi];
    let k = run[0].objects.len();
    let emd = run
        .iter()
        .flat_map(|f| f.objects.iter().map(|m| m.emd))
        .collect::<Option<Vec<f64>>>()
        .map(|v| mean(v.into_iter()));
    SplitMean {
        frames: [lo, hi],
        cd: mean(run.iter().flat_map(|f| f.objects.iter().map(|m| m.cd))),
        emd,
        per_object_cd: (0..k).map(|o| mean(run.iter().map(|f| f.objects[o].cd))).collect(),
        scene_cd: mean(run.iter().map(|f| f.scene.cd)),
    }
}

fn metrics(a: &[Vec3], b: &[Vec3], emd_subsample: usize) -> Result<Metrics> {
    Ok(Metrics { cd: chamfer(a, b)?, emd: if emd_subsample > 0 { Some(emd(a, b, emd_subsample)?) } else { None } })
}

/// Per-frame CD and EMD of `pred` against `gt` with the default EMD
/// subsample, split at `horizon`.
pub fn eval(pred: &TrajectoryFile, gt: &TrajectoryFile, horizon: usize) -> Result<EvalReport> {
    eval_with(pred, gt, horizon, EMD_SUBSAMPLE)
}

/// [`eval`] with an explicit EMD subsample size; 0 skips EMD.
pub fn eval_with(pred: &TrajectoryFile, gt: &TrajectoryFile, horizon: usize, emd_subsample: usize) -> Result<EvalReport> {
    pred.validate()?;
    gt.validate()?;
    if pred.num_objects() != gt.num_objects() || pred.num_frames() != gt.num_frames() {
        return Err(Error::ShapeMismatch(format!(
            "prediction has {} objects x {} frames, ground truth {} x {}",
            pred.num_objects(),
            pred.num_frames(),
            gt.num_objects(),
            gt.num_frames()
        )));
    }
    let t = gt.num_frames();
    if horizon == 0 || horizon > t {
        return Err(Error::config(format!("horizon {horizon} outside 1..={t}")));
    }
    let mut frames = Vec::with_capacity(t);
    for f in 0..t {
        let mut objects = Vec::with_capacity(gt.num_objects());
        let (mut pu, mut gu) = (Vec::new(), Vec::new());
        for o in 0..gt.num_objects() {
            let (p, g) = (pred.points(f, o), gt.points(f, o));
            objects.push(metrics(&p, &g, emd_subsample)?);
            pu.extend(p);
            gu.extend(g);
        }
        let scene = metrics(&pu, &gu, emd_subsample)?;
        frames.push(FrameMetrics { frame: f, objects, scene });
    }
    let observable = split(&frames, 0, horizon);
    let future = (horizon < t).then(|| split(&frames, horizon, t));
    Ok(EvalReport { horizon, frames, observable, future })
}

impl EvalReport {
    /// One row per frame per object: `frame,object,split,cd,emd`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("frame,object,split,cd,emd\n");
        for f in &self.frames {
            let split = if f.frame < self.horizon { "observable" } else { "future" };
            for (o, m) in f.objects.iter().enumerate() {
                let emd = m.emd.map_or(String::new(), |e| format!("{e:?}"));
                out.push_str(&format!("{},{o},{split},{:?},{emd}\n", f.frame, m.cd));
            }
        }
        out
    }
}
