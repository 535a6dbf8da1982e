//! Synthetic benchmark: scene generation, file formats, evaluation and the
//! command line.

mod cli;
mod eval;
mod io;
mod msv;
mod scene;
mod shapes;

pub use cli::{run, ParamsFile, THREADS_ENV};
pub use eval::{eval, eval_with, EvalReport, FrameMetrics, Metrics, SplitMean};
pub use io::{mask_path, read_config, read_json, read_observations, read_truth, surface_path, write_json, write_scene};
pub use msv::{TrajectoryFile, MAGIC};
pub use scene::{
    closest_approach, fill, gen_scene, GeneratedScene, ObjectSpec, ParamRanges, SceneConfig, Truth,
    COLLISION_ATTEMPTS,
};
pub use shapes::{Posed, Shape};
