use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lifting::{to_particles, LiftConfig, OccupancyGrid};
use crate::materials::{squash_poisson, unsquash_poisson, MaterialFamily, MaterialParams};
use crate::mpm::{rollout, FloorMode, GridSpec, SimConfig, Trajectory, WorldState};
use crate::observe::{hemisphere_cameras, observe_trajectory, Camera, ObservationSet};
use crate::sysid::{shells_of, world_with, FitConfig, IdentifyInputs, Shells};
use crate::tensor3::Vec3;

use super::shapes::{Posed, Shape};

/// Attempts the collision solver makes before giving up.
pub const COLLISION_ATTEMPTS: usize = 100;

/// Uniform draw ranges for the ground-truth parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    /// Pa.
    pub youngs_modulus: [f64; 2],
    pub poisson_ratio: [f64; 2],
    /// kg/m^3.
    pub density: [f64; 2],
    /// Dimensionless; `tau_Y = 2 mu s`.
    pub yield_strain: [f64; 2],
    /// Pa s.
    pub viscosity: [f64; 2],
    /// Degrees.
    pub friction_angle_deg: [f64; 2],
    pub contact_friction: [f64; 2],
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            youngs_modulus: [4.75e4, 5.25e4],
            poisson_ratio: [0.20, 0.30],
            density: [800.0, 1200.0],
            yield_strain: [0.025, 0.045],
            viscosity: [0.5, 2.0],
            friction_angle_deg: [25.0, 40.0],
            contact_friction: [0.3, 0.3],
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.gen_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn assemble(
    family: MaterialFamily,
    youngs: f64,
    poisson: f64,
    density: f64,
    yield_strain: f64,
    viscosity: f64,
    friction_angle: f64,
    contact_friction: f64,
) -> MaterialParams {
    let mu = youngs / (2.0 * (1.0 + poisson));
    MaterialParams {
        family,
        youngs_modulus: youngs,
        poisson_ratio: poisson,
        yield_stress: 2.0 * mu * yield_strain,
        viscosity,
        bulk_modulus: youngs / (3.0 * (1.0 - 2.0 * poisson)),
        friction_angle,
        density,
        contact_friction,
    }
}

impl ParamRanges {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.youngs_modulus, self.density, self.yield_strain, self.viscosity];
        let ok = positive.iter().all(|r| r[0] > 0.0 && r[1] >= r[0])
            && self.poisson_ratio[0] > 0.0
            && self.poisson_ratio[1] < 0.5
            && self.poisson_ratio[1] >= self.poisson_ratio[0]
            && self.friction_angle_deg[0] > 0.0
            && self.friction_angle_deg[1] < 90.0
            && self.contact_friction[0] >= 0.0
            && self.contact_friction[1] >= self.contact_friction[0];
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("invalid parameter ranges {self:?}")))
        }
    }

    pub fn draw(&self, family: MaterialFamily, rng: &mut ChaCha8Rng) -> MaterialParams {
        let youngs = uniform(rng, self.youngs_modulus);
        let poisson = uniform(rng, self.poisson_ratio);
        let density = uniform(rng, self.density);
        let strain = uniform(rng, self.yield_strain);
        let viscosity = uniform(rng, self.viscosity);
        let angle = uniform(rng, self.friction_angle_deg).to_radians();
        let friction = uniform(rng, self.contact_friction);
        assemble(family, youngs, poisson, density, strain, viscosity, angle, friction)
    }

    /// Centre of every range in optimization space: geometric means for the
    /// log-encoded quantities, the squash midpoint for Poisson's ratio.
    pub fn midpoint(&self, family: MaterialFamily) -> MaterialParams {
        let geo = |r: [f64; 2]| (r[0] * r[1]).sqrt();
        let mid = |r: [f64; 2]| 0.5 * (r[0] + r[1]);
        let poisson = squash_poisson(mid([unsquash_poisson(self.poisson_ratio[0]), unsquash_poisson(self.poisson_ratio[1])]));
        assemble(
            family,
            geo(self.youngs_modulus),
            poisson,
            mid(self.density),
            geo(self.yield_strain),
            geo(self.viscosity),
            mid(self.friction_angle_deg).to_radians(),
            mid(self.contact_friction),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub family: MaterialFamily,
    #[serde(default)]
    pub ranges: ParamRanges,
    /// Fixed ground truth; drawn from `ranges` when absent.
    #[serde(default)]
    pub params: Option<MaterialParams>,
    /// Sampled around the domain centre when absent.
    #[serde(default)]
    pub center: Option<Vec3>,
    /// Rotation vector, radians; random when absent.
    #[serde(default)]
    pub rotation: Option<Vec3>,
    /// Solved for a mid-air collision when absent.
    #[serde(default)]
    pub velocity: Option<Vec3>,
}

/// Everything that determines a benchmark scene. World units are meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub seed: u64,
    pub objects: Vec<ObjectSpec>,
    pub frames: usize,
    pub fps: f64,
    /// Frames `0..observable_frames` are fitted; the rest are predicted.
    pub observable_frames: usize,
    pub cameras: usize,
    /// Square image side, px.
    pub image_size: usize,
    pub radius_px: f64,
    /// Grid nodes per axis.
    pub grid_dims: usize,
    pub dx: f64,
    pub substeps_per_frame: usize,
    pub floor_height: f64,
    pub floor_friction: f64,
    pub floor_mode: FloorMode,
    pub particles_per_object: usize,
    /// Height of the object centres at launch, m.
    pub launch_height: f64,
    /// Clear space between neighbouring bounding balls at launch, m.
    pub launch_gap: [f64; 2],
    /// Time range in which the ballistic paths of the centres meet, s.
    pub collision_time: [f64; 2],
    /// m/s.
    pub max_speed: f64,
    pub lift: LiftConfig,
    pub erode_px: f64,
    pub fit: FitConfig,
}

impl Default for SceneConfig {
    fn default() -> Self {
        let elastic = ObjectSpec {
            shape: Shape::named("box", 0.05).expect("known shape"),
            family: MaterialFamily::Elastic,
            ranges: ParamRanges::default(),
            params: None,
            center: None,
            rotation: None,
            velocity: None,
        };
        let plasticine = ObjectSpec {
            shape: Shape::Sphere { radius: 0.045 },
            family: MaterialFamily::Plasticine,
            ..elastic.clone()
        };
        Self {
            seed: 7,
            objects: vec![elastic, plasticine],
            frames: 30,
            fps: 24.0,
            observable_frames: 15,
            cameras: 11,
            image_size: 128,
            radius_px: crate::observe::DEFAULT_RADIUS_PX,
            grid_dims: 64,
            dx: 0.1 / 16.0,
            substeps_per_frame: 200,
            floor_height: 0.025,
            floor_friction: 0.4,
            floor_mode: FloorMode::Separate,
            particles_per_object: 8000,
            launch_height: 0.125,
            launch_gap: [0.02, 0.04],
            collision_time: [0.08, 0.14],
            max_speed: 3.0,
            lift: LiftConfig::default(),
            erode_px: 1.0,
            fit: FitConfig { fit_frames: Some(15), ..FitConfig::default() },
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.objects.len()) {
            return Err(Error::config(format!("scenes have 2 or 3 objects, got {}", self.objects.len())));
        }
        for o in &self.objects {
            o.shape.validate()?;
            o.ranges.validate()?;
            if let Some(p) = &o.params {
                p.validate()?;
                if p.family != o.family {
                    return Err(Error::config("object params disagree with its family"));
                }
            }
        }
        if self.frames < 3 || self.observable_frames < 2 || self.observable_frames > self.frames {
            return Err(Error::config("need frames >= 3 and 2 <= observable_frames <= frames"));
        }
        if self.cameras < 3 || self.image_size < 8 || self.particles_per_object == 0 {
            return Err(Error::config("need >= 3 cameras, images >= 8 px and particles"));
        }
        if !(self.collision_time[0] > 0.0 && self.collision_time[1] >= self.collision_time[0]) {
            return Err(Error::config("collision time range must be positive"));
        }
        self.lift.validate()?;
        self.fit.validate()?;
        self.sim().validate()
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            floor_height: self.floor_height,
            floor_friction: self.floor_friction,
            floor_mode: self.floor_mode,
            grid: GridSpec { dims: [self.grid_dims; 3], dx: self.dx, origin: Vec3::ZERO },
            ..SimConfig::default()
        }
        .with_timing(self.fps, self.substeps_per_frame)
    }

    /// Side of the cubic domain, m.
    pub fn extent(&self) -> f64 {
        (self.grid_dims - 1) as f64 * self.dx
    }

    pub fn camera_rig(&self) -> Result<Vec<Camera>> {
        let l = self.extent();
        let target = Vec3::new(0.5 * l, 0.5 * l, self.floor_height + 0.4 * (self.launch_height - self.floor_height));
        hemisphere_cameras(self.cameras, target, 1.6 * l, 0.7, self.image_size, self.image_size)
    }

    /// Mid-range starting guess for every object.
    pub fn initial_guess(&self) -> Vec<MaterialParams> {
        self.objects.iter().map(|o| o.ranges.midpoint(o.family)).collect()
    }

    /// Inputs the identification may use: families and range midpoints, never
    /// the drawn truth.
    pub fn identify_inputs(&self) -> IdentifyInputs {
        IdentifyInputs {
            sim: self.sim(),
            initial_params: self.initial_guess(),
            lift: LiftConfig { target_particle_count: self.particles_per_object, ..self.lift },
            erode_px: self.erode_px,
            seed: self.seed,
        }
    }
}

/// Ground truth kept apart from the observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub params: Vec<MaterialParams>,
    pub v0: Vec<Vec3>,
    pub centers: Vec<Vec3>,
    pub rotations: Vec<Vec3>,
    pub particle_counts: Vec<usize>,
    /// Time at which the ballistic centre paths meet, s.
    pub collision_time: f64,
    pub units: String,
}

#[derive(Clone, Debug)]
pub struct GeneratedScene {
    pub config: SceneConfig,
    pub truth: Truth,
    /// Ground-truth world at frame 0, velocities applied.
    pub world0: WorldState,
    pub shells: Shells,
    pub gt: Trajectory,
    pub obs: ObservationSet,
}

/// Closest approach of two centres under the same gravity: relative motion
/// is linear. Returns `(time, distance)` with time clamped to `[0, t_max]`.
pub fn closest_approach(c0: Vec3, v0: Vec3, c1: Vec3, v1: Vec3, t_max: f64) -> (f64, f64) {
    let (d, w) = (c1 - c0, v1 - v0);
    let ww = w.norm_sq();
    let t = if ww > 0.0 { (-d.dot(&w) / ww).clamp(0.0, t_max) } else { 0.0 };
    (t, (d + w.scale_f(t)).norm())
}

struct Layout {
    centers: Vec<Vec3>,
    velocities: Vec<Vec3>,
    collision_time: f64,
}

fn solve_layout(cfg: &SceneConfig, rng: &mut ChaCha8Rng) -> Result<Layout> {
    let k = cfg.objects.len();
    let radii: Vec<f64> = cfg.objects.iter().map(|o| o.shape.bounding_radius()).collect();
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let l = cfg.extent();
    let g = cfg.sim().gravity;
    let margin = (crate::mpm::DOMAIN_MARGIN + 2.0) * cfg.dx;
    let inside = |p: Vec3, r: f64| {
        [p.x, p.y].iter().all(|&c| c - r > margin && c + r < l - margin) && p.z + r < l - margin
    };
    for _ in 0..COLLISION_ATTEMPTS {
        let gap = uniform(rng, cfg.launch_gap);
        let ring = (2.0 * r_max + gap) / (2.0 * (std::f64::consts::PI / k as f64).sin());
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let centre = Vec3::new(0.5 * l, 0.5 * l, cfg.launch_height);
        let centers: Vec<Vec3> = (0..k)
            .map(|i| {
                cfg.objects[i].center.unwrap_or_else(|| {
                    let a = phase + std::f64::consts::TAU * i as f64 / k as f64;
                    centre + Vec3::new(ring * a.cos(), ring * a.sin(), rng.gen_range(-0.01..0.01))
                })
            })
            .collect();
        let t = uniform(rng, cfg.collision_time);
        let meet = centers.iter().fold(Vec3::ZERO, |a, c| a + *c).scale_f(1.0 / k as f64)
            + Vec3::new(rng.gen_range(-0.005..0.005), rng.gen_range(-0.005..0.005), 0.0);
        let velocities: Vec<Vec3> = (0..k)
            .map(|i| {
                cfg.objects[i]
                    .velocity
                    .unwrap_or_else(|| (meet - centers[i] - g.scale_f(0.5 * t * t)).scale_f(1.0 / t))
            })
            .collect();
        let disjoint = (0..k).all(|i| (i + 1..k).all(|j| (centers[i] - centers[j]).norm() > radii[i] + radii[j]));
        let feasible = (0..k).all(|i| {
            let (c, v, r) = (centers[i], velocities[i], radii[i]);
            let at = |s: f64| c + v.scale_f(s) + g.scale_f(0.5 * s * s);
            let apex = if v.z > 0.0 && g.z < 0.0 { at((-v.z / g.z).min(t)) } else { c };
            v.norm() <= cfg.max_speed && inside(c, r) && inside(apex, r) && at(t).z - r > cfg.floor_height + cfg.dx
        });
        let horizon = cfg.observable_frames as f64 / cfg.fps;
        let hits = |i: usize, j: usize| {
            closest_approach(centers[i], velocities[i], centers[j], velocities[j], horizon).1 < radii[i] + radii[j]
        };
        let collide = (0..k).all(|i| (0..k).any(|j| j != i && hits(i, j)));
        if disjoint && feasible && collide {
            return Ok(Layout { centers, velocities, collision_time: t });
        }
    }
    Err(Error::CollisionInfeasible(COLLISION_ATTEMPTS))
}

/// Particles filling a posed shape: analytic occupancy on a lattice of
/// roughly one voxel per particle, two jittered samples per voxel, thinned to
/// `count`.
pub fn fill(posed: &Posed, params: &MaterialParams, count: usize, object_id: usize, seed: u64) -> Result<Vec<crate::mpm::Particle>> {
    let h = (posed.shape.volume() / count as f64).cbrt();
    let (lo, hi) = posed.bounds();
    let dims = [0, 1, 2].map(|a| ((hi.get(a) - lo.get(a)) / h).ceil() as usize + 1);
    let grid = OccupancyGrid::new(dims, h, lo).from_fn(|x| posed.contains(x));
    let cfg = LiftConfig { samples_per_voxel: 2, target_particle_count: count, ..LiftConfig::default() };
    to_particles(&grid, params, &cfg, object_id, seed)
}

/// Draws, places and simulates a scene, then renders its observations.
pub fn gen_scene(cfg: &SceneConfig) -> Result<GeneratedScene> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params: Vec<MaterialParams> =
        cfg.objects.iter().map(|o| o.params.unwrap_or_else(|| o.ranges.draw(o.family, &mut rng))).collect();
    let rotations: Vec<Vec3> = cfg
        .objects
        .iter()
        .map(|o| {
            o.rotation.unwrap_or_else(|| {
                Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)).scale_f(0.8)
            })
        })
        .collect();
    let layout = solve_layout(cfg, &mut rng)?;
    let mut particles = Vec::with_capacity(cfg.objects.len());
    for (k, o) in cfg.objects.iter().enumerate() {
        let posed = Posed::new(o.shape, layout.centers[k], rotations[k]);
        particles.push(fill(&posed, &params[k], cfg.particles_per_object, k, cfg.seed.wrapping_add(1))?);
    }
    let rest = WorldState::new(cfg.sim(), particles, params.clone())?;
    let world0 = world_with(&rest, &params, &layout.velocities)?;
    let shells = shells_of(&world0);
    let gt = rollout(&mut world0.clone(), cfg.frames, 1)?;
    let cameras = cfg.camera_rig()?;
    let obs = observe_trajectory(&gt.positions, gt.frame_rate, &shells, &cameras, cfg.radius_px)?;
    let truth = Truth {
        seed: cfg.seed,
        params,
        v0: layout.velocities,
        centers: layout.centers,
        rotations,
        particle_counts: world0.particles.iter().map(Vec::len).collect(),
        collision_time: layout.collision_time,
        units: "m".into(),
    };
    Ok(GeneratedScene { config: cfg.clone(), truth, world0, shells, gt, obs })
}
