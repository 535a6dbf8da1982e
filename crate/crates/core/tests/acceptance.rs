//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! The recovery experiments (criteria 6, 7 and 9) run on `scenes/small.json`
//! by default; set `ACCEPTANCE_FULL_SCALE=1` to use the full default scene,
//! which takes days on one core. The process exits 0 whatever the verdicts;
//! a criterion that errors is reported as FAIL with the error.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use mpm_sysid::bench::{self, eval, gen_scene, read_json, EvalReport, GeneratedScene, SceneConfig, TrajectoryFile};
use mpm_sysid::lifting::{enforce_disjoint, hull_interior, lattice_in, refine_occupancy_in, LiftConfig, OccupancyGrid};
use mpm_sysid::materials::{
    drucker_prager_yield, lame_from, return_map_drucker_prager, return_map_von_mises, MaterialFamily, MaterialParams,
};
use mpm_sysid::mpm::{rollout, step, GridSpec, Particle, SimConfig, WorldState};
use mpm_sysid::observe::{chamfer, chamfer_brute_force, emd, hemisphere_cameras, Camera, Silhouette};
use mpm_sysid::sensitivity::{
    build_world, finite_difference, loss_and_grad, relative_error, ParamVector, Stage, TrackingObjective, FD_STEP,
};
use mpm_sysid::sysid::{identify, swap_materials, world_with, FitConfig, FitResult, Granularity};
use mpm_sysid::tensor3::{hencky, svd3, Mat3, Vec3};
use mpm_sysid::Result;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn report(n: usize, name: &str, outcome: Result<Verdict>, started: Instant) {
    print_line(n, name, outcome.map_err(|e| e.to_string()), started.elapsed().as_secs_f64());
}

fn print_line(n: usize, name: &str, outcome: std::result::Result<Verdict, String>, secs: f64) {
    match outcome {
        Ok(v) => println!("{} {n}. {name}: {} ({secs:.1} s)", if v.pass { "PASS" } else { "FAIL" }, v.detail),
        Err(e) => println!("FAIL {n}. {name}: error {e} ({secs:.1} s)"),
    }
}

fn block(center: Vec3, n: usize, spacing: f64, object: usize) -> Vec<Particle> {
    let vol = spacing.powi(3);
    let half = (n as f64 - 1.0) * 0.5;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let off = Vec3::new(i as f64 - half, j as f64 - half, k as f64 - half).scale_f(spacing);
                out.push(Particle::at_rest(center + off, Vec3::ZERO, 1000.0 * vol, vol, object));
            }
        }
    }
    out
}

// ---------------------------------------------------------------- 1

fn gradient_world(family: MaterialFamily, center_z: f64) -> Result<WorldState> {
    let mut cfg = SimConfig::default().with_timing(24.0, 100);
    cfg.grid = GridSpec { dims: [24, 24, 24], dx: 0.01, origin: Vec3::ZERO };
    cfg.floor_height = 0.04;
    let mut p = MaterialParams::new(family);
    p.youngs_modulus = 2e4;
    p.bulk_modulus = 2e4;
    WorldState::new(cfg, vec![block(Vec3::new(0.12, 0.12, center_z), 4, 0.0051, 0)], vec![p])
}

fn stage_error(family: MaterialFamily, stage: Stage, center_z: f64, v0: Vec3) -> Result<f64> {
    let world = gradient_world(family, center_z)?;
    let truth = ParamVector::encode(&world.params, &[v0], Stage::Physics)?;
    let targets = rollout(&mut build_world::<f64>(&world, &truth)?, 2, 1)?.positions;
    let objective = TrackingObjective { targets };
    let mut pv = truth.with_stage(stage);
    // a staggered shift (0.05 + 0.02 i) puts a plasticine particle within 1e-4 of the yield surface
    let shifted: Vec<f64> = pv.active_values().iter().map(|v| v + 0.05).collect();
    pv.set_active_values(&shifted);
    let analytic = loss_and_grad(&world, &objective, &pv)?.grad;
    let fd = finite_difference(&world, &objective, &pv, FD_STEP)?;
    let scale = analytic.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    Ok(analytic.iter().zip(&fd).map(|(a, f)| relative_error(*a, *f, 1e-6 * scale)).fold(0.0, f64::max))
}

/// Worst relative error over both stages for one family. Materials are
/// checked on a block that lands on the floor, so every material entry
/// matters; velocities on a block that stays airborne, because a velocity
/// step of FD size moves grid nodes across the floor clamp.
fn worst_gradient_error(family: MaterialFamily) -> Result<f64> {
    let physics = stage_error(family, Stage::Physics, 0.065, Vec3::new(0.3, 0.05, -0.4))?;
    let velocity = stage_error(family, Stage::Velocity, 0.14, Vec3::new(0.3, 0.05, 0.1))?;
    Ok(physics.max(velocity))
}

fn gradient_correctness() -> Result<Verdict> {
    let families =
        [MaterialFamily::Elastic, MaterialFamily::Plasticine, MaterialFamily::Sand, MaterialFamily::NewtonianFluid];
    let mut parts = Vec::new();
    let mut pass = true;
    for fam in families {
        let worst = worst_gradient_error(fam)?;
        pass &= worst < 1e-3;
        parts.push(format!("{} {worst:.1e}", fam.name()));
    }
    Ok(verdict(pass, format!("worst relative error {}", parts.join(", "))))
}

// ---------------------------------------------------------------- 2

fn conservation() -> Result<Verdict> {
    let mut cfg = SimConfig::default().with_timing(24.0, 200);
    cfg.grid = GridSpec { dims: [32, 32, 32], dx: 0.01, origin: Vec3::ZERO };
    cfg.floor_height = -1.0;
    cfg.gravity = Vec3::ZERO;
    let mut parts = block(Vec3::splat(0.15), 5, 0.005, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for p in &mut parts {
        p.v = Vec3::new(0.2, -0.1, 0.05) + Vec3::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1));
    }
    let mut w = WorldState::new(cfg, vec![parts], vec![MaterialParams::new(MaterialFamily::Elastic)])?;
    let (m0, p0) = (w.total_mass(0), w.total_momentum());
    for _ in 0..100 {
        step(&mut w)?;
    }
    let drift = (w.total_momentum() - p0).norm() / p0.norm();
    let mass_exact = w.total_mass(0) == m0;
    Ok(verdict(drift < 1e-8 && mass_exact, format!("momentum drift {drift:.1e}, mass exact {mass_exact}")))
}

// ---------------------------------------------------------------- 3

fn random_rotation(rng: &mut ChaCha8Rng) -> Mat3 {
    let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let axis = if axis.norm() < 1e-3 { Vec3::new(0.0, 0.0, 1.0) } else { axis.normalized() };
    Mat3::rotation(axis, rng.gen_range(0.0..std::f64::consts::TAU))
}

fn random_trial(rng: &mut ChaCha8Rng) -> Mat3 {
    let s = [rng.gen_range(0.7..1.4), rng.gen_range(0.7..1.4), rng.gen_range(0.7..1.4)];
    random_rotation(rng).mul_diag_mul_t(&s, &random_rotation(rng))
}

fn principal_strain(f: &Mat3) -> Result<Vec3> {
    hencky(&svd3(f))
}

fn deviatoric_norm(eps: &Vec3) -> f64 {
    let mean = (eps.x + eps.y + eps.z) / 3.0;
    Vec3::new(eps.x - mean, eps.y - mean, eps.z - mean).norm()
}

fn return_maps() -> Result<Verdict> {
    const TRIALS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut vm_radius, mut vm_idem, mut yielded) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..TRIALS {
        let lame = lame_from(rng.gen_range(1e4..1e6), rng.gen_range(0.1..0.4))?;
        let radius = rng.gen_range(0.01..0.1);
        let tau = radius * 2.0 * lame.mu;
        let f = random_trial(&mut rng);
        let out = return_map_von_mises(&f, &lame, tau)?;
        if deviatoric_norm(&principal_strain(&f)?) > radius {
            yielded += 1;
            vm_radius = vm_radius.max((deviatoric_norm(&principal_strain(&out)?) - radius).abs());
        }
        vm_idem = vm_idem.max(return_map_von_mises(&out, &lame, tau)?.max_abs_diff(&out));
    }
    let (mut dp_trace, mut dp_yield, mut dp_idem) = (f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..TRIALS {
        let lame = lame_from(rng.gen_range(1e4..1e6), rng.gen_range(0.1..0.4))?;
        let angle: f64 = rng.gen_range(20f64..45.0).to_radians();
        let alpha = (2.0f64 / 3.0).sqrt() * 2.0 * angle.sin() / (3.0 - angle.sin());
        let out = return_map_drucker_prager(&random_trial(&mut rng), &lame, angle)?;
        let eps = principal_strain(&out)?;
        dp_trace = dp_trace.max(eps.x + eps.y + eps.z);
        dp_yield = dp_yield.max(drucker_prager_yield(&eps, &lame, alpha));
        dp_idem = dp_idem.max(return_map_drucker_prager(&out, &lame, angle)?.max_abs_diff(&out));
    }
    // the trace of log singular values of an exact rotation is rounding noise
    let pass = vm_radius <= 1e-8 && vm_idem <= 1e-10 && dp_trace <= 1e-12 && dp_yield <= 1e-8 && dp_idem <= 1e-10;
    Ok(verdict(
        pass,
        format!(
            "von Mises {yielded} yielded, radius error {vm_radius:.1e}, idempotence {vm_idem:.1e}; \
             Drucker-Prager max trace {dp_trace:.1e}, max yield {dp_yield:.1e}, idempotence {dp_idem:.1e}"
        ),
    ))
}

// ---------------------------------------------------------------- 4

fn ballistic() -> Result<Verdict> {
    let mut cfg = SimConfig::default().with_timing(24.0, 200);
    cfg.grid = GridSpec { dims: [16, 16, 96], dx: 0.1, origin: Vec3::ZERO };
    cfg.floor_height = -1.0;
    let (x0, v0) = (Vec3::new(0.75, 0.8, 8.5), Vec3::new(0.05, -0.02, 1.0));
    let p = Particle::at_rest(x0, v0, 1.0, 1e-3, 0);
    let mut w = WorldState::new(cfg, vec![vec![p]], vec![MaterialParams::new(MaterialFamily::Elastic)])?;
    let n = 4800;
    for _ in 0..n {
        step(&mut w)?;
    }
    let t = n as f64 * cfg.dt;
    let analytic = x0 + v0.scale_f(t) + cfg.gravity.scale_f(0.5 * t * t);
    let err = w.particles[0][0].x.distance(&analytic);
    Ok(verdict(
        err < 1e-4,
        format!("error {err:.2e} m after 1 s; symplectic Euler lags the parabola by g dt t / 2 = {:.2e} m", 0.5 * 9.8 * cfg.dt * t),
    ))
}

// ---------------------------------------------------------------- 5

/// Reference assignment by successive shortest augmenting paths found with
/// Bellman-Ford on the residual graph.
fn min_cost_matching(cost: &[f64], n: usize) -> f64 {
    let mut row_of = vec![usize::MAX; n];
    let mut col_of = vec![usize::MAX; n];
    for _ in 0..n {
        let mut dist_row: Vec<f64> = (0..n).map(|i| if col_of[i] == usize::MAX { 0.0 } else { f64::INFINITY }).collect();
        let mut dist_col = vec![f64::INFINITY; n];
        let mut prev_row = vec![usize::MAX; n];
        loop {
            let mut changed = false;
            for i in 0..n {
                if dist_row[i].is_infinite() {
                    continue;
                }
                for j in 0..n {
                    if col_of[i] == j {
                        continue;
                    }
                    let d = dist_row[i] + cost[i * n + j];
                    if d < dist_col[j] {
                        dist_col[j] = d;
                        prev_row[j] = i;
                        changed = true;
                    }
                }
            }
            for j in 0..n {
                let i = row_of[j];
                if i != usize::MAX && dist_col[j].is_finite() {
                    let d = dist_col[j] - cost[i * n + j];
                    if d < dist_row[i] {
                        dist_row[i] = d;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut j = (0..n).filter(|&j| row_of[j] == usize::MAX).min_by(|&a, &b| dist_col[a].total_cmp(&dist_col[b])).unwrap();
        loop {
            let i = prev_row[j];
            let next = col_of[i];
            row_of[j] = i;
            col_of[i] = j;
            if next == usize::MAX {
                break;
            }
            j = next;
        }
    }
    (0..n).map(|i| cost[i * n + col_of[i]]).sum::<f64>() / n as f64
}

fn random_set(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec3> {
    (0..n).map(|_| Vec3::new(rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1), rng.gen_range(0.0..0.1))).collect()
}

fn metric_oracles() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut cd_mismatch, mut emd_err) = (0usize, 0.0f64);
    for _ in 0..100 {
        let (na, nb) = (rng.gen_range(1..=64), rng.gen_range(1..=64));
        let (a, b) = (random_set(&mut rng, na), random_set(&mut rng, nb));
        if chamfer(&a, &b)? != chamfer_brute_force(&a, &b)? {
            cd_mismatch += 1;
        }
        let b = &b[..na.min(nb)];
        let a = &a[..na.min(nb)];
        let n = a.len();
        let cost: Vec<f64> = a.iter().flat_map(|p| b.iter().map(move |q| p.distance(q))).collect();
        let reference = min_cost_matching(&cost, n);
        emd_err = emd_err.max((emd(a, b, 64)? - reference).abs() / reference.max(1e-300));
    }
    // both routes sum the same distances in different orders
    Ok(verdict(
        cd_mismatch == 0 && emd_err <= 1e-12,
        format!("chamfer mismatches {cd_mismatch}/100, worst EMD relative difference {emd_err:.1e}"),
    ))
}

// ---------------------------------------------------------------- 8

fn ray_cast(cam: &Camera, hits: &dyn Fn(Vec3, Vec3) -> bool) -> Silhouette {
    let mut m = Silhouette::empty(cam.width, cam.height);
    let eye = cam.eye();
    let rt = cam.rotation.transpose();
    for y in 0..cam.height {
        for x in 0..cam.width {
            let d = rt.mul_vec(&Vec3::new((x as f64 - cam.cx) / cam.fx, (y as f64 - cam.cy) / cam.fy, 1.0));
            m.data[y * cam.width + x] = hits(eye, d.normalized()) as u8;
        }
    }
    m
}

fn lift_iou(lo: Vec3, hi: Vec3, hits: &dyn Fn(Vec3, Vec3) -> bool, inside: &dyn Fn(&Vec3) -> bool) -> Result<f64> {
    let c = (lo + hi).scale_f(0.5);
    let cams = hemisphere_cameras(11, c, 0.35, 0.5, 128, 128)?;
    let masks: Vec<Silhouette> = cams.iter().map(|cam| ray_cast(cam, hits)).collect();
    let cfg = LiftConfig::default();
    let base = OccupancyGrid::frame(lo, hi, &cfg);
    let fine = (0..cfg.levels).fold(base.clone(), |g, _| g.upsampled());
    let rough = hull_interior(&lattice_in(&fine, lo, hi), &masks, &cams, 0.0)?;
    let g = refine_occupancy_in(&rough, base, &cfg)?;
    g.iou(&g.from_fn(inside))
}

fn lifting_fidelity() -> Result<Verdict> {
    let (c, r) = (Vec3::new(0.2, 0.2, 0.15), 0.05);
    let sphere_hits = move |o: Vec3, d: Vec3| (o + d.scale_f((c - o).dot(&d))).distance(&c) <= r;
    let sphere = lift_iou(c - Vec3::splat(r), c + Vec3::splat(r), &sphere_hits, &move |p| p.distance(&c) <= r)?;

    let (lo, hi) = (Vec3::new(0.15, 0.16, 0.1), Vec3::new(0.23, 0.24, 0.18));
    let cube_hits = move |o: Vec3, d: Vec3| {
        let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
        for a in 0..3 {
            let (ta, tb) = ((lo.get(a) - o.get(a)) / d.get(a), (hi.get(a) - o.get(a)) / d.get(a));
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        t0 <= t1
    };
    let cube_inside = move |p: &Vec3| (0..3).all(|a| p.get(a) >= lo.get(a) && p.get(a) <= hi.get(a));
    let cube = lift_iou(lo, hi, &cube_hits, &cube_inside)?;

    let frame = OccupancyGrid::frame(Vec3::ZERO, Vec3::splat(0.2), &LiftConfig::default()).upsampled();
    let (ca, cb) = (Vec3::new(0.08, 0.1, 0.1), Vec3::new(0.13, 0.1, 0.1));
    let grids = [frame.from_fn(|p| p.distance(&ca) < 0.04), frame.from_fn(|p| p.distance(&cb) < 0.04)];
    let overlap_before = (0..frame.density.len()).filter(|&v| grids.iter().all(|g| g.is_occupied(v))).count();
    let out = enforce_disjoint(&grids, &[vec![ca], vec![cb]])?;
    let multiply = (0..frame.density.len()).filter(|&v| out.iter().filter(|g| g.is_occupied(v)).count() > 1).count();
    Ok(verdict(
        sphere >= 0.95 && cube >= 0.95 && multiply == 0,
        format!("IoU sphere {sphere:.3}, cube {cube:.3}; {overlap_before} overlapping voxels, {multiply} after enforce_disjoint"),
    ))
}

// ---------------------------------------------------------------- 6, 7, 9

struct Experiment {
    scene: GeneratedScene,
    gt: TrajectoryFile,
}

impl Experiment {
    fn rollout(&self, world: &WorldState) -> Result<TrajectoryFile> {
        Ok(TrajectoryFile::from_trajectory(&rollout(&mut world.clone(), self.scene.config.frames, 1)?))
    }

    fn eval(&self, pred: &TrajectoryFile) -> Result<EvalReport> {
        eval(pred, &self.gt, self.scene.config.observable_frames)
    }

    fn fit(&self, granularity: Granularity, use_cd: bool, use_alpha: bool) -> Result<FitResult> {
        let cfg = &self.scene.config;
        let mut fit_cfg: FitConfig = cfg.fit.clone();
        fit_cfg.loss.granularity = granularity;
        fit_cfg.loss.use_cd = use_cd;
        fit_cfg.loss.use_alpha = use_alpha;
        identify(&cfg.identify_inputs(), &self.scene.obs, &fit_cfg)
    }
}

fn fitted_world(fit: &FitResult) -> Result<WorldState> {
    fit.world.clone().ok_or_else(|| mpm_sysid::Error::config("fit result carries no world"))
}

fn future_cd(report: &EvalReport) -> f64 {
    report.future.as_ref().map_or(f64::NAN, |s| s.cd)
}

fn parameter_recovery(exp: &Experiment, fit: &FitResult) -> Result<Verdict> {
    let truth = &exp.scene.truth;
    let mut pass = true;
    let mut parts = Vec::new();
    for (k, (hat, tru)) in fit.params_hat.iter().zip(&truth.params).enumerate() {
        let de = (hat.youngs_modulus.log10() - tru.youngs_modulus.log10()).abs();
        pass &= de <= 0.15;
        parts.push(format!("obj {k} {} |dlog10 E| {de:.3}", hat.family.name()));
        if matches!(hat.family, MaterialFamily::Plasticine | MaterialFamily::Snow) {
            let rel = (hat.yield_stress - tru.yield_stress).abs() / tru.yield_stress;
            pass &= rel <= 0.25;
            parts.push(format!("tau_Y rel {rel:.3}"));
        }
        let dv = (0..3).map(|a| (fit.v0_hat[k].get(a) - truth.v0[k].get(a)).abs()).fold(0.0, f64::max);
        pass &= dv <= 0.05;
        parts.push(format!("max |dv0| {dv:.3} m/s"));
    }
    let world = fitted_world(fit)?;
    let fitted = future_cd(&exp.eval(&exp.rollout(&world)?)?);
    let initial = future_cd(&exp.eval(&exp.rollout(&world_with(&world, &fit.initial_params, &fit.initial_v0)?)?)?);
    pass &= fitted * 5.0 <= initial;
    parts.push(format!("future CD fitted {fitted:.4} vs initial guess {initial:.4} (ratio {:.2})", initial / fitted));
    Ok(verdict(pass, parts.join(", ")))
}

fn ablation(exp: &Experiment, object: &FitResult) -> Result<Verdict> {
    let cd_of = |fit: &FitResult| -> Result<f64> { Ok(future_cd(&exp.eval(&exp.rollout(&fitted_world(fit)?)?)?)) };
    let full = cd_of(object)?;
    let scene = cd_of(&exp.fit(Granularity::SceneWise, true, true)?)?;
    let cd_only = cd_of(&exp.fit(Granularity::ObjectWise, true, false)?)?;
    let alpha_only = cd_of(&exp.fit(Granularity::ObjectWise, false, true)?)?;
    Ok(verdict(
        full < scene && full < cd_only && full < alpha_only,
        format!("future CD object CD+alpha {full:.4}, scene CD+alpha {scene:.4}, CD only {cd_only:.4}, alpha only {alpha_only:.4}"),
    ))
}

fn novel_interaction(exp: &Experiment, fit: &FitResult) -> Result<Verdict> {
    let fitted = exp.rollout(&fitted_world(fit)?)?;
    let residual = exp.eval(&fitted)?.observable.cd;
    let swapped = exp.rollout(&swap_materials(fit, &[1, 0])?)?;
    let divergence = eval(&swapped, &fitted, exp.scene.config.frames)?.observable.cd;
    let identity = exp.rollout(&swap_materials(fit, &[0, 1])?)?;
    let bitwise = identity.to_bytes()? == fitted.to_bytes()?;
    Ok(verdict(
        divergence > 10.0 * residual && bitwise,
        format!("swapped vs fitted CD {divergence:.4}, fitted residual {residual:.4}, identity bitwise {bitwise}"),
    ))
}

// ---------------------------------------------------------------- 10

fn determinism() -> Result<Verdict> {
    std::env::set_var(bench::THREADS_ENV, "1");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/tiny.json");
    let dir = tempfile::tempdir().map_err(|e| mpm_sysid::Error::config(e.to_string()))?;
    let s = |p: &Path| p.to_str().unwrap_or_default().to_string();
    let mut outputs = Vec::new();
    // identical command lines both times; fit.json records the scene path
    let d = dir.path().join("run");
    for _ in 0..2 {
        if d.exists() {
            std::fs::remove_dir_all(&d).map_err(|e| mpm_sysid::Error::config(e.to_string()))?;
        }
        let (scene, fit, pred) = (d.join("scene"), d.join("fit.json"), d.join("pred.msv"));
        let steps: [Vec<String>; 3] = [
            vec!["gen".into(), "--config".into(), s(&config), "--out".into(), s(&scene)],
            vec!["fit".into(), "--scene".into(), s(&scene), "--out".into(), s(&fit)],
            vec!["sim".into(), "--scene".into(), s(&scene), "--params".into(), s(&fit), "--frames".into(), "6".into(), "--out".into(), s(&pred)],
        ];
        for args in steps {
            let code = bench::run(std::iter::once("mpm-sysid".to_string()).chain(args.clone()));
            if code != 0 {
                return Ok(verdict(false, format!("{} exited {code}", args[0])));
            }
        }
        let mut files = vec![scene.join("gt.msv"), scene.join("truth.json"), fit, pred];
        let mut obs: Vec<_> = std::fs::read_dir(scene.join("obs")).map_err(|e| mpm_sysid::Error::config(e.to_string()))?.filter_map(|e| e.ok().map(|e| e.path())).collect();
        obs.sort();
        files.extend(obs);
        let bytes: Vec<Vec<u8>> = files.iter().map(|f| std::fs::read(f).unwrap_or_default()).collect();
        outputs.push(bytes);
    }
    let same = outputs[0] == outputs[1];
    Ok(verdict(same, format!("{} files compared across two gen/fit/sim runs, identical {same}", outputs[0].len())))
}

fn scene_config() -> Result<SceneConfig> {
    if std::env::var("ACCEPTANCE_FULL_SCALE").is_ok_and(|v| v == "1") {
        return Ok(SceneConfig::default());
    }
    read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/small.json"))
}

fn main() {
    let t = Instant::now();
    report(1, "gradient correctness", gradient_correctness(), t);
    let t = Instant::now();
    report(2, "conservation", conservation(), t);
    let t = Instant::now();
    report(3, "return-map post-conditions", return_maps(), t);
    let t = Instant::now();
    report(4, "ballistic accuracy", ballistic(), t);
    let t = Instant::now();
    report(5, "metric oracles", metric_oracles(), t);

    let t = Instant::now();
    let lifting = lifting_fidelity().map_err(|e| e.to_string());
    let lifting_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let experiment = scene_config().and_then(|cfg| {
        let scene = gen_scene(&cfg)?;
        let gt = TrajectoryFile::from_trajectory(&scene.gt);
        Ok(Experiment { scene, gt })
    });
    let fit = experiment.as_ref().map_err(|e| e.to_string()).and_then(|exp| {
        exp.fit(Granularity::ObjectWise, true, true).map_err(|e| e.to_string())
    });
    match (&experiment, fit) {
        (Ok(exp), Ok(fit)) => {
            report(6, "parameter recovery", parameter_recovery(exp, &fit), t);
            let t = Instant::now();
            report(7, "ablation direction", ablation(exp, &fit), t);
            print_line(8, "lifting fidelity", lifting, lifting_secs);
            let t = Instant::now();
            report(9, "novel interaction", novel_interaction(exp, &fit), t);
        }
        (_, Err(e)) => {
            let secs = t.elapsed().as_secs_f64();
            print_line(6, "parameter recovery", Err(e.clone()), secs);
            print_line(7, "ablation direction", Err(e.clone()), secs);
            print_line(8, "lifting fidelity", lifting, lifting_secs);
            print_line(9, "novel interaction", Err(e), secs);
        }
        (Err(_), Ok(_)) => unreachable!("a fit needs a scene"),
    }
    let t = Instant::now();
    report(10, "determinism", determinism(), t);
}
