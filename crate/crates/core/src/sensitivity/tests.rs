use super::*;
use crate::materials::MaterialFamily;
use crate::mpm::{rollout, GridSpec, Particle, SimConfig};

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

fn scene(families: &[MaterialFamily]) -> WorldState {
    let mut cfg = SimConfig::default().with_timing(24.0, 100);
    cfg.grid = GridSpec { dims: [24, 24, 24], dx: 0.01, origin: Vec3::ZERO };
    cfg.floor_height = 0.04;
    let mut parts = Vec::new();
    let mut params = Vec::new();
    for (k, &fam) in families.iter().enumerate() {
        let c = Vec3::new(0.09 + 0.05 * k as f64, 0.12, 0.065 + 0.01 * k as f64);
        parts.push(block(c, 4, 0.0051, k));
        let mut p = MaterialParams::new(fam);
        p.youngs_modulus = 2e4;
        params.push(p);
    }
    WorldState::new(cfg, parts, params).unwrap()
}

fn velocities(k: usize, vz: f64) -> Vec<Vec3> {
    (0..k).map(|i| Vec3::new(if i == 0 { 0.3 } else { -0.25 }, 0.05, vz)).collect()
}

fn tracking_target(world: &WorldState, pv: &ParamVector) -> TrackingObjective {
    let mut w = build_world::<f64>(world, pv).unwrap();
    let traj = rollout(&mut w, 2, 1).unwrap();
    TrackingObjective { targets: traj.positions }
}

#[test]
fn encode_examples() {
    let mut p = MaterialParams::new(MaterialFamily::Elastic);
    p.youngs_modulus = 1e4;
    let pv = ParamVector::encode(&[p], &[Vec3::ZERO], Stage::Physics).unwrap();
    assert_eq!(pv.entries[0], 4.0);
    assert_eq!(pv.num_active(), 3);

    let fams = [MaterialFamily::Plasticine, MaterialFamily::Sand];
    let params: Vec<_> = fams.iter().map(|&f| MaterialParams::new(f)).collect();
    let pv = ParamVector::encode(&params, &velocities(2, -0.4), Stage::Velocity).unwrap();
    assert_eq!(pv.num_active(), 6);
    let (back, v0) = pv.decode(&params).unwrap();
    for (a, b) in back.iter().zip(&params) {
        for (x, y) in [
            (a.youngs_modulus, b.youngs_modulus),
            (a.poisson_ratio, b.poisson_ratio),
            (a.yield_stress, b.yield_stress),
            (a.friction_angle, b.friction_angle),
            (a.contact_friction, b.contact_friction),
        ] {
            assert!((x - y).abs() <= 1e-12 * y.abs());
        }
    }
    assert_eq!(v0, velocities(2, -0.4));
}

#[test]
fn decode_seeds_active_tangents_in_order() {
    let params = [MaterialParams::new(MaterialFamily::Elastic)];
    let pv = ParamVector::encode(&params, &[Vec3::new(1.0, 2.0, 3.0)], Stage::Velocity).unwrap();
    let (p, v) = pv.decode_tracked::<Dual<3>>(&params).unwrap();
    assert_eq!(p[0].youngs_modulus.d, [0.0; 3]);
    assert_eq!(v[0].y.d, [0.0, 1.0, 0.0]);
    // d E / d log10 E = E ln 10
    let (p, _) = pv.with_stage(Stage::Physics).decode_tracked::<Dual<3>>(&params).unwrap();
    let e = p[0].youngs_modulus;
    assert!((e.d[0] - e.v * std::f64::consts::LN_10).abs() < 1e-9 * e.v);
}

#[test]
fn no_active_entries_gives_plain_loss() {
    let world = scene(&[MaterialFamily::Elastic]);
    let mut pv = ParamVector::encode(&world.params, &velocities(1, -0.4), Stage::Velocity).unwrap();
    let obj = tracking_target(&world, &pv);
    pv.slots.clear();
    pv.entries.clear();
    // a vector with no slots decodes to the templates at rest
    let report = loss_and_grad(&world, &obj, &pv).unwrap();
    assert!(report.grad.is_empty());
    assert_eq!(report.loss, loss_value(&world, &obj, &pv).unwrap());
}

fn check_fd(families: &[MaterialFamily], stage: Stage, vz: f64) {
    let world = scene(families);
    let truth = ParamVector::encode(&world.params, &velocities(families.len(), vz), Stage::Physics).unwrap();
    let obj = tracking_target(&world, &truth);
    let mut pv = truth.with_stage(stage);
    let mut shifted = pv.active_values();
    for (i, v) in shifted.iter_mut().enumerate() {
        *v += 0.05 + 0.02 * i as f64;
    }
    pv.set_active_values(&shifted);
    let report = loss_and_grad(&world, &obj, &pv).unwrap();
    let fd = finite_difference(&world, &obj, &pv, FD_STEP).unwrap();
    assert_eq!(report.loss, loss_value(&world, &obj, &pv).unwrap());
    for (j, (g, f)) in report.grad.iter().zip(&fd).enumerate() {
        let scale = report.grad.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(relative_error(*g, *f, 1e-6 * scale) < 1e-3, "entry {j}: dual {g} vs fd {f}");
    }
}

#[test]
fn velocity_gradient_matches_fd() {
    // rising block: no floor or wall contact within the horizon
    check_fd(&[MaterialFamily::Elastic], Stage::Velocity, 0.1);
}

#[test]
fn material_gradient_matches_fd() {
    check_fd(&[MaterialFamily::Elastic, MaterialFamily::Plasticine], Stage::Physics, -0.4);
}

struct Weighted<'a>(&'a TrackingObjective, &'a TrackingObjective, f64, f64);

impl Objective for Weighted<'_> {
    fn horizon(&self) -> usize {
        self.0.horizon()
    }
    fn frame_loss<S: Real>(&self, frame: usize, positions: &[Vec<Vec3<S>>]) -> Result<S> {
        Ok(self.0.frame_loss(frame, positions)? * self.2 + self.1.frame_loss(frame, positions)? * self.3)
    }
}

#[test]
fn gradient_is_linear_in_the_loss() {
    let world = scene(&[MaterialFamily::Elastic]);
    let pv = ParamVector::encode(&world.params, &velocities(1, -0.4), Stage::Velocity).unwrap();
    let mut other = pv.clone();
    other.entries[3] += 0.1;
    let (l1, l2) = (tracking_target(&world, &other), tracking_target(&world, &pv.with_stage(Stage::Physics)));
    let mut moved = pv.clone();
    moved.entries[5] -= 0.2;
    let g1 = loss_and_grad(&world, &l1, &moved).unwrap().grad;
    let g2 = loss_and_grad(&world, &l2, &moved).unwrap().grad;
    let g = loss_and_grad(&world, &Weighted(&l1, &l2, 2.0, -0.5), &moved).unwrap().grad;
    for j in 0..g.len() {
        let want = 2.0 * g1[j] - 0.5 * g2[j];
        assert!((g[j] - want).abs() <= 1e-10 * want.abs().max(1e-12));
    }
}
