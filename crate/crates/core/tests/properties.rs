//! Property tests for the library invariants.

use mpm_sysid::bench::{eval_with, TrajectoryFile};
use mpm_sysid::lifting::{enforce_disjoint, refine_occupancy, LiftConfig, OccupancyGrid};
use mpm_sysid::materials::{
    friction_pair, kirchhoff_neohookean, kirchhoff_stvk_hencky, lame_from, return_map_drucker_prager,
    return_map_von_mises,
};
use mpm_sysid::mpm::{rollout, GridSpec, Particle, SimConfig, WorldState};
use mpm_sysid::observe::{chamfer, chamfer_brute_force, emd, hungarian, matched_mean_distance};
use mpm_sysid::sysid::{loss_id, AdamState, Granularity, LossConfig};
use mpm_sysid::tensor3::{svd3, Dual, Mat3, Real, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

fn points(r: f64, n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec3>> {
    prop::collection::vec(vec3(r), n)
}

fn mat3(r: f64) -> impl Strategy<Value = Mat3> {
    prop::array::uniform9(-r..r).prop_map(|a| Mat3::from_rows([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]]))
}

/// Deformation gradient near the identity with positive determinant.
fn deformation() -> impl Strategy<Value = Mat3> {
    mat3(0.3).prop_map(|d| Mat3::identity() + d).prop_filter("det > 0.2", |f| f.det() > 0.2)
}

fn rotation() -> impl Strategy<Value = Mat3> {
    (vec3(1.0), -3.0..3.0f64)
        .prop_filter("axis", |(a, _)| a.norm() > 0.1)
        .prop_map(|(a, t)| Mat3::rotation(a, t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn svd_reconstructs_with_rotations(m in mat3(2.0), rank in 0usize..4) {
        let mut m = m;
        // knock out rows to reach lower ranks
        for r in 0..(3 - rank.min(3)) {
            m.m[r] = [0.0; 3];
        }
        let s = svd3(&m);
        let scale = m.frobenius().max(1e-300);
        prop_assert!(s.reconstruct().max_abs_diff(&m) <= 1e-8 * scale.max(1.0));
        prop_assert!((s.u.det() - 1.0).abs() < 1e-9 && (s.v.det() - 1.0).abs() < 1e-9);
        let again = svd3(&m);
        prop_assert_eq!(s, again);
    }

    #[test]
    fn dual_chain_matches_central_differences(x in 0.2..2.0f64, depth in 1usize..20) {
        let f = |x: Dual<1>| {
            let mut y = x;
            for i in 0..depth {
                y = match i % 4 {
                    0 => (y * 0.7).sin() + y * 0.5,
                    1 => (y.sq() + 1.0).sqrt(),
                    2 => (y * 0.3).exp() - y * 0.1,
                    _ => (y.abs() + 0.5).ln() + y,
                };
            }
            y
        };
        let d = f(Dual::<1>::seed(x, 0)).d[0];
        let h = 1e-6;
        let fd = (f(Dual::cst(x + h)).v - f(Dual::cst(x - h)).v) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6 * d.abs().max(fd.abs()).max(1e-3), "{} vs {}", d, fd);
    }

    #[test]
    fn stress_is_symmetric_and_rotation_equivariant(f in deformation(), r in rotation(), nu in 0.1..0.45f64) {
        let lame = lame_from(1e4, nu).unwrap();
        for law in [kirchhoff_neohookean::<f64>, kirchhoff_stvk_hencky::<f64>] {
            let tau = law(&f, &lame).unwrap();
            prop_assert!(tau.max_abs_diff(&tau.transpose()) == 0.0);
            let rotated = law(&r.mul_mat(&f), &lame).unwrap();
            let expected = r.mul_mat(&tau).mul_mat(&r.transpose());
            prop_assert!(rotated.max_abs_diff(&expected) <= 1e-8 * tau.frobenius().max(1.0));
        }
        prop_assert_eq!(kirchhoff_neohookean(&Mat3::identity(), &lame).unwrap(), Mat3::zero());
    }

    #[test]
    fn return_maps_are_idempotent(f in deformation(), strain in 0.005..0.05f64, angle in 0.2..1.0f64) {
        let lame = lame_from(1e4, 0.3).unwrap();
        let once = return_map_von_mises(&f, &lame, 2.0 * lame.mu * strain).unwrap();
        let twice = return_map_von_mises(&once, &lame, 2.0 * lame.mu * strain).unwrap();
        prop_assert!(once.max_abs_diff(&twice) <= 1e-10);
        let once = return_map_drucker_prager(&f, &lame, angle).unwrap();
        let twice = return_map_drucker_prager(&once, &lame, angle).unwrap();
        prop_assert!(once.max_abs_diff(&twice) <= 1e-10);
    }

    #[test]
    fn friction_pair_is_symmetric_and_monotone(a in 0.0..2.0f64, b in 0.0..2.0f64, d in 0.0..1.0f64) {
        prop_assert_eq!(friction_pair(a, b), friction_pair(b, a));
        prop_assert!(friction_pair(a + d, b) >= friction_pair(a, b));
    }

    #[test]
    fn chamfer_is_a_symmetric_premetric(a in points(1.0, 1..40), b in points(1.0, 1..40)) {
        let ab = chamfer(&a, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, chamfer(&b, &a).unwrap());
        prop_assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, chamfer_brute_force(&a, &b).unwrap());
    }

    #[test]
    fn object_wise_chamfer_dominates_scene_wise(
        a0 in points(0.1, 1..12), a1 in points(0.1, 1..12),
        b0 in points(0.1, 1..12), b1 in points(0.1, 1..12),
    ) {
        let traj = mpm_sysid::mpm::Trajectory { frame_rate: 24.0, frames: vec![0], positions: vec![vec![a0.clone(), a1.clone()]] };
        let obs = mpm_sysid::observe::ObservationSet {
            frame_rate: 24.0,
            surfaces: vec![vec![b0, b1]],
            masks: vec![],
            cameras: vec![],
            radius_px: 1.5,
        };
        let shells = vec![(0..a0.len()).collect(), (0..a1.len()).collect()];
        let cfg = |granularity| LossConfig { granularity, use_alpha: false, ..LossConfig::default() };
        let object = loss_id(&traj, &shells, &obs, &cfg(Granularity::ObjectWise)).unwrap();
        let scene = loss_id(&traj, &shells, &obs, &cfg(Granularity::SceneWise)).unwrap();
        prop_assert!(object >= scene, "{} < {}", object, scene);
    }

    #[test]
    fn adam_with_zero_gradient_stays_put(n in 1usize..10, lr in 1e-4..1.0f64, steps in 1usize..20) {
        let mut adam = AdamState::new(n, lr);
        for _ in 0..steps {
            prop_assert!(adam.step(&vec![0.0; n]).unwrap().iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn msv_round_trip_is_lossless(
        frames in prop::collection::vec(prop::collection::vec(prop::array::uniform3(any::<f32>()), 1..20), 1..5),
        fps in 1.0..120.0f64,
    ) {
        let counts_fixed: Vec<Vec<Vec<[f32; 3]>>> = frames.iter().map(|f| vec![f.clone(), frames[0].clone()]).map(|mut f| { f[0].truncate(1); f }).collect();
        let file = TrajectoryFile { frame_rate: fps, positions: counts_fixed };
        let bytes = file.to_bytes().unwrap();
        let back = TrajectoryFile::from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back.frame_rate, file.frame_rate);
        for (x, y) in back.positions.iter().flatten().flatten().zip(file.positions.iter().flatten().flatten()) {
            prop_assert_eq!(x.map(f32::to_bits), y.map(f32::to_bits));
        }
        prop_assert!(TrajectoryFile::from_bytes(&bytes[..bytes.len() - 1], std::path::Path::new("mem")).is_err());
    }

    #[test]
    fn eval_chamfer_ignores_common_translation(a in points(0.1, 2..30), b in points(0.1, 2..30), t in vec3(0.5)) {
        let file = |p: &[Vec3], s: Vec3| TrajectoryFile {
            frame_rate: 24.0,
            positions: vec![vec![p.iter().map(|q| { let r = *q + s; [r.x as f32, r.y as f32, r.z as f32] }).collect()]],
        };
        let base = eval_with(&file(&a, Vec3::ZERO), &file(&b, Vec3::ZERO), 1, 0).unwrap();
        let moved = eval_with(&file(&a, t), &file(&b, t), 1, 0).unwrap();
        let (x, y) = (base.frames[0].objects[0].cd, moved.frames[0].objects[0].cd);
        // positions are stored as f32, so only the rounding differs
        prop_assert!((x - y).abs() <= 1e-5 * x.max(1e-3), "{} vs {}", x, y);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn emd_matches_exhaustive_matching(a in points(1.0, 1..6), b in points(1.0, 1..6)) {
        let n = a.len().min(b.len());
        let (a, b) = (&a[..n], &b[..n]);
        let mut best = f64::INFINITY;
        let mut perm: Vec<usize> = (0..n).collect();
        permutations(&mut perm, 0, &mut |p| {
            let s: f64 = p.iter().enumerate().map(|(i, &j)| a[i].distance(&b[j])).sum();
            best = best.min(s / n as f64);
        });
        let hung = matched_mean_distance(a, b);
        prop_assert!((hung - best).abs() <= 1e-12 * best.max(1.0));
        prop_assert_eq!(emd(a, b, 64).unwrap(), hung);
        let cost: Vec<f64> = a.iter().flat_map(|p| b.iter().map(move |q| p.distance(q))).collect();
        prop_assert_eq!(hungarian(&cost, n).len(), n);
    }

    #[test]
    fn disjoint_grids_have_multiplicity_at_most_one(c0 in vec3(0.02), c1 in vec3(0.02), r0 in 0.01..0.03f64, r1 in 0.01..0.03f64) {
        let frame = OccupancyGrid::new([20, 20, 20], 0.005, Vec3::splat(-0.05));
        let g0 = frame.from_fn(|p| p.distance(&c0) <= r0);
        let g1 = frame.from_fn(|p| p.distance(&c1) <= r1);
        let surf = |c: Vec3, r: f64| (0..50).map(|i| {
            let t = i as f64 * 0.7;
            c + Vec3::new(t.cos() * (i as f64 * 0.13).sin(), t.sin() * (i as f64 * 0.13).sin(), (i as f64 * 0.13).cos()).scale_f(r)
        }).collect::<Vec<_>>();
        let out = enforce_disjoint(&[g0.clone(), g1.clone()], &[surf(c0, r0), surf(c1, r1)]).unwrap();
        for i in 0..frame.density.len() {
            prop_assert!((out[0].is_occupied(i) as u8 + out[1].is_occupied(i) as u8) <= 1);
            prop_assert_eq!(out[0].is_occupied(i) || out[1].is_occupied(i), g0.is_occupied(i) || g1.is_occupied(i));
        }
    }

    #[test]
    fn refinement_covers_connected_inputs(c in vec3(0.2), r in 0.02..0.06f64, h in 0.003..0.006f64) {
        let n = (2.0 * r / h).ceil() as i64;
        let mut pts = Vec::new();
        for i in -n..=n {
            for j in -n..=n {
                for k in -n..=n {
                    let p = c + Vec3::new(i as f64, j as f64, k as f64).scale_f(h);
                    if p.distance(&c) <= r {
                        pts.push(p);
                    }
                }
            }
        }
        prop_assume!(pts.len() > 8);
        let g = refine_occupancy(&pts, &LiftConfig::default()).unwrap();
        for p in &pts {
            prop_assert!(g.is_occupied(g.locate(p).unwrap()));
        }
    }
}

fn permutations(p: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permutations(p, k + 1, visit);
        p.swap(k, i);
    }
}

fn block(center: Vec3, v: Vec3) -> Vec<Particle> {
    let s = 0.005;
    let mut out = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let x = center + Vec3::new(i as f64 - 1.5, j as f64 - 1.5, k as f64 - 1.5).scale_f(s);
                out.push(Particle::at_rest(x, v, 1000.0 * s * s * s, s * s * s, 0));
            }
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn rollouts_conserve_mass_and_free_momentum(v in vec3(0.3), log_e in 3.0..4.0f64) {
        let mut cfg = SimConfig::default().with_timing(24.0, 100);
        cfg.grid = GridSpec { dims: [24, 24, 24], dx: 0.01, origin: Vec3::ZERO };
        cfg.gravity = Vec3::ZERO;
        cfg.floor_height = -1.0;
        let mut p = mpm_sysid::materials::MaterialParams::new(mpm_sysid::materials::MaterialFamily::Elastic);
        p.youngs_modulus = 10f64.powf(log_e);
        let mut w = WorldState::new(cfg, vec![block(Vec3::splat(0.12), v)], vec![p]).unwrap();
        let m0 = w.total_mass(0);
        let p0 = w.total_momentum();
        let dual = w.lift::<Dual<2>>();
        let plain = rollout(&mut w, 2, 1).unwrap();
        prop_assert_eq!(w.total_mass(0), m0);
        let drift = (w.total_momentum() - p0).norm() / p0.norm().max(1e-12);
        prop_assert!(drift < 1e-8, "momentum drift {}", drift);
        // zero tangents leave the primal bits alone
        let mut dual = dual;
        let tracked = rollout(&mut dual, 2, 1).unwrap().val();
        prop_assert_eq!(tracked, plain);
    }
}
