use serde::{Deserialize, Serialize};

use crate::materials::friction_pair;
use crate::tensor3::{Real, Vec3};

use super::grid::ObjectGrid;

/// Nodes lighter than this are treated as empty.
pub const MASS_EPS: f64 = 1e-12;

/// Lattice layers along each domain face that act as slip walls.
pub const WALL_LAYERS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloorMode {
    /// Every node below the floor is held at rest.
    Sticky,
    /// Only the into-floor normal component is removed.
    Slip,
    /// Normal component removed when moving into the floor, tangential
    /// component reduced by Coulomb friction.
    Separate,
}

/// Velocity of a node lying below the floor plane (normal `+z`).
pub fn floor_response<S: Real>(v: Vec3<S>, mode: FloorMode, friction: f64) -> Vec3<S> {
    match mode {
        FloorMode::Sticky => Vec3::zero(),
        FloorMode::Slip => {
            if v.z.val() < 0.0 {
                Vec3::new(v.x, v.y, S::zero())
            } else {
                v
            }
        }
        FloorMode::Separate => {
            if v.z.val() >= 0.0 {
                return v;
            }
            let vn = -v.z;
            let vt2 = v.x * v.x + v.y * v.y;
            let limit = vn * friction;
            if vt2.val() <= limit.val() * limit.val() {
                return Vec3::zero();
            }
            let vt = vt2.sqrt();
            let k = -(limit / vt) + 1.0;
            Vec3::new(v.x * k, v.y * k, S::zero())
        }
    }
}

pub(crate) struct UpdateParams {
    pub dt: f64,
    pub gravity: Vec3,
    pub floor_height: f64,
    pub floor_friction: f64,
    pub floor_mode: FloorMode,
}

/// `v = p/m + dt (f/m + g)` followed by floor and wall constraints.
pub(crate) fn grid_update_object<S: Real>(grid: &mut ObjectGrid<S>, u: &UpdateParams) {
    let dims = grid.spec.dims;
    let dtg = u.gravity.scale_f(u.dt);
    for idx in 0..grid.len() {
        let m = grid.mass[idx];
        if m.val() < MASS_EPS {
            grid.velocity[idx] = Vec3::zero();
            continue;
        }
        let inv_m = m.recip();
        let mut v = (grid.momentum[idx] + grid.force[idx].scale_f(u.dt)) * inv_m;
        v.x += dtg.x;
        v.y += dtg.y;
        v.z += dtg.z;
        let node = grid.node_of(idx);
        if grid.spec.node_position(node).z < u.floor_height {
            v = floor_response(v, u.floor_mode, u.floor_friction);
        }
        for a in 0..3 {
            let va = v.get(a).val();
            if (node[a] < WALL_LAYERS && va < 0.0) || (node[a] + WALL_LAYERS >= dims[a] && va > 0.0) {
                v.set(a, S::zero());
            }
        }
        grid.velocity[idx] = v;
    }
}

fn mass_gradient<S: Real>(grid: &ObjectGrid<S>, node: [usize; 3]) -> Vec3<S> {
    let inv = 0.5 / grid.spec.dx;
    let mut g = Vec3::zero();
    for a in 0..3 {
        let mut up = node;
        up[a] += 1;
        let hi = grid.mass_at(up);
        let lo = if node[a] == 0 {
            S::zero()
        } else {
            let mut dn = node;
            dn[a] -= 1;
            grid.mass_at(dn)
        };
        g.set(a, (hi - lo) * inv);
    }
    g
}

/// Inelastic normal response plus Coulomb friction between two node
/// velocities, conserving `m_a v_a + m_b v_b`.
pub fn contact_pair<S: Real>(
    (ma, va): (S, Vec3<S>),
    (mb, vb): (S, Vec3<S>),
    normal: Vec3<S>,
    mu: S,
) -> (Vec3<S>, Vec3<S>) {
    let rel = va - vb;
    let vn_rel = rel.dot(&normal);
    if vn_rel.val() <= 0.0 {
        return (va, vb);
    }
    let reduced = ma * mb / (ma + mb);
    // impulse on a; b receives the negative
    let jn = normal * (-(reduced * vn_rel));
    let rel_t = rel - normal * vn_rel;
    let jt_full = rel_t * (-reduced);
    let jt_norm2 = jt_full.norm_sq();
    let cap = mu * reduced * vn_rel;
    let jt = if jt_norm2.val() <= cap.val() * cap.val() {
        jt_full
    } else {
        jt_full * (cap / jt_norm2.sqrt())
    };
    let j = jn + jt;
    (va + j * ma.recip(), vb - j * mb.recip())
}

/// Resolves every node where two objects both carry mass.
pub(crate) fn contact_resolve_all<S: Real>(grids: &mut [ObjectGrid<S>], friction: &[S]) {
    let k = grids.len();
    for a in 0..k {
        for b in (a + 1)..k {
            let (left, right) = grids.split_at_mut(b);
            resolve_pair(&mut left[a], &mut right[0], friction_pair(friction[a], friction[b]));
        }
    }
}

fn resolve_pair<S: Real>(ga: &mut ObjectGrid<S>, gb: &mut ObjectGrid<S>, mu: S) {
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for a in 0..3 {
        lo[a] = ga.lo[a].max(gb.lo[a]);
        hi[a] = (ga.lo[a] + ga.size[a]).min(gb.lo[a] + gb.size[a]);
        if lo[a] >= hi[a] {
            return;
        }
    }
    for i in lo[0]..hi[0] {
        for j in lo[1]..hi[1] {
            for kk in lo[2]..hi[2] {
                let node = [i, j, kk];
                let (Some(ia), Some(ib)) = (ga.local_index(node), gb.local_index(node)) else {
                    continue;
                };
                let (ma, mb) = (ga.mass[ia], gb.mass[ib]);
                if ma.val() <= MASS_EPS || mb.val() <= MASS_EPS {
                    continue;
                }
                let (va, vb) = (ga.velocity[ia], gb.velocity[ib]);
                let mut n = mass_gradient(gb, node) - mass_gradient(ga, node);
                let mut len2 = n.norm_sq();
                if len2.val().sqrt() < 1e-9 {
                    n = va - vb;
                    len2 = n.norm_sq();
                    if len2.val().sqrt() < 1e-9 {
                        continue;
                    }
                }
                let n = n * len2.sqrt().recip();
                let (na, nb) = contact_pair((ma, va), (mb, vb), n, mu);
                ga.velocity[ia] = na;
                gb.velocity[ib] = nb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_coulomb_clamp() {
        let v = floor_response(Vec3::new(1.0, 0.0, -2.0), FloorMode::Separate, 0.5);
        assert_eq!(v, Vec3::ZERO);
        let v = floor_response(Vec3::new(3.0, 4.0, -2.0), FloorMode::Separate, 0.5);
        // |vt| = 5 reduced by 1
        assert!((v.x - 2.4).abs() < 1e-15 && (v.y - 3.2).abs() < 1e-15 && v.z == 0.0);
        let up = Vec3::new(1.0, 0.0, 2.0);
        assert_eq!(floor_response(up, FloorMode::Separate, 0.5), up);
        assert_eq!(floor_response(up, FloorMode::Slip, 0.5), up);
        assert_eq!(floor_response(Vec3::new(1.0, 0.0, -2.0), FloorMode::Slip, 0.5), Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(floor_response(up, FloorMode::Sticky, 0.5), Vec3::ZERO);
    }

    #[test]
    fn head_on_contact_is_inelastic() {
        let n = Vec3::new(1.0, 0.0, 0.0);
        let (a, b) = contact_pair((2.0, Vec3::new(1.0, 0.0, 0.0)), (2.0, Vec3::new(-1.0, 0.0, 0.0)), n, 0.0);
        assert_eq!(a, Vec3::ZERO);
        assert_eq!(b, Vec3::ZERO);
        let (a, b) = contact_pair((1.0, Vec3::new(2.0, 0.0, 0.0)), (3.0, Vec3::ZERO), n, 0.0);
        assert!((a.x - 0.5).abs() < 1e-15 && (b.x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn separating_contact_untouched() {
        let n = Vec3::new(0.0, 0.0, 1.0);
        let va = Vec3::new(0.3, 0.0, -1.0);
        let vb = Vec3::new(0.0, 0.2, 1.0);
        assert_eq!(contact_pair((1.0, va), (1.0, vb), n, 0.5), (va, vb));
    }

    #[test]
    fn contact_conserves_momentum() {
        let n = Vec3::new(0.6, 0.0, 0.8);
        let (ma, mb) = (0.7, 1.9);
        let va = Vec3::new(1.5, -0.4, 2.0);
        let vb = Vec3::new(-0.5, 0.9, -1.0);
        for mu in [0.0, 0.2, 0.5, 5.0] {
            let (a, b) = contact_pair((ma, va), (mb, vb), n, mu);
            let before = va.scale_f(ma) + vb.scale_f(mb);
            let after = a.scale_f(ma) + b.scale_f(mb);
            assert!((before - after).norm() <= 1e-10 * before.norm());
            // no interpenetrating normal velocity afterwards
            assert!((a - b).dot(&n) < 1e-12);
        }
        // a large coefficient sticks the tangential motion completely
        let (a, b) = contact_pair((ma, va), (mb, vb), n, 50.0);
        assert!((a - b).norm() < 1e-12);
    }
}
