use crate::error::{Error, Result};
use crate::materials::{kirchhoff_stress, plastic_projection, LameParams, MaterialParams};
use crate::tensor3::{Mat3, Real, Vec3};

use super::grid::{bspline_stencil, ObjectGrid};
use super::Particle;

fn locate(err: Error, object: usize, particle: usize) -> Error {
    match err {
        Error::OutOfDomain { .. } => Error::OutOfDomain { object, particle },
        Error::InvertedElement { det, .. } => Error::InvertedElement { particle, det },
        other => other,
    }
}

/// Row offset of node `(base + (i, j, 0))` inside the window.
#[inline]
fn row_offset<S: Real>(grid: &ObjectGrid<S>, base: [usize; 3], i: usize, j: usize) -> usize {
    ((base[0] + i - grid.lo[0]) * grid.size[1] + (base[1] + j - grid.lo[1])) * grid.size[2]
        + (base[2] - grid.lo[2])
}

/// Builds stencils, sizes the window and scatters mass and APIC momentum.
pub(crate) fn p2g_object<S: Real>(
    object: usize,
    particles: &[Particle<S>],
    grid: &mut ObjectGrid<S>,
) -> Result<()> {
    let spec = grid.spec;
    let mut stencils = std::mem::take(&mut grid.stencils);
    stencils.clear();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for (idx, p) in particles.iter().enumerate() {
        let s = bspline_stencil(&p.x, &spec).map_err(|e| locate(e, object, idx))?;
        for a in 0..3 {
            lo[a] = lo[a].min(s.base[a]);
            hi[a] = hi[a].max(s.base[a] + 3);
        }
        stencils.push(s);
    }
    if particles.is_empty() {
        lo = [0; 3];
        hi = [0; 3];
    }
    grid.reset_window(lo, [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]]);

    // m C dx, with C = B D^-1 and D^-1 = 4/dx^2
    let affine_scale = 4.0 / spec.dx;
    for (p, s) in particles.iter().zip(&stencils) {
        let m = p.mass;
        let am = p.b.scale_f(m * affine_scale);
        // node (i,j,k) receives w * (q + i c0 + j c1 + k c2)
        let q = p.v.scale_f(m) - am.mul_vec(&s.fx);
        let (c0, c1, c2) = (am.col(0), am.col(1), am.col(2));
        let mut qi = q;
        for i in 0..3 {
            let mut qij = qi;
            for j in 0..3 {
                let wij = s.w[0][i] * s.w[1][j];
                let row = row_offset(grid, s.base, i, j);
                let mut qijk = qij;
                for k in 0..3 {
                    let w = wij * s.w[2][k];
                    grid.mass[row + k] += w * m;
                    grid.momentum[row + k] += qijk * w;
                    qijk += c2;
                }
                qij += c1;
            }
            qi += c0;
        }
    }
    grid.stencils = stencils;
    Ok(())
}

/// APIC velocity gradient `C = B D^-1`.
#[inline]
pub(crate) fn affine_velocity_gradient<S: Real>(b: &Mat3<S>, dx: f64) -> Mat3<S> {
    b.scale_f(4.0 / (dx * dx))
}

/// Accumulates `f_i = -sum_p V0 (J T) grad w_ip` into the window.
pub(crate) fn forces_object<S: Real>(
    particles: &[Particle<S>],
    grid: &mut ObjectGrid<S>,
    params: &MaterialParams<S>,
    lame: &LameParams<S>,
) -> Result<()> {
    let dx = grid.spec.dx;
    let stencils = std::mem::take(&mut grid.stencils);
    for (idx, (p, s)) in particles.iter().zip(&stencils).enumerate() {
        let c = affine_velocity_gradient(&p.b, dx);
        let jt = kirchhoff_stress(params, lame, &p.f, &c).map_err(|e| locate(e, usize::MAX, idx))?;
        let kmat = jt.scale_f(p.volume0 * s.inv_dx);
        let (k0, k1, k2) = (kmat.col(0), kmat.col(1), kmat.col(2));
        for i in 0..3 {
            for j in 0..3 {
                let wxy = s.w[0][i] * s.w[1][j];
                let dxy = s.dw[0][i] * s.w[1][j];
                let xdy = s.w[0][i] * s.dw[1][j];
                let row = row_offset(grid, s.base, i, j);
                for k in 0..3 {
                    let wz = s.w[2][k];
                    let f = k0 * (dxy * wz) + k1 * (xdy * wz) + k2 * (wxy * s.dw[2][k]);
                    grid.force[row + k] -= f;
                }
            }
        }
    }
    grid.stencils = stencils;
    Ok(())
}

/// Gathers grid velocities, updates `v`, `B`, `F`, advects, then projects
/// `F` back to the admissible set.
pub(crate) fn g2p_object<S: Real>(
    particles: &mut [Particle<S>],
    grid: &ObjectGrid<S>,
    params: &MaterialParams<S>,
    lame: &LameParams<S>,
    dt: f64,
) -> Result<()> {
    let dx = grid.spec.dx;
    for (idx, (p, s)) in particles.iter_mut().zip(&grid.stencils).enumerate() {
        let mut vp = Vec3::zero();
        // sum_n w v_n (i, j, k)^T, column by column
        let mut m_cols = [Vec3::zero(); 3];
        let mut grad = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                let wxy = s.w[0][i] * s.w[1][j];
                let dxy = s.dw[0][i] * s.w[1][j];
                let xdy = s.w[0][i] * s.dw[1][j];
                let row = row_offset(grid, s.base, i, j);
                for k in 0..3 {
                    let v = grid.velocity[row + k];
                    let wz = s.w[2][k];
                    let wv = v * (wxy * wz);
                    vp += wv;
                    match i {
                        1 => m_cols[0] += wv,
                        2 => m_cols[0] += wv.scale_f(2.0),
                        _ => {}
                    }
                    match j {
                        1 => m_cols[1] += wv,
                        2 => m_cols[1] += wv.scale_f(2.0),
                        _ => {}
                    }
                    match k {
                        1 => m_cols[2] += wv,
                        2 => m_cols[2] += wv.scale_f(2.0),
                        _ => {}
                    }
                    let g = [dxy * wz, xdy * wz, wxy * s.dw[2][k]];
                    for r in 0..3 {
                        let vr = v.get(r);
                        for c in 0..3 {
                            grad.m[r][c] += vr * g[c];
                        }
                    }
                }
            }
        }
        let grad = grad.scale_f(s.inv_dx);
        let fx = s.fx;
        let mut b = Mat3::zero();
        for r in 0..3 {
            for c in 0..3 {
                b.m[r][c] = (m_cols[c].get(r) - vp.get(r) * fx.get(c)) * dx;
            }
        }
        let f_trial = (Mat3::identity() + grad.scale_f(dt)).mul_mat(&p.f);
        p.v = vp;
        p.b = b;
        p.x += vp.scale_f(dt);
        p.f = plastic_projection(params, lame, &f_trial).map_err(|e| locate(e, usize::MAX, idx))?;
    }
    Ok(())
}
