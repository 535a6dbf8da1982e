//! Rotation-variant 3x3 SVD and its first-order perturbation.

use crate::error::{Error, Result};

use super::{Mat3, Real, Vec3};

/// `m = U diag(sigma) V^T` with `U, V` proper rotations.
///
/// `sigma[0] >= sigma[1] >= |sigma[2]|`; a reflection in `m` shows up as a
/// negative `sigma[2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Svd3<S = f64> {
    pub u: Mat3<S>,
    pub sigma: [S; 3],
    pub v: Mat3<S>,
}

impl<S: Real> Svd3<S> {
    pub fn reconstruct(&self) -> Mat3<S> {
        self.u.mul_diag_mul_t(&self.sigma, &self.v)
    }
}

const MAX_SWEEPS: usize = 30;
// Below this the pair (sigma_i, sigma_j) is treated as degenerate when
// differentiating the singular vectors.
const GAP_FLOOR: f64 = 1e-8;

fn col(a: &[[f64; 3]; 3], c: usize) -> [f64; 3] {
    [a[0][c], a[1][c], a[2][c]]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn normalize3(a: &[f64; 3]) -> Option<[f64; 3]> {
    let n = dot3(a, a).sqrt();
    if n > 0.0 && n.is_finite() {
        Some([a[0] / n, a[1] / n, a[2] / n])
    } else {
        None
    }
}

/// Some unit vector orthogonal to `a` (assumed unit).
fn any_orthogonal(a: &[f64; 3]) -> [f64; 3] {
    let pick = if a[0].abs() <= a[1].abs() && a[0].abs() <= a[2].abs() {
        [1.0, 0.0, 0.0]
    } else if a[1].abs() <= a[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    normalize3(&cross3(a, &pick)).expect("pick is never parallel to a")
}

/// One-sided Jacobi SVD. Deterministic; degenerate inputs still yield proper
/// rotations.
pub fn svd3(m: &Mat3<f64>) -> Svd3<f64> {
    let mut a = m.m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let ap = col(&a, p);
            let aq = col(&a, q);
            let alpha = dot3(&ap, &ap);
            let beta = dot3(&aq, &aq);
            let gamma = dot3(&ap, &aq);
            if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                continue;
            }
            rotated = true;
            let zeta = (beta - alpha) / (2.0 * gamma);
            let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
            let c = 1.0 / (1.0 + t * t).sqrt();
            let s = c * t;
            for r in 0..3 {
                let x = a[r][p];
                let y = a[r][q];
                a[r][p] = c * x - s * y;
                a[r][q] = s * x + c * y;
                let x = v[r][p];
                let y = v[r][q];
                v[r][p] = c * x - s * y;
                v[r][q] = s * x + c * y;
            }
        }
        if !rotated {
            break;
        }
    }

    // Sort columns by norm, descending; ties keep the original order.
    let norms = [0, 1, 2].map(|c| dot3(&col(&a, c), &col(&a, c)).sqrt());
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let cols = order.map(|c| col(&a, c));
    let mut vs = order.map(|c| col(&v, c));

    let u0 = normalize3(&cols[0]).unwrap_or([1.0, 0.0, 0.0]);
    let s0 = dot3(&cols[0], &u0);
    let r1 = {
        let p = dot3(&cols[1], &u0);
        [cols[1][0] - p * u0[0], cols[1][1] - p * u0[1], cols[1][2] - p * u0[2]]
    };
    let u1 = match normalize3(&r1) {
        Some(u) if norms[order[1]] > 0.0 => u,
        _ => any_orthogonal(&u0),
    };
    let u2 = cross3(&u0, &u1);
    let mut s2 = dot3(&cols[2], &u2);
    // projection can leave s1 an ulp below |s2| for (near-)repeated values
    let s1 = dot3(&cols[1], &u1).max(s2.abs());

    // det(V) = -1: flip V's last column together with sigma[2].
    let vdet = dot3(&cross3(&vs[0], &vs[1]), &vs[2]);
    if vdet < 0.0 {
        vs[2] = vs[2].map(|x| -x);
        s2 = -s2;
    }

    let to_mat = |c: &[[f64; 3]; 3]| {
        Mat3::from_rows([
            [c[0][0], c[1][0], c[2][0]],
            [c[0][1], c[1][1], c[2][1]],
            [c[0][2], c[1][2], c[2][2]],
        ])
    };
    Svd3 { u: to_mat(&[u0, u1, u2]), sigma: [s0, s1, s2], v: to_mat(&vs) }
}

/// Directional derivative of the SVD along `dm`: returns `(dU, dsigma, dV)`.
///
/// Off-diagonal rotation rates divide by `sigma_j^2 - sigma_i^2`; that gap is
/// floored at `1e-8` in magnitude (sign kept, zero counts as positive).
pub fn svd3_tangent(svd: &Svd3<f64>, dm: &Mat3<f64>) -> (Mat3<f64>, [f64; 3], Mat3<f64>) {
    let a = svd.u.transpose().mul_mat(dm).mul_mat(&svd.v);
    let s = svd.sigma;
    let dsigma = [a.m[0][0], a.m[1][1], a.m[2][2]];
    let mut wu = Mat3::<f64>::zero();
    let mut wv = Mat3::<f64>::zero();
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut gap = s[j] * s[j] - s[i] * s[i];
            if gap.abs() < GAP_FLOOR {
                gap = if gap < 0.0 { -GAP_FLOOR } else { GAP_FLOOR };
            }
            let ou = (s[j] * a.m[i][j] + s[i] * a.m[j][i]) / gap;
            let ov = (s[i] * a.m[i][j] + s[j] * a.m[j][i]) / gap;
            wu.m[i][j] = ou;
            wu.m[j][i] = -ou;
            wv.m[i][j] = ov;
            wv.m[j][i] = -ov;
        }
    }
    (svd.u.mul_mat(&wu), dsigma, svd.v.mul_mat(&wv))
}

/// Hencky (logarithmic) principal strain `ln(sigma)`.
pub fn hencky<S: Real>(svd: &Svd3<S>) -> Result<Vec3<S>> {
    for (i, s) in svd.sigma.iter().enumerate() {
        if !(s.val() > 0.0) {
            return Err(Error::NonPositiveSingularValue { index: i, value: s.val() });
        }
    }
    Ok(Vec3::new(svd.sigma[0].ln(), svd.sigma[1].ln(), svd.sigma[2].ln()))
}
