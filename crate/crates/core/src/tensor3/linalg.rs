use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

use super::Real;

/// 3-vector over a generic scalar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Vec3<S = f64> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Real> Vec3<S> {
    #[inline]
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }
    #[inline]
    pub fn zero() -> Self {
        Self::splat(S::zero())
    }
    #[inline]
    pub fn splat(s: S) -> Self {
        Self { x: s, y: s, z: s }
    }
    #[inline]
    pub fn cst(v: &Vec3<f64>) -> Self {
        Self::new(S::cst(v.x), S::cst(v.y), S::cst(v.z))
    }
    #[inline]
    pub fn val(&self) -> Vec3<f64> {
        Vec3::new(self.x.val(), self.y.val(), self.z.val())
    }
    #[inline]
    pub fn from_array(a: [S; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
    #[inline]
    pub fn to_array(self) -> [S; 3] {
        [self.x, self.y, self.z]
    }
    #[inline]
    pub fn map<T: Real>(&self, f: impl Fn(S) -> T) -> Vec3<T> {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }
    #[inline]
    pub fn dot(&self, o: &Self) -> S {
        self.x * o.x + self.y * o.y + self.z * o.z
    }
    #[inline]
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }
    #[inline]
    pub fn norm_sq(&self) -> S {
        self.dot(self)
    }
    #[inline]
    pub fn norm(&self) -> S {
        self.norm_sq().sqrt()
    }
    #[inline]
    pub fn scale(&self, s: S) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
    #[inline]
    pub fn scale_f(&self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
    /// Outer product `self * o^T`.
    #[inline]
    pub fn outer(&self, o: &Self) -> Mat3<S> {
        let a = self.to_array();
        let b = o.to_array();
        let mut m = Mat3::zero();
        for r in 0..3 {
            for c in 0..3 {
                m.m[r][c] = a[r] * b[c];
            }
        }
        m
    }
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
    #[inline]
    pub fn get(&self, i: usize) -> S {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }
    #[inline]
    pub fn set(&mut self, i: usize, s: S) {
        match i {
            0 => self.x = s,
            1 => self.y = s,
            _ => self.z = s,
        }
    }
}

impl Vec3<f64> {
    pub const ZERO: Vec3<f64> = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    #[inline]
    pub fn distance_sq(&self, o: &Self) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }
    #[inline]
    pub fn distance(&self, o: &Self) -> f64 {
        self.distance_sq(o).sqrt()
    }
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(1.0 / n)
    }
    pub fn min_by_component(&self, o: &Self) -> Self {
        Self::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }
    pub fn max_by_component(&self, o: &Self) -> Self {
        Self::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl<S: Real> Add for Vec3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}
impl<S: Real> Sub for Vec3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}
impl<S: Real> Neg for Vec3<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}
impl<S: Real> AddAssign for Vec3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.z += o.z;
    }
}
impl<S: Real> SubAssign for Vec3<S> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        self.x -= o.x;
        self.y -= o.y;
        self.z -= o.z;
    }
}
impl<S: Real> Mul<S> for Vec3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, s: S) -> Self {
        self.scale(s)
    }
}
impl<S: Real> Index<usize> for Vec3<S> {
    type Output = S;
    fn index(&self, i: usize) -> &S {
        match i {
            0 => &self.x,
            1 => &self.y,
            _ => &self.z,
        }
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat3<S = f64> {
    pub m: [[S; 3]; 3],
}

impl<S: Real> Mat3<S> {
    #[inline]
    pub fn zero() -> Self {
        Self { m: [[S::zero(); 3]; 3] }
    }
    #[inline]
    pub fn identity() -> Self {
        Self::diag(S::one(), S::one(), S::one())
    }
    #[inline]
    pub fn diag(a: S, b: S, c: S) -> Self {
        let mut m = Self::zero();
        m.m[0][0] = a;
        m.m[1][1] = b;
        m.m[2][2] = c;
        m
    }
    #[inline]
    pub fn from_rows(rows: [[S; 3]; 3]) -> Self {
        Self { m: rows }
    }
    pub fn from_cols(c0: Vec3<S>, c1: Vec3<S>, c2: Vec3<S>) -> Self {
        Self::from_rows([[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]])
    }
    #[inline]
    pub fn cst(a: &Mat3<f64>) -> Self {
        a.map(S::cst)
    }
    #[inline]
    pub fn val(&self) -> Mat3<f64> {
        self.map(|x| x.val())
    }
    #[inline]
    pub fn map<T: Real>(&self, f: impl Fn(S) -> T) -> Mat3<T> {
        let mut out = Mat3::<T>::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = f(self.m[r][c]);
            }
        }
        out
    }
    #[inline]
    pub fn col(&self, c: usize) -> Vec3<S> {
        Vec3::new(self.m[0][c], self.m[1][c], self.m[2][c])
    }
    #[inline]
    pub fn row(&self, r: usize) -> Vec3<S> {
        Vec3::from_array(self.m[r])
    }
    #[inline]
    pub fn transpose(&self) -> Self {
        let mut t = *self;
        for r in 0..3 {
            for c in 0..3 {
                t.m[r][c] = self.m[c][r];
            }
        }
        t
    }
    #[inline]
    pub fn mul_mat(&self, o: &Self) -> Self {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] =
                    self.m[r][0] * o.m[0][c] + self.m[r][1] * o.m[1][c] + self.m[r][2] * o.m[2][c];
            }
        }
        out
    }
    #[inline]
    pub fn mul_vec(&self, v: &Vec3<S>) -> Vec3<S> {
        Vec3::new(
            self.m[0][0] * v.x + self.m[0][1] * v.y + self.m[0][2] * v.z,
            self.m[1][0] * v.x + self.m[1][1] * v.y + self.m[1][2] * v.z,
            self.m[2][0] * v.x + self.m[2][1] * v.y + self.m[2][2] * v.z,
        )
    }
    /// `self * diag(d) * o^T`, the shape every SVD reassembly takes.
    pub fn mul_diag_mul_t(&self, d: &[S; 3], o: &Self) -> Self {
        let mut out = Self::zero();
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = self.m[r][0] * d[0] * o.m[c][0]
                    + self.m[r][1] * d[1] * o.m[c][1]
                    + self.m[r][2] * d[2] * o.m[c][2];
            }
        }
        out
    }
    #[inline]
    pub fn det(&self) -> S {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }
    #[inline]
    pub fn trace(&self) -> S {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }
    #[inline]
    pub fn scale(&self, s: S) -> Self {
        self.map(|x| x * s)
    }
    #[inline]
    pub fn scale_f(&self, s: f64) -> Self {
        self.map(|x| x * s)
    }
    /// `(A + A^T) / 2`.
    pub fn symmetrize(&self) -> Self {
        let mut out = *self;
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] = (self.m[r][c] + self.m[c][r]) * 0.5;
            }
        }
        out
    }
    pub fn frobenius_sq(&self) -> S {
        let mut s = S::zero();
        for r in 0..3 {
            for c in 0..3 {
                s += self.m[r][c] * self.m[r][c];
            }
        }
        s
    }
    pub fn frobenius(&self) -> S {
        self.frobenius_sq().sqrt()
    }
    pub fn is_finite(&self) -> bool {
        self.m.iter().all(|r| r.iter().all(|x| x.is_finite()))
    }
    #[inline]
    pub fn add_scaled_identity(&self, s: S) -> Self {
        let mut out = *self;
        out.m[0][0] += s;
        out.m[1][1] += s;
        out.m[2][2] += s;
        out
    }
}

impl Mat3<f64> {
    /// Rotation about a unit axis by `angle` radians (Rodrigues).
    pub fn rotation(axis: Vec3<f64>, angle: f64) -> Self {
        let a = axis.normalized();
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self::from_rows([
            [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
            [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
            [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
        ])
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                d = d.max((self.m[r][c] - o.m[r][c]).abs());
            }
        }
        d
    }
}

impl<S: Real> Add for Mat3<S> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] += o.m[r][c];
            }
        }
        out
    }
}
impl<S: Real> Sub for Mat3<S> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut out = self;
        for r in 0..3 {
            for c in 0..3 {
                out.m[r][c] -= o.m[r][c];
            }
        }
        out
    }
}
impl<S: Real> AddAssign for Mat3<S> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<S: Real> Mul for Mat3<S> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        self.mul_mat(&o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_transpose() {
        let a = Mat3::from_rows([[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 1.0]]);
        assert_eq!(a.det(), 7.0);
        assert_eq!(a.transpose().det(), 7.0);
        assert_eq!(a.trace(), 6.0);
    }

    #[test]
    fn rotation_is_orthonormal() {
        let r = Mat3::rotation(Vec3::new(1.0, 2.0, -0.5), 0.83);
        let rrt = r.mul_mat(&r.transpose());
        assert!(rrt.max_abs_diff(&Mat3::identity()) < 1e-14);
        assert!((r.det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cross_is_orthogonal() {
        let a = Vec3::new(1.0, 2.0, 3.0);
        let b = Vec3::new(-2.0, 0.5, 1.0);
        let c = a.cross(&b);
        assert!(c.dot(&a).abs() < 1e-14 && c.dot(&b).abs() < 1e-14);
    }
}
