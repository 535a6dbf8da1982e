//! Scalar abstraction shared by the plain and the forward-mode simulator.
//!
//! Every numerical routine downstream is generic over [`Real`]. With `f64` it
//! is an ordinary computation; with [`Dual<N>`] each value also carries `N`
//! directional derivatives, all propagated in one pass. The primal part of a
//! `Dual` operation is computed with exactly the same `f64` expression as the
//! plain path, so a dual run with zero tangents is bitwise identical to the
//! plain run.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::tensor3::svd::{svd3, svd3_tangent};
use crate::tensor3::{Mat3, Svd3};

pub trait Real:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + AddAssign<f64>
    + MulAssign<f64>
{
    /// Number of tangent directions carried (0 for `f64`).
    const WIDTH: usize;

    fn cst(v: f64) -> Self;
    fn val(&self) -> f64;
    /// Tangent component `i`; zero when `i >= WIDTH`.
    fn tangent(&self, i: usize) -> f64;
    /// Replaces the primal value, keeping the tangents.
    fn with_val(self, v: f64) -> Self;
    /// `v` with the unit tangent along direction `i`; a constant when
    /// `i >= WIDTH`.
    fn seed(v: f64, i: usize) -> Self;

    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn powf(self, p: f64) -> Self;
    fn abs(self) -> Self;
    fn is_finite(&self) -> bool;

    /// Rotation-variant SVD, differentiated for dual scalars.
    fn svd3(m: &Mat3<Self>) -> Svd3<Self>;

    #[inline]
    fn zero() -> Self {
        Self::cst(0.0)
    }
    #[inline]
    fn one() -> Self {
        Self::cst(1.0)
    }
    #[inline]
    fn recip(self) -> Self {
        Self::one() / self
    }
    #[inline]
    fn sq(self) -> Self {
        self * self
    }
    /// Logistic function `1 / (1 + e^-x)`.
    #[inline]
    fn sigmoid(self) -> Self {
        ((-self).exp() + 1.0).recip()
    }
    #[inline]
    fn max_val(self, other: Self) -> Self {
        if other.val() > self.val() {
            other
        } else {
            self
        }
    }
    #[inline]
    fn min_val(self, other: Self) -> Self {
        if other.val() < self.val() {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const WIDTH: usize = 0;

    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn tangent(&self, _i: usize) -> f64 {
        0.0
    }
    #[inline]
    fn with_val(self, v: f64) -> Self {
        v
    }
    #[inline]
    fn seed(v: f64, _i: usize) -> Self {
        v
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn abs(self) -> Self {
        f64::abs(self)
    }
    #[inline]
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
    fn svd3(m: &Mat3<Self>) -> Svd3<Self> {
        svd3(m)
    }
}

/// Forward-mode dual number with `N` tangent directions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    #[inline]
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; N] }
    }

    /// Seeds a value with the unit tangent at `active`, or a zero tangent.
    pub fn lift(v: f64, active: Option<usize>) -> Result<Self> {
        let mut out = Self::constant(v);
        if let Some(i) = active {
            if i >= N {
                return Err(Error::IndexOutOfRange { index: i, len: N });
            }
            out.d[i] = 1.0;
        }
        Ok(out)
    }

    #[inline]
    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= dv;
        }
        Self { v, d }
    }
}

/// Lifts a list of reals into duals; the one at `active` gets the unit tangent
/// along that same index.
pub fn dual_lift<const N: usize>(values: &[f64], active: Option<usize>) -> Result<Vec<Dual<N>>> {
    if let Some(i) = active {
        if i >= N {
            return Err(Error::IndexOutOfRange { index: i, len: N });
        }
    }
    Ok(values.iter().map(|&v| Dual::lift(v, active).expect("index checked")).collect())
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] += o.d[i];
        }
        Self { v: self.v + o.v, d }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] -= o.d[i];
        }
        Self { v: self.v - o.v, d }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let v = self.v / o.v;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * o.d[i]) / o.v;
        }
        Self { v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x = -*x;
        }
        Self { v: -self.v, d }
    }
}

impl<const N: usize> Add<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn add(self, o: f64) -> Self {
        Self { v: self.v + o, d: self.d }
    }
}

impl<const N: usize> Sub<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn sub(self, o: f64) -> Self {
        Self { v: self.v - o, d: self.d }
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, o: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= o;
        }
        Self { v: self.v * o, d }
    }
}

impl<const N: usize> Div<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x /= o;
        }
        Self { v: self.v / o, d }
    }
}

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}
impl<const N: usize> SubAssign for Dual<N> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}
impl<const N: usize> MulAssign for Dual<N> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}
impl<const N: usize> DivAssign for Dual<N> {
    #[inline]
    fn div_assign(&mut self, o: Self) {
        *self = *self / o;
    }
}
impl<const N: usize> AddAssign<f64> for Dual<N> {
    #[inline]
    fn add_assign(&mut self, o: f64) {
        self.v += o;
    }
}
impl<const N: usize> MulAssign<f64> for Dual<N> {
    #[inline]
    fn mul_assign(&mut self, o: f64) {
        *self = *self * o;
    }
}

impl<const N: usize> Real for Dual<N> {
    const WIDTH: usize = N;

    #[inline]
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    #[inline]
    fn val(&self) -> f64 {
        self.v
    }
    #[inline]
    fn tangent(&self, i: usize) -> f64 {
        if i < N {
            self.d[i]
        } else {
            0.0
        }
    }
    #[inline]
    fn with_val(self, v: f64) -> Self {
        Self { v, d: self.d }
    }
    #[inline]
    fn seed(v: f64, i: usize) -> Self {
        let mut out = Self::constant(v);
        if i < N {
            out.d[i] = 1.0;
        }
        out
    }
    #[inline]
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    #[inline]
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        self.chain(self.v.powf(p), p * self.v.powf(p - 1.0))
    }
    #[inline]
    fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
    fn is_finite(&self) -> bool {
        self.v.is_finite() && self.d.iter().all(|x| x.is_finite())
    }
    fn svd3(m: &Mat3<Self>) -> Svd3<Self> {
        let primal = svd3(&m.val());
        let mut out = Svd3 {
            u: Mat3::cst(&primal.u),
            sigma: primal.sigma.map(Self::cst),
            v: Mat3::cst(&primal.v),
        };
        for k in 0..N {
            let dm = m.map(|x| x.d[k]);
            let (du, ds, dv) = svd3_tangent(&primal, &dm);
            for r in 0..3 {
                for c in 0..3 {
                    out.u.m[r][c].d[k] = du.m[r][c];
                    out.v.m[r][c].d[k] = dv.m[r][c];
                }
                out.sigma[r].d[k] = ds[r];
            }
        }
        out
    }
}
