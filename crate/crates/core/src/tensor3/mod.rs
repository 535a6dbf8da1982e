//! Small fixed-size linear algebra over a differentiable scalar.

mod linalg;
mod real;
mod svd;

pub use linalg::{Mat3, Vec3};
pub use real::{dual_lift, Dual, Real};
pub use svd::{hencky, svd3, svd3_tangent, Svd3};
