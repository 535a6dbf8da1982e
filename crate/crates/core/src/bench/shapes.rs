use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor3::{Mat3, Vec3};

/// Parametric solid in its local frame, centred on the origin. Lengths in m.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Ellipsoid { radii: [f64; 3] },
    /// Ring around the local z axis.
    Torus { major: f64, minor: f64 },
    /// Segment along the local z axis swept by a ball.
    Capsule { radius: f64, half_length: f64 },
}

impl Shape {
    pub const NAMES: [&'static str; 5] = ["sphere", "box", "ellipsoid", "torus", "capsule"];

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Sphere { radius } => radius > 0.0,
            Shape::Box { half_extents } => half_extents.iter().all(|&h| h > 0.0),
            Shape::Ellipsoid { radii } => radii.iter().all(|&r| r > 0.0),
            Shape::Torus { major, minor } => minor > 0.0 && major > minor,
            Shape::Capsule { radius, half_length } => radius > 0.0 && half_length >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("degenerate shape {self:?}")))
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        match *self {
            Shape::Sphere { radius } => p.norm_sq() <= radius * radius,
            Shape::Box { half_extents: h } => p.x.abs() <= h[0] && p.y.abs() <= h[1] && p.z.abs() <= h[2],
            Shape::Ellipsoid { radii: r } => (p.x / r[0]).powi(2) + (p.y / r[1]).powi(2) + (p.z / r[2]).powi(2) <= 1.0,
            Shape::Torus { major, minor } => {
                let ring = (p.x * p.x + p.y * p.y).sqrt() - major;
                ring * ring + p.z * p.z <= minor * minor
            }
            Shape::Capsule { radius, half_length } => {
                let z = p.z.clamp(-half_length, half_length);
                p.x * p.x + p.y * p.y + (p.z - z).powi(2) <= radius * radius
            }
        }
    }

    /// Radius of a ball around the origin containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Sphere { radius } => radius,
            Shape::Box { half_extents: h } => Vec3::new(h[0], h[1], h[2]).norm(),
            Shape::Ellipsoid { radii: r } => r.iter().cloned().fold(0.0, f64::max),
            Shape::Torus { major, minor } => major + minor,
            Shape::Capsule { radius, half_length } => radius + half_length,
        }
    }

    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Shape::Sphere { radius } => 4.0 / 3.0 * PI * radius.powi(3),
            Shape::Box { half_extents: h } => 8.0 * h[0] * h[1] * h[2],
            Shape::Ellipsoid { radii: r } => 4.0 / 3.0 * PI * r[0] * r[1] * r[2],
            Shape::Torus { major, minor } => 2.0 * PI * PI * major * minor * minor,
            Shape::Capsule { radius, half_length } => PI * radius * radius * (2.0 * half_length + 4.0 / 3.0 * radius),
        }
    }

    /// Shape of the named kind whose bounding radius is `r`, with fixed
    /// aspect ratios.
    pub fn named(name: &str, r: f64) -> Result<Self> {
        Ok(match name {
            "sphere" => Shape::Sphere { radius: r },
            "box" => {
                let h = r / Vec3::new(1.0, 0.8, 0.6).norm();
                Shape::Box { half_extents: [h, 0.8 * h, 0.6 * h] }
            }
            "ellipsoid" => Shape::Ellipsoid { radii: [r, 0.75 * r, 0.6 * r] },
            "torus" => Shape::Torus { major: 0.65 * r, minor: 0.35 * r },
            "capsule" => Shape::Capsule { radius: 0.5 * r, half_length: 0.5 * r },
            _ => return Err(Error::config(format!("unknown shape {name:?}"))),
        })
    }
}

/// Placed shape: world point `x` is inside when `R^T (x - center)` is.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Posed {
    pub shape: Shape,
    pub center: Vec3,
    pub rotation: Mat3,
}

impl Posed {
    /// `axis_angle` is a rotation vector, radians.
    pub fn new(shape: Shape, center: Vec3, axis_angle: Vec3) -> Self {
        let angle = axis_angle.norm();
        let rotation = if angle > 0.0 { Mat3::rotation(axis_angle, angle) } else { Mat3::identity() };
        Self { shape, center, rotation }
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.shape.contains(&self.rotation.transpose().mul_vec(&(*x - self.center)))
    }

    pub fn bounds(&self) -> (Vec3, Vec3) {
        let r = Vec3::splat(self.shape.bounding_radius());
        (self.center - r, self.center + r)
    }
}
