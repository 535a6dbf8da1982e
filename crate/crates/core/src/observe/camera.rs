use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor3::{Mat3, Real, Vec3};

/// Pinhole camera. Pixel centres sit at integer coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    /// World-to-camera rotation; rows are the camera's right, down and
    /// forward axes in world coordinates.
    pub rotation: Mat3,
    pub translation: Vec3,
    pub width: usize,
    pub height: usize,
}

/// Minimum depth in front of the camera, m.
pub const MIN_DEPTH: f64 = 1e-6;

impl Camera {
    /// Camera at `eye` looking at `target` with vertical field of view
    /// `fov_y` (radians).
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, fov_y: f64, width: usize, height: usize) -> Result<Self> {
        let fwd = (target - eye).normalized();
        let mut right = fwd.cross(&up);
        if right.norm() < 1e-9 {
            right = fwd.cross(&Vec3::new(1.0, 0.0, 0.0));
        }
        let right = right.normalized();
        let down = fwd.cross(&right);
        let rotation = Mat3::from_rows([right.to_array(), down.to_array(), fwd.to_array()]);
        let f = 0.5 * height as f64 / (0.5 * fov_y).tan();
        let cam = Self {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            rotation,
            translation: -rotation.mul_vec(&eye),
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || self.width == 0 || self.height == 0 {
            return Err(Error::config("camera needs positive focal lengths and resolution"));
        }
        let rrt = self.rotation.mul_mat(&self.rotation.transpose());
        if rrt.max_abs_diff(&Mat3::identity()) > 1e-9 {
            return Err(Error::config("camera rotation is not orthonormal"));
        }
        Ok(())
    }

    pub fn to_camera<S: Real>(&self, x: &Vec3<S>) -> Vec3<S> {
        let r = &self.rotation.m;
        let row = |i: usize| {
            x.x * r[i][0] + x.y * r[i][1] + x.z * r[i][2] + self.translation.get(i)
        };
        Vec3::new(row(0), row(1), row(2))
    }

    /// Camera centre in world coordinates.
    pub fn eye(&self) -> Vec3 {
        -self.rotation.transpose().mul_vec(&self.translation)
    }
}

/// `(u, v, depth)` of a world point.
pub fn project<S: Real>(cam: &Camera, x: &Vec3<S>) -> Result<(S, S, S)> {
    let c = cam.to_camera(x);
    if !(c.z.val() > MIN_DEPTH) {
        return Err(Error::BehindCamera(c.z.val()));
    }
    let inv = c.z.recip();
    Ok((c.x * inv * cam.fx + cam.cx, c.y * inv * cam.fy + cam.cy, c.z))
}

/// `n` cameras on a hemisphere around `target`, spread by a golden-angle
/// spiral in azimuth and evenly in elevation between roughly 10 and 75
/// degrees.
pub fn hemisphere_cameras(
    n: usize,
    target: Vec3,
    radius: f64,
    fov_y: f64,
    width: usize,
    height: usize,
) -> Result<Vec<Camera>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let (lo, hi) = (10f64.to_radians(), 75f64.to_radians());
    (0..n)
        .map(|i| {
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            let elev = lo + t * (hi - lo);
            let azim = i as f64 * golden;
            let dir = Vec3::new(elev.cos() * azim.cos(), elev.cos() * azim.sin(), elev.sin());
            let eye = target + dir.scale_f(radius);
            Camera::look_at(eye, target, Vec3::new(0.0, 0.0, 1.0), fov_y, width, height)
        })
        .collect()
}
