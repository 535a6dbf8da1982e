//! Constitutive laws and plastic return mappings.
//!
//! Every stress routine returns the Kirchhoff stress `J * T`, which is exactly
//! `P F^T` and is what the grid force computation consumes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor3::{hencky, Mat3, Real, Svd3, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaterialFamily {
    /// Neo-Hookean solid.
    Elastic,
    /// StVK (Hencky) elasticity with von Mises plasticity.
    Plasticine,
    /// Same law and parameters as plasticine.
    Snow,
    /// Viscous fluid with a `J`-based volumetric term; tracks volume only.
    NewtonianFluid,
    /// StVK (Hencky) elasticity with Drucker-Prager plasticity.
    Sand,
}

impl MaterialFamily {
    pub const ALL: [MaterialFamily; 5] = [
        MaterialFamily::Elastic,
        MaterialFamily::Plasticine,
        MaterialFamily::Snow,
        MaterialFamily::NewtonianFluid,
        MaterialFamily::Sand,
    ];

    pub fn is_fluid(self) -> bool {
        self == MaterialFamily::NewtonianFluid
    }

    /// Parameters the identification loop is allowed to move, in layout order.
    pub fn active_params(self) -> &'static [ParamKind] {
        use ParamKind::*;
        match self {
            MaterialFamily::Elastic => &[LogYoungs, Poisson, ContactFriction],
            MaterialFamily::Plasticine | MaterialFamily::Snow => {
                &[LogYoungs, Poisson, LogYield, ContactFriction]
            }
            MaterialFamily::NewtonianFluid => &[LogViscosity, LogBulk, ContactFriction],
            MaterialFamily::Sand => &[FrictionAngle, ContactFriction],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MaterialFamily::Elastic => "elastic",
            MaterialFamily::Plasticine => "plasticine",
            MaterialFamily::Snow => "snow",
            MaterialFamily::NewtonianFluid => "newtonian_fluid",
            MaterialFamily::Sand => "sand",
        }
    }
}

/// One optimizable material coordinate, named by its optimization-space
/// encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    LogYoungs,
    Poisson,
    LogYield,
    LogViscosity,
    LogBulk,
    FrictionAngle,
    ContactFriction,
}

/// Per-object continuous constitutive parameters, in physical units.
///
/// Fields a family does not use are still present and ignored by its law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams<S = f64> {
    pub family: MaterialFamily,
    /// Young's modulus, Pa.
    pub youngs_modulus: S,
    pub poisson_ratio: S,
    /// von Mises yield stress, Pa.
    pub yield_stress: S,
    /// Fluid viscosity, Pa s.
    pub viscosity: S,
    /// Bulk modulus, Pa.
    pub bulk_modulus: S,
    /// Drucker-Prager friction angle, radians.
    pub friction_angle: S,
    /// Mass density, kg/m^3. Never optimized.
    pub density: f64,
    /// Coulomb coefficient used for object-object contact.
    pub contact_friction: S,
}

impl MaterialParams<f64> {
    /// Mid-range defaults for `family`.
    pub fn new(family: MaterialFamily) -> Self {
        Self {
            family,
            youngs_modulus: 5.0e4,
            poisson_ratio: 0.25,
            yield_stress: 1.4e3,
            viscosity: 1.0,
            bulk_modulus: 1.0e5,
            friction_angle: 30f64.to_radians(),
            density: 1000.0,
            contact_friction: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.youngs_modulus > 0.0, "E must be positive"),
            (self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5, "nu must lie in (0, 0.5)"),
            (self.yield_stress >= 0.0, "yield stress must be non-negative"),
            (self.viscosity >= 0.0, "viscosity must be non-negative"),
            (self.bulk_modulus > 0.0, "bulk modulus must be positive"),
            (
                self.friction_angle > 0.0 && self.friction_angle < std::f64::consts::FRAC_PI_2,
                "friction angle must lie in (0, pi/2)",
            ),
            (self.density > 0.0, "density must be positive"),
            (self.contact_friction >= 0.0, "contact friction must be non-negative"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::config(format!("{} material: {msg}", self.family.name())));
            }
        }
        Ok(())
    }

    pub fn lift<S: Real>(&self) -> MaterialParams<S> {
        MaterialParams {
            family: self.family,
            youngs_modulus: S::cst(self.youngs_modulus),
            poisson_ratio: S::cst(self.poisson_ratio),
            yield_stress: S::cst(self.yield_stress),
            viscosity: S::cst(self.viscosity),
            bulk_modulus: S::cst(self.bulk_modulus),
            friction_angle: S::cst(self.friction_angle),
            density: self.density,
            contact_friction: S::cst(self.contact_friction),
        }
    }
}

impl<S: Real> MaterialParams<S> {
    pub fn val(&self) -> MaterialParams<f64> {
        MaterialParams {
            family: self.family,
            youngs_modulus: self.youngs_modulus.val(),
            poisson_ratio: self.poisson_ratio.val(),
            yield_stress: self.yield_stress.val(),
            viscosity: self.viscosity.val(),
            bulk_modulus: self.bulk_modulus.val(),
            friction_angle: self.friction_angle.val(),
            density: self.density,
            contact_friction: self.contact_friction.val(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LameParams<S = f64> {
    pub mu: S,
    pub lambda: S,
}

pub fn lame_from<S: Real>(youngs: S, poisson: S) -> Result<LameParams<S>> {
    let nu = poisson.val();
    if !(nu > 0.0 && nu < 0.5) {
        return Err(Error::InvalidPoisson(nu));
    }
    let mu = youngs / ((poisson + 1.0) * 2.0);
    let lambda = youngs * poisson / ((poisson + 1.0) * (-(poisson * 2.0) + 1.0));
    Ok(LameParams { mu, lambda })
}

pub const POISSON_MIN: f64 = 0.05;
pub const POISSON_MAX: f64 = 0.45;

/// Smooth bijection from the real line onto `(POISSON_MIN, POISSON_MAX)`.
pub fn squash_poisson<S: Real>(u: S) -> S {
    u.sigmoid() * (POISSON_MAX - POISSON_MIN) + POISSON_MIN
}

pub fn unsquash_poisson(nu: f64) -> f64 {
    let t = (nu - POISSON_MIN) / (POISSON_MAX - POISSON_MIN);
    (t / (1.0 - t)).ln()
}

fn inverted(det: f64) -> Error {
    Error::InvertedElement { particle: usize::MAX, det }
}

/// `J T = mu F F^T + (lambda ln J - mu) I`.
pub fn kirchhoff_neohookean<S: Real>(f: &Mat3<S>, lame: &LameParams<S>) -> Result<Mat3<S>> {
    let j = f.det();
    if !(j.val() > 0.0) {
        return Err(inverted(j.val()));
    }
    let fft = f.mul_mat(&f.transpose());
    Ok(fft.scale(lame.mu).add_scaled_identity(lame.lambda * j.ln() - lame.mu).symmetrize())
}

/// `J T = mu/2 (grad v + grad v^T) + kappa (J - J^-6) I`.
pub fn kirchhoff_newtonian<S: Real>(
    grad_v: &Mat3<S>,
    j: S,
    params: &MaterialParams<S>,
) -> Result<Mat3<S>> {
    if !(j.val() > 0.0) {
        return Err(inverted(j.val()));
    }
    let j2 = j * j;
    let j6 = j2 * j2 * j2;
    let shear = (*grad_v + grad_v.transpose()).scale(params.viscosity * 0.5);
    Ok(shear.add_scaled_identity(params.bulk_modulus * (j - j6.recip())).symmetrize())
}

fn checked_svd<S: Real>(f: &Mat3<S>) -> Result<(Svd3<S>, Vec3<S>)> {
    let svd = S::svd3(f);
    if !(svd.sigma[2].val() > 0.0) {
        return Err(inverted(f.det().val()));
    }
    let eps = hencky(&svd).map_err(|_| inverted(f.det().val()))?;
    Ok((svd, eps))
}

/// `J T = U (2 mu eps + lambda tr(eps) I) U^T` with `eps` the Hencky strain.
pub fn kirchhoff_stvk_hencky<S: Real>(f: &Mat3<S>, lame: &LameParams<S>) -> Result<Mat3<S>> {
    let (svd, eps) = checked_svd(f)?;
    Ok(stvk_from_strain(&svd, &eps, lame))
}

fn stvk_from_strain<S: Real>(svd: &Svd3<S>, eps: &Vec3<S>, lame: &LameParams<S>) -> Mat3<S> {
    let vol = lame.lambda * (eps.x + eps.y + eps.z);
    let two_mu = lame.mu * 2.0;
    let d = [two_mu * eps.x + vol, two_mu * eps.y + vol, two_mu * eps.z + vol];
    svd.u.mul_diag_mul_t(&d, &svd.u).symmetrize()
}

fn exp_strain<S: Real>(svd: &Svd3<S>, eps: &Vec3<S>) -> Mat3<S> {
    svd.u.mul_diag_mul_t(&[eps.x.exp(), eps.y.exp(), eps.z.exp()], &svd.v)
}

/// Splits a principal strain into (deviatoric part, its norm, trace).
fn deviatoric<S: Real>(eps: &Vec3<S>) -> (Vec3<S>, S, S) {
    let tr = eps.x + eps.y + eps.z;
    let mean = tr / 3.0;
    let dev = Vec3::new(eps.x - mean, eps.y - mean, eps.z - mean);
    let n2 = dev.norm_sq();
    let norm = if n2.val() > 0.0 { n2.sqrt() } else { S::zero() };
    (dev, norm, tr)
}

/// von Mises return mapping in Hencky strain space.
///
/// Yields when `||dev eps|| > tau_y / (2 mu)` and then shrinks the deviatoric
/// strain radially back to that radius, leaving the volumetric strain alone.
pub fn return_map_von_mises<S: Real>(
    f_trial: &Mat3<S>,
    lame: &LameParams<S>,
    tau_y: S,
) -> Result<Mat3<S>> {
    let (svd, eps) = checked_svd(f_trial)?;
    let (dev, norm, _) = deviatoric(&eps);
    let dgamma = norm - tau_y / (lame.mu * 2.0);
    if dgamma.val() <= 0.0 {
        return Ok(*f_trial);
    }
    let k = dgamma / norm;
    let projected = eps - dev.scale(k);
    Ok(exp_strain(&svd, &projected))
}

/// Cone slope `sqrt(2/3) * 2 sin(theta) / (3 - sin(theta))`.
pub fn drucker_prager_alpha<S: Real>(friction_angle: S) -> S {
    let s = friction_angle.sin();
    s * 2.0 / (-s + 3.0) * (2.0f64 / 3.0).sqrt()
}

/// Drucker-Prager yield value for a principal Hencky strain; `<= 0` is
/// admissible.
pub fn drucker_prager_yield<S: Real>(eps: &Vec3<S>, lame: &LameParams<S>, alpha: S) -> S {
    let (_, norm, tr) = deviatoric(eps);
    norm + alpha * (lame.lambda * 3.0 + lame.mu * 2.0) * tr / (lame.mu * 2.0)
}

/// Drucker-Prager return mapping for sand: expansion goes to the stress-free
/// rotation `U V^T`, admissible compression is kept, everything else is
/// projected onto the cone along the deviatoric direction.
pub fn return_map_drucker_prager<S: Real>(
    f_trial: &Mat3<S>,
    lame: &LameParams<S>,
    friction_angle: S,
) -> Result<Mat3<S>> {
    let (svd, eps) = checked_svd(f_trial)?;
    let (dev, norm, tr) = deviatoric(&eps);
    if tr.val() > 0.0 {
        return Ok(svd.u.mul_mat(&svd.v.transpose()));
    }
    let alpha = drucker_prager_alpha(friction_angle);
    let dgamma = norm + alpha * (lame.lambda * 3.0 + lame.mu * 2.0) * tr / (lame.mu * 2.0);
    if dgamma.val() <= 0.0 {
        return Ok(*f_trial);
    }
    let k = dgamma / norm;
    let projected = eps - dev.scale(k);
    Ok(exp_strain(&svd, &projected))
}

/// Symmetric pair composition of two Coulomb coefficients.
#[inline]
pub fn friction_pair<S: Real>(a: S, b: S) -> S {
    (a + b) * 0.5
}

/// Kirchhoff stress for any family. `affine_grad_v` is the particle's APIC
/// velocity gradient, only used by fluids.
pub fn kirchhoff_stress<S: Real>(
    params: &MaterialParams<S>,
    lame: &LameParams<S>,
    f: &Mat3<S>,
    affine_grad_v: &Mat3<S>,
) -> Result<Mat3<S>> {
    match params.family {
        MaterialFamily::Elastic => kirchhoff_neohookean(f, lame),
        MaterialFamily::Plasticine | MaterialFamily::Snow | MaterialFamily::Sand => {
            kirchhoff_stvk_hencky(f, lame)
        }
        MaterialFamily::NewtonianFluid => kirchhoff_newtonian(affine_grad_v, f.det(), params),
    }
}

/// Maps a trial deformation gradient to an admissible one.
pub fn plastic_projection<S: Real>(
    params: &MaterialParams<S>,
    lame: &LameParams<S>,
    f_trial: &Mat3<S>,
) -> Result<Mat3<S>> {
    match params.family {
        MaterialFamily::Elastic => {
            let det = f_trial.det().val();
            if det > 0.0 {
                Ok(*f_trial)
            } else {
                Err(inverted(det))
            }
        }
        MaterialFamily::Plasticine | MaterialFamily::Snow => {
            return_map_von_mises(f_trial, lame, params.yield_stress)
        }
        MaterialFamily::Sand => return_map_drucker_prager(f_trial, lame, params.friction_angle),
        MaterialFamily::NewtonianFluid => {
            let j = f_trial.det();
            if !(j.val() > 0.0) {
                return Err(inverted(j.val()));
            }
            let s = j.powf(1.0 / 3.0);
            Ok(Mat3::diag(s, s, s))
        }
    }
}

/// Lamé pair for `params`; fluids get a placeholder since their law ignores it.
pub fn lame_for<S: Real>(params: &MaterialParams<S>) -> Result<LameParams<S>> {
    if params.family.is_fluid() {
        return Ok(LameParams { mu: S::one(), lambda: S::zero() });
    }
    lame_from(params.youngs_modulus, params.poisson_ratio)
}
