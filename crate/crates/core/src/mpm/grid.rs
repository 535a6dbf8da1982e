use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor3::{Real, Vec3};

/// Lattice shared by every object grid of one world.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    /// Cell size, m.
    pub dx: f64,
    /// World position of node (0, 0, 0), m.
    pub origin: Vec3,
}

/// Stencil nodes must keep this many layers between them and the lattice
/// faces; particles closer than that are out of the domain.
pub const DOMAIN_MARGIN: f64 = 2.0;

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 8) {
            return Err(Error::config(format!("grid dims {:?} must be >= 8 per axis", self.dims)));
        }
        if !(self.dx > 0.0 && self.dx.is_finite()) || !self.origin.is_finite() {
            return Err(Error::config("grid dx must be positive and origin finite"));
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn node_position(&self, node: [usize; 3]) -> Vec3 {
        Vec3::new(
            self.origin.x + node[0] as f64 * self.dx,
            self.origin.y + node[1] as f64 * self.dx,
            self.origin.z + node[2] as f64 * self.dx,
        )
    }

    /// World-space box `[lo, hi]` in which particles are inside the domain.
    pub fn interior_bounds(&self) -> (Vec3, Vec3) {
        let lo = Vec3::new(
            self.origin.x + DOMAIN_MARGIN * self.dx,
            self.origin.y + DOMAIN_MARGIN * self.dx,
            self.origin.z + DOMAIN_MARGIN * self.dx,
        );
        let hi = Vec3::new(
            self.origin.x + (self.dims[0] as f64 - 1.0 - DOMAIN_MARGIN) * self.dx,
            self.origin.y + (self.dims[1] as f64 - 1.0 - DOMAIN_MARGIN) * self.dx,
            self.origin.z + (self.dims[2] as f64 - 1.0 - DOMAIN_MARGIN) * self.dx,
        );
        (lo, hi)
    }
}

/// Quadratic B-spline stencil of one particle: per-axis weights and their
/// derivatives with respect to the grid coordinate.
#[derive(Clone, Copy, Debug)]
pub struct Stencil<S = f64> {
    /// Lattice index of the first of the 3 nodes along each axis.
    pub base: [usize; 3],
    /// Particle position relative to `base`, in cells.
    pub fx: Vec3<S>,
    pub w: [[S; 3]; 3],
    pub dw: [[S; 3]; 3],
    pub inv_dx: f64,
}

impl<S: Real> Stencil<S> {
    #[inline]
    pub fn weight(&self, i: usize, j: usize, k: usize) -> S {
        self.w[0][i] * self.w[1][j] * self.w[2][k]
    }

    /// Spatial gradient of the weight, 1/m.
    #[inline]
    pub fn gradient(&self, i: usize, j: usize, k: usize) -> Vec3<S> {
        let (w, dw) = (&self.w, &self.dw);
        Vec3::new(
            dw[0][i] * w[1][j] * w[2][k] * self.inv_dx,
            w[0][i] * dw[1][j] * w[2][k] * self.inv_dx,
            w[0][i] * w[1][j] * dw[2][k] * self.inv_dx,
        )
    }

    /// All 27 `(node, weight, gradient)` triples.
    pub fn nodes(&self) -> impl Iterator<Item = ([usize; 3], S, Vec3<S>)> + '_ {
        (0..27).map(move |n| {
            let (i, j, k) = (n / 9, (n / 3) % 3, n % 3);
            let node = [self.base[0] + i, self.base[1] + j, self.base[2] + k];
            (node, self.weight(i, j, k), self.gradient(i, j, k))
        })
    }
}

fn axis_weights<S: Real>(fx: S) -> ([S; 3], [S; 3]) {
    let a = -fx + 1.5;
    let b = fx - 1.0;
    let c = fx - 0.5;
    ([a.sq() * 0.5, -b.sq() + 0.75, c.sq() * 0.5], [-a, b * -2.0, c])
}

/// Errors carry placeholder indices; callers fill in object and particle.
pub fn bspline_stencil<S: Real>(xp: &Vec3<S>, grid: &GridSpec) -> Result<Stencil<S>> {
    let inv_dx = 1.0 / grid.dx;
    let out = || Error::OutOfDomain { object: usize::MAX, particle: usize::MAX };
    let mut base = [0usize; 3];
    let mut fx = Vec3::zero();
    let mut w = [[S::zero(); 3]; 3];
    let mut dw = [[S::zero(); 3]; 3];
    for a in 0..3 {
        let xa = (xp.get(a) - grid.origin.get(a)) * inv_dx;
        let v = xa.val();
        if !v.is_finite() || v < DOMAIN_MARGIN || v > grid.dims[a] as f64 - 1.0 - DOMAIN_MARGIN {
            return Err(out());
        }
        let b = (v - 0.5).floor();
        base[a] = b as usize;
        let f = xa - b;
        fx.set(a, f);
        let (wa, da) = axis_weights(f);
        w[a] = wa;
        dw[a] = da;
    }
    Ok(Stencil { base, fx, w, dw, inv_dx })
}

/// Per-object grid data restricted to the box of nodes touched by that
/// object's particles this step.
#[derive(Clone, Debug)]
pub struct ObjectGrid<S = f64> {
    pub spec: GridSpec,
    /// Lattice index of the window's first node.
    pub lo: [usize; 3],
    pub size: [usize; 3],
    pub mass: Vec<S>,
    pub momentum: Vec<Vec3<S>>,
    pub force: Vec<Vec3<S>>,
    pub velocity: Vec<Vec3<S>>,
    pub(crate) stencils: Vec<Stencil<S>>,
}

impl<S: Real> ObjectGrid<S> {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            spec,
            lo: [0; 3],
            size: [0; 3],
            mass: Vec::new(),
            momentum: Vec::new(),
            force: Vec::new(),
            velocity: Vec::new(),
            stencils: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Resizes the window to `[lo, lo + size)` and zeroes every field.
    pub(crate) fn reset_window(&mut self, lo: [usize; 3], size: [usize; 3]) {
        self.lo = lo;
        self.size = size;
        let n = size[0] * size[1] * size[2];
        for buf in [&mut self.momentum, &mut self.force, &mut self.velocity] {
            buf.clear();
            buf.resize(n, Vec3::zero());
        }
        self.mass.clear();
        self.mass.resize(n, S::zero());
    }

    #[inline]
    pub fn local_index(&self, node: [usize; 3]) -> Option<usize> {
        let mut idx = 0;
        for a in 0..3 {
            let off = node[a].checked_sub(self.lo[a])?;
            if off >= self.size[a] {
                return None;
            }
            idx = idx * self.size[a] + off;
        }
        Some(idx)
    }

    #[inline]
    pub fn node_of(&self, local: usize) -> [usize; 3] {
        let k = local % self.size[2];
        let j = (local / self.size[2]) % self.size[1];
        let i = local / (self.size[1] * self.size[2]);
        [self.lo[0] + i, self.lo[1] + j, self.lo[2] + k]
    }

    /// Node mass, zero outside the window.
    #[inline]
    pub fn mass_at(&self, node: [usize; 3]) -> S {
        self.local_index(node).map_or(S::zero(), |i| self.mass[i])
    }

    pub fn total_mass(&self) -> S {
        self.mass.iter().fold(S::zero(), |acc, &m| acc + m)
    }

    pub fn total_momentum(&self) -> Vec3<S> {
        self.momentum.iter().fold(Vec3::zero(), |acc, &p| acc + p)
    }

    pub fn stencils(&self) -> &[Stencil<S>] {
        &self.stencils
    }
}
