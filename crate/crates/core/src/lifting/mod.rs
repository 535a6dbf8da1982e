//! Observations to simulation particles: visual hull, multi-level
//! occupancy refinement, overlap removal and particle sampling.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialParams;
use crate::mpm::Particle;
use crate::observe::{project, Camera, NnIndex, Silhouette};
use crate::tensor3::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftConfig {
    /// Voxels along the longest side at the coarsest level.
    pub base_resolution: usize,
    /// Number of refinement levels; each doubles the resolution.
    pub levels: usize,
    pub threshold: f64,
    pub samples_per_voxel: usize,
    /// Particles kept after thinning; 0 keeps every sample.
    pub target_particle_count: usize,
}

impl Default for LiftConfig {
    fn default() -> Self {
        Self { base_resolution: 16, levels: 3, threshold: 0.4, samples_per_voxel: 8, target_particle_count: 0 }
    }
}

impl LiftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 || self.base_resolution < 2 || self.samples_per_voxel == 0 {
            return Err(Error::config("lifting needs levels >= 1, base_resolution >= 2 and samples_per_voxel >= 1"));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::config("lifting threshold must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Voxels along the longest side at the finest level.
    pub fn final_resolution(&self) -> usize {
        self.base_resolution << self.levels
    }
}

/// Voxel density field over an axis-aligned box.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub dims: [usize; 3],
    pub dx: f64,
    pub origin: Vec3,
    pub density: Vec<f64>,
}

impl OccupancyGrid {
    pub fn new(dims: [usize; 3], dx: f64, origin: Vec3) -> Self {
        Self { dims, dx, origin, density: vec![0.0; dims[0] * dims[1] * dims[2]] }
    }

    /// Coarse frame covering `[lo, hi]`: `base_resolution` voxels along the
    /// longest side plus one voxel of padding on every face.
    pub fn frame(lo: Vec3, hi: Vec3, cfg: &LiftConfig) -> Self {
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(hi.z - lo.z).max(1e-9);
        let dx = extent / cfg.base_resolution as f64;
        let mut dims = [0; 3];
        for (a, d) in dims.iter_mut().enumerate() {
            *d = ((hi.get(a) - lo.get(a)) / dx).ceil().max(1.0) as usize + 2;
        }
        Self::new(dims, dx, lo - Vec3::splat(dx))
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let k = idx % self.dims[2];
        let j = (idx / self.dims[2]) % self.dims[1];
        [idx / (self.dims[1] * self.dims[2]), j, k]
    }

    pub fn voxel_center(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        self.origin + Vec3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5).scale_f(self.dx)
    }

    /// Voxel containing `p`, if inside the grid.
    pub fn locate(&self, p: &Vec3) -> Option<usize> {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let t = ((p.get(a) - self.origin.get(a)) / self.dx).floor();
            if !(t >= 0.0 && t < self.dims[a] as f64) {
                return None;
            }
            c[a] = t as usize;
        }
        Some(self.index(c[0], c[1], c[2]))
    }

    pub fn is_occupied(&self, idx: usize) -> bool {
        self.density[idx] >= 0.5
    }

    pub fn occupied_count(&self) -> usize {
        self.density.iter().filter(|&&d| d >= 0.5).count()
    }

    pub fn same_frame(&self, other: &Self) -> bool {
        self.dims == other.dims && self.dx == other.dx && self.origin == other.origin
    }

    /// Twice the resolution, nearest-neighbour upsampling.
    pub fn upsampled(&self) -> Self {
        let dims = [self.dims[0] * 2, self.dims[1] * 2, self.dims[2] * 2];
        let mut out = Self::new(dims, self.dx * 0.5, self.origin);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    let o = out.index(i, j, k);
                    out.density[o] = self.density[self.index(i / 2, j / 2, k / 2)];
                }
            }
        }
        out
    }

    /// 3x3x3 box mean with zero padding.
    pub fn mean_filter(&mut self) {
        let [_, n1, n2] = self.dims;
        let strides = [n1 * n2, n2, 1];
        for (axis, &stride) in strides.iter().enumerate() {
            let src = self.density.clone();
            let len = self.dims[axis];
            for idx in 0..src.len() {
                let c = self.coords(idx)[axis];
                let mut s = src[idx];
                if c > 0 {
                    s += src[idx - stride];
                }
                if c + 1 < len {
                    s += src[idx + stride];
                }
                self.density[idx] = s / 3.0;
            }
        }
    }

    /// 0/1 field of the voxels overlapping the cube of side `side` centred
    /// on any point.
    pub fn cells_of(&self, points: &[Vec3], side: f64) -> Self {
        let mut out = Self::new(self.dims, self.dx, self.origin);
        let h = 0.5 * side + 0.5 * self.dx * (1.0 - 1e-9);
        for p in points {
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut empty = false;
            for a in 0..3 {
                let t = (p.get(a) - self.origin.get(a)) / self.dx - 0.5;
                let l = (t - h / self.dx).ceil().max(0.0);
                let u = (t + h / self.dx).floor().min(self.dims[a] as f64 - 1.0);
                empty |= l > u;
                lo[a] = l as usize;
                hi[a] = u.max(0.0) as usize;
            }
            if empty {
                continue;
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let v = out.index(i, j, k);
                        out.density[v] = 1.0;
                    }
                }
            }
        }
        out
    }

    /// Sets density 1 in every voxel that contains a point.
    pub fn mark_points(&mut self, points: &[Vec3]) {
        for p in points {
            if let Some(i) = self.locate(p) {
                self.density[i] = 1.0;
            }
        }
    }

    /// Binarizes at `threshold` (inclusive).
    pub fn threshold(&mut self, threshold: f64) {
        for d in &mut self.density {
            *d = if *d >= threshold { 1.0 } else { 0.0 };
        }
    }

    /// Keeps the largest 6-connected occupied component; ties go to the
    /// component found first in index order.
    pub fn keep_largest_component(&mut self) {
        let n = self.density.len();
        let mut label = vec![u32::MAX; n];
        let mut best = (0usize, u32::MAX);
        let mut queue = VecDeque::new();
        let mut next = 0u32;
        for seed in 0..n {
            if !self.is_occupied(seed) || label[seed] != u32::MAX {
                continue;
            }
            let mut size = 0;
            label[seed] = next;
            queue.push_back(seed);
            while let Some(v) = queue.pop_front() {
                size += 1;
                for w in self.face_neighbours(v) {
                    if self.is_occupied(w) && label[w] == u32::MAX {
                        label[w] = next;
                        queue.push_back(w);
                    }
                }
            }
            if size > best.0 {
                best = (size, next);
            }
            next += 1;
        }
        for (d, &l) in self.density.iter_mut().zip(&label) {
            if l != best.1 {
                *d = 0.0;
            }
        }
    }

    fn face_neighbours(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let c = self.coords(idx);
        let strides = [self.dims[1] * self.dims[2], self.dims[2], 1];
        (0..6).filter_map(move |f| {
            let a = f / 2;
            if f % 2 == 0 {
                (c[a] > 0).then(|| idx - strides[a])
            } else {
                (c[a] + 1 < self.dims[a]).then(|| idx + strides[a])
            }
        })
    }

    /// Intersection over union of the occupied voxels of two grids on the
    /// same frame.
    pub fn iou(&self, other: &Self) -> Result<f64> {
        if !self.same_frame(other) {
            return Err(Error::ShapeMismatch("occupancy grids on different frames".into()));
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for i in 0..self.density.len() {
            let (a, b) = (self.is_occupied(i), other.is_occupied(i));
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
    }

    /// Occupancy of an analytic inside test on this frame.
    pub fn from_fn(&self, inside: impl Fn(&Vec3) -> bool) -> Self {
        let mut out = Self::new(self.dims, self.dx, self.origin);
        for i in 0..out.density.len() {
            out.density[i] = inside(&out.voxel_center(i)) as u8 as f64;
        }
        out
    }
}

/// Silhouette shrunk by a disk of `radius_px`; pixels beyond the image
/// border count as foreground.
fn erode(mask: &Silhouette, radius_px: f64) -> Vec<bool> {
    let (w, h) = (mask.width as i64, mask.height as i64);
    let r = radius_px.floor() as i64;
    let offsets: Vec<(i64, i64)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| ((dx * dx + dy * dy) as f64) <= radius_px * radius_px)
        .collect();
    let mut out = vec![false; mask.data.len()];
    for y in 0..h {
        for x in 0..w {
            out[(y * w + x) as usize] = offsets.iter().all(|&(dx, dy)| {
                let (xx, yy) = (x + dx, y + dy);
                !(0..w).contains(&xx) || !(0..h).contains(&yy) || mask.data[(yy * w + xx) as usize] != 0
            });
        }
    }
    out
}

/// Samples whose projection lands on the foreground of every silhouette
/// after eroding each by `erode_px`. Points behind a camera or outside its
/// image are rejected.
pub fn hull_interior(samples: &[Vec3], silhouettes: &[Silhouette], cameras: &[Camera], erode_px: f64) -> Result<Vec<Vec3>> {
    if cameras.len() < 3 || silhouettes.len() != cameras.len() {
        return Err(Error::DegenerateViews(cameras.len().min(silhouettes.len())));
    }
    let eroded: Vec<Vec<bool>> = silhouettes.iter().map(|m| erode(m, erode_px)).collect();
    Ok(samples
        .iter()
        .filter(|p| {
            cameras.iter().zip(&eroded).all(|(cam, mask)| {
                let Ok((u, v, _)) = project(cam, *p) else { return false };
                let (x, y) = (u.round(), v.round());
                if x < 0.0 || y < 0.0 || x >= cam.width as f64 || y >= cam.height as f64 {
                    return false;
                }
                mask[y as usize * cam.width + x as usize]
            })
        })
        .copied()
        .collect())
}

/// Multi-level refinement on a frame fitted to the points.
pub fn refine_occupancy(rough: &[Vec3], cfg: &LiftConfig) -> Result<OccupancyGrid> {
    let (lo, hi) = bounds(rough).ok_or(Error::EmptyInput)?;
    refine_occupancy_in(rough, OccupancyGrid::frame(lo, hi, cfg), cfg)
}

/// Multi-level refinement starting from the coarse frame `base`. Per level
/// the field is upsampled, box-filtered, reset to 1 in voxels containing
/// input points and thresholded; the finest field keeps only its largest
/// component, to which stranded input voxels are re-attached.
pub fn refine_occupancy_in(rough: &[Vec3], base: OccupancyGrid, cfg: &LiftConfig) -> Result<OccupancyGrid> {
    cfg.validate()?;
    if rough.is_empty() {
        return Err(Error::EmptyInput);
    }
    let spacing = sample_spacing(rough);
    // coarse density: covered volume fraction, one sample standing for a
    // cube of side `spacing`
    let mut grid = base;
    grid.density.iter_mut().for_each(|d| *d = 0.0);
    let per_sample = if spacing > 0.0 { (spacing / grid.dx).powi(3) } else { 1.0 };
    for p in rough {
        if let Some(i) = grid.locate(p) {
            grid.density[i] = (grid.density[i] + per_sample).min(1.0);
        }
    }
    for _ in 0..cfg.levels {
        grid = grid.upsampled();
        grid.mean_filter();
        grid.mark_points(rough);
        grid.threshold(cfg.threshold);
        // occupancy stays inside the cells of the input samples
        let band = grid.cells_of(rough, spacing);
        for (d, b) in grid.density.iter_mut().zip(&band.density) {
            *d *= b;
        }
    }
    grid.keep_largest_component();
    reattach(&mut grid, rough);
    Ok(grid)
}

/// Joins every unoccupied voxel holding an input point to the nearest
/// occupied voxel by a 6-connected staircase, so the occupancy stays one
/// component and covers all inputs.
fn reattach(grid: &mut OccupancyGrid, points: &[Vec3]) {
    let mut orphans: Vec<usize> = points.iter().filter_map(|p| grid.locate(p)).filter(|&v| !grid.is_occupied(v)).collect();
    if orphans.is_empty() {
        return;
    }
    orphans.sort_unstable();
    orphans.dedup();
    let occupied: Vec<usize> = (0..grid.density.len()).filter(|&i| grid.is_occupied(i)).collect();
    let centers: Vec<Vec3> = occupied.iter().map(|&i| grid.voxel_center(i)).collect();
    let Ok(index) = NnIndex::new(&centers) else {
        return;
    };
    for v in orphans {
        let (nearest, _) = index.nearest(&grid.voxel_center(v));
        let target = grid.coords(occupied[nearest]);
        let mut at = grid.coords(v);
        loop {
            let idx = grid.index(at[0], at[1], at[2]);
            grid.density[idx] = 1.0;
            let Some(axis) = (0..3).filter(|&a| at[a] != target[a]).max_by_key(|&a| at[a].abs_diff(target[a])) else {
                break;
            };
            if at[axis] < target[axis] {
                at[axis] += 1;
            } else {
                at[axis] -= 1;
            }
        }
    }
}

/// Median nearest-neighbour distance over up to 256 evenly strided points.
pub fn sample_spacing(points: &[Vec3]) -> f64 {
    let Ok(index) = NnIndex::new(points) else { return 0.0 };
    let stride = points.len().div_ceil(256).max(1);
    let mut d: Vec<f64> = (0..points.len())
        .step_by(stride)
        .map(|i| index.nearest_where(&points[i], |j| j != i).1.sqrt())
        .filter(|d| d.is_finite())
        .collect();
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Axis-aligned bounds of a point set.
pub fn bounds(points: &[Vec3]) -> Option<(Vec3, Vec3)> {
    let first = *points.first()?;
    Some(points.iter().fold((first, first), |(lo, hi), p| (lo.min_by_component(p), hi.max_by_component(p))))
}

/// Centres of the voxels of `grid` that lie inside `[lo, hi]`.
pub fn lattice_in(grid: &OccupancyGrid, lo: Vec3, hi: Vec3) -> Vec<Vec3> {
    (0..grid.density.len())
        .map(|i| grid.voxel_center(i))
        .filter(|c| (0..3).all(|a| c.get(a) >= lo.get(a) && c.get(a) <= hi.get(a)))
        .collect()
}

/// Gives each voxel claimed by several grids to the object whose surface
/// samples are nearest to its centre; equal distances go to the lower id.
pub fn enforce_disjoint(grids: &[OccupancyGrid], surfaces: &[Vec<Vec3>]) -> Result<Vec<OccupancyGrid>> {
    if grids.len() != surfaces.len() {
        return Err(Error::ShapeMismatch(format!("{} grids for {} surfaces", grids.len(), surfaces.len())));
    }
    if grids.windows(2).any(|w| !w[0].same_frame(&w[1])) {
        return Err(Error::ShapeMismatch("occupancy grids on different frames".into()));
    }
    let index: Vec<NnIndex> = surfaces.iter().map(|s| NnIndex::new(s)).collect::<Result<_>>()?;
    let mut out = grids.to_vec();
    let Some(first) = grids.first() else { return Ok(out) };
    for v in 0..first.density.len() {
        let owners: Vec<usize> = (0..grids.len()).filter(|&k| grids[k].is_occupied(v)).collect();
        if owners.len() < 2 {
            continue;
        }
        let c = first.voxel_center(v);
        let mut winner = owners[0];
        let mut best = f64::INFINITY;
        for &k in &owners {
            let d = index[k].nearest(&c).1;
            if d < best {
                best = d;
                winner = k;
            }
        }
        for &k in &owners {
            if k != winner {
                out[k].density[v] = 0.0;
            }
        }
    }
    Ok(out)
}

/// Jittered samples in every occupied voxel, thinned uniformly to the
/// target count. Particles start at rest with `F = I` and `B = 0`; the
/// occupied volume is shared equally.
pub fn to_particles(
    grid: &OccupancyGrid,
    params: &MaterialParams,
    cfg: &LiftConfig,
    object_id: usize,
    seed: u64,
) -> Result<Vec<Particle>> {
    let occupied: Vec<usize> = (0..grid.density.len()).filter(|&i| grid.is_occupied(i)).collect();
    if occupied.is_empty() {
        return Err(Error::EmptyOccupancy);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (object_id as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut pts = Vec::with_capacity(occupied.len() * cfg.samples_per_voxel);
    for &v in &occupied {
        let c = grid.coords(v);
        for _ in 0..cfg.samples_per_voxel {
            let j = Vec3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            pts.push(grid.origin + Vec3::new(c[0] as f64 + j.x, c[1] as f64 + j.y, c[2] as f64 + j.z).scale_f(grid.dx));
        }
    }
    if cfg.target_particle_count > 0 && cfg.target_particle_count < pts.len() {
        let mut keep = rand::seq::index::sample(&mut rng, pts.len(), cfg.target_particle_count).into_vec();
        keep.sort_unstable();
        pts = keep.into_iter().map(|i| pts[i]).collect();
    }
    let volume = occupied.len() as f64 * grid.dx.powi(3) / pts.len() as f64;
    Ok(pts
        .into_iter()
        .map(|x| Particle::at_rest(x, Vec3::ZERO, params.density * volume, volume, object_id))
        .collect())
}
