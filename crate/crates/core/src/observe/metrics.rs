use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor3::{Real, Vec3};

/// Squared metres to the reporting unit of 10^3 mm^2.
pub const M2_TO_REPORT: f64 = 1e3;
/// Default EMD subsample size.
pub const EMD_SUBSAMPLE: usize = 512;
const EMD_SEED: u64 = 0x454d_4400;
/// Cells along the longest bounding-box side of a nearest-neighbour grid.
const NN_CELLS: f64 = 32.0;

#[inline]
fn d2<S: Real>(a: &Vec3<S>, b: &Vec3) -> S {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

/// Exact nearest-neighbour queries over a dense uniform grid.
pub struct NnIndex<'a> {
    points: &'a [Vec3],
    min: Vec3,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl<'a> NnIndex<'a> {
    pub fn new(points: &'a [Vec3]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySet);
        }
        let (mut min, mut max) = (points[0], points[0]);
        for p in points {
            min = min.min_by_component(p);
            max = max.max_by_component(p);
        }
        let extent = (max.x - min.x).max(max.y - min.y).max(max.z - min.z);
        let cell = if extent > 0.0 { extent / NN_CELLS } else { 1.0 };
        let mut dims = [1usize; 3];
        for a in 0..3 {
            dims[a] = ((max.get(a) - min.get(a)) / cell).floor() as usize + 1;
        }
        let mut index = Self { points, min, cell, dims, starts: Vec::new(), items: Vec::new() };
        let n_cells = dims[0] * dims[1] * dims[2];
        let keys: Vec<usize> = points.iter().map(|p| index.flat(index.cell_of(p))).collect();
        let mut counts = vec![0u32; n_cells + 1];
        for &k in &keys {
            counts[k + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, &k) in keys.iter().enumerate() {
            items[fill[k] as usize] = i as u32;
            fill[k] += 1;
        }
        index.starts = counts;
        index.items = items;
        Ok(index)
    }

    fn cell_of(&self, p: &Vec3) -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..3 {
            let t = ((p.get(a) - self.min.get(a)) / self.cell).floor();
            c[a] = t.clamp(0.0, (self.dims[a] - 1) as f64) as usize;
        }
        c
    }

    #[inline]
    fn flat(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    /// Index and squared distance of the nearest indexed point. Ties go to
    /// the first point found.
    pub fn nearest(&self, q: &Vec3) -> (usize, f64) {
        self.nearest_where(q, |_| true)
    }

    /// As [`nearest`](Self::nearest), over the points accepted by `keep`.
    /// Returns `(usize::MAX, inf)` when none is accepted.
    pub fn nearest_where(&self, q: &Vec3, keep: impl Fn(usize) -> bool) -> (usize, f64) {
        let c = self.cell_of(q);
        let mut best = (usize::MAX, f64::INFINITY);
        let max_r = self.dims.iter().copied().max().unwrap_or(1);
        for r in 0..=max_r {
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            for a in 0..3 {
                lo[a] = c[a].saturating_sub(r);
                hi[a] = (c[a] + r).min(self.dims[a] - 1);
            }
            for i in lo[0]..=hi[0] {
                for j in lo[1]..=hi[1] {
                    for k in lo[2]..=hi[2] {
                        let on_ring = i.abs_diff(c[0]) == r || j.abs_diff(c[1]) == r || k.abs_diff(c[2]) == r;
                        if !on_ring {
                            continue;
                        }
                        let f = self.flat([i, j, k]);
                        for &it in &self.items[self.starts[f] as usize..self.starts[f + 1] as usize] {
                            if !keep(it as usize) {
                                continue;
                            }
                            let d = d2(&self.points[it as usize], q);
                            if d < best.1 || (d == best.1 && (it as usize) < best.0) {
                                best = (it as usize, d);
                            }
                        }
                    }
                }
            }
            // distance from q to the outside of the searched block
            let mut bound = f64::INFINITY;
            for a in 0..3 {
                if lo[a] > 0 {
                    bound = bound.min(q.get(a) - (self.min.get(a) + lo[a] as f64 * self.cell));
                }
                if hi[a] + 1 < self.dims[a] {
                    bound = bound.min(self.min.get(a) + (hi[a] + 1) as f64 * self.cell - q.get(a));
                }
            }
            if bound == f64::INFINITY || (best.0 != usize::MAX && bound > 0.0 && best.1 <= bound * bound) {
                break;
            }
        }
        best
    }
}

/// Nearest point of `b` for every point of `a`.
pub fn nearest_pairs(a: &[Vec3], b: &[Vec3]) -> Result<Vec<usize>> {
    let index = NnIndex::new(b)?;
    Ok(a.iter().map(|q| index.nearest(q).0).collect())
}

/// Symmetric Chamfer distance: mean squared nearest-neighbour distance in
/// both directions, in 10^3 mm^2.
pub fn chamfer(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    chamfer_tracked(a, b)
}

/// Chamfer distance whose first argument carries tangents; nearest
/// neighbours are chosen on primal values.
pub fn chamfer_tracked<S: Real>(a: &[Vec3<S>], b: &[Vec3]) -> Result<S> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let a_val: Vec<Vec3> = a.iter().map(Vec3::val).collect();
    let ab = nearest_pairs(&a_val, b)?;
    let ba = nearest_pairs(b, &a_val)?;
    let mut fwd = S::zero();
    for (p, &j) in a.iter().zip(&ab) {
        fwd += d2(p, &b[j]);
    }
    let mut bwd = S::zero();
    for (q, &i) in b.iter().zip(&ba) {
        bwd += d2(&a[i], q);
    }
    Ok((fwd / a.len() as f64 + bwd / b.len() as f64) * M2_TO_REPORT)
}

/// Reference Chamfer distance by exhaustive search.
pub fn chamfer_brute_force(a: &[Vec3], b: &[Vec3]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let one_way = |x: &[Vec3], y: &[Vec3]| {
        x.iter().map(|p| y.iter().map(|q| d2(q, p)).fold(f64::INFINITY, f64::min)).sum::<f64>()
            / x.len() as f64
    };
    Ok((one_way(a, b) + one_way(b, a)) * M2_TO_REPORT)
}

/// Minimum-cost perfect matching on a square cost matrix (row-major);
/// returns the column matched to each row.
pub fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // potentials method over a 1-based augmented matrix
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            let row = &cost[(i0 - 1) * n..i0 * n];
            for j in 1..=n {
                if !used[j] {
                    let cur = row[j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

fn subsample(points: &[Vec3], n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec3> {
    if n >= points.len() {
        return points.to_vec();
    }
    let mut idx = rand::seq::index::sample(rng, points.len(), n).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| points[i]).collect()
}

/// Earth mover's distance: seeded subsample of both sets to
/// `min(n_sub, |a|, |b|)` points, exact matching, mean matched distance (m).
pub fn emd(a: &[Vec3], b: &[Vec3], n_sub: usize) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let n = n_sub.min(a.len()).min(b.len()).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(EMD_SEED);
    let sa = subsample(a, n, &mut rng);
    let sb = subsample(b, n, &mut rng);
    Ok(matched_mean_distance(&sa, &sb))
}

/// Mean distance of the optimal perfect matching between equal-size sets,
/// summed in row order.
pub fn matched_mean_distance(a: &[Vec3], b: &[Vec3]) -> f64 {
    let n = a.len();
    let mut cost = vec![0.0; n * n];
    for (i, p) in a.iter().enumerate() {
        for (j, q) in b.iter().enumerate() {
            cost[i * n + j] = d2(p, q).sqrt();
        }
    }
    let assignment = hungarian(&cost, n);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    total / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<Vec3> {
        (0..n)
            .map(|_| Vec3::new(rng.gen::<f64>() * scale, rng.gen::<f64>() * scale, rng.gen::<f64>() * scale))
            .collect()
    }

    #[test]
    fn chamfer_examples() {
        let a = vec![Vec3::ZERO];
        let b = vec![Vec3::new(0.0, 0.0, 0.001)];
        // 1e-6 m^2 each way, 2e-6 m^2 total, 2e-3 in 10^3 mm^2
        assert!((chamfer(&a, &b).unwrap() - 2e-3).abs() < 1e-15);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
        assert!(matches!(chamfer(&a, &[]), Err(Error::EmptySet)));
    }

    #[test]
    fn chamfer_matches_brute_force_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 0..50 {
            let a = cloud(&mut rng, 1 + t * 3, 0.1);
            let b = cloud(&mut rng, 2 + t * 2, 0.13);
            assert_eq!(chamfer(&a, &b).unwrap(), chamfer_brute_force(&a, &b).unwrap());
            assert_eq!(chamfer(&a, &b).unwrap(), chamfer(&b, &a).unwrap());
        }
    }

    #[test]
    fn nearest_handles_outside_queries_and_duplicates() {
        let pts = vec![Vec3::ZERO, Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0)];
        let idx = NnIndex::new(&pts).unwrap();
        assert_eq!(idx.nearest(&Vec3::new(-5.0, 0.0, 0.0)), (0, 25.0));
        assert_eq!(idx.nearest(&Vec3::new(3.0, 1.0, 1.0)), (2, 4.0));
        let single = vec![Vec3::new(0.3, 0.3, 0.3)];
        assert_eq!(NnIndex::new(&single).unwrap().nearest(&Vec3::ZERO).0, 0);
    }

    #[test]
    fn emd_examples() {
        let a = vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)];
        let b = vec![Vec3::new(0.0, 0.0, 0.1), Vec3::new(1.0, 0.0, 0.1)];
        assert!((emd(&a, &b, 512).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(emd(&a, &a, 512).unwrap(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = cloud(&mut rng, 700, 1.0);
        let d = cloud(&mut rng, 650, 1.0);
        let e = emd(&c, &d, 64).unwrap();
        assert!(e >= 0.0 && e == emd(&c, &d, 64).unwrap());
    }

    #[test]
    fn hungarian_matches_permutation_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=6 {
            let cost: Vec<f64> = (0..n * n).map(|_| rng.gen::<f64>()).collect();
            let got = hungarian(&cost, n);
            let got_cost: f64 = got.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut best = f64::INFINITY;
            permute(&mut perm, 0, &mut |p| {
                best = best.min(p.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum());
            });
            assert!((got_cost - best).abs() < 1e-12);
        }
    }

    fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == p.len() {
            f(p);
            return;
        }
        for i in k..p.len() {
            p.swap(k, i);
            permute(p, k + 1, f);
            p.swap(k, i);
        }
    }
}
