use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor3::Vec3;

fn voxel(p: &Vec3, h: f64) -> [i64; 3] {
    [(p.x / h).floor() as i64, (p.y / h).floor() as i64, (p.z / h).floor() as i64]
}

/// Indices of the points whose voxel of size `shell_dx` has an empty
/// face neighbour. Falls back to every index when no such point exists.
pub fn surface_extract(points: &[Vec3], shell_dx: f64) -> Vec<usize> {
    let keys: Vec<[i64; 3]> = points.iter().map(|p| voxel(p, shell_dx)).collect();
    let occupied: HashSet<[i64; 3]> = keys.iter().copied().collect();
    const FACES: [[i64; 3]; 6] = [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]];
    let shell: Vec<usize> = keys
        .iter()
        .enumerate()
        .filter(|(_, k)| FACES.iter().any(|d| !occupied.contains(&[k[0] + d[0], k[1] + d[1], k[2] + d[2]])))
        .map(|(i, _)| i)
        .collect();
    if shell.is_empty() {
        (0..points.len()).collect()
    } else {
        shell
    }
}

/// Mean inter-particle spacing from rest volumes, `mean(V0^(1/3))`.
pub fn mean_spacing(volumes: &[f64]) -> f64 {
    if volumes.is_empty() {
        return 0.0;
    }
    volumes.iter().map(|v| v.cbrt()).sum::<f64>() / volumes.len() as f64
}

/// Gathers `points[idx]` for every index.
pub fn gather<T: Copy>(points: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| points[i]).collect()
}

/// Writes one `x y z` line per point with round-trip exact formatting.
pub fn write_xyz(path: &Path, points: &[Vec3]) -> Result<()> {
    let mut s = String::with_capacity(points.len() * 48);
    for p in points {
        let _ = writeln!(s, "{:?} {:?} {:?}", p.x, p.y, p.z);
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_xyz(path: &Path) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text).map_err(|reason| Error::Format { path: path.to_path_buf(), reason })
}

fn parse_xyz(text: &str) -> std::result::Result<Vec<Vec3>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| format!("line {}: bad number {t:?}", n + 1)))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != 3 || vals.iter().any(|v| !v.is_finite()) {
            return Err(format!("line {}: expected three finite numbers", n + 1));
        }
        out.push(Vec3::new(vals[0], vals[1], vals[2]));
    }
    Ok(out)
}
