use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor3::{Real, Vec3};

use super::camera::{project, Camera};

/// Binary mask, row-major, one byte per pixel holding 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Silhouette {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
    pub view: usize,
    pub object: usize,
    pub frame: usize,
}

impl Silhouette {
    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0; width * height], view: 0, object: 0, frame: 0 }
    }

    pub fn tagged(mut self, view: usize, object: usize, frame: usize) -> Self {
        self.view = view;
        self.object = object;
        self.frame = frame;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn area(&self) -> usize {
        self.data.iter().map(|&b| b as usize).sum()
    }

    /// Pixelwise OR.
    pub fn union(&self, other: &Self) -> Result<Self> {
        check_resolution(self, other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a | b).collect();
        Ok(Self { data, ..self.clone() })
    }
}

fn check_resolution(a: &Silhouette, b: &Silhouette) -> Result<()> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(Error::ResolutionMismatch((a.width, a.height), (b.width, b.height)));
    }
    Ok(())
}

/// Inclusive pixel range covering `[c - r, c + r]`, clipped to `[0, n)`.
fn pixel_range(c: f64, r: f64, n: usize) -> Option<(usize, usize)> {
    let lo = (c - r).ceil().max(0.0);
    let hi = (c + r).floor().min(n as f64 - 1.0);
    (lo <= hi && hi >= 0.0).then(|| (lo as usize, hi as usize))
}

/// Splats every point as a disk of `radius_px`; a pixel is set iff its
/// centre lies within the radius of some projected point.
pub fn rasterize_silhouette(points: &[Vec3], cam: &Camera, radius_px: f64) -> Silhouette {
    let mut mask = Silhouette::empty(cam.width, cam.height);
    let r2 = radius_px * radius_px;
    for p in points {
        let Ok((u, v, _)) = project(cam, p) else { continue };
        let (Some((x0, x1)), Some((y0, y1))) =
            (pixel_range(u, radius_px, cam.width), pixel_range(v, radius_px, cam.height))
        else {
            continue;
        };
        for y in y0..=y1 {
            let dy = y as f64 - v;
            for x in x0..=x1 {
                let dx = x as f64 - u;
                if dx * dx + dy * dy <= r2 {
                    mask.data[y * cam.width + x] = 1;
                }
            }
        }
    }
    mask
}

/// Mean absolute pixel difference.
pub fn mask_l1(a: &Silhouette, b: &Silhouette) -> Result<f64> {
    check_resolution(a, b)?;
    let diff: usize = a.data.iter().zip(&b.data).filter(|(x, y)| x != y).count();
    Ok(diff as f64 / a.data.len() as f64)
}

/// Soft-coverage band beyond the splat radius, px.
pub const SOFT_BAND_PX: f64 = 4.0;
/// Temperature of the soft coverage `sigmoid((r - d) / T)`, px.
pub const SOFT_TEMPERATURE_PX: f64 = 0.5;

/// `mask_l1` between the splat of `points` and `target`. The value is the
/// hard-mask L1; the tangents come from the soft coverage
/// `sigmoid((r - d) / 0.5)` with `d` the distance to the nearest projected
/// point.
pub fn mask_l1_soft<S: Real>(points: &[Vec3<S>], cam: &Camera, radius_px: f64, target: &Silhouette) -> Result<S> {
    let primal: Vec<Vec3> = points.iter().map(Vec3::val).collect();
    let hard = rasterize_silhouette(&primal, cam, radius_px);
    let value = mask_l1(&hard, target)?;
    if S::WIDTH == 0 {
        return Ok(S::cst(value));
    }
    let band = radius_px + SOFT_BAND_PX;
    let (w, h) = (cam.width, cam.height);
    let mut nearest: Vec<(f64, u32)> = vec![(f64::INFINITY, u32::MAX); w * h];
    let mut projected = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let Ok((u, v, _)) = project(cam, p) else { continue };
        projected.push((i, u, v));
        let (uu, vv) = (u.val(), v.val());
        let (Some((x0, x1)), Some((y0, y1))) = (pixel_range(uu, band, w), pixel_range(vv, band, h)) else {
            continue;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d2 = (x as f64 - uu).powi(2) + (y as f64 - vv).powi(2);
                let slot = &mut nearest[y * w + x];
                if d2 < slot.0 {
                    *slot = (d2, i as u32);
                }
            }
        }
    }
    let mut lookup = vec![None; points.len()];
    for &(i, u, v) in &projected {
        lookup[i] = Some((u, v));
    }
    let mut acc = S::zero();
    for (pix, &(d2, i)) in nearest.iter().enumerate() {
        if i == u32::MAX || d2 > band * band || d2 < 1e-18 {
            continue;
        }
        let (u, v) = lookup[i as usize].expect("projected point");
        let (x, y) = ((pix % w) as f64, (pix / w) as f64);
        let d = ((-u + x).sq() + (-v + y).sq()).sqrt();
        let soft = ((-d + radius_px) / SOFT_TEMPERATURE_PX).sigmoid();
        if target.data[pix] == 0 {
            acc += soft;
        } else {
            acc -= soft;
        }
    }
    Ok((acc / (w * h) as f64).with_val(value))
}

pub fn write_pgm(path: &Path, mask: &Silhouette) -> Result<()> {
    let mut buf = format!("P5\n{} {}\n255\n", mask.width, mask.height).into_bytes();
    buf.extend(mask.data.iter().map(|&b| if b != 0 { 255u8 } else { 0 }));
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<Silhouette> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| Error::Format { path: path.to_path_buf(), reason })
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Silhouette, String> {
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(format!("magic {:?} is not P5", fields[0]));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad header field {s:?}"));
    let (w, h, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(format!("maxval {maxval} is not 255"));
    }
    let body = bytes.get(pos..).unwrap_or(&[]);
    if body.len() != w * h {
        return Err(format!("payload has {} bytes, header needs {}", body.len(), w * h));
    }
    Ok(Silhouette { width: w, height: h, data: body.iter().map(|&b| (b >= 128) as u8).collect(), view: 0, object: 0, frame: 0 })
}
