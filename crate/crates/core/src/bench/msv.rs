//! MSV1 trajectory files: little-endian binary, positions as f32.
//!
//! Layout: `b"MSV1"`, `u32` object count K, `u32` frame count T, K `u32`
//! particle counts, `f64` frame rate (Hz), `f64` meters per world unit
//! (always 1), then for each frame and object the particle positions as
//! three `f32` each.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mpm::Trajectory;
use crate::tensor3::Vec3;

pub const MAGIC: &[u8; 4] = b"MSV1";

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryFile {
    pub frame_rate: f64,
    /// `positions[frame][object][particle]`.
    pub positions: Vec<Vec<Vec<[f32; 3]>>>,
}

impl TrajectoryFile {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let positions = traj
            .positions
            .iter()
            .map(|f| f.iter().map(|o| o.iter().map(|p| [p.x as f32, p.y as f32, p.z as f32]).collect()).collect())
            .collect();
        Self { frame_rate: traj.frame_rate, positions }
    }

    pub fn num_frames(&self) -> usize {
        self.positions.len()
    }

    pub fn num_objects(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    pub fn counts(&self) -> Vec<usize> {
        self.positions.first().map_or_else(Vec::new, |f| f.iter().map(Vec::len).collect())
    }

    /// Positions of one frame and object widened to f64.
    pub fn points(&self, frame: usize, object: usize) -> Vec<Vec3> {
        self.positions[frame][object].iter().map(|p| Vec3::new(p[0] as f64, p[1] as f64, p[2] as f64)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let counts = self.counts();
        if counts.is_empty() {
            return Err(Error::EmptyInput);
        }
        if self.positions.iter().any(|f| f.iter().map(Vec::len).ne(counts.iter().copied())) {
            return Err(Error::ShapeMismatch("particle counts change between frames".into()));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let counts = self.counts();
        let total: usize = counts.iter().sum();
        let mut out = Vec::with_capacity(28 + 4 * counts.len() + self.num_frames() * total * 12);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(counts.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.num_frames() as u32).to_le_bytes());
        for &c in &counts {
            out.extend_from_slice(&(c as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.frame_rate.to_le_bytes());
        out.extend_from_slice(&1.0f64.to_le_bytes());
        for frame in &self.positions {
            for p in frame.iter().flatten() {
                for c in p {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format { path: path.to_path_buf(), reason };
        let mut at = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(at..at + n).ok_or_else(|| bad(format!("truncated at byte {at}")))?;
            at += n;
            Ok(s)
        };
        if take(4)? != MAGIC {
            return Err(bad("missing MSV1 magic".into()));
        }
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().expect("4 bytes")) as usize;
        let k = u32_at(take(4)?);
        let t = u32_at(take(4)?);
        let counts = (0..k).map(|_| take(4).map(u32_at)).collect::<Result<Vec<_>>>()?;
        let frame_rate = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        let unit = f64::from_le_bytes(take(8)?.try_into().expect("8 bytes"));
        if unit != 1.0 {
            return Err(bad(format!("world unit {unit} m is not supported")));
        }
        let header = 28 + 4 * k;
        let expected = counts.iter().sum::<usize>().checked_mul(12 * t).and_then(|n| n.checked_add(header));
        if expected != Some(bytes.len()) {
            return Err(bad(format!("payload is {} bytes, header implies {expected:?}", bytes.len())));
        }
        let mut positions = Vec::with_capacity(t);
        let mut off = header;
        let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        for _ in 0..t {
            let mut frame = Vec::with_capacity(k);
            for &c in &counts {
                let obj = (0..c).map(|i| [f32_at(off + 12 * i), f32_at(off + 12 * i + 4), f32_at(off + 12 * i + 8)]).collect();
                off += 12 * c;
                frame.push(obj);
            }
            positions.push(frame);
        }
        Ok(Self { frame_rate, positions })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}
