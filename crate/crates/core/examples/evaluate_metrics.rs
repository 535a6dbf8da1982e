//! Chamfer and earth mover's distance between two trajectory files, as the
//! `eval` subcommand computes them, printed as CSV. Without arguments it
//! compares a cube of points with a copy shifted by 1 mm.
//!
//!     cargo run --release --example evaluate_metrics -- [pred.msv gt.msv horizon]

use mpm_sysid::bench::{eval, TrajectoryFile};

fn synthetic(shift: f32) -> TrajectoryFile {
    let cube: Vec<[f32; 3]> = (0..512).map(|i| [(i % 8) as f32 * 0.01 + shift, (i / 8 % 8) as f32 * 0.01, (i / 64) as f32 * 0.01]).collect();
    TrajectoryFile { frame_rate: 24.0, positions: vec![vec![cube]; 4] }
}

fn main() -> mpm_sysid::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (pred, gt, horizon) = match args.as_slice() {
        [p, g, h] => (TrajectoryFile::read(p.as_ref())?, TrajectoryFile::read(g.as_ref())?, h.parse().unwrap_or(1)),
        _ => (synthetic(0.001), synthetic(0.0), 2),
    };
    let report = eval(&pred, &gt, horizon)?;
    print!("{}", report.to_csv());
    eprintln!("observable mean CD {:.4} x1e3 mm^2, EMD {:?} m", report.observable.cd, report.observable.emd);
    Ok(())
}
