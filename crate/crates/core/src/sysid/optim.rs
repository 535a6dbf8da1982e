use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(p: usize, lr: f64) -> Self {
        Self { m: vec![0.0; p], v: vec![0.0; p], t: 0, lr, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    /// Updates the moments with `grad` and returns the parameter increment.
    pub fn step(&mut self, grad: &[f64]) -> Result<Vec<f64>> {
        if grad.len() != self.m.len() {
            return Err(Error::ShapeMismatch(format!("gradient of {} for {} parameters", grad.len(), self.m.len())));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteLoss);
        }
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        Ok(grad
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                -self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps)
            })
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curriculum {
    pub start_frames: usize,
    pub increment: usize,
    pub plateau_window: usize,
    pub plateau_rel_improvement: f64,
}

impl Default for Curriculum {
    fn default() -> Self {
        Self { start_frames: 5, increment: 5, plateau_window: 10, plateau_rel_improvement: 0.01 }
    }
}

impl Curriculum {
    pub fn validate(&self) -> Result<()> {
        if self.start_frames < 2 || self.plateau_window == 0 {
            return Err(Error::config("curriculum needs start_frames >= 2 and plateau_window >= 1"));
        }
        Ok(())
    }

    /// Starts at the full horizon, i.e. no curriculum.
    pub fn disabled(frames: usize) -> Self {
        Self { start_frames: frames.max(2), ..Self::default() }
    }
}

/// Horizon schedule driven by the best loss seen at the current horizon.
#[derive(Clone, Debug)]
pub struct CurriculumTracker {
    pub cfg: Curriculum,
    pub horizon: usize,
    pub max_frames: usize,
    best: Vec<f64>,
}

impl CurriculumTracker {
    pub fn new(cfg: Curriculum, max_frames: usize) -> Self {
        Self { cfg, horizon: cfg.start_frames.min(max_frames), max_frames, best: Vec::new() }
    }

    /// Records the loss of one iteration at the current horizon; returns
    /// true when the horizon grows.
    pub fn record(&mut self, loss: f64) -> bool {
        let best = self.best.last().map_or(loss, |b| b.min(loss));
        self.best.push(best);
        let w = self.cfg.plateau_window;
        if self.horizon >= self.max_frames || self.best.len() <= w {
            return false;
        }
        let old = self.best[self.best.len() - 1 - w];
        let gain = (old - best) / old.abs().max(f64::MIN_POSITIVE);
        if gain < self.cfg.plateau_rel_improvement {
            self.horizon = (self.horizon + self.cfg.increment.max(1)).min(self.max_frames);
            self.best.clear();
            return true;
        }
        false
    }
}
