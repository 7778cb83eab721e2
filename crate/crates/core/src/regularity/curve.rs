use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::Grid1D;

/// Lipschitz curve `h(t)` sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzCurve {
    pub times: Vec<f64>,
    pub h: Vec<f64>,
    pub lip: f64,
}

impl LipschitzCurve {
    pub fn new(times: Vec<f64>, h: Vec<f64>, lip: f64) -> Result<Self> {
        if times.is_empty() || times.len() != h.len() {
            return Err(Error::InvalidData(format!("curve has {} times and {} positions", times.len(), h.len())));
        }
        for (k, w) in times.windows(2).enumerate() {
            let dt = w[1] - w[0];
            if !(dt > 0.0) {
                return Err(Error::InvalidData("curve times must be strictly increasing".into()));
            }
            if (h[k + 1] - h[k]).abs() > lip * dt + 1e-12 {
                return Err(Error::InvalidData(format!(
                    "curve moves {} in time {dt} at sample {k}, exceeding Lipschitz bound {lip}",
                    (h[k + 1] - h[k]).abs()
                )));
            }
        }
        Ok(Self { times, h, lip })
    }

    /// Straight line `x0 + speed (t − t0)` sampled at `times`.
    pub fn line(times: &[f64], x0: f64, t0: f64, speed: f64) -> Self {
        Self {
            times: times.to_vec(),
            h: times.iter().map(|&t| x0 + speed * (t - t0)).collect(),
            lip: speed.abs(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Linear interpolation, constant extension outside the sampled range.
    pub fn position(&self, t: f64) -> f64 {
        let n = self.times.len();
        if t <= self.times[0] {
            return self.h[0];
        }
        if t >= self.times[n - 1] {
            return self.h[n - 1];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.h[k] + w * (self.h[k + 1] - self.h[k])
    }

    /// Finite-difference slope on each sample (forward, last one backward).
    pub fn hdot(&self) -> Vec<f64> {
        let n = self.times.len();
        if n < 2 {
            return vec![0.0; n];
        }
        (0..n)
            .map(|k| {
                let (a, b) = if k + 1 < n { (k, k + 1) } else { (k - 1, k) };
                (self.h[b] - self.h[a]) / (self.times[b] - self.times[a])
            })
            .collect()
    }

    /// Error unless `[h − lo, h + hi]` stays inside the grid at every sample.
    pub fn check_inside(&self, grid: &Grid1D, lo: f64, hi: f64) -> Result<()> {
        for (&t, &h) in self.times.iter().zip(&self.h) {
            if !grid.contains_window(h - lo, h + hi) {
                return Err(Error::Geometry(format!(
                    "window [{}, {}] around the curve at t = {t} leaves the domain [{}, {}]",
                    h - lo,
                    h + hi,
                    grid.x_min,
                    grid.x_max
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lipschitz_bound_enforced() {
        assert!(LipschitzCurve::new(vec![0.0, 1.0], vec![0.0, 2.0], 1.0).is_err());
        assert!(LipschitzCurve::new(vec![0.0, 1.0], vec![0.0, 1.0], 1.0).is_ok());
        assert!(LipschitzCurve::new(vec![0.0, 0.0], vec![0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn line_interpolation_and_slope() {
        let c = LipschitzCurve::line(&[0.0, 0.1, 0.3], 1.0, 0.0, -2.0);
        assert!((c.position(0.2) - 0.6).abs() < 1e-15);
        assert!(c.hdot().iter().all(|&d| (d + 2.0).abs() < 1e-12));
    }
}
