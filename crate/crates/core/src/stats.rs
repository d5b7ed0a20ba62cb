//! Normal distribution helpers and the shared interval type.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

pub fn normal_cdf(z: f64) -> f64 {
    standard_normal().cdf(z)
}

pub fn normal_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(p)
}

/// Upper `α/2` normal quantile for a two-sided interval at `level = 1 − α`.
pub fn two_sided_z(level: f64) -> f64 {
    assert!((0.0..1.0).contains(&level), "confidence level must lie in [0, 1)");
    if level == 0.0 {
        return 0.0;
    }
    normal_quantile(0.5 + level / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lower <= v && v <= self.upper
    }

    pub fn clamp_to(self, lo: f64, hi: f64) -> Self {
        Self::new(self.lower.clamp(lo, hi), self.upper.clamp(lo, hi))
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let p = f.precision().unwrap_or(4);
        write!(f, "[{:.*}, {:.*}]", p, self.lower, p, self.upper)
    }
}
