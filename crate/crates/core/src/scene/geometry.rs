use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

pub const SPEED_OF_SOUND: f64 = 343.0;

pub(crate) fn distance(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Microphone positions in meters, relative to the array centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub mic_positions: Vec<Point>,
}

impl Default for ArrayGeometry {
    /// Six microphones on a horizontal circle of 7 cm diameter.
    fn default() -> Self {
        Self::circular(6, 0.07)
    }
}

impl ArrayGeometry {
    /// `count` microphones equally spaced on a horizontal circle, the first
    /// one on the +x axis.
    pub fn circular(count: usize, diameter: f64) -> Self {
        let r = diameter / 2.0;
        let mic_positions = (0..count)
            .map(|i| {
                let phi = 2.0 * PI * i as f64 / count as f64;
                [r * phi.cos(), r * phi.sin(), 0.0]
            })
            .collect();
        Self { mic_positions }
    }

    pub fn new(mic_positions: Vec<Point>) -> Result<Self> {
        let g = Self { mic_positions };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mic_positions.is_empty() {
            return Err(Error::InvalidInput("array has no microphones".into()));
        }
        if self.mic_positions.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("microphone positions"));
        }
        for (i, a) in self.mic_positions.iter().enumerate() {
            for b in &self.mic_positions[i + 1..] {
                if distance(a, b) < 1e-9 {
                    return Err(Error::InvalidInput("duplicate microphone position".into()));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.mic_positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mic_positions.is_empty()
    }

    /// Absolute positions for an array centered at `center`.
    pub fn placed_at(&self, center: &Point) -> Vec<Point> {
        self.mic_positions
            .iter()
            .map(|p| [p[0] + center[0], p[1] + center[1], p[2] + center[2]])
            .collect()
    }

    /// Largest distance of any microphone from the centroid.
    pub fn radius(&self) -> f64 {
        self.mic_positions
            .iter()
            .map(|p| distance(p, &[0.0; 3]))
            .fold(0.0, f64::max)
    }

    /// Microphones closest in azimuth to +90° (left) and −90° (right); ties go
    /// to the lower index.
    pub fn lateral_pair(&self) -> (usize, usize) {
        let closest = |target: f64| {
            let mut best = (0, f64::INFINITY);
            for (i, p) in self.mic_positions.iter().enumerate() {
                let az = p[1].atan2(p[0]);
                let diff = (az - target).sin().abs().max(0.0);
                let gap = if (az - target).cos() < 0.0 {
                    PI - diff.asin()
                } else {
                    diff.asin()
                };
                if gap < best.1 - 1e-12 {
                    best = (i, gap);
                }
            }
            best.0
        };
        (closest(PI / 2.0), closest(-PI / 2.0))
    }
}

/// Azimuth in degrees, `[0, 360)`, of `target` seen from `origin` in the
/// horizontal plane.
pub fn azimuth_deg(origin: &Point, target: &Point) -> f64 {
    let az = (target[1] - origin[1]).atan2(target[0] - origin[0]).to_degrees();
    az.rem_euclid(360.0)
}
