//! Time-varying obstacle sets built from unions of moving balls.
//!
//! Distances follow the level-set convention used throughout the crate:
//! the signed distance is positive inside an obstacle and negative in free
//! space. The free-space indicator is `1` outside every ball and `0` inside;
//! its smoothed version replaces the jump by a steep `tanh` profile so that
//! spatial updates can take gradient steps through it.
//!
//! Times passed to these functions are equation times (the time variable of
//! the reversed HJB evolution), not physical times.

mod raster;

pub use raster::{decompose_region, RasterRegion};

use serde::{Deserialize, Serialize};

use crate::error::{PlanError, Result};

/// Signed distance returned for an empty obstacle set.
pub const EMPTY_DISTANCE: f64 = -1e30;

/// Default steepness of the smoothed indicator.
pub const DEFAULT_STEEPNESS: f64 = 100.0;

/// Motion law of a ball center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Motion {
    Static,
    /// Rotation about `pivot` at `rate` radians per unit time. Positive rates
    /// turn counterclockwise. In 3D the rotation is about the vertical axis
    /// through `pivot`, leaving the z coordinate unchanged.
    Rotation {
        pivot: Vec<f64>,
        rate: f64,
    },
    /// Constant velocity drift.
    Linear {
        velocity: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingBall {
    /// Center at time zero.
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "static_motion", skip_serializing_if = "Motion::is_static")]
    pub motion: Motion,
}

fn static_motion() -> Motion {
    Motion::Static
}

impl Motion {
    pub fn is_static(&self) -> bool {
        matches!(self, Motion::Static)
    }
}

impl MovingBall {
    pub fn fixed(center: Vec<f64>, radius: f64) -> Self {
        MovingBall {
            center,
            radius,
            motion: Motion::Static,
        }
    }

    pub fn rotating(center: Vec<f64>, radius: f64, pivot: Vec<f64>, rate: f64) -> Self {
        MovingBall {
            center,
            radius,
            motion: Motion::Rotation { pivot, rate },
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn validate(&self, spatial_dim: usize) -> Result<()> {
        if self.center.len() != spatial_dim {
            return Err(PlanError::DimensionMismatch {
                what: "ball center",
                expected: spatial_dim,
                got: self.center.len(),
            });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(PlanError::InvalidParameter(format!(
                "ball radius must be positive, got {}",
                self.radius
            )));
        }
        match &self.motion {
            Motion::Static => {}
            Motion::Rotation { pivot, rate } => {
                if pivot.len() != spatial_dim {
                    return Err(PlanError::DimensionMismatch {
                        what: "rotation pivot",
                        expected: spatial_dim,
                        got: pivot.len(),
                    });
                }
                if !rate.is_finite() {
                    return Err(PlanError::InvalidParameter(
                        "rotation rate is not finite".into(),
                    ));
                }
            }
            Motion::Linear { velocity } => {
                if velocity.len() != spatial_dim {
                    return Err(PlanError::DimensionMismatch {
                        what: "ball velocity",
                        expected: spatial_dim,
                        got: velocity.len(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Center of the ball at time `t`. Only the first `dim()` entries of the
    /// returned array are meaningful.
    pub fn center_at(&self, t: f64) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[..self.center.len()].copy_from_slice(&self.center);
        match &self.motion {
            Motion::Static => {}
            Motion::Rotation { pivot, rate } => {
                let (s, co) = (rate * t).sin_cos();
                let dx = self.center[0] - pivot[0];
                let dy = self.center[1] - pivot[1];
                c[0] = pivot[0] + co * dx - s * dy;
                c[1] = pivot[1] + s * dx + co * dy;
            }
            Motion::Linear { velocity } => {
                for (ci, vi) in c.iter_mut().zip(velocity) {
                    *ci += vi * t;
                }
            }
        }
        c
    }

    /// `radius - |x - center(t)|`, together with the offset `center(t) - x`
    /// and its length.
    #[inline]
    fn distance_parts(&self, x: &[f64], t: f64) -> (f64, [f64; 3], f64) {
        let c = self.center_at(t);
        let mut offset = [0.0; 3];
        let mut sq = 0.0;
        for i in 0..self.center.len() {
            offset[i] = c[i] - x[i];
            sq += offset[i] * offset[i];
        }
        let len = sq.sqrt();
        (self.radius - len, offset, len)
    }
}

/// An immutable collection of moving balls in 2 or 3 spatial dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleSet {
    balls: Vec<MovingBall>,
    spatial_dim: usize,
    steepness: f64,
}

impl ObstacleSet {
    pub fn empty(spatial_dim: usize) -> Self {
        ObstacleSet {
            balls: Vec::new(),
            spatial_dim,
            steepness: DEFAULT_STEEPNESS,
        }
    }

    pub fn new(spatial_dim: usize, balls: Vec<MovingBall>) -> Result<Self> {
        if !(2..=3).contains(&spatial_dim) {
            return Err(PlanError::InvalidParameter(format!(
                "obstacle spatial dimension must be 2 or 3, got {spatial_dim}"
            )));
        }
        for b in &balls {
            b.validate(spatial_dim)?;
        }
        Ok(ObstacleSet {
            balls,
            spatial_dim,
            steepness: DEFAULT_STEEPNESS,
        })
    }

    pub fn with_steepness(mut self, steepness: f64) -> Result<Self> {
        if !(steepness > 0.0 && steepness.is_finite()) {
            return Err(PlanError::InvalidParameter(format!(
                "indicator steepness must be positive, got {steepness}"
            )));
        }
        self.steepness = steepness;
        Ok(self)
    }

    pub fn balls(&self) -> &[MovingBall] {
        &self.balls
    }

    pub fn spatial_dim(&self) -> usize {
        self.spatial_dim
    }

    pub fn steepness(&self) -> f64 {
        self.steepness
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    /// Index of the ball attaining the maximal signed distance (lowest index
    /// on ties) and that distance.
    fn nearest(&self, x: &[f64], t: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, b) in self.balls.iter().enumerate() {
            let (d, _, _) = b.distance_parts(x, t);
            match best {
                Some((_, bd)) if d <= bd => {}
                _ => best = Some((i, d)),
            }
        }
        best
    }

    /// Signed distance to the obstacle boundary, positive inside.
    pub fn signed_distance(&self, x: &[f64], t: f64) -> f64 {
        debug_assert!(x.len() >= self.spatial_dim);
        self.nearest(x, t).map_or(EMPTY_DISTANCE, |(_, d)| d)
    }

    /// Exact free-space indicator: `0` strictly inside an obstacle, else `1`.
    pub fn indicator(&self, x: &[f64], t: f64) -> u8 {
        if self.signed_distance(x, t) > 0.0 {
            0
        } else {
            1
        }
    }

    pub fn smooth_indicator(&self, x: &[f64], t: f64) -> f64 {
        if self.balls.is_empty() {
            return 1.0;
        }
        0.5 + 0.5 * (-self.steepness * self.signed_distance(x, t)).tanh()
    }

    /// Gradient of [`Self::smooth_indicator`] with respect to the spatial
    /// point. The direction of the distance gradient is taken as zero at the
    /// center of the nearest ball.
    pub fn smooth_indicator_gradient(&self, x: &[f64], t: f64, out: &mut [f64]) {
        let n = self.spatial_dim.min(out.len());
        out[..n].iter_mut().for_each(|g| *g = 0.0);
        let Some((i, d)) = self.nearest(x, t) else {
            return;
        };
        let (_, offset, len) = self.balls[i].distance_parts(x, t);
        if len == 0.0 {
            return;
        }
        let c = (self.steepness * d).cosh();
        let scale = -0.5 * self.steepness / (c * c) / len;
        for k in 0..n {
            out[k] = scale * offset[k];
        }
    }

    /// Allocating form of [`Self::smooth_indicator_gradient`].
    pub fn smooth_gradient(&self, x: &[f64], t: f64) -> Vec<f64> {
        let mut g = vec![0.0; self.spatial_dim];
        self.smooth_indicator_gradient(x, t, &mut g);
        g
    }
}
