//! Ball phantom and its exact forward transform over tangent spheres.
//!
//! The data sphere with center `y` has radius `y_3` (it touches the plane
//! `x_3 = 0`). With unit weight, the transform of a constant-density ball is
//! the density times the area of the part of that sphere lying inside the
//! ball, a spherical cap in the transversal case.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::UnitSphere;

use crate::error::{GrtError, Result};

/// Absolute tolerance on `d +- rho` versus `R` when classifying the
/// sphere/ball configuration.
pub const CASE_TOLERANCE: f64 = 1e-12;

/// Minimum sample count accepted by [`grt_forward_mc`].
pub const MIN_MC_SAMPLES: usize = 10_000;

/// A ball of constant density in the upper half-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallPhantom {
    pub center: Vector3<f64>,
    pub radius: f64,
    pub density: f64,
}

impl BallPhantom {
    /// A ball whose support lies strictly above the plane `x_3 = 0`.
    pub fn new(center: Vector3<f64>, radius: f64, density: f64) -> Result<Self> {
        let ball = Self::new_unrestricted(center, radius, density)?;
        if center.z - radius <= 0.0 {
            return Err(GrtError::Domain(format!(
                "ball support must lie in x3 > 0 (center z {} - radius {} <= 0)",
                center.z, radius
            )));
        }
        Ok(ball)
    }

    /// Only checks `radius > 0`; the ball may cross the plane `x_3 = 0`.
    /// Intended for synthetic test configurations.
    pub fn new_unrestricted(center: Vector3<f64>, radius: f64, density: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GrtError::InvalidArgument(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        if !center.iter().chain([&density]).all(|c| c.is_finite()) {
            return Err(GrtError::InvalidArgument(
                "ball center and density must be finite".into(),
            ));
        }
        Ok(Self {
            center,
            radius,
            density,
        })
    }

    /// The setup of the reference experiment: center (0,0,11), radius 5,
    /// unit density.
    pub fn reference() -> Self {
        Self {
            center: Vector3::new(0.0, 0.0, 11.0),
            radius: 5.0,
            density: 1.0,
        }
    }

    pub fn contains(&self, x: &Vector3<f64>) -> bool {
        (x - self.center).norm_squared() <= self.radius * self.radius
    }
}

fn check_center(y: &Vector3<f64>) -> Result<()> {
    if !(y.z > 0.0) || !y.iter().all(|c| c.is_finite()) {
        return Err(GrtError::Domain(format!(
            "data sphere center must have y3 > 0, got {y:?}"
        )));
    }
    Ok(())
}

/// Area of the part of the sphere `|x - y| = y_3` inside the ball.
fn intersection_area(y: &Vector3<f64>, ball: &BallPhantom) -> f64 {
    let rho = y.z;
    let r = ball.radius;
    let d = (y - ball.center).norm();
    if d >= rho + r - CASE_TOLERANCE {
        // disjoint or externally tangent
        return 0.0;
    }
    if d + rho <= r + CASE_TOLERANCE {
        return 4.0 * PI * rho * rho;
    }
    if d + r <= rho + CASE_TOLERANCE {
        return 0.0;
    }
    // Cap height rho - (d^2 + rho^2 - R^2) / (2d), factored to avoid
    // cancellation near tangency.
    let height = (r + rho - d) * (r + d - rho) / (2.0 * d);
    2.0 * PI * rho * height
}

/// Forward transform of the ball at data point `y`.
pub fn grt_forward(y: &Vector3<f64>, ball: &BallPhantom) -> Result<f64> {
    check_center(y)?;
    Ok(ball.density * intersection_area(y, ball))
}

/// Monte Carlo estimate of [`grt_forward`] from area-uniform samples on the
/// data sphere. Returns `(estimate, standard_error)`.
pub fn grt_forward_mc(
    y: &Vector3<f64>,
    ball: &BallPhantom,
    n_samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    check_center(y)?;
    if n_samples < MIN_MC_SAMPLES {
        return Err(GrtError::InvalidArgument(format!(
            "need at least {MIN_MC_SAMPLES} samples, got {n_samples}"
        )));
    }
    let rho = y.z;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..n_samples {
        let u: [f64; 3] = rng.sample(UnitSphere);
        let p = y + rho * Vector3::from(u);
        if ball.contains(&p) {
            hits += 1;
        }
    }
    let frac = hits as f64 / n_samples as f64;
    let area = 4.0 * PI * rho * rho;
    let estimate = ball.density * area * frac;
    let std_error = ball.density.abs() * area * (frac * (1.0 - frac) / n_samples as f64).sqrt();
    Ok((estimate, std_error))
}

/// Data models that can be sampled on a grid or probed by the continuous
/// reconstruction.
pub trait ForwardModel: Sync {
    fn evaluate(&self, y: &Vector3<f64>) -> Result<f64>;
}

impl ForwardModel for BallPhantom {
    fn evaluate(&self, y: &Vector3<f64>) -> Result<f64> {
        grt_forward(y, self)
    }
}

impl<F> ForwardModel for F
where
    F: Fn(&Vector3<f64>) -> f64 + Sync,
{
    fn evaluate(&self, y: &Vector3<f64>) -> Result<f64> {
        Ok(self(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_ball() -> BallPhantom {
        BallPhantom::new_unrestricted(Vector3::new(0.0, 0.0, 2.0), 2.5, 1.0).unwrap()
    }

    #[test]
    fn fully_inside_sphere() {
        let y = Vector3::new(0.0, 0.0, 1.0);
        let g = grt_forward(&y, &unit_ball()).unwrap();
        assert!((g - 4.0 * PI).abs() < 1e-12);
        let (est, se) = grt_forward_mc(&y, &unit_ball(), 20_000, 1).unwrap();
        assert!((est - 4.0 * PI).abs() < 1e-12);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn disjoint_sphere() {
        let y = Vector3::new(20.0, 0.0, 1.0);
        assert_eq!(grt_forward(&y, &unit_ball()).unwrap(), 0.0);
        let (est, se) = grt_forward_mc(&y, &unit_ball(), 20_000, 1).unwrap();
        assert_eq!((est, se), (0.0, 0.0));
    }

    #[test]
    fn ball_inside_sphere_contributes_nothing() {
        let ball = BallPhantom::new(Vector3::new(0.0, 0.0, 20.0), 1.0, 1.0).unwrap();
        let y = Vector3::new(0.0, 0.0, 20.5);
        assert_eq!(grt_forward(&y, &ball).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            grt_forward(&Vector3::new(0.0, 0.0, 0.0), &unit_ball()),
            Err(GrtError::Domain(_))
        ));
        assert!(BallPhantom::new(Vector3::new(0.0, 0.0, 2.0), 2.5, 1.0).is_err());
        assert!(BallPhantom::new_unrestricted(Vector3::zeros(), -1.0, 1.0).is_err());
        assert!(grt_forward_mc(&Vector3::new(0.0, 0.0, 1.0), &unit_ball(), 100, 0).is_err());
    }

    #[test]
    fn mc_is_reproducible() {
        let y = Vector3::new(0.5, 0.0, 1.5);
        let a = grt_forward_mc(&y, &unit_ball(), 20_000, 7).unwrap();
        let b = grt_forward_mc(&y, &unit_ball(), 20_000, 7).unwrap();
        assert_eq!(a, b);
    }
}
