//! Predicted edge response and the curve that carries it next to the
//! reconstruction.
//!
//! In the limit `eps -> 0`, the reconstruction at `x0 + eps h alpha0` tends
//! to
//!
//! ```text
//! f_plus - f0 * int_{mc h}^inf phi_hat(beta0, s) ds
//!   = (f_plus - f0) + f0 * int_{-inf}^{mc h} phi_hat(beta0, s) ds
//! ```
//!
//! where `phi_hat` is the Radon transform of the 3D interpolation kernel.

use std::io::Write;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{GrtError, Result};
use crate::geometry::TangentChart;
use crate::kernel::{InterpKernel, RadonProfile};

/// Reconstructed and predicted values along the chart normal.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResponseCurve {
    /// Offsets in grid units along `alpha0`.
    pub h: Vec<f64>,
    pub actual: Vec<f64>,
    /// Empty until [`attach_prediction`] runs.
    pub predicted: Vec<f64>,
    pub f_plus: f64,
    pub f0: f64,
    pub max_abs_dev: f64,
    pub rms_dev: f64,
}

impl EdgeResponseCurve {
    /// A curve with only the reconstructed column.
    pub fn from_actual(h: Vec<f64>, actual: Vec<f64>) -> Result<Self> {
        if h.len() != actual.len() {
            return Err(GrtError::InvalidArgument(format!(
                "{} offsets but {} reconstructed values",
                h.len(),
                actual.len()
            )));
        }
        Ok(Self {
            h,
            actual,
            predicted: Vec::new(),
            f_plus: 0.0,
            f0: 0.0,
            max_abs_dev: 0.0,
            rms_dev: 0.0,
        })
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn abs_err(&self) -> Vec<f64> {
        self.actual
            .iter()
            .zip(&self.predicted)
            .map(|(a, p)| (a - p).abs())
            .collect()
    }

    fn update_metrics(&mut self) {
        let err = self.abs_err();
        self.max_abs_dev = err.iter().copied().fold(0.0, f64::max);
        self.rms_dev = if err.is_empty() {
            0.0
        } else {
            (err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt()
        };
    }

    /// Shape-only comparison: the reconstruction is mapped affinely so its
    /// end values become 0 and 1, the prediction so its asymptotes do.
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        if let (Some(&first), Some(&last)) = (self.actual.first(), self.actual.last()) {
            let span = last - first;
            if span != 0.0 {
                out.actual.iter_mut().for_each(|a| *a = (*a - first) / span);
            }
        }
        if self.f0 != 0.0 {
            let low = self.f_plus - self.f0;
            out.predicted
                .iter_mut()
                .for_each(|p| *p = (*p - low) / self.f0);
        }
        out.f_plus = 1.0;
        out.f0 = 1.0;
        out.update_metrics();
        out
    }

    /// CSV with header `h,actual,predicted,abs_err`; floats are written in
    /// shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "h,actual,predicted,abs_err")?;
        for (i, h) in self.h.iter().enumerate() {
            let p = self.predicted.get(i).copied().unwrap_or(f64::NAN);
            writeln!(
                w,
                "{h:?},{:?},{p:?},{:?}",
                self.actual[i],
                (self.actual[i] - p).abs()
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates the predicted response for one chart; holds the Radon profile
/// of the kernel along `beta0`.
#[derive(Debug, Clone)]
pub struct EdgePredictor {
    profile: RadonProfile,
    mc: f64,
    f0: f64,
    f_plus: f64,
}

impl EdgePredictor {
    pub fn new(chart: &TangentChart, f0: f64, f_plus: f64, kernel: &InterpKernel) -> Result<Self> {
        Ok(Self {
            profile: kernel.radon_profile(&chart.beta0)?,
            mc: chart.mc,
            f0,
            f_plus,
        })
    }

    /// `f_plus - f0 * tail(mc h)`.
    pub fn response(&self, h: f64) -> f64 {
        self.f_plus - self.f0 * self.profile.tail(self.mc * h)
    }

    /// `f_plus - f0 + f0 * head(mc h)`; equal to [`EdgePredictor::response`]
    /// because the profile has unit mass.
    pub fn response_from_head(&self, h: f64) -> f64 {
        self.f_plus - self.f0 + self.f0 * self.profile.head(self.mc * h)
    }

    pub fn profile(&self) -> &RadonProfile {
        &self.profile
    }
}

/// Single-point predicted response. Rebuilds the Radon profile; prefer
/// [`EdgePredictor`] for sweeps.
pub fn predicted_response(
    h: f64,
    chart: &TangentChart,
    f0: f64,
    f_plus: f64,
    kernel: &InterpKernel,
) -> Result<f64> {
    Ok(EdgePredictor::new(chart, f0, f_plus, kernel)?.response(h))
}

/// The same tail integral computed three ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormCheck {
    /// Unit direction `beta0`, lower limit `mc h`.
    pub v1: f64,
    /// Unnormalized direction `Phi'_y`, lower limit `|Phi'_x| h`.
    pub v2: f64,
    /// Monte Carlo volume integral of the kernel over the half-space
    /// `Phi'_x . (h alpha0) + Phi'_y . y > 0`.
    pub v3: f64,
    pub v3_std_error: f64,
}

pub fn cross_check_forms(
    h: f64,
    chart: &TangentChart,
    kernel: &InterpKernel,
    n_samples: usize,
    seed: u64,
) -> Result<FormCheck> {
    if n_samples < 2 {
        return Err(GrtError::InvalidArgument(
            "Monte Carlo needs at least two samples".into(),
        ));
    }
    let v1 = kernel.radon_profile(&chart.beta0)?.tail(chart.mc * h);
    let v2 = kernel
        .radon_profile(&chart.grad_y)?
        .tail(chart.grad_x.norm() * h);

    // Uniform samples over the kernel support [-3, 3]^3.
    let offset = chart.grad_x.dot(&(h * chart.alpha0));
    let volume = 216.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        let y = Vector3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let v = if offset + chart.grad_y.dot(&y) > 0.0 {
            kernel.phi3d(&y)
        } else {
            0.0
        };
        sum += v;
        sum_sq += v * v;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok(FormCheck {
        v1,
        v2,
        v3: volume * mean,
        v3_std_error: volume * (var / n).sqrt(),
    })
}

/// Fill the predicted column and deviation metrics.
pub fn attach_prediction(
    curve: EdgeResponseCurve,
    chart: &TangentChart,
    f0: f64,
    f_plus: f64,
    kernel: &InterpKernel,
) -> Result<EdgeResponseCurve> {
    if curve.h.len() != curve.actual.len() {
        return Err(GrtError::InvalidArgument(format!(
            "{} offsets but {} reconstructed values",
            curve.h.len(),
            curve.actual.len()
        )));
    }
    let predictor = EdgePredictor::new(chart, f0, f_plus, kernel)?;
    let predicted = curve.h.iter().map(|&h| predictor.response(h)).collect();
    let mut out = EdgeResponseCurve {
        predicted,
        f_plus,
        f0,
        ..curve
    };
    out.update_metrics();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{direction_from_angles, tangent_chart};
    use crate::phantom::BallPhantom;
    use std::f64::consts::PI;

    fn chart() -> TangentChart {
        tangent_chart(
            &BallPhantom::reference(),
            &direction_from_angles(0.2 * PI, 0.7 * PI),
        )
        .unwrap()
    }

    #[test]
    fn limits_and_midpoint() {
        let k = InterpKernel::new();
        let p = EdgePredictor::new(&chart(), 1.0, 0.25, &k).unwrap();
        assert!((p.response(10.0) - 0.25).abs() < 1e-12);
        assert!((p.response(-10.0) - (0.25 - 1.0)).abs() < 1e-9);
        assert!((p.response(0.0) - (0.25 - 0.5)).abs() < 1e-9);
    }

    #[test]
    fn empty_and_flat_curves() {
        let k = InterpKernel::new();
        let c = EdgeResponseCurve::from_actual(vec![], vec![]).unwrap();
        let c = attach_prediction(c, &chart(), 1.0, 0.0, &k).unwrap();
        assert!(c.is_empty());
        assert_eq!((c.max_abs_dev, c.rms_dev), (0.0, 0.0));

        let h = vec![-1.0, 0.0, 1.0];
        let c = EdgeResponseCurve::from_actual(h, vec![0.3; 3]).unwrap();
        let c = attach_prediction(c, &chart(), 0.0, 0.3, &k).unwrap();
        assert_eq!(c.max_abs_dev, 0.0);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        assert!(EdgeResponseCurve::from_actual(vec![0.0], vec![]).is_err());
        let bad = EdgeResponseCurve {
            h: vec![0.0, 1.0],
            actual: vec![0.0],
            predicted: vec![],
            f_plus: 0.0,
            f0: 0.0,
            max_abs_dev: 0.0,
            rms_dev: 0.0,
        };
        assert!(attach_prediction(bad, &chart(), 1.0, 0.0, &InterpKernel::new()).is_err());
    }

    #[test]
    fn csv_layout() {
        let k = InterpKernel::new();
        let c = EdgeResponseCurve::from_actual(vec![-0.5, 0.5], vec![-1.0, 0.0]).unwrap();
        let c = attach_prediction(c, &chart(), 1.0, 0.0, &k).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "h,actual,predicted,abs_err");
        assert_eq!(lines.len(), 3);
        assert!(text.ends_with('\n'));
        assert!(lines[1].starts_with("-0.5,-1.0,"));
    }
}
