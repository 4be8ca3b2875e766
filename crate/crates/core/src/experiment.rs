//! End-to-end runs driven by an [`ExperimentConfig`].
//!
//! Errors keep their kind (and so their exit code) but carry the name of
//! the stage that failed.

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{GrtError, Result};
use crate::geometry::{direction_from_angles, tangent_chart, TangentChart, Vec3};
use crate::grid::{sample, DataGrid};
use crate::kernel::InterpKernel;
use crate::phantom::BallPhantom;
use crate::predict::{attach_prediction, EdgePredictor, EdgeResponseCurve};
use crate::reconstruct::{
    data_region, edge_response_profile, profile_points, reconstruct_point_continuous,
    reconstruct_point_discrete,
};

/// The reference level `f_chi(x0+)` is taken this many grid steps inside
/// the ball along `alpha0`.
pub const F_PLUS_DEPTH: f64 = 10.0;

/// Per-axis points of the stability lattice on `[-1/2, 1/2]^3`.
pub const STABILITY_LATTICE: usize = 5;

/// Tolerated spread at the stability point, relative to `|f0|`.
pub const STABILITY_TOLERANCE: f64 = 0.02;

/// Allowed growth of the spread when `epsilon` halves.
pub const STABILITY_GROWTH: f64 = 1.2;

fn at_stage(stage: &str, err: GrtError) -> GrtError {
    let tag = |m: String| format!("{stage}: {m}");
    match err {
        GrtError::InvalidArgument(m) => GrtError::InvalidArgument(tag(m)),
        GrtError::Domain(m) => GrtError::Domain(tag(m)),
        GrtError::OutOfCoverage(m) => GrtError::OutOfCoverage(tag(m)),
        GrtError::Numeric(m) => GrtError::Numeric(tag(m)),
        GrtError::Config(m) => GrtError::Config(tag(m)),
        GrtError::Io(e) => GrtError::Io(std::io::Error::new(e.kind(), tag(e.to_string()))),
    }
}

trait Stage<T> {
    fn stage(self, name: &str) -> Result<T>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, name: &str) -> Result<T> {
        self.map_err(|e| at_stage(name, e))
    }
}

/// Phantom and chart of a configuration.
pub fn setup(cfg: &ExperimentConfig) -> Result<(BallPhantom, TangentChart)> {
    cfg.validate().stage("config")?;
    let ball = BallPhantom::new(cfg.center, cfg.radius, cfg.density).stage("phantom")?;
    let chart = tangent_chart(&ball, &cfg.alpha0()).stage("chart")?;
    Ok((ball, chart))
}

/// Grid covering every data point the edge-response sweep touches.
pub fn run_forward(cfg: &ExperimentConfig) -> Result<DataGrid> {
    let (ball, chart) = setup(cfg)?;
    let points = profile_points(&chart, &cfg.h_values(), cfg.epsilon);
    let region = data_region(&chart, &points, &cfg.recon, cfg.epsilon).stage("grid sizing")?;
    sample(&ball, &region, cfg.epsilon, cfg.offset).stage("sampling")
}

fn f_plus(ball: &BallPhantom, chart: &TangentChart, cfg: &ExperimentConfig) -> Result<f64> {
    let x = chart.x0 + F_PLUS_DEPTH * cfg.epsilon * chart.alpha0;
    reconstruct_point_continuous(ball, chart, &x, &cfg.recon).stage("reference level")
}

#[derive(Debug, Clone)]
pub struct EdgeResponseRun {
    pub chart: TangentChart,
    pub curve: EdgeResponseCurve,
    pub node_count: usize,
}

pub fn run_edge_response(cfg: &ExperimentConfig) -> Result<EdgeResponseRun> {
    let (ball, chart) = setup(cfg)?;
    let kernel = InterpKernel::new();
    let h = cfg.h_values();
    let points = profile_points(&chart, &h, cfg.epsilon);
    let region = data_region(&chart, &points, &cfg.recon, cfg.epsilon).stage("grid sizing")?;
    let grid = sample(&ball, &region, cfg.epsilon, cfg.offset).stage("sampling")?;
    let curve = edge_response_profile(&grid, &kernel, &chart, &h, cfg.epsilon, &cfg.recon)
        .stage("reconstruction")?;
    let f_plus = f_plus(&ball, &chart, cfg)?;
    let mut curve =
        attach_prediction(curve, &chart, ball.density, f_plus, &kernel).stage("prediction")?;
    if cfg.normalize {
        curve = curve.normalized();
    }
    Ok(EdgeResponseRun {
        chart,
        curve,
        node_count: grid.node_count(),
    })
}

/// Predicted column only; no grid is sampled.
pub fn run_predict(cfg: &ExperimentConfig) -> Result<(TangentChart, EdgeResponseCurve)> {
    let (ball, chart) = setup(cfg)?;
    let kernel = InterpKernel::new();
    let f_plus = f_plus(&ball, &chart, cfg)?;
    let predictor =
        EdgePredictor::new(&chart, ball.density, f_plus, &kernel).stage("prediction")?;
    let h = cfg.h_values();
    let mut predicted: Vec<f64> = h.iter().map(|&h| predictor.response(h)).collect();
    if cfg.normalize && ball.density != 0.0 {
        let low = f_plus - ball.density;
        predicted
            .iter_mut()
            .for_each(|p| *p = (*p - low) / ball.density);
    }
    let curve = EdgeResponseCurve {
        actual: vec![f64::NAN; h.len()],
        h,
        predicted,
        f_plus,
        f0: ball.density,
        max_abs_dev: f64::NAN,
        rms_dev: f64::NAN,
    };
    Ok((chart, curve))
}

/// Reconstruction at one `epsilon` over the stability lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityLevel {
    pub epsilon: f64,
    pub center_value: f64,
    /// `max |f(x + eps u) - f(x)|` over the lattice.
    pub spread: f64,
    pub node_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub point: Vec3,
    pub direction: Vec3,
    /// Distance between the probing data sphere and the ball boundary;
    /// zero when the sphere touches the boundary.
    pub tangency_gap: f64,
    pub f0: f64,
    pub levels: Vec<StabilityLevel>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        let tol = STABILITY_TOLERANCE * self.f0.abs();
        let within = self.levels.first().is_some_and(|l| l.spread <= tol);
        let settled = self
            .levels
            .windows(2)
            .all(|w| w[1].spread <= STABILITY_GROWTH * w[0].spread);
        within && settled
    }
}

/// Offsets `u` of the stability lattice, the origin first.
pub fn stability_offsets() -> Vec<Vec3> {
    let n = STABILITY_LATTICE;
    let at = |i: usize| -0.5 + i as f64 / (n - 1) as f64;
    let mut out = vec![Vec3::zeros()];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                out.push(Vec3::new(at(i), at(j), at(k)));
            }
        }
    }
    out
}

/// Stability of the reconstruction at an off-boundary point, at
/// `stability_epsilon` and half of it.
pub fn run_stability(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    let (ball, chart) = setup(cfg)?;
    let direction = direction_from_angles(cfg.stability_theta, cfg.stability_psi);
    let point = cfg
        .stability_point
        .unwrap_or(chart.y0 + chart.sphere_radius() * Vec3::z());
    let probe = TangentChart::at_point(point, direction).stage("stability chart")?;
    let d = (probe.y0 - ball.center).norm();
    let rho = probe.sphere_radius();
    let tangency_gap = (d - (rho + ball.radius))
        .abs()
        .min((d - (rho - ball.radius).abs()).abs());

    let kernel = InterpKernel::new();
    let offsets = stability_offsets();
    let mut levels = Vec::new();
    for eps in [cfg.stability_epsilon, 0.5 * cfg.stability_epsilon] {
        let points: Vec<Vec3> = offsets.iter().map(|u| point + eps * u).collect();
        let region =
            data_region(&probe, &points, &cfg.recon, eps).stage("stability grid sizing")?;
        let grid = sample(&ball, &region, eps, cfg.offset).stage("stability sampling")?;
        let values = points
            .par_iter()
            .map(|x| reconstruct_point_discrete(&grid, &kernel, &probe, x, &cfg.recon))
            .collect::<Result<Vec<f64>>>()
            .stage("stability reconstruction")?;
        let spread = values[1..]
            .iter()
            .map(|v| (v - values[0]).abs())
            .fold(0.0, f64::max);
        levels.push(StabilityLevel {
            epsilon: eps,
            center_value: values[0],
            spread,
            node_count: grid.node_count(),
        });
    }
    Ok(StabilityReport {
        point,
        direction,
        tangency_gap,
        f0: ball.density,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_keeps_kind() {
        let e = at_stage("sampling", GrtError::OutOfCoverage("x".into()));
        assert_eq!(e.exit_code(), 3);
        assert_eq!(e.to_string(), "out of coverage: sampling: x");
    }

    #[test]
    fn lattice_layout() {
        let u = stability_offsets();
        assert_eq!(u.len(), 126);
        assert_eq!(u[0], Vec3::zeros());
        assert!(u.iter().all(|v| v.amax() <= 0.5));
    }

    #[test]
    fn ball_touching_plane_is_a_phantom_error() {
        let cfg = ExperimentConfig {
            center: Vec3::new(0.0, 0.0, 4.0),
            ..ExperimentConfig::default()
        };
        let err = setup(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(err.to_string().contains("phantom"));
    }
}
