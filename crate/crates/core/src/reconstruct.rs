//! Microlocal inversion near a tangency chart.
//!
//! ```text
//! f_chi(x) = -1/(4 pi^2) int_{S^2_+} chi(alpha) (d/dt)^2 g(Y(alpha, t; x)) |_{t=0} d alpha
//! ```
//!
//! with unit weight. The cutoff `chi` is a function of the aperture angle
//! `omega` between `alpha` and the chart direction `alpha0`; the cap
//! `omega <= omega_max` is integrated with Gauss-Legendre nodes in
//! `cos omega` times the trapezoid rule in azimuth. The discrete version
//! differentiates the interpolated data analytically; the continuous version
//! applies a five-point difference in `t` to the exact forward map.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{GrtError, Result};
use crate::geometry::{center_map, orthonormal_complement, TangentChart, Vec3};
use crate::grid::{DataGrid, Region};
use crate::kernel::InterpKernel;
use crate::phantom::ForwardModel;
use crate::predict::EdgeResponseCurve;

/// Padding of the auto-sized data region, in kernel radii (3 cells each).
pub const REGION_PAD_KERNEL_RADII: f64 = 4.0;

const MIN_NODES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffMode {
    /// Smooth raised-cosine roll-off over `[0.8, 1] omega_max`.
    #[default]
    PiCorrected,
    /// Literal roll-off without the factor `pi` in the cosine; jumps from
    /// `(1 + cos 1) / 2` to zero at `omega_max`.
    PaperLiteral,
}

impl FromStr for CutoffMode {
    type Err = GrtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pi-corrected" => Ok(CutoffMode::PiCorrected),
            "paper-literal" => Ok(CutoffMode::PaperLiteral),
            other => Err(GrtError::Config(format!(
                "unknown cutoff mode '{other}' (expected pi-corrected or paper-literal)"
            ))),
        }
    }
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffMode::PiCorrected => "pi-corrected",
            CutoffMode::PaperLiteral => "paper-literal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconConfig {
    /// Cutoff aperture in radians.
    pub omega_max: f64,
    pub n_omega: usize,
    pub n_azimuth: usize,
    pub cutoff_mode: CutoffMode,
    /// Step of the five-point `t` difference on the continuous path.
    pub t_fd_step: f64,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            omega_max: 0.35,
            n_omega: 256,
            n_azimuth: 512,
            cutoff_mode: CutoffMode::PiCorrected,
            t_fd_step: 5e-4,
        }
    }
}

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega_max > 0.0 && self.omega_max < PI / 2.0) {
            return Err(GrtError::Config(format!(
                "omega_max must lie in (0, pi/2), got {}",
                self.omega_max
            )));
        }
        if self.n_omega < MIN_NODES || self.n_azimuth < MIN_NODES {
            return Err(GrtError::Config(format!(
                "quadrature needs at least {MIN_NODES} nodes per direction, got {} x {}",
                self.n_omega, self.n_azimuth
            )));
        }
        if !(self.t_fd_step > 0.0 && self.t_fd_step.is_finite()) {
            return Err(GrtError::Config(format!(
                "t_fd_step must be positive, got {}",
                self.t_fd_step
            )));
        }
        Ok(())
    }

    /// Twice the cap resolution in both directions.
    pub fn refined(&self) -> Self {
        Self {
            n_omega: 2 * self.n_omega,
            n_azimuth: 2 * self.n_azimuth,
            ..*self
        }
    }
}

/// The angular cutoff `chi` as a function of the aperture angle.
pub fn cutoff(omega: f64, cfg: &ReconConfig) -> f64 {
    let wm = cfg.omega_max;
    if omega < 0.8 * wm {
        1.0
    } else if omega < wm {
        let arg = (omega - 0.8 * wm) / (0.2 * wm);
        match cfg.cutoff_mode {
            CutoffMode::PiCorrected => 0.5 * (1.0 + (PI * arg).cos()),
            CutoffMode::PaperLiteral => 0.5 * (1.0 + arg.cos()),
        }
    } else {
        0.0
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Newton on the Legendre
/// recurrence).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// One cap quadrature node; `weight` already includes the cutoff and the
/// area element.
#[derive(Debug, Clone, Copy)]
pub struct CapNode {
    pub alpha: Vec3,
    pub omega: f64,
    pub weight: f64,
}

/// Nodes of the tensor rule on `omega <= omega_max` around `alpha0`, ordered
/// by `omega` then azimuth. Nodes with zero cutoff are dropped.
pub fn cap_quadrature(alpha0: &Vec3, cfg: &ReconConfig) -> Vec<CapNode> {
    let (e1, e2) = orthonormal_complement(alpha0);
    let (x, w) = gauss_legendre(cfg.n_omega);
    let c_lo = cfg.omega_max.cos();
    let mid = 0.5 * (1.0 + c_lo);
    let half = 0.5 * (1.0 - c_lo);
    let d_psi = 2.0 * PI / cfg.n_azimuth as f64;
    let mut nodes = Vec::with_capacity(cfg.n_omega * cfg.n_azimuth);
    for (xi, wi) in x.iter().zip(&w) {
        let c = mid + half * xi;
        let omega = c.clamp(-1.0, 1.0).acos();
        let chi = cutoff(omega, cfg);
        if chi == 0.0 {
            continue;
        }
        let s = (1.0 - c * c).max(0.0).sqrt();
        for k in 0..cfg.n_azimuth {
            let psi = k as f64 * d_psi;
            let alpha = (c * alpha0 + s * (psi.cos() * e1 + psi.sin() * e2)).normalize();
            nodes.push(CapNode {
                alpha,
                omega,
                weight: chi * wi * half * d_psi,
            });
        }
    }
    nodes
}

/// Pairwise summation in a fixed order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

const INVERSION_FACTOR: f64 = -1.0 / (4.0 * PI * PI);

/// `f_{chi eps}(x)`: the inversion applied to interpolated grid data.
pub fn reconstruct_point_discrete(
    grid: &DataGrid,
    kernel: &InterpKernel,
    chart: &TangentChart,
    x: &Vec3,
    cfg: &ReconConfig,
) -> Result<f64> {
    cfg.validate()?;
    let nodes = cap_quadrature(&chart.alpha0, cfg);
    reconstruct_with_nodes(&nodes, |alpha| {
        grid.interpolate_second_t_derivative(kernel, alpha, x)
            .map_err(|e| match e {
                GrtError::OutOfCoverage(msg) => GrtError::OutOfCoverage(format!(
                    "quadrature node alpha = {alpha:?} for x = {x:?}: {msg}"
                )),
                other => other,
            })
    })
}

/// `f_chi(x)`: the inversion applied to exact data, with a five-point
/// difference in `t` of step `cfg.t_fd_step`.
pub fn reconstruct_point_continuous<F>(
    forward: &F,
    chart: &TangentChart,
    x: &Vec3,
    cfg: &ReconConfig,
) -> Result<f64>
where
    F: ForwardModel + ?Sized,
{
    cfg.validate()?;
    let dt = cfg.t_fd_step;
    if dt <= 8.0 * f64::EPSILON * (1.0 + x.norm()) || !(dt * dt > f64::MIN_POSITIVE) {
        return Err(GrtError::Numeric(format!(
            "finite-difference step {dt} underflows at |x| = {}",
            x.norm()
        )));
    }
    let nodes = cap_quadrature(&chart.alpha0, cfg);
    reconstruct_with_nodes(&nodes, |alpha| {
        let mut g = [0.0; 5];
        for (slot, k) in g.iter_mut().zip(-2..=2) {
            let y = center_map(alpha, k as f64 * dt, x)?.center;
            *slot = forward.evaluate(&y)?;
        }
        Ok((-g[0] + 16.0 * g[1] - 30.0 * g[2] + 16.0 * g[3] - g[4]) / (12.0 * dt * dt))
    })
}

fn reconstruct_with_nodes<D>(nodes: &[CapNode], mut second_derivative: D) -> Result<f64>
where
    D: FnMut(&Vec3) -> Result<f64>,
{
    let terms = nodes
        .iter()
        .map(|n| Ok(n.weight * second_derivative(&n.alpha)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(INVERSION_FACTOR * pairwise_sum(&terms))
}

/// Reconstruction points `x0 + eps h alpha0`.
pub fn profile_points(chart: &TangentChart, h_values: &[f64], eps: f64) -> Vec<Vec3> {
    h_values
        .iter()
        .map(|&h| chart.x0 + eps * h * chart.alpha0)
        .collect()
}

/// `f_{chi eps}` along the chart normal, one value per `h`, in input order.
pub fn edge_response_profile(
    grid: &DataGrid,
    kernel: &InterpKernel,
    chart: &TangentChart,
    h_values: &[f64],
    eps: f64,
    cfg: &ReconConfig,
) -> Result<EdgeResponseCurve> {
    let actual = profile_points(chart, h_values, eps)
        .par_iter()
        .map(|x| reconstruct_point_discrete(grid, kernel, chart, x, cfg))
        .collect::<Result<Vec<f64>>>()?;
    EdgeResponseCurve::from_actual(h_values.to_vec(), actual)
}

/// Bounding box of every data point the inversion touches at `points`,
/// padded by [`REGION_PAD_KERNEL_RADII`] kernel radii.
pub fn data_region(
    chart: &TangentChart,
    points: &[Vec3],
    cfg: &ReconConfig,
    step: f64,
) -> Result<Region> {
    cfg.validate()?;
    let nodes = cap_quadrature(&chart.alpha0, cfg);
    let mut centers = Vec::with_capacity(nodes.len() * points.len());
    for x in points {
        for n in &nodes {
            centers.push(center_map(&n.alpha, 0.0, x)?.center);
        }
    }
    let region = Region::bounding(&centers)
        .ok_or_else(|| GrtError::InvalidArgument("no reconstruction points".into()))?;
    Ok(region.padded(REGION_PAD_KERNEL_RADII * 3.0 * step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_values() {
        let cfg = ReconConfig::default();
        assert_eq!(cutoff(0.0, &cfg), 1.0);
        assert_eq!(cutoff(cfg.omega_max, &cfg), 0.0);
        assert!((cutoff(0.9 * cfg.omega_max, &cfg) - 0.5).abs() < 1e-15);
        let lit = ReconConfig {
            cutoff_mode: CutoffMode::PaperLiteral,
            ..cfg
        };
        let just_below = cutoff(cfg.omega_max * (1.0 - 1e-12), &lit);
        assert!((just_below - 0.5 * (1.0 + 1f64.cos())).abs() < 1e-9);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [8, 13, 48] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let p: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
            assert!((p - 2.0 / 11.0).abs() < 1e-13);
        }
    }

    #[test]
    fn cap_area_without_cutoff_taper() {
        let cfg = ReconConfig {
            omega_max: 0.3,
            ..ReconConfig::default()
        };
        // weights integrate chi over the cap
        let nodes = cap_quadrature(&Vec3::z(), &cfg);
        let total: f64 = nodes.iter().map(|n| n.weight).sum();
        let expected = {
            // 2 pi int_0^wm chi(w) sin w dw, by a fine midpoint rule
            let m = 200_000;
            let dw = cfg.omega_max / m as f64;
            (0..m)
                .map(|i| {
                    let w = (i as f64 + 0.5) * dw;
                    cutoff(w, &cfg) * w.sin() * dw
                })
                .sum::<f64>()
                * 2.0
                * PI
        };
        // the cutoff is only C^1, so Gauss-Legendre converges algebraically
        assert!((total - expected).abs() < 1e-5 * expected, "{total} vs {expected}");
        let fine: f64 = cap_quadrature(&Vec3::z(), &cfg.refined())
            .iter()
            .map(|n| n.weight)
            .sum();
        assert!((fine - expected).abs() < (total - expected).abs());
        assert!(nodes.iter().all(|n| (n.alpha.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn config_validation() {
        let bad = ReconConfig {
            omega_max: 2.0,
            ..ReconConfig::default()
        };
        assert!(bad.validate().is_err());
        let few = ReconConfig {
            n_omega: 4,
            ..ReconConfig::default()
        };
        assert!(few.validate().is_err());
        assert_eq!("paper-literal".parse::<CutoffMode>().unwrap(), CutoffMode::PaperLiteral);
        assert!("pi".parse::<CutoffMode>().is_err());
    }

    #[test]
    fn pairwise_matches_naive() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        assert!((pairwise_sum(&xs) - xs.iter().sum::<f64>()).abs() < 1e-12);
    }
}
