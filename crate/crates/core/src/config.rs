//! Experiment configuration: flat `key = value` text with `#` comments.
//!
//! Vectors are written as three comma-separated numbers. Every key is
//! optional; missing keys take the defaults of the reference experiment.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{GrtError, Result};
use crate::geometry::Vec3;
use crate::phantom::MIN_MC_SAMPLES;
use crate::reconstruct::ReconConfig;

/// Offsets are rounded to this resolution so that `h_min + i h_step` does
/// not print as `0.30000000000000004`.
const H_ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub center: Vec3,
    pub radius: f64,
    pub density: f64,
    /// Polar angle of `alpha0`.
    pub theta: f64,
    /// Azimuth of `alpha0`.
    pub psi: f64,
    pub epsilon: f64,
    /// Lattice offset `r` in grid units, each component in `[0, 1)`.
    pub offset: Vec3,
    pub h_min: f64,
    pub h_max: f64,
    pub h_step: f64,
    pub recon: ReconConfig,
    pub mc_samples: usize,
    pub seed: u64,
    pub output: String,
    pub normalize: bool,
    /// Point probed by the stability run. `None` selects the top of the
    /// data sphere tangent to the ball at the chart.
    pub stability_point: Option<Vec3>,
    pub stability_theta: f64,
    pub stability_psi: f64,
    pub stability_epsilon: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let radius = 5.0;
        Self {
            center: Vec3::new(0.0, 0.0, 11.0),
            radius,
            density: 1.0,
            theta: 0.2 * std::f64::consts::PI,
            psi: 0.7 * std::f64::consts::PI,
            epsilon: 0.01,
            offset: Vec3::repeat(0.5),
            h_min: -3.0,
            h_max: 3.0,
            h_step: 0.1,
            recon: ReconConfig {
                t_fd_step: 1e-4 * radius,
                ..ReconConfig::default()
            },
            mc_samples: 1_000_000,
            seed: 20240601,
            output: "edge_response.csv".into(),
            normalize: false,
            stability_point: None,
            stability_theta: 0.0,
            stability_psi: 0.0,
            stability_epsilon: 0.005,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| GrtError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_vec(key: &str, value: &str) -> Result<Vec3> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(GrtError::Config(format!(
            "{key}: expected three comma-separated numbers, got '{value}'"
        )));
    }
    let mut v = Vec3::zeros();
    for (k, p) in parts.iter().enumerate() {
        v[k] = parse_num(key, p)?;
    }
    Ok(v)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(GrtError::Config(format!(
            "{key}: expected true or false, got '{value}'"
        ))),
    }
}

fn fmt_vec(v: &Vec3) -> String {
    format!("{:?}, {:?}, {:?}", v.x, v.y, v.z)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        let mut fd_step_given = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                GrtError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.contains(&key.to_string()) {
                return Err(GrtError::Config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
            seen.push(key.to_string());
            match key {
                "center" => cfg.center = parse_vec(key, value)?,
                "radius" => cfg.radius = parse_num(key, value)?,
                "density" => cfg.density = parse_num(key, value)?,
                "theta" => cfg.theta = parse_num(key, value)?,
                "psi" => cfg.psi = parse_num(key, value)?,
                "epsilon" => cfg.epsilon = parse_num(key, value)?,
                "offset" => cfg.offset = parse_vec(key, value)?,
                "h_min" => cfg.h_min = parse_num(key, value)?,
                "h_max" => cfg.h_max = parse_num(key, value)?,
                "h_step" => cfg.h_step = parse_num(key, value)?,
                "omega_max" => cfg.recon.omega_max = parse_num(key, value)?,
                "n_omega" => cfg.recon.n_omega = parse_num(key, value)?,
                "n_azimuth" => cfg.recon.n_azimuth = parse_num(key, value)?,
                "cutoff_smoothing" => cfg.recon.cutoff_mode = value.parse()?,
                "t_fd_step" => {
                    cfg.recon.t_fd_step = parse_num(key, value)?;
                    fd_step_given = true;
                }
                "mc_samples" => cfg.mc_samples = parse_num(key, value)?,
                "seed" => cfg.seed = parse_num(key, value)?,
                "output" => cfg.output = value.to_string(),
                "normalize" => cfg.normalize = parse_bool(key, value)?,
                "stability_point" => cfg.stability_point = Some(parse_vec(key, value)?),
                "stability_theta" => cfg.stability_theta = parse_num(key, value)?,
                "stability_psi" => cfg.stability_psi = parse_num(key, value)?,
                "stability_epsilon" => cfg.stability_epsilon = parse_num(key, value)?,
                other => {
                    return Err(GrtError::Config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        if !fd_step_given {
            cfg.recon.t_fd_step = 1e-4 * cfg.radius;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| GrtError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = self
            .center
            .iter()
            .chain(self.offset.iter())
            .chain(&[
                self.radius,
                self.density,
                self.theta,
                self.psi,
                self.epsilon,
                self.h_min,
                self.h_max,
                self.h_step,
                self.stability_theta,
                self.stability_psi,
                self.stability_epsilon,
            ])
            .all(|v| v.is_finite());
        if !finite {
            return Err(GrtError::Config("all numeric values must be finite".into()));
        }
        if !(self.radius > 0.0) {
            return Err(GrtError::Config(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.epsilon > 0.0) || !(self.stability_epsilon > 0.0) {
            return Err(GrtError::Config("epsilon must be positive".into()));
        }
        if !(self.h_min < self.h_max) {
            return Err(GrtError::Config(format!(
                "h_min ({}) must be below h_max ({})",
                self.h_min, self.h_max
            )));
        }
        if !(self.h_step > 0.0) {
            return Err(GrtError::Config(format!(
                "h_step must be positive, got {}",
                self.h_step
            )));
        }
        if !self.offset.iter().all(|r| (0.0..1.0).contains(r)) {
            return Err(GrtError::Config(format!(
                "offset components must lie in [0, 1), got {}",
                fmt_vec(&self.offset)
            )));
        }
        if self.mc_samples < MIN_MC_SAMPLES {
            return Err(GrtError::Config(format!(
                "mc_samples must be at least {MIN_MC_SAMPLES}, got {}",
                self.mc_samples
            )));
        }
        if self.output.is_empty() {
            return Err(GrtError::Config("output path is empty".into()));
        }
        self.recon.validate()
    }

    /// `h_min, h_min + h_step, ...` up to `h_max`.
    pub fn h_values(&self) -> Vec<f64> {
        let n = ((self.h_max - self.h_min) / self.h_step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| {
                let h = self.h_min + i as f64 * self.h_step;
                (h / H_ROUNDING).round() * H_ROUNDING
            })
            .collect()
    }

    /// `(sin theta cos psi, sin theta sin psi, cos theta)`.
    pub fn alpha0(&self) -> Vec3 {
        crate::geometry::direction_from_angles(self.theta, self.psi)
    }
}

impl FromStr for ExperimentConfig {
    type Err = GrtError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Writes every key, floats in shortest round-trip form.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# phantom")?;
        writeln!(f, "center = {}", fmt_vec(&self.center))?;
        writeln!(f, "radius = {:?}", self.radius)?;
        writeln!(f, "density = {:?}", self.density)?;
        writeln!(f, "theta = {:?}", self.theta)?;
        writeln!(f, "psi = {:?}", self.psi)?;
        writeln!(f, "# sampling")?;
        writeln!(f, "epsilon = {:?}", self.epsilon)?;
        writeln!(f, "offset = {}", fmt_vec(&self.offset))?;
        writeln!(f, "h_min = {:?}", self.h_min)?;
        writeln!(f, "h_max = {:?}", self.h_max)?;
        writeln!(f, "h_step = {:?}", self.h_step)?;
        writeln!(f, "# inversion")?;
        writeln!(f, "omega_max = {:?}", self.recon.omega_max)?;
        writeln!(f, "n_omega = {}", self.recon.n_omega)?;
        writeln!(f, "n_azimuth = {}", self.recon.n_azimuth)?;
        writeln!(f, "cutoff_smoothing = {}", self.recon.cutoff_mode)?;
        writeln!(f, "t_fd_step = {:?}", self.recon.t_fd_step)?;
        writeln!(f, "# run")?;
        writeln!(f, "mc_samples = {}", self.mc_samples)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "output = {}", self.output)?;
        writeln!(f, "normalize = {}", self.normalize)?;
        if let Some(p) = &self.stability_point {
            writeln!(f, "stability_point = {}", fmt_vec(p))?;
        }
        writeln!(f, "stability_theta = {:?}", self.stability_theta)?;
        writeln!(f, "stability_psi = {:?}", self.stability_psi)?;
        writeln!(f, "stability_epsilon = {:?}", self.stability_epsilon)
    }
}
