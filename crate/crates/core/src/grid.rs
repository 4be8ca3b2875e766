//! Forward data sampled on the lattice `y = eps (r + j)` and its kernel
//! interpolation
//!
//! ```text
//! g_eps(y) = sum_j g(eps (r + j)) phi((y - eps (r + j)) / eps)
//! ```
//!
//! Stencil sums always run over the full `6^3` block in lexicographic `j`
//! order; a point whose stencil leaves the sampled box is an error, never a
//! truncated sum.

use std::io::{Read, Write};

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{GrtError, Result};
use crate::geometry::{center_map, Vec3};
use crate::kernel::InterpKernel;
use crate::phantom::ForwardModel;

/// Required distance, in cells, between an interpolation point and the edge
/// of the sampled box on every axis.
pub const STENCIL_MARGIN: f64 = 3.0;

/// Axis-aligned box in data space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub min: Vec3,
    pub max: Vec3,
}

impl Region {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self> {
        if (0..3).any(|k| !(min[k] <= max[k])) {
            return Err(GrtError::InvalidArgument(format!(
                "region min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Self { min, max })
    }

    /// Smallest box containing every point.
    pub fn bounding<'a, I>(points: I) -> Option<Self>
    where
        I: IntoIterator<Item = &'a Vec3>,
    {
        let mut it = points.into_iter();
        let first = *it.next()?;
        let (min, max) = it.fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        Some(Self { min, max })
    }

    pub fn padded(&self, pad: f64) -> Self {
        let d = Vec3::repeat(pad);
        Self {
            min: self.min - d,
            max: self.max + d,
        }
    }
}

/// Inclusive lattice bounds per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexBox {
    pub lo: [i64; 3],
    pub hi: [i64; 3],
}

impl IndexBox {
    pub fn extent(&self) -> [usize; 3] {
        std::array::from_fn(|k| (self.hi[k] - self.lo[k] + 1).max(0) as usize)
    }

    pub fn len(&self) -> usize {
        self.extent().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn linear(&self, j: [i64; 3]) -> usize {
        let [_, n2, n3] = self.extent();
        let a = (j[0] - self.lo[0]) as usize;
        let b = (j[1] - self.lo[1]) as usize;
        let c = (j[2] - self.lo[2]) as usize;
        (a * n2 + b) * n3 + c
    }

    pub fn contains(&self, j: [i64; 3]) -> bool {
        (0..3).all(|k| self.lo[k] <= j[k] && j[k] <= self.hi[k])
    }
}

/// Sampled data values on an offset integer lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DataGrid {
    step: f64,
    offset: Vec3,
    index_box: IndexBox,
    values: Vec<f64>,
}

/// Kernel positions `v_k - j_k` of one 6x6x6 stencil.
struct Stencil {
    base: [i64; 3],
    /// `t[k][o] = v_k - (base_k + o)`
    t: [[f64; 6]; 3],
}

fn check_step_offset(step: f64, offset: &Vec3) -> Result<()> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(GrtError::InvalidArgument(format!(
            "grid step must be positive, got {step}"
        )));
    }
    if !offset.iter().all(|r| (0.0..1.0).contains(r)) {
        return Err(GrtError::InvalidArgument(format!(
            "grid offset components must lie in [0, 1), got {offset:?}"
        )));
    }
    Ok(())
}

/// Sample `forward` at every lattice point `eps (r + j)` inside `region`.
pub fn sample<F>(forward: &F, region: &Region, step: f64, offset: Vec3) -> Result<DataGrid>
where
    F: ForwardModel + ?Sized,
{
    check_step_offset(step, &offset)?;
    if !(region.min.z > 0.0) {
        return Err(GrtError::Domain(format!(
            "sampling region reaches y3 = {} <= 0",
            region.min.z
        )));
    }
    let lo: [i64; 3] = std::array::from_fn(|k| (region.min[k] / step - offset[k]).ceil() as i64);
    let hi: [i64; 3] = std::array::from_fn(|k| (region.max[k] / step - offset[k]).floor() as i64);
    let index_box = IndexBox { lo, hi };
    if index_box.is_empty() {
        return Err(GrtError::InvalidArgument(format!(
            "region {region:?} contains no lattice points at step {step}"
        )));
    }
    let [_, n2, n3] = index_box.extent();
    let mut values = vec![0.0; index_box.len()];
    values
        .par_chunks_mut(n2 * n3)
        .enumerate()
        .try_for_each(|(a, slab)| -> Result<()> {
            for (idx, v) in slab.iter_mut().enumerate() {
                let j = [
                    lo[0] + a as i64,
                    lo[1] + (idx / n3) as i64,
                    lo[2] + (idx % n3) as i64,
                ];
                let y = node_position(step, &offset, j);
                *v = forward.evaluate(&y)?;
                if !v.is_finite() {
                    return Err(GrtError::Numeric(format!(
                        "forward model returned {v} at {y:?}"
                    )));
                }
            }
            Ok(())
        })?;
    Ok(DataGrid {
        step,
        offset,
        index_box,
        values,
    })
}

fn node_position(step: f64, offset: &Vec3, j: [i64; 3]) -> Vec3 {
    Vector3::from_fn(|k, _| step * (offset[k] + j[k] as f64))
}

impl DataGrid {
    /// Wrap existing values laid out in lexicographic `j` order.
    pub fn from_values(
        step: f64,
        offset: Vec3,
        index_box: IndexBox,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_step_offset(step, &offset)?;
        if index_box.is_empty() || values.len() != index_box.len() {
            return Err(GrtError::InvalidArgument(format!(
                "{} values do not fill index box {index_box:?}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(GrtError::Numeric("grid values must be finite".into()));
        }
        Ok(Self {
            step,
            offset,
            index_box,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn offset(&self) -> &Vec3 {
        &self.offset
    }

    pub fn index_box(&self) -> &IndexBox {
        &self.index_box
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn node_position(&self, j: [i64; 3]) -> Vec3 {
        node_position(self.step, &self.offset, j)
    }

    pub fn value_at(&self, j: [i64; 3]) -> Option<f64> {
        self.index_box
            .contains(j)
            .then(|| self.values[self.index_box.linear(j)])
    }

    /// Same lattice, values multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// Node-wise sum with a grid on the identical lattice.
    pub fn try_add(&self, other: &DataGrid) -> Result<Self> {
        if self.step != other.step
            || self.offset != other.offset
            || self.index_box != other.index_box
        {
            return Err(GrtError::InvalidArgument(
                "grids live on different lattices".into(),
            ));
        }
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(&other.values)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    fn stencil(&self, y: &Vec3) -> Result<Stencil> {
        let mut base = [0i64; 3];
        let mut t = [[0.0; 6]; 3];
        for k in 0..3 {
            let v = y[k] / self.step - self.offset[k];
            let lo = self.index_box.lo[k] as f64;
            let hi = self.index_box.hi[k] as f64;
            if !(v - lo >= STENCIL_MARGIN && hi - v >= STENCIL_MARGIN) {
                return Err(GrtError::OutOfCoverage(format!(
                    "point {y:?} is within {STENCIL_MARGIN} cells of the grid edge on axis {k} \
                     (lattice coordinate {v:.3}, box [{lo}, {hi}])"
                )));
            }
            base[k] = v.floor() as i64 - 2;
            for (o, slot) in t[k].iter_mut().enumerate() {
                *slot = v - (base[k] + o as i64) as f64;
            }
        }
        Ok(Stencil { base, t })
    }

    fn row(&self, st: &Stencil, a: usize, b: usize) -> &[f64] {
        let start = self
            .index_box
            .linear([st.base[0] + a as i64, st.base[1] + b as i64, st.base[2]]);
        &self.values[start..start + 6]
    }

    /// `g_eps(y)`.
    pub fn interpolate(&self, kernel: &InterpKernel, y: &Vec3) -> Result<f64> {
        let st = self.stencil(y)?;
        let w: [[f64; 6]; 3] = std::array::from_fn(|k| st.t[k].map(|t| kernel.profile(t)));
        let mut sum = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                let wab = w[0][a] * w[1][b];
                let row = self.row(&st, a, b);
                for c in 0..6 {
                    sum += row[c] * wab * w[2][c];
                }
            }
        }
        Ok(sum)
    }

    /// `(d/dt)^2 g_eps(y + t u)` at `t = 0`.
    pub fn directional_second_derivative(
        &self,
        kernel: &InterpKernel,
        y: &Vec3,
        u: &Vec3,
    ) -> Result<f64> {
        let st = self.stencil(y)?;
        let jet: [[[f64; 3]; 6]; 3] =
            std::array::from_fn(|k| st.t[k].map(|t| kernel.profile_jet(t)));
        let (u1, u2, u3) = (u.x, u.y, u.z);
        let mut sum = 0.0;
        for a in 0..6 {
            let [f1, d1, s1] = jet[0][a];
            for b in 0..6 {
                let [f2, d2, s2] = jet[1][b];
                // Split the Hessian contraction by the third-axis factor.
                let cf = u1 * u1 * s1 * f2 + u2 * u2 * f1 * s2 + 2.0 * u1 * u2 * d1 * d2;
                let cd = 2.0 * u3 * (u1 * d1 * f2 + u2 * f1 * d2);
                let cs = u3 * u3 * f1 * f2;
                let row = self.row(&st, a, b);
                for c in 0..6 {
                    let [f3, d3, s3] = jet[2][c];
                    sum += row[c] * (cf * f3 + cd * d3 + cs * s3);
                }
            }
        }
        Ok(sum / (self.step * self.step))
    }

    /// `(d/dt)^2 g_eps(Y(alpha, t; x))` at `t = 0`. The center map is affine
    /// in `t`, so only the Hessian term along `dY/dt = alpha / (1 + alpha_3)`
    /// survives.
    pub fn interpolate_second_t_derivative(
        &self,
        kernel: &InterpKernel,
        alpha: &Vec3,
        x: &Vec3,
    ) -> Result<f64> {
        let cm = center_map(alpha, 0.0, x)?;
        self.directional_second_derivative(kernel, &cm.center, &cm.d_dt)
    }

    /// Little-endian dump: step, offset (3 floats), lo (3 ints), hi (3 ints),
    /// then values in lexicographic `j` order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.step.to_le_bytes())?;
        for r in self.offset.iter() {
            w.write_all(&r.to_le_bytes())?;
        }
        for b in self.index_box.lo.iter().chain(&self.index_box.hi) {
            w.write_all(&b.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut buf)?;
            Ok(buf)
        };
        let step = f64::from_le_bytes(next(&mut r)?);
        let mut offset = Vec3::zeros();
        for k in 0..3 {
            offset[k] = f64::from_le_bytes(next(&mut r)?);
        }
        let mut bounds = [0i64; 6];
        for b in bounds.iter_mut() {
            *b = i64::from_le_bytes(next(&mut r)?);
        }
        let index_box = IndexBox {
            lo: [bounds[0], bounds[1], bounds[2]],
            hi: [bounds[3], bounds[4], bounds[5]],
        };
        let n = index_box.len();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(f64::from_le_bytes(next(&mut r)?));
        }
        Self::from_values(step, offset, index_box, values)
    }
}
