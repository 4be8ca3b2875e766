//! Cardinal B-splines and the blended interpolating kernel built from them.
//!
//! The 1D kernel is
//!
//! ```text
//! phi_1d(t) = 0.5 (B3(t) + B3(t-2)) + 4 B3(t-1) - 2 (B4(t) + B4(t-1))
//! ```
//!
//! supported on `[0, 6]`, centered at 3, interpolating at the integers and
//! reproducing polynomials up to degree 2. The 3D kernel is the separable
//! product of centered 1D profiles and is stored in grid units, so callers
//! feed it `(y - eps*j) / eps` directly.
//!
//! All piecewise polynomials are assembled with exact rational arithmetic
//! (Cox-de Boor on polynomial pieces) and only then rounded to `f64`.

use std::sync::{Arc, OnceLock};

use nalgebra::{Matrix3, Vector3};
use num_rational::Ratio;
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{GrtError, Result};

/// Highest B-spline degree this module builds.
pub const MAX_BSPLINE_DEGREE: usize = 4;

/// Mesh step (in units of the projection variable `s`) used for the
/// numerical Radon profile of the 3D kernel.
pub const RADON_MESH_STEP: f64 = 1e-3;

/// Scaled 1D profiles narrower than this many mesh steps are discretized by
/// exact cell masses instead of point samples.
const NARROW_PROFILE_STEPS: f64 = 20.0;

const SUPPORT: (f64, f64) = (0.0, 6.0);
const CENTER_SHIFT: f64 = 3.0;
const N_PIECES: usize = 6;

type Q = Ratio<i64>;

/// Coefficients in ascending powers of the local variable `u = t - k` on the
/// unit interval `[k, k+1)`. Six slots so that primitives of quartics fit.
type QPoly = [Q; 6];
type Poly = [f64; 6];

fn q(n: i64) -> Q {
    Q::from_integer(n)
}

fn qpoly_zero() -> QPoly {
    [q(0); 6]
}

/// `p(u) * (c0 + c1 u)`; the top coefficient of `p` must be zero.
fn qpoly_mul_linear(p: &QPoly, c0: Q, c1: Q) -> QPoly {
    let mut out = qpoly_zero();
    for i in 0..6 {
        out[i] += p[i] * c0;
        if i + 1 < 6 {
            out[i + 1] += p[i] * c1;
        } else {
            debug_assert!(p[i] == q(0));
        }
    }
    out
}

fn qpoly_add_scaled(acc: &mut QPoly, p: &QPoly, c: Q) {
    for (a, b) in acc.iter_mut().zip(p) {
        *a += *b * c;
    }
}

fn qpoly_derivative(p: &QPoly) -> QPoly {
    let mut out = qpoly_zero();
    for i in 1..6 {
        out[i - 1] = p[i] * q(i as i64);
    }
    out
}

fn qpoly_primitive(p: &QPoly) -> QPoly {
    let mut out = qpoly_zero();
    for i in 0..5 {
        out[i + 1] = p[i] / q(i as i64 + 1);
    }
    debug_assert!(p[5] == q(0));
    out
}

fn qpoly_eval(p: &QPoly, u: Q) -> Q {
    p.iter().rev().fold(q(0), |acc, &c| acc * u + c)
}

fn qpoly_to_f64(p: &QPoly) -> Poly {
    let mut out = [0.0; 6];
    for (o, c) in out.iter_mut().zip(p) {
        *o = *c.numer() as f64 / *c.denom() as f64;
    }
    out
}

/// Exact pieces of `B_n` on `[k, k+1)`, `k = 0..=n`.
///
/// `B_n(t) = (t B_{n-1}(t) + (n+1-t) B_{n-1}(t-1)) / n`; in the local variable
/// of piece `k` the shifted term is piece `k-1` of `B_{n-1}`.
fn bspline_pieces_exact(n: usize) -> Vec<QPoly> {
    let mut one = qpoly_zero();
    one[0] = q(1);
    let mut pieces = vec![one];
    for deg in 1..=n {
        let d = deg as i64;
        let mut next = vec![qpoly_zero(); deg + 1];
        for (k, piece) in next.iter_mut().enumerate() {
            let kk = k as i64;
            if k < deg {
                let t = qpoly_mul_linear(&pieces[k], q(kk), q(1));
                qpoly_add_scaled(piece, &t, Q::new(1, d));
            }
            if k >= 1 {
                let t = qpoly_mul_linear(&pieces[k - 1], q(d + 1 - kk), q(-1));
                qpoly_add_scaled(piece, &t, Q::new(1, d));
            }
        }
        pieces = next;
    }
    pieces
}

/// Exact pieces of `phi_1d` on `[k, k+1)`, `k = 0..6`.
fn phi1d_pieces_exact() -> [QPoly; N_PIECES] {
    let b3 = bspline_pieces_exact(3);
    let b4 = bspline_pieces_exact(4);
    // (weight, spline pieces, shift)
    let terms: [(Q, &[QPoly], i64); 5] = [
        (Q::new(1, 2), &b3, 0),
        (Q::new(1, 2), &b3, 2),
        (q(4), &b3, 1),
        (q(-2), &b4, 0),
        (q(-2), &b4, 1),
    ];
    let mut out = [qpoly_zero(); N_PIECES];
    for (k, piece) in out.iter_mut().enumerate() {
        for (w, spline, shift) in terms.iter() {
            let idx = k as i64 - shift;
            if idx >= 0 && (idx as usize) < spline.len() {
                qpoly_add_scaled(piece, &spline[idx as usize], *w);
            }
        }
    }
    out
}

/// Exact value of `phi_1d` at an integer; zero off the support.
pub fn phi1d_at_integer_exact(k: i64) -> Ratio<i64> {
    if !(0..N_PIECES as i64).contains(&k) {
        return q(0);
    }
    qpoly_eval(&phi1d_pieces_exact()[k as usize], q(0))
}

/// Exact value of `int phi_1d`.
pub fn phi1d_integral_exact() -> Ratio<i64> {
    phi1d_pieces_exact()
        .iter()
        .map(|p| qpoly_eval(&qpoly_primitive(p), q(1)))
        .fold(q(0), |a, b| a + b)
}

fn horner(p: &Poly, u: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

fn eval_pieces(pieces: &[Poly], t: f64) -> f64 {
    let n = pieces.len() as f64;
    if !(0.0..n).contains(&t) {
        return 0.0;
    }
    let k = t.floor();
    horner(&pieces[k as usize], t - k)
}

fn bspline_tables() -> &'static [Vec<Poly>] {
    static TABLES: OnceLock<Vec<Vec<Poly>>> = OnceLock::new();
    TABLES.get_or_init(|| {
        (0..=MAX_BSPLINE_DEGREE)
            .map(|n| bspline_pieces_exact(n).iter().map(qpoly_to_f64).collect())
            .collect()
    })
}

/// Cardinal B-spline of degree `n` supported on `[0, n+1]`.
pub fn bspline(n: usize, t: f64) -> Result<f64> {
    if n > MAX_BSPLINE_DEGREE {
        return Err(GrtError::InvalidArgument(format!(
            "B-spline degree {n} not supported (0..={MAX_BSPLINE_DEGREE})"
        )));
    }
    Ok(eval_pieces(&bspline_tables()[n], t))
}

/// The blended interpolating kernel: 1D profile, derivatives, separable 3D
/// extension and its Radon transform.
#[derive(Debug, Clone)]
pub struct InterpKernel {
    value: [Poly; N_PIECES],
    d1: [Poly; N_PIECES],
    d2: [Poly; N_PIECES],
    d3: [Poly; N_PIECES],
    primitive: [Poly; N_PIECES],
    /// `int_0^k phi_1d` for `k = 0..=6`.
    primitive_offset: [f64; N_PIECES + 1],
}

impl Default for InterpKernel {
    fn default() -> Self {
        Self::new()
    }
}

impl InterpKernel {
    pub fn new() -> Self {
        let exact = phi1d_pieces_exact();
        let map = |f: &dyn Fn(&QPoly) -> QPoly| -> [Poly; N_PIECES] {
            std::array::from_fn(|k| qpoly_to_f64(&f(&exact[k])))
        };
        let value = map(&|p| *p);
        let d1 = map(&qpoly_derivative);
        let d2 = map(&|p| qpoly_derivative(&qpoly_derivative(p)));
        let d3 = map(&|p| qpoly_derivative(&qpoly_derivative(&qpoly_derivative(p))));
        let primitive = map(&qpoly_primitive);

        let mut offset = [0.0; N_PIECES + 1];
        let mut acc = q(0);
        for k in 0..N_PIECES {
            acc += qpoly_eval(&qpoly_primitive(&exact[k]), q(1));
            offset[k + 1] = *acc.numer() as f64 / *acc.denom() as f64;
        }

        Self {
            value,
            d1,
            d2,
            d3,
            primitive,
            primitive_offset: offset,
        }
    }

    pub fn support_1d(&self) -> (f64, f64) {
        SUPPORT
    }

    pub fn center_shift(&self) -> f64 {
        CENTER_SHIFT
    }

    pub fn phi1d(&self, t: f64) -> f64 {
        eval_pieces(&self.value, t)
    }

    pub fn phi1d_d1(&self, t: f64) -> f64 {
        eval_pieces(&self.d1, t)
    }

    pub fn phi1d_d2(&self, t: f64) -> f64 {
        eval_pieces(&self.d2, t)
    }

    /// Piecewise third derivative (right-continuous at the knots).
    pub fn phi1d_d3(&self, t: f64) -> f64 {
        eval_pieces(&self.d3, t)
    }

    /// `int_0^t phi_1d`.
    pub fn phi1d_cumulative(&self, t: f64) -> f64 {
        if t <= SUPPORT.0 {
            return 0.0;
        }
        if t >= SUPPORT.1 {
            return self.primitive_offset[N_PIECES];
        }
        let k = t.floor();
        let i = k as usize;
        self.primitive_offset[i] + horner(&self.primitive[i], t - k)
    }

    /// Centered profile `phi_1d(s + 3)`, supported on `[-3, 3]`.
    #[inline]
    pub fn profile(&self, s: f64) -> f64 {
        self.phi1d(s + CENTER_SHIFT)
    }

    #[inline]
    pub fn profile_d1(&self, s: f64) -> f64 {
        self.phi1d_d1(s + CENTER_SHIFT)
    }

    #[inline]
    pub fn profile_d2(&self, s: f64) -> f64 {
        self.phi1d_d2(s + CENTER_SHIFT)
    }

    /// `int_{-inf}^s` of the centered profile.
    pub fn profile_cumulative(&self, s: f64) -> f64 {
        self.phi1d_cumulative(s + CENTER_SHIFT)
    }

    /// Value, first and second derivative of the centered profile at `s`.
    #[inline]
    pub fn profile_jet(&self, s: f64) -> [f64; 3] {
        let t = s + CENTER_SHIFT;
        if !(SUPPORT.0..SUPPORT.1).contains(&t) {
            return [0.0; 3];
        }
        let k = t.floor();
        let i = k as usize;
        let u = t - k;
        [
            horner(&self.value[i], u),
            horner(&self.d1[i], u),
            horner(&self.d2[i], u),
        ]
    }

    /// Separable 3D kernel in grid units: `prod_k phi_1d(u_k + 3)`.
    pub fn phi3d(&self, u: &Vector3<f64>) -> f64 {
        u.iter().map(|&c| self.profile(c)).product()
    }

    /// Analytic Hessian of [`InterpKernel::phi3d`].
    pub fn phi3d_hessian(&self, u: &Vector3<f64>) -> Matrix3<f64> {
        let jets: [[f64; 3]; 3] = std::array::from_fn(|k| self.profile_jet(u[k]));
        Matrix3::from_fn(|i, k| {
            (0..3)
                .map(|l| {
                    let order = usize::from(l == i) + usize::from(l == k);
                    jets[l][order]
                })
                .product()
        })
    }

    /// Residual of polynomial reproduction:
    /// `sum_j j^m phi(u - j) - u^m` over the lattice points where the kernel
    /// is nonzero.
    pub fn check_exactness(&self, m: [u32; 3], u: &Vector3<f64>) -> Result<f64> {
        if m.iter().sum::<u32>() > 2 {
            return Err(GrtError::InvalidArgument(format!(
                "multi-index {m:?} has order above 2"
            )));
        }
        let base: [i64; 3] = std::array::from_fn(|k| u[k].floor() as i64 - 2);
        let mut sum = 0.0;
        for a in 0..6 {
            for b in 0..6 {
                for c in 0..6 {
                    let j = [base[0] + a, base[1] + b, base[2] + c];
                    let jv = Vector3::new(j[0] as f64, j[1] as f64, j[2] as f64);
                    let mono: f64 = (0..3).map(|k| jv[k].powi(m[k] as i32)).product();
                    sum += mono * self.phi3d(&(u - jv));
                }
            }
        }
        let target: f64 = (0..3).map(|k| u[k].powi(m[k] as i32)).product();
        Ok(sum - target)
    }

    /// Radon profile of the 3D kernel along `direction` (not necessarily
    /// unit). Build once and query densely.
    pub fn radon_profile(&self, direction: &Vector3<f64>) -> Result<RadonProfile> {
        RadonProfile::build(self, direction)
    }

    /// `int phi(y) delta(direction . y - s) dy`.
    ///
    /// Rebuilds the profile on every call; use [`InterpKernel::radon_profile`]
    /// for repeated queries.
    pub fn radon_kernel(&self, direction: &Vector3<f64>, s: f64) -> Result<f64> {
        Ok(self.radon_profile(direction)?.density(s))
    }

    /// `int_a^inf radon_kernel(direction, s) ds`.
    pub fn radon_tail(&self, direction: &Vector3<f64>, a: f64) -> Result<f64> {
        Ok(self.radon_profile(direction)?.tail(a))
    }
}

#[derive(Debug, Clone)]
enum ProfileRepr {
    /// A single nonzero direction component: exact scaled 1D profile.
    Axis { scale: f64 },
    /// Convolution of two or three scaled profiles on a uniform mesh
    /// `s_i = (i - half) * step`.
    Mesh {
        step: f64,
        half: usize,
        density: Vec<f64>,
        cumulative: Vec<f64>,
    },
}

/// Tabulated Radon transform of the 3D kernel along one direction, with its
/// cumulative integral.
#[derive(Debug, Clone)]
pub struct RadonProfile {
    direction: Vector3<f64>,
    kernel: Arc<InterpKernel>,
    repr: ProfileRepr,
}

impl RadonProfile {
    fn build(kernel: &InterpKernel, direction: &Vector3<f64>) -> Result<Self> {
        if !direction.iter().all(|c| c.is_finite()) || direction.norm() == 0.0 {
            return Err(GrtError::InvalidArgument(format!(
                "Radon direction must be finite and nonzero, got {direction:?}"
            )));
        }
        let scales: Vec<f64> = direction
            .iter()
            .map(|c| c.abs())
            .filter(|&c| c > 0.0)
            .collect();
        let kernel = Arc::new(kernel.clone());
        let repr = if scales.len() == 1 {
            ProfileRepr::Axis { scale: scales[0] }
        } else {
            mesh_profile(&kernel, &scales)
        };
        Ok(Self {
            direction: *direction,
            kernel,
            repr,
        })
    }

    pub fn direction(&self) -> &Vector3<f64> {
        &self.direction
    }

    /// Outer edge of the support: the profile vanishes for `|s| >= extent`.
    pub fn extent(&self) -> f64 {
        3.0 * self.direction.iter().map(|c| c.abs()).sum::<f64>()
    }

    /// Profile value at `s`; linear interpolation between mesh nodes.
    pub fn density(&self, s: f64) -> f64 {
        match &self.repr {
            ProfileRepr::Axis { scale } => self.kernel.profile(s / scale) / scale,
            ProfileRepr::Mesh {
                step,
                half,
                density,
                ..
            } => {
                let x = s / step + *half as f64;
                let last = density.len() - 1;
                if !(0.0..last as f64).contains(&x) {
                    return 0.0;
                }
                let i = x.floor();
                let frac = x - i;
                let i = i as usize;
                density[i] + frac * (density[i + 1] - density[i])
            }
        }
    }

    /// `int_{-inf}^a` of the profile.
    pub fn head(&self, a: f64) -> f64 {
        match &self.repr {
            ProfileRepr::Axis { scale } => self.kernel.profile_cumulative(a / scale),
            ProfileRepr::Mesh {
                step,
                half,
                density,
                cumulative,
            } => {
                let x = a / step + *half as f64;
                let last = density.len() - 1;
                if x <= 0.0 {
                    return 0.0;
                }
                if x >= last as f64 {
                    return cumulative[last];
                }
                let i = x.floor();
                let frac = x - i;
                let i = i as usize;
                let fa = density[i] + frac * (density[i + 1] - density[i]);
                cumulative[i] + 0.5 * frac * step * (density[i] + fa)
            }
        }
    }

    pub fn total_mass(&self) -> f64 {
        match &self.repr {
            ProfileRepr::Axis { .. } => self.kernel.profile_cumulative(3.0),
            ProfileRepr::Mesh { cumulative, .. } => *cumulative.last().unwrap(),
        }
    }

    /// `int_a^inf` of the profile.
    pub fn tail(&self, a: f64) -> f64 {
        self.total_mass() - self.head(a)
    }
}

/// Discrete weights of one scaled 1D profile `t -> profile(t/scale)/scale`
/// on the mesh `m * step`, `m = -half..=half`.
fn profile_weights(kernel: &InterpKernel, scale: f64, step: f64) -> Vec<f64> {
    let half = (3.0 * scale / step).ceil() as i64 + 1;
    let narrow = scale < NARROW_PROFILE_STEPS * step;
    (-half..=half)
        .map(|m| {
            let t = m as f64 * step;
            if narrow {
                kernel.profile_cumulative((t + 0.5 * step) / scale)
                    - kernel.profile_cumulative((t - 0.5 * step) / scale)
            } else {
                step * kernel.profile(t / scale) / scale
            }
        })
        .collect()
}

fn mesh_profile(kernel: &InterpKernel, scales: &[f64]) -> ProfileRepr {
    let step = RADON_MESH_STEP;
    let parts: Vec<Vec<f64>> = scales
        .iter()
        .map(|&sc| profile_weights(kernel, sc, step))
        .collect();
    let len: usize = parts.iter().map(|p| p.len()).sum::<usize>() - (parts.len() - 1);
    let half = (len - 1) / 2;

    let n_fft = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n_fft);
    let inverse = planner.plan_fft_inverse(n_fft);

    let mut acc: Option<Vec<Complex<f64>>> = None;
    for part in &parts {
        let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
        for (b, &w) in buf.iter_mut().zip(part) {
            b.re = w;
        }
        forward.process(&mut buf);
        acc = Some(match acc {
            None => buf,
            Some(mut a) => {
                for (x, y) in a.iter_mut().zip(&buf) {
                    *x *= *y;
                }
                a
            }
        });
    }
    let mut conv = acc.expect("at least two profiles");
    inverse.process(&mut conv);
    let norm = 1.0 / (n_fft as f64 * step);
    let density: Vec<f64> = conv[..len].iter().map(|c| c.re * norm).collect();

    let mut cumulative = vec![0.0; len];
    for i in 1..len {
        cumulative[i] = cumulative[i - 1] + 0.5 * step * (density[i - 1] + density[i]);
    }
    ProfileRepr::Mesh {
        step,
        half,
        density,
        cumulative,
    }
}
