//! Spheres tangent to the plane `x_3 = 0`, parametrized by their centers.
//!
//! Defining function `Phi(x, y) = y_3^2 - |x - y|^2`; `Phi(x, y) = 0` iff `x`
//! lies on the data sphere with center `y`. The center map `Y(alpha, t; x)`
//! returns the sphere through `x + t alpha` whose normal there is `alpha`.

use nalgebra::{Matrix2, Vector3};

use crate::error::{GrtError, Result};
use crate::phantom::BallPhantom;

pub type Vec3 = Vector3<f64>;

/// Tolerance used when checking that a direction is a unit vector.
const UNIT_TOLERANCE: f64 = 1e-9;

/// The center map and its first two `t`-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterMap {
    pub center: Vec3,
    pub d_dt: Vec3,
    pub d2_dt2: Vec3,
}

/// A family of data surfaces described by a defining function and a center
/// map. Only [`TangentSpheres`] is provided.
pub trait SurfaceFamily {
    fn defining_function(&self, x: &Vec3, y: &Vec3) -> f64;
    /// `(Phi'_x, Phi'_y)`.
    fn gradients(&self, x: &Vec3, y: &Vec3) -> (Vec3, Vec3);
    fn center_map(&self, alpha: &Vec3, t: f64, x: &Vec3) -> Result<CenterMap>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TangentSpheres;

impl SurfaceFamily for TangentSpheres {
    fn defining_function(&self, x: &Vec3, y: &Vec3) -> f64 {
        phi_def(x, y)
    }

    fn gradients(&self, x: &Vec3, y: &Vec3) -> (Vec3, Vec3) {
        phi_grads(x, y)
    }

    fn center_map(&self, alpha: &Vec3, t: f64, x: &Vec3) -> Result<CenterMap> {
        center_map(alpha, t, x)
    }
}

pub fn phi_def(x: &Vec3, y: &Vec3) -> f64 {
    y.z * y.z - (x - y).norm_squared()
}

pub fn phi_grads(x: &Vec3, y: &Vec3) -> (Vec3, Vec3) {
    let grad_x = 2.0 * (y - x);
    let grad_y = 2.0 * Vec3::new(x.x - y.x, x.y - y.y, x.z);
    (grad_x, grad_y)
}

fn check_unit(alpha: &Vec3) -> Result<()> {
    if !alpha.iter().all(|c| c.is_finite()) || (alpha.norm() - 1.0).abs() > UNIT_TOLERANCE {
        return Err(GrtError::InvalidArgument(format!(
            "direction must be a unit vector, got {alpha:?}"
        )));
    }
    Ok(())
}

/// `Y(alpha, t; x) = (x + t alpha) - (x_3 + t alpha_3) / (1 + alpha_3) alpha`.
///
/// Affine in `t`, so the second derivative is identically zero.
pub fn center_map(alpha: &Vec3, t: f64, x: &Vec3) -> Result<CenterMap> {
    check_unit(alpha)?;
    let denom = 1.0 + alpha.z;
    if !(denom > 0.0) {
        return Err(GrtError::Domain(format!(
            "direction {alpha:?} is at the south pole"
        )));
    }
    let p = x + t * alpha;
    if !(p.z > 0.0) {
        return Err(GrtError::Domain(format!(
            "point {p:?} is not above the tangency plane"
        )));
    }
    Ok(CenterMap {
        center: p - (p.z / denom) * alpha,
        d_dt: alpha / denom,
        d2_dt2: Vec3::zeros(),
    })
}

/// `(sin theta cos psi, sin theta sin psi, cos theta)`.
pub fn direction_from_angles(theta: f64, psi: f64) -> Vec3 {
    Vec3::new(
        theta.sin() * psi.cos(),
        theta.sin() * psi.sin(),
        theta.cos(),
    )
}

/// An orthonormal pair spanning the plane orthogonal to the unit vector `a`.
pub fn orthonormal_complement(a: &Vec3) -> (Vec3, Vec3) {
    // Cross with the coordinate axis least aligned with `a`.
    let axis = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
        Vec3::x()
    } else if a.y.abs() <= a.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let e1 = a.cross(&axis).normalize();
    let e2 = a.cross(&e1);
    (e1, e2)
}

/// A tangency configuration: the data sphere with center `y0` passes through
/// `x0` with normal `alpha0` there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentChart {
    pub x0: Vec3,
    pub alpha0: Vec3,
    pub y0: Vec3,
    /// `Phi'_x(x0, y0)`
    pub grad_x: Vec3,
    /// `Phi'_y(x0, y0)`
    pub grad_y: Vec3,
    /// `|Phi'_x| / |Phi'_y|`
    pub mc: f64,
    /// `Phi'_y / |Phi'_y|`
    pub beta0: Vec3,
}

impl TangentChart {
    /// Chart at an arbitrary point `x0` with direction `alpha0`: the data
    /// sphere through `x0` normal to `alpha0` whose center lies on the
    /// `-alpha0` side.
    pub fn at_point(x0: Vec3, alpha0: Vec3) -> Result<Self> {
        let y0 = center_map(&alpha0, 0.0, &x0)?.center;
        let (grad_x, grad_y) = phi_grads(&x0, &y0);
        let norm_y = grad_y.norm();
        if !(norm_y > 0.0) {
            return Err(GrtError::Domain(format!(
                "degenerate chart at {x0:?}: Phi'_y vanishes"
            )));
        }
        Ok(Self {
            x0,
            alpha0,
            y0,
            grad_x,
            grad_y,
            mc: grad_x.norm() / norm_y,
            beta0: grad_y / norm_y,
        })
    }

    /// Radius of the tangent data sphere.
    pub fn sphere_radius(&self) -> f64 {
        self.y0.z
    }
}

/// Chart at the boundary point `x0 = center - R alpha0` of the ball, with
/// `alpha0` pointing into the ball.
pub fn tangent_chart(ball: &BallPhantom, alpha0: &Vec3) -> Result<TangentChart> {
    check_unit(alpha0)?;
    let x0 = ball.center - ball.radius * alpha0;
    if !(x0.z > 0.0) {
        return Err(GrtError::Domain(format!(
            "boundary point {x0:?} is not above the tangency plane"
        )));
    }
    TangentChart::at_point(x0, *alpha0)
}

/// Difference of second fundamental forms `II_{S_y0}(x0) - II_ball(x0)` in
/// an orthonormal basis of the common tangent plane, oriented so that it is
/// negative definite.
///
/// The data sphere sits on the exterior side and the ball on the interior
/// side of the tangent plane, so both curve away from each other and the
/// defect is `-(1/rho + 1/R) I`.
pub fn curvature_defect(chart: &TangentChart, ball: &BallPhantom) -> Result<Matrix2<f64>> {
    let rho = chart.sphere_radius();
    let r = ball.radius;
    let on_surface = ((chart.x0 - ball.center).norm() - r).abs() <= 1e-9 * r;
    let inward = ((ball.center - chart.x0) / r - chart.alpha0).norm() <= 1e-9;
    if !on_surface || !inward {
        return Err(GrtError::Numeric(
            "chart is not a tangency of the ball boundary".into(),
        ));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(GrtError::Numeric(format!(
            "degenerate tangent sphere radius {rho}"
        )));
    }
    Ok(Matrix2::identity() * -(1.0 / rho + 1.0 / r))
}

pub fn curvature_defect_det(chart: &TangentChart, ball: &BallPhantom) -> Result<f64> {
    Ok(curvature_defect(chart, ball)?.determinant())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_examples() {
        let y = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(phi_def(&Vec3::zeros(), &y), 0.0);
        assert_eq!(phi_def(&Vec3::new(0.0, 0.0, 2.0), &y), 0.0);
        assert_eq!(phi_def(&Vec3::new(1.0, 0.0, 1.0), &y), 0.0);
        assert_eq!(phi_def(&Vec3::new(1.0, 0.0, 2.0), &y), -1.0);
    }

    #[test]
    fn gradient_examples() {
        let y = Vec3::new(0.0, 0.0, 1.0);
        let (gx, gy) = phi_grads(&Vec3::zeros(), &y);
        assert_eq!(gx, Vec3::new(0.0, 0.0, 2.0));
        assert_eq!(gy, Vec3::zeros());
        let (gx, gy) = phi_grads(&Vec3::new(0.0, 0.0, 2.0), &y);
        assert_eq!(gx, Vec3::new(0.0, 0.0, -2.0));
        assert_eq!(gy, Vec3::new(0.0, 0.0, 4.0));
    }

    #[test]
    fn vertical_center_map() {
        let m = center_map(&Vec3::z(), 0.0, &Vec3::new(0.0, 0.0, 2.0)).unwrap();
        assert_eq!(m.center, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(m.d_dt, Vec3::new(0.0, 0.0, 0.5));
        assert_eq!(m.d2_dt2, Vec3::zeros());
    }

    #[test]
    fn center_map_domain_errors() {
        let x = Vec3::new(0.0, 0.0, 1.0);
        assert!(matches!(
            center_map(&-Vec3::z(), 0.0, &x),
            Err(GrtError::Domain(_))
        ));
        assert!(matches!(
            center_map(&Vec3::z(), -1.0, &x),
            Err(GrtError::Domain(_))
        ));
        assert!(matches!(
            center_map(&Vec3::new(0.0, 0.0, 2.0), 0.0, &x),
            Err(GrtError::InvalidArgument(_))
        ));
    }

    #[test]
    fn small_chart_by_hand() {
        let ball = BallPhantom::new_unrestricted(Vec3::new(0.0, 0.0, 2.0), 1.0, 1.0).unwrap();
        let chart = tangent_chart(&ball, &Vec3::z()).unwrap();
        assert_eq!(chart.x0, Vec3::new(0.0, 0.0, 1.0));
        assert_eq!(chart.y0, Vec3::new(0.0, 0.0, 0.5));
        assert!((chart.mc - 0.5).abs() < 1e-15);
        assert!((curvature_defect_det(&chart, &ball).unwrap() - 9.0).abs() < 1e-12);
    }

    #[test]
    fn chart_below_plane_is_rejected() {
        let ball = BallPhantom::new_unrestricted(Vec3::new(0.0, 0.0, 0.5), 1.0, 1.0).unwrap();
        assert!(matches!(
            tangent_chart(&ball, &Vec3::z()),
            Err(GrtError::Domain(_))
        ));
    }

    #[test]
    fn complement_is_orthonormal() {
        for a in [Vec3::x(), Vec3::z(), direction_from_angles(0.7, 2.1)] {
            let (e1, e2) = orthonormal_complement(&a);
            assert!(e1.dot(&a).abs() < 1e-15 && e2.dot(&a).abs() < 1e-15);
            assert!(e1.dot(&e2).abs() < 1e-15);
            assert!((e1.norm() - 1.0).abs() < 1e-15 && (e2.norm() - 1.0).abs() < 1e-15);
        }
    }
}
