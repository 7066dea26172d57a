//! Expected beacon projection, its first-order pixel covariance and the
//! 3-sigma gate used to pick the beacon among the spikes.

use nalgebra::{Matrix2, Matrix2x3, SMatrix, SVector, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::{matrix_from_quaternion, skew, Attitude, CameraModel};

/// Chi-square quantile with two degrees of freedom at 0.9973.
pub const CHI2_2DOF_3SIGMA: f64 = 11.8292;

/// Smallest semi-axis (px) the gating ellipse is allowed to have.
pub const MIN_SEMI_AXIS_PX: f64 = 0.5;

pub type Jacobian = SMatrix<f64, 2, 10>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BeaconError {
    #[error("beacon is not in front of the camera")]
    BehindCamera,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyBudget {
    pub sigma_qv: f64,
    /// Spacecraft position, per axis (km).
    pub sigma_r: f64,
    /// Beacon ephemeris, per axis (km).
    pub sigma_rbc: f64,
}

impl Default for UncertaintyBudget {
    fn default() -> Self {
        Self {
            sigma_qv: 1e-4,
            sigma_r: 1e4,
            sigma_rbc: 0.0,
        }
    }
}

impl UncertaintyBudget {
    /// Diagonal of `S`; the scalar quaternion part carries no variance.
    pub fn variances(&self) -> SVector<f64, 10> {
        let mut d = SVector::<f64, 10>::zeros();
        for k in 0..3 {
            d[1 + k] = self.sigma_qv.powi(2);
            d[4 + k] = self.sigma_r.powi(2);
            d[7 + k] = self.sigma_rbc.powi(2);
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    pub a: f64,
    pub b: f64,
    /// Orientation of the major axis, in `(-pi, pi]`.
    pub psi: f64,
}

impl Ellipse {
    /// Point at parameter `t` on the boundary centered at `center`.
    pub fn point(&self, center: &Vector2<f64>, t: f64) -> Vector2<f64> {
        let (st, ct) = t.sin_cos();
        let (sp, cp) = self.psi.sin_cos();
        center + Vector2::new(self.a * ct * cp - self.b * st * sp, self.a * ct * sp + self.b * st * cp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPrediction {
    pub expected_px: Vector2<f64>,
    /// Propagated covariance `F S F^T`.
    pub covariance: Matrix2<f64>,
    /// Covariance with eigenvalues floored to [`MIN_SEMI_AXIS_PX`].
    pub gating_covariance: Matrix2<f64>,
    /// Ellipse of the gating covariance.
    pub ellipse: Ellipse,
}

/// Jacobian of the beacon pixel with respect to `(q0, qv, r, r_bc)`.
pub fn projection_jacobian(
    camera: &CameraModel,
    q: &Attitude,
    sc_position: &Vector3<f64>,
    beacon_position: &Vector3<f64>,
) -> Result<Jacobian, BeaconError> {
    let rho = beacon_position - sc_position;
    let a = matrix_from_quaternion(q.q0, &q.qv);
    let h = camera.intrinsic() * (a * rho);
    if (a * rho).z <= 0.0 {
        return Err(BeaconError::BehindCamera);
    }
    let dehom = Matrix2x3::new(1.0 / h.z, 0.0, -h.x / (h.z * h.z), 0.0, 1.0 / h.z, -h.y / (h.z * h.z));
    let outer = dehom * camera.intrinsic();

    let d_q0 = rho * (2.0 * q.q0) - skew(&q.qv) * rho * 2.0;
    let d_qv = -rho * q.qv.transpose() * 2.0
        + nalgebra::Matrix3::identity() * (2.0 * q.qv.dot(&rho))
        + q.qv * rho.transpose() * 2.0
        + skew(&rho) * (2.0 * q.q0);
    let mut f = Jacobian::zeros();
    f.fixed_view_mut::<2, 1>(0, 0).copy_from(&(outer * d_q0));
    f.fixed_view_mut::<2, 3>(0, 1).copy_from(&(outer * d_qv));
    f.fixed_view_mut::<2, 3>(0, 4).copy_from(&(outer * -a));
    f.fixed_view_mut::<2, 3>(0, 7).copy_from(&(outer * a));
    Ok(f)
}

pub fn projection_covariance(f: &Jacobian, budget: &UncertaintyBudget) -> Matrix2<f64> {
    let p = f * SMatrix::<f64, 10, 10>::from_diagonal(&budget.variances()) * f.transpose();
    (p + p.transpose()) * 0.5
}

/// Eigenvalues (descending) and major-axis eigenvector of a symmetric 2x2.
fn eigen2(p: &Matrix2<f64>) -> (f64, f64, Vector2<f64>) {
    let (p11, p12, p22) = (p[(0, 0)], 0.5 * (p[(0, 1)] + p[(1, 0)]), p[(1, 1)]);
    let mid = 0.5 * (p11 + p22);
    let rad = (0.25 * (p11 - p22).powi(2) + p12 * p12).sqrt();
    let (l_max, l_min) = (mid + rad, mid - rad);
    let v = if p12 != 0.0 {
        let v = Vector2::new(l_max - p22, p12);
        // Pick the better-conditioned of the two equivalent expressions.
        let w = Vector2::new(p12, l_max - p11);
        if v.norm() >= w.norm() { v } else { w }.normalize()
    } else if p11 >= p22 {
        Vector2::x()
    } else {
        Vector2::y()
    };
    let v = if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) { -v } else { v };
    (l_max, l_min, v)
}

/// 3-sigma ellipse of a 2x2 covariance.
pub fn covariance_ellipse(p: &Matrix2<f64>) -> Ellipse {
    let (l_max, l_min, v) = eigen2(p);
    Ellipse {
        a: (CHI2_2DOF_3SIGMA * l_max.max(0.0)).sqrt(),
        b: (CHI2_2DOF_3SIGMA * l_min.max(0.0)).sqrt(),
        psi: v.y.atan2(v.x),
    }
}

/// Raises both eigenvalues so that the 3-sigma semi-axes are at least
/// `min_semi_axis` pixels.
pub fn floor_covariance(p: &Matrix2<f64>, min_semi_axis: f64) -> Matrix2<f64> {
    let floor = min_semi_axis * min_semi_axis / CHI2_2DOF_3SIGMA;
    let (l_max, l_min, v) = eigen2(p);
    let u = Vector2::new(-v.y, v.x);
    v * v.transpose() * l_max.max(floor) + u * u.transpose() * l_min.max(floor)
}

pub fn predict_projection(
    camera: &CameraModel,
    q: &Attitude,
    sc_position: &Vector3<f64>,
    beacon_position: &Vector3<f64>,
    budget: &UncertaintyBudget,
) -> Result<ProjectionPrediction, BeaconError> {
    let rho_c = q.matrix() * (beacon_position - sc_position);
    if rho_c.z <= 0.0 {
        return Err(BeaconError::BehindCamera);
    }
    let h = camera.intrinsic() * rho_c;
    let f = projection_jacobian(camera, q, sc_position, beacon_position)?;
    let covariance = projection_covariance(&f, budget);
    let gating_covariance = floor_covariance(&covariance, MIN_SEMI_AXIS_PX);
    Ok(ProjectionPrediction {
        expected_px: Vector2::new(h.x / h.z, h.y / h.z),
        covariance,
        gating_covariance,
        ellipse: covariance_ellipse(&gating_covariance),
    })
}

/// Squared Mahalanobis distance of `point` under the gating covariance.
pub fn mahalanobis_sq(prediction: &ProjectionPrediction, point: &Vector2<f64>) -> f64 {
    let d = point - prediction.expected_px;
    match prediction.gating_covariance.try_inverse() {
        Some(inv) => (d.transpose() * inv * d)[0],
        None => f64::INFINITY,
    }
}

/// Index of the in-ellipse spike closest to the expected projection.
pub fn detect_beacon(spikes: &[Vector2<f64>], prediction: &ProjectionPrediction) -> Option<usize> {
    spikes
        .iter()
        .enumerate()
        .filter(|(_, s)| mahalanobis_sq(prediction, s) <= CHI2_2DOF_3SIGMA)
        .min_by(|(i, a), (j, b)| {
            let da = (*a - prediction.expected_px).norm();
            let db = (*b - prediction.expected_px).norm();
            da.total_cmp(&db).then(i.cmp(j))
        })
        .map(|(i, _)| i)
}
