//! Camera intrinsics, attitude representations and the pinhole projection.
//!
//! Conventions shared by every module of the crate:
//!
//! * `N` is the inertial frame, `C` the camera frame with `c3` along the
//!   boresight, `c1` towards increasing image columns and `c2` towards
//!   increasing image rows.
//! * Attitude matrices are passive: `[CN] * v_N = v_C`.
//! * Pixel coordinates have the origin at the upper-left corner, `x` to the
//!   right and `y` down. Pixel `(i, j)` has its center at the integer
//!   coordinate `(i, j)` and covers `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Vector2, Vector3};
use thiserror::Error;

/// Tolerance used when validating that a matrix is a proper rotation.
const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("beacon and spacecraft positions coincide")]
    ZeroRange,
    #[error("matrix is not a proper rotation (orthonormality error {0:.3e})")]
    NotOrthonormal(f64),
}

/// Onboard camera description. All derived quantities (focal length in
/// pixels, intrinsic matrix) are computed from the field of view and the
/// image size, assuming square pixels and zero skew.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub fov_deg: f64,
    pub width: u32,
    pub height: u32,
    pub focal_length_mm: f64,
    pub f_number: f64,
    pub exposure_ms: f64,
    pub qe_tlens: f64,
    /// Solar exclusion angle. Carried for completeness; not enforced.
    pub sea_deg: f64,
    pub defocus_sigma_px: f64,
}

impl Default for CameraModel {
    /// The CubeSat-class camera used throughout the evaluation campaign.
    fn default() -> Self {
        Self {
            fov_deg: 20.0,
            width: 1024,
            height: 1024,
            focal_length_mm: 40.0,
            f_number: 2.2,
            exposure_ms: 400.0,
            qe_tlens: 0.49,
            sea_deg: 20.0,
            defocus_sigma_px: 0.9,
        }
    }
}

impl CameraModel {
    /// Focal length in pixels, `width / (2 tan(fov / 2))`.
    pub fn focal_length_px(&self) -> f64 {
        self.width as f64 / (2.0 * (self.fov_deg.to_radians() / 2.0).tan())
    }

    pub fn principal_point(&self) -> Vector2<f64> {
        Vector2::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Intrinsic matrix `[K]` in pixel units.
    pub fn intrinsic(&self) -> Matrix3<f64> {
        let f = self.focal_length_px();
        let c = self.principal_point();
        Matrix3::new(f, 0.0, c.x, 0.0, f, c.y, 0.0, 0.0, 1.0)
    }

    /// True when the pixel coordinate lies on the sensor.
    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        px.x >= -0.5 && px.y >= -0.5 && px.x < self.width as f64 - 0.5 && px.y < self.height as f64 - 0.5
    }
}

/// Camera pointing in right ascension, declination and twist (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingAngles {
    pub alpha: f64,
    pub delta: f64,
    pub phi: f64,
}

impl PointingAngles {
    pub fn new(alpha: f64, delta: f64, phi: f64) -> Self {
        Self { alpha, delta, phi }
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        attitude_from_axis_azimuth(self)
    }
}

/// Passive rotation about the `axis`-th coordinate axis (1, 2 or 3).
pub fn frame_rotation(axis: usize, angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    match axis {
        1 => Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c),
        2 => Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c),
        3 => Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0),
        _ => panic!("rotation axis must be 1, 2 or 3, got {axis}"),
    }
}

/// Axis-azimuth attitude `[CN]`.
///
/// The camera frame is reached from `N` by the counterclockwise sequence
/// `R3(alpha) R2(pi/2 - delta) R3(phi)`; that product holds the camera axes
/// as columns, so the passive matrix is its transpose. With this reading the
/// boresight points at right ascension `alpha` and declination `delta`.
pub fn attitude_from_axis_azimuth(angles: &PointingAngles) -> Matrix3<f64> {
    frame_rotation(3, angles.phi)
        * frame_rotation(2, std::f64::consts::FRAC_PI_2 - angles.delta)
        * frame_rotation(3, angles.alpha)
}

/// Cross-product matrix `[v]^` such that `[v]^ w = v x w`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Angle between two vectors, accurate near 0 and pi.
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Unit vector for a right ascension / declination pair.
pub fn radec_to_unit(ra: f64, dec: f64) -> Vector3<f64> {
    let (sd, cd) = dec.sin_cos();
    let (sa, ca) = ra.sin_cos();
    Vector3::new(cd * ca, cd * sa, sd)
}

/// Scalar-first unit quaternion describing the passive attitude matrix
///
/// `[A] = (q0^2 - qv.qv) I + 2 qv qv^T - 2 q0 [qv]^`.
///
/// Stored on the canonical hemisphere `q0 >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attitude {
    pub q0: f64,
    pub qv: Vector3<f64>,
}

impl Attitude {
    pub fn identity() -> Self {
        Self {
            q0: 1.0,
            qv: Vector3::zeros(),
        }
    }

    /// Normalizes and canonicalizes an arbitrary nonzero quaternion.
    pub fn new(q0: f64, qv: Vector3<f64>) -> Self {
        let n = (q0 * q0 + qv.norm_squared()).sqrt();
        let sign = if q0 < 0.0 { -1.0 } else { 1.0 };
        Self {
            q0: sign * q0 / n,
            qv: qv * (sign / n),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.q0 * self.q0 + self.qv.norm_squared()).sqrt()
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q0, self.qv.x, self.qv.y, self.qv.z]
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        matrix_from_quaternion(self.q0, &self.qv)
    }

    pub fn from_matrix(m: &Matrix3<f64>) -> Result<Self, GeometryError> {
        quaternion_from_matrix(m)
    }
}

/// Attitude matrix of a (not necessarily unit) quaternion. For a non-unit
/// quaternion the result is the rotation scaled by `|q|^2`.
pub fn matrix_from_quaternion(q0: f64, qv: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::identity() * (q0 * q0 - qv.norm_squared()) + qv * qv.transpose() * 2.0 - skew(qv) * (2.0 * q0)
}

/// Orthonormality defect `max |M^T M - I|`, or infinity for improper matrices.
pub fn rotation_defect(m: &Matrix3<f64>) -> f64 {
    if m.determinant() <= 0.0 {
        return f64::INFINITY;
    }
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Shepperd's method for the passive quaternion convention above.
pub fn quaternion_from_matrix(m: &Matrix3<f64>) -> Result<Attitude, GeometryError> {
    let defect = rotation_defect(m);
    if defect > ORTHONORMAL_TOL {
        return Err(GeometryError::NotOrthonormal(defect));
    }
    let tr = m.trace();
    let candidates = [tr, m[(0, 0)], m[(1, 1)], m[(2, 2)]];
    let best = candidates
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    // Off-diagonal combinations for A = passive(q):
    // A12 - A21 = 4 q0 q3, A23 - A32 = 4 q0 q1, A31 - A13 = 4 q0 q2,
    // A12 + A21 = 4 q1 q2, A13 + A31 = 4 q1 q3, A23 + A32 = 4 q2 q3.
    let (q0, q1, q2, q3) = match best {
        0 => {
            let q0 = 0.5 * (1.0 + tr).sqrt();
            let k = 0.25 / q0;
            (
                q0,
                (m[(1, 2)] - m[(2, 1)]) * k,
                (m[(2, 0)] - m[(0, 2)]) * k,
                (m[(0, 1)] - m[(1, 0)]) * k,
            )
        }
        1 => {
            let q1 = 0.5 * (1.0 + 2.0 * m[(0, 0)] - tr).sqrt();
            let k = 0.25 / q1;
            (
                (m[(1, 2)] - m[(2, 1)]) * k,
                q1,
                (m[(0, 1)] + m[(1, 0)]) * k,
                (m[(0, 2)] + m[(2, 0)]) * k,
            )
        }
        2 => {
            let q2 = 0.5 * (1.0 + 2.0 * m[(1, 1)] - tr).sqrt();
            let k = 0.25 / q2;
            (
                (m[(2, 0)] - m[(0, 2)]) * k,
                (m[(0, 1)] + m[(1, 0)]) * k,
                q2,
                (m[(1, 2)] + m[(2, 1)]) * k,
            )
        }
        _ => {
            let q3 = 0.5 * (1.0 + 2.0 * m[(2, 2)] - tr).sqrt();
            let k = 0.25 / q3;
            (
                (m[(0, 1)] - m[(1, 0)]) * k,
                (m[(0, 2)] + m[(2, 0)]) * k,
                (m[(1, 2)] + m[(2, 1)]) * k,
                q3,
            )
        }
    };
    Ok(Attitude::new(q0, Vector3::new(q1, q2, q3)))
}

/// Result of a forward projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    Pixel(Vector2<f64>),
    BehindCamera,
}

impl Projection {
    pub fn pixel(&self) -> Option<Vector2<f64>> {
        match self {
            Projection::Pixel(p) => Some(*p),
            Projection::BehindCamera => None,
        }
    }
}

/// Projects a camera-frame direction through `[K]` and dehomogenizes.
pub fn project_camera_vector(camera: &CameraModel, rho_c: &Vector3<f64>) -> Projection {
    if rho_c.z <= 0.0 {
        return Projection::BehindCamera;
    }
    let h = camera.intrinsic() * rho_c;
    Projection::Pixel(Vector2::new(h.x / h.z, h.y / h.z))
}

/// Pinhole projection of a beacon at `beacon_position` seen from
/// `sc_position` (both in km, frame `N`). No image-bounds clipping.
pub fn project_point(
    camera: &CameraModel,
    attitude: &Matrix3<f64>,
    sc_position: &Vector3<f64>,
    beacon_position: &Vector3<f64>,
) -> Result<Projection, GeometryError> {
    let rho_n = beacon_position - sc_position;
    if rho_n.norm() == 0.0 {
        return Err(GeometryError::ZeroRange);
    }
    Ok(project_camera_vector(camera, &(attitude * rho_n)))
}

/// Projection of a star at infinity; independent of the spacecraft position.
pub fn project_star(camera: &CameraModel, attitude: &Matrix3<f64>, ra: f64, dec: f64) -> Projection {
    project_camera_vector(camera, &(attitude * radec_to_unit(ra, dec)))
}

/// Unit line of sight in `C` through a pixel coordinate.
pub fn los_from_pixel(camera: &CameraModel, px: &Vector2<f64>) -> Vector3<f64> {
    let f = camera.focal_length_px();
    let c = camera.principal_point();
    Vector3::new((px.x - c.x) / f, (px.y - c.y) / f, 1.0).normalize()
}

/// Boresight (third camera axis) expressed in `N`.
pub fn boresight(attitude: &Matrix3<f64>) -> Vector3<f64> {
    attitude.row(2).transpose()
}
