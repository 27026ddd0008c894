//! Rigid and similarity transforms, camera poses and rotation metrics.
//!
//! Poses are stored world-from-camera: the translation of a pose is the camera
//! center in world coordinates and its rotation maps camera-frame directions
//! into the world frame. Cameras look down their local +z axis with +x to the
//! right and +y pointing down the image.

use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("rotation matrix is not orthonormal with det +1")]
    NotARotation,
    #[error("similarity scale must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("look-at is degenerate: eye and target coincide")]
    DegenerateLookAt,
    #[error("expected {expected} numbers, got {got}")]
    WrongLength { expected: usize, got: usize },
}

/// Tolerance used when validating rotation matrices.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Intrinsic XYZ Euler angles: rotate about x, then the new y, then the new z.
pub fn euler_xyz(rx: f64, ry: f64, rz: f64) -> Matrix3<f64> {
    rot_x(rx) * rot_y(ry) * rot_z(rz)
}

/// Rotation by `angle` radians about `axis` (need not be normalized).
pub fn axis_angle(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    match nalgebra::Unit::try_new(*axis, 1e-15) {
        Some(unit) => Rotation3::from_axis_angle(&unit, angle).into_inner(),
        None => Matrix3::identity(),
    }
}

pub fn is_rotation(m: &Matrix3<f64>, tol: f64) -> bool {
    let should_be_identity = m.transpose() * m;
    let ortho = (should_be_identity - Matrix3::identity())
        .iter()
        .all(|v| v.abs() <= tol);
    ortho && (m.determinant() - 1.0).abs() <= tol
}

/// Nearest rotation in the Frobenius sense (polar projection through the SVD).
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut correction = Matrix3::identity();
    if (u * v_t).determinant() < 0.0 {
        correction[(2, 2)] = -1.0;
    }
    u * correction * v_t
}

/// Geodesic angle between two rotations, in degrees, within [0, 180].
///
/// Equal to `arccos((trace(aᵀb) − 1) / 2)`, evaluated as `atan2(sin, cos)` of
/// the relative rotation so small angles keep full precision and slightly
/// non-orthonormal input cannot leave the arccos domain.
pub fn rotation_geodesic_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let m = a.transpose() * b;
    let cos2 = m.trace() - 1.0;
    let sin2 = Vector3::new(
        m[(2, 1)] - m[(1, 2)],
        m[(0, 2)] - m[(2, 0)],
        m[(1, 0)] - m[(0, 1)],
    )
    .norm();
    sin2.atan2(cos2).to_degrees()
}

/// Row-major input is kept verbatim when it is already a rotation, so
/// serialized transforms round-trip exactly; rounded input is projected.
fn rotation_from_row_major(values: &[f64]) -> Result<Matrix3<f64>, GeometryError> {
    if values.len() != 9 {
        return Err(GeometryError::WrongLength {
            expected: 9,
            got: values.len(),
        });
    }
    let m = Matrix3::from_row_slice(values);
    if is_rotation(&m, ROTATION_TOLERANCE) {
        Ok(m)
    } else {
        Ok(nearest_rotation(&m))
    }
}

fn rotation_to_row_major(m: &Matrix3<f64>) -> Vec<f64> {
    (0..3)
        .flat_map(|r| (0..3).map(move |c| (r, c)))
        .map(|(r, c)| m[(r, c)])
        .collect()
}

/// Element of SE(3): `p -> rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn try_new(
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        if !is_rotation(&rotation, ROTATION_TOLERANCE) {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self::new(rotation, translation))
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), translation)
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let r_t = self.rotation.transpose();
        RigidTransform::new(r_t, -(r_t * self.translation))
    }

    pub fn to_sim(&self) -> SimTransform {
        SimTransform::new(1.0, self.rotation, self.translation)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().chain(self.translation.iter()).all(|v| v.is_finite())
    }
}

/// Element of SIM(3): `p -> scale * rotation * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub struct SimTransform {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for SimTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimTransform {
    pub fn identity() -> Self {
        Self::new(1.0, Matrix3::identity(), Vector3::zeros())
    }

    pub fn new(scale: f64, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            scale,
            rotation,
            translation,
        }
    }

    pub fn try_new(
        scale: f64,
        rotation: Matrix3<f64>,
        translation: Vector3<f64>,
    ) -> Result<Self, GeometryError> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(GeometryError::InvalidScale(scale));
        }
        if !is_rotation(&rotation, ROTATION_TOLERANCE) {
            return Err(GeometryError::NotARotation);
        }
        Ok(Self::new(scale, rotation, translation))
    }

    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * p) + self.translation
    }

    /// Rotates and scales a direction; translation does not apply.
    pub fn apply_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.scale * (self.rotation * v)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SimTransform) -> SimTransform {
        SimTransform::new(
            self.scale * other.scale,
            self.rotation * other.rotation,
            self.scale * (self.rotation * other.translation) + self.translation,
        )
    }

    pub fn inverse(&self) -> SimTransform {
        let r_t = self.rotation.transpose();
        let inv_scale = 1.0 / self.scale;
        SimTransform::new(inv_scale, r_t, -inv_scale * (r_t * self.translation))
    }

    /// Moves a camera pose expressed in this transform's source frame into its
    /// target frame. The camera center follows the point action; the camera
    /// axes are rotated. Scale does not enter the orientation.
    pub fn transform_pose(&self, pose: &Pose) -> Pose {
        Pose::new(RigidTransform::new(
            self.rotation * pose.rotation(),
            self.apply(&pose.center()),
        ))
    }

    pub fn is_finite(&self) -> bool {
        self.scale.is_finite()
            && self
                .rotation
                .iter()
                .chain(self.translation.iter())
                .all(|v| v.is_finite())
    }
}

impl From<RigidTransform> for SimTransform {
    fn from(t: RigidTransform) -> Self {
        t.to_sim()
    }
}

/// On-disk transform layout: rotation as 9 row-major numbers.
#[derive(Serialize, Deserialize)]
struct TransformRepr {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale: Option<f64>,
    rotation: Vec<f64>,
    translation: [f64; 3],
}

impl TryFrom<TransformRepr> for RigidTransform {
    type Error = GeometryError;

    fn try_from(repr: TransformRepr) -> Result<Self, Self::Error> {
        let rotation = rotation_from_row_major(&repr.rotation)?;
        Ok(RigidTransform::new(rotation, Vector3::from(repr.translation)))
    }
}

impl From<RigidTransform> for TransformRepr {
    fn from(t: RigidTransform) -> Self {
        TransformRepr {
            scale: None,
            rotation: rotation_to_row_major(&t.rotation),
            translation: t.translation.into(),
        }
    }
}

impl TryFrom<TransformRepr> for SimTransform {
    type Error = GeometryError;

    fn try_from(repr: TransformRepr) -> Result<Self, Self::Error> {
        let scale = repr.scale.unwrap_or(1.0);
        let rotation = rotation_from_row_major(&repr.rotation)?;
        SimTransform::try_new(scale, rotation, Vector3::from(repr.translation))
    }
}

impl From<SimTransform> for TransformRepr {
    fn from(t: SimTransform) -> Self {
        TransformRepr {
            scale: Some(t.scale),
            rotation: rotation_to_row_major(&t.rotation),
            translation: t.translation.into(),
        }
    }
}

/// A camera pose, world-from-camera.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pose {
    pub world_from_camera: RigidTransform,
}

impl Pose {
    pub fn new(world_from_camera: RigidTransform) -> Self {
        Self { world_from_camera }
    }

    pub fn identity() -> Self {
        Self::new(RigidTransform::identity())
    }

    pub fn from_parts(rotation: Matrix3<f64>, center: Vector3<f64>) -> Self {
        Self::new(RigidTransform::new(rotation, center))
    }

    pub fn center(&self) -> Vector3<f64> {
        self.world_from_camera.translation
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.world_from_camera.rotation
    }

    pub fn camera_from_world(&self) -> RigidTransform {
        self.world_from_camera.inverse()
    }

    /// Optical axis in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation().column(2).into_owned()
    }

    pub fn to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.rotation().transpose() * (p_world - self.center())
    }

    pub fn to_world(&self, p_camera: &Vector3<f64>) -> Vector3<f64> {
        self.world_from_camera.apply(p_camera)
    }

    /// Camera at `eye` looking at `target`. The image "up" follows `up`
    /// projected orthogonal to the viewing direction; when `up` is parallel to
    /// the viewing direction, world +x is used instead.
    pub fn look_at(
        eye: &Vector3<f64>,
        target: &Vector3<f64>,
        up: &Vector3<f64>,
    ) -> Result<Pose, GeometryError> {
        let offset = target - eye;
        let norm = offset.norm();
        if !(norm > 1e-9) {
            return Err(GeometryError::DegenerateLookAt);
        }
        let forward = offset / norm;
        let mut right = forward.cross(up);
        if right.norm() < 1e-9 {
            right = forward.cross(&Vector3::x());
            if right.norm() < 1e-9 {
                right = forward.cross(&Vector3::y());
            }
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let rotation = Matrix3::from_columns(&[right, down, forward]);
        Ok(Pose::from_parts(rotation, *eye))
    }
}

/// Pose of camera `b` expressed in camera `a`'s frame: `a⁻¹ · b`.
pub fn relative_pose(a: &Pose, b: &Pose) -> RigidTransform {
    a.world_from_camera.inverse().compose(&b.world_from_camera)
}
