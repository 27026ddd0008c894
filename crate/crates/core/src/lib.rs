//! Closed-form geometric machinery for camera self-calibration and
//! multi-field volumetric scene fusion.
//!
//! * [`camera`]: pinhole / UCM / EUCM / Double Sphere projection, unprojection,
//!   analytic Jacobians, ray generation and rectification.
//! * [`calib`]: Levenberg–Marquardt intrinsics recovery from 2D–3D correspondences.
//! * [`field`]: analytic volumetric scenes and a quadrature renderer with
//!   distant accumulation.
//! * [`augment`]: hemispheric pose sampling, virtual cameras, canonical
//!   jittering and randomization.
//! * [`register`]: SIM(3) recovery from pose correspondences by candidate
//!   generation and median aggregation.
//! * [`blend`]: proximity test, sample merging and IDW blending.
//! * [`harness`]: metrics, file I/O, experiment drivers and the CLI.

pub mod augment;
pub mod blend;
pub mod calib;
pub mod camera;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod image;
pub mod register;

pub use camera::{Camera, CameraError, CameraKind, CameraModel, Ray, RayConvention};
pub use geometry::{Pose, RigidTransform, SimTransform};
pub use image::{ImageGeometry, Rgb, RgbImage, ScalarImage};
