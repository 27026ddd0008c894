//! SIM(3) registration of a field from pose correspondences.
//!
//! Each correspondence pairs a camera pose known in the field's local frame
//! with the same camera's pose recovered in a shared frame at arbitrary scale.
//! Candidates for scale, rotation and translation are generated from pairs
//! and single correspondences and aggregated with medians.

use nalgebra::{Matrix3, UnitQuaternion, Vector3, Vector4};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::sample_hemisphere_poses;
use crate::geometry::{euler_xyz, rotation_geodesic_deg, Pose, SimTransform};

/// Failure rubric: rotation error in degrees.
pub const MAX_ROTATION_ERR_DEG: f64 = 5.0;
/// Failure rubric: translation error in local-frame units.
pub const MAX_TRANSLATION_ERR: f64 = 0.2;
/// Failure rubric: relative scale error.
pub const MAX_SCALE_ERR: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegisterError {
    #[error("need at least 2 usable correspondences, got {0}")]
    TooFew(usize),
    #[error("all shared-frame camera centers coincide; scale is unobservable")]
    DegenerateBaseline,
    #[error("only {kept} poses pass the quality filter, at least 2 are required")]
    TooFewPoses { kept: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseCorrespondence {
    pub local: Pose,
    pub shared: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationResult {
    /// Maps shared-frame points to local-frame points.
    pub transform: SimTransform,
    pub candidates: usize,
    /// Median absolute deviation of the scale candidates.
    pub scale_mad: f64,
    /// Median geodesic distance (degrees) of rotation candidates to the chosen one.
    pub rotation_mad_deg: f64,
    /// Norm of the per-component translation MADs.
    pub translation_mad: f64,
    pub success: bool,
}

fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn mad(values: &[f64], center: f64) -> f64 {
    let mut dev: Vec<f64> = values.iter().map(|v| (v - center).abs()).collect();
    median(&mut dev)
}

fn pose_is_finite(p: &Pose) -> bool {
    p.world_from_camera.is_finite()
}

pub fn solve_frame_transform(
    correspondences: &[PoseCorrespondence],
) -> Result<RegistrationResult, RegisterError> {
    let usable: Vec<&PoseCorrespondence> = correspondences
        .iter()
        .filter(|c| pose_is_finite(&c.local) && pose_is_finite(&c.shared))
        .collect();
    let n = usable.len();
    if n < 2 {
        return Err(RegisterError::TooFew(n));
    }

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut scales: Vec<f64> = pairs
        .par_iter()
        .filter_map(|&(i, j)| {
            let ds = (usable[i].shared.center() - usable[j].shared.center()).norm();
            let dl = (usable[i].local.center() - usable[j].local.center()).norm();
            (ds > 1e-12).then(|| dl / ds)
        })
        .collect();
    if scales.is_empty() {
        return Err(RegisterError::DegenerateBaseline);
    }
    let scale_candidates = scales.clone();
    let scale = median(&mut scales);
    let scale_mad = mad(&scale_candidates, scale);

    let rotations: Vec<Matrix3<f64>> = usable
        .iter()
        .map(|c| c.local.rotation() * c.shared.rotation().transpose())
        .collect();
    let spread: Vec<f64> = rotations
        .par_iter()
        .map(|r| rotations.iter().map(|q| rotation_geodesic_deg(r, q)).sum())
        .collect();
    let best = spread
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .expect("at least two candidates");
    let rotation = rotations[best];
    let mut rot_dev: Vec<f64> = rotations
        .iter()
        .map(|r| rotation_geodesic_deg(&rotation, r))
        .collect();
    let rotation_mad_deg = median(&mut rot_dev);

    let translations: Vec<Vector3<f64>> = usable
        .iter()
        .map(|c| c.local.center() - scale * rotation * c.shared.center())
        .collect();
    let mut translation = Vector3::zeros();
    let mut translation_mad_sq = 0.0;
    for axis in 0..3 {
        let comp: Vec<f64> = translations.iter().map(|t| t[axis]).collect();
        let m = median(&mut comp.clone());
        translation[axis] = m;
        translation_mad_sq += mad(&comp, m).powi(2);
    }

    let transform = SimTransform::new(scale, rotation, translation);
    Ok(RegistrationResult {
        transform,
        candidates: n,
        scale_mad,
        rotation_mad_deg,
        translation_mad: translation_mad_sq.sqrt(),
        success: transform.is_finite(),
    })
}

/// `T_BA = T_A ∘ T_B⁻¹`, mapping points of field B into field A.
pub fn relative_field_transform(a: &RegistrationResult, b: &RegistrationResult) -> SimTransform {
    a.transform.compose(&b.transform.inverse())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationErrors {
    pub r_err_deg: f64,
    pub t_err: f64,
    pub s_err: f64,
}

impl RegistrationErrors {
    /// Passes the failure rubric: no NaN and every error under its threshold.
    pub fn success(&self) -> bool {
        self.r_err_deg < MAX_ROTATION_ERR_DEG
            && self.t_err < MAX_TRANSLATION_ERR
            && self.s_err < MAX_SCALE_ERR
    }
}

pub fn registration_errors(estimate: &SimTransform, truth: &SimTransform) -> RegistrationErrors {
    RegistrationErrors {
        r_err_deg: rotation_geodesic_deg(&estimate.rotation, &truth.rotation),
        t_err: (estimate.translation - truth.translation).norm(),
        s_err: (estimate.scale / truth.scale - 1.0).abs(),
    }
}

/// Keeps poses whose mean distant accumulation reaches `threshold`.
pub fn filter_poses_by_quality(
    renders: &[(Pose, f64)],
    threshold: f64,
) -> Result<Vec<Pose>, RegisterError> {
    let kept: Vec<Pose> = renders
        .iter()
        .filter(|(_, q)| *q >= threshold)
        .map(|(p, _)| *p)
        .collect();
    if kept.len() < 2 {
        return Err(RegisterError::TooFewPoses { kept: kept.len() });
    }
    Ok(kept)
}

/// Uniformly distributed rotation.
pub fn random_rotation<R: Rng>(rng: &mut R) -> Matrix3<f64> {
    let n = Normal::new(0.0, 1.0).expect("unit normal");
    let q = Vector4::new(n.sample(rng), n.sample(rng), n.sample(rng), n.sample(rng));
    UnitQuaternion::from_quaternion(nalgebra::Quaternion::from(q))
        .to_rotation_matrix()
        .into_inner()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSfmConfig {
    pub n_poses: usize,
    pub rotation_noise_deg: f64,
    /// Per-component std of shared-frame center noise.
    pub translation_noise: f64,
    pub outlier_fraction: f64,
}

impl Default for SyntheticSfmConfig {
    fn default() -> Self {
        Self {
            n_poses: 20,
            rotation_noise_deg: 0.0,
            translation_noise: 0.0,
            outlier_fraction: 0.0,
        }
    }
}

/// Stand-in for structure-from-motion: local poses on the unit upper
/// hemisphere, their images under `truth⁻¹` as shared poses, then noise and
/// an exact fraction of outliers replaced by random poses.
pub fn synthetic_correspondences(
    truth: &SimTransform,
    cfg: &SyntheticSfmConfig,
    seed: u64,
) -> Vec<PoseCorrespondence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let local = sample_hemisphere_poses(cfg.n_poses, 1.0, rng.random());
    let to_shared = truth.inverse();
    let rot_noise = Normal::new(0.0, cfg.rotation_noise_deg.to_radians()).expect("finite noise");
    let trans_noise = Normal::new(0.0, cfg.translation_noise).expect("finite noise");
    let mut out: Vec<PoseCorrespondence> = local
        .poses
        .iter()
        .map(|l| {
            let s = to_shared.transform_pose(l);
            let jitter = euler_xyz(
                rot_noise.sample(&mut rng),
                rot_noise.sample(&mut rng),
                rot_noise.sample(&mut rng),
            );
            let dc = Vector3::new(
                trans_noise.sample(&mut rng),
                trans_noise.sample(&mut rng),
                trans_noise.sample(&mut rng),
            );
            PoseCorrespondence {
                local: *l,
                shared: Pose::from_parts(jitter * s.rotation(), s.center() + dc),
            }
        })
        .collect();

    let n_out = (cfg.outlier_fraction * cfg.n_poses as f64).round() as usize;
    let mut idx: Vec<usize> = (0..cfg.n_poses).collect();
    idx.shuffle(&mut rng);
    let extent = 1.0 / truth.scale;
    let shared_center = to_shared.apply(&Vector3::zeros());
    for &k in idx.iter().take(n_out) {
        let c = shared_center
            + extent
                * Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
        out[k].shared = Pose::from_parts(random_rotation(&mut rng), c);
    }
    out
}

/// A random similarity with scale in [0.5, 2] and translation in [−1, 1]³.
pub fn random_similarity<R: Rng>(rng: &mut R) -> SimTransform {
    let scale = 2f64.powf(rng.random_range(-1.0..1.0));
    let rotation = random_rotation(rng);
    let translation = Vector3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    SimTransform::new(scale, rotation, translation)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rot_x, rot_z};
    use std::f64::consts::FRAC_PI_2;

    fn truth() -> SimTransform {
        SimTransform::new(2.0, rot_z(FRAC_PI_2), Vector3::new(1.0, 0.0, 0.0))
    }

    #[test]
    fn identity_frames() {
        let set = sample_hemisphere_poses(10, 1.0, 1);
        let corr: Vec<_> = set.poses.iter().map(|p| PoseCorrespondence { local: *p, shared: *p }).collect();
        let r = solve_frame_transform(&corr).unwrap();
        let e = registration_errors(&r.transform, &SimTransform::identity());
        assert!(e.r_err_deg < 1e-9 && e.t_err < 1e-12 && e.s_err < 1e-12);
    }

    #[test]
    fn noiseless_recovery() {
        let corr = synthetic_correspondences(&truth(), &SyntheticSfmConfig::default(), 2);
        let r = solve_frame_transform(&corr).unwrap();
        let e = registration_errors(&r.transform, &truth());
        assert!(e.r_err_deg < 1e-9 && e.t_err < 1e-9 && e.s_err < 1e-9, "{e:?}");
        assert!(r.success);
    }

    #[test]
    fn outliers_within_rubric() {
        let cfg = SyntheticSfmConfig {
            outlier_fraction: 0.2,
            rotation_noise_deg: 0.5,
            translation_noise: 0.01,
            ..Default::default()
        };
        let corr = synthetic_correspondences(&truth(), &cfg, 3);
        let r = solve_frame_transform(&corr).unwrap();
        assert!(registration_errors(&r.transform, &truth()).success());
    }

    #[test]
    fn degenerate_and_too_few() {
        let p = Pose::identity();
        let l = Pose::from_parts(Matrix3::identity(), Vector3::x());
        let c = [PoseCorrespondence { local: p, shared: p }, PoseCorrespondence { local: l, shared: p }];
        assert_eq!(solve_frame_transform(&c), Err(RegisterError::DegenerateBaseline));
        assert_eq!(solve_frame_transform(&c[..1]), Err(RegisterError::TooFew(1)));
        let nan = Pose::from_parts(Matrix3::identity(), Vector3::new(f64::NAN, 0.0, 0.0));
        let c = [c[0], PoseCorrespondence { local: nan, shared: p }];
        assert_eq!(solve_frame_transform(&c), Err(RegisterError::TooFew(1)));
    }

    #[test]
    fn relative_transform_laws() {
        let a = solve_frame_transform(&synthetic_correspondences(&truth(), &SyntheticSfmConfig::default(), 4)).unwrap();
        let tb = SimTransform::new(0.7, rot_x(0.4), Vector3::new(0.0, 0.3, -0.2));
        let b = solve_frame_transform(&synthetic_correspondences(&tb, &SyntheticSfmConfig::default(), 5)).unwrap();
        let id = relative_field_transform(&a, &a);
        assert!(registration_errors(&id, &SimTransform::identity()).t_err < 1e-10);
        let ba = relative_field_transform(&a, &b);
        let direct = truth().compose(&tb.inverse());
        let p = Vector3::new(0.3, -1.2, 0.8);
        assert!((ba.apply(&p) - direct.apply(&p)).norm() < 1e-10);
        let ab = relative_field_transform(&b, &a);
        assert!((ab.apply(&ba.apply(&p)) - p).norm() < 1e-10);
    }

    #[test]
    fn error_construction() {
        let t = truth();
        assert_eq!(registration_errors(&t, &t), RegistrationErrors { r_err_deg: 0.0, t_err: 0.0, s_err: 0.0 });
        let scaled = SimTransform::new(2.1, t.rotation, t.translation);
        assert!((registration_errors(&scaled, &t).s_err - 0.05).abs() < 1e-12);
        let est = SimTransform::new(
            2.0 * 1.02,
            crate::geometry::axis_angle(&Vector3::new(1.0, 2.0, 3.0).normalize(), 3f64.to_radians()) * t.rotation,
            t.translation + Vector3::new(0.03, 0.0, 0.04),
        );
        let e = registration_errors(&est, &t);
        assert!((e.r_err_deg - 3.0).abs() < 1e-9);
        assert!((e.t_err - 0.05).abs() < 1e-12);
        assert!((e.s_err - 0.02).abs() < 1e-12);
    }

    #[test]
    fn quality_filter_bounds() {
        let renders: Vec<(Pose, f64)> = (0..4).map(|k| (Pose::identity(), k as f64 / 4.0)).collect();
        assert_eq!(filter_poses_by_quality(&renders, 0.0).unwrap().len(), 4);
        assert_eq!(filter_poses_by_quality(&renders, 1.0 + 1e-9), Err(RegisterError::TooFewPoses { kept: 0 }));
        assert_eq!(filter_poses_by_quality(&renders, 0.5).unwrap().len(), 2);
    }

    #[test]
    fn equivariance_under_local_rigid_motion() {
        let corr = synthetic_correspondences(&truth(), &SyntheticSfmConfig::default(), 6);
        let g = SimTransform::new(1.0, rot_x(0.7) * rot_z(-0.2), Vector3::new(0.5, 0.1, -0.3));
        let moved: Vec<_> = corr
            .iter()
            .map(|c| PoseCorrespondence { local: g.transform_pose(&c.local), shared: c.shared })
            .collect();
        let a = solve_frame_transform(&corr).unwrap().transform;
        let b = solve_frame_transform(&moved).unwrap().transform;
        let e = registration_errors(&b, &g.compose(&a));
        assert!(e.r_err_deg < 1e-9 && e.t_err < 1e-9 && e.s_err < 1e-9);
    }
}
