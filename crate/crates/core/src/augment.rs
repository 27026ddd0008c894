//! Geometric pose augmentations: hemispheric sampling, virtual cameras with
//! point-cloud reprojection, canonical jittering and canonical randomization.
//!
//! Every stochastic operation takes its own seed, so results never depend on
//! call order or thread scheduling.

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::geometry::{euler_xyz, GeometryError, Pose, RigidTransform};
use crate::image::{ImageGeometry, Rgb, RgbImage, ScalarImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseSet {
    pub poses: Vec<Pose>,
    pub canonical: usize,
}

impl PoseSet {
    pub fn new(poses: Vec<Pose>) -> Self {
        Self {
            poses,
            canonical: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterConfig {
    pub sigma_t: f64,
    /// Radians, per Euler angle.
    pub sigma_r: f64,
    pub sigma_v: f64,
    pub seed: u64,
}

impl Default for JitterConfig {
    fn default() -> Self {
        Self {
            sigma_t: 0.1,
            sigma_r: 0.05,
            sigma_v: 0.1,
            seed: 0,
        }
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vector<R: Rng>(sigma: f64, rng: &mut R) -> Vector3<f64> {
    let n = Normal::new(0.0, sigma.max(0.0)).expect("finite standard deviation");
    Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng))
}

/// Centers uniform on the upper hemisphere of `radius`, each camera looking
/// at the origin with world +z as up.
pub fn sample_hemisphere_poses(n: usize, radius: f64, seed: u64) -> PoseSet {
    sample_dome_poses(n, radius, 0.0, seed)
}

/// As [`sample_hemisphere_poses`], with a fraction `below` of the centers
/// drawn from the lower hemisphere instead.
pub fn sample_dome_poses(n: usize, radius: f64, below: f64, seed: u64) -> PoseSet {
    assert!(n >= 1, "need at least one pose");
    let mut rng = rng_for(seed);
    let poses = (0..n)
        .map(|_| {
            let lower = below > 0.0 && rng.random::<f64>() < below;
            let z: f64 = if lower {
                -rng.random::<f64>()
            } else {
                rng.random::<f64>()
            };
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let c = radius * Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
            Pose::look_at(&c, &Vector3::zeros(), &Vector3::z()).expect("radius is positive")
        })
        .collect();
    PoseSet::new(poses)
}

/// Center moved by `ε_v ~ N(0, σ_v)`, looking at the cloud center moved by
/// an independent draw of the same distribution.
pub fn make_virtual_camera(
    base: &Pose,
    cloud_center: &Vector3<f64>,
    cfg: &JitterConfig,
) -> Result<Pose, GeometryError> {
    let mut rng = rng_for(cfg.seed);
    let eps_v = gaussian_vector(cfg.sigma_v, &mut rng);
    let eps_c = gaussian_vector(cfg.sigma_v, &mut rng);
    Pose::look_at(&(base.center() + eps_v), &(cloud_center + eps_c), &Vector3::z())
}

/// The rigid transform `(euler_xyz(ε_r), ε_t)` drawn from `cfg.seed`.
pub fn draw_jitter(cfg: &JitterConfig) -> RigidTransform {
    let mut rng = rng_for(cfg.seed);
    let eps_t = gaussian_vector(cfg.sigma_t, &mut rng);
    let eps_r = gaussian_vector(cfg.sigma_r, &mut rng);
    RigidTransform::new(euler_xyz(eps_r.x, eps_r.y, eps_r.z), eps_t)
}

/// Every pose left-composed with one shared jitter transform.
pub fn canonical_jitter(set: &PoseSet, cfg: &JitterConfig) -> PoseSet {
    let jitter = draw_jitter(cfg);
    PoseSet {
        poses: set
            .poses
            .iter()
            .map(|p| Pose::new(jitter.compose(&p.world_from_camera)))
            .collect(),
        canonical: set.canonical,
    }
}

/// Re-expresses all poses in the frame of camera `o`, which lands on identity.
pub fn canonicalize(set: &PoseSet, o: usize) -> PoseSet {
    let to_canonical = set.poses[o].world_from_camera.inverse();
    let mut poses: Vec<Pose> = set
        .poses
        .iter()
        .map(|p| Pose::new(to_canonical.compose(&p.world_from_camera)))
        .collect();
    poses[o] = Pose::identity();
    PoseSet {
        poses,
        canonical: o,
    }
}

/// [`canonicalize`] at a uniformly drawn index.
pub fn canonical_randomize(set: &PoseSet, seed: u64) -> PoseSet {
    assert!(!set.is_empty(), "cannot canonicalize an empty set");
    let o = rng_for(seed).random_range(0..set.len());
    canonicalize(set, o)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub colors: Vec<Rgb>,
}

impl PointCloud {
    pub fn centroid(&self) -> Vector3<f64> {
        if self.points.is_empty() {
            return Vector3::zeros();
        }
        self.points.iter().sum::<Vector3<f64>>() / self.points.len() as f64
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
        self.colors.extend_from_slice(&other.colors);
    }
}

/// World-frame points of every pixel with positive range.
pub fn cloud_from_view(
    color: &RgbImage,
    range: &ScalarImage,
    model: &CameraModel,
    pose: &Pose,
) -> PointCloud {
    let mut cloud = PointCloud::default();
    for j in 0..range.height {
        for i in 0..range.width {
            let d = *range.get(i, j);
            if !(d > 0.0) {
                continue;
            }
            if let Ok(p) = model.unproject(&Vector2::new(i as f64, j as f64), d) {
                cloud.points.push(pose.to_world(&p));
                cloud.colors.push(*color.get(i, j));
            }
        }
    }
    cloud
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseView {
    pub color: RgbImage,
    /// Range to the nearest splatted point; 0 where invalid.
    pub depth: ScalarImage,
    pub valid: Vec<bool>,
}

impl SparseView {
    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Z-buffered nearest-pixel splat of a colored cloud into a view.
pub fn project_cloud_to_view(
    cloud: &PointCloud,
    view: &Pose,
    model: &CameraModel,
    geom: ImageGeometry,
) -> SparseView {
    let (w, h) = (geom.width, geom.height);
    let mut color = RgbImage::filled(w, h, Rgb::zeros());
    let mut depth = ScalarImage::filled(w, h, f64::INFINITY);
    for (p, c) in cloud.points.iter().zip(&cloud.colors) {
        let pc = view.to_camera(p);
        let Ok(px) = model.project(&pc) else {
            continue;
        };
        let Some((i, j)) = geom.pixel_at(px.x, px.y) else {
            continue;
        };
        let range = pc.norm();
        if range < *depth.get(i, j) {
            depth.set(i, j, range);
            color.set(i, j, *c);
        }
    }
    let valid: Vec<bool> = depth.pixels.iter().map(|d| d.is_finite()).collect();
    for d in depth.pixels.iter_mut() {
        if !d.is_finite() {
            *d = 0.0;
        }
    }
    SparseView {
        color,
        depth,
        valid,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rotation_geodesic_deg;

    #[test]
    fn hemisphere_constraints() {
        let set = sample_hemisphere_poses(500, 1.0, 9);
        for p in &set.poses {
            let c = p.center();
            assert!((c.norm() - 1.0).abs() < 1e-9);
            assert!(c.z >= 0.0);
            assert!((p.forward() - (-c).normalize()).norm() < 1e-9);
        }
    }

    #[test]
    fn hemisphere_centroid() {
        let set = sample_hemisphere_poses(10_000, 1.0, 10);
        let mean = set.poses.iter().map(|p| p.center()).sum::<Vector3<f64>>() / 10_000.0;
        assert!((mean - Vector3::new(0.0, 0.0, 0.5)).norm() < 0.02, "{mean}");
    }

    #[test]
    fn zero_noise_virtual_camera() {
        let base = Pose::from_parts(nalgebra::Matrix3::identity(), Vector3::new(0.0, -2.0, 0.5));
        let cfg = JitterConfig { sigma_v: 0.0, ..Default::default() };
        let v = make_virtual_camera(&base, &Vector3::zeros(), &cfg).unwrap();
        assert_eq!(v.center(), base.center());
        assert!((v.forward() - (-base.center()).normalize()).norm() < 1e-12);
        let degenerate = make_virtual_camera(&base, &base.center(), &cfg);
        assert_eq!(degenerate, Err(GeometryError::DegenerateLookAt));
    }

    #[test]
    fn virtual_camera_is_seeded() {
        let base = Pose::from_parts(nalgebra::Matrix3::identity(), Vector3::new(0.0, -2.0, 0.5));
        let cfg = JitterConfig { sigma_v: 0.2, seed: 77, ..Default::default() };
        assert_eq!(make_virtual_camera(&base, &Vector3::zeros(), &cfg), make_virtual_camera(&base, &Vector3::zeros(), &cfg));
    }

    #[test]
    fn virtual_offset_statistics() {
        let base = Pose::from_parts(nalgebra::Matrix3::identity(), Vector3::new(0.0, -2.0, 0.5));
        let n = 10_000;
        let sigma = 0.2;
        let mut sum_sq = 0.0;
        for seed in 0..n {
            let cfg = JitterConfig { sigma_v: sigma, seed, ..Default::default() };
            let v = make_virtual_camera(&base, &Vector3::zeros(), &cfg).unwrap();
            sum_sq += (v.center() - base.center()).norm_squared();
        }
        let std = (sum_sq / (3.0 * n as f64)).sqrt();
        assert!((std / sigma - 1.0).abs() < 0.03, "std {std}");
    }

    #[test]
    fn jitter_zero_is_identity_and_rigid() {
        let set = sample_hemisphere_poses(8, 1.0, 3);
        let zero = JitterConfig { sigma_t: 0.0, sigma_r: 0.0, ..Default::default() };
        assert_eq!(canonical_jitter(&set, &zero), set);

        let cfg = JitterConfig { sigma_t: 0.5, sigma_r: 0.3, seed: 4, ..Default::default() };
        let out = canonical_jitter(&set, &cfg);
        let j = draw_jitter(&cfg);
        for a in 0..set.len() {
            for b in 0..set.len() {
                let d0 = (set.poses[a].center() - set.poses[b].center()).norm();
                let d1 = (out.poses[a].center() - out.poses[b].center()).norm();
                assert!((d0 - d1).abs() < 1e-9);
                let before = set.poses[a].world_from_camera.compose(&set.poses[b].world_from_camera.inverse());
                let after = out.poses[a].world_from_camera.compose(&out.poses[b].world_from_camera.inverse());
                let conj = j.compose(&before).compose(&j.inverse());
                assert!((after.rotation - conj.rotation).amax() < 1e-12);
                assert!((after.translation - conj.translation).amax() < 1e-12);
                let ang0 = rotation_geodesic_deg(&nalgebra::Matrix3::identity(), &before.rotation);
                let ang1 = rotation_geodesic_deg(&nalgebra::Matrix3::identity(), &after.rotation);
                assert!((ang0 - ang1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn randomize_laws() {
        let set = sample_hemisphere_poses(6, 1.0, 5);
        let out = canonical_randomize(&set, 11);
        let o = out.canonical;
        assert_eq!(out.poses[o], Pose::identity());
        for a in 0..set.len() {
            for b in 0..set.len() {
                // extrinsics T = P⁻¹: T_a' T_b'⁻¹ = T_a T_b⁻¹
                let ext = |s: &PoseSet, i: usize| s.poses[i].world_from_camera.inverse();
                let before = ext(&set, a).compose(&ext(&set, b).inverse());
                let after = ext(&out, a).compose(&ext(&out, b).inverse());
                assert!((before.rotation - after.rotation).amax() < 1e-12);
                assert!((before.translation - after.translation).amax() < 1e-12);
            }
        }
        assert_eq!(canonicalize(&out, o), out);
    }

    #[test]
    fn z_buffer_keeps_nearest() {
        let model = CameraModel::pinhole(10.0, 10.0, 2.0, 2.0);
        let cloud = PointCloud {
            points: vec![Vector3::new(0.0, 0.0, 3.0), Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.0, 0.0, 2.0)],
            colors: vec![Rgb::new(1.0, 0.0, 0.0), Rgb::new(0.0, 1.0, 0.0), Rgb::new(0.0, 0.0, 1.0)],
        };
        let v = project_cloud_to_view(&cloud, &Pose::identity(), &model, ImageGeometry::new(5, 5));
        assert_eq!(*v.color.get(2, 2), Rgb::new(0.0, 1.0, 0.0));
        assert_eq!(*v.depth.get(2, 2), 1.0);
        assert_eq!(v.valid_count(), 1);
    }

    #[test]
    fn own_pixels_round_trip() {
        let model = CameraModel::ucm(30.0, 30.0, 15.5, 11.5, 0.6);
        let geom = ImageGeometry::new(32, 24);
        let pose = Pose::look_at(&Vector3::new(1.0, 2.0, 0.5), &Vector3::zeros(), &Vector3::z()).unwrap();
        let range = ScalarImage::from_pixels(32, 24, (0..32 * 24).map(|k| 1.0 + (k % 13) as f64 * 0.1).collect());
        let color = RgbImage::from_pixels(32, 24, (0..32 * 24).map(|k| Rgb::repeat((k % 7) as f64 / 7.0)).collect());
        let cloud = cloud_from_view(&color, &range, &model, &pose);
        let v = project_cloud_to_view(&cloud, &pose, &model, geom);
        assert_eq!(v.valid_count(), 32 * 24);
        assert!(v.depth.pixels.iter().zip(&range.pixels).all(|(a, b)| (a - b).abs() < 1e-9));
        assert_eq!(v.color, color);
    }
}
