//! Synthetic scenes and camera rigs used by the examples, experiments and
//! acceptance checks.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::sample_hemisphere_poses;
use crate::blend::RegisteredField;
use crate::camera::CameraModel;
use crate::field::{ColorSpec, Field, Primitive};
use crate::geometry::{rot_x, rot_y, rot_z, Pose, RigidTransform, SimTransform};
use crate::image::{ImageGeometry, Rgb};

pub fn palette(k: usize) -> Rgb {
    const COLORS: [[f64; 3]; 8] = [
        [0.90, 0.25, 0.20],
        [0.20, 0.60, 0.90],
        [0.95, 0.80, 0.20],
        [0.30, 0.80, 0.35],
        [0.70, 0.35, 0.85],
        [0.95, 0.55, 0.15],
        [0.15, 0.75, 0.70],
        [0.85, 0.85, 0.85],
    ];
    let c = COLORS[k % COLORS.len()];
    Rgb::new(c[0], c[1], c[2])
}

/// A small tabletop: a ground slab, a sphere, a box and a soft blob.
pub fn demo_scene() -> Field {
    Field::new(
        vec![
            Primitive::cuboid(
                RigidTransform::from_translation(Vector3::new(0.0, 0.0, -0.55)),
                Vector3::new(1.0, 1.0, 0.05),
                30.0,
                palette(7),
            )
            .with_color(ColorSpec::Gradient {
                origin: Vector3::new(-1.0, 0.0, 0.0),
                direction: Vector3::new(0.5, 0.0, 0.0),
                low: Rgb::new(0.3, 0.3, 0.35),
                high: Rgb::new(0.8, 0.8, 0.75),
            }),
            Primitive::sphere(Vector3::new(-0.3, 0.1, -0.2), 0.3, 40.0, palette(0)),
            Primitive::cuboid(
                RigidTransform::new(rot_z(0.5), Vector3::new(0.35, -0.2, -0.3)),
                Vector3::new(0.15, 0.2, 0.2),
                40.0,
                palette(1),
            ),
            Primitive::gaussian(Vector3::new(0.1, 0.4, 0.0), 0.15, 60.0, palette(2)),
        ],
        Rgb::new(0.05, 0.05, 0.08),
    )
}

/// `n` random primitives inside the unit cube.
pub fn random_scene(n: usize, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        Vector3::new(
            rng.random_range(-0.7..0.7),
            rng.random_range(-0.7..0.7),
            rng.random_range(-0.7..0.7),
        )
    };
    let primitives = (0..n)
        .map(|k| {
            let center = point(&mut rng);
            let sigma = rng.random_range(10.0..60.0);
            match rng.random_range(0..3) {
                0 => Primitive::sphere(center, rng.random_range(0.08..0.3), sigma, palette(k)),
                1 => Primitive::cuboid(
                    RigidTransform::new(rot_z(rng.random_range(0.0..std::f64::consts::PI)), center),
                    Vector3::new(
                        rng.random_range(0.05..0.25),
                        rng.random_range(0.05..0.25),
                        rng.random_range(0.05..0.25),
                    ),
                    sigma,
                    palette(k),
                ),
                _ => Primitive::gaussian(center, rng.random_range(0.05..0.2), sigma, palette(k)),
            }
        })
        .collect();
    Field::new(primitives, Rgb::new(0.05, 0.05, 0.08))
}

/// Opaque unit sphere at the origin.
pub fn opaque_sphere_scene() -> Field {
    Field::new(
        vec![Primitive::sphere(Vector3::zeros(), 1.0, 50.0, palette(1))],
        Rgb::zeros(),
    )
}

/// Narrow-field pinhole whose frustum the unit sphere fills from 3 units away.
pub fn narrow_camera(geom: ImageGeometry) -> CameraModel {
    let (cx, cy) = geom.center();
    let f = 2.0 * geom.width.max(geom.height) as f64;
    CameraModel::pinhole(f, f, cx, cy)
}

/// Exterior view of [`opaque_sphere_scene`]: 2 units from the surface.
pub fn exterior_pose() -> Pose {
    Pose::look_at(&Vector3::new(0.0, -3.0, 0.0), &Vector3::zeros(), &Vector3::z())
        .expect("eye differs from target")
}

/// Camera at the center of [`opaque_sphere_scene`].
pub fn interior_pose() -> Pose {
    Pose::look_at(&Vector3::zeros(), &Vector3::new(0.0, 1.0, 0.0), &Vector3::z())
        .expect("eye differs from target")
}

pub fn wide_camera(geom: ImageGeometry) -> CameraModel {
    let (cx, cy) = geom.center();
    let f = 0.8 * geom.width as f64;
    CameraModel::pinhole(f, f, cx, cy)
}

/// Two fields covering one scene, each faithful on its own side of the
/// x = 0 plane and color-inverted on the other side.
#[derive(Debug, Clone)]
pub struct TwoFieldScene {
    /// Ground truth in the global frame.
    pub truth: Field,
    pub fields: Vec<RegisteredField>,
    /// Test views on the x = 0 midline plane, equidistant to both centers.
    pub views: Vec<Pose>,
}

fn two_field_truth() -> Field {
    let mut primitives = Vec::new();
    let layout = [
        (Vector3::new(0.6, 0.2, 0.1), 0),
        (Vector3::new(1.2, -0.4, 0.3), 1),
        (Vector3::new(1.5, 0.5, -0.3), 2),
        (Vector3::new(0.8, -0.3, -0.5), 3),
        (Vector3::new(-0.6, -0.2, 0.2), 4),
        (Vector3::new(-1.1, 0.4, -0.2), 5),
        (Vector3::new(-1.5, -0.5, 0.4), 6),
        (Vector3::new(-0.8, 0.3, -0.5), 0),
    ];
    for (k, (c, color)) in layout.iter().enumerate() {
        if k % 2 == 0 {
            primitives.push(Primitive::gaussian(*c, 0.16, 40.0, palette(*color)));
        } else {
            primitives.push(Primitive::cuboid(
                RigidTransform::new(rot_z(0.3 * k as f64), *c),
                Vector3::new(0.14, 0.18, 0.16),
                30.0,
                palette(*color),
            ));
        }
    }
    for side in [-1.0, 1.0] {
        primitives.push(
            Primitive::cuboid(
                RigidTransform::from_translation(Vector3::new(side * 1.05, 0.0, -0.85)),
                Vector3::new(0.75, 1.0, 0.05),
                30.0,
                palette(7),
            )
            .with_color(ColorSpec::Gradient {
                origin: Vector3::new(0.0, -1.0, 0.0),
                direction: Vector3::new(0.0, 0.5, 0.0),
                low: Rgb::new(0.25, 0.2, 0.2),
                high: Rgb::new(0.7, 0.75, 0.8),
            }),
        );
    }
    Field::new(primitives, Rgb::new(0.05, 0.05, 0.08))
}

fn invert(color: &ColorSpec) -> ColorSpec {
    let inv = |c: &Rgb| Rgb::repeat(1.0) - c;
    match color {
        ColorSpec::Constant(c) => ColorSpec::Constant(inv(c)),
        ColorSpec::Gradient {
            origin,
            direction,
            low,
            high,
        } => ColorSpec::Gradient {
            origin: *origin,
            direction: *direction,
            low: inv(low),
            high: inv(high),
        },
    }
}

fn primitive_x(p: &Primitive) -> f64 {
    match &p.shape {
        crate::field::Shape::Sphere { center, .. } | crate::field::Shape::Gaussian { center, .. } => {
            center.x
        }
        crate::field::Shape::Box { pose, .. } => pose.translation.x,
    }
}

/// Truth with the colors of every primitive on the wrong side inverted.
fn degraded(truth: &Field, keep_negative_x: bool) -> Field {
    let mut f = truth.clone();
    for p in f.primitives.iter_mut() {
        let faithful = (primitive_x(p) < 0.0) == keep_negative_x;
        if !faithful {
            p.color = invert(&p.color);
        }
    }
    f
}

pub fn two_field_scene() -> TwoFieldScene {
    let truth = two_field_truth();
    let to_a = SimTransform::new(1.6, rot_z(0.4) * rot_x(0.2), Vector3::new(-1.0, 0.0, 0.0));
    let to_b = SimTransform::new(0.7, rot_y(-0.3), Vector3::new(1.0, 0.0, 0.0));
    let fields = vec![
        RegisteredField::new(degraded(&truth, true).transformed(&to_a.inverse()), to_a),
        RegisteredField::new(degraded(&truth, false).transformed(&to_b.inverse()), to_b),
    ];
    let look = |eye: Vector3<f64>| {
        Pose::look_at(&eye, &Vector3::new(0.0, 0.0, -0.2), &Vector3::z()).expect("eye differs from target")
    };
    let views = vec![
        look(Vector3::new(0.0, -3.4, 1.0)),
        look(Vector3::new(0.0, 3.4, 1.2)),
        look(Vector3::new(0.0, -2.2, 2.6)),
    ];
    TwoFieldScene {
        truth,
        fields,
        views,
    }
}

/// Central object with small opaque occluders wrapped around every
/// `stride`-th hemisphere camera, which then sits inside geometry.
pub struct FilterScene {
    pub field: Field,
    pub poses: Vec<Pose>,
    pub inside: Vec<bool>,
}

const OCCLUDER_RADIUS: f64 = 0.15;

pub fn filter_scene(n_poses: usize, stride: usize, seed: u64) -> FilterScene {
    let set = sample_hemisphere_poses(n_poses, 1.0, seed);
    let mut primitives = vec![Primitive::sphere(Vector3::zeros(), 0.5, 50.0, palette(0))];
    let occluders: Vec<Vector3<f64>> = set
        .poses
        .iter()
        .enumerate()
        .filter(|(k, _)| stride > 0 && k % stride == 0)
        .map(|(_, p)| p.center())
        .collect();
    for c in &occluders {
        primitives.push(Primitive::sphere(*c, OCCLUDER_RADIUS, 80.0, palette(3)));
    }
    // a neighbouring camera may also fall inside an occluder
    let inside = set
        .poses
        .iter()
        .map(|p| occluders.iter().any(|c| (p.center() - c).norm() < OCCLUDER_RADIUS))
        .collect();
    FilterScene {
        field: Field::new(primitives, Rgb::new(0.05, 0.05, 0.08)),
        poses: set.poses,
        inside,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_field_centers_and_views() {
        let s = two_field_scene();
        assert!((s.fields[0].center() - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((s.fields[1].center() - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        for v in &s.views {
            assert_eq!(v.center().x, 0.0);
        }
        s.truth.validate().unwrap();
        for f in &s.fields {
            f.field.validate().unwrap();
        }
    }

    #[test]
    fn random_scene_is_seeded() {
        assert_eq!(random_scene(5, 3), random_scene(5, 3));
        assert_ne!(random_scene(5, 3), random_scene(5, 4));
        random_scene(20, 1).validate().unwrap();
    }
}
