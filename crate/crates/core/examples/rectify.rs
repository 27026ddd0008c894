//! Undistort a synthetic Double Sphere fisheye image into a pinhole view.

use fieldfuse::calib::{reference_geometry, reference_model};
use fieldfuse::camera::{rectify_map, remap};
use fieldfuse::field::{render_image, RenderSettings};
use fieldfuse::harness::io::write_png;
use fieldfuse::harness::scenes::demo_scene;
use fieldfuse::{CameraKind, CameraModel, Pose, Rgb};
use nalgebra::Vector3;

fn main() {
    let geom = reference_geometry();
    let fisheye = reference_model(CameraKind::DoubleSphere);
    let pose = Pose::look_at(&Vector3::new(0.0, -1.6, 0.6), &Vector3::new(0.0, 0.0, -0.2), &Vector3::z()).unwrap();
    let settings = RenderSettings {
        n_samples: 96,
        ..Default::default()
    };
    let distorted = render_image(&demo_scene(), &fisheye, &pose, geom, &settings).color;

    let (cx, cy) = geom.center();
    let pinhole = CameraModel::pinhole(120.0, 120.0, cx, cy);
    let map = rectify_map(&fisheye, &pinhole, geom).unwrap();
    let rectified = remap(&distorted, &map, Rgb::zeros());
    println!("{} of {} pixels mapped", map.valid_count(), geom.pixel_count());

    let out = std::env::temp_dir();
    write_png(&out.join("fisheye.png"), &distorted).unwrap();
    write_png(&out.join("rectified.png"), &rectified).unwrap();
    println!("wrote fisheye.png and rectified.png to {}", out.display());
}
