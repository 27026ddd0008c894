//! Render the demo scene and write color, depth and accumulation.

use fieldfuse::field::{render_image, RenderSettings};
use fieldfuse::harness::io::{write_pfm, write_png};
use fieldfuse::harness::scenes::{demo_scene, wide_camera};
use fieldfuse::{ImageGeometry, Pose};
use nalgebra::Vector3;

fn main() {
    let geom = ImageGeometry::new(160, 120);
    let model = wide_camera(geom);
    let pose = Pose::look_at(&Vector3::new(0.5, -2.4, 1.2), &Vector3::new(0.0, 0.0, -0.2), &Vector3::z()).unwrap();
    let r = render_image(&demo_scene(), &model, &pose, geom, &RenderSettings::default());
    let out = std::env::temp_dir();
    write_png(&out.join("render.png"), &r.color).unwrap();
    write_pfm(&out.join("render_depth.pfm"), &r.depth).unwrap();
    write_pfm(&out.join("render_accumulation.pfm"), &r.accumulation).unwrap();
    println!("mean accumulation {:.3}, written to {}", r.accumulation.mean(), out.display());
}
