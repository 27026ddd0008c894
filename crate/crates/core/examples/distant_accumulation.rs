//! Distant accumulation separates a camera buried inside geometry from one
//! looking at it from outside.

use fieldfuse::field::{render_image, RenderSettings};
use fieldfuse::harness::scenes::{exterior_pose, interior_pose, narrow_camera, opaque_sphere_scene};
use fieldfuse::ImageGeometry;

fn main() {
    let scene = opaque_sphere_scene();
    let geom = ImageGeometry::new(32, 32);
    let model = narrow_camera(geom);
    for cutoff in [0.1, 0.3, 1.0] {
        let settings = RenderSettings {
            qd_cutoff: cutoff,
            ..Default::default()
        };
        let inside = render_image(&scene, &model, &interior_pose(), geom, &settings).mean_qd;
        let outside = render_image(&scene, &model, &exterior_pose(), geom, &settings).mean_qd;
        println!("d = {cutoff:.1}: interior {inside:.4}  exterior {outside:.4}");
    }
}
