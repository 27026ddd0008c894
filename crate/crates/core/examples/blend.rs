//! Blend two partially wrong fields with every method and compare against
//! the ground-truth render.

use fieldfuse::blend::{blend_image, render_registered, BlendConfig, BlendMethod};
use fieldfuse::field::{render_image, RenderSettings};
use fieldfuse::harness::metrics::psnr;
use fieldfuse::harness::scenes::{two_field_scene, wide_camera};
use fieldfuse::ImageGeometry;

fn main() {
    let scene = two_field_scene();
    let geom = ImageGeometry::new(64, 64);
    let model = wide_camera(geom);
    let render = RenderSettings {
        n_samples: 128,
        ..Default::default()
    };
    let view = scene.views[0];
    let truth = render_image(&scene.truth, &model, &view, geom, &render).color;
    for (k, f) in scene.fields.iter().enumerate() {
        let solo = render_registered(f, &model, &view, geom, &render);
        println!("field {k} alone: {:.2} dB", psnr(&solo, &truth).unwrap());
    }
    for method in BlendMethod::ALL {
        let cfg = BlendConfig {
            method,
            render,
            ..Default::default()
        };
        let out = blend_image(&scene.fields, &model, &view, geom, &cfg).unwrap();
        println!("{:>10}: {:.2} dB", method.name(), psnr(&out.color, &truth).unwrap());
    }
}
