//! Hemisphere poses, canonical jittering and randomization, and a virtual
//! view splatted from a lifted point cloud.

use fieldfuse::augment::{
    canonical_jitter, canonical_randomize, cloud_from_view, make_virtual_camera,
    project_cloud_to_view, sample_hemisphere_poses, JitterConfig, PointCloud,
};
use fieldfuse::field::{render_image, RenderSettings};
use fieldfuse::geometry::rotation_geodesic_deg;
use fieldfuse::harness::scenes::{demo_scene, wide_camera};
use fieldfuse::ImageGeometry;

fn main() {
    let set = sample_hemisphere_poses(6, 2.5, 11);
    let cfg = JitterConfig {
        seed: 3,
        ..Default::default()
    };
    let jittered = canonical_jitter(&set, &cfg);
    let randomized = canonical_randomize(&set, 5);
    println!("canonical pose after randomization: {:?}", randomized.canonical);
    for k in 1..set.len() {
        let d0 = (set.poses[0].center() - set.poses[k].center()).norm();
        let d1 = (jittered.poses[0].center() - jittered.poses[k].center()).norm();
        let a0 = rotation_geodesic_deg(&set.poses[0].rotation(), &set.poses[k].rotation());
        let a1 = rotation_geodesic_deg(&jittered.poses[0].rotation(), &jittered.poses[k].rotation());
        println!("pair (0,{k}): distance {d0:.6} -> {d1:.6}, angle {a0:.4} -> {a1:.4} deg");
    }

    let field = demo_scene();
    let geom = ImageGeometry::new(48, 48);
    let model = wide_camera(geom);
    let mut cloud = PointCloud::default();
    for pose in &set.poses[..2] {
        let r = render_image(&field, &model, pose, geom, &RenderSettings::default());
        cloud.extend(&cloud_from_view(&r.color, &r.depth, &model, pose));
    }
    let view = make_virtual_camera(&set.poses[0], &cloud.centroid(), &cfg).unwrap();
    let sparse = project_cloud_to_view(&cloud, &view, &model, geom);
    println!("{} points splat into {} of {} virtual pixels", cloud.points.len(), sparse.valid_count(), geom.pixel_count());
}
