//! Project and unproject one point with every camera model, and print the
//! analytic Jacobians.

use fieldfuse::calib::reference_model;
use fieldfuse::{CameraKind, CameraModel};
use nalgebra::{Vector2, Vector3};

fn main() {
    let point = Vector3::new(0.4, -0.3, 1.5);
    for kind in CameraKind::ALL {
        let model = match kind {
            CameraKind::Pinhole => CameraModel::pinhole(235.4, 245.1, 186.5, 132.6),
            k => reference_model(k),
        };
        let (pixel, jac) = model
            .project_with_jacobians(&point)
            .expect("point is in front of the camera");
        let back = model.unproject(&pixel, point.norm()).unwrap();
        println!("{:>8}  params {:?}", kind.name(), model.params());
        println!("          pixel ({:.4}, {:.4})  round-trip error {:.2e}", pixel.x, pixel.y, (back - point).norm());
        println!("          d(pixel)/d(point) = {:.3}", jac.point);
    }

    // wide fisheye pixel near the image corner
    let ds = reference_model(CameraKind::DoubleSphere);
    let bearing = ds.bearing(&Vector2::new(5.0, 5.0)).unwrap();
    println!("DS corner bearing {:.4?} ({:.1} deg off axis)", bearing, bearing.z.acos().to_degrees());
}
