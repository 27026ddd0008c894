//! PSNR, SSIM and the depth-error suite on small synthetic images.

use fieldfuse::harness::metrics::{depth_metrics, image_metrics};
use fieldfuse::{Rgb, RgbImage, ScalarImage};

fn main() {
    let (w, h) = (32, 32);
    let a = RgbImage::from_pixels(
        w,
        h,
        (0..w * h)
            .map(|k| {
                let (i, j) = ((k % w) as f64, (k / w) as f64);
                Rgb::new(i / w as f64, j / h as f64, 0.5)
            })
            .collect(),
    );
    let b = a.map(|p| (p * 0.9).add_scalar(0.03));
    println!("{:?}", image_metrics(&a, &b).unwrap());

    let gt = ScalarImage::from_pixels(w, h, (0..w * h).map(|k| 1.0 + (k % 7) as f64).collect());
    let pred = gt.map(|d| 2.0 * d);
    let mask = vec![true; w * h];
    println!("raw     {:?}", depth_metrics(&pred, &gt, &mask, false).unwrap());
    println!("scaled  {:?}", depth_metrics(&pred, &gt, &mask, true).unwrap());
}
