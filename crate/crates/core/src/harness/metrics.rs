//! Image and depth quality metrics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{Image, RgbImage, ScalarImage};

/// Reported in place of +∞ when two images are identical.
pub const PSNR_SENTINEL: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("image sizes differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("image is smaller than the {0}x{0} SSIM window")]
    TooSmall(usize),
    #[error("depth mask selects no valid pixel")]
    EmptyMask,
}

fn check_same<P: Clone, Q: Clone>(a: &Image<P>, b: &Image<Q>) -> Result<(), MetricError> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(MetricError::DimensionMismatch(a.width, a.height, b.width, b.height))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub psnr: f64,
    pub ssim: f64,
    /// Needs a pretrained network; always `null`.
    pub lpips: Option<f64>,
}

pub fn image_metrics(a: &RgbImage, b: &RgbImage) -> Result<ImageMetrics, MetricError> {
    Ok(ImageMetrics {
        psnr: psnr(a, b)?,
        ssim: ssim(a, b)?,
        lpips: None,
    })
}

/// `10 log10(1 / MSE)` over all channels, with peak value 1.
pub fn psnr(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricError> {
    check_same(a, b)?;
    let n = (a.pixels.len() * 3) as f64;
    let mse = a
        .pixels
        .iter()
        .zip(&b.pixels)
        .map(|(x, y)| (x - y).norm_squared())
        .sum::<f64>()
        / n;
    if mse == 0.0 {
        return Ok(PSNR_SENTINEL);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

fn gaussian_kernel() -> Vec<f64> {
    let half = (SSIM_WINDOW / 2) as f64;
    let raw: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let x = i as f64 - half;
            (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Separable "valid" filtering: output is (w − 10) × (h − 10).
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let ow = w + 1 - n;
    let oh = h + 1 - n;
    let mut rows = vec![0.0; ow * h];
    for j in 0..h {
        for i in 0..ow {
            rows[j * ow + i] = (0..n).map(|t| k[t] * img[j * w + i + t]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for j in 0..oh {
        for i in 0..ow {
            out[j * ow + i] = (0..n).map(|t| k[t] * rows[(j + t) * ow + i]).sum();
        }
    }
    out
}

/// Mean local SSIM of single-channel images with values in [0, 1].
pub fn ssim_channel(a: &ScalarImage, b: &ScalarImage) -> Result<f64, MetricError> {
    check_same(a, b)?;
    let (w, h) = (a.width, a.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(MetricError::TooSmall(SSIM_WINDOW));
    }
    let k = gaussian_kernel();
    let x = &a.pixels;
    let y = &b.pixels;
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mu_x = filter_valid(x, w, h, &k);
    let mu_y = filter_valid(y, w, h, &k);
    let e_xx = filter_valid(&xx, w, h, &k);
    let e_yy = filter_valid(&yy, w, h, &k);
    let e_xy = filter_valid(&xy, w, h, &k);
    let c1 = (SSIM_K1 * 1.0f64).powi(2);
    let c2 = (SSIM_K2 * 1.0f64).powi(2);
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

/// Channel mean of [`ssim_channel`].
pub fn ssim(a: &RgbImage, b: &RgbImage) -> Result<f64, MetricError> {
    check_same(a, b)?;
    let mut total = 0.0;
    for c in 0..3 {
        total += ssim_channel(&a.channel(c), &b.channel(c))?;
    }
    Ok(total / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMetrics {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_3: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Standard depth errors over pixels where `mask` holds and both depths are
/// positive. With `median_scale`, predictions are first multiplied by
/// `median(gt) / median(pred)`.
pub fn depth_metrics(
    pred: &ScalarImage,
    gt: &ScalarImage,
    mask: &[bool],
    median_scale: bool,
) -> Result<DepthMetrics, MetricError> {
    check_same(pred, gt)?;
    assert_eq!(mask.len(), gt.pixels.len(), "mask size mismatch");
    let pairs: Vec<(f64, f64)> = pred
        .pixels
        .iter()
        .zip(&gt.pixels)
        .zip(mask)
        .filter(|((p, g), m)| **m && **p > 0.0 && **g > 0.0)
        .map(|((p, g), _)| (*p, *g))
        .collect();
    if pairs.is_empty() {
        return Err(MetricError::EmptyMask);
    }
    let scale = if median_scale {
        median(pairs.iter().map(|p| p.1).collect()) / median(pairs.iter().map(|p| p.0).collect())
    } else {
        1.0
    };
    let n = pairs.len() as f64;
    let mut m = DepthMetrics {
        abs_rel: 0.0,
        sq_rel: 0.0,
        rmse: 0.0,
        delta_1: 0.0,
        delta_2: 0.0,
        delta_3: 0.0,
    };
    for (p, g) in pairs {
        let p = p * scale;
        let diff = p - g;
        m.abs_rel += diff.abs() / g;
        m.sq_rel += diff * diff / g;
        m.rmse += diff * diff;
        let ratio = (p / g).max(g / p);
        m.delta_1 += (ratio < 1.25) as u8 as f64;
        m.delta_2 += (ratio < 1.25f64.powi(2)) as u8 as f64;
        m.delta_3 += (ratio < 1.25f64.powi(3)) as u8 as f64;
    }
    m.abs_rel /= n;
    m.sq_rel /= n;
    m.rmse = (m.rmse / n).sqrt();
    m.delta_1 /= n;
    m.delta_2 /= n;
    m.delta_3 /= n;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::Rgb;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> RgbImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        RgbImage::from_pixels(w, h, (0..w * h).map(|_| Rgb::new(rng.random(), rng.random(), rng.random())).collect())
    }

    /// Direct double loop over every window position.
    fn ssim_reference(a: &ScalarImage, b: &ScalarImage) -> f64 {
        let half = 5.0;
        let mut k = [[0.0; 11]; 11];
        let mut total_w = 0.0;
        for (i, row) in k.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let (x, y) = (i as f64 - half, j as f64 - half);
                *v = (-(x * x + y * y) / (2.0 * 1.5 * 1.5)).exp();
                total_w += *v;
            }
        }
        let (c1, c2) = (0.0001, 0.0009);
        let mut sum = 0.0;
        let mut count = 0;
        for j0 in 0..=(a.height - 11) {
            for i0 in 0..=(a.width - 11) {
                let (mut mx, mut my, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for dj in 0..11 {
                    for di in 0..11 {
                        let w = k[dj][di] / total_w;
                        let x = *a.get(i0 + di, j0 + dj);
                        let y = *b.get(i0 + di, j0 + dj);
                        mx += w * x;
                        my += w * y;
                        sxx += w * x * x;
                        syy += w * y * y;
                        sxy += w * x * y;
                    }
                }
                let (vx, vy, cov) = (sxx - mx * mx, syy - my * my, sxy - mx * my);
                sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn psnr_examples() {
        let a = random_image(8, 8, 1);
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_SENTINEL);
        let c0 = RgbImage::filled(4, 4, Rgb::repeat(0.5));
        let c1 = RgbImage::filled(4, 4, Rgb::repeat(0.6));
        assert!((psnr(&c0, &c1).unwrap() - 20.0).abs() < 1e-9);
        assert!(psnr(&c0, &random_image(5, 4, 1)).is_err());
    }

    #[test]
    fn psnr_matches_reference() {
        let (a, b) = (random_image(17, 9, 2), random_image(17, 9, 3));
        let flat_a: Vec<f64> = a.pixels.iter().flat_map(|p| p.iter().copied().collect::<Vec<_>>()).collect();
        let flat_b: Vec<f64> = b.pixels.iter().flat_map(|p| p.iter().copied().collect::<Vec<_>>()).collect();
        let mse = flat_a.iter().zip(&flat_b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / flat_a.len() as f64;
        assert!((psnr(&a, &b).unwrap() - (-10.0 * mse.log10())).abs() < 1e-9);
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn ssim_identity_and_anticorrelation() {
        let a = random_image(16, 16, 4);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let binary = ScalarImage::from_pixels(16, 16, (0..256).map(|k| ((k * 7 + k / 16) % 2) as f64).collect());
        let inv = binary.map(|v| 1.0 - v);
        assert!(ssim_channel(&binary, &inv).unwrap() < 0.0);
        assert!(ssim(&RgbImage::filled(8, 8, Rgb::zeros()), &RgbImage::filled(8, 8, Rgb::zeros())).is_err());
    }

    #[test]
    fn ssim_matches_reference() {
        let (a, b) = (random_image(23, 19, 5), random_image(23, 19, 6));
        for c in 0..3 {
            let (x, y) = (a.channel(c), b.channel(c));
            assert!((ssim_channel(&x, &y).unwrap() - ssim_reference(&x, &y)).abs() < 1e-6);
        }
        assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn depth_examples() {
        let gt = ScalarImage::from_pixels(4, 1, vec![1.0, 2.0, 3.0, 4.0]);
        let mask = vec![true; 4];
        let same = depth_metrics(&gt, &gt, &mask, false).unwrap();
        assert_eq!((same.abs_rel, same.rmse, same.delta_1, same.delta_3), (0.0, 0.0, 1.0, 1.0));
        let twice = gt.map(|v| 2.0 * v);
        let scaled = depth_metrics(&twice, &gt, &mask, true).unwrap();
        assert!(scaled.abs_rel < 1e-15 && scaled.delta_1 == 1.0);
        let off = gt.map(|v| 1.3 * v);
        let m = depth_metrics(&off, &gt, &mask, false).unwrap();
        assert_eq!((m.delta_1, m.delta_2, m.delta_3), (0.0, 1.0, 1.0));
        assert!((m.abs_rel - 0.3).abs() < 1e-12);
        assert_eq!(depth_metrics(&gt, &gt, &[false; 4], false), Err(MetricError::EmptyMask));
    }
}
