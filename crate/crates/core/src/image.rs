//! Minimal row-major image buffers shared by the renderer, blender and metrics.

use nalgebra::Vector3;

/// RGB in [0, 1].
pub type Rgb = Vector3<f64>;

/// Image dimensions in pixels. Pixel `(i, j)` sits at continuous coordinate
/// `(u, v) = (i, j)`: the origin is the center of the top-left pixel, +u runs
/// right and +v runs down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ImageGeometry {
    pub width: usize,
    pub height: usize,
}

impl ImageGeometry {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width >= 1 && height >= 1, "image must be at least 1x1");
        Self { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    /// Geometric center in pixel coordinates.
    pub fn center(&self) -> (f64, f64) {
        (
            (self.width as f64 - 1.0) / 2.0,
            (self.height as f64 - 1.0) / 2.0,
        )
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= -0.5 && v >= -0.5 && u < self.width as f64 - 0.5 && v < self.height as f64 - 0.5
    }

    /// Nearest pixel index for a continuous coordinate, if inside the image.
    pub fn pixel_at(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u.is_finite() && v.is_finite()) || !self.contains(u, v) {
            return None;
        }
        let i = u.round() as i64;
        let j = v.round() as i64;
        if i < 0 || j < 0 || i >= self.width as i64 || j >= self.height as i64 {
            return None;
        }
        Some((i as usize, j as usize))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image<P> {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<P>,
}

pub type RgbImage = Image<Rgb>;
pub type ScalarImage = Image<f64>;

impl<P: Clone> Image<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<P>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel count mismatch");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn geometry(&self) -> ImageGeometry {
        ImageGeometry::new(self.width, self.height)
    }

    pub fn get(&self, i: usize, j: usize) -> &P {
        &self.pixels[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: P) {
        let w = self.width;
        self.pixels[j * w + i] = value;
    }

    pub fn same_size<Q>(&self, other: &Image<Q>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<Q, F: Fn(&P) -> Q>(&self, f: F) -> Image<Q> {
        Image {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(f).collect(),
        }
    }
}

impl RgbImage {
    /// One color channel as a scalar image.
    pub fn channel(&self, c: usize) -> ScalarImage {
        self.map(|p| p[c])
    }

    /// Per-pixel mean of equally sized images.
    pub fn mean_of(images: &[&RgbImage]) -> RgbImage {
        assert!(!images.is_empty());
        let n = images.len() as f64;
        let mut out = images[0].map(|_| Rgb::zeros());
        for img in images {
            assert!(img.same_size(&out));
            for (o, p) in out.pixels.iter_mut().zip(img.pixels.iter()) {
                *o += p;
            }
        }
        for o in out.pixels.iter_mut() {
            *o /= n;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &RgbImage) -> f64 {
        assert!(self.same_size(other));
        self.pixels
            .iter()
            .zip(other.pixels.iter())
            .map(|(a, b)| (a - b).amax())
            .fold(0.0, f64::max)
    }
}

impl ScalarImage {
    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}
