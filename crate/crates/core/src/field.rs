//! Analytic volumetric scenes and a midpoint-quadrature volume renderer.
//!
//! A [`Field`] is a sum of density primitives, each carrying a radiance
//! model. Rendering follows the usual emission-absorption quadrature:
//! `p_k = T_k (1 − exp(−σ_k δ_k))`, `T_k = exp(−Σ_{j<k} σ_j δ_j)`.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{generate_rays, CameraModel, Ray, RayConvention};
use crate::geometry::{Pose, RigidTransform, SimTransform};
use crate::image::{ImageGeometry, Rgb, RgbImage, ScalarImage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", content = "params", rename_all = "lowercase")]
pub enum Shape {
    Sphere {
        center: Vector3<f64>,
        radius: f64,
    },
    /// Oriented box; `pose` maps box coordinates to scene coordinates.
    Box {
        pose: RigidTransform,
        half_extents: Vector3<f64>,
    },
    Gaussian {
        center: Vector3<f64>,
        std: f64,
    },
}

impl Shape {
    /// Unit-peak density profile.
    fn profile(&self, x: &Vector3<f64>) -> f64 {
        match self {
            Shape::Sphere { center, radius } => {
                if (x - center).norm_squared() <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Box { pose, half_extents } => {
                let local = pose.inverse().apply(x);
                let inside = (0..3).all(|i| local[i].abs() <= half_extents[i]);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            Shape::Gaussian { center, std } => {
                (-(x - center).norm_squared() / (2.0 * std * std)).exp()
            }
        }
    }

    fn transformed(&self, t: &SimTransform) -> Shape {
        match self {
            Shape::Sphere { center, radius } => Shape::Sphere {
                center: t.apply(center),
                radius: t.scale * radius,
            },
            Shape::Box { pose, half_extents } => Shape::Box {
                pose: RigidTransform::new(
                    t.rotation * pose.rotation,
                    t.apply(&pose.translation),
                ),
                half_extents: t.scale * half_extents,
            },
            Shape::Gaussian { center, std } => Shape::Gaussian {
                center: t.apply(center),
                std: t.scale * std,
            },
        }
    }

    fn is_valid(&self) -> bool {
        match self {
            Shape::Sphere { radius, .. } => *radius > 0.0,
            Shape::Box { half_extents, .. } => half_extents.iter().all(|h| *h > 0.0),
            Shape::Gaussian { std, .. } => *std > 0.0,
        }
    }
}

/// Radiance of a primitive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColorSpec {
    Constant(Rgb),
    /// Linear ramp from `low` to `high` as `(x − origin)·direction` goes from 0 to 1.
    Gradient {
        origin: Vector3<f64>,
        direction: Vector3<f64>,
        low: Rgb,
        high: Rgb,
    },
}

impl ColorSpec {
    pub fn eval(&self, x: &Vector3<f64>) -> Rgb {
        match self {
            ColorSpec::Constant(c) => *c,
            ColorSpec::Gradient {
                origin,
                direction,
                low,
                high,
            } => {
                let s = (x - origin).dot(direction).clamp(0.0, 1.0);
                low + s * (high - low)
            }
        }
    }

    fn transformed(&self, t: &SimTransform) -> ColorSpec {
        match self {
            ColorSpec::Constant(c) => ColorSpec::Constant(*c),
            ColorSpec::Gradient {
                origin,
                direction,
                low,
                high,
            } => ColorSpec::Gradient {
                origin: t.apply(origin),
                direction: t.rotation * direction / t.scale,
                low: *low,
                high: *high,
            },
        }
    }

    fn is_valid(&self) -> bool {
        let in_unit = |c: &Rgb| c.iter().all(|v| (0.0..=1.0).contains(v));
        match self {
            ColorSpec::Constant(c) => in_unit(c),
            ColorSpec::Gradient { low, high, .. } => in_unit(low) && in_unit(high),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub sigma: f64,
    pub color: ColorSpec,
}

impl Primitive {
    pub fn sphere(center: Vector3<f64>, radius: f64, sigma: f64, color: Rgb) -> Self {
        Self {
            shape: Shape::Sphere { center, radius },
            sigma,
            color: ColorSpec::Constant(color),
        }
    }

    pub fn cuboid(pose: RigidTransform, half_extents: Vector3<f64>, sigma: f64, color: Rgb) -> Self {
        Self {
            shape: Shape::Box { pose, half_extents },
            sigma,
            color: ColorSpec::Constant(color),
        }
    }

    pub fn gaussian(center: Vector3<f64>, std: f64, sigma: f64, color: Rgb) -> Self {
        Self {
            shape: Shape::Gaussian { center, std },
            sigma,
            color: ColorSpec::Constant(color),
        }
    }

    pub fn with_color(mut self, color: ColorSpec) -> Self {
        self.color = color;
        self
    }

    pub fn density(&self, x: &Vector3<f64>) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        self.sigma * self.shape.profile(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub primitives: Vec<Primitive>,
    pub background: Rgb,
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("primitive {0} has a negative density, non-positive extent or out-of-range color")]
    InvalidPrimitive(usize),
}

impl Field {
    pub fn new(primitives: Vec<Primitive>, background: Rgb) -> Self {
        Self {
            primitives,
            background,
        }
    }

    pub fn empty(background: Rgb) -> Self {
        Self::new(Vec::new(), background)
    }

    pub fn validate(&self) -> Result<(), FieldError> {
        for (i, p) in self.primitives.iter().enumerate() {
            if !(p.sigma >= 0.0) || !p.shape.is_valid() || !p.color.is_valid() {
                return Err(FieldError::InvalidPrimitive(i));
            }
        }
        Ok(())
    }

    /// Total density and density-weighted radiance at `x`.
    pub fn eval(&self, x: &Vector3<f64>) -> (f64, Rgb) {
        let mut sigma = 0.0;
        let mut weighted = Rgb::zeros();
        for p in &self.primitives {
            let s = p.density(x);
            if s > 0.0 {
                sigma += s;
                weighted += s * p.color.eval(x);
            }
        }
        if sigma > 0.0 {
            (sigma, weighted / sigma)
        } else {
            (0.0, self.background)
        }
    }

    /// The same scene expressed in another frame: `x_new = t.apply(x_old)`.
    /// Densities are divided by the scale so optical depth is preserved.
    pub fn transformed(&self, t: &SimTransform) -> Field {
        Field {
            primitives: self
                .primitives
                .iter()
                .map(|p| Primitive {
                    shape: p.shape.transformed(t),
                    sigma: p.sigma / t.scale,
                    color: p.color.transformed(t),
                })
                .collect(),
            background: self.background,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    /// Midpoint of the segment along the ray parameter.
    pub t: f64,
    pub delta: f64,
    /// Density per unit of ray parameter (scene density times ‖direction‖).
    pub sigma: f64,
    pub color: Rgb,
}

impl RaySample {
    pub fn start(&self) -> f64 {
        self.t - 0.5 * self.delta
    }

    pub fn end(&self) -> f64 {
        self.t + 0.5 * self.delta
    }
}

/// `n` contiguous equal segments on `[t_near, t_far]`, evaluated at midpoints.
pub fn sample_ray(field: &Field, ray: &Ray, t_near: f64, t_far: f64, n: usize) -> Vec<RaySample> {
    assert!(t_near < t_far && n >= 1, "invalid sampling range");
    let delta = (t_far - t_near) / n as f64;
    let speed = ray.direction.norm();
    (0..n)
        .map(|k| {
            let t = t_near + (k as f64 + 0.5) * delta;
            let (sigma, color) = field.eval(&ray.at(t));
            RaySample {
                t,
                delta,
                sigma: sigma * speed,
                color,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderResult {
    pub color: Rgb,
    /// Expected termination parameter; `None` when nothing terminates.
    pub depth: Option<f64>,
    pub accumulation: f64,
    pub masses: Vec<f64>,
    /// Transmittance left after the last sample.
    pub residual: f64,
}

/// Termination masses of a sorted sample list.
pub fn termination_masses(samples: &[RaySample]) -> (Vec<f64>, f64) {
    let mut optical = 0.0_f64;
    let mut masses = Vec::with_capacity(samples.len());
    for s in samples {
        let transmittance = (-optical).exp();
        let tau = s.sigma * s.delta;
        masses.push(transmittance * -(-tau).exp_m1());
        optical += tau;
    }
    (masses, (-optical).exp())
}

pub fn render_ray(samples: &[RaySample], background: Rgb) -> RenderResult {
    let (masses, residual) = termination_masses(samples);
    let accumulation: f64 = masses.iter().sum();
    let mut color = Rgb::zeros();
    let mut depth_sum = 0.0;
    for (s, p) in samples.iter().zip(&masses) {
        color += *p * s.color;
        depth_sum += p * s.t;
    }
    color += (1.0 - accumulation) * background;
    RenderResult {
        color,
        depth: (accumulation > 0.0).then(|| depth_sum / accumulation),
        accumulation,
        masses,
        residual,
    }
}

/// Termination mass beyond `d`; a sample straddling `d` contributes the
/// fraction of its segment lying past `d`.
pub fn distant_accumulation(samples: &[RaySample], masses: &[f64], d: f64) -> f64 {
    samples
        .iter()
        .zip(masses)
        .map(|(s, p)| {
            let (lo, hi) = (s.start(), s.end());
            if lo >= d {
                *p
            } else if hi <= d {
                0.0
            } else {
                p * (hi - d) / s.delta
            }
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    pub n_samples: usize,
    pub t_near: f64,
    pub t_far: f64,
    pub qd_cutoff: f64,
}

impl Default for RenderSettings {
    fn default() -> Self {
        Self {
            n_samples: 256,
            t_near: 0.02,
            t_far: 6.0,
            qd_cutoff: 0.3,
        }
    }
}

/// Samples and renders one ray.
pub fn trace(field: &Field, ray: &Ray, settings: &RenderSettings) -> (Vec<RaySample>, RenderResult) {
    let samples = sample_ray(field, ray, settings.t_near, settings.t_far, settings.n_samples);
    let result = render_ray(&samples, field.background);
    (samples, result)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub color: RgbImage,
    /// Expected depth, 0 where accumulation is 0.
    pub depth: ScalarImage,
    pub accumulation: ScalarImage,
    pub distant_accumulation: ScalarImage,
    /// Mean of `q_d` over all pixels, background pixels included as 0.
    pub mean_qd: f64,
}

pub fn render_image(
    field: &Field,
    model: &CameraModel,
    pose: &Pose,
    geom: ImageGeometry,
    settings: &RenderSettings,
) -> RenderedImage {
    let rays = generate_rays(model, pose, geom, RayConvention::Conventional);
    let per_pixel: Vec<(Rgb, f64, f64, f64)> = rays
        .directions
        .par_iter()
        .map(|dir| match dir {
            None => (field.background, 0.0, 0.0, 0.0),
            Some(d) => {
                let (samples, r) = trace(field, &Ray::new(rays.origin, *d), settings);
                let q = distant_accumulation(&samples, &r.masses, settings.qd_cutoff);
                (r.color, r.depth.unwrap_or(0.0), r.accumulation, q)
            }
        })
        .collect();
    let (w, h) = (geom.width, geom.height);
    let color = RgbImage::from_pixels(w, h, per_pixel.iter().map(|p| p.0).collect());
    let depth = ScalarImage::from_pixels(w, h, per_pixel.iter().map(|p| p.1).collect());
    let accumulation = ScalarImage::from_pixels(w, h, per_pixel.iter().map(|p| p.2).collect());
    let qd = ScalarImage::from_pixels(w, h, per_pixel.iter().map(|p| p.3).collect());
    let mean_qd = qd.mean();
    RenderedImage {
        color,
        depth,
        accumulation,
        distant_accumulation: qd,
        mean_qd,
    }
}
