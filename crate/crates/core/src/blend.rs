//! Joint rendering of several registered fields.
//!
//! Fields live in their own local frames and are placed in the global frame
//! by a similarity transform. A global ray is mapped into each local frame
//! without renormalizing its direction, so every field is sampled on the same
//! global ray parameter `t` and per-field samples can be merged directly.
//!
//! The background enters IDW-Sample as one extra sample per field at infinite
//! distance, carrying that field's residual transmittance; its weight is
//! uniform over the fields.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{generate_rays, CameraModel, Ray, RayConvention};
use crate::field::{trace, Field, RaySample, RenderResult, RenderSettings};
use crate::geometry::{Pose, SimTransform};
use crate::image::{ImageGeometry, Rgb, RgbImage};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlendError {
    #[error("no fields to blend")]
    NoFields,
    #[error("blending rate must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("proximity ratio must be at least 1, got {0}")]
    InvalidTau(f64),
    #[error("unknown blending method `{0}`")]
    UnknownMethod(String),
    #[error("total blended mass is zero")]
    ZeroMass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisteredField {
    pub field: Field,
    /// Local frame to global frame.
    pub to_global: SimTransform,
}

impl RegisteredField {
    pub fn new(field: Field, to_global: SimTransform) -> Self {
        Self { field, to_global }
    }

    /// Image of the local origin in the global frame.
    pub fn center(&self) -> Vector3<f64> {
        self.to_global.apply(&Vector3::zeros())
    }

    /// The global ray expressed in local coordinates, same parameter `t`.
    pub fn local_ray(&self, ray: &Ray) -> Ray {
        let inv = self.to_global.inverse();
        Ray::new(inv.apply(&ray.origin), inv.apply_vector(&ray.direction))
    }

    pub fn trace(&self, ray: &Ray, settings: &RenderSettings) -> (Vec<RaySample>, RenderResult) {
        trace(&self.field, &self.local_ray(ray), settings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlendMethod {
    #[serde(rename = "nearest")]
    Nearest,
    #[serde(rename = "idw-2d")]
    Idw2d,
    #[serde(rename = "idw-3d")]
    Idw3d,
    #[serde(rename = "idw-sample")]
    IdwSample,
}

impl BlendMethod {
    pub const ALL: [BlendMethod; 4] = [
        BlendMethod::Nearest,
        BlendMethod::Idw2d,
        BlendMethod::Idw3d,
        BlendMethod::IdwSample,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlendMethod::Nearest => "nearest",
            BlendMethod::Idw2d => "idw-2d",
            BlendMethod::Idw3d => "idw-3d",
            BlendMethod::IdwSample => "idw-sample",
        }
    }
}

impl std::str::FromStr for BlendMethod {
    type Err = BlendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "nearest" => Ok(BlendMethod::Nearest),
            "idw-2d" | "idw2d" => Ok(BlendMethod::Idw2d),
            "idw-3d" | "idw3d" => Ok(BlendMethod::Idw3d),
            "idw-sample" | "idwsample" => Ok(BlendMethod::IdwSample),
            _ => Err(BlendError::UnknownMethod(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendConfig {
    pub method: BlendMethod,
    pub gamma: f64,
    pub tau: f64,
    pub render: RenderSettings,
}

impl Default for BlendConfig {
    fn default() -> Self {
        Self {
            method: BlendMethod::IdwSample,
            gamma: 10.0,
            tau: 1.2,
            render: RenderSettings::default(),
        }
    }
}

impl BlendConfig {
    pub fn validate(&self) -> Result<(), BlendError> {
        if !(self.gamma > 0.0) {
            return Err(BlendError::InvalidGamma(self.gamma));
        }
        if !(self.tau >= 1.0) {
            return Err(BlendError::InvalidTau(self.tau));
        }
        Ok(())
    }
}

/// Indices (ascending) of fields whose center distance to `camera_center` is
/// within `tau` times the closest one.
pub fn proximity_test(camera_center: &Vector3<f64>, centers: &[Vector3<f64>], tau: f64) -> Vec<usize> {
    let d: Vec<f64> = centers.iter().map(|c| (c - camera_center).norm()).collect();
    let d0 = d.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..d.len())
        .filter(|&i| if d0 > 0.0 { d[i] / d0 <= tau } else { d[i] == 0.0 })
        .collect()
}

/// `w_i ∝ d_i^{−γ}`, evaluated in the log domain. Fields at distance zero
/// share all the weight.
pub fn idw_weights(distances: &[f64], gamma: f64) -> Vec<f64> {
    let zeros = distances.iter().filter(|d| **d == 0.0).count();
    if zeros > 0 {
        return distances
            .iter()
            .map(|d| if *d == 0.0 { 1.0 / zeros as f64 } else { 0.0 })
            .collect();
    }
    let logs: Vec<f64> = distances.iter().map(|d| -gamma * d.ln()).collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|r| r / total).collect()
}

/// One field's samples along a ray with their termination masses.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSamples {
    pub samples: Vec<RaySample>,
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergedSample {
    pub t: f64,
    pub delta: f64,
    /// Per-field termination mass on this interval.
    pub masses: Vec<f64>,
    pub colors: Vec<Rgb>,
    pub covered: Vec<bool>,
}

/// Segment boundaries of one field with adjacent segments sharing endpoints.
fn field_segments(samples: &[RaySample]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(samples.len());
    for s in samples {
        let mut start = s.start();
        if let Some(&(_, prev_end)) = out.last() {
            if (start - prev_end).abs() <= 1e-9 * s.delta {
                start = prev_end;
            }
        }
        out.push((start, s.end()));
    }
    out
}

/// Union of all segment boundaries; each field's mass is split over the
/// merged intervals in proportion to length. Intervals no field covers are
/// dropped.
pub fn merge_samples(fields: &[FieldSamples]) -> Vec<MergedSample> {
    let n = fields.len();
    let segments: Vec<Vec<(f64, f64)>> = fields.iter().map(|f| field_segments(&f.samples)).collect();
    let mut bounds: Vec<f64> = segments
        .iter()
        .flat_map(|s| s.iter().flat_map(|&(a, b)| [a, b]))
        .collect();
    bounds.sort_by(|a, b| a.total_cmp(b));
    bounds.dedup();

    let mut cursor = vec![0usize; n];
    let mut merged = Vec::new();
    for w in bounds.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mut masses = vec![0.0; n];
        let mut colors = vec![Rgb::zeros(); n];
        let mut covered = vec![false; n];
        for f in 0..n {
            let segs = &segments[f];
            while cursor[f] < segs.len() && segs[cursor[f]].1 <= a {
                cursor[f] += 1;
            }
            if let Some(&(s, e)) = segs.get(cursor[f]) {
                if s <= a && b <= e {
                    let k = cursor[f];
                    masses[f] = fields[f].masses[k] * (b - a) / (e - s);
                    colors[f] = fields[f].samples[k].color;
                    covered[f] = true;
                }
            }
        }
        if covered.iter().any(|c| *c) {
            merged.push(MergedSample {
                t: 0.5 * (a + b),
                delta: b - a,
                masses,
                colors,
                covered,
            });
        }
    }
    merged
}

/// Appends the background as a terminal sample holding each field's
/// residual mass `1 − Σ_k p̄_{i,k}`.
pub fn with_background(mut merged: Vec<MergedSample>, background: &[Rgb]) -> Vec<MergedSample> {
    let n = background.len();
    let mut residual = vec![1.0; n];
    for s in &merged {
        for (r, m) in residual.iter_mut().zip(&s.masses) {
            *r -= m;
        }
    }
    merged.push(MergedSample {
        t: f64::INFINITY,
        delta: f64::INFINITY,
        masses: residual.iter().map(|r| r.max(0.0)).collect(),
        colors: background.to_vec(),
        covered: vec![true; n],
    });
    merged
}

/// IDW-Sample weights: `per_sample[k][i]` after step (i), and the global
/// factor of step (ii).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWeights {
    pub per_sample: Vec<Vec<f64>>,
    pub global: f64,
}

pub fn idw_sample_weights(
    merged: &[MergedSample],
    centers: &[Vector3<f64>],
    ray: &Ray,
    gamma: f64,
) -> Result<SampleWeights, BlendError> {
    let per_sample: Vec<Vec<f64>> = merged
        .iter()
        .map(|s| {
            let covering: Vec<usize> = (0..centers.len()).filter(|&i| s.covered[i]).collect();
            let local = if s.t.is_finite() {
                let x = ray.at(s.t);
                let d: Vec<f64> = covering.iter().map(|&i| (centers[i] - x).norm()).collect();
                idw_weights(&d, gamma)
            } else {
                vec![1.0 / covering.len() as f64; covering.len()]
            };
            let mut w = vec![0.0; centers.len()];
            for (&i, v) in covering.iter().zip(local) {
                w[i] = v;
            }
            w
        })
        .collect();
    let total: f64 = merged
        .iter()
        .zip(&per_sample)
        .map(|(s, w)| s.masses.iter().zip(w).map(|(p, w)| p * w).sum::<f64>())
        .sum();
    if !(total > 0.0) {
        return Err(BlendError::ZeroMass);
    }
    Ok(SampleWeights {
        per_sample,
        global: 1.0 / total,
    })
}

/// `I = Σ_k Σ_i w_{i,k} p̄_{i,k} c̄_{i,k}` with both normalizations applied.
pub fn blend_ray_idw_sample(
    merged: &[MergedSample],
    centers: &[Vector3<f64>],
    ray: &Ray,
    gamma: f64,
) -> Result<Rgb, BlendError> {
    let w = idw_sample_weights(merged, centers, ray, gamma)?;
    let mut color = Rgb::zeros();
    for (s, ws) in merged.iter().zip(&w.per_sample) {
        for i in 0..centers.len() {
            color += w.global * ws[i] * s.masses[i] * s.colors[i];
        }
    }
    Ok(color)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlendOutput {
    pub color: RgbImage,
    /// Fields that passed the proximity test.
    pub kept: Vec<usize>,
    pub zero_mass_pixels: usize,
}

fn blend_pixel(
    fields: &[&RegisteredField],
    centers: &[Vector3<f64>],
    camera_weights: &[f64],
    ray: &Ray,
    cfg: &BlendConfig,
) -> (Rgb, bool) {
    let traced: Vec<(Vec<RaySample>, RenderResult)> =
        fields.iter().map(|f| f.trace(ray, &cfg.render)).collect();
    match cfg.method {
        BlendMethod::Nearest | BlendMethod::Idw2d => {
            let c = traced
                .iter()
                .zip(camera_weights)
                .map(|((_, r), w)| *w * r.color)
                .sum();
            (c, false)
        }
        BlendMethod::Idw3d => {
            let d: Vec<f64> = traced
                .iter()
                .zip(centers)
                .map(|((_, r), c)| {
                    let t = r.depth.unwrap_or(cfg.render.t_far);
                    (c - ray.at(t)).norm()
                })
                .collect();
            let w = idw_weights(&d, cfg.gamma);
            let c = traced.iter().zip(&w).map(|((_, r), w)| *w * r.color).sum();
            (c, false)
        }
        BlendMethod::IdwSample => {
            let per_field: Vec<FieldSamples> = traced
                .into_iter()
                .map(|(samples, r)| FieldSamples {
                    samples,
                    masses: r.masses,
                })
                .collect();
            let backgrounds: Vec<Rgb> = fields.iter().map(|f| f.field.background).collect();
            let merged = with_background(merge_samples(&per_field), &backgrounds);
            match blend_ray_idw_sample(&merged, centers, ray, cfg.gamma) {
                Ok(c) => (c, false),
                Err(_) => (backgrounds[0], true),
            }
        }
    }
}

pub fn blend_image(
    fields: &[RegisteredField],
    model: &CameraModel,
    pose: &Pose,
    geom: ImageGeometry,
    cfg: &BlendConfig,
) -> Result<BlendOutput, BlendError> {
    if fields.is_empty() {
        return Err(BlendError::NoFields);
    }
    cfg.validate()?;
    let all_centers: Vec<Vector3<f64>> = fields.iter().map(|f| f.center()).collect();
    let kept = proximity_test(&pose.center(), &all_centers, cfg.tau);
    let active: Vec<&RegisteredField> = kept.iter().map(|&i| &fields[i]).collect();
    let centers: Vec<Vector3<f64>> = kept.iter().map(|&i| all_centers[i]).collect();
    let camera_distances: Vec<f64> = centers.iter().map(|c| (c - pose.center()).norm()).collect();
    let camera_weights = match cfg.method {
        BlendMethod::Nearest => {
            let best = camera_distances
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k)
                .expect("proximity test keeps the closest field");
            (0..centers.len()).map(|k| if k == best { 1.0 } else { 0.0 }).collect()
        }
        _ => idw_weights(&camera_distances, cfg.gamma),
    };

    let rays = generate_rays(model, pose, geom, RayConvention::Conventional);
    let background = active[0].field.background;
    let pixels: Vec<(Rgb, bool)> = rays
        .directions
        .par_iter()
        .map(|dir| match dir {
            None => (background, false),
            Some(d) => blend_pixel(&active, &centers, &camera_weights, &Ray::new(rays.origin, *d), cfg),
        })
        .collect();
    Ok(BlendOutput {
        color: RgbImage::from_pixels(geom.width, geom.height, pixels.iter().map(|p| p.0).collect()),
        kept,
        zero_mass_pixels: pixels.iter().filter(|p| p.1).count(),
    })
}

/// Solo render of one registered field in the global frame.
pub fn render_registered(
    field: &RegisteredField,
    model: &CameraModel,
    pose: &Pose,
    geom: ImageGeometry,
    settings: &RenderSettings,
) -> RgbImage {
    let rays = generate_rays(model, pose, geom, RayConvention::Conventional);
    let pixels = rays
        .directions
        .par_iter()
        .map(|dir| match dir {
            None => field.field.background,
            Some(d) => field.trace(&Ray::new(rays.origin, *d), settings).1.color,
        })
        .collect();
    RgbImage::from_pixels(geom.width, geom.height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{render_image, Primitive};
    use crate::geometry::rot_z;

    fn s(t: f64, delta: f64) -> RaySample {
        RaySample {
            t,
            delta,
            sigma: 0.0,
            color: Rgb::new(0.2, 0.4, 0.6),
        }
    }

    #[test]
    fn proximity_examples() {
        let o = Vector3::zeros();
        assert_eq!(proximity_test(&o, &[Vector3::x()], 1.2), vec![0]);
        let centers = [Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.1, 0.0), Vector3::new(0.0, 0.0, 2.0)];
        assert_eq!(proximity_test(&o, &centers, 1.2), vec![0, 1]);
        assert_eq!(proximity_test(&o, &centers, 1.0), vec![0]);
    }

    #[test]
    fn idw_examples() {
        let w = idw_weights(&[1.0, 2.0], 1.0);
        assert!((w[0] - 2.0 / 3.0).abs() < 1e-15 && (w[1] - 1.0 / 3.0).abs() < 1e-15);
        let w = idw_weights(&[1.0, 3.0, 7.0], 1e-12);
        assert!(w.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-9));
        let w = idw_weights(&[1.0, 1.1], 1e6);
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1] < 1e-12);
        assert_eq!(idw_weights(&[0.0, 2.0], 3.0), vec![1.0, 0.0]);
    }

    #[test]
    fn merge_hand_example() {
        let a = FieldSamples { samples: vec![s(1.0, 1.0)], masses: vec![0.8] };
        let b = FieldSamples { samples: vec![s(0.75, 0.5), s(1.25, 0.5)], masses: vec![0.3, 0.1] };
        let m = merge_samples(&[a, b]);
        assert_eq!(m.len(), 2);
        assert_eq!((m[0].t, m[0].delta), (0.75, 0.5));
        assert_eq!((m[1].t, m[1].delta), (1.25, 0.5));
        assert!((m[0].masses[0] - 0.4).abs() < 1e-15 && (m[1].masses[0] - 0.4).abs() < 1e-15);
        assert_eq!((m[0].masses[1], m[1].masses[1]), (0.3, 0.1));
    }

    #[test]
    fn merge_single_field_is_identity() {
        let f = FieldSamples { samples: vec![s(0.5, 0.2), s(0.7, 0.2), s(0.9, 0.2)], masses: vec![0.1, 0.2, 0.3] };
        let m = merge_samples(std::slice::from_ref(&f));
        assert_eq!(m.len(), 3);
        for (a, b) in m.iter().zip(f.samples.iter().zip(&f.masses)) {
            assert!((a.t - b.0.t).abs() < 1e-15 && (a.delta - b.0.delta).abs() < 1e-15);
            assert!((a.masses[0] - b.1).abs() < 1e-15);
        }
    }

    #[test]
    fn uncovered_gap_is_dropped() {
        let a = FieldSamples { samples: vec![s(0.5, 0.2)], masses: vec![0.5] };
        let b = FieldSamples { samples: vec![s(1.5, 0.2)], masses: vec![0.5] };
        let m = merge_samples(&[a, b]);
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].covered, vec![true, false]);
        assert_eq!(m[1].covered, vec![false, true]);
        assert_eq!(m[0].masses[1], 0.0);
    }

    fn ball(center: Vector3<f64>, color: Rgb) -> Field {
        Field::new(vec![Primitive::gaussian(center, 0.3, 8.0, color)], Rgb::new(0.1, 0.1, 0.1))
    }

    #[test]
    fn identical_fields_equal_solo_render() {
        let f = RegisteredField::new(ball(Vector3::zeros(), Rgb::new(0.9, 0.3, 0.1)), SimTransform::identity());
        let model = CameraModel::pinhole(20.0, 20.0, 7.5, 7.5);
        let pose = Pose::look_at(&Vector3::new(0.0, -2.0, 0.3), &Vector3::zeros(), &Vector3::z()).unwrap();
        let geom = ImageGeometry::new(16, 16);
        let settings = RenderSettings { n_samples: 64, ..Default::default() };
        let solo = render_image(&f.field, &model, &pose, geom, &settings).color;
        for method in BlendMethod::ALL {
            let cfg = BlendConfig { method, render: settings, ..Default::default() };
            let out = blend_image(&[f.clone(), f.clone()], &model, &pose, geom, &cfg).unwrap();
            assert!(out.color.max_abs_diff(&solo) < 1e-6, "{method:?}");
        }
    }

    #[test]
    fn registered_field_renders_like_transformed_field() {
        let t = SimTransform::new(1.7, rot_z(0.6), Vector3::new(0.3, 0.2, -0.1));
        let f = RegisteredField::new(ball(Vector3::new(0.1, 0.0, 0.0), Rgb::new(0.2, 0.8, 0.4)), t);
        let model = CameraModel::pinhole(20.0, 20.0, 7.5, 7.5);
        let pose = Pose::look_at(&Vector3::new(0.0, -3.0, 0.5), &t.translation, &Vector3::z()).unwrap();
        let geom = ImageGeometry::new(16, 16);
        let settings = RenderSettings { n_samples: 128, ..Default::default() };
        let direct = render_image(&f.field.transformed(&t), &model, &pose, geom, &settings).color;
        let via_local = render_registered(&f, &model, &pose, geom, &settings);
        assert!(direct.max_abs_diff(&via_local) < 1e-9);
    }

    #[test]
    fn huge_gamma_picks_nearest_field_per_sample() {
        let fa = FieldSamples { samples: vec![s(1.0, 1.0), s(2.0, 1.0)], masses: vec![0.3, 0.2] };
        let mut fb = fa.clone();
        for x in fb.samples.iter_mut() {
            x.color = Rgb::new(1.0, 0.0, 0.0);
        }
        let centers = [Vector3::new(0.0, 0.0, 0.8), Vector3::new(0.0, 0.0, 2.2)];
        let ray = Ray::new(Vector3::zeros(), Vector3::z());
        let merged = with_background(merge_samples(&[fa, fb]), &[Rgb::zeros(), Rgb::zeros()]);
        let w = idw_sample_weights(&merged, &centers, &ray, 1e6).unwrap();
        assert_eq!(w.per_sample[0], vec![1.0, 0.0]);
        assert_eq!(w.per_sample[1], vec![0.0, 1.0]);
        let c = blend_ray_idw_sample(&merged, &centers, &ray, 1e6).unwrap();
        let expected = 0.3 * Rgb::new(0.2, 0.4, 0.6) + 0.2 * Rgb::new(1.0, 0.0, 0.0);
        assert!((c - expected).norm() < 1e-12);
    }

    #[test]
    fn method_names_round_trip() {
        for m in BlendMethod::ALL {
            assert_eq!(m.name().parse::<BlendMethod>().unwrap(), m);
        }
        assert!("bogus".parse::<BlendMethod>().is_err());
    }
}
