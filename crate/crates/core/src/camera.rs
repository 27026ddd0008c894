//! The unified camera model family: pinhole, UCM, EUCM and Double Sphere.
//!
//! All four models share the projection form
//!
//! ```text
//! u = fx * x / D(P) + cx
//! v = fy * y / D(P) + cy
//! ```
//!
//! and differ only in the denominator `D`:
//!
//! | model   | D(P)                                               |
//! |---------|----------------------------------------------------|
//! | pinhole | z                                                  |
//! | UCM     | α·‖P‖ + (1−α)·z                                    |
//! | EUCM    | α·√(β(x²+y²) + z²) + (1−α)·z                       |
//! | DS      | α·√(x²+y²+(ξ‖P‖+z)²) + (1−α)·(ξ‖P‖+z)              |
//!
//! which makes the analytic Jacobians a matter of differentiating `D`.
//! Unprojection returns a point at a given *range* (Euclidean distance from
//! the camera center), not at a given z.

use nalgebra::{Matrix2x3, Matrix2xX, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Pose, RigidTransform};
use crate::image::{ImageGeometry, Rgb, RgbImage};

/// Projection-domain guard on the model denominator.
pub const EPS_DENOM: f64 = 1e-9;

/// Upper bound kept on α during optimization so that α/(1−α) stays finite.
pub const ALPHA_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CameraError {
    #[error("point lies outside the projection domain of the model")]
    BehindCamera,
    #[error("pixel lies outside the unprojection domain of the model")]
    InvalidPixel,
    #[error("invalid camera model: {0}")]
    InvalidModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CameraKind {
    Pinhole,
    Ucm,
    Eucm,
    #[serde(rename = "ds")]
    DoubleSphere,
}

impl CameraKind {
    pub const ALL: [CameraKind; 4] = [
        CameraKind::Pinhole,
        CameraKind::Ucm,
        CameraKind::Eucm,
        CameraKind::DoubleSphere,
    ];

    pub fn param_count(self) -> usize {
        match self {
            CameraKind::Pinhole => 4,
            CameraKind::Ucm => 5,
            CameraKind::Eucm | CameraKind::DoubleSphere => 6,
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            CameraKind::Pinhole => &["fx", "fy", "cx", "cy"],
            CameraKind::Ucm => &["fx", "fy", "cx", "cy", "alpha"],
            CameraKind::Eucm => &["fx", "fy", "cx", "cy", "alpha", "beta"],
            CameraKind::DoubleSphere => &["fx", "fy", "cx", "cy", "alpha", "xi"],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CameraKind::Pinhole => "pinhole",
            CameraKind::Ucm => "ucm",
            CameraKind::Eucm => "eucm",
            CameraKind::DoubleSphere => "ds",
        }
    }
}

impl std::str::FromStr for CameraKind {
    type Err = CameraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pinhole" => Ok(CameraKind::Pinhole),
            "ucm" => Ok(CameraKind::Ucm),
            "eucm" => Ok(CameraKind::Eucm),
            "ds" | "double_sphere" | "doublesphere" => Ok(CameraKind::DoubleSphere),
            other => Err(CameraError::InvalidModel(format!("unknown camera kind `{other}`"))),
        }
    }
}

/// Intrinsic parameters of a central camera. Fields not used by `kind` are
/// carried at their neutral values (α = 0, β = 1, ξ = 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct CameraModel {
    pub kind: CameraKind,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub alpha: f64,
    pub beta: f64,
    pub xi: f64,
}

/// Analytic derivatives of the projected pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionJacobians {
    /// ∂(u, v)/∂(x, y, z)
    pub point: Matrix2x3<f64>,
    /// ∂(u, v)/∂params, columns in [`CameraModel::params`] order.
    pub params: Matrix2xX<f64>,
}

/// Denominator of the shared projection form, its spatial gradient and its
/// derivatives w.r.t. the model-specific parameters (α, then β or ξ).
struct Denominator {
    value: f64,
    grad: Vector3<f64>,
    extra: [f64; 2],
}

impl CameraModel {
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64) -> Self {
        Self {
            kind: CameraKind::Pinhole,
            fx,
            fy,
            cx,
            cy,
            alpha: 0.0,
            beta: 1.0,
            xi: 0.0,
        }
    }

    pub fn ucm(fx: f64, fy: f64, cx: f64, cy: f64, alpha: f64) -> Self {
        Self {
            kind: CameraKind::Ucm,
            alpha,
            ..Self::pinhole(fx, fy, cx, cy)
        }
    }

    pub fn eucm(fx: f64, fy: f64, cx: f64, cy: f64, alpha: f64, beta: f64) -> Self {
        Self {
            kind: CameraKind::Eucm,
            alpha,
            beta,
            ..Self::pinhole(fx, fy, cx, cy)
        }
    }

    pub fn double_sphere(fx: f64, fy: f64, cx: f64, cy: f64, alpha: f64, xi: f64) -> Self {
        Self {
            kind: CameraKind::DoubleSphere,
            alpha,
            xi,
            ..Self::pinhole(fx, fy, cx, cy)
        }
    }

    /// Initialization from the image shape only: f = width, c = image center,
    /// α = 0.5, β = 1, ξ = 0.
    pub fn default_for_image(kind: CameraKind, geom: ImageGeometry) -> Self {
        let (cx, cy) = geom.center();
        let f = geom.width as f64;
        let base = Self::pinhole(f, f, cx, cy);
        match kind {
            CameraKind::Pinhole => base,
            _ => Self {
                kind,
                alpha: 0.5,
                ..base
            },
        }
    }

    pub fn param_count(&self) -> usize {
        self.kind.param_count()
    }

    /// Parameter vector `(fx, fy, cx, cy [, α] [, β | ξ])`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = vec![self.fx, self.fy, self.cx, self.cy];
        match self.kind {
            CameraKind::Pinhole => {}
            CameraKind::Ucm => p.push(self.alpha),
            CameraKind::Eucm => p.extend([self.alpha, self.beta]),
            CameraKind::DoubleSphere => p.extend([self.alpha, self.xi]),
        }
        p
    }

    pub fn with_params(&self, params: &[f64]) -> Self {
        assert_eq!(params.len(), self.param_count(), "parameter count mismatch");
        let mut m = *self;
        m.fx = params[0];
        m.fy = params[1];
        m.cx = params[2];
        m.cy = params[3];
        match self.kind {
            CameraKind::Pinhole => {}
            CameraKind::Ucm => m.alpha = params[4],
            CameraKind::Eucm => {
                m.alpha = params[4];
                m.beta = params[5];
            }
            CameraKind::DoubleSphere => {
                m.alpha = params[4];
                m.xi = params[5];
            }
        }
        m
    }

    /// Projects parameters back into the region the optimizer may explore.
    pub fn clamped(&self) -> Self {
        let mut m = *self;
        m.fx = m.fx.max(1e-6);
        m.fy = m.fy.max(1e-6);
        if m.kind != CameraKind::Pinhole {
            m.alpha = m.alpha.clamp(0.0, ALPHA_MAX);
        }
        if m.kind == CameraKind::Eucm {
            m.beta = m.beta.max(1e-6);
        }
        if m.kind == CameraKind::DoubleSphere {
            m.xi = m.xi.clamp(-ALPHA_MAX, ALPHA_MAX);
        }
        m
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let all_finite = [self.fx, self.fy, self.cx, self.cy, self.alpha, self.beta, self.xi]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(CameraError::InvalidModel("non-finite parameter".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(CameraError::InvalidModel("focal lengths must be positive".into()));
        }
        if self.kind != CameraKind::Pinhole && !(0.0..1.0).contains(&self.alpha) {
            return Err(CameraError::InvalidModel(format!("alpha {} not in [0, 1)", self.alpha)));
        }
        if self.kind == CameraKind::Eucm && self.beta <= 0.0 {
            return Err(CameraError::InvalidModel(format!("beta {} must be positive", self.beta)));
        }
        if self.kind == CameraKind::DoubleSphere && !(self.xi > -1.0 && self.xi < 1.0) {
            return Err(CameraError::InvalidModel(format!("xi {} not in (-1, 1)", self.xi)));
        }
        Ok(())
    }

    /// Pinhole calibration matrix from (fx, fy, cx, cy), ignoring any
    /// distortion parameters.
    pub fn k_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    fn denominator(&self, p: &Vector3<f64>) -> Denominator {
        let (x, y, z) = (p.x, p.y, p.z);
        let a = self.alpha;
        match self.kind {
            CameraKind::Pinhole => Denominator {
                value: z,
                grad: Vector3::z(),
                extra: [0.0, 0.0],
            },
            CameraKind::Ucm => {
                let d = p.norm();
                Denominator {
                    value: a * d + (1.0 - a) * z,
                    grad: a * p / d + (1.0 - a) * Vector3::z(),
                    extra: [d - z, 0.0],
                }
            }
            CameraKind::Eucm => {
                let b = self.beta;
                let r2 = x * x + y * y;
                let rho = (b * r2 + z * z).sqrt();
                let grad_rho = Vector3::new(b * x, b * y, z) / rho;
                Denominator {
                    value: a * rho + (1.0 - a) * z,
                    grad: a * grad_rho + (1.0 - a) * Vector3::z(),
                    extra: [rho - z, a * r2 / (2.0 * rho)],
                }
            }
            CameraKind::DoubleSphere => {
                let xi = self.xi;
                let d1 = p.norm();
                let w = xi * d1 + z;
                let d2 = (x * x + y * y + w * w).sqrt();
                let grad_w = xi * p / d1 + Vector3::z();
                let grad_d2 = (Vector3::new(x, y, 0.0) + w * grad_w) / d2;
                Denominator {
                    value: a * d2 + (1.0 - a) * w,
                    grad: a * grad_d2 + (1.0 - a) * grad_w,
                    extra: [d2 - w, a * w * d1 / d2 + (1.0 - a) * d1],
                }
            }
        }
    }

    /// Whether `p` lies in the model's valid projection domain.
    fn in_projection_domain(&self, p: &Vector3<f64>, denom: f64) -> bool {
        if !(denom > EPS_DENOM) || !p.iter().all(|v| v.is_finite()) {
            return false;
        }
        let a = self.alpha;
        let w1 = if a > 0.5 { (1.0 - a) / a } else { a / (1.0 - a) };
        match self.kind {
            CameraKind::Pinhole => true,
            CameraKind::Ucm => p.z > -w1 * p.norm(),
            CameraKind::Eucm => {
                let rho = (self.beta * (p.x * p.x + p.y * p.y) + p.z * p.z).sqrt();
                p.z > -w1 * rho
            }
            CameraKind::DoubleSphere => {
                let xi = self.xi;
                let w2 = (w1 + xi) / (2.0 * w1 * xi + xi * xi + 1.0).sqrt();
                p.z > -w2 * p.norm()
            }
        }
    }

    /// Projects a camera-frame point to pixel coordinates.
    pub fn project(&self, p: &Vector3<f64>) -> Result<Vector2<f64>, CameraError> {
        let den = self.denominator(p);
        if !self.in_projection_domain(p, den.value) {
            return Err(CameraError::BehindCamera);
        }
        Ok(Vector2::new(
            self.fx * p.x / den.value + self.cx,
            self.fy * p.y / den.value + self.cy,
        ))
    }

    /// Projection together with its analytic Jacobians.
    pub fn project_with_jacobians(
        &self,
        p: &Vector3<f64>,
    ) -> Result<(Vector2<f64>, ProjectionJacobians), CameraError> {
        let den = self.denominator(p);
        if !self.in_projection_domain(p, den.value) {
            return Err(CameraError::BehindCamera);
        }
        let d = den.value;
        let mx = p.x / d;
        let my = p.y / d;
        let pixel = Vector2::new(self.fx * mx + self.cx, self.fy * my + self.cy);

        let du_dp = self.fx * (Vector3::x() / d - p.x * den.grad / (d * d));
        let dv_dp = self.fy * (Vector3::y() / d - p.y * den.grad / (d * d));
        let point = Matrix2x3::from_rows(&[du_dp.transpose(), dv_dp.transpose()]);

        let k = self.param_count();
        let mut params = Matrix2xX::zeros(k);
        params[(0, 0)] = mx;
        params[(1, 1)] = my;
        params[(0, 2)] = 1.0;
        params[(1, 3)] = 1.0;
        for (j, dd) in den.extra.iter().take(k - 4).enumerate() {
            params[(0, 4 + j)] = -self.fx * p.x / (d * d) * dd;
            params[(1, 4 + j)] = -self.fy * p.y / (d * d) * dd;
        }
        Ok((pixel, ProjectionJacobians { point, params }))
    }

    pub fn project_jacobians(&self, p: &Vector3<f64>) -> Result<ProjectionJacobians, CameraError> {
        self.project_with_jacobians(p).map(|(_, j)| j)
    }

    /// Unit-norm viewing direction of a pixel in the camera frame.
    pub fn bearing(&self, pixel: &Vector2<f64>) -> Result<Vector3<f64>, CameraError> {
        let a = self.alpha;
        let mx = (pixel.x - self.cx) / self.fx;
        let my = (pixel.y - self.cy) / self.fy;
        let dir = match self.kind {
            CameraKind::Pinhole => Vector3::new(mx, my, 1.0),
            CameraKind::Ucm => {
                let xi = a / (1.0 - a);
                let mx = mx * (1.0 - a);
                let my = my * (1.0 - a);
                let r2 = mx * mx + my * my;
                let disc = 1.0 + (1.0 - xi * xi) * r2;
                if disc < 0.0 {
                    return Err(CameraError::InvalidPixel);
                }
                let factor = (xi + disc.sqrt()) / (1.0 + r2);
                Vector3::new(factor * mx, factor * my, factor - xi)
            }
            CameraKind::Eucm => {
                let b = self.beta;
                let r2 = mx * mx + my * my;
                let disc = 1.0 - (2.0 * a - 1.0) * b * r2;
                if disc < 0.0 {
                    return Err(CameraError::InvalidPixel);
                }
                let mz = (1.0 - b * a * a * r2) / (a * disc.sqrt() + (1.0 - a));
                Vector3::new(mx, my, mz)
            }
            CameraKind::DoubleSphere => {
                let xi = self.xi;
                let r2 = mx * mx + my * my;
                let disc = 1.0 - (2.0 * a - 1.0) * r2;
                if disc < 0.0 {
                    return Err(CameraError::InvalidPixel);
                }
                let mz = (1.0 - a * a * r2) / (a * disc.sqrt() + 1.0 - a);
                let mz2 = mz * mz;
                let factor = (mz * xi + (mz2 + (1.0 - xi * xi) * r2).sqrt()) / (mz2 + r2);
                Vector3::new(factor * mx, factor * my, factor * mz - xi)
            }
        };
        let norm = dir.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(CameraError::InvalidPixel);
        }
        Ok(dir / norm)
    }

    /// Point at Euclidean distance `range` along the ray of `pixel`.
    pub fn unproject(&self, pixel: &Vector2<f64>, range: f64) -> Result<Vector3<f64>, CameraError> {
        Ok(range * self.bearing(pixel)?)
    }
}

/// Warps a target-frame pixel with known depth into a context camera:
/// `p_c = π_c(R · φ_t(p_t, d) + t)`.
pub fn warp_pixel(
    pixel: &Vector2<f64>,
    depth: f64,
    target_to_context: &RigidTransform,
    target_model: &CameraModel,
    context_model: &CameraModel,
) -> Result<Vector2<f64>, CameraError> {
    let p = target_model.unproject(pixel, depth)?;
    context_model.project(&target_to_context.apply(&p))
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelRepr {
    kind: CameraKind,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
}

impl TryFrom<ModelRepr> for CameraModel {
    type Error = CameraError;

    fn try_from(r: ModelRepr) -> Result<Self, Self::Error> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                CameraError::InvalidModel(format!("{} model requires `{name}`", r.kind.name()))
            })
        };
        let model = match r.kind {
            CameraKind::Pinhole => CameraModel::pinhole(r.fx, r.fy, r.cx, r.cy),
            CameraKind::Ucm => CameraModel::ucm(r.fx, r.fy, r.cx, r.cy, need(r.alpha, "alpha")?),
            CameraKind::Eucm => CameraModel::eucm(
                r.fx,
                r.fy,
                r.cx,
                r.cy,
                need(r.alpha, "alpha")?,
                need(r.beta, "beta")?,
            ),
            CameraKind::DoubleSphere => CameraModel::double_sphere(
                r.fx,
                r.fy,
                r.cx,
                r.cy,
                need(r.alpha, "alpha")?,
                need(r.xi, "xi")?,
            ),
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<CameraModel> for ModelRepr {
    fn from(m: CameraModel) -> Self {
        let uses_alpha = m.kind != CameraKind::Pinhole;
        ModelRepr {
            kind: m.kind,
            fx: m.fx,
            fy: m.fy,
            cx: m.cx,
            cy: m.cy,
            alpha: uses_alpha.then_some(m.alpha),
            beta: (m.kind == CameraKind::Eucm).then_some(m.beta),
            xi: (m.kind == CameraKind::DoubleSphere).then_some(m.xi),
        }
    }
}

/// A camera model together with its image size, as stored in camera JSON.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    #[serde(flatten)]
    pub model: CameraModel,
    pub width: usize,
    pub height: usize,
}

impl Camera {
    pub fn new(model: CameraModel, geometry: ImageGeometry) -> Self {
        Self {
            model,
            width: geometry.width,
            height: geometry.height,
        }
    }

    pub fn geometry(&self) -> ImageGeometry {
        ImageGeometry::new(self.width, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Self {
        Self { origin, direction }
    }

    pub fn at(&self, t: f64) -> Vector3<f64> {
        self.origin + t * self.direction
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RayConvention {
    /// Origin at the camera center, unit world-frame directions.
    Conventional,
    /// Camera-embedding variant: `o = −R t`, `r = (K R)⁻¹ [u, v, 1]ᵀ + t`.
    Global,
}

/// Per-pixel rays of one camera, row-major. Pixels outside the model's
/// unprojection domain carry `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct RayBundle {
    pub origin: Vector3<f64>,
    pub directions: Vec<Option<Vector3<f64>>>,
    pub geometry: ImageGeometry,
    pub convention: RayConvention,
}

impl RayBundle {
    pub fn ray(&self, i: usize, j: usize) -> Option<Ray> {
        self.directions[j * self.geometry.width + i].map(|d| Ray::new(self.origin, d))
    }
}

/// Rays through every pixel center. In the global convention `R, t` are the
/// pose's rotation and translation used verbatim; for non-pinhole models the
/// term `K⁻¹[u, v, 1]ᵀ` is replaced by the model's unit bearing.
pub fn generate_rays(
    model: &CameraModel,
    pose: &Pose,
    geom: ImageGeometry,
    convention: RayConvention,
) -> RayBundle {
    let r = pose.rotation();
    let t = pose.center();
    let k_inv = model.k_matrix().try_inverse().expect("focal lengths are positive");
    let mut directions = Vec::with_capacity(geom.pixel_count());
    for j in 0..geom.height {
        for i in 0..geom.width {
            let px = Vector2::new(i as f64, j as f64);
            let dir = match convention {
                RayConvention::Conventional => model.bearing(&px).ok().map(|b| r * b),
                RayConvention::Global => {
                    let cam = if model.kind == CameraKind::Pinhole {
                        Some(k_inv * Vector3::new(px.x, px.y, 1.0))
                    } else {
                        model.bearing(&px).ok()
                    };
                    cam.map(|c| r.transpose() * c + t)
                }
            };
            directions.push(dir);
        }
    }
    let origin = match convention {
        RayConvention::Conventional => t,
        RayConvention::Global => -(r * t),
    };
    RayBundle {
        origin,
        directions,
        geometry: geom,
        convention,
    }
}

/// `count` frequencies equally spaced on `[1, max_frequency / 2]`.
pub fn fourier_frequencies(count: usize, max_frequency: f64) -> Vec<f64> {
    let hi = max_frequency / 2.0;
    match count {
        0 => Vec::new(),
        1 => vec![1.0],
        n => (0..n)
            .map(|k| 1.0 + (hi - 1.0) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// `x ↦ [x, sin(f₁πx), cos(f₁πx), …, sin(f_Kπx), cos(f_Kπx)]`.
pub fn fourier_encode(x: f64, frequencies: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * frequencies.len() + 1);
    out.push(x);
    for f in frequencies {
        let (s, c) = (f * std::f64::consts::PI * x).sin_cos();
        out.push(s);
        out.push(c);
    }
    out
}

/// For every destination (pinhole) pixel, the source pixel seeing the same ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RectifyMap {
    pub geometry: ImageGeometry,
    pub coords: Vec<Option<Vector2<f64>>>,
}

impl RectifyMap {
    pub fn get(&self, i: usize, j: usize) -> Option<Vector2<f64>> {
        self.coords[j * self.geometry.width + i]
    }

    pub fn valid_count(&self) -> usize {
        self.coords.iter().filter(|c| c.is_some()).count()
    }
}

pub fn rectify_map(
    src: &CameraModel,
    dst: &CameraModel,
    geom: ImageGeometry,
) -> Result<RectifyMap, CameraError> {
    if dst.kind != CameraKind::Pinhole {
        return Err(CameraError::InvalidModel("rectification target must be pinhole".into()));
    }
    let mut coords = Vec::with_capacity(geom.pixel_count());
    for j in 0..geom.height {
        for i in 0..geom.width {
            let px = Vector2::new(i as f64, j as f64);
            let mapped = dst
                .unproject(&px, 1.0)
                .and_then(|p| src.project(&p))
                .ok();
            coords.push(mapped);
        }
    }
    Ok(RectifyMap {
        geometry: geom,
        coords,
    })
}

/// Bilinear lookup; `None` outside the sampling footprint of the image.
pub fn sample_bilinear(image: &RgbImage, u: f64, v: f64) -> Option<Rgb> {
    if !(u.is_finite() && v.is_finite()) {
        return None;
    }
    let max_u = (image.width - 1) as f64;
    let max_v = (image.height - 1) as f64;
    if u < 0.0 || v < 0.0 || u > max_u || v > max_v {
        return None;
    }
    let i0 = (u.floor() as usize).min(image.width.saturating_sub(2));
    let j0 = (v.floor() as usize).min(image.height.saturating_sub(2));
    let i1 = (i0 + 1).min(image.width - 1);
    let j1 = (j0 + 1).min(image.height - 1);
    let fu = u - i0 as f64;
    let fv = v - j0 as f64;
    let top = image.get(i0, j0) * (1.0 - fu) + image.get(i1, j0) * fu;
    let bottom = image.get(i0, j1) * (1.0 - fu) + image.get(i1, j1) * fu;
    Some(top * (1.0 - fv) + bottom * fv)
}

/// Resamples `image` through `map`; unmapped or out-of-image pixels get `fill`.
pub fn remap(image: &RgbImage, map: &RectifyMap, fill: Rgb) -> RgbImage {
    let geom = map.geometry;
    let pixels = map
        .coords
        .iter()
        .map(|c| {
            c.and_then(|c| sample_bilinear(image, c.x, c.y))
                .unwrap_or(fill)
        })
        .collect();
    RgbImage::from_pixels(geom.width, geom.height, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ucm_half() -> CameraModel {
        CameraModel::ucm(100.0, 100.0, 50.0, 50.0, 0.5)
    }

    #[test]
    fn optical_axis_maps_to_principal_point() {
        let p = ucm_half().project(&Vector3::new(0.0, 0.0, 2.0)).unwrap();
        assert!((p - Vector2::new(50.0, 50.0)).norm() < 1e-12);
    }

    #[test]
    fn ucm_alpha_zero_is_pinhole() {
        let m = CameraModel::ucm(100.0, 100.0, 50.0, 50.0, 0.0);
        let p = m.project(&Vector3::new(1.0, 0.0, 1.0)).unwrap();
        assert!((p - Vector2::new(150.0, 50.0)).norm() < 1e-12);
    }

    #[test]
    fn ucm_projection_matches_hand_evaluation() {
        // d = √2, denom = (√2 + 1)/2, u = 100 / denom + 50
        let expected_u = 100.0 / ((2f64.sqrt() + 1.0) / 2.0) + 50.0;
        let p = ucm_half().project(&Vector3::new(1.0, 0.0, 1.0)).unwrap();
        assert!((p.x - expected_u).abs() < 1e-12);
        assert!((p.x - 132.842_712_474_619).abs() < 1e-9);
        assert_eq!(p.y, 50.0);
    }

    #[test]
    fn principal_ray_unprojects_on_axis_at_range() {
        let models = [
            CameraModel::pinhole(200.0, 210.0, 64.0, 48.0),
            CameraModel::ucm(200.0, 210.0, 64.0, 48.0, 0.6),
            CameraModel::eucm(200.0, 210.0, 64.0, 48.0, 0.6, 1.1),
            CameraModel::double_sphere(200.0, 210.0, 64.0, 48.0, 0.57, -0.23),
        ];
        for m in models {
            let p = m.unproject(&Vector2::new(m.cx, m.cy), 3.0).unwrap();
            assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12, "{:?}", m.kind);
            assert!((p.norm() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ucm_alpha_zero_back_projects_like_pinhole() {
        let m = CameraModel::ucm(100.0, 100.0, 50.0, 50.0, 0.0);
        let dir = m.bearing(&Vector2::new(150.0, 50.0)).unwrap();
        let expected = Vector3::new(1.0, 0.0, 1.0).normalize();
        assert!((dir - expected).norm() < 1e-12);
        let p = m.unproject(&Vector2::new(150.0, 50.0), 2f64.sqrt()).unwrap();
        assert!((p.z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ucm_rejects_pixels_outside_unprojection_domain() {
        // α = 0.8: 1 + (1 − ξ²) r² < 0 once r² > (1−α)²/(2α−1) in the scaled coordinates
        let m = CameraModel::ucm(100.0, 100.0, 50.0, 50.0, 0.8);
        assert_eq!(m.bearing(&Vector2::new(50.0 + 1000.0, 50.0)), Err(CameraError::InvalidPixel));
        assert!(m.bearing(&Vector2::new(60.0, 50.0)).is_ok());
    }

    #[test]
    fn pinhole_rejects_points_behind() {
        let m = CameraModel::pinhole(100.0, 100.0, 50.0, 50.0);
        assert_eq!(m.project(&Vector3::new(0.0, 0.0, -1.0)), Err(CameraError::BehindCamera));
        assert_eq!(m.project(&Vector3::new(1.0, 0.0, 0.0)), Err(CameraError::BehindCamera));
    }

    #[test]
    fn jacobian_spot_values() {
        let m = CameraModel::pinhole(120.0, 90.0, 50.0, 40.0);
        let j = m.project_jacobians(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(j.point[(0, 0)], 120.0);
        assert_eq!(j.point[(0, 2)], 0.0);
        for model in [
            m,
            ucm_half(),
            CameraModel::eucm(100.0, 100.0, 50.0, 50.0, 0.6, 1.2),
            CameraModel::double_sphere(100.0, 100.0, 50.0, 50.0, 0.6, -0.2),
        ] {
            let j = model.project_jacobians(&Vector3::new(0.3, -0.2, 1.0)).unwrap();
            assert_eq!(j.params.ncols(), model.param_count());
            assert_eq!(j.params[(0, 2)], 1.0);
            assert_eq!(j.params[(1, 3)], 1.0);
            assert_eq!(j.params[(0, 3)], 0.0);
        }
    }

    #[test]
    fn warp_identity_returns_same_pixel() {
        let m = CameraModel::eucm(150.0, 150.0, 80.0, 60.0, 0.6, 1.1);
        let px = Vector2::new(33.0, 71.5);
        let out = warp_pixel(&px, 2.5, &RigidTransform::identity(), &m, &m).unwrap();
        assert!((out - px).norm() < 1e-9);
    }

    #[test]
    fn forward_translation_toward_plane_shrinks_offset() {
        // Moving the camera toward a frontal plane: points in the context frame
        // are farther away, so their offsets from the principal point shrink.
        let m = CameraModel::pinhole(100.0, 100.0, 50.0, 50.0);
        let px = Vector2::new(80.0, 65.0);
        let back = RigidTransform::from_translation(Vector3::new(0.0, 0.0, 1.0));
        let out = warp_pixel(&px, 2.0, &back, &m, &m).unwrap();
        let before = (px - Vector2::new(50.0, 50.0)).norm();
        let after = (out - Vector2::new(50.0, 50.0)).norm();
        assert!(after < before);
    }

    #[test]
    fn rays_identity_pose_through_principal_point() {
        let m = CameraModel::pinhole(100.0, 100.0, 2.0, 1.0);
        let bundle = generate_rays(&m, &Pose::identity(), ImageGeometry::new(5, 3), RayConvention::Conventional);
        let ray = bundle.ray(2, 1).unwrap();
        assert!((ray.direction - Vector3::z()).norm() < 1e-15);
        assert_eq!(ray.origin, Vector3::zeros());
    }

    #[test]
    fn conventional_origin_is_camera_center() {
        let m = CameraModel::pinhole(100.0, 100.0, 2.0, 1.0);
        let pose = Pose::from_parts(Matrix3::identity(), Vector3::new(1.0, 0.0, 0.0));
        let bundle = generate_rays(&m, &pose, ImageGeometry::new(5, 3), RayConvention::Conventional);
        assert_eq!(bundle.origin, Vector3::new(1.0, 0.0, 0.0));
        for d in bundle.directions.iter().flatten() {
            assert!((d.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn global_rays_follow_embedding_formula() {
        let m = CameraModel::pinhole(100.0, 110.0, 2.0, 1.0);
        let geom = ImageGeometry::new(5, 3);
        let t = Vector3::new(0.4, -0.3, 1.2);

        // R = I: global = unnormalized conventional + t
        let pose = Pose::from_parts(Matrix3::identity(), t);
        let global = generate_rays(&m, &pose, geom, RayConvention::Global);
        for j in 0..3 {
            for i in 0..5 {
                let raw = Vector3::new((i as f64 - 2.0) / 100.0, (j as f64 - 1.0) / 110.0, 1.0);
                let d = global.ray(i, j).unwrap().direction;
                assert!((d - (raw + t)).norm() < 1e-15);
            }
        }
        assert!((global.origin + t).norm() < 1e-15);

        // general rotation: (K R)^{-1} p + t
        let r = crate::geometry::euler_xyz(0.2, -0.4, 0.9);
        let pose = Pose::from_parts(r, t);
        let global = generate_rays(&m, &pose, geom, RayConvention::Global);
        let kr_inv = (m.k_matrix() * r).try_inverse().unwrap();
        let expected = kr_inv * Vector3::new(3.0, 2.0, 1.0) + t;
        assert!((global.ray(3, 2).unwrap().direction - expected).norm() < 1e-12);
        assert!((global.origin - (-(r * t))).norm() < 1e-15);
    }

    #[test]
    fn fourier_examples() {
        assert_eq!(fourier_encode(0.0, &[1.0]), vec![0.0, 0.0, 1.0]);
        let e = fourier_encode(1.0, &[1.0]);
        assert_eq!(e[0], 1.0);
        assert!(e[1].abs() < 1e-15);
        assert!((e[2] + 1.0).abs() < 1e-15);

        let f = fourier_frequencies(4, 16.0);
        let expected = [1.0, 10.0 / 3.0, 17.0 / 3.0, 8.0];
        for (a, b) in f.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(fourier_encode(0.3, &f).len(), 9);
        assert!(fourier_frequencies(0, 16.0).is_empty());
    }

    #[test]
    fn rectify_identity_for_pinhole_pair() {
        let m = CameraModel::pinhole(80.0, 80.0, 15.5, 11.5);
        let geom = ImageGeometry::new(32, 24);
        let map = rectify_map(&m, &m, geom).unwrap();
        for j in 0..24 {
            for i in 0..32 {
                let c = map.get(i, j).unwrap();
                assert!((c - Vector2::new(i as f64, j as f64)).norm() < 1e-9);
            }
        }
        let ucm = CameraModel::ucm(80.0, 80.0, 15.5, 11.5, 0.5);
        assert!(rectify_map(&m, &ucm, geom).is_err());
    }

    #[test]
    fn rectify_displacement_grows_with_radius() {
        let geom = ImageGeometry::new(64, 64);
        let src = CameraModel::ucm(60.0, 60.0, 31.5, 31.5, 0.6);
        let dst = CameraModel::pinhole(60.0, 60.0, 31.5, 31.5);
        let map = rectify_map(&src, &dst, geom).unwrap();
        let mut last = -1.0;
        for i in 32..64 {
            let c = map.get(i, 32).unwrap();
            let disp = (c - Vector2::new(i as f64, 32.0)).norm();
            assert!(disp >= last - 1e-12, "displacement must grow: {disp} < {last}");
            last = disp;
        }
        assert!(last > 1.0);
    }

    #[test]
    fn camera_json_omits_unused_fields() {
        let cam = Camera::new(CameraModel::ucm(1.0, 2.0, 3.0, 4.0, 0.5), ImageGeometry::new(10, 8));
        let v = serde_json::to_value(cam).unwrap();
        assert_eq!(v["kind"], "ucm");
        assert_eq!(v["alpha"], 0.5);
        assert!(v.get("beta").is_none() && v.get("xi").is_none());
        assert_eq!(v["width"], 10);
        let back: Camera = serde_json::from_value(v).unwrap();
        assert_eq!(back, cam);

        let missing = serde_json::json!({"kind": "eucm", "fx": 1.0, "fy": 1.0, "cx": 0.0, "cy": 0.0, "alpha": 0.5});
        assert!(serde_json::from_value::<CameraModel>(missing).is_err());
    }
}
