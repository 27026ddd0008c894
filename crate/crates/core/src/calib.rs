//! Intrinsics estimation from 2D–3D correspondences with Levenberg–Marquardt.
//!
//! Poses are held fixed, so each world point is moved into its camera frame
//! once and the solver only sees `(P_cam, pixel)` pairs.

use nalgebra::{DMatrix, DVector, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::camera::{CameraError, CameraKind, CameraModel};
use crate::geometry::{euler_xyz, Pose};
use crate::image::ImageGeometry;

/// Per-correspondence residual charged when a point fails to project.
pub const INVALID_PENALTY_PX: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("normal equations are singular (degenerate correspondence geometry)")]
    SingularNormalEquations,
    #[error("no convergence after {iterations} iterations")]
    DivergedMaxIter { iterations: usize },
    #[error("no correspondence projects under the model")]
    AllInvalid,
    #[error("{0} correspondences fail to project under the initial model")]
    InvalidInitialization(usize),
    #[error("observation references unknown pose {0}")]
    UnknownPose(usize),
    #[error(transparent)]
    Camera(#[from] CameraError),
}

/// One observed pixel of a world point, seen from `poses[pose_id]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub point: Vector3<f64>,
    pub pixel: Vector2<f64>,
    pub pose_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrespondenceSet {
    pub poses: Vec<Pose>,
    pub observations: Vec<Observation>,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// `(camera-frame point, observed pixel)` for every observation.
    pub fn camera_frame(&self) -> Result<Vec<(Vector3<f64>, Vector2<f64>)>, CalibError> {
        self.observations
            .iter()
            .map(|o| {
                let pose = self.poses.get(o.pose_id).ok_or(CalibError::UnknownPose(o.pose_id))?;
                Ok((pose.to_camera(&o.point), o.pixel))
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MreReport {
    pub mre: f64,
    /// Correspondences that failed to project and were charged the penalty.
    pub penalized: usize,
}

pub fn mean_reprojection_error(
    model: &CameraModel,
    set: &CorrespondenceSet,
) -> Result<MreReport, CalibError> {
    if set.is_empty() {
        return Err(CalibError::InsufficientData { needed: 1, got: 0 });
    }
    let pairs = set.camera_frame()?;
    mre_of_pairs(model, &pairs)
}

fn mre_of_pairs(
    model: &CameraModel,
    pairs: &[(Vector3<f64>, Vector2<f64>)],
) -> Result<MreReport, CalibError> {
    let mut total = 0.0;
    let mut penalized = 0;
    for (p, px) in pairs {
        match model.project(p) {
            Ok(q) => total += (q - px).norm(),
            Err(_) => {
                penalized += 1;
                total += INVALID_PENALTY_PX;
            }
        }
    }
    if penalized == pairs.len() {
        return Err(CalibError::AllInvalid);
    }
    Ok(MreReport {
        mre: total / pairs.len() as f64,
        penalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LmOptions {
    pub max_iter: usize,
    pub lambda0: f64,
    pub rel_tol: f64,
    pub grad_tol: f64,
    /// Huber threshold in pixels on the per-correspondence residual norm.
    pub huber: Option<f64>,
    /// Fraction of `max_iter` during which parameters stay frozen.
    pub warm_start_fraction: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            lambda0: 1e-3,
            rel_tol: 1e-10,
            grad_tol: 1e-8,
            huber: None,
            warm_start_fraction: 0.0,
        }
    }
}

impl LmOptions {
    /// Ten frozen iterations out of 200.
    pub fn warm_start() -> Self {
        Self {
            warm_start_fraction: 0.05,
            ..Self::default()
        }
    }

    fn frozen_iterations(&self) -> usize {
        (self.warm_start_fraction * self.max_iter as f64).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub cost: f64,
    pub mre: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibResult {
    pub model: CameraModel,
    pub mre: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<TraceEntry>,
}

struct Problem<'a> {
    pairs: &'a [(Vector3<f64>, Vector2<f64>)],
    huber: Option<f64>,
}

impl Problem<'_> {
    fn robust(&self, e: f64) -> (f64, f64) {
        // (ρ(e), IRLS weight) with ρ(e) = e²/2 in the quadratic region
        match self.huber {
            Some(d) if e > d => (d * (e - 0.5 * d), d / e),
            _ => (0.5 * e * e, 1.0),
        }
    }

    /// Total cost, or `None` if any point leaves the projection domain.
    fn cost(&self, model: &CameraModel) -> Option<f64> {
        let mut total = 0.0;
        for (p, px) in self.pairs {
            let r = model.project(p).ok()? - px;
            total += self.robust(r.norm()).0;
        }
        Some(total)
    }

    /// Weighted normal equations `(JᵀWJ, JᵀWr)`.
    fn normal_equations(&self, model: &CameraModel) -> Option<(DMatrix<f64>, DVector<f64>)> {
        let k = model.param_count();
        let rows: Vec<Option<_>> = self
            .pairs
            .par_iter()
            .map(|(p, px)| {
                let (q, jac) = model.project_with_jacobians(p).ok()?;
                let r = q - px;
                let w = self.robust(r.norm()).1;
                Some((r, jac.params, w))
            })
            .collect();
        let mut h = DMatrix::zeros(k, k);
        let mut g = DVector::zeros(k);
        for row in rows {
            let (r, j, w) = row?;
            h += w * j.transpose() * &j;
            g += w * j.transpose() * r;
        }
        Some((h, g))
    }
}

fn reduce(h: &DMatrix<f64>, g: &DVector<f64>, active: &[usize]) -> (DMatrix<f64>, DVector<f64>) {
    let k = active.len();
    (
        DMatrix::from_fn(k, k, |r, c| h[(active[r], active[c])]),
        DVector::from_fn(k, |r, _| g[active[r]]),
    )
}

fn is_singular(h: &DMatrix<f64>) -> bool {
    let d = h.diagonal();
    if d.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return true;
    }
    let s = DVector::from_iterator(d.len(), d.iter().map(|v| 1.0 / v.sqrt()));
    let scaled = DMatrix::from_diagonal(&s) * h * DMatrix::from_diagonal(&s);
    let eig = scaled.symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    !(min > 1e-14 * max)
}

pub fn solve_intrinsics(
    initial: &CameraModel,
    set: &CorrespondenceSet,
    options: &LmOptions,
) -> Result<CalibResult, CalibError> {
    let pairs = set.camera_frame()?;
    solve_pairs(initial, &pairs, options)
}

/// Levenberg–Marquardt on camera-frame `(point, pixel)` pairs.
pub fn solve_pairs(
    initial: &CameraModel,
    pairs: &[(Vector3<f64>, Vector2<f64>)],
    options: &LmOptions,
) -> Result<CalibResult, CalibError> {
    solve_pairs_fixed(initial, pairs, options, &[])
}

/// As [`solve_pairs`], holding the parameters at indices `fixed` constant.
pub fn solve_pairs_fixed(
    initial: &CameraModel,
    pairs: &[(Vector3<f64>, Vector2<f64>)],
    options: &LmOptions,
    fixed: &[usize],
) -> Result<CalibResult, CalibError> {
    let active: Vec<usize> = (0..initial.param_count()).filter(|i| !fixed.contains(i)).collect();
    let k = active.len();
    if pairs.len() < k {
        return Err(CalibError::InsufficientData {
            needed: k,
            got: pairs.len(),
        });
    }
    let problem = Problem {
        pairs,
        huber: options.huber,
    };
    let mut model = initial.clamped();
    let mut cost = match problem.cost(&model) {
        Some(c) => c,
        None => {
            let bad = pairs.iter().filter(|(p, _)| model.project(p).is_err()).count();
            return Err(CalibError::InvalidInitialization(bad));
        }
    };
    let record = |m: &CameraModel, c: f64| -> Result<TraceEntry, CalibError> {
        Ok(TraceEntry {
            params: m.params(),
            cost: c,
            mre: mre_of_pairs(m, pairs)?.mre,
        })
    };
    let mut trace = vec![record(&model, cost)?];
    let frozen = options.frozen_iterations().min(options.max_iter);
    let mut lambda = options.lambda0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iter {
        iterations += 1;
        if iterations <= frozen {
            trace.push(trace.last().expect("trace starts non-empty").clone());
            continue;
        }
        let (h, g) = problem
            .normal_equations(&model)
            .map(|(h, g)| reduce(&h, &g, &active))
            .expect("current model projects every point");
        if cost == 0.0 || g.amax() < options.grad_tol {
            converged = true;
            trace.push(trace.last().expect("trace starts non-empty").clone());
            break;
        }
        let mut accepted = None;
        while lambda <= 1e16 {
            let mut a = h.clone();
            for i in 0..k {
                a[(i, i)] += lambda * h[(i, i)];
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&g),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut params = model.params();
            for (s, &i) in step.iter().zip(&active) {
                params[i] -= s;
            }
            let candidate = model.with_params(&params).clamped();
            match problem.cost(&candidate) {
                Some(c) if c < cost => {
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = Some((candidate, c));
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        match accepted {
            Some((candidate, new_cost)) => {
                let rel = (cost - new_cost) / cost;
                model = candidate;
                cost = new_cost;
                trace.push(record(&model, cost)?);
                if rel < options.rel_tol {
                    converged = true;
                    break;
                }
            }
            None => {
                // no descent direction left at any damping: stationary point
                converged = true;
                trace.push(trace.last().expect("trace starts non-empty").clone());
                break;
            }
        }
    }
    if !converged {
        return Err(CalibError::DivergedMaxIter { iterations });
    }
    // Judged at the solution: a model can be degenerate at a single parameter
    // value (DS at α = 0.5, ξ = 0), while rank-deficient data stays singular.
    let (h, g) = problem
        .normal_equations(&model)
        .expect("accepted models project every point");
    if is_singular(&reduce(&h, &g, &active).0) {
        return Err(CalibError::SingularNormalEquations);
    }
    Ok(CalibResult {
        model,
        mre: mre_of_pairs(&model, pairs)?.mre,
        iterations,
        converged,
        trace,
    })
}

/// Fixed `ξ` values used to seed Double Sphere calibration from defaults.
pub const DS_XI_STARTS: [f64; 4] = [-0.6, -0.3, 0.3, 0.6];

/// Calibration from image-shape defaults.
///
/// At `ξ = 0` the Double Sphere Jacobian is rank deficient for every `α`
/// (the `ξ` column equals `D + (1 − 2α) ∂D/∂α` in denominator terms), and the
/// cost along `ξ` has a ridge there separating a spurious basin from the
/// true one. DS is therefore also started from profile solutions at the
/// fixed values in [`DS_XI_STARTS`]; the run with the lowest final cost wins.
pub fn calibrate_from_defaults(
    kind: CameraKind,
    geom: ImageGeometry,
    set: &CorrespondenceSet,
    options: &LmOptions,
) -> Result<CalibResult, CalibError> {
    let defaults = CameraModel::default_for_image(kind, geom);
    let plain = solve_intrinsics(&defaults, set, options);
    if kind != CameraKind::DoubleSphere {
        return plain;
    }
    let pairs = set.camera_frame()?;
    let xi = kind.param_count() - 1;
    let mut best = plain;
    for start in DS_XI_STARTS {
        let mut seed = defaults.params();
        seed[xi] = start;
        let Ok(profile) = solve_pairs_fixed(&defaults.with_params(&seed), &pairs, options, &[xi]) else {
            continue;
        };
        let Ok(run) = solve_pairs(&profile.model, &pairs, options) else {
            continue;
        };
        let better = match &best {
            Ok(b) => final_cost(&run) < final_cost(b),
            Err(_) => true,
        };
        if better {
            best = Ok(run);
        }
    }
    best
}

fn final_cost(r: &CalibResult) -> f64 {
    r.trace.last().map_or(f64::INFINITY, |t| t.cost)
}

/// Every parameter multiplied by `factor`, then clamped into the valid domain.
pub fn perturb_params(model: &CameraModel, factor: f64) -> CameraModel {
    assert!(factor > 0.0, "perturbation factor must be positive");
    let scaled: Vec<f64> = model.params().iter().map(|p| p * factor).collect();
    model.with_params(&scaled).clamped()
}

/// Solves from `factor × truth`.
pub fn recalibrate(
    truth: &CameraModel,
    factor: f64,
    set: &CorrespondenceSet,
    options: &LmOptions,
) -> Result<CalibResult, CalibError> {
    solve_intrinsics(&perturb_params(truth, factor), set, options)
}

/// Largest relative parameter deviation `|p̂ − p| / |p|`.
pub fn max_relative_error(estimate: &CameraModel, truth: &CameraModel) -> f64 {
    estimate
        .params()
        .iter()
        .zip(truth.params())
        .map(|(e, t)| (e - t).abs() / t.abs().max(1e-12))
        .fold(0.0, f64::max)
}

/// Image size of the reference calibration sequence.
pub fn reference_geometry() -> ImageGeometry {
    ImageGeometry::new(384, 256)
}

/// Target-based reference calibrations of the fisheye sequence.
pub fn reference_model(kind: CameraKind) -> CameraModel {
    match kind {
        CameraKind::Pinhole => CameraModel::pinhole(235.4, 245.1, 186.5, 132.6),
        CameraKind::Ucm => CameraModel::ucm(235.4, 245.1, 186.5, 132.6, 0.650),
        CameraKind::Eucm => CameraModel::eucm(235.6, 245.4, 186.4, 132.7, 0.597, 1.112),
        CameraKind::DoubleSphere => {
            CameraModel::double_sphere(181.4, 188.9, 186.4, 132.6, 0.571, -0.230)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_points: usize,
    pub n_poses: usize,
    pub noise_px: f64,
    pub min_range: f64,
    pub max_range: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_points: 2000,
            n_poses: 10,
            noise_px: 0.0,
            min_range: 0.5,
            max_range: 5.0,
        }
    }
}

/// Correspondences seen by `model`: random pixels are lifted to random
/// ranges, moved to the world through random poses, and the observed pixel
/// is the true pixel plus isotropic gaussian noise.
pub fn synthetic_correspondences<R: Rng>(
    model: &CameraModel,
    geom: ImageGeometry,
    cfg: &SyntheticConfig,
    rng: &mut R,
) -> CorrespondenceSet {
    let poses: Vec<Pose> = (0..cfg.n_poses.max(1))
        .map(|_| {
            let r = euler_xyz(
                rng.random_range(-0.5..0.5),
                rng.random_range(-0.5..0.5),
                rng.random_range(-3.2..3.2),
            );
            let c = Vector3::new(
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            );
            Pose::from_parts(r, c)
        })
        .collect();
    let noise = Normal::new(0.0, cfg.noise_px.max(0.0)).expect("finite noise level");
    let mut observations = Vec::with_capacity(cfg.n_points);
    while observations.len() < cfg.n_points {
        let px = Vector2::new(
            rng.random_range(0.0..(geom.width - 1) as f64),
            rng.random_range(0.0..(geom.height - 1) as f64),
        );
        let range = rng.random_range(cfg.min_range..cfg.max_range);
        let pose_id = rng.random_range(0..poses.len());
        let Ok(p_cam) = model.unproject(&px, range) else {
            continue;
        };
        let observed = if cfg.noise_px > 0.0 {
            px + Vector2::new(noise.sample(rng), noise.sample(rng))
        } else {
            px
        };
        observations.push(Observation {
            point: poses[pose_id].to_world(&p_cam),
            pixel: observed,
            pose_id,
        });
    }
    CorrespondenceSet {
        poses,
        observations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set_for(model: &CameraModel, n: usize, noise: f64, seed: u64) -> CorrespondenceSet {
        let cfg = SyntheticConfig {
            n_points: n,
            noise_px: noise,
            ..Default::default()
        };
        synthetic_correspondences(model, reference_geometry(), &cfg, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    #[test]
    fn self_consistent_mre_is_zero() {
        let m = reference_model(CameraKind::Ucm);
        let set = set_for(&m, 500, 0.0, 1);
        assert!(mean_reprojection_error(&m, &set).unwrap().mre < 1e-9);
    }

    #[test]
    fn noisy_mre_matches_rayleigh_mean() {
        let m = reference_model(CameraKind::Ucm);
        let set = set_for(&m, 2000, 0.25, 2);
        let expected = 0.25 * (std::f64::consts::PI / 2.0).sqrt();
        let mre = mean_reprojection_error(&m, &set).unwrap().mre;
        assert!((mre / expected - 1.0).abs() < 0.15, "mre {mre}");
    }

    #[test]
    fn truth_is_a_fixed_point() {
        let m = reference_model(CameraKind::Eucm);
        let set = set_for(&m, 300, 0.0, 3);
        let r = solve_intrinsics(&m, &set, &LmOptions::default()).unwrap();
        assert!(r.iterations <= 1);
        assert!(max_relative_error(&r.model, &m) < 1e-10);
        assert_eq!(r.trace.len(), r.iterations + 1);
    }

    #[test]
    fn noiseless_ucm_recovery_from_defaults() {
        let m = reference_model(CameraKind::Ucm);
        let set = set_for(&m, 400, 0.0, 4);
        let init = CameraModel::default_for_image(CameraKind::Ucm, reference_geometry());
        let r = solve_intrinsics(&init, &set, &LmOptions::default()).unwrap();
        assert!(r.converged);
        assert!(max_relative_error(&r.model, &m) < 1e-6, "{:?}", r.model);
        assert_eq!(r.trace.len(), r.iterations + 1);
        for w in r.trace.windows(2) {
            assert!(w[1].cost <= w[0].cost);
        }
    }

    #[test]
    fn eucm_recovers_from_ten_percent_perturbation() {
        let m = reference_model(CameraKind::Eucm);
        let set = set_for(&m, 400, 0.25, 5);
        let r = recalibrate(&m, 1.10, &set, &LmOptions::default()).unwrap();
        assert!(max_relative_error(&r.model, &m) < 0.03);
    }

    #[test]
    fn warm_start_gives_same_answer() {
        let m = reference_model(CameraKind::Eucm);
        let set = set_for(&m, 300, 0.0, 6);
        let a = recalibrate(&m, 1.05, &set, &LmOptions::default()).unwrap();
        let b = recalibrate(&m, 1.05, &set, &LmOptions::warm_start()).unwrap();
        assert!(max_relative_error(&a.model, &b.model) < 1e-8);
        assert!(b.iterations >= 10);
        assert_eq!(b.trace[10].params, b.trace[0].params);
    }

    #[test]
    fn perturb_examples() {
        let m = CameraModel::ucm(100.0, 100.0, 50.0, 50.0, 0.95);
        assert_eq!(perturb_params(&m, 1.0), m);
        let p = perturb_params(&m, 1.1);
        assert!((p.fx - 110.0).abs() < 1e-12);
        assert!(p.alpha < 1.0);
    }

    #[test]
    fn principal_ray_only_is_singular() {
        let m = reference_model(CameraKind::Ucm);
        let set = CorrespondenceSet {
            poses: vec![Pose::identity()],
            observations: (0..20)
                .map(|i| Observation {
                    point: Vector3::new(0.0, 0.0, 1.0 + i as f64),
                    pixel: Vector2::new(m.cx, m.cy),
                    pose_id: 0,
                })
                .collect(),
        };
        let init = perturb_params(&m, 1.05);
        assert_eq!(solve_intrinsics(&init, &set, &LmOptions::default()).unwrap_err(), CalibError::SingularNormalEquations);
    }

    #[test]
    fn ds_default_init_is_a_degenerate_point() {
        // at α = 0.5, ξ = 0 the ξ column equals -(fx·∂/∂fx + fy·∂/∂fy)
        let m = CameraModel::default_for_image(CameraKind::DoubleSphere, reference_geometry());
        let j = m.project_jacobians(&Vector3::new(0.3, -0.2, 1.1)).unwrap().params;
        let combo = -(m.fx * j.column(0) + m.fy * j.column(1));
        assert!((j.column(5) - combo).norm() < 1e-9 * combo.norm());
    }

    #[test]
    fn default_init_recovers_every_kind() {
        let geom = reference_geometry();
        for kind in [CameraKind::Ucm, CameraKind::Eucm, CameraKind::DoubleSphere] {
            let truth = reference_model(kind);
            for seed in 0..3 {
                let clean = set_for(&truth, 500, 0.0, seed);
                let r = calibrate_from_defaults(kind, geom, &clean, &LmOptions::default()).unwrap();
                assert!(max_relative_error(&r.model, &truth) < 1e-6, "{kind:?} seed {seed}");
                assert_eq!(r.trace.len(), r.iterations + 1);
                let noisy = set_for(&truth, 2000, 0.25, seed);
                let r = calibrate_from_defaults(kind, geom, &noisy, &LmOptions::default()).unwrap();
                assert!(r.mre < 1.0, "{kind:?} seed {seed}: mre {}", r.mre);
            }
        }
    }

    #[test]
    fn fixed_parameters_stay_put() {
        let truth = reference_model(CameraKind::DoubleSphere);
        let set = set_for(&truth, 300, 0.0, 4);
        let init = perturb_params(&truth, 1.05);
        let r = solve_pairs_fixed(&init, &set.camera_frame().unwrap(), &LmOptions::default(), &[5]).unwrap();
        assert_eq!(r.model.xi, init.xi);
        assert_ne!(r.model.fx, init.fx);
    }

    #[test]
    fn too_few_correspondences() {
        let m = reference_model(CameraKind::DoubleSphere);
        let set = set_for(&m, 3, 0.0, 7);
        assert!(matches!(
            solve_intrinsics(&m, &set, &LmOptions::default()),
            Err(CalibError::InsufficientData { needed: 6, got: 3 })
        ));
    }

    #[test]
    fn invalid_projections_are_penalized() {
        let m = CameraModel::pinhole(100.0, 100.0, 50.0, 50.0);
        let set = CorrespondenceSet {
            poses: vec![Pose::identity()],
            observations: vec![
                Observation { point: Vector3::new(0.0, 0.0, 1.0), pixel: Vector2::new(50.0, 50.0), pose_id: 0 },
                Observation { point: Vector3::new(0.0, 0.0, -1.0), pixel: Vector2::new(50.0, 50.0), pose_id: 0 },
            ],
        };
        let r = mean_reprojection_error(&m, &set).unwrap();
        assert_eq!(r.penalized, 1);
        assert!((r.mre - INVALID_PENALTY_PX / 2.0).abs() < 1e-12);
        let behind = CorrespondenceSet { observations: vec![set.observations[1]], ..set };
        assert_eq!(mean_reprojection_error(&m, &behind), Err(CalibError::AllInvalid));
    }
}
