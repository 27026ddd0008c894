//! Experiment drivers. Each one is a pure function of `(config, seed)` and
//! returns a JSON report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::blend::{blend_image, render_registered, BlendConfig, BlendMethod};
use crate::calib::{
    calibrate_from_defaults, max_relative_error, mean_reprojection_error, perturb_params, recalibrate,
    reference_geometry, reference_model, synthetic_correspondences, CalibError, LmOptions,
    SyntheticConfig,
};
use crate::camera::{CameraKind, CameraModel};
use crate::field::{render_image, RenderSettings};
use crate::harness::metrics::psnr;
use crate::harness::scenes::{filter_scene, two_field_scene, wide_camera};
use crate::image::ImageGeometry;
use crate::register::{
    random_similarity, registration_errors, solve_frame_transform, synthetic_correspondences as sfm_correspondences,
    SyntheticSfmConfig,
};

pub const EXPERIMENTS: [&str; 5] = [
    "calib-recovery",
    "perturbation-sweep",
    "registration-monte-carlo",
    "gamma-sweep",
    "filter-threshold-sweep",
];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("unknown experiment `{0}` (expected one of {EXPERIMENTS:?})")]
    UnknownExperiment(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Calib(#[from] CalibError),
}

fn parse<T: for<'de> Deserialize<'de> + Default>(config: &Value) -> Result<T, ExperimentError> {
    if config.is_null() {
        return Ok(T::default());
    }
    let mut obj = config.clone();
    if let Some(map) = obj.as_object_mut() {
        map.remove("name");
    }
    serde_json::from_value(obj).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))
}

pub fn run_experiment(name: &str, config: &Value, seed: u64) -> Result<Value, ExperimentError> {
    let (cfg, results) = match name {
        "calib-recovery" => {
            let c: CalibRecoveryConfig = parse(config)?;
            (json!(c), calib_recovery(&c, seed)?)
        }
        "perturbation-sweep" => {
            let c: PerturbationConfig = parse(config)?;
            (json!(c), perturbation_sweep(&c, seed)?)
        }
        "registration-monte-carlo" => {
            let c: RegistrationMcConfig = parse(config)?;
            (json!(c), registration_monte_carlo(&c, seed))
        }
        "gamma-sweep" => {
            let c: GammaSweepConfig = parse(config)?;
            (json!(c), gamma_sweep(&c)?)
        }
        "filter-threshold-sweep" => {
            let c: FilterSweepConfig = parse(config)?;
            (json!(c), filter_threshold_sweep(&c, seed))
        }
        other => return Err(ExperimentError::UnknownExperiment(other.to_string())),
    };
    Ok(json!({
        "experiment": name,
        "seed": seed,
        "config": cfg,
        "results": results,
    }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibRecoveryConfig {
    pub kinds: Vec<CameraKind>,
    pub noiseless_points: usize,
    pub noisy_points: usize,
    pub noise_px: f64,
}

impl Default for CalibRecoveryConfig {
    fn default() -> Self {
        Self {
            kinds: vec![CameraKind::Ucm, CameraKind::Eucm, CameraKind::DoubleSphere],
            noiseless_points: 500,
            noisy_points: 2000,
            noise_px: 0.25,
        }
    }
}

pub fn calib_recovery(cfg: &CalibRecoveryConfig, seed: u64) -> Result<Value, ExperimentError> {
    let geom = reference_geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &kind in &cfg.kinds {
        let truth = reference_model(kind);
        let clean = synthetic_correspondences(
            &truth,
            geom,
            &SyntheticConfig {
                n_points: cfg.noiseless_points,
                ..Default::default()
            },
            &mut rng,
        );
        let noisy = synthetic_correspondences(
            &truth,
            geom,
            &SyntheticConfig {
                n_points: cfg.noisy_points,
                noise_px: cfg.noise_px,
                ..Default::default()
            },
            &mut rng,
        );
        let a = calibrate_from_defaults(kind, geom, &clean, &LmOptions::default())?;
        let b = calibrate_from_defaults(kind, geom, &noisy, &LmOptions::default())?;
        rows.push(json!({
            "kind": kind,
            "truth": truth.params(),
            "initial": CameraModel::default_for_image(kind, geom).params(),
            "noiseless": {
                "params": a.model.params(),
                "max_rel_err": max_relative_error(&a.model, &truth),
                "iterations": a.iterations,
                "mre": a.mre,
            },
            "noisy": {
                "params": b.model.params(),
                "max_rel_err": max_relative_error(&b.model, &truth),
                "iterations": b.iterations,
                "mre": b.mre,
                "mre_at_truth": mean_reprojection_error(&truth, &noisy)?.mre,
            },
        }));
    }
    Ok(Value::Array(rows))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationConfig {
    pub kind: CameraKind,
    pub factors: Vec<f64>,
    pub n_points: usize,
    pub noise_px: f64,
    pub warm_start: bool,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            kind: CameraKind::Eucm,
            factors: vec![1.10, 1.05, 0.95, 0.90],
            n_points: 2000,
            noise_px: 0.25,
            warm_start: true,
        }
    }
}

pub fn perturbation_sweep(cfg: &PerturbationConfig, seed: u64) -> Result<Value, ExperimentError> {
    let truth = reference_model(cfg.kind);
    let set = synthetic_correspondences(
        &truth,
        reference_geometry(),
        &SyntheticConfig {
            n_points: cfg.n_points,
            noise_px: cfg.noise_px,
            ..Default::default()
        },
        &mut ChaCha8Rng::seed_from_u64(seed),
    );
    let options = if cfg.warm_start {
        LmOptions::warm_start()
    } else {
        LmOptions::default()
    };
    let mut rows = Vec::new();
    for &factor in &cfg.factors {
        let r = recalibrate(&truth, factor, &set, &options)?;
        let per_param: Vec<f64> = r
            .model
            .params()
            .iter()
            .zip(truth.params())
            .map(|(e, t)| (e - t).abs() / t.abs())
            .collect();
        rows.push(json!({
            "factor": factor,
            "initial": perturb_params(&truth, factor).params(),
            "params": r.model.params(),
            "rel_err": per_param,
            "max_rel_err": max_relative_error(&r.model, &truth),
            "mre": r.mre,
            "iterations": r.iterations,
            "trace": r.trace,
        }));
    }
    Ok(json!({ "kind": cfg.kind, "truth": truth.params(), "runs": rows }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationMcConfig {
    pub trials: usize,
    pub sfm: SyntheticSfmConfig,
}

impl Default for RegistrationMcConfig {
    fn default() -> Self {
        Self {
            trials: 100,
            sfm: SyntheticSfmConfig {
                n_poses: 20,
                rotation_noise_deg: 0.5,
                translation_noise: 0.01,
                outlier_fraction: 0.2,
            },
        }
    }
}

pub fn registration_monte_carlo(cfg: &RegistrationMcConfig, seed: u64) -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trial_seeds: Vec<u64> = (0..cfg.trials).map(|_| rng.random()).collect();
    let trials: Vec<Value> = trial_seeds
        .par_iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut trng = ChaCha8Rng::seed_from_u64(s);
            let truth = random_similarity(&mut trng);
            let corr = sfm_correspondences(&truth, &cfg.sfm, trng.random());
            match solve_frame_transform(&corr) {
                Ok(r) => {
                    let e = registration_errors(&r.transform, &truth);
                    json!({ "trial": k, "errors": e, "success": e.success() })
                }
                Err(err) => json!({ "trial": k, "error": err.to_string(), "success": false }),
            }
        })
        .collect();
    let successes = trials.iter().filter(|t| t["success"] == json!(true)).count();
    json!({ "successes": successes, "trials": trials })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GammaSweepConfig {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub count: usize,
    pub methods: Vec<BlendMethod>,
    pub width: usize,
    pub n_samples: usize,
}

impl Default for GammaSweepConfig {
    fn default() -> Self {
        Self {
            gamma_min: 1e-2,
            gamma_max: 1e3,
            count: 11,
            methods: BlendMethod::ALL.to_vec(),
            width: 40,
            n_samples: 96,
        }
    }
}

/// `count` values geometrically spaced on `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect(),
    }
}

pub fn gamma_sweep(cfg: &GammaSweepConfig) -> Result<Value, ExperimentError> {
    if !(cfg.gamma_min > 0.0 && cfg.gamma_max >= cfg.gamma_min) || cfg.width < 1 {
        return Err(ExperimentError::InvalidConfig("need 0 < gamma_min <= gamma_max and width >= 1".into()));
    }
    let scene = two_field_scene();
    let geom = ImageGeometry::new(cfg.width, cfg.width);
    let model = wide_camera(geom);
    let render = RenderSettings {
        n_samples: cfg.n_samples,
        ..Default::default()
    };
    let truths: Vec<_> = scene
        .views
        .iter()
        .map(|v| render_image(&scene.truth, &model, v, geom, &render).color)
        .collect();
    let mean_psnr = |images: &[crate::image::RgbImage]| -> f64 {
        images
            .iter()
            .zip(&truths)
            .map(|(a, b)| psnr(a, b).expect("same size"))
            .sum::<f64>()
            / images.len() as f64
    };
    let solo: Vec<f64> = scene
        .fields
        .iter()
        .map(|f| {
            let imgs: Vec<_> = scene
                .views
                .iter()
                .map(|v| render_registered(f, &model, v, geom, &render))
                .collect();
            mean_psnr(&imgs)
        })
        .collect();
    let gammas = geometric_grid(cfg.gamma_min, cfg.gamma_max, cfg.count);
    let mut curves = serde_json::Map::new();
    for &method in &cfg.methods {
        let mut curve = Vec::new();
        for &gamma in &gammas {
            let bc = BlendConfig {
                method,
                gamma,
                render,
                ..Default::default()
            };
            let imgs: Vec<_> = scene
                .views
                .iter()
                .map(|v| {
                    blend_image(&scene.fields, &model, v, geom, &bc)
                        .map(|o| o.color)
                        .map_err(|e| ExperimentError::InvalidConfig(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            curve.push(json!({ "gamma": gamma, "psnr": mean_psnr(&imgs) }));
        }
        curves.insert(method.name().to_string(), Value::Array(curve));
    }
    Ok(json!({ "solo_psnr": solo, "curves": curves }))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSweepConfig {
    pub n_poses: usize,
    pub inside_stride: usize,
    pub thresholds: Vec<f64>,
    pub width: usize,
    pub n_samples: usize,
    pub qd_cutoff: f64,
}

impl Default for FilterSweepConfig {
    fn default() -> Self {
        Self {
            n_poses: 24,
            inside_stride: 4,
            thresholds: (0..=10).map(|k| k as f64 / 10.0).collect(),
            width: 24,
            n_samples: 128,
            qd_cutoff: 0.3,
        }
    }
}

pub fn filter_threshold_sweep(cfg: &FilterSweepConfig, seed: u64) -> Value {
    let scene = filter_scene(cfg.n_poses, cfg.inside_stride, seed);
    let geom = ImageGeometry::new(cfg.width, cfg.width);
    let model = wide_camera(geom);
    let settings = RenderSettings {
        n_samples: cfg.n_samples,
        qd_cutoff: cfg.qd_cutoff,
        ..Default::default()
    };
    let qualities: Vec<f64> = scene
        .poses
        .iter()
        .map(|p| render_image(&scene.field, &model, p, geom, &settings).mean_qd)
        .collect();
    let sweep: Vec<Value> = cfg
        .thresholds
        .iter()
        .map(|&theta| {
            let kept: Vec<usize> = (0..qualities.len()).filter(|&k| qualities[k] >= theta).collect();
            let inside_kept = kept.iter().filter(|&&k| scene.inside[k]).count();
            json!({
                "threshold": theta,
                "kept": kept.len(),
                "inside_kept": inside_kept,
                "usable": kept.len() >= 2,
            })
        })
        .collect();
    let poses: Vec<Value> = qualities
        .iter()
        .zip(&scene.inside)
        .map(|(q, i)| json!({ "mean_qd": q, "inside": i }))
        .collect();
    json!({ "poses": poses, "sweep": sweep })
}
