//! Command-line front end. Every command reads an optional JSON config,
//! writes its artifacts into `--out` and finishes with `report.json`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::augment::{
    canonical_jitter, canonical_randomize, cloud_from_view, make_virtual_camera,
    project_cloud_to_view, sample_hemisphere_poses, JitterConfig, PointCloud,
};
use crate::blend::{blend_image, render_registered, BlendConfig, BlendMethod, RegisteredField};
use crate::calib::{
    calibrate_from_defaults, mean_reprojection_error, reference_geometry, reference_model, solve_intrinsics,
    synthetic_correspondences, CorrespondenceSet, LmOptions, Observation, SyntheticConfig,
};
use crate::camera::{Camera, CameraKind, CameraModel};
use crate::field::{render_image, Field, RenderSettings};
use crate::geometry::{rotation_geodesic_deg, Pose, SimTransform};
use crate::harness::experiments::{perturbation_sweep, run_experiment, PerturbationConfig};
use crate::harness::io::{read_json, read_pfm, read_png, to_json_string, write_json, write_pfm, write_png};
use crate::harness::metrics::{depth_metrics, psnr, ssim};
use crate::harness::scenes::{demo_scene, opaque_sphere_scene, random_scene, two_field_scene, wide_camera};
use crate::image::{ImageGeometry, RgbImage};
use crate::register::{
    random_similarity, registration_errors, solve_frame_transform,
    synthetic_correspondences as sfm_correspondences, PoseCorrespondence, SyntheticSfmConfig,
};

type BoxError = Box<dyn std::error::Error + Send + Sync>;
pub type CliResult<T> = Result<T, BoxError>;

#[derive(Debug, Parser)]
#[command(name = "fieldfuse", version, about = "Camera models, field rendering, registration and blending")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON config file; every field is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a built-in scene as JSON.
    SceneGen(Common),
    /// Render color, depth, accumulation and distant accumulation.
    Render(Common),
    /// Recover intrinsics from 2D-3D correspondences.
    Calibrate(Common),
    /// Perturb intrinsics and re-calibrate.
    PerturbRecover(Common),
    /// Pose sampling, canonical jittering/randomization and a virtual view.
    Augment(Common),
    /// Recover a similarity transform from pose correspondences.
    Register(Common),
    /// Blend registered fields into one view.
    Blend(BlendArgs),
    /// Image and depth metrics for files listed in the config.
    Eval(Common),
    /// Run a named experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct BlendArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub method: Option<BlendMethod>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "qd-cutoff")]
    pub qd_cutoff: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Experiment name; falls back to `name` in the config.
    pub name: Option<String>,
    #[command(flatten)]
    pub common: Common,
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::SceneGen(c) => scene_gen(&c),
        Command::Render(c) => render(&c),
        Command::Calibrate(c) => calibrate(&c),
        Command::PerturbRecover(c) => perturb_recover(&c),
        Command::Augment(c) => augment(&c),
        Command::Register(c) => register(&c),
        Command::Blend(b) => blend(&b),
        Command::Eval(c) => eval(&c),
        Command::Experiment(e) => experiment(&e),
    }
}

/// PSNR and SSIM; SSIM is `null` for images smaller than its window.
fn compare(a: &RgbImage, b: &RgbImage) -> CliResult<Value> {
    let p = psnr(a, b)?;
    let s = ssim(a, b).ok();
    Ok(json!({ "psnr": p, "ssim": s, "lpips": null }))
}

fn load_value(common: &Common) -> CliResult<Value> {
    match &common.config {
        Some(p) => Ok(read_json(p)?),
        None => Ok(Value::Null),
    }
}

fn load<T: DeserializeOwned + Default>(common: &Common) -> CliResult<T> {
    let v = load_value(common)?;
    if v.is_null() {
        return Ok(T::default());
    }
    Ok(serde_json::from_value(v)?)
}

fn prepare(common: &Common) -> CliResult<()> {
    std::fs::create_dir_all(&common.out).map_err(|e| format!("{}: {e}", common.out.display()))?;
    Ok(())
}

fn finish(common: &Common, command: &str, config: &impl Serialize, results: Value) -> CliResult<()> {
    let report = json!({
        "command": command,
        "seed": common.seed,
        "config": config,
        "results": results,
    });
    write_json(&common.out.join("report.json"), &report)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    Demo,
    Random,
    OpaqueSphere,
    TwoField,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneGenConfig {
    pub scene: SceneKind,
    pub primitives: usize,
}

impl Default for SceneGenConfig {
    fn default() -> Self {
        Self {
            scene: SceneKind::Demo,
            primitives: 8,
        }
    }
}

fn scene_gen(common: &Common) -> CliResult<()> {
    let cfg: SceneGenConfig = load(common)?;
    prepare(common)?;
    let results = match cfg.scene {
        SceneKind::TwoField => {
            let s = two_field_scene();
            write_json(&common.out.join("scene.json"), &s.truth)?;
            write_json(&common.out.join("fields.json"), &s.fields)?;
            write_json(&common.out.join("views.json"), &s.views)?;
            json!({ "primitives": s.truth.primitives.len(), "fields": s.fields.len(), "views": s.views.len() })
        }
        kind => {
            let field = match kind {
                SceneKind::Demo => demo_scene(),
                SceneKind::Random => random_scene(cfg.primitives, common.seed),
                _ => opaque_sphere_scene(),
            };
            field.validate()?;
            write_json(&common.out.join("scene.json"), &field)?;
            json!({ "primitives": field.primitives.len() })
        }
    };
    finish(common, "scene-gen", &cfg, results)
}

fn default_view() -> Pose {
    Pose::look_at(&Vector3::new(0.4, -2.4, 1.2), &Vector3::new(0.0, 0.0, -0.2), &Vector3::z())
        .expect("eye differs from target")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderConfig {
    /// Scene JSON; the demo scene when absent.
    pub scene: Option<PathBuf>,
    pub camera: Option<Camera>,
    pub pose: Pose,
    pub width: usize,
    pub height: usize,
    pub settings: RenderSettings,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            scene: None,
            camera: None,
            pose: default_view(),
            width: 64,
            height: 48,
            settings: RenderSettings::default(),
        }
    }
}

fn resolve_camera(camera: &Option<Camera>, width: usize, height: usize) -> Camera {
    camera.unwrap_or_else(|| {
        let geom = ImageGeometry::new(width, height);
        Camera::new(wide_camera(geom), geom)
    })
}

fn render(common: &Common) -> CliResult<()> {
    let cfg: RenderConfig = load(common)?;
    prepare(common)?;
    let field: Field = match &cfg.scene {
        Some(p) => read_json(p)?,
        None => demo_scene(),
    };
    field.validate()?;
    let camera = resolve_camera(&cfg.camera, cfg.width, cfg.height);
    camera.model.validate()?;
    let r = render_image(&field, &camera.model, &cfg.pose, camera.geometry(), &cfg.settings);
    write_png(&common.out.join("color.png"), &r.color)?;
    write_pfm(&common.out.join("depth.pfm"), &r.depth)?;
    write_pfm(&common.out.join("accumulation.pfm"), &r.accumulation)?;
    write_pfm(&common.out.join("distant_accumulation.pfm"), &r.distant_accumulation)?;
    let results = json!({
        "width": camera.width,
        "height": camera.height,
        "mean_accumulation": r.accumulation.mean(),
        "mean_qd": r.mean_qd,
        "mean_color": ([0, 1, 2].map(|c| r.color.channel(c).mean())),
    });
    finish(common, "render", &cfg, results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrateConfig {
    pub kind: CameraKind,
    /// Synthetic data drawn from the reference model when no files are given.
    pub synthetic: SyntheticConfig,
    /// JSON-lines correspondences and the JSON pose list they refer to.
    pub correspondences: Option<PathBuf>,
    pub poses: Option<PathBuf>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub init: Option<CameraModel>,
    pub lm: LmOptions,
}

impl Default for CalibrateConfig {
    fn default() -> Self {
        Self {
            kind: CameraKind::Ucm,
            synthetic: SyntheticConfig {
                noise_px: 0.25,
                ..Default::default()
            },
            correspondences: None,
            poses: None,
            width: None,
            height: None,
            init: None,
            lm: LmOptions::default(),
        }
    }
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(BoxError::from))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    let mut s = String::new();
    for item in items {
        s.push_str(&serde_json::to_string(item)?);
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

fn calibrate(common: &Common) -> CliResult<()> {
    let cfg: CalibrateConfig = load(common)?;
    prepare(common)?;
    let reference = reference_geometry();
    let geom = ImageGeometry::new(
        cfg.width.unwrap_or(reference.width),
        cfg.height.unwrap_or(reference.height),
    );
    let (set, truth) = match (&cfg.correspondences, &cfg.poses) {
        (Some(c), Some(p)) => {
            let observations: Vec<Observation> = read_jsonl(c)?;
            let poses: Vec<Pose> = read_json(p)?;
            (CorrespondenceSet { poses, observations }, None)
        }
        (None, None) => {
            let truth = reference_model(cfg.kind);
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            (synthetic_correspondences(&truth, reference, &cfg.synthetic, &mut rng), Some(truth))
        }
        _ => return Err("`correspondences` and `poses` must be given together".into()),
    };
    write_jsonl(&common.out.join("correspondences.jsonl"), &set.observations)?;
    write_json(&common.out.join("poses.json"), &set.poses)?;
    let result = match &cfg.init {
        Some(init) => solve_intrinsics(init, &set, &cfg.lm)?,
        None => calibrate_from_defaults(cfg.kind, geom, &set, &cfg.lm)?,
    };
    let truth_report = match &truth {
        Some(t) => json!({
            "params": t.params(),
            "mre": mean_reprojection_error(t, &set)?.mre,
            "max_rel_err": crate::calib::max_relative_error(&result.model, t),
        }),
        None => Value::Null,
    };
    let results = json!({
        "param_names": cfg.kind.param_names(),
        "observations": set.len(),
        "result": result,
        "truth": truth_report,
    });
    finish(common, "calibrate", &cfg, results)
}

fn perturb_recover(common: &Common) -> CliResult<()> {
    let cfg: PerturbationConfig = load(common)?;
    prepare(common)?;
    let results = perturbation_sweep(&cfg, common.seed)?;
    finish(common, "perturb-recover", &cfg, results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub n_poses: usize,
    pub radius: f64,
    pub sigma_t: f64,
    pub sigma_r: f64,
    pub sigma_v: f64,
    /// Views lifted into the colored point cloud.
    pub source_views: usize,
    pub width: usize,
    pub n_samples: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let j = JitterConfig::default();
        Self {
            n_poses: 8,
            radius: 2.5,
            sigma_t: j.sigma_t,
            sigma_r: j.sigma_r,
            sigma_v: j.sigma_v,
            source_views: 2,
            width: 32,
            n_samples: 128,
        }
    }
}

fn max_pairwise_drift(a: &[Pose], b: &[Pose]) -> (f64, f64) {
    let mut dist: f64 = 0.0;
    let mut angle: f64 = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = (a[i].center() - a[j].center()).norm();
            let db = (b[i].center() - b[j].center()).norm();
            dist = dist.max((da - db).abs());
            let ra = rotation_geodesic_deg(&a[i].rotation(), &a[j].rotation());
            let rb = rotation_geodesic_deg(&b[i].rotation(), &b[j].rotation());
            angle = angle.max((ra - rb).abs());
        }
    }
    (dist, angle)
}

fn augment(common: &Common) -> CliResult<()> {
    let cfg: AugmentConfig = load(common)?;
    if cfg.n_poses == 0 || cfg.width == 0 {
        return Err("n_poses and width must be positive".into());
    }
    prepare(common)?;
    let seed = common.seed;
    let jitter_cfg = JitterConfig {
        sigma_t: cfg.sigma_t,
        sigma_r: cfg.sigma_r,
        sigma_v: cfg.sigma_v,
        seed: seed.wrapping_add(1),
    };
    let trajectory = sample_hemisphere_poses(cfg.n_poses, cfg.radius, seed);
    let jittered = canonical_jitter(&trajectory, &jitter_cfg);
    let randomized = canonical_randomize(&trajectory, seed.wrapping_add(2));

    let field = demo_scene();
    let geom = ImageGeometry::new(cfg.width, cfg.width);
    let model = wide_camera(geom);
    let settings = RenderSettings {
        n_samples: cfg.n_samples,
        ..Default::default()
    };
    let mut cloud = PointCloud::default();
    for pose in trajectory.poses.iter().take(cfg.source_views) {
        let r = render_image(&field, &model, pose, geom, &settings);
        // expected depth is a range along unit bearings
        cloud.extend(&cloud_from_view(&r.color, &r.depth, &model, pose));
    }
    let virtual_pose = make_virtual_camera(&trajectory.poses[0], &cloud.centroid(), &jitter_cfg)?;
    let sparse = project_cloud_to_view(&cloud, &virtual_pose, &model, geom);
    write_json(&common.out.join("trajectory.json"), &trajectory)?;
    write_json(&common.out.join("jittered.json"), &jittered)?;
    write_json(&common.out.join("randomized.json"), &randomized)?;
    write_json(&common.out.join("virtual.json"), &virtual_pose)?;
    write_png(&common.out.join("virtual.png"), &sparse.color)?;

    let (jd, ja) = max_pairwise_drift(&trajectory.poses, &jittered.poses);
    let (rd, ra) = max_pairwise_drift(&trajectory.poses, &randomized.poses);
    let results = json!({
        "jitter_max_distance_change": jd,
        "jitter_max_angle_change_deg": ja,
        "randomize_max_distance_change": rd,
        "randomize_max_angle_change_deg": ra,
        "randomize_canonical": randomized.canonical,
        "cloud_points": cloud.points.len(),
        "virtual_valid_pixels": sparse.valid_count(),
    });
    finish(common, "augment", &cfg, results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RegisterConfig {
    /// Local/shared pose pairs; synthetic when absent.
    pub correspondences: Option<PathBuf>,
    /// Ground truth for error reporting; drawn from the seed when synthetic.
    pub truth: Option<SimTransform>,
    pub sfm: SyntheticSfmConfig,
}

impl Default for RegisterConfig {
    fn default() -> Self {
        Self {
            correspondences: None,
            truth: None,
            sfm: SyntheticSfmConfig {
                n_poses: 20,
                rotation_noise_deg: 0.5,
                translation_noise: 0.01,
                outlier_fraction: 0.2,
            },
        }
    }
}

fn register(common: &Common) -> CliResult<()> {
    let cfg: RegisterConfig = load(common)?;
    prepare(common)?;
    let (pairs, truth): (Vec<PoseCorrespondence>, Option<SimTransform>) = match &cfg.correspondences {
        Some(p) => (read_json(p)?, cfg.truth),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
            let truth = cfg.truth.unwrap_or_else(|| random_similarity(&mut rng));
            (sfm_correspondences(&truth, &cfg.sfm, common.seed.wrapping_add(1)), Some(truth))
        }
    };
    write_json(&common.out.join("correspondences.json"), &pairs)?;
    let result = solve_frame_transform(&pairs)?;
    write_json(&common.out.join("transform.json"), &result.transform)?;
    let errors = truth.map(|t| registration_errors(&result.transform, &t));
    let results = json!({
        "pairs": pairs.len(),
        "result": result,
        "truth": truth,
        "errors": errors,
        "success": errors.map(|e| e.success()),
    });
    finish(common, "register", &cfg, results)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BlendCliConfig {
    /// JSON list of registered fields; the two-field scene when absent.
    pub fields: Option<PathBuf>,
    /// Global-frame reference scene for metrics.
    pub reference: Option<PathBuf>,
    pub camera: Option<Camera>,
    pub pose: Option<Pose>,
    pub width: usize,
    pub blend: BlendConfig,
}

impl Default for BlendCliConfig {
    fn default() -> Self {
        Self {
            fields: None,
            reference: None,
            camera: None,
            pose: None,
            width: 48,
            blend: BlendConfig {
                render: RenderSettings {
                    n_samples: 128,
                    ..Default::default()
                },
                ..Default::default()
            },
        }
    }
}

fn blend(args: &BlendArgs) -> CliResult<()> {
    let common = &args.common;
    let mut cfg: BlendCliConfig = load(common)?;
    if let Some(m) = args.method {
        cfg.blend.method = m;
    }
    if let Some(g) = args.gamma {
        cfg.blend.gamma = g;
    }
    if let Some(t) = args.tau {
        cfg.blend.tau = t;
    }
    if let Some(q) = args.qd_cutoff {
        cfg.blend.render.qd_cutoff = q;
    }
    cfg.blend.validate()?;
    prepare(common)?;
    let builtin = two_field_scene();
    let (fields, reference): (Vec<RegisteredField>, Option<Field>) = match &cfg.fields {
        Some(p) => (
            read_json(p)?,
            cfg.reference.as_ref().map(|r| read_json(r)).transpose()?,
        ),
        None => (builtin.fields.clone(), Some(builtin.truth.clone())),
    };
    let camera = resolve_camera(&cfg.camera, cfg.width, cfg.width);
    let geom = camera.geometry();
    let pose = cfg.pose.unwrap_or(builtin.views[0]);
    let out = blend_image(&fields, &camera.model, &pose, geom, &cfg.blend)?;
    write_png(&common.out.join("blend.png"), &out.color)?;

    let mut per_field = Vec::new();
    for (k, f) in fields.iter().enumerate() {
        let solo = render_registered(f, &camera.model, &pose, geom, &cfg.blend.render);
        let local_pose = f.to_global.inverse().transform_pose(&pose);
        let qd = render_image(&f.field, &camera.model, &local_pose, geom, &cfg.blend.render).mean_qd;
        per_field.push((k, solo, qd));
    }
    let reference_image = reference
        .as_ref()
        .map(|r| render_image(r, &camera.model, &pose, geom, &cfg.blend.render).color);
    let fields_report: Vec<Value> = per_field
        .iter()
        .map(|(k, solo, qd)| {
            let m = reference_image.as_ref().map(|r| compare(solo, r)).transpose()?;
            Ok(json!({
                "index": k,
                "center": fields[*k].center(),
                "mean_qd": qd,
                "metrics": m,
            }))
        })
        .collect::<CliResult<_>>()?;
    let blended = reference_image
        .as_ref()
        .map(|r| compare(&out.color, r))
        .transpose()?;
    let results = json!({
        "method": cfg.blend.method.name(),
        "kept": out.kept,
        "zero_mass_pixels": out.zero_mass_pixels,
        "metrics": blended,
        "fields": fields_report,
    });
    finish(common, "blend", &cfg, results)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ImagePair {
    pub image: PathBuf,
    pub reference: PathBuf,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DepthPair {
    pub pred: PathBuf,
    pub gt: PathBuf,
    #[serde(default)]
    pub median_scale: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub images: Vec<ImagePair>,
    pub depths: Vec<DepthPair>,
}

fn eval(common: &Common) -> CliResult<()> {
    if common.config.is_none() {
        return Err("eval needs --config listing image and depth pairs".into());
    }
    let cfg: EvalConfig = load(common)?;
    prepare(common)?;
    let mut images = Vec::new();
    for p in &cfg.images {
        let m = compare(&read_png(&p.image)?, &read_png(&p.reference)?)?;
        images.push(json!({ "image": p.image, "reference": p.reference, "metrics": m }));
    }
    let mut depths = Vec::new();
    for p in &cfg.depths {
        let pred = read_pfm(&p.pred)?;
        let gt = read_pfm(&p.gt)?;
        let mask: Vec<bool> = gt.pixels.iter().map(|d| *d > 0.0).collect();
        let m = depth_metrics(&pred, &gt, &mask, p.median_scale)?;
        depths.push(json!({ "pred": p.pred, "gt": p.gt, "metrics": m }));
    }
    finish(common, "eval", &cfg, json!({ "images": images, "depths": depths }))
}

fn experiment(args: &ExperimentArgs) -> CliResult<()> {
    let common = &args.common;
    let config = load_value(common)?;
    let name = args
        .name
        .clone()
        .or_else(|| config.get("name").and_then(Value::as_str).map(str::to_string))
        .ok_or("experiment name missing: pass it positionally or as `name` in the config")?;
    prepare(common)?;
    let report = run_experiment(&name, &config, common.seed)?;
    std::fs::write(common.out.join("report.json"), to_json_string(&report)?)
        .map_err(|e| format!("{}: {e}", common.out.display()))?;
    Ok(())
}
