//! Recover a similarity transform between two frames from noisy pose
//! pairs with outliers.

use fieldfuse::register::{
    random_similarity, registration_errors, solve_frame_transform, synthetic_correspondences,
    SyntheticSfmConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let truth = random_similarity(&mut ChaCha8Rng::seed_from_u64(1));
    let cfg = SyntheticSfmConfig {
        n_poses: 20,
        rotation_noise_deg: 0.5,
        translation_noise: 0.01,
        outlier_fraction: 0.2,
    };
    let pairs = synthetic_correspondences(&truth, &cfg, 2);
    let r = solve_frame_transform(&pairs).unwrap();
    let e = registration_errors(&r.transform, &truth);
    println!("truth scale {:.4}, estimate {:.4} (MAD {:.4})", truth.scale, r.transform.scale, r.scale_mad);
    println!("r_err {:.3} deg  t_err {:.4}  s_err {:.4}  success {}", e.r_err_deg, e.t_err, e.s_err, e.success());
}
