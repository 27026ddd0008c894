//! Start EUCM calibration from intrinsics scaled by 0.90..1.10 and watch the
//! solver pull them back.

use fieldfuse::harness::experiments::{perturbation_sweep, PerturbationConfig};

fn main() {
    let report = perturbation_sweep(&PerturbationConfig::default(), 0).expect("sweep runs");
    for run in report["runs"].as_array().unwrap() {
        let trace = run["trace"].as_array().unwrap();
        println!(
            "factor {:.2}: cost {:.3e} -> {:.3e} over {} iterations, worst relative error {:.3}%",
            run["factor"].as_f64().unwrap(),
            trace.first().unwrap()["cost"].as_f64().unwrap(),
            trace.last().unwrap()["cost"].as_f64().unwrap(),
            run["iterations"],
            100.0 * run["max_rel_err"].as_f64().unwrap(),
        );
    }
}
