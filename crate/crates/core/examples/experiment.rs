//! Run a named experiment and print its JSON report.
//!
//! ```text
//! cargo run --release --example experiment -- registration-monte-carlo 0
//! ```

use fieldfuse::harness::experiments::{run_experiment, EXPERIMENTS};
use fieldfuse::harness::io::to_json_string;
use serde_json::Value;

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "filter-threshold-sweep".to_string());
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    match run_experiment(&name, &Value::Null, seed) {
        Ok(report) => print!("{}", to_json_string(&report).unwrap()),
        Err(e) => {
            eprintln!("{e}; available: {}", EXPERIMENTS.join(", "));
            std::process::exit(1);
        }
    }
}
