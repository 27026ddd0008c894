use clap::Parser;
use fieldfuse::harness::cli::{run, Cli};

fn main() {
    if let Some(n) = std::env::var("FIELDFUSE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
    {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("fieldfuse: thread pool: {e}");
        }
    }
    if let Err(e) = run(Cli::parse()) {
        eprintln!("fieldfuse: {e}");
        std::process::exit(1);
    }
}
