// Sweep the mobility floor δ₀ and compare costs. Smaller δ₀ makes the
// mobility ratio larger, so the inner solves (and the FFT bill) grow while
// the outer iteration count stays put.
//
// ```bash
// PPGD_THREADS=3 cargo run --release --example mobility_sweep -- out/sweep
// ```

use std::path::Path;

use ppgd::cli::{sweep_config, RunConfig, SweepReport};

pub fn run_example(n: usize, out_dir: &Path) -> ppgd::Result<SweepReport> {
    let config = RunConfig {
        n,
        ..RunConfig::default()
    };
    let report = sweep_config(&config, &[0.1, 0.01, 0.001], out_dir)?;
    println!(
        "{:>8} {:>6} {:>8} {:>8} {:>8}",
        "δ₀", "outer", "inner", "ffts", "secs"
    );
    for r in &report.rows {
        println!(
            "{:>8} {:>6} {:>8} {:>8} {:>8.3}",
            r.delta0, r.outer_iters, r.inner_iters_total, r.fft_count, r.wall_time_s
        );
    }
    for (d, e) in &report.failures {
        println!("δ₀ = {d} failed: {e}");
    }
    println!("traces and final fields in {}", out_dir.display());
    Ok(report)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/sweep".into());
    run_example(128, Path::new(&out)).map(drop)
}
