// The sampling check suite behind `ppgd check`, driven from code with a
// non-default instance size.

use ppgd::cli::write_check_table;
use ppgd::theory::{run_suite, CheckReport, SuiteConfig};

pub fn run_example(seed: u64) -> ppgd::Result<Vec<CheckReport>> {
    let reports = run_suite(SuiteConfig {
        seed,
        dim: 12,
        beta: 0.5,
        ..SuiteConfig::default()
    })?;
    let mut table = Vec::new();
    write_check_table(&mut table, &reports)?;
    print!("{}", String::from_utf8_lossy(&table));
    Ok(reports)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .map_or(Ok(0), |s| s.parse())
        .expect("seed");
    let reports = run_example(seed)?;
    if !reports.iter().all(CheckReport::passed) {
        std::process::exit(1);
    }
    Ok(())
}
