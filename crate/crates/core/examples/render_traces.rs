// Write traces for two grid sizes and plot them together. The SVGs and the
// tidy `series.csv` land in `<out>/plots`.

use std::path::{Path, PathBuf};

use ppgd::cli::{read_trace, render, run_config, RunConfig};

pub fn run_example(out_dir: &Path) -> ppgd::Result<Vec<PathBuf>> {
    let mut traces = Vec::new();
    for n in [32, 64] {
        let dir = out_dir.join(format!("n{n}"));
        run_config(
            &RunConfig {
                n,
                ..RunConfig::default()
            },
            &dir,
        )?;
        let path = dir.join("trace.csv");
        let rows = read_trace(&path)?;
        println!(
            "n = {n}: {} rows, final residual {:.2e}",
            rows.len(),
            rows.last().map_or(f64::NAN, |r| r.residual_l_norm)
        );
        traces.push(path);
    }
    let files = render(&traces, &out_dir.join("plots"))?;
    for f in &files {
        println!("wrote {}", f.display());
    }
    Ok(files)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "out/render".into());
    run_example(Path::new(&out)).map(drop)
}
