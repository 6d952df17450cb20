// Fourier collocation basics: transforms, symbols and the norms used by the
// solver, checked against closed forms for a single mode
// `v = sin(2πx/ℓ)cos(4πy/ℓ)`, for which `−Δv = |k|²v` with `|k|² = 20π²/ℓ²`.

use std::f64::consts::PI;

use ppgd::spectral::{FourierSymbol, Grid, SpectralContext, SpectralField};

pub fn run_example(n: usize) -> ppgd::Result<f64> {
    let length = 2.0;
    let grid = Grid::new(n, length)?;
    let ctx = SpectralContext::new(grid);
    let w = 2.0 * PI / length;
    let v = SpectralField::from_fn(grid, |x, y| (w * x).sin() * (2.0 * w * y).cos());
    let k2 = 5.0 * w * w;
    let area = length * length;

    let lap = FourierSymbol::neg_laplacian(grid).apply(&ctx, &v)?;
    let lap_err = lap.max_abs_diff(&v.map(|x| k2 * x));
    let l2 = ctx.l2_norm(&v)?;
    let rows = [
        ("‖v‖_L²", l2, (area / 4.0).sqrt()),
        ("‖∇v‖_L²", ctx.h1_seminorm(&v)?, (k2 * area / 4.0).sqrt()),
        ("‖v‖_H⁻¹", ctx.hm1_norm(&v)?, (area / 4.0 / k2).sqrt()),
        (
            "‖v‖_𝓛 (λ=1, γ=0)",
            ctx.preconditioner_norm(&v, 1.0, 0.0)?,
            ((1.0 / k2 + k2) * area / 4.0).sqrt(),
        ),
        ("‖v‖_L⁴", ctx.l4_norm(&v)?, (9.0 / 64.0 * area).powf(0.25)),
    ];
    let mut worst = lap_err;
    println!("max |−Δv − |k|²v| = {lap_err:.2e}");
    for (name, got, want) in rows {
        println!("{name:<20} {got:>14.10} (exact {want:.10})");
        worst = worst.max((got - want).abs());
    }
    println!("{} FFTs", ctx.fft_count());
    Ok(worst)
}

#[allow(dead_code)]
fn main() -> ppgd::Result<()> {
    run_example(32).map(drop)
}
