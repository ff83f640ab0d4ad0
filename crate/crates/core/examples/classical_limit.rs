// Weak coupling, strong field: the exact electron spectrum approaches
// |J_k(2|g|)|² with g = α|β|.

use qew::interactions::{pinem_grid, pinem_ranges, PinemClassicalParams};
use qew::state::{polar, GridAxis};
use qew::Complex64;

pub fn run() -> qew::Result<()> {
    for (a, b) in [(0.01, 10.0), (0.02, 50.0), (0.2, 5.0)] {
        let alpha = polar(a, -std::f64::consts::FRAC_PI_2);
        let beta = Complex64::new(b, 0.0);
        let classical = PinemClassicalParams::from_alpha_beta(alpha, beta);
        let (n_range, k_range) = pinem_ranges(alpha, beta);
        let electron = pinem_grid(alpha, beta, n_range, k_range)?.marginalize(GridAxis::Second);
        let worst = k_range
            .iter()
            .map(|k| (electron.get(k) - classical.amplitude(k).norm_sqr()).abs())
            .fold(0.0, f64::max);
        println!(
            "|α| = {a}, |β| = {b}, |g| = {:.3}: max |P_exact − J²| = {worst:.3e}",
            classical.g.norm()
        );
        for k in -2..=2 {
            println!(
                "  k = {k:+}  exact {:.8}  Bessel {:.8}",
                electron.get(k),
                classical.amplitude(k).norm_sqr()
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
