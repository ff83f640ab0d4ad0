// Two electrons cross the same initially empty mode. The first leaves `s`
// photons behind, which the second can absorb or add to.

use qew::interactions::{pinem_coefficient, two_electron_coefficient, two_electron_grid, two_electron_ranges};
use qew::state::{polar, GridAxis};

pub fn run() -> qew::Result<()> {
    for mag in [0.5, 1.0, 2.0] {
        let a = polar(mag, -std::f64::consts::FRAC_PI_2);
        let (s_range, k_range) = two_electron_ranges(a, a);
        let grid = two_electron_grid(a, a, s_range, k_range)?;
        let first = grid.marginalize(GridAxis::First);
        let second = grid.marginalize(GridAxis::Second);
        println!(
            "α₁ = α₂ = {mag}i·(−1): total {:.12}  <s> = {:.4}  <k> = {:+.4}  P(second gains) = {:.4}",
            grid.total_probability(),
            first.mean(),
            second.mean(),
            k_range.iter().filter(|k| *k > 0).map(|k| second.get(k)).sum::<f64>()
        );
    }

    // The same numbers, read off a single-passage table with the photon
    // index sheared to n = s − k.
    let a1 = polar(1.3, -std::f64::consts::FRAC_PI_2);
    let a2 = polar(0.7, -std::f64::consts::FRAC_PI_2);
    let (s, k) = (5, 2);
    let direct = two_electron_coefficient(a1, a2, s, k)?;
    let sheared = pinem_coefficient(a2, a1, s - k as u64, k)?;
    println!("c_(s={s},k={k}) = {direct:.12e}, via n = s − k: {sheared:.12e}");
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
