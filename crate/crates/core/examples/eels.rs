// Energy loss into an empty cavity: the electron spectrum is Poissonian
// with mean loss |α|², and every lost quantum ends up as a photon.

use qew::interactions::{eels_amplitude, eels_grid, eels_ranges};
use qew::state::{polar, GridAxis};

pub fn run() -> qew::Result<()> {
    for mag in [0.3, 0.8, 1.5] {
        let alpha = polar(mag, -std::f64::consts::FRAC_PI_2);
        let (n_range, _) = eels_ranges(alpha);
        let grid = eels_grid(alpha, n_range.max)?;
        let electron = grid.marginalize(GridAxis::Second);
        println!(
            "|α| = {mag}: total {:.15}, mean k = {:+.6} (−|α|² = {:+.6})",
            grid.total_probability(),
            electron.mean(),
            -mag * mag
        );
        for k in 0..4 {
            let c = eels_amplitude(alpha, k)?;
            println!("  c_{k} = {:+.6e} {:+.6e}i   |c|² = {:.6e}", c.re, c.im, c.norm_sqr());
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
