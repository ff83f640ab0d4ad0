// Joint photon/electron distribution after one electron crosses a cavity
// holding the coherent state |β = 10⟩, for a few coupling strengths.
//
// Pass a path as the first argument to also write the last grid as CSV.

use qew::interactions::{pinem_grid, pinem_ranges};
use qew::state::{polar, GridAxis};
use qew::Complex64;

pub fn run() -> qew::Result<()> {
    spectrogram(None)
}

fn spectrogram(csv_path: Option<String>) -> qew::Result<()> {
    let beta = Complex64::new(10.0, 0.0);
    let mut last = None;
    for mag in [0.05, 0.1, 0.2, 0.5, 1.0] {
        let alpha = polar(mag, -std::f64::consts::FRAC_PI_2);
        let (n_range, k_range) = pinem_ranges(alpha, beta);
        let grid = pinem_grid(alpha, beta, n_range, k_range)?;
        let photons = grid.marginalize(GridAxis::First);
        let electron = grid.marginalize(GridAxis::Second);
        let widest = electron
            .range
            .iter()
            .filter(|k| electron.get(*k) > 1e-3)
            .fold((0, 0), |(lo, hi), k| (lo.min(k), hi.max(k)));
        println!(
            "|α| = {mag:<4}  grid {}x{}  total {:.12}  <n> = {:8.4}  <k> = {:+.4}  sidebands above 1e-3: {}..{}",
            n_range.len(),
            k_range.len(),
            grid.total_probability(),
            photons.mean(),
            electron.mean(),
            widest.0,
            widest.1
        );
        last = Some(grid);
    }
    if let (Some(path), Some(grid)) = (csv_path, last) {
        std::fs::write(&path, grid.to_csv())?;
        println!("wrote {path}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = spectrogram(std::env::args().nth(1)) {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
