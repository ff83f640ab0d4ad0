// Beam-electron numbers at TEM voltages: how far the linear-dispersion
// picture holds and how much one interaction deflects the electron.

use qew::kinematics::{deflection, dispersion_distance_with, electron_from_voltage, BandwidthConvention};

pub fn run() -> qew::Result<()> {
    for kev in [30.0, 80.0, 200.0, 300.0] {
        let e = electron_from_voltage(kev)?;
        let half = dispersion_distance_with(&e, 5.825, BandwidthConvention::HalfWidth);
        let full = dispersion_distance_with(&e, 5.825, BandwidthConvention::FullWidth);
        let d = deflection(&e, 1.0, 1.1, 100.0);
        println!(
            "{kev:>5} keV  γ = {:.4}  v/c = {:.4}  pc = {:.2} keV  z(ΔE=5.825 eV) = {half:.3} mm ({full:.3} mm if full width)  θ/α = {:.3e}  x(100 µm) = {:.3} nm",
            e.gamma, e.velocity_fraction, e.momentum_times_c, d.theta_f, d.displacement
        );
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
