// HE11 mode of a silicon-nitride fiber at 1064 nm: propagation constant,
// a radial field cut, and the coupling to a passing electron.

use std::f64::consts::FRAC_PI_2;

use qew::fiber::{
    coupling_alpha_max, field_at, mode_energy, normalize_per_photon, solve_he11, FiberSpec, FieldComponent,
};

pub fn run() -> qew::Result<()> {
    let spec = FiberSpec::si3n4_1064(463.0)?;
    let mode = normalize_per_photon(&solve_he11(&spec)?, &spec)?;
    println!(
        "d = {} nm  V = {:.4}  β = {:.6e} /nm  u = {:.6}  w = {:.6}  v_ph/c = {:.4}  residual {:.1e}",
        spec.diameter(),
        spec.v_number(),
        mode.beta_prop,
        mode.u,
        mode.w,
        mode.phase_velocity_fraction,
        mode.residual
    );
    let photon = spec.photon_energy() * qew::fiber::ELEMENTARY_CHARGE;
    println!("stored energy / ħω = {:.12}", mode_energy(&mode, &spec)? / photon);

    println!("   r/a      E_z (V/m)    E_φ (V/m)   Z₀H_r (V/m)");
    for i in 0..=8 {
        let r = spec.core_radius * i as f64 * 0.25;
        println!(
            "  {:4.2}  {:12.4e} {:12.4e} {:12.4e}",
            r / spec.core_radius,
            field_at(&mode, &spec, r, FRAC_PI_2, FieldComponent::Ez)?,
            field_at(&mode, &spec, r, 0.0, FieldComponent::Ephi)?,
            field_at(&mode, &spec, r, 0.0, FieldComponent::Hr)?
        );
    }

    let c = coupling_alpha_max(&mode, &spec)?;
    println!(
        "α_max(L = {} µm) = {:.4}  E_z(a⁺) = {:.4e} V/m  e⁻¹ distance = {:.1} nm  matched at {:.1} keV",
        spec.normalization_length,
        c.alpha_max,
        c.surface_field_per_photon,
        c.decay_length,
        c.phase_matched_voltage.unwrap_or(f64::NAN)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
