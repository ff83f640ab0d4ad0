// Coupling properties against fiber diameter for Si₃N₄ (n = 2.0) and
// Si (n = 3.5) cores, and the diameter that phase-matches 200 keV.

use qew::fiber::{coherence_length, phase_matched_diameter, solve_he11, sweep_diameter, FiberSpec};

pub fn run() -> qew::Result<()> {
    for (name, spec, lo, hi) in [
        ("Si3N4", FiberSpec::si3n4_1064(463.0)?, 300.0, 800.0),
        ("Si", FiberSpec::si_1064(213.0)?, 150.0, 400.0),
    ] {
        println!("{name}:  d (nm)   α_max   e⁻¹ (nm)   match (keV)   Lc200 (µm)");
        let diameters: Vec<f64> = (0..=10).map(|i| lo + (hi - lo) * i as f64 / 10.0).collect();
        for row in sweep_diameter(&spec, &diameters)? {
            match row.result {
                Ok((_, c)) => println!(
                    "      {:7.1}  {:6.3}  {:8.1}  {:11.1}  {:10.1}{}",
                    row.diameter,
                    c.alpha_max,
                    c.decay_length,
                    c.phase_matched_voltage.unwrap_or(f64::NAN),
                    c.coherence_length_200kev.value_um,
                    if c.coherence_length_200kev.capped {
                        " (capped)"
                    } else {
                        ""
                    }
                ),
                Err(e) => println!("      {:7.1}  {e}", row.diameter),
            }
        }
        let d = phase_matched_diameter(&spec, 200.0, lo, hi)?;
        let at = spec.with_diameter(d);
        let lc = coherence_length(&solve_he11(&at)?, &at, 200.0)?;
        println!(
            "  200 keV phase matching at d = {d:.2} nm, Lc = {} µm{}",
            lc.value_um,
            if lc.capped { " (capped)" } else { "" }
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
