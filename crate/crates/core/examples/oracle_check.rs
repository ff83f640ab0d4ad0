// Every closed form against `exp(α b̂ â† − α* b̂† â)` on a truncated basis.

use qew::oracle::{check_eels, check_pinem, check_two_electron, OracleReport};
use qew::state::polar;
use qew::Complex64;

fn show(label: &str, r: &OracleReport) {
    println!(
        "{label:<28} states {:>6}  compared {:>6}  max err {:.2e}  leak {:.1e}  edge {:.1e}",
        r.basis_states, r.cells_compared, r.max_abs_error, r.norm_leak, r.edge_weight
    );
    for w in &r.warnings {
        println!("    warning: {w}");
    }
}

pub fn run() -> qew::Result<()> {
    let im = |m: f64| polar(m, -std::f64::consts::FRAC_PI_2);
    for m in [0.3, 0.8, 1.5] {
        show(&format!("eels |α|={m}"), &check_eels(im(m))?);
    }
    for (a, b) in [(0.1, 2.0), (0.5, 3.0)] {
        show(
            &format!("pinem |α|={a} |β|={b}"),
            &check_pinem(im(a), Complex64::new(b, 0.0))?,
        );
    }
    // a coupling that is not purely imaginary
    show(
        "pinem α=0.3+0.4i |β|=1.5",
        &check_pinem(Complex64::new(0.3, 0.4), Complex64::new(0.0, 1.5))?,
    );
    show("two-electron α₁=α₂=−0.6i", &check_two_electron(im(0.6), im(0.6))?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("{e}");
        std::process::exit(2);
    }
}
