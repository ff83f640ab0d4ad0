// The finite sum behind every coefficient,
// S(N, k, x) = Σ_ℓ (−x)^ℓ (N+ℓ)! / ((k+ℓ)! ℓ!),
// evaluated through a Laguerre recurrence and by direct summation.

use qew::special::{kernel_sum, kernel_sum_direct};

pub fn run() -> qew::Result<()> {
    println!("  N   k      x      recurrence              direct                 rel. diff");
    for (n, k, x) in [
        (3, 1, 0.25),
        (10, 0, 4.0),
        (30, 2, 9.0),
        (25, 3, 12.0),
        (4, 9, 2.0),
        (0, 12, 30.0),
    ] {
        let a = kernel_sum(n, k, x)?.value;
        let b = kernel_sum_direct(n, k, x)?.value;
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        println!("{n:>3} {k:>3} {x:>6}  {a:+.15e}  {b:+.15e}  {rel:.1e}");
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
