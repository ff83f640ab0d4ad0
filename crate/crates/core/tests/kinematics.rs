use qew::kinematics::{
    deflection, dispersion_distance, dispersion_distance_with, electron_from_velocity_fraction, electron_from_voltage,
    BandwidthConvention, ELECTRON_REST_KEV,
};

#[test]
fn two_hundred_kev_beam() {
    let e = electron_from_voltage(200.0).unwrap();
    assert!((1.38..=1.40).contains(&e.gamma));
    assert!((0.69..=0.70).contains(&e.velocity_fraction));
    let z = dispersion_distance(&e, 5.825);
    assert!((z - 5.3).abs() < 0.05 * 5.3, "z = {z} mm");
    let d = deflection(&e, 1.0, 1.1, 100.0);
    assert!((d.theta_f - 6.5e-6).abs() < 0.1 * 6.5e-6, "θ = {}", d.theta_f);
    assert!(
        d.displacement > 0.1 && d.displacement < 0.4,
        "x = {} nm",
        d.displacement
    );
}

#[test]
fn three_hundred_kev_from_definitions() {
    let e = electron_from_voltage(300.0).unwrap();
    let gamma = 1.0 + 300.0 / ELECTRON_REST_KEV;
    let v = (1.0 - 1.0 / (gamma * gamma)).sqrt();
    assert!((e.gamma - gamma).abs() < 1e-15);
    assert!((e.velocity_fraction - v).abs() < 1e-14);
    assert!((e.momentum_times_c - gamma * v * ELECTRON_REST_KEV).abs() < 1e-10);
}

#[test]
fn nonrelativistic_limit() {
    let e = electron_from_voltage(0.1).unwrap();
    let classical = (2.0 * 0.1 / ELECTRON_REST_KEV).sqrt();
    assert!((e.velocity_fraction - classical).abs() < 1e-3 * classical);
}

#[test]
fn velocity_and_distance_grow_with_energy() {
    let mut prev = electron_from_voltage(10.0).unwrap();
    let mut prev_z = dispersion_distance(&prev, 1.0);
    for ke in (20..=400).step_by(10) {
        let e = electron_from_voltage(ke as f64).unwrap();
        let z = dispersion_distance(&e, 1.0);
        assert!(e.velocity_fraction > prev.velocity_fraction);
        assert!(e.gamma > prev.gamma);
        assert!(z > prev_z);
        prev = e;
        prev_z = z;
    }
}

#[test]
fn distance_scales_as_inverse_square_bandwidth() {
    let e = electron_from_voltage(200.0).unwrap();
    let z1 = dispersion_distance(&e, 1.0);
    for de in [0.5, 2.0, 7.0] {
        let z = dispersion_distance(&e, de);
        assert!((z * de * de - z1).abs() < 1e-12 * z1);
    }
}

#[test]
fn full_width_reading_halves_the_bandwidth() {
    let e = electron_from_voltage(200.0).unwrap();
    let full = dispersion_distance_with(&e, 11.65, BandwidthConvention::FullWidth);
    let half = dispersion_distance_with(&e, 11.65, BandwidthConvention::HalfWidth);
    assert!((full / half - 4.0).abs() < 1e-12);
    assert!((half - 1.35).abs() < 0.05, "{half}");
}

#[test]
fn deflection_is_linear_in_coupling_and_length() {
    let e = electron_from_voltage(200.0).unwrap();
    let a = deflection(&e, 1.0, 1.1, 100.0);
    let b = deflection(&e, 3.0, 1.1, 50.0);
    assert!((b.theta_f - 3.0 * a.theta_f).abs() < 1e-20);
    assert!((b.displacement - 1.5 * a.displacement).abs() < 1e-14);
}

#[test]
fn velocity_inverse_round_trip() {
    for ke in [1.0, 80.0, 200.0, 1000.0] {
        let e = electron_from_voltage(ke).unwrap();
        let back = electron_from_velocity_fraction(e.velocity_fraction).unwrap();
        assert!((back.kinetic_energy - ke).abs() < 1e-9 * ke.max(1.0));
    }
}
