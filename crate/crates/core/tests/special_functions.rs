//! Special functions against independent closed forms and series.

use beamkit_core::special::*;
use beamkit_core::Complex64;

fn double_factorial_odd(n: usize) -> f64 {
    // (2n+1)!!
    (0..=n).map(|k| (2 * k + 1) as f64).product()
}

/// Ascending power series for j_n, summed until terms vanish.
fn j_series(n: usize, x: f64) -> f64 {
    let lead = x.powi(n as i32) / double_factorial_odd(n);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -x * x / (2.0 * k as f64 * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.abs() < 1e-20 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Finite closed form of h_n^(1), conjugated to give h_n^(2) for real x.
fn hankel2_closed_form(n: usize, x: f64) -> Complex64 {
    let i = Complex64::i();
    let fact = |m: usize| (1..=m).map(|v| v as f64).product::<f64>();
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..=n {
        let c = fact(n + k) / (fact(k) * fact(n - k) * (2.0 * x).powi(k as i32));
        sum += i.powu(k as u32) * c;
    }
    let h1 = (-i).powu(n as u32 + 1) * Complex64::cis(x) / x * sum;
    h1.conj()
}

/// Explicit coefficient expansion of P_n.
fn legendre_coefficients(n: usize, x: f64) -> f64 {
    let binom = |a: usize, b: usize| -> f64 {
        (0..b).map(|i| (a - i) as f64 / (i + 1) as f64).product()
    };
    let mut s = 0.0;
    for k in 0..=n / 2 {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * binom(n, k) * binom(2 * n - 2 * k, n) * x.powi((n - 2 * k) as i32);
    }
    s / 2f64.powi(n as i32)
}

#[test]
fn j10_at_5_matches_power_series() {
    let oracle = j_series(10, 5.0);
    let got = sph_bessel_j(10, 5.0).unwrap();
    assert!((got - oracle).abs() < 1e-12 * oracle.abs(), "{got} vs {oracle}");
    // 40-digit reference value
    assert!((got - 4.073442442494604e-4).abs() < 1e-17);
}

#[test]
fn j_matches_series_over_a_grid() {
    for n in [0usize, 1, 3, 7, 15, 25] {
        for x in [0.05, 0.5, 1.0, 3.0, 8.0] {
            let oracle = j_series(n, x);
            let got = sph_bessel_j(n, x).unwrap();
            assert!(
                (got - oracle).abs() <= 1e-11 * oracle.abs() + 1e-300,
                "n = {n}, x = {x}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn j_deep_below_turning_point() {
    let got = sph_bessel_j(40, 2.0).unwrap();
    assert!((got / 1.660978778638111e-49 - 1.0).abs() < 1e-10);
    let got = sph_bessel_j(30, 50.0).unwrap();
    assert!((got + 1.494673453605112e-3).abs() < 1e-14);
}

#[test]
fn h8_at_3_matches_closed_form() {
    let oracle = hankel2_closed_form(8, 3.0);
    let got = sph_hankel2(8, 3.0).unwrap();
    assert!((got - oracle).norm() < 1e-12 * oracle.norm(), "{got} vs {oracle}");
    assert!((got.re - 1.498337562689293e-4).abs() < 1e-16);
    assert!((got.im - 140.0601093792879).abs() < 1e-10);
}

#[test]
fn hankel_closed_form_agreement_low_orders() {
    for n in 0..=6 {
        for x in [0.3, 1.0, 4.0, 12.0] {
            let oracle = hankel2_closed_form(n, x);
            let got = sph_hankel2(n, x).unwrap();
            assert!((got - oracle).norm() < 1e-11 * oracle.norm(), "n = {n}, x = {x}");
        }
    }
}

#[test]
fn p10_matches_coefficient_expansion() {
    let oracle = legendre_coefficients(10, 0.7);
    let got = legendre_p(10, 0.7).unwrap();
    assert!((got - oracle).abs() < 1e-14);
    assert!((got - 0.08580579553164044).abs() < 1e-15);
}

#[test]
fn wronskian_over_orders_and_arguments() {
    let xs: Vec<f64> = (0..25).map(|i| 0.1 * 500f64.powf(i as f64 / 24.0)).collect();
    for &x in &xs {
        let j = sph_bessel_j_upto(40, x).unwrap();
        let y = sph_bessel_y_upto(40, x).unwrap();
        let jd = sph_bessel_j_derivative_upto(40, x).unwrap();
        let yd = sph_bessel_y_derivative_upto(40, x).unwrap();
        for n in 0..=40 {
            let w = j[n] * yd[n] - jd[n] * y[n];
            let expect = 1.0 / (x * x);
            // relative to the size of the cancelling products
            let scale = (j[n] * yd[n]).abs().max((jd[n] * y[n]).abs()).max(expect);
            assert!(
                (w - expect).abs() <= 1e-12 * scale,
                "n = {n}, x = {x}: {w} vs {expect}"
            );
        }
    }
}

#[test]
fn legendre_parity() {
    for n in 0..20 {
        for x in [0.1, 0.45, 0.9] {
            let a = legendre_p(n, x).unwrap();
            let b = legendre_p(n, -x).unwrap();
            let s = if n % 2 == 0 { 1.0 } else { -1.0 };
            assert!((a - s * b).abs() < 1e-14);
        }
    }
}
