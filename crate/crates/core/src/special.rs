//! Spherical Bessel and Hankel functions and Legendre polynomials.
//!
//! `j_n` uses upward recurrence when `x` exceeds the highest requested order
//! and Miller's downward recurrence otherwise (normalized against whichever
//! of `j_0`, `j_1` is larger in magnitude). `y_n` is always computed upward,
//! which is the stable direction for the dominant solution.
//!
//! Derivatives follow `f'_n = f_{n-1} - (n+1)/x f_n`, with `f'_0 = -f_1`.

use crate::{Complex64, Error, Result};

fn check_argument(x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("spherical Bessel argument must be positive, got {x}")))
    }
}

/// `j_0(x) ..= j_nmax(x)`.
pub fn sph_bessel_j_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    if nmax == 0 {
        return Ok(vec![j0]);
    }
    if x > nmax as f64 {
        let mut out = Vec::with_capacity(nmax + 1);
        out.push(j0);
        out.push(j1);
        for n in 1..nmax {
            let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
            out.push(next);
        }
        return Ok(out);
    }

    // Miller: start well above nmax with an arbitrary seed and recur down.
    let start = nmax + 16 + (160.0 * (nmax as f64 + x)).sqrt() as usize;
    let mut vals = vec![0.0f64; start + 2];
    vals[start + 1] = 0.0;
    vals[start] = 1e-300;
    for n in (1..=start).rev() {
        vals[n - 1] = (2 * n + 1) as f64 / x * vals[n] - vals[n + 1];
        if vals[n - 1].abs() > 1e250 {
            for v in &mut vals[n - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() { j0 / vals[0] } else { j1 / vals[1] };
    vals.truncate(nmax + 1);
    for v in &mut vals {
        *v *= scale;
    }
    Ok(vals)
}

/// `y_0(x) ..= y_nmax(x)`.
pub fn sph_bessel_y_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_argument(x)?;
    let (s, c) = x.sin_cos();
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-c / x);
    if nmax >= 1 {
        out.push(-c / (x * x) - s / x);
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        out.push(next);
    }
    Ok(out)
}

pub fn sph_bessel_j(n: usize, x: f64) -> Result<f64> {
    Ok(sph_bessel_j_upto(n, x)?[n])
}

pub fn sph_bessel_y(n: usize, x: f64) -> Result<f64> {
    Ok(sph_bessel_y_upto(n, x)?[n])
}

/// `h_n^{(2)} = j_n - i y_n` for `n = 0..=nmax`; outgoing under `e^{+jωt}`.
pub fn sph_hankel2_upto(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    let j = sph_bessel_j_upto(nmax, x)?;
    let y = sph_bessel_y_upto(nmax, x)?;
    Ok(j.into_iter().zip(y).map(|(j, y)| Complex64::new(j, -y)).collect())
}

pub fn sph_hankel2(n: usize, x: f64) -> Result<Complex64> {
    Ok(sph_hankel2_upto(n, x)?[n])
}

/// Derivatives of a sequence `f_0..=f_N` of spherical Bessel-type functions;
/// returns `f'_0..f'_{N-1}` (one fewer than the input, since `f'_0` needs `f_1`).
pub fn derivatives_from_sequence<T>(f: &[T], x: f64) -> Vec<T>
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Neg<Output = T>,
{
    let mut out = Vec::with_capacity(f.len().saturating_sub(1));
    if f.len() < 2 {
        return out;
    }
    out.push(-f[1]);
    for n in 1..f.len() - 1 {
        out.push(f[n - 1] - f[n] * ((n + 1) as f64 / x));
    }
    out
}

/// `h_n^{(2)'}(x)` for `n = 0..=nmax`.
pub fn sph_hankel2_derivative_upto(nmax: usize, x: f64) -> Result<Vec<Complex64>> {
    let h = sph_hankel2_upto(nmax + 1, x)?;
    Ok(derivatives_from_sequence(&h, x))
}

pub fn sph_hankel2_derivative(n: usize, x: f64) -> Result<Complex64> {
    Ok(sph_hankel2_derivative_upto(n, x)?[n])
}

pub fn sph_bessel_j_derivative_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    Ok(derivatives_from_sequence(&sph_bessel_j_upto(nmax + 1, x)?, x))
}

pub fn sph_bessel_y_derivative_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    Ok(derivatives_from_sequence(&sph_bessel_y_upto(nmax + 1, x)?, x))
}

fn check_legendre_argument(x: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("Legendre argument must lie in [-1, 1], got {x}")))
    }
}

/// `P_0(x) ..= P_nmax(x)` by the Bonnet recurrence.
pub fn legendre_p_upto(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_legendre_argument(x)?;
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(1.0);
    if nmax >= 1 {
        out.push(x);
    }
    for n in 1..nmax {
        let next = ((2 * n + 1) as f64 * x * out[n] - n as f64 * out[n - 1]) / (n + 1) as f64;
        out.push(next);
    }
    Ok(out)
}

pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    Ok(legendre_p_upto(n, x)?[n])
}
