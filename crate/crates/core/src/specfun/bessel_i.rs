use std::f64::consts::PI;
use std::sync::OnceLock;

use super::gamma::ln_gamma;
use super::BesselOrder;
use crate::error::{Error, Result};

// Orders at or above this use the Debye (uniform large-order) expansion.
const DEBYE_MIN_ORDER: f64 = 15.0;
const DEBYE_TERMS: usize = 14;

/// Exponentially scaled modified Bessel function e^{−x} I_ν(x), ν ≥ 0, x ≥ 0.
///
/// Only the scaled form is provided; unscaled values overflow long before the
/// arguments the heat kernel needs at small t.
pub fn bessel_i_scaled(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_i_scaled requires finite x >= 0, got {x}")));
    }
    Ok(bessel_i_scaled_unchecked(nu.value(), x))
}

pub(crate) fn bessel_i_scaled_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if nu >= DEBYE_MIN_ORDER {
        debye(nu, x)
    } else if x <= 35.0_f64.max(nu * nu) {
        series(nu, x)
    } else {
        asymptotic(nu, x)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = half * half;
    let log_prefactor = nu * half.ln() - ln_gamma(nu + 1.0).expect("nu + 1 > 0") - x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term < 1e-17 * sum || k > 5000.0 {
            break;
        }
    }
    (log_prefactor + sum.ln()).exp()
}

fn asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let eight_x = 8.0 * x;
    let mut sum = 1.0;
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= -(mu - odd * odd) / (k as f64 * eight_x);
        if term.abs() > prev && k > 2 {
            break;
        }
        prev = term.abs();
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum / (2.0 * PI * x).sqrt()
}

/// Debye polynomials U_k(p) as coefficient vectors in powers of p, from
/// U_{k+1}(p) = ½p²(1−p²)U_k'(p) + ⅛∫₀^p (1−5t²)U_k(t)dt.
fn debye_polynomials() -> &'static [Vec<f64>] {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
        for _ in 0..DEBYE_TERMS {
            let u = out.last().unwrap();
            let mut next = vec![0.0; u.len() + 3];
            // ½ p² (1 − p²) U'
            for (i, &c) in u.iter().enumerate().skip(1) {
                let d = c * i as f64;
                // d p^{i-1} · ½ p² (1 − p²)
                next[i + 1] += 0.5 * d;
                next[i + 3] -= 0.5 * d;
            }
            // ⅛ ∫ (1 − 5t²) U
            for (i, &c) in u.iter().enumerate() {
                next[i + 1] += 0.125 * c / (i + 1) as f64;
                next[i + 3] -= 0.125 * 5.0 * c / (i + 3) as f64;
            }
            out.push(next);
        }
        out
    })
}

fn debye(nu: f64, x: f64) -> f64 {
    let z = x / nu;
    let root = (1.0 + z * z).sqrt();
    let p = 1.0 / root;
    // ν·η − x with η = √(1+z²) + ln(z/(1+√(1+z²))) and √(1+z²) − z = 1/(√(1+z²)+z)
    let exponent = nu * (1.0 / (root + z) + (z / (1.0 + root)).ln());
    let mut sum = 0.0;
    let mut nu_pow = 1.0;
    for poly in debye_polynomials() {
        let mut val = 0.0;
        for &c in poly.iter().rev() {
            val = val * p + c;
        }
        let term = val / nu_pow;
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
        nu_pow *= nu;
    }
    exponent.exp() / ((2.0 * PI * nu).sqrt() * root.sqrt()) * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i(nu: f64, x: f64) -> f64 {
        bessel_i_scaled(BesselOrder::new(nu).unwrap(), x).unwrap()
    }

    #[test]
    fn closed_forms() {
        assert_eq!(i(0.0, 0.0), 1.0);
        let expected = (-1.0_f64).exp() * (2.0 / PI).sqrt() * 1.0_f64.sinh();
        assert!((i(0.5, 1.0) - expected).abs() < 1e-14);
        // e^{-x} I_{1/2}(x) = (1 − e^{−2x}) / √(2πx) on every regime boundary
        for &x in &[0.3_f64, 10.0, 34.0, 36.0, 200.0, 5e4] {
            let exact = (1.0 - (-2.0 * x).exp()) / (2.0 * PI * x).sqrt();
            assert!(((i(0.5, x) - exact) / exact).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn debye_polynomials_match_known_low_orders() {
        let u = debye_polynomials();
        // U_1 = (3p − 5p³)/24, U_2 = (81p² − 462p⁴ + 385p⁶)/1152
        assert!((u[1][1] - 3.0 / 24.0).abs() < 1e-16);
        assert!((u[1][3] + 5.0 / 24.0).abs() < 1e-16);
        assert!((u[2][2] - 81.0 / 1152.0).abs() < 1e-16);
        assert!((u[2][4] + 462.0 / 1152.0).abs() < 1e-15);
        assert!((u[2][6] - 385.0 / 1152.0).abs() < 1e-15);
    }

    #[test]
    fn debye_agrees_with_series_near_switch() {
        for &x in &[0.5, 5.0, 40.0, 150.0, 300.0] {
            let a = series(DEBYE_MIN_ORDER, x);
            let b = debye(DEBYE_MIN_ORDER, x);
            assert!(((a - b) / a).abs() < 1e-12, "x={x}: {a} {b}");
        }
    }

    #[test]
    fn always_positive() {
        for &nu in &[0.0, 0.4, 3.0, 14.9, 15.0, 40.0, 900.0] {
            for &x in &[1e-8, 1e-3, 1.0, 33.0, 700.0, 1e5] {
                let v = i(nu, x);
                assert!(v.is_finite() && v >= 0.0, "nu={nu} x={x}: {v}");
                if nu <= 40.0 && x >= 1e-3 {
                    assert!(v > 0.0, "nu={nu} x={x}: {v}");
                }
            }
        }
    }
}
