use std::f64::consts::PI;

use super::gamma::{gamma_fn, ln_gamma};
use super::BesselOrder;
use crate::error::{Error, Result};

/// Bessel function of the first kind J_ν(x) for real ν ≥ 0 and x ≥ 0.
///
/// Three regimes: the ascending series where it does not cancel badly, Hankel's
/// large-argument expansion once x > max(25, ν²), and Miller's backward
/// recurrence (normalized by the Neumann-type sum for fractional order) in
/// between.
pub fn bessel_j(nu: BesselOrder, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j requires finite x >= 0, got {x}")));
    }
    Ok(bessel_j_unchecked(nu.value(), x))
}

pub(crate) fn bessel_j_unchecked(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x <= 6.0 || 0.25 * x * x <= nu + 1.0 {
        series(nu, x)
    } else if x > 25.0_f64.max(nu * nu) {
        hankel_asymptotic(nu, x)
    } else {
        miller(nu, x)
    }
}

/// J'_ν(x) via (ν/x)J_ν − J_{ν+1}.
pub(crate) fn bessel_j_derivative(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 1.0 { 0.5 } else if nu == 0.0 || nu > 1.0 { 0.0 } else { f64::INFINITY };
    }
    nu / x * bessel_j_unchecked(nu, x) - bessel_j_unchecked(nu + 1.0, x)
}

fn series(nu: f64, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let prefactor = if nu < 100.0 && half > 1e-100 {
        half.powf(nu) / gamma_fn(nu + 1.0).expect("nu + 1 > 0")
    } else {
        (nu * half.ln() - ln_gamma(nu + 1.0).expect("nu + 1 > 0")).exp()
    };
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    loop {
        k += 1.0;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() || k > 500.0 {
            break;
        }
    }
    prefactor * sum
}

fn hankel_asymptotic(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let eight_x = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * eight_x);
        if term.abs() > prev && k > 2 {
            break;
        }
        prev = term.abs();
        // signs: P collects k ≡ 0 (mod 4) with + and k ≡ 2 with −, Q collects k ≡ 1 with + and k ≡ 3 with −
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // cos(x − φ) and sin(x − φ) without forming x − φ, so large x keeps its accuracy
    let phase = (0.5 * nu + 0.25) * PI;
    let (sx, cx) = x.sin_cos();
    let (sp, cp) = phase.sin_cos();
    let cos_w = cx * cp + sx * sp;
    let sin_w = sx * cp - cx * sp;
    (2.0 / (PI * x)).sqrt() * (p * cos_w - q * sin_w)
}

fn miller(nu: f64, x: f64) -> f64 {
    let m = nu.floor() as usize;
    let frac = nu - m as f64;
    let start = {
        let base = (m as f64).max(x);
        let k = (base + 30.0 + 6.0 * base.sqrt()) as usize;
        k + (k % 2)
    };
    // downward recurrence J_{frac+k-1} = (2(frac+k)/x) J_{frac+k} − J_{frac+k+1}
    let mut upper = 0.0_f64;
    let mut current = 1e-280_f64;
    let mut target = 0.0;
    let mut norm = 0.0;
    // normalization weights c_j for order frac + 2j: c_0 = Γ(frac+1), c_j = (frac+2j) Γ(frac+j)/j!
    let gamma_frac1 = gamma_fn(frac + 1.0).expect("positive");
    let mut weights = Vec::with_capacity(start / 2 + 1);
    weights.push(gamma_frac1);
    // ratio Γ(frac+j)/j!, starting from Γ(frac+1)/1!
    let mut ratio = gamma_frac1;
    for j in 1..=start / 2 {
        if j > 1 {
            ratio *= (frac + (j - 1) as f64) / j as f64;
        }
        weights.push((frac + 2.0 * j as f64) * ratio);
    }
    let mut k = start;
    loop {
        if k == m {
            target = current;
        }
        if k % 2 == 0 {
            norm += weights[k / 2] * current;
        }
        if k == 0 {
            break;
        }
        let next = 2.0 * (frac + k as f64) / x * current - upper;
        upper = current;
        current = next;
        k -= 1;
        if current.abs() > 1e250 {
            let s = 1e-250;
            current *= s;
            upper *= s;
            norm *= s;
            target *= s;
        }
    }
    target * (0.5 * x).powf(frac) / norm
}

/// Half-integer closed form J_{1/2}(x) = √(2/(πx)) sin x, used by tests and the sine-grid path.
pub fn bessel_j_half(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    (2.0 / (PI * x)).sqrt() * x.sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn j(nu: f64, x: f64) -> f64 {
        bessel_j(BesselOrder::new(nu).unwrap(), x).unwrap()
    }

    #[test]
    fn trivial_points() {
        assert_eq!(j(0.0, 0.0), 1.0);
        assert_eq!(j(1.3, 0.0), 0.0);
        assert!(j(0.5, PI).abs() < 1e-15);
    }

    #[test]
    fn half_order_closed_form_all_regimes() {
        for &x in &[0.1, 1.0, 5.0, 6.1, 11.9, 12.5, 18.0, 24.9, 30.0, 100.0, 999.0, 3000.0] {
            let exact = bessel_j_half(x);
            let got = j(0.5, x);
            assert!((got - exact).abs() < 1e-13, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn regimes_agree_at_switch_points() {
        // compare the three evaluators on overlapping ground
        for &nu in &[0.0, 0.3, 1.7, 3.2] {
            for &x in &[4.0, 6.0, 9.0] {
                let a = series(nu, x);
                let b = miller(nu, x);
                assert!((a - b).abs() < 1e-13, "series/miller nu={nu} x={x}: {a} {b}");
            }
            for &x in &[26.0, 40.0] {
                let b = miller(nu, x);
                let c = hankel_asymptotic(nu, x);
                assert!((b - c).abs() < 1e-13, "miller/hankel nu={nu} x={x}: {b} {c}");
            }
        }
    }

    #[test]
    fn rejects_negative_argument() {
        assert!(bessel_j(BesselOrder::new(1.0).unwrap(), -1.0).is_err());
        assert!(BesselOrder::new(-0.5).is_err());
    }
}
