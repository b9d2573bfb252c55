//! Special functions of real order: J_ν, scaled I_ν, Γ and the zeros of J_ν.
//!
//! Everything here is a pure function of its inputs.

mod bessel_i;
mod bessel_j;
mod gamma;
mod zeros;

use crate::error::{Error, Result};

pub use bessel_i::bessel_i_scaled;
pub use bessel_j::{bessel_j, bessel_j_half};
pub use gamma::{gamma_fn, ln_gamma};
pub use zeros::bessel_zeros;

pub(crate) use bessel_i::bessel_i_scaled_unchecked;
pub(crate) use bessel_j::bessel_j_unchecked;

/// A nonnegative, finite Bessel order.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu >= 0.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::Domain(format!("Bessel order must be finite and >= 0, got {nu}")))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for BesselOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Largest residuals seen by a quick sweep; backs the `selftest-specfun` subcommand.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpecfunSelftest {
    pub recurrence_residual: f64,
    pub zero_residual: f64,
    pub half_order_residual: f64,
    pub gamma_recursion_residual: f64,
}

pub fn selftest() -> Result<SpecfunSelftest> {
    let mut recurrence: f64 = 0.0;
    for &nu in &[1.0, 1.3, 2.7, 5.5] {
        for i in 0..200 {
            let x = 0.1 + i as f64 * 0.5;
            let lhs = bessel_j_unchecked(nu - 1.0, x) + bessel_j_unchecked(nu + 1.0, x);
            let rhs = 2.0 * nu / x * bessel_j_unchecked(nu, x);
            recurrence = recurrence.max((lhs - rhs).abs());
        }
    }
    let mut zero_res: f64 = 0.0;
    for &nu in &[0.0, 0.5, 0.9, 2.3, 2.7] {
        for z in bessel_zeros(BesselOrder::new(nu)?, 256)? {
            zero_res = zero_res.max(bessel_j_unchecked(nu, z).abs());
        }
    }
    let mut half: f64 = 0.0;
    for i in 1..400 {
        let x = i as f64 * 0.37;
        half = half.max((bessel_j_unchecked(0.5, x) - bessel_j_half(x)).abs());
        let exact_i = (1.0 - (-2.0 * x).exp()) / (2.0 * std::f64::consts::PI * x).sqrt();
        half = half.max(((bessel_i_scaled_unchecked(0.5, x) - exact_i) / exact_i).abs());
    }
    let mut gamma_res: f64 = 0.0;
    for i in 1..200 {
        let x = i as f64 * 0.13;
        let a = gamma_fn(x + 1.0)?;
        let b = x * gamma_fn(x)?;
        gamma_res = gamma_res.max(((a - b) / a).abs());
    }
    Ok(SpecfunSelftest {
        recurrence_residual: recurrence,
        zero_residual: zero_res,
        half_order_residual: half,
        gamma_recursion_residual: gamma_res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }

    fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        simpson(f, a, b, fa, fm, fb, whole, 1e-15, 50)
    }

    #[test]
    fn j_matches_integral_representation() {
        let (nu, x) = (0.75_f64, 2.5_f64);
        let first = adaptive(&|t: f64| (x * t.sin() - nu * t).cos(), 0.0, PI) / PI;
        let second = adaptive(&|s: f64| (-x * s.sinh() - nu * s).exp(), 0.0, 8.0) * (nu * PI).sin() / PI;
        let oracle = first - second;
        let got = bessel_j(BesselOrder::new(nu).unwrap(), x).unwrap();
        assert!(((got - oracle) / oracle).abs() < 1e-12, "{got} vs {oracle}");
    }

    #[test]
    fn scaled_i_matches_log_space_series() {
        // every term positive, so a compensated sum in log space is exact to a few ulps
        let (nu, x) = (1.3_f64, 50.0_f64);
        let mut sum = 0.0_f64;
        let mut comp = 0.0_f64;
        for k in 0..400 {
            let kf = k as f64;
            let log_term = (2.0 * kf + nu) * (0.5 * x).ln() - ln_gamma(kf + 1.0).unwrap() - ln_gamma(kf + nu + 1.0).unwrap() - x;
            let y = log_term.exp() - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        let got = bessel_i_scaled(BesselOrder::new(nu).unwrap(), x).unwrap();
        assert!(((got - sum) / sum).abs() < 1e-12, "{got} vs {sum}");
    }

    #[test]
    fn zeros_interlace() {
        for &nu in &[0.0, 0.5, 0.9, 2.3, 7.1] {
            let a = bessel_zeros(BesselOrder::new(nu).unwrap(), 40).unwrap();
            let b = bessel_zeros(BesselOrder::new(nu + 1.0).unwrap(), 40).unwrap();
            for m in 0..39 {
                assert!(a[m] < b[m] && b[m] < a[m + 1], "nu={nu} m={m}");
            }
        }
    }

    #[test]
    fn half_order_reductions() {
        for i in 1..200 {
            let x = 0.05 * i as f64 * i as f64;
            let h = BesselOrder::new(0.5).unwrap();
            assert!((bessel_j(h, x).unwrap() - (2.0 / (PI * x)).sqrt() * x.sin()).abs() < 1e-12);
            let exact = (1.0 - (-2.0 * x).exp()) / (2.0 * PI * x).sqrt();
            assert!(((bessel_i_scaled(h, x).unwrap() - exact) / exact).abs() < 1e-12);
        }
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn selftest_residuals_small() {
        let r = selftest().unwrap();
        assert!(r.recurrence_residual < 1e-10);
        assert!(r.zero_residual <= 1e-11);
        assert!(r.half_order_residual < 1e-12);
        assert!(r.gamma_recursion_residual < 1e-13);
    }

    proptest! {
        #[test]
        fn three_term_recurrence(nu in 1.0_f64..12.0, x in 0.1_f64..100.0) {
            let lhs = bessel_j_unchecked(nu - 1.0, x) + bessel_j_unchecked(nu + 1.0, x);
            let rhs = 2.0 * nu / x * bessel_j_unchecked(nu, x);
            prop_assert!((lhs - rhs).abs() < 1e-10, "nu={} x={} {} {}", nu, x, lhs, rhs);
        }

        #[test]
        fn j_bounded_by_one(nu in 0.0_f64..30.0, x in 0.0_f64..1000.0) {
            let v = bessel_j_unchecked(nu, x);
            prop_assert!(v.is_finite() && v.abs() <= 1.0 + 1e-12);
        }

        #[test]
        fn gamma_recursion(x in 0.05_f64..150.0) {
            let a = gamma_fn(x + 1.0).unwrap();
            let b = x * gamma_fn(x).unwrap();
            prop_assert!(((a - b) / a).abs() < 1e-13);
        }
    }
}
