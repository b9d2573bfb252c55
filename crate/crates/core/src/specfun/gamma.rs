use std::f64::consts::PI;

use crate::error::{Error, Result};

/// B_2, B_4, ..., B_60.
const BERNOULLI_EVEN: [f64; 30] = [
    0.16666666666666666,
    -0.03333333333333333,
    0.023809523809523808,
    -0.03333333333333333,
    0.07575757575757576,
    -0.2531135531135531,
    1.1666666666666667,
    -7.092156862745098,
    54.971177944862156,
    -529.1242424242424,
    6192.123188405797,
    -86580.25311355312,
    1425517.1666666667,
    -27298231.067816094,
    601580873.9006424,
    -15116315767.092157,
    429614643061.1667,
    -13711655205088.332,
    488332318973593.2,
    -1.9296579341940068e+16,
    8.416930475736826e+17,
    -4.0338071854059454e+19,
    2.1150748638081993e+21,
    -1.2086626522296526e+23,
    7.500866746076964e+24,
    -5.038778101481069e+26,
    3.6528776484818122e+28,
    -2.849876930245088e+30,
    2.3865427499683627e+32,
    -2.1399949257225335e+34,
];

// The Stirling series is evaluated only once the argument has been raised past this point.
const STIRLING_FLOOR: f64 = 16.0;

fn stirling_ln_gamma(z: f64) -> f64 {
    (z - 0.5) * z.ln() - z + 0.5 * (2.0 * PI).ln() + stirling_correction(z)
}

/// Γ(z) for z ≥ STIRLING_FLOOR without passing through exp(ln Γ), which would
/// amplify the rounding of ln Γ by its magnitude.
fn stirling_gamma(z: f64) -> f64 {
    let half_pow = z.powf(0.5 * (z - 0.5));
    half_pow * (-z).exp() * half_pow * (2.0 * PI).sqrt() * stirling_correction(z).exp()
}

fn stirling_correction(z: f64) -> f64 {
    debug_assert!(z >= STIRLING_FLOOR);
    let mut sum = 0.0;
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let mut pow = inv;
    for (k, b) in BERNOULLI_EVEN.iter().enumerate() {
        let m = 2.0 * (k + 1) as f64;
        let term = b / (m * (m - 1.0)) * pow;
        sum += term;
        if term.abs() < 1e-20 * inv {
            break;
        }
        pow *= inv2;
    }
    sum
}

/// Natural log of Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    if x >= STIRLING_FLOOR {
        return Ok(stirling_ln_gamma(x));
    }
    let shift = (STIRLING_FLOOR - x).ceil() as usize;
    let mut log_prod = 0.0;
    let mut prod = 1.0;
    for i in 0..shift {
        prod *= x + i as f64;
        // keep the running product well inside f64 range
        if prod > 1e200 {
            log_prod += prod.ln();
            prod = 1.0;
        }
    }
    log_prod += prod.ln();
    Ok(stirling_ln_gamma(x + shift as f64) - log_prod)
}

/// Γ(x) for x > 0. Overflows to +inf above x ≈ 171.6.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma requires x > 0, got {x}")));
    }
    if x >= STIRLING_FLOOR {
        return Ok(stirling_gamma(x));
    }
    let shift = (STIRLING_FLOOR - x).ceil() as usize;
    let mut prod = 1.0;
    for i in 0..shift {
        prod *= x + i as f64;
    }
    Ok(stirling_gamma(x + shift as f64) / prod)
}
