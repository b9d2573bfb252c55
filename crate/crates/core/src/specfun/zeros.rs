use std::f64::consts::PI;

use super::bessel_j::{bessel_j_derivative, bessel_j_unchecked};
use super::BesselOrder;
use crate::error::{Error, Result};

const RESIDUAL_TOL: f64 = 1e-11;

/// McMahon's expansion for the m-th positive zero of J_ν.
fn mcmahon(nu: f64, m: usize) -> f64 {
    let mu = 4.0 * nu * nu;
    let beta = (m as f64 + 0.5 * nu - 0.25) * PI;
    let e = 8.0 * beta;
    let e2 = e * e;
    beta - (mu - 1.0) / e
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e * e2)
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * e * e2 * e2)
}

fn j(nu: f64, x: f64) -> f64 {
    bessel_j_unchecked(nu, x)
}

/// Newton on a sign-change bracket [lo, hi]; falls back to bisection whenever a step leaves it.
fn refine_in_bracket(nu: f64, mut lo: f64, mut hi: f64, guess: f64) -> f64 {
    let mut f_lo = j(nu, lo);
    let mut x = if guess > lo && guess < hi { guess } else { 0.5 * (lo + hi) };
    for _ in 0..200 {
        let fx = j(nu, x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == (f_lo > 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
        }
        let d = bessel_j_derivative(nu, x);
        let step = fx / d;
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
    }
    x
}

/// Walk right from `start` in steps of `step` until J_ν changes sign.
fn bracket_from(nu: f64, start: f64, step: f64) -> Option<(f64, f64)> {
    let mut lo = start;
    let mut f_lo = j(nu, lo);
    for _ in 0..100_000 {
        let hi = lo + step;
        let f_hi = j(nu, hi);
        if f_lo == 0.0 {
            return Some((lo, lo));
        }
        if (f_lo > 0.0) != (f_hi > 0.0) {
            return Some((lo, hi));
        }
        lo = hi;
        f_lo = f_hi;
    }
    None
}

/// The first `count` positive zeros j_{ν,1} < … < j_{ν,count} of J_ν.
///
/// Each zero is seeded by McMahon's expansion and refined by a bracketed
/// Newton iteration. The bracket is located around the seed and checked
/// against the previous zero so that no root is skipped.
pub fn bessel_zeros(nu: BesselOrder, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Domain("bessel_zeros requires count >= 1".into()));
    }
    let nu = nu.value();
    let mut zeros: Vec<f64> = Vec::with_capacity(count);
    for m in 1..=count {
        let prev = zeros.last().copied();
        // every zero lies beyond ν, and consecutive zeros are more than 2 apart
        let floor = match prev {
            Some(p) => p + 1.0,
            None => nu.max(1e-3),
        };
        let seed = mcmahon(nu, m).max(floor);
        let bracket = {
            let lo = (seed - 0.5).max(floor);
            let hi = seed + 0.5;
            let (fl, fh) = (j(nu, lo), j(nu, hi));
            if (fl > 0.0) != (fh > 0.0) {
                Some((lo, hi))
            } else {
                None
            }
        }
        .filter(|&(lo, _)| {
            // no sign change may hide between the previous zero and the bracket
            match prev {
                Some(p) => {
                    let probes = 6;
                    let f0 = j(nu, p + 0.5 * (lo - p) / probes as f64);
                    (1..=probes).all(|i| {
                        let x = p + (lo - p) * i as f64 / probes as f64;
                        (j(nu, x) > 0.0) == (f0 > 0.0)
                    })
                }
                None => {
                    let probes = 12;
                    let f0 = j(nu, floor);
                    (1..=probes).all(|i| {
                        let x = floor + (lo - floor) * i as f64 / probes as f64;
                        (j(nu, x) > 0.0) == (f0 > 0.0)
                    })
                }
            }
        })
        .or_else(|| bracket_from(nu, floor, 0.1));
        let (lo, hi) = bracket.ok_or_else(|| Error::Convergence {
            index: m,
            detail: format!("no sign change found for J_{nu} beyond {floor}"),
        })?;
        let root = if lo == hi { lo } else { refine_in_bracket(nu, lo, hi, seed) };
        let residual = j(nu, root).abs();
        if residual > RESIDUAL_TOL || !root.is_finite() {
            return Err(Error::Convergence {
                index: m,
                detail: format!("zero of J_{nu} refined to {root} with residual {residual:e}"),
            });
        }
        if let Some(p) = prev {
            if root <= p {
                return Err(Error::Convergence {
                    index: m,
                    detail: format!("zero {root} not above previous zero {p}"),
                });
            }
        }
        zeros.push(root);
    }
    Ok(zeros)
}
