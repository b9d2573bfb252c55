//! Heat kernels of P_a: closed-form sector kernels and the n = 3 angular synthesis.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{sigma_a, ModelParams};
use crate::quadrature::legendre_table;
use crate::specfun::bessel_i_scaled_unchecked;

/// Largest condition number Σ|terms| / |sum| accepted as a resolved synthesis.
pub const MAX_CONDITION: f64 = 1e6;
/// Search box for the envelope constants.
pub const ENVELOPE_C_RANGE: (f64, f64) = (1e-4, 1e4);
pub const ENVELOPE_RATE_RANGE: (f64, f64) = (1.0, 16.0);

fn check_point(t: f64, r: f64, rp: f64) -> Result<()> {
    for (name, v) in [("t", t), ("r", r), ("r'", rp)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("heat kernel needs {name} > 0, got {v}")));
        }
    }
    Ok(())
}

/// h_k(t, r, r′) = (rr′)^{−(n−2)/2} (2t)^{−1} e^{−(r²+r′²)/(4t)} I_{ν_k}(rr′/(2t)).
pub fn sector_kernel(t: f64, r: f64, rp: f64, k: usize, params: &ModelParams) -> Result<f64> {
    check_point(t, r, rp)?;
    Ok(sector_kernel_order(t, r, rp, params.sector(k).nu.value(), params.n))
}

fn sector_kernel_order(t: f64, r: f64, rp: f64, nu: f64, n: usize) -> f64 {
    let z = r * rp / (2.0 * t);
    let d = r - rp;
    (r * rp).powf(-0.5 * (n as f64 - 2.0)) / (2.0 * t) * (-d * d / (4.0 * t)).exp() * bessel_i_scaled_unchecked(nu, z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatKernelQuery {
    pub t: f64,
    pub r: f64,
    pub rp: f64,
    pub mu: f64,
    /// Highest sector kept; `None` picks one from rr′/t.
    pub k_max: Option<usize>,
}

impl HeatKernelQuery {
    pub fn new(t: f64, r: f64, rp: f64, mu: f64) -> Self {
        HeatKernelQuery { t, r, rp, mu, k_max: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    /// H, which underflows to 0 far off the diagonal
    pub value: f64,
    /// ln H, finite wherever the angular sum is positive
    pub log_value: f64,
    /// Size of the last partial term times the ratio of the last two.
    pub tail: f64,
    /// Σ|terms| / |Σ terms|.
    pub condition: f64,
    pub k_max: usize,
}

impl KernelValue {
    pub fn resolved(&self) -> bool {
        self.log_value.is_finite() && self.condition <= MAX_CONDITION
    }
}

/// Sectors needed before Ĩ_ν(z) ≈ e^{−ν²/(2z)}/√(2πz) has decayed by e^{−40}.
pub fn auto_truncation(t: f64, r: f64, rp: f64) -> usize {
    let z = r * rp / (2.0 * t);
    (80.0 * z).sqrt().ceil() as usize + 30
}

/// H(t, x, y) for n = 3 by Σ_{k≤K} (2k+1)/(4π) h_k P_k(μ).
pub fn full_kernel(q: &HeatKernelQuery, params: &ModelParams) -> Result<KernelValue> {
    if params.n != 3 {
        return Err(Error::InvalidParams(format!(
            "full kernel synthesis is implemented for n = 3 only, got n = {}",
            params.n
        )));
    }
    check_point(q.t, q.r, q.rp)?;
    if !(q.mu.abs() <= 1.0) {
        return Err(Error::Domain(format!("mu = cos(theta) must lie in [-1, 1], got {}", q.mu)));
    }
    let k_max = q.k_max.unwrap_or_else(|| auto_truncation(q.t, q.r, q.rp));
    let legendre = legendre_table(k_max, q.mu);
    let (mut sum, mut abs_sum) = (0.0, 0.0);
    let (mut last, mut prev) = (0.0_f64, 0.0_f64);
    // h_k without the common factor e^{−(r−r′)²/(4t)}
    let z = q.r * q.rp / (2.0 * q.t);
    let lead = (q.r * q.rp).powf(-0.5) / (2.0 * q.t);
    let gauss = -(q.r - q.rp).powi(2) / (4.0 * q.t);
    for (k, pk) in legendre.iter().enumerate() {
        let h = lead * bessel_i_scaled_unchecked(params.sector(k).nu.value(), z);
        let term = (2 * k + 1) as f64 / (4.0 * PI) * h * pk;
        sum += term;
        abs_sum += term.abs();
        prev = last;
        last = (2 * k + 1) as f64 / (4.0 * PI) * h;
    }
    let tail = if prev > 0.0 { last * (last / prev) } else { last };
    let condition = if sum > 0.0 { abs_sum / sum } else { f64::INFINITY };
    let log_value = if sum > 0.0 { sum.ln() + gauss } else { f64::NAN };
    Ok(KernelValue { value: sum * gauss.exp(), log_value, tail: tail * gauss.exp(), condition, k_max })
}

/// (4πt)^{−3/2} e^{−|x−y|²/(4t)}.
pub fn free_kernel(t: f64, r: f64, rp: f64, mu: f64) -> f64 {
    log_free_kernel(t, r, rp, mu).exp()
}

pub fn log_free_kernel(t: f64, r: f64, rp: f64, mu: f64) -> f64 {
    -1.5 * (4.0 * PI * t).ln() - distance_sqr(r, rp, mu) / (4.0 * t)
}

fn distance_sqr(r: f64, rp: f64, mu: f64) -> f64 {
    ((r - rp) * (r - rp) + 2.0 * r * rp * (1.0 - mu)).max(0.0)
}

/// ln(φ_σ(x,t) φ_σ(y,t) t^{−3/2})
fn log_base(sigma: f64, t: f64, r: f64, rp: f64) -> f64 {
    weight(sigma, r, t).ln() + weight(sigma, rp, t).ln() - 1.5 * t.ln()
}

/// φ_σ(x, t): (√t/|x|)^σ inside the parabolic ball, 1 outside.
pub fn weight(sigma: f64, r: f64, t: f64) -> f64 {
    let s = t.sqrt();
    if r <= s {
        (s / r).powf(sigma)
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryGrid {
    pub times: Vec<f64>,
    pub radii: Vec<f64>,
    pub mus: Vec<f64>,
    /// Fixed sector truncation for every point; automatic when `None`.
    pub k_max: Option<usize>,
}

fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

impl QueryGrid {
    pub fn log_spaced(t: (f64, f64, usize), r: (f64, f64, usize), mus: Vec<f64>) -> Self {
        QueryGrid { times: log_space(t.0, t.1, t.2), radii: log_space(r.0, r.1, r.2), mus, k_max: None }
    }
}

impl Default for QueryGrid {
    fn default() -> Self {
        QueryGrid::log_spaced((1e-3, 10.0, 9), (1e-2, 10.0, 7), vec![-1.0, 0.0, 1.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundEnvelope {
    pub c_lower: f64,
    pub c_upper: f64,
    pub rate_lower: f64,
    pub rate_upper: f64,
    pub sigma: f64,
}

impl BoundEnvelope {
    /// (ln lower, ln upper) bound at a point.
    pub fn log_bounds(&self, t: f64, r: f64, rp: f64, mu: f64) -> (f64, f64) {
        let base = log_base(self.sigma, t, r, rp);
        let d = distance_sqr(r, rp, mu) / t;
        (self.c_lower.ln() + base - d / self.rate_lower, self.c_upper.ln() + base - d / self.rate_upper)
    }

    pub fn bounds(&self, t: f64, r: f64, rp: f64, mu: f64) -> (f64, f64) {
        let (lo, hi) = self.log_bounds(t, r, rp, mu);
        (lo.exp(), hi.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelPoint {
    pub t: f64,
    pub r: f64,
    pub rp: f64,
    pub mu: f64,
    pub h: f64,
    pub log_h: f64,
    pub condition: f64,
    pub resolved: bool,
    pub envelope_lo: f64,
    pub envelope_hi: f64,
    pub sandwiched: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub envelope: BoundEnvelope,
    pub points: Vec<KernelPoint>,
    pub resolved: usize,
    pub sandwiched: usize,
    /// Resolved points outside the envelope.
    pub violations: Vec<usize>,
}

impl EnvelopeReport {
    pub fn unresolved(&self) -> usize {
        self.points.len() - self.resolved
    }
    /// Fraction of resolved points inside the envelope.
    pub fn sandwiched_fraction(&self) -> f64 {
        if self.resolved == 0 {
            0.0
        } else {
            self.sandwiched as f64 / self.resolved as f64
        }
    }
}

/// Evaluate H on the grid and fit C₁φφt^{−3/2}e^{−D/c₁} ≤ H ≤ C₂φφt^{−3/2}e^{−D/c₂}, D = |x−y|²/t.
///
/// The rate comes from a least-squares fit of ln(H/φφt^{−3/2}) against D; the
/// prefactors are the extreme offsets, clamped to the search box. Points whose
/// synthesis is dominated by cancellation are reported as unresolved and left
/// out of the fit.
pub fn envelope_check(params: &ModelParams, grid: &QueryGrid) -> Result<EnvelopeReport> {
    if params.n != 3 {
        return Err(Error::InvalidParams("envelope check is implemented for n = 3".into()));
    }
    let sigma = sigma_a(params);
    let mut points = Vec::new();
    for &t in &grid.times {
        for &r in &grid.radii {
            for &rp in &grid.radii {
                for &mu in &grid.mus {
                    let v = full_kernel(&HeatKernelQuery { k_max: grid.k_max, ..HeatKernelQuery::new(t, r, rp, mu) }, params)?;
                    points.push(KernelPoint {
                        t,
                        r,
                        rp,
                        mu,
                        h: v.value,
                        log_h: v.log_value,
                        condition: v.condition,
                        resolved: v.resolved(),
                        envelope_lo: 0.0,
                        envelope_hi: 0.0,
                        sandwiched: false,
                    });
                }
            }
        }
    }
    let samples: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.resolved)
        .map(|p| (distance_sqr(p.r, p.rp, p.mu) / p.t, p.log_h - log_base(sigma, p.t, p.r, p.rp)))
        .collect();
    let m = samples.len() as f64;
    if samples.len() < 2 {
        return Err(Error::Numerics("envelope fit needs at least two resolved points".into()));
    }
    let mean_d = samples.iter().map(|s| s.0).sum::<f64>() / m;
    let mean_l = samples.iter().map(|s| s.1).sum::<f64>() / m;
    let sxx: f64 = samples.iter().map(|s| (s.0 - mean_d).powi(2)).sum();
    if sxx <= 1e-12 * mean_d.abs().max(1.0) {
        return Err(Error::Numerics("degenerate query grid: |x-y|^2/t does not vary".into()));
    }
    let sxy: f64 = samples.iter().map(|s| (s.0 - mean_d) * (s.1 - mean_l)).sum();
    let slope = sxy / sxx;
    let rate = if slope < 0.0 { (-1.0 / slope).clamp(ENVELOPE_RATE_RANGE.0, ENVELOPE_RATE_RANGE.1) } else { ENVELOPE_RATE_RANGE.1 };
    let offsets = samples.iter().map(|s| s.1 + s.0 / rate);
    let (lo, hi) = offsets.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let envelope = BoundEnvelope {
        c_lower: lo.exp().clamp(ENVELOPE_C_RANGE.0, ENVELOPE_C_RANGE.1),
        c_upper: hi.exp().clamp(ENVELOPE_C_RANGE.0, ENVELOPE_C_RANGE.1),
        rate_lower: rate,
        rate_upper: rate,
        sigma,
    };
    let slack = 1e-12;
    let mut violations = Vec::new();
    let (mut resolved, mut sandwiched) = (0, 0);
    for (i, p) in points.iter_mut().enumerate() {
        let (lo, hi) = envelope.log_bounds(p.t, p.r, p.rp, p.mu);
        p.envelope_lo = lo.exp();
        p.envelope_hi = hi.exp();
        p.sandwiched = p.resolved && lo <= p.log_h + slack && p.log_h <= hi + slack;
        if p.resolved {
            resolved += 1;
            if p.sandwiched {
                sandwiched += 1;
            } else {
                violations.push(i);
            }
        }
    }
    Ok(EnvelopeReport { envelope, points, resolved, sandwiched, violations })
}
