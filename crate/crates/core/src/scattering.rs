//! Asymptotic completeness: v(t) = e^{itP_a}u(t), its dyadic Cauchy increments,
//! and the scattering state u₊ from the Duhamel integral.

use num_complex::Complex64;
use serde::Serialize;

use crate::diagnostics::lr_norm;
use crate::error::{Error, Result};
use crate::hankel::RadialField;
use crate::operator::{sphere_area, Exponent};
use crate::solver::{linear_propagate, Trajectory};

/// Convergence threshold for the last dyadic increment, relative to ‖u₀‖_{H¹}.
pub const DEFAULT_TOLERANCE: f64 = 1e-4;

/// (ω Σ (1+ρ²)|c|²)^{1/2} on the field's own spectral side.
pub fn h1_norm(f: &RadialField) -> f64 {
    let c = f.coefficients();
    (sphere_area(f.dim()) * c.iter().zip(f.grid().rho()).map(|(c, r)| (1.0 + r * r) * c.norm_sqr()).sum::<f64>()).sqrt()
}

pub fn h1_distance(a: &RadialField, b: &RadialField) -> Result<f64> {
    Ok(h1_norm(&a.sub(b)?))
}

/// e^{itP_a}u(t).
pub fn pull_back(u: &RadialField, t: f64) -> RadialField {
    linear_propagate(u, -t)
}

#[derive(Debug, Clone, Serialize)]
pub struct InteractionProfile {
    /// Snapshot indices of the checkpoints 0, T/2^J, …, T/2, T.
    pub indices: Vec<usize>,
    pub times: Vec<f64>,
    /// ‖v(t_{j+1}) − v(t_j)‖_{H¹}, one per consecutive checkpoint pair.
    pub increments: Vec<f64>,
    pub initial_h1: f64,
    /// Set when the parameters violate the scattering hypotheses.
    pub warning: Option<String>,
    #[serde(skip)]
    pub profile: Vec<RadialField>,
}

impl InteractionProfile {
    pub fn last_increment(&self) -> f64 {
        self.increments.last().copied().unwrap_or(0.0)
    }
    /// Earliest checkpoint whose incoming increment is below `tol·‖u₀‖_{H¹}`, if any.
    pub fn converged_at(&self, tol: f64) -> Option<f64> {
        let bound = tol * self.initial_h1;
        self.increments.iter().position(|&d| d < bound).map(|j| self.times[j + 1])
    }
}

/// Snapshot indices nearest to T/2^j, j = 0..J, while a snapshot lies within 5% of the target.
pub fn dyadic_checkpoints(traj: &Trajectory) -> Vec<usize> {
    let end = traj.final_time();
    let mut idx = vec![traj.len() - 1];
    let mut target = end;
    loop {
        target *= 0.5;
        let nearest = nearest_index(&traj.times, target);
        if nearest == 0 || nearest >= *idx.last().expect("non-empty") || (traj.times[nearest] - target).abs() > 0.05 * target {
            break;
        }
        idx.push(nearest);
    }
    idx.push(0);
    idx.reverse();
    idx.dedup();
    idx
}

fn nearest_index(times: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, &t) in times.iter().enumerate() {
        if (t - target).abs() < (times[best] - target).abs() {
            best = i;
        }
    }
    best
}

pub fn interaction_profile(traj: &Trajectory) -> Result<InteractionProfile> {
    if traj.is_empty() {
        return Err(Error::InvalidParams("empty trajectory".into()));
    }
    let indices = dyadic_checkpoints(traj);
    let profile: Vec<RadialField> = indices.iter().map(|&i| pull_back(&traj.snapshots[i], traj.times[i])).collect();
    let increments = profile.windows(2).map(|w| h1_distance(&w[1], &w[0])).collect::<Result<Vec<_>>>()?;
    Ok(InteractionProfile {
        times: indices.iter().map(|&i| traj.times[i]).collect(),
        indices,
        increments,
        initial_h1: h1_norm(traj.initial()),
        warning: traj.params.scattering_violation(),
        profile,
    })
}

/// Quadrature weights on the snapshot times: composite Simpson on pairs of
/// equal intervals, trapezoid on anything left over.
fn duhamel_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    let mut i = 0;
    while i + 1 < n {
        let h0 = times[i + 1] - times[i];
        if i + 2 < n && ((times[i + 2] - times[i + 1]) - h0).abs() <= 1e-9 * h0 {
            w[i] += h0 / 3.0;
            w[i + 1] += 4.0 * h0 / 3.0;
            w[i + 2] += h0 / 3.0;
            i += 2;
        } else {
            w[i] += 0.5 * h0;
            w[i + 1] += 0.5 * h0;
            i += 1;
        }
    }
    w
}

#[derive(Debug, Clone)]
pub struct ScatterState {
    /// u₀ − iκ∫₀^T e^{isP}(|u|^{p−1}u)(s) ds
    pub u_plus: RadialField,
    /// v(T) = e^{iTP}u(T)
    pub v_final: RadialField,
    /// ‖u₊ − v(T)‖_{H¹}
    pub quadrature_gap: f64,
    /// Last dyadic increment, a bound on the neglected tail ∫_T^∞.
    pub tail_bound: f64,
    pub converged: bool,
}

pub fn scatter_state(traj: &Trajectory, tol: f64) -> Result<ScatterState> {
    let prof = interaction_profile(traj)?;
    let grid = traj.grid();
    let dim = traj.initial().dim();
    let half = 0.5 * (traj.params.p - 1.0);
    let weights = duhamel_weights(&traj.times);
    let mut acc = vec![Complex64::new(0.0, 0.0); grid.n_modes()];
    if traj.coupling != 0.0 {
        let rho2: Vec<f64> = grid.rho().iter().map(|r| r * r).collect();
        for ((f, &t), &w) in traj.snapshots.iter().zip(&traj.times).zip(&weights) {
            if w == 0.0 {
                continue;
            }
            let nl: Vec<Complex64> = f.samples().iter().map(|z| z * z.norm_sqr().powf(half)).collect();
            let c = grid.field_coefficients(&nl, dim);
            for ((a, c), l) in acc.iter_mut().zip(&c).zip(&rho2) {
                *a += c * Complex64::from_polar(w * traj.coupling, t * l);
            }
        }
    }
    let c0 = traj.initial().coefficients();
    let cp: Vec<Complex64> = c0.iter().zip(&acc).map(|(c, a)| c - Complex64::new(0.0, 1.0) * a).collect();
    let u_plus = traj.initial().with_samples(grid.field_from_coefficients(&cp, dim))?;
    let v_final = prof.profile.last().expect("non-empty").clone();
    let quadrature_gap = h1_distance(&u_plus, &v_final)?;
    let tail_bound = prof.last_increment();
    let converged = tail_bound < tol * prof.initial_h1;
    Ok(ScatterState { u_plus, v_final, quadrature_gap, tail_bound, converged })
}

#[derive(Debug, Clone, Serialize)]
pub struct Subdivision {
    /// (t_start, t_end, ‖u‖_{L^{n+1}_t L^{2(n+1)/(n−1)}_x(I_j)})
    pub intervals: Vec<(f64, f64, f64)>,
    /// Intervals spanning a single step whose norm already exceeds η.
    pub coarse: Vec<usize>,
}

impl Subdivision {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }
}

/// Greedy left-to-right partition of the run into intervals with space-time norm ≤ η.
pub fn subdivide_by_norm(traj: &Trajectory, eta: f64) -> Result<Subdivision> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParams(format!("eta must be positive, got {eta}")));
    }
    let n = traj.params.n as f64;
    let q = n + 1.0;
    let r = 2.0 * (n + 1.0) / (n - 1.0);
    let a: Vec<f64> = traj.snapshots.iter().map(|f| lr_norm(f, Exponent::Finite(r)).powf(q)).collect();
    let slab = |i: usize| 0.5 * (traj.times[i + 1] - traj.times[i]) * (a[i] + a[i + 1]);
    let budget = eta.powf(q);
    let mut intervals = Vec::new();
    let mut coarse = Vec::new();
    let mut start = 0;
    let mut acc = 0.0;
    for i in 0..traj.len().saturating_sub(1) {
        let s = slab(i);
        if acc + s > budget && i > start {
            intervals.push((traj.times[start], traj.times[i], acc.powf(1.0 / q)));
            start = i;
            acc = 0.0;
        }
        acc += s;
        if acc > budget && i == start {
            coarse.push(intervals.len());
            intervals.push((traj.times[i], traj.times[i + 1], acc.powf(1.0 / q)));
            start = i + 1;
            acc = 0.0;
        }
    }
    if start + 1 < traj.len() || intervals.is_empty() {
        intervals.push((traj.times[start], traj.final_time(), acc.powf(1.0 / q)));
    }
    Ok(Subdivision { intervals, coarse })
}

/// 4 · 2ρ_rms · T: a radius the dispersed solution should not reach by time T.
pub fn recommended_radius(u0: &RadialField, horizon: f64) -> f64 {
    let c = u0.coefficients();
    let total: f64 = c.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let rho2: f64 = c.iter().zip(u0.grid().rho()).map(|(c, r)| r * r * c.norm_sqr()).sum::<f64>() / total;
    8.0 * rho2.sqrt() * horizon
}
