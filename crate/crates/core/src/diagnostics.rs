//! Functionals of fields and trajectories.
//!
//! Quadrature conventions: `∫F(r) r^{n−1} dr ≈ Σ w_m r_m^{n−2} F(r_m)` with the
//! grid's radial weights; free (a = 0) derivatives go through the cross-order
//! table of the field's own grid.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array2;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hankel::{dht_forward, dht_inverse, RadialField, RadialGrid, SpectralField};
use crate::operator::{self, field_coupling, kinetic_bound_constant, lambda_n, sphere_area, Exponent, ModelParams};
use crate::quadrature::gauss_legendre;
use crate::solver::Trajectory;
use crate::specfun::BesselOrder;

/// Snapshot-level diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub energy: f64,
    /// ‖∇u‖²
    pub kinetic: f64,
    /// a∫|u|²/|x|²
    pub potential: f64,
    /// κ/(p+1) ∫|u|^{p+1}
    pub nonlinear: f64,
    /// ‖u‖²_{Ḣ^{1/2}}
    pub hdot_half: f64,
    pub sup_norm: f64,
    pub boundary_mass: f64,
    /// ∫|u|²/|x|² / ‖∇u‖²
    pub hardy_quotient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyParts {
    /// ½⟨P_a u, u⟩, computed spectrally
    pub quadratic: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub nonlinear: f64,
    pub total: f64,
}

fn weighted_sum(f: &RadialField, integrand: impl Fn(f64, Complex64) -> f64) -> f64 {
    let e = f.dim() as f64 - 2.0;
    let g = f.grid();
    g.nodes()
        .iter()
        .zip(g.weights())
        .zip(f.samples())
        .map(|((&r, &w), &u)| w * r.powf(e) * integrand(r, u))
        .sum::<f64>()
        * sphere_area(f.dim())
}

/// ω_{n−1}∫|u|² r^{n−1} dr.
pub fn mass(f: &RadialField) -> f64 {
    sphere_area(f.dim()) * f.profile_norm_sqr()
}

/// ⟨P_a u, u⟩ = ω Σ ρ²|c|².
fn quadratic_form(f: &RadialField) -> f64 {
    quadratic_from(f, &f.coefficients())
}

fn quadratic_from(f: &RadialField, c: &[Complex64]) -> f64 {
    sphere_area(f.dim()) * c.iter().zip(f.grid().rho()).map(|(c, r)| r * r * c.norm_sqr()).sum::<f64>()
}

/// ω∫|u|²|x|^{−β}, with the origin behaviour of the grid order subtracted analytically.
fn singular_integral(f: &RadialField, beta: f64) -> Result<f64> {
    singular_from(f, &f.profile(), &f.coefficients(), beta)
}

fn singular_from(f: &RadialField, profile: &[Complex64], coeffs: &[Complex64], beta: f64) -> Result<f64> {
    Ok(sphere_area(f.dim()) * f.grid().singular_moment(profile, coeffs, beta)?)
}

/// Energy with nonlinear coefficient κ. The potential coefficient is the one
/// implied by the field's grid order, so that kinetic + potential = ⟨P u, u⟩.
pub fn energy(f: &RadialField, params: &ModelParams, coupling: f64) -> Result<EnergyParts> {
    let profile = f.profile();
    let coeffs = f.grid().coefficients(&profile);
    let hardy = if field_coupling(f) != 0.0 { singular_from(f, &profile, &coeffs, 2.0)? } else { 0.0 };
    Ok(energy_from(f, params, coupling, &coeffs, hardy))
}

fn energy_from(f: &RadialField, params: &ModelParams, coupling: f64, coeffs: &[Complex64], hardy: f64) -> EnergyParts {
    let q = quadratic_from(f, coeffs);
    let potential = field_coupling(f) * hardy;
    let p = params.p;
    let nonlinear = if coupling != 0.0 {
        coupling / (p + 1.0) * weighted_sum(f, |_, u| u.norm().powf(p + 1.0))
    } else {
        0.0
    };
    EnergyParts { quadratic: 0.5 * q, kinetic: q - potential, potential, nonlinear, total: 0.5 * q + nonlinear }
}

/// Spectrum of the profile under the order (k + (n−2)/2) transform.
struct FreeSpectrum {
    rho: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Complex64>,
    table: Option<Arc<crate::hankel::CrossTable>>,
}

fn free_order(f: &RadialField) -> Result<BesselOrder> {
    BesselOrder::new(f.sector() as f64 + 0.5 * (f.dim() as f64 - 2.0))
}

fn free_spectrum(f: &RadialField) -> Result<FreeSpectrum> {
    let vo = free_order(f)?;
    let grid = f.grid();
    if (grid.nu().value() - vo.value()).abs() <= 1e-14 * vo.value().max(1.0) {
        let spec = dht_forward(f);
        return Ok(FreeSpectrum {
            rho: grid.rho().to_vec(),
            weights: grid.spectral_weights().to_vec(),
            values: spec.values().to_vec(),
            table: None,
        });
    }
    let table = grid.cross_table(vo)?;
    let values = table.forward(grid, &f.profile());
    Ok(FreeSpectrum { rho: table.rho.clone(), weights: table.spectral_weights.clone(), values, table: Some(table) })
}

/// Free homogeneous norm ‖|∇|^s u‖²_{L²} by Parseval.
pub fn free_hdot_sqr(f: &RadialField, s: f64) -> Result<f64> {
    let spec = free_spectrum(f)?;
    Ok(sphere_area(f.dim())
        * spec
            .values
            .iter()
            .zip(&spec.rho)
            .zip(&spec.weights)
            .map(|((g, &rho), &w)| w * rho.powf(2.0 * s) * g.norm_sqr())
            .sum::<f64>())
}

/// |∇|^s u sampled on the field's own nodes.
pub fn free_derivative(f: &RadialField, s: f64) -> Result<RadialField> {
    let spec = free_spectrum(f)?;
    let scaled: Vec<Complex64> = spec.values.iter().zip(&spec.rho).map(|(g, rho)| g * rho.powf(s)).collect();
    match spec.table {
        None => Ok(dht_inverse(&SpectralField::new(Arc::clone(f.grid()), scaled, f.dim(), f.sector())?)),
        Some(table) => RadialField::from_profile(Arc::clone(f.grid()), &table.inverse(&scaled), f.dim(), f.sector()),
    }
}

/// ∫|u|²/|x|² / ‖∇u‖² on the field's own grid, with ‖∇u‖² = ⟨P u, u⟩ − a∫|u|²/|x|².
pub fn sharp_hardy_quotient(f: &RadialField) -> Result<f64> {
    let h = singular_integral(f, 2.0)?;
    let kinetic = quadratic_form(f) - field_coupling(f) * h;
    if h == 0.0 {
        return Ok(0.0);
    }
    if !(kinetic > 0.0) {
        return Err(Error::Numerics(format!("non-positive kinetic energy {kinetic:e} in Hardy quotient")));
    }
    Ok(h / kinetic)
}

/// L^r norm over ℝⁿ.
pub fn lr_norm(f: &RadialField, r: Exponent) -> f64 {
    match r {
        Exponent::Infinite => f.sup_norm(),
        Exponent::Finite(r) => weighted_sum(f, |_, u| u.norm().powf(r)).powf(1.0 / r),
    }
}

/// ω∫|u|^p |x|^{−β}, with the quadrature error of the leading origin power removed.
fn singular_lp(f: &RadialField, p: f64, beta: f64) -> Result<f64> {
    let grid = f.grid();
    let n = f.dim() as f64;
    let raw = weighted_sum(f, |r, u| u.norm().powf(p) * r.powf(-beta));
    let b = grid.origin_coefficient(&f.coefficients()).norm();
    if b == 0.0 {
        return Ok(raw);
    }
    let gamma = p * (grid.nu().value() - 0.5 * (n - 2.0)) - beta + n - 2.0;
    if gamma <= -2.0 {
        return Err(Error::Domain(format!("∫|u|^{p}|x|^-{beta} diverges at the origin for this grid order")));
    }
    Ok(raw - sphere_area(f.dim()) * b.powf(p) * grid.origin_quadrature_error(gamma)?)
}

/// ∫|u|^p |x|^{−sp} / ‖|∇|^s u‖^p_{L^p}.
pub fn hardy_quotient(f: &RadialField, s: f64, p_exp: f64) -> Result<f64> {
    let n = f.dim() as f64;
    if !(p_exp >= 1.0) || !p_exp.is_finite() {
        return Err(Error::Domain(format!("Hardy exponent p = {p_exp} must be >= 1")));
    }
    if !(s >= 0.0) || s * p_exp >= n {
        return Err(Error::Domain(format!("Hardy quotient needs 0 <= s < n/p = {}, got s = {s}", n / p_exp)));
    }
    if f.samples().iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    if s == 0.0 {
        return Ok(1.0);
    }
    if p_exp == 2.0 && s == 1.0 {
        return sharp_hardy_quotient(f);
    }
    let (num, den) = if p_exp == 2.0 {
        (singular_integral(f, 2.0 * s)?, free_hdot_sqr(f, s)?)
    } else {
        let num = singular_lp(f, p_exp, s * p_exp)?;
        let d = lr_norm(&free_derivative(f, s)?, Exponent::Finite(p_exp));
        (num, d.powf(p_exp))
    };
    if !(den > 0.0) {
        return Err(Error::Numerics("degenerate Hardy denominator".into()));
    }
    Ok(num / den)
}

/// Diagnostics of one snapshot.
pub fn record(f: &RadialField, params: &ModelParams, coupling: f64, t: f64) -> Result<DiagnosticsRecord> {
    let profile = f.profile();
    let coeffs = f.grid().coefficients(&profile);
    let hardy = singular_from(f, &profile, &coeffs, 2.0)?;
    let e = energy_from(f, params, coupling, &coeffs, hardy);
    Ok(DiagnosticsRecord {
        t,
        mass: mass(f),
        energy: e.total,
        kinetic: e.kinetic,
        potential: e.potential,
        nonlinear: e.nonlinear,
        hdot_half: free_hdot_sqr(f, 0.5)?,
        sup_norm: f.sup_norm(),
        boundary_mass: f.boundary_fraction(),
        hardy_quotient: if e.kinetic > 0.0 { hardy / e.kinetic } else { 0.0 },
    })
}

/// c·E − ‖∇u‖² with c the kinetic-energy constant.
pub fn kinetic_check(record: &DiagnosticsRecord, params: &ModelParams) -> f64 {
    kinetic_bound_constant(params) * record.energy - record.kinetic
}

#[derive(Debug, Clone, Serialize)]
pub struct KineticReport {
    pub constant: f64,
    pub margins: Vec<f64>,
    /// Margin divided by |E| (0 for vanishing energy).
    pub relative: Vec<f64>,
    /// First snapshot whose margin is below −tol·E.
    pub violation: Option<usize>,
}

pub fn kinetic_check_trajectory(traj: &Trajectory, tol: f64) -> KineticReport {
    let margins: Vec<f64> = traj.records.iter().map(|r| kinetic_check(r, &traj.params)).collect();
    let relative: Vec<f64> = margins
        .iter()
        .zip(&traj.records)
        .map(|(m, r)| if r.energy != 0.0 { m / r.energy.abs() } else { 0.0 })
        .collect();
    let violation = margins.iter().zip(&traj.records).position(|(m, r)| *m < -tol * r.energy.abs());
    KineticReport { constant: kinetic_bound_constant(&traj.params), margins, relative, violation }
}

/// Optional derivative inside a space-time norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Derivative {
    /// |∇|^s
    Free(f64),
    /// P_a^{s/2}
    Operator(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormRequest {
    pub q: Exponent,
    pub r: Exponent,
    pub window: (f64, f64),
    pub derivative: Option<Derivative>,
}

impl NormRequest {
    pub fn new(q: f64, r: f64, window: (f64, f64)) -> Self {
        NormRequest { q: Exponent::Finite(q), r: Exponent::Finite(r), window, derivative: None }
    }
}

fn exponent_ok(e: Exponent) -> bool {
    match e {
        Exponent::Finite(v) => v >= 1.0 && v.is_finite(),
        Exponent::Infinite => true,
    }
}

/// (∫ a(t)^q dt)^{1/q} by the trapezoid rule; a single node counts as a slab of width `slab`.
fn time_norm(values: &[f64], times: &[f64], q: Exponent, slab: f64) -> f64 {
    match q {
        Exponent::Infinite => values.iter().cloned().fold(0.0, f64::max),
        Exponent::Finite(q) => {
            let integral = if values.len() == 1 {
                slab * values[0].powf(q)
            } else {
                times
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(q) + v[1].powf(q)))
                    .sum()
            };
            integral.powf(1.0 / q)
        }
    }
}

/// Discrete L^q_t L^r_x norm of fields sampled at `times`.
pub fn discrete_lq_lr(fields: &[RadialField], times: &[f64], q: f64, r: f64) -> Result<f64> {
    if fields.len() != times.len() || fields.is_empty() {
        return Err(Error::InvalidParams("fields and times must be non-empty and of equal length".into()));
    }
    let values: Vec<f64> = fields.iter().map(|f| lr_norm(f, Exponent::Finite(r))).collect();
    Ok(time_norm(&values, times, Exponent::Finite(q), 0.0))
}

fn window_slab(traj: &Trajectory, window: (f64, f64)) -> Result<Vec<usize>> {
    let (t0, t1) = window;
    let end = traj.final_time();
    let eps = 1e-9 * end.abs().max(1.0);
    if !(t0 >= -eps) || !(t1 >= t0) || t1 > end + eps {
        return Err(Error::InvalidParams(format!(
            "time window [{t0}, {t1}] is not inside the trajectory [0, {end}]"
        )));
    }
    let idx = traj.window_indices(t0, t1);
    if idx.is_empty() {
        return Err(Error::InvalidParams(format!("no snapshots inside the window [{t0}, {t1}]")));
    }
    Ok(idx)
}

/// ‖D u‖_{L^q_t L^r_x} over the request's window.
pub fn spacetime_norm(traj: &Trajectory, req: &NormRequest) -> Result<f64> {
    if !exponent_ok(req.q) || !exponent_ok(req.r) {
        return Err(Error::InvalidParams(format!("exponents must be >= 1, got q = {}, r = {}", req.q, req.r)));
    }
    let idx = window_slab(traj, req.window)?;
    let mut values = Vec::with_capacity(idx.len());
    for &i in &idx {
        let f = &traj.snapshots[i];
        let v = match req.derivative {
            None => lr_norm(f, req.r),
            Some(Derivative::Free(s)) => lr_norm(&free_derivative(f, s)?, req.r),
            Some(Derivative::Operator(s)) => lr_norm(&operator::fractional_power(f, s)?, req.r),
        };
        values.push(v);
    }
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    Ok(time_norm(&values, &times, req.q, traj.dt))
}

/// The weighted local-smoothing quantity of the Morawetz estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedDecay {
    /// ∫∫|u|²/|x|³ dx dt
    pub integral: f64,
    /// sup_t ‖u(t)‖²_{Ḣ^{1/2}}
    pub sup_hdot_half: f64,
    pub ratio: f64,
}

fn morawetz_gate(params: &ModelParams) -> Result<()> {
    let bound = 0.25 - lambda_n(params.n);
    if params.a > bound {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "the Morawetz estimate needs a > 1/4 - lambda_n = {bound}, got a = {}; \
             for such couplings ∫|u|²/|x|³ diverges at the origin",
            params.a
        )))
    }
}

fn sup_hdot(traj: &Trajectory, idx: &[usize]) -> f64 {
    idx.iter().map(|&i| traj.records[i].hdot_half).fold(0.0, f64::max)
}

pub fn morawetz_weighted_decay(traj: &Trajectory, window: (f64, f64)) -> Result<WeightedDecay> {
    morawetz_gate(&traj.params)?;
    let idx = window_slab(traj, window)?;
    let values = idx
        .iter()
        .map(|&i| singular_integral(&traj.snapshots[i], 3.0))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = idx.iter().map(|&i| traj.times[i]).collect();
    let integral = time_norm(&values, &times, Exponent::Finite(1.0), traj.dt);
    let sup = sup_hdot(traj, &idx);
    Ok(WeightedDecay { integral, sup_hdot_half: sup, ratio: if sup > 0.0 { integral / sup } else { 0.0 } })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InteractionBound {
    /// ‖u‖⁴_{L⁴_{t,x}}
    pub l4_fourth: f64,
    pub mass: f64,
    pub sup_hdot_half: f64,
    pub ratio: f64,
}

/// ‖u‖⁴_{L⁴} / (‖u₀‖²_{L²} sup‖u‖²_{Ḣ^{1/2}}) for n = 3.
///
/// Besides the general gate this also accepts a = 0, where the free
/// interaction estimate holds.
pub fn morawetz_l4_ratio(traj: &Trajectory, window: (f64, f64)) -> Result<InteractionBound> {
    if traj.params.n != 3 {
        return Err(Error::InvalidParams("the L4 interaction bound is the n = 3 form".into()));
    }
    if traj.params.a != 0.0 {
        morawetz_gate(&traj.params)?;
    }
    let idx = window_slab(traj, window)?;
    let l4 = spacetime_norm(traj, &NormRequest::new(4.0, 4.0, window))?.powi(4);
    let mass = traj.records[0].mass;
    let sup = sup_hdot(traj, &idx);
    let den = mass * sup;
    Ok(InteractionBound { l4_fourth: l4, mass, sup_hdot_half: sup, ratio: if den > 0.0 { l4 / den } else { 0.0 } })
}

type KernelKey = (u64, usize, u64, usize);

fn kernel_cache() -> &'static Mutex<HashMap<KernelKey, Arc<Array2<f64>>>> {
    static CACHE: OnceLock<Mutex<HashMap<KernelKey, Arc<Array2<f64>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Spherical average of |x − y| over |x| = r, |y| = r′ in ℝⁿ.
pub fn angular_kernel(n: usize, r: f64, rp: f64) -> f64 {
    if n == 3 {
        if r == 0.0 || rp == 0.0 {
            return r + rp;
        }
        return ((r + rp).powi(3) - (r - rp).abs().powi(3)) / (6.0 * r * rp);
    }
    let (x, w) = gauss_legendre(96);
    let e = 0.5 * (n as f64 - 3.0);
    let (mut num, mut den) = (0.0, 0.0);
    for (mu, wt) in x.iter().zip(&w) {
        let jac = wt * (1.0 - mu * mu).powf(e);
        num += jac * (r * r + rp * rp - 2.0 * r * rp * mu).max(0.0).sqrt();
        den += jac;
    }
    num / den
}

fn kernel_table(grid: &RadialGrid, n: usize) -> Arc<Array2<f64>> {
    let key = (grid.nu().value().to_bits(), grid.n_modes(), grid.radius().to_bits(), n);
    if let Some(k) = kernel_cache().lock().expect("kernel cache poisoned").get(&key) {
        return Arc::clone(k);
    }
    let nodes = grid.nodes();
    let m = nodes.len();
    let mut table = Array2::<f64>::zeros((m, m));
    for i in 0..m {
        for j in i..m {
            let k = angular_kernel(n, nodes[i], nodes[j]);
            table[[i, j]] = k;
            table[[j, i]] = k;
        }
    }
    let table = Arc::new(table);
    kernel_cache()
        .lock()
        .expect("kernel cache poisoned")
        .entry(key)
        .or_insert_with(|| Arc::clone(&table));
    table
}

/// J = ½∬|u(x)|²|x − y||u(y)|² dx dy.
pub fn morawetz_action(f: &RadialField) -> f64 {
    let grid = f.grid();
    let n = f.dim();
    let e = n as f64 - 2.0;
    let density: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(f.samples())
        .map(|((r, w), u)| w * r.powf(e) * u.norm_sqr())
        .collect();
    let table = kernel_table(grid, n);
    let k = table.dot(&ndarray::ArrayView1::from(&density[..]));
    let omega = sphere_area(n);
    0.5 * omega * omega * density.iter().zip(k.iter()).map(|(a, b)| a * b).sum::<f64>()
}

/// (t_i, M(t_i)) with M = ¼ dJ/dt by centered differences at interior snapshots.
pub fn morawetz_action_rate(traj: &Trajectory) -> Vec<(f64, f64)> {
    let j: Vec<f64> = traj.snapshots.iter().map(morawetz_action).collect();
    (1..traj.len().saturating_sub(1))
        .map(|i| {
            let dt = traj.times[i + 1] - traj.times[i - 1];
            (traj.times[i], 0.25 * (j[i + 1] - j[i - 1]) / dt)
        })
        .collect()
}

/// ‖P_a^{s/2} f‖_{L^r} / ‖|∇|^s f‖_{L^r}.
pub fn sobolev_equivalence_ratio(f: &RadialField, s: f64, r: f64, params: &ModelParams) -> Result<f64> {
    operator::check_sector(f, params)?;
    let n = params.n as f64;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("Sobolev ratio needs s in [0, 1], got {s}")));
    }
    if !(r > 1.0) || (s > 0.0 && r >= n / s) || !r.is_finite() {
        return Err(Error::Domain(format!("Sobolev ratio needs r in (1, n/s), got r = {r}")));
    }
    let (num, den) = if r == 2.0 {
        let c = f.coefficients();
        let num: f64 = c.iter().zip(f.grid().rho()).map(|(c, rho)| rho.powf(2.0 * s) * c.norm_sqr()).sum();
        ((sphere_area(f.dim()) * num).sqrt(), free_hdot_sqr(f, s)?.sqrt())
    } else {
        (
            lr_norm(&operator::fractional_power(f, s)?, Exponent::Finite(r)),
            lr_norm(&free_derivative(f, s)?, Exponent::Finite(r)),
        )
    };
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Numerics(format!("degenerate Sobolev denominator {den:e}")));
    }
    Ok(num / den)
}

/// Seeded family of smooth radial test functions adapted to the grid order:
/// (r/w)^{ν−(n−2)/2} e^{−r²/(2w²)} (c₀ + c₁ r²/w²) with w ∈ [1/2, 5/2], c₀ ∈ [1/2, 1], c₁ ∈ [−1/4, 1].
pub fn test_family(grid: &Arc<RadialGrid>, dim: usize, count: usize, seed: u64) -> Result<Vec<RadialField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exponent = grid.nu().value() - 0.5 * (dim as f64 - 2.0);
    (0..count)
        .map(|_| {
            let w: f64 = rng.random_range(0.5..2.5);
            let c0: f64 = rng.random_range(0.5..1.0);
            let c1: f64 = rng.random_range(-0.25..1.0);
            RadialField::from_fn(Arc::clone(grid), dim, 0, |r| {
                let x = r / w;
                Complex64::new(x.powf(exponent) * (-0.5 * x * x).exp() * (c0 + c1 * x * x), 0.0)
            })
        })
        .collect()
}

/// ‖(P_a − α)⁻¹ f‖_{L^{r′}} / ‖f‖_{L^r} with r = 2n/(n+2).
pub fn uniform_sobolev_ratio(f: &RadialField, alpha: Complex64, params: &ModelParams) -> Result<f64> {
    operator::check_sector(f, params)?;
    let n = params.n as f64;
    let r = 2.0 * n / (n + 2.0);
    let rp = 2.0 * n / (n - 2.0);
    let g = operator::resolvent(f, alpha)?;
    let den = lr_norm(f, Exponent::Finite(r));
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(lr_norm(&g, Exponent::Finite(rp)) / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hankel::make_grid;
    use std::f64::consts::PI;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn grid(nu: f64, n: usize, r: f64) -> Arc<RadialGrid> {
        make_grid(BesselOrder::new(nu).unwrap(), n, r).unwrap()
    }

    fn gaussian(g: &Arc<RadialGrid>, n: usize, w: f64) -> RadialField {
        RadialField::from_fn(Arc::clone(g), n, 0, |r| c((-0.5 * r * r / (w * w)).exp())).unwrap()
    }

    /// u = r^{ν−(n−2)/2} e^{−r²/2} for the order-ν grid.
    fn regular(g: &Arc<RadialGrid>, n: usize) -> RadialField {
        let e = g.nu().value() - 0.5 * (n as f64 - 2.0);
        RadialField::from_fn(Arc::clone(g), n, 0, |r| c(r.powf(e) * (-0.5 * r * r).exp())).unwrap()
    }

    fn params(n: usize, a: f64) -> ModelParams {
        ModelParams::new(n, a, 3.0).unwrap()
    }

    #[test]
    fn gaussian_mass_and_energy_match_closed_form() {
        let g = grid(0.5, 128, 20.0);
        let f = gaussian(&g, 3, 1.0);
        let omega = 4.0 * PI;
        assert!((mass(&f) - omega * PI.sqrt() / 4.0).abs() < 1e-12);
        let e = energy(&f, &params(3, 0.0), 1.0).unwrap();
        let kinetic = omega * 3.0 * PI.sqrt() / 8.0;
        let quartic = omega * PI.sqrt() / (8.0 * 2f64.sqrt());
        assert!((e.kinetic - kinetic).abs() < 1e-8 * kinetic);
        assert!((e.total - (0.5 * kinetic + 0.25 * quartic)).abs() < 1e-8);
        assert_eq!(e.potential, 0.0);
    }

    #[test]
    fn zero_field_diagnostics() {
        let g = grid(0.9, 32, 10.0);
        let z = RadialField::zeros(Arc::clone(&g), 3, 0);
        let p = params(3, 0.9 * 0.9 - 0.25);
        let r = record(&z, &p, 1.0, 0.0).unwrap();
        assert_eq!(r.mass, 0.0);
        assert_eq!(r.energy, 0.0);
        assert_eq!(kinetic_check(&r, &p), 0.0);
        assert_eq!(morawetz_action(&z), 0.0);
        assert_eq!(hardy_quotient(&z, 0.5, 2.0).unwrap(), 0.0);
        assert_eq!(uniform_sobolev_ratio(&z, c(-1.0), &p).unwrap(), 0.0);
    }

    #[test]
    fn unit_gaussian_mass() {
        use crate::solver::{InitialData, InitialFamily};
        let g = grid(1.0, 64, 20.0);
        let p = params(3, 0.75);
        let f = InitialData { family: InitialFamily::UnitGaussian, width: 1.3, amplitude: 1.0 }.build(&g, &p).unwrap();
        assert!((mass(&f) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn kinetic_identity_for_regular_data() {
        // u = r^{ν−1/2}e^{−r²/2}: ⟨P u,u⟩ = ω(ν+1)Γ(ν+1)/2 and ∫|u|²/r² = ωΓ(ν)/2
        let nu: f64 = 1.1;
        let a = nu * nu - 0.25;
        let g = grid(nu, 192, 25.0);
        let f = regular(&g, 3);
        let e = energy(&f, &params(3, a), 0.0).unwrap();
        let omega = 4.0 * PI;
        let gnu = crate::specfun::gamma_fn(nu).unwrap();
        let q = omega * (nu + 1.0) * nu * gnu / 2.0;
        let h = omega * gnu / 2.0;
        assert!((2.0 * e.quadratic - q).abs() < 1e-9 * q);
        assert!((e.potential - a * h).abs() < 1e-9 * q);
    }

    #[test]
    fn sharp_hardy_matches_closed_form_family() {
        for &eps in &[0.3, 0.1, 0.02] {
            let g = grid(eps, 256, 30.0);
            let f = regular(&g, 3);
            let got = sharp_hardy_quotient(&f).unwrap();
            let oracle = 4.0 / (1.0 + 4.0 * eps);
            assert!((got - oracle).abs() < 1e-7, "eps={eps} {got} {oracle}");
            assert!(got < operator::hardy_constant(3));
        }
    }

    #[test]
    fn hardy_s0_is_one_and_range_checked() {
        let g = grid(0.5, 64, 20.0);
        let f = gaussian(&g, 3, 1.0);
        assert_eq!(hardy_quotient(&f, 0.0, 3.0).unwrap(), 1.0);
        assert!(hardy_quotient(&f, 1.5, 2.0).is_err());
        assert!(hardy_quotient(&f, -0.1, 2.0).is_err());
    }

    #[test]
    fn free_derivative_matches_laplacian_of_gaussian() {
        // |∇|² e^{−r²/2} = −Δ e^{−r²/2} = (3 − r²) e^{−r²/2} in ℝ³
        let g = grid(0.5, 256, 25.0);
        let f = gaussian(&g, 3, 1.0);
        let d = free_derivative(&f, 2.0).unwrap();
        for (i, (&r, u)) in g.nodes().iter().zip(d.samples()).enumerate() {
            let exact = (3.0 - r * r) * (-0.5 * r * r).exp();
            assert!((u.re - exact).abs() < 1e-9, "i={i} r={r} {} {exact}", u.re);
        }
    }

    #[test]
    fn free_gradient_norm_off_the_free_grid() {
        // ‖∇u‖² = ⟨P u, u⟩ − a∫|u|²/r² for u = r^{ν−1/2}e^{−r²/2}
        let nu: f64 = 1.3;
        let a = nu * nu - 0.25;
        let f = regular(&grid(nu, 256, 25.0), 3);
        let gnu = crate::specfun::gamma_fn(nu).unwrap();
        let exact = 4.0 * PI * 0.5 * gnu * ((nu + 1.0) * nu - a);
        // the free spectrum of an order-ν profile decays algebraically, which limits the truncated sum
        let got = free_hdot_sqr(&f, 1.0).unwrap();
        assert!((got - exact).abs() < 1e-4 * exact, "{got} {exact}");
        let finer = free_hdot_sqr(&regular(&grid(nu, 512, 25.0), 3), 1.0).unwrap();
        assert!((finer - exact).abs() < 0.5 * (got - exact).abs());
    }

    #[test]
    fn hdot_half_of_gaussian() {
        let f = gaussian(&grid(0.5, 256, 25.0), 3, 1.0);
        // ∫|ξ| |û|²: ω ∫ ρ³ e^{−ρ²} dρ = ω/2
        let exact = 4.0 * PI * 0.5;
        let h = free_hdot_sqr(&f, 0.5).unwrap();
        assert!((h - exact).abs() < 1e-5 * exact, "{h} {exact}");
    }

    #[test]
    fn sobolev_ratio_free_is_one_and_quadratic_form_oracle() {
        let p0 = params(3, 0.0);
        let f = gaussian(&grid(0.5, 128, 20.0), 3, 1.0);
        assert!((sobolev_equivalence_ratio(&f, 0.7, 3.0, &p0).unwrap() - 1.0).abs() < 1e-12);
        let a = 0.5;
        let p = params(3, a);
        let g = grid(p.sector(0).nu.value(), 256, 25.0);
        let f = regular(&g, 3);
        let ratio = sobolev_equivalence_ratio(&f, 1.0, 2.0, &p).unwrap();
        let e = energy(&f, &p, 0.0).unwrap();
        let oracle = ((e.kinetic + e.potential) / e.kinetic).sqrt();
        assert!((ratio - oracle).abs() < 5e-4 * oracle, "{ratio} {oracle}");
        assert!(sobolev_equivalence_ratio(&f, 1.0, 3.0, &p).is_err());
        assert!(sobolev_equivalence_ratio(&f, 1.5, 2.0, &p).is_err());
    }

    #[test]
    fn uniform_sobolev_free_matches_direct_multiplier() {
        let p = params(3, 0.0);
        let g = grid(0.5, 256, 30.0);
        let f = gaussian(&g, 3, 1.0);
        let ratio = uniform_sobolev_ratio(&f, c(-1.0), &p).unwrap();
        // (−Δ + 1)⁻¹ f = G₁ * f with G₁ = e^{−|x|}/(4π|x|); compare the L⁶ norm via radial convolution
        let direct = |r: f64| {
            let (x, w) = gauss_legendre(200);
            let mut s = 0.0;
            for (xi, wi) in x.iter().zip(&w) {
                let rp = 12.0 * (xi + 1.0) / 2.0;
                let fr = (-0.5 * rp * rp).exp();
                // angular integral of e^{−|x−y|}/(4π|x−y|) over the sphere |y| = rp
                let k = if r == 0.0 {
                    (-rp).exp() / rp * rp * rp
                } else {
                    rp / (2.0 * r) * ((-(r - rp).abs()).exp() - (-(r + rp)).exp())
                };
                s += 6.0 * wi * fr * k;
            }
            s
        };
        let mut num = 0.0;
        for (&r, &w) in g.nodes().iter().zip(g.weights()).take(200) {
            num += w * r * direct(r).powi(6);
        }
        let num = (4.0 * PI * num).powf(1.0 / 6.0);
        let den = lr_norm(&f, Exponent::Finite(1.2));
        assert!((ratio - num / den).abs() < 1e-4 * ratio, "{ratio} {}", num / den);
    }

    #[test]
    fn angular_kernel_values() {
        assert_eq!(angular_kernel(3, 2.0, 0.0), 2.0);
        assert!((angular_kernel(3, 1.0, 1.0) - 4.0 / 3.0).abs() < 1e-15);
        // n = 3 average through the quadrature path agrees with the closed form
        for &(r, rp) in &[(0.3, 1.7), (2.0, 2.5), (1.0, 1e-3)] {
            let closed = angular_kernel(3, r, rp);
            let (x, w) = gauss_legendre(400);
            let num: f64 = x.iter().zip(&w).map(|(m, w)| w * (r * r + rp * rp - 2.0 * r * rp * m).sqrt()).sum();
            assert!((num / 2.0 - closed).abs() < 1e-6);
        }
        // n ≥ 4: K(r, 0) = r
        assert!((angular_kernel(5, 1.7, 0.0) - 1.7).abs() < 1e-12);
    }

    #[test]
    fn morawetz_action_symmetries() {
        let g = grid(0.5, 64, 15.0);
        let f = RadialField::from_fn(Arc::clone(&g), 3, 0, |r| Complex64::new((-r * r).exp(), 0.3 * r * (-r * r).exp())).unwrap();
        let j = morawetz_action(&f);
        assert_eq!(morawetz_action(&f.conj()), j);
        let j2 = morawetz_action(&f.scaled(c(2.0)));
        assert!((j2 - 16.0 * j).abs() <= 1e-14 * j2);
    }

    #[test]
    fn stationary_trajectory_norm_is_separable() {
        let g = grid(0.5, 64, 15.0);
        let f = gaussian(&g, 3, 1.0);
        let times: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
        let snaps = vec![f.clone(); times.len()];
        let traj = Trajectory::from_snapshots(params(3, 0.0), 1.0, times, snaps).unwrap();
        let v = spacetime_norm(&traj, &NormRequest::new(2.0, 6.0, (0.0, 5.0))).unwrap();
        let exact = 5f64.sqrt() * lr_norm(&f, Exponent::Finite(6.0));
        assert!((v - exact).abs() < 1e-13 * exact);
        // homogeneity and window monotonicity
        let traj2 = Trajectory::from_snapshots(params(3, 0.0), 1.0, traj.times.clone(), vec![f.scaled(c(3.0)); 11]).unwrap();
        assert!((spacetime_norm(&traj2, &NormRequest::new(2.0, 6.0, (0.0, 5.0))).unwrap() - 3.0 * v).abs() < 1e-12 * v);
        assert!(spacetime_norm(&traj, &NormRequest::new(2.0, 6.0, (0.0, 2.5))).unwrap() < v);
        assert!(spacetime_norm(&traj, &NormRequest::new(2.0, 6.0, (0.0, 6.0))).is_err());
    }

    #[test]
    fn weighted_decay_gate_and_single_snapshot() {
        let g0 = grid(0.5, 64, 15.0);
        let t0 = Trajectory::from_snapshots(params(3, 0.0), 1.0, vec![0.0], vec![gaussian(&g0, 3, 1.0)]).unwrap();
        assert!(morawetz_weighted_decay(&t0, (0.0, 0.0)).is_err());
        let p = params(3, 0.5);
        let g = grid(p.sector(0).nu.value(), 256, 20.0);
        let f = regular(&g, 3);
        let mut traj = Trajectory::from_snapshots(p, 1.0, vec![0.0], vec![f.clone()]).unwrap();
        traj.dt = 0.01;
        let wd = morawetz_weighted_decay(&traj, (0.0, 0.0)).unwrap();
        // u² r^{-3} r² = r^{2ν−2}e^{−r²}: ∫ = Γ(ν − 1/2)/2
        let nu = p.sector(0).nu.value();
        let exact = 0.01 * 4.0 * PI * 0.5 * crate::specfun::gamma_fn(nu - 0.5).unwrap();
        assert!((wd.integral - exact).abs() < 1e-4 * exact, "{} {exact}", wd.integral);
    }
}
