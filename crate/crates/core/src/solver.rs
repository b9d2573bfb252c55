//! Time integration of i∂ₜu = P_a u + κ|u|^{p−1}u on the radial sector.
//!
//! Linear steps are exact spectral phase rotations e^{−iρ²dt}; the nonlinear
//! substep is the exact solution u·e^{−iτκ|u|^{p−1}} of the pointwise ODE.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{AbortReason, Error, Result};
use crate::hankel::{make_grid, RadialField, RadialGrid};
use crate::operator::{self, lwp_exponents, ModelParams};
use crate::specfun::BesselOrder;

/// Blow-up guard: abort once sup|u| exceeds this multiple of the initial sup-norm.
pub const BLOW_UP_FACTOR: f64 = 1e6;
/// Truncation wall: abort once this fraction of the mass sits in the outer shell.
pub const WALL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialFamily {
    /// A e^{−r²/(2w²)}
    Gaussian,
    /// A (r/w)^{ν₀−(n−2)/2} e^{−r²/(2w²)}: smooth in the sector's own calculus
    Regular,
    /// Gaussian rescaled to mass A²
    UnitGaussian,
}

impl InitialFamily {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(InitialFamily::Gaussian),
            "regular" => Some(InitialFamily::Regular),
            "unit-gaussian" => Some(InitialFamily::UnitGaussian),
            _ => None,
        }
    }
    pub fn name(self) -> &'static str {
        match self {
            InitialFamily::Gaussian => "gaussian",
            InitialFamily::Regular => "regular",
            InitialFamily::UnitGaussian => "unit-gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialData {
    pub family: InitialFamily,
    pub width: f64,
    pub amplitude: f64,
}

impl InitialData {
    pub fn build(&self, grid: &Arc<RadialGrid>, params: &ModelParams) -> Result<RadialField> {
        if !(self.width > 0.0) || !self.width.is_finite() || !self.amplitude.is_finite() {
            return Err(Error::InvalidParams(format!(
                "initial data needs width > 0 and finite amplitude, got width {} amplitude {}",
                self.width, self.amplitude
            )));
        }
        let w = self.width;
        let n = params.n;
        let exponent = grid.nu().value() - 0.5 * (n as f64 - 2.0);
        let amp = self.amplitude;
        let field = match self.family {
            InitialFamily::Gaussian | InitialFamily::UnitGaussian => {
                RadialField::from_fn(Arc::clone(grid), n, 0, |r| Complex64::new(amp * (-0.5 * r * r / (w * w)).exp(), 0.0))?
            }
            InitialFamily::Regular => RadialField::from_fn(Arc::clone(grid), n, 0, |r| {
                Complex64::new(amp * (r / w).powf(exponent) * (-0.5 * r * r / (w * w)).exp(), 0.0)
            })?,
        };
        if self.family == InitialFamily::UnitGaussian {
            let m = diagnostics::mass(&field);
            if m == 0.0 {
                return Ok(field);
            }
            return Ok(field.scaled(Complex64::new(amp.abs() / m.sqrt(), 0.0)));
        }
        Ok(field)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    /// Replaces the sector order ν₀(a) when set (free-calculus experiments).
    pub nu_override: Option<f64>,
    pub n_modes: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub dt: f64,
    pub horizon: f64,
    pub snapshot_stride: usize,
    pub initial: InitialData,
    /// Coefficient κ of the nonlinearity; 1 is the defocusing equation, 0 the linear one.
    pub coupling: f64,
    /// Margin added to r̃′ in the negative-coupling exponent plans.
    pub lwp_margin: f64,
}

impl SolverConfig {
    pub fn new(params: ModelParams, grid: GridSpec, dt: f64, horizon: f64, initial: InitialData) -> Self {
        SolverConfig {
            params,
            grid,
            dt,
            horizon,
            snapshot_stride: 1,
            initial,
            coupling: 1.0,
            lwp_margin: operator::DEFAULT_LWP_MARGIN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParams(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParams(format!("horizon = {} must be >= 0", self.horizon)));
        }
        if self.horizon > 0.0 && self.horizon < self.dt * (1.0 - 1e-12) {
            return Err(Error::InvalidParams(format!(
                "horizon = {} must be at least dt = {}",
                self.horizon, self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParams("snapshot stride must be >= 1".into()));
        }
        if !self.coupling.is_finite() {
            return Err(Error::InvalidParams("nonlinear coupling must be finite".into()));
        }
        Ok(())
    }

    pub fn grid_order(&self) -> Result<BesselOrder> {
        match self.grid.nu_override {
            Some(nu) => BesselOrder::new(nu),
            None => Ok(self.params.sector(0).nu),
        }
    }

    pub fn make_grid(&self) -> Result<Arc<RadialGrid>> {
        make_grid(self.grid_order()?, self.grid.n_modes, self.grid.radius)
    }

    pub fn initial_field(&self, grid: &Arc<RadialGrid>) -> Result<RadialField> {
        self.initial.build(grid, &self.params)
    }

    /// Number of steps and the length of the last one.
    fn schedule(&self) -> (usize, f64) {
        if self.horizon == 0.0 {
            return (0, 0.0);
        }
        let steps = (self.horizon / self.dt - 1e-9).ceil().max(1.0) as usize;
        let last = self.horizon - (steps - 1) as f64 * self.dt;
        (steps, last)
    }
}

/// Snapshots of a run with their diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub coupling: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    pub snapshots: Vec<RadialField>,
    pub records: Vec<DiagnosticsRecord>,
    /// Boundary-mass fraction at every step (not only at snapshots).
    pub boundary_series: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        self.snapshots[0].grid()
    }
    pub fn initial(&self) -> &RadialField {
        &self.snapshots[0]
    }
    pub fn last(&self) -> &RadialField {
        self.snapshots.last().expect("non-empty trajectory")
    }
    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("non-empty trajectory")
    }

    /// A trajectory from externally supplied snapshots (e.g. synthetic data for norm checks).
    pub fn from_snapshots(params: ModelParams, coupling: f64, times: Vec<f64>, snapshots: Vec<RadialField>) -> Result<Self> {
        if times.len() != snapshots.len() || times.is_empty() {
            return Err(Error::InvalidParams("times and snapshots must be non-empty and of equal length".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParams("snapshot times must be strictly increasing".into()));
        }
        for s in &snapshots[1..] {
            s.check_compatible(&snapshots[0])?;
        }
        let records = times
            .iter()
            .zip(&snapshots)
            .map(|(&t, f)| diagnostics::record(f, &params, coupling, t))
            .collect::<Result<Vec<_>>>()?;
        let dt = if times.len() > 1 { times[1] - times[0] } else { 0.0 };
        let boundary_series = times.iter().zip(&snapshots).map(|(&t, f)| (t, f.boundary_fraction())).collect();
        Ok(Trajectory { params, coupling, dt, times, snapshots, records, boundary_series })
    }

    /// The snapshots whose times fall in [t0, t1].
    pub fn window_indices(&self, t0: f64, t1: f64) -> Vec<usize> {
        let eps = 1e-9 * self.final_time().abs().max(1.0);
        (0..self.len()).filter(|&i| self.times[i] >= t0 - eps && self.times[i] <= t1 + eps).collect()
    }
}

/// Exact linear step e^{−iρ²dt} with the profile scaling folded in.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Arc<RadialGrid>,
    scale: Vec<f64>,
    phase: Vec<Complex64>,
    half_nonlinear: f64,
    exponent: f64,
}

impl Stepper {
    /// A stepper for signed step `dt`; κ and p enter through the nonlinear half steps.
    pub fn new(grid: &Arc<RadialGrid>, dim: usize, dt: f64, coupling: f64, p: f64) -> Self {
        let factor = grid.profile_factor(dim);
        let scale = factor.iter().zip(grid.weights()).map(|(f, w)| f * w.sqrt()).collect();
        let phase = grid.rho().iter().map(|rho| Complex64::from_polar(1.0, -dt * rho * rho)).collect();
        Stepper { grid: Arc::clone(grid), scale, phase, half_nonlinear: 0.5 * dt * coupling, exponent: 0.5 * (p - 1.0) }
    }

    pub fn linear(&self, u: &mut [Complex64]) {
        let scaled: Vec<Complex64> = u.iter().zip(&self.scale).map(|(u, s)| u * s).collect();
        let mut c = self.grid.apply_q(&scaled);
        for (c, ph) in c.iter_mut().zip(&self.phase) {
            *c *= ph;
        }
        for ((u, v), s) in u.iter_mut().zip(self.grid.apply_q(&c)).zip(&self.scale) {
            *u = v / s;
        }
    }

    pub fn nonlinear_half(&self, u: &mut [Complex64]) {
        if self.half_nonlinear == 0.0 {
            return;
        }
        for z in u.iter_mut() {
            let m = z.norm_sqr().powf(self.exponent);
            *z *= Complex64::from_polar(1.0, -self.half_nonlinear * m);
        }
    }

    pub fn strang(&self, u: &mut [Complex64]) {
        self.nonlinear_half(u);
        self.linear(u);
        self.nonlinear_half(u);
    }
}

/// e^{−itP_a} f.
pub fn linear_propagate(f: &RadialField, t: f64) -> RadialField {
    let mut u = f.samples().to_vec();
    Stepper::new(f.grid(), f.dim(), t, 0.0, 3.0).linear(&mut u);
    f.with_samples(u).expect("phase rotation keeps samples finite")
}

/// e^{−tP_a} f for t ≥ 0.
pub fn heat_propagate(f: &RadialField, t: f64) -> Result<RadialField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("heat flow needs t >= 0, got {t}")));
    }
    operator::apply_multiplier(f, |lambda| Complex64::new((-t * lambda).exp(), 0.0))
}

/// One Strang step of length dt with nonlinear coefficient κ.
pub fn nls_step_strang(f: &RadialField, dt: f64, params: &ModelParams, coupling: f64) -> Result<RadialField> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Domain(format!("Strang step needs dt > 0, got {dt}")));
    }
    let mut u = f.samples().to_vec();
    Stepper::new(f.grid(), f.dim(), dt, coupling, params.p).strang(&mut u);
    f.with_samples(u).map_err(|_| Error::Numerics("non-finite field after Strang step".into()))
}

/// Integrate from the configured initial data up to the horizon.
pub fn run(config: &SolverConfig) -> Result<Trajectory> {
    config.validate()?;
    let grid = config.make_grid()?;
    let u0 = config.initial_field(&grid)?;
    run_from(config, u0)
}

/// Integrate from a given initial field.
pub fn run_from(config: &SolverConfig, u0: RadialField) -> Result<Trajectory> {
    config.validate()?;
    let params = config.params;
    let grid = Arc::clone(u0.grid());
    let dim = u0.dim();
    let mut traj = Trajectory {
        params,
        coupling: config.coupling,
        dt: config.dt,
        times: vec![0.0],
        records: vec![diagnostics::record(&u0, &params, config.coupling, 0.0)?],
        boundary_series: vec![(0.0, u0.boundary_fraction())],
        snapshots: vec![u0.clone()],
    };
    let (steps, last) = config.schedule();
    if steps == 0 {
        return Ok(traj);
    }
    let sup0 = u0.sup_norm();
    let full = Stepper::new(&grid, dim, config.dt, config.coupling, params.p);
    let tail = if (last - config.dt).abs() > 1e-12 * config.dt {
        Some(Stepper::new(&grid, dim, last, config.coupling, params.p))
    } else {
        None
    };
    let mut u = u0.into_samples();
    for step in 1..=steps {
        let stepper = if step == steps { tail.as_ref().unwrap_or(&full) } else { &full };
        stepper.strang(&mut u);
        let t = if step == steps { config.horizon } else { step as f64 * config.dt };
        let finite = u.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let sup = if finite { u.iter().map(|z| z.norm()).fold(0.0, f64::max) } else { f64::INFINITY };
        if !finite || (sup0 > 0.0 && sup > BLOW_UP_FACTOR * sup0) {
            let reason = AbortReason::BlowUp { t, sup_norm: sup };
            if let Ok(f) = RadialField::new(Arc::clone(&grid), u.clone(), dim, 0) {
                push_snapshot(&mut traj, f, t)?;
            }
            return Err(Error::Aborted { reason, partial: Box::new(traj) });
        }
        let field = RadialField::new(Arc::clone(&grid), u.clone(), dim, 0)?;
        let boundary = field.boundary_fraction();
        traj.boundary_series.push((t, boundary));
        if boundary > WALL_THRESHOLD {
            push_snapshot(&mut traj, field, t)?;
            return Err(Error::Aborted {
                reason: AbortReason::Wall { t, boundary_mass: boundary },
                partial: Box::new(traj),
            });
        }
        if step % config.snapshot_stride == 0 || step == steps {
            push_snapshot(&mut traj, field, t)?;
        }
    }
    Ok(traj)
}

fn push_snapshot(traj: &mut Trajectory, field: RadialField, t: f64) -> Result<()> {
    if traj.times.last().is_some_and(|&last| last >= t) {
        return Ok(());
    }
    traj.records.push(diagnostics::record(&field, &traj.params, traj.coupling, t)?);
    traj.times.push(t);
    traj.snapshots.push(field);
    Ok(())
}

/// Outcome of the Picard iteration for the Duhamel map.
#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub q: f64,
    pub r: f64,
    pub times: Vec<f64>,
    /// d_m = ‖u^{(m+1)} − u^{(m)}‖ in L^q_t L^r_x.
    pub distances: Vec<f64>,
    /// d_{m+1}/d_m.
    pub ratios: Vec<f64>,
    /// Set when d_m increased three times in a row.
    pub diverged: bool,
    #[serde(skip)]
    pub iterates: Vec<Vec<RadialField>>,
}

impl PicardReport {
    pub fn fixed_point(&self) -> &[RadialField] {
        self.iterates.last().expect("at least one iterate")
    }
}

/// ∫₀^{t_j} f for every node t_j of a uniform grid, fourth order throughout.
fn cumulative_simpson(values: &[Vec<Complex64>], h: f64) -> Vec<Vec<Complex64>> {
    let m = values.len();
    let n = values[0].len();
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![zero.clone(); m];
    let combo = |coeffs: &[(usize, f64)], scale: f64| -> Vec<Complex64> {
        let mut acc = zero.clone();
        for &(idx, c) in coeffs {
            for (a, v) in acc.iter_mut().zip(&values[idx]) {
                *a += v * (c * scale);
            }
        }
        acc
    };
    let add = |a: &[Complex64], b: &[Complex64]| -> Vec<Complex64> { a.iter().zip(b).map(|(x, y)| x + y).collect() };
    for j in 1..m {
        out[j] = if j % 2 == 0 {
            add(&out[j - 2], &combo(&[(j - 2, 1.0), (j - 1, 4.0), (j, 1.0)], h / 3.0))
        } else if j == 1 {
            if m > 2 {
                combo(&[(0, 5.0), (1, 8.0), (2, -1.0)], h / 12.0)
            } else {
                combo(&[(0, 1.0), (1, 1.0)], h / 2.0)
            }
        } else {
            // Simpson to t_{j−3}, then the 3/8 rule over the last three intervals
            add(&out[j - 3], &combo(&[(j - 3, 1.0), (j - 2, 3.0), (j - 1, 3.0), (j, 1.0)], 3.0 * h / 8.0))
        };
    }
    out
}

/// Picard iterates u^{(m+1)} = Φ(u^{(m)}) of the Duhamel map on [0, T],
/// starting from the linear evolution, on `time_nodes` + 1 uniform nodes.
pub fn picard_iterate(config: &SolverConfig, iterations: usize, time_nodes: usize) -> Result<PicardReport> {
    config.validate()?;
    if time_nodes < 2 {
        return Err(Error::InvalidParams("Picard iteration needs at least 2 time intervals".into()));
    }
    let plan = lwp_exponents(&config.params, config.lwp_margin)?;
    let grid = config.make_grid()?;
    let u0 = config.initial_field(&grid)?;
    let dim = u0.dim();
    let h = config.horizon / time_nodes as f64;
    let times: Vec<f64> = (0..=time_nodes).map(|j| j as f64 * h).collect();
    let kappa = config.coupling;
    let half = 0.5 * (config.params.p - 1.0);
    let rho2: Vec<f64> = grid.rho().iter().map(|r| r * r).collect();

    let c0 = grid.field_coefficients(u0.samples(), dim);
    let evolve = |c: &[Complex64], t: f64| -> Vec<Complex64> {
        c.iter().zip(&rho2).map(|(c, l)| c * Complex64::from_polar(1.0, -t * l)).collect()
    };
    let linear: Vec<Vec<Complex64>> = times.iter().map(|&t| evolve(&c0, t)).collect();

    let to_field = |c: &[Complex64]| -> Result<RadialField> {
        RadialField::new(Arc::clone(&grid), grid.field_from_coefficients(c, dim), dim, 0)
    };
    let mut current: Vec<RadialField> = linear.iter().map(|c| to_field(c)).collect::<Result<_>>()?;
    let mut iterates = vec![current.clone()];
    let mut distances = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        // e^{isP} N(u(s)) in spectral coordinates
        let integrand: Vec<Vec<Complex64>> = current
            .iter()
            .zip(&times)
            .map(|(f, &s)| {
                let nl: Vec<Complex64> = f.samples().iter().map(|z| z * (kappa * z.norm_sqr().powf(half))).collect();
                evolve(&grid.field_coefficients(&nl, dim), -s)
            })
            .collect();
        let integral = cumulative_simpson(&integrand, h);
        let next: Vec<RadialField> = times
            .iter()
            .enumerate()
            .map(|(j, &t)| {
                let c: Vec<Complex64> = linear[j]
                    .iter()
                    .zip(evolve(&integral[j], t))
                    .map(|(l, d)| l - Complex64::new(0.0, 1.0) * d)
                    .collect();
                to_field(&c)
            })
            .collect::<Result<_>>()?;
        let diffs: Vec<RadialField> = next.iter().zip(&current).map(|(a, b)| a.sub(b)).collect::<Result<_>>()?;
        distances.push(diagnostics::discrete_lq_lr(&diffs, &times, plan.q, plan.r)?);
        current = next;
        iterates.push(current.clone());
    }
    let ratios: Vec<f64> = distances.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let diverged = ratios.windows(3).any(|w| w.iter().all(|&r| r > 1.0));
    Ok(PicardReport { q: plan.q, r: plan.r, times, distances, ratios, diverged, iterates })
}
