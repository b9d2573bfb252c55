//! Discrete Hankel transforms of real order on [0, R].
//!
//! A grid of order ν places its N nodes at r_m = j_{ν,m} R / j_{ν,N+1} and its
//! spectral nodes at ρ_k = j_{ν,k} / R. The symmetric matrix
//! Q_{km} = 2 J_ν(j_k j_m / S) / (S |J_{ν+1}(j_k)| |J_{ν+1}(j_m)|), S = j_{ν,N+1},
//! maps √w·g to √ŵ·Hg and is orthogonal up to a small defect which the
//! constructor removes by Newton–Schulz iteration, so forward and inverse are
//! exact transposes of each other.
//!
//! Fields store samples of the physical function u; the transform acts on the
//! sector profile g(r) = r^{(n−2)/2} u(r).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{bessel_j_unchecked, bessel_zeros, gamma_fn, BesselOrder};

pub const MIN_MODES: usize = 8;
const ORTHOGONALITY_TARGET: f64 = 1e-14;
/// Outer shell used by the truncation monitor: r > BOUNDARY_SHELL · R.
pub const BOUNDARY_SHELL: f64 = 0.9;

pub struct RadialGrid {
    nu: BesselOrder,
    n_modes: usize,
    radius: f64,
    j_cut: f64,
    nodes: Vec<f64>,
    rho: Vec<f64>,
    weights: Vec<f64>,
    spectral_weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
    sqrt_spectral_weights: Vec<f64>,
    transform: Array2<f64>,
    orthogonality_defect: f64,
    cross: Mutex<HashMap<u64, Arc<CrossTable>>>,
}

impl fmt::Debug for RadialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGrid")
            .field("nu", &self.nu.value())
            .field("n_modes", &self.n_modes)
            .field("radius", &self.radius)
            .field("j_cut", &self.j_cut)
            .finish()
    }
}

/// Kernel J_{ν_out}(ρ_k r_m) between a grid's nodes and the spectral nodes of
/// the order-ν_out grid with the same N and R.
#[derive(Debug)]
pub struct CrossTable {
    pub nu_out: f64,
    pub rho: Vec<f64>,
    pub spectral_weights: Vec<f64>,
    kernel: Array2<f64>,
    origin_error: f64,
}

fn largest_defect(x: &Array2<f64>) -> (Array2<f64>, f64) {
    let gram = x.t().dot(x);
    let mut defect: f64 = 0.0;
    for ((i, j), v) in gram.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        defect = defect.max((v - target).abs());
    }
    (gram, defect)
}

/// Build the grid of order `nu` with `n_modes` nodes on [0, `radius`].
pub fn make_grid(nu: BesselOrder, n_modes: usize, radius: f64) -> Result<Arc<RadialGrid>> {
    if n_modes < MIN_MODES {
        return Err(Error::Domain(format!("grid needs at least {MIN_MODES} modes, got {n_modes}")));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::Domain(format!("grid radius must be positive and finite, got {radius}")));
    }
    let v = nu.value();
    let zeros = bessel_zeros(nu, n_modes + 1)?;
    let j_cut = zeros[n_modes];
    let j = &zeros[..n_modes];
    let jp: Vec<f64> = j.iter().map(|&z| bessel_j_unchecked(v + 1.0, z).abs()).collect();
    let nodes: Vec<f64> = j.iter().map(|&z| z * radius / j_cut).collect();
    let rho: Vec<f64> = j.iter().map(|&z| z / radius).collect();
    let weights: Vec<f64> = jp
        .iter()
        .map(|&d| 2.0 * radius * radius / (j_cut * j_cut * d * d))
        .collect();
    let spectral_weights: Vec<f64> = jp.iter().map(|&d| 2.0 / (radius * radius * d * d)).collect();

    let mut y = Array2::<f64>::zeros((n_modes, n_modes));
    for k in 0..n_modes {
        for m in k..n_modes {
            let val = 2.0 * bessel_j_unchecked(v, j[k] * j[m] / j_cut) / (j_cut * jp[k] * jp[m]);
            y[[k, m]] = val;
            y[[m, k]] = val;
        }
    }
    let (mut gram, mut defect) = largest_defect(&y);
    let mut iterations = 0;
    while defect > ORTHOGONALITY_TARGET && iterations < 6 {
        // X ← ½ X (3I − XᵀX)
        gram.mapv_inplace(|g| -g);
        for i in 0..n_modes {
            gram[[i, i]] += 3.0;
        }
        y = y.dot(&gram) * 0.5;
        // the iterate stays a polynomial in a symmetric matrix
        let yt = y.t().to_owned();
        y = (&y + &yt) * 0.5;
        (gram, defect) = largest_defect(&y);
        iterations += 1;
    }
    if defect > 1e-12 {
        return Err(Error::Numerics(format!(
            "transform matrix for nu = {v}, N = {n_modes} stays non-orthogonal (defect {defect:e})"
        )));
    }
    Ok(Arc::new(RadialGrid {
        nu,
        n_modes,
        radius,
        j_cut,
        sqrt_weights: weights.iter().map(|w| w.sqrt()).collect(),
        sqrt_spectral_weights: spectral_weights.iter().map(|w| w.sqrt()).collect(),
        nodes,
        rho,
        weights,
        spectral_weights,
        transform: y,
        orthogonality_defect: defect,
        cross: Mutex::new(HashMap::new()),
    }))
}

impl RadialGrid {
    pub fn nu(&self) -> BesselOrder {
        self.nu
    }
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn j_cut(&self) -> f64 {
        self.j_cut
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    /// Quadrature weights for ∫₀^R f(r) r dr.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    /// Weights for ∫₀^∞ F(ρ) ρ dρ over the spectral nodes.
    pub fn spectral_weights(&self) -> &[f64] {
        &self.spectral_weights
    }
    pub fn orthogonality_defect(&self) -> f64 {
        self.orthogonality_defect
    }
    pub fn transform_matrix(&self) -> &Array2<f64> {
        &self.transform
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.nu.value().to_bits() == other.nu.value().to_bits()
                && self.n_modes == other.n_modes
                && self.radius.to_bits() == other.radius.to_bits())
    }

    /// r^{(n−2)/2} at every node.
    pub fn profile_factor(&self, dim: usize) -> Vec<f64> {
        let e = 0.5 * (dim as f64 - 2.0);
        self.nodes.iter().map(|r| r.powf(e)).collect()
    }

    /// Apply the orthogonal matrix Q to a complex vector.
    pub fn apply_q(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.n_modes;
        let mut packed = Array2::<f64>::zeros((n, 2));
        for (i, z) in v.iter().enumerate() {
            packed[[i, 0]] = z.re;
            packed[[i, 1]] = z.im;
        }
        let out = self.transform.dot(&packed);
        out.axis_iter(Axis(0)).map(|row| Complex64::new(row[0], row[1])).collect()
    }

    /// Orthonormal coefficients c = Q(√w · g) of a profile g.
    pub fn coefficients(&self, profile: &[Complex64]) -> Vec<Complex64> {
        let scaled: Vec<Complex64> =
            profile.iter().zip(&self.sqrt_weights).map(|(g, s)| g * s).collect();
        self.apply_q(&scaled)
    }

    /// Inverse of [`RadialGrid::coefficients`].
    pub fn profile_from_coefficients(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        self.apply_q(coeffs)
            .into_iter()
            .zip(&self.sqrt_weights)
            .map(|(g, s)| g / s)
            .collect()
    }

    /// Orthonormal coefficients of a physical field of dimension `dim`.
    pub fn field_coefficients(&self, samples: &[Complex64], dim: usize) -> Vec<Complex64> {
        let factor = self.profile_factor(dim);
        let profile: Vec<Complex64> = samples.iter().zip(&factor).map(|(u, f)| u * f).collect();
        self.coefficients(&profile)
    }

    /// Physical samples from orthonormal coefficients.
    pub fn field_from_coefficients(&self, coeffs: &[Complex64], dim: usize) -> Vec<Complex64> {
        let factor = self.profile_factor(dim);
        self.profile_from_coefficients(coeffs)
            .into_iter()
            .zip(&factor)
            .map(|(g, f)| g / f)
            .collect()
    }

    /// Multiply the spectral representation of physical samples by `mult[k]`, in place.
    pub fn apply_diagonal(&self, samples: &mut [Complex64], dim: usize, mult: &[Complex64]) {
        let factor = self.profile_factor(dim);
        let scale: Vec<f64> = factor.iter().zip(&self.sqrt_weights).map(|(f, s)| f * s).collect();
        let scaled: Vec<Complex64> = samples.iter().zip(&scale).map(|(u, s)| u * s).collect();
        let mut c = self.apply_q(&scaled);
        for (c, m) in c.iter_mut().zip(mult) {
            *c *= m;
        }
        for ((u, g), s) in samples.iter_mut().zip(self.apply_q(&c)).zip(&scale) {
            *u = g / s;
        }
    }

    /// Leading coefficient b of g(r) ≈ b r^ν as r → 0, read off the spectral expansion.
    pub fn origin_coefficient(&self, coeffs: &[Complex64]) -> Complex64 {
        let v = self.nu.value();
        let g1 = gamma_fn(v + 1.0).expect("nu + 1 > 0");
        coeffs
            .iter()
            .zip(&self.sqrt_spectral_weights)
            .zip(&self.rho)
            .map(|((c, s), rho)| c * (s * (0.5 * rho).powf(v) / g1))
            .sum()
    }

    /// ∫₀^R |g|² r^{−β} r dr for a profile g with orthonormal coefficients `coeffs`.
    ///
    /// For β > 0 the leading r^{2ν−β} behaviour near the origin is removed
    /// against a Gaussian cutoff and integrated in closed form, which keeps the
    /// quadrature accurate when the integrand is singular at r = 0.
    pub fn singular_moment(&self, profile: &[Complex64], coeffs: &[Complex64], beta: f64) -> Result<f64> {
        let v = self.nu.value();
        let plain = |m: usize| self.weights[m] * profile[m].norm_sqr() * self.nodes[m].powf(-beta);
        if beta <= 0.0 {
            return Ok((0..self.n_modes).map(plain).sum());
        }
        let exponent = v + 1.0 - 0.5 * beta;
        if exponent <= 0.0 {
            return Err(Error::Domain(format!(
                "moment r^-{beta} diverges for profiles behaving like r^{v} at the origin"
            )));
        }
        let b = self.origin_coefficient(coeffs).norm_sqr();
        let s = 0.1 * self.radius;
        let mut sum = 0.0;
        for m in 0..self.n_modes {
            let r = self.nodes[m];
            let lead = b * r.powf(2.0 * v) * (-(r * r) / (s * s)).exp();
            sum += self.weights[m] * (profile[m].norm_sqr() - lead) * r.powf(-beta);
        }
        let analytic = 0.5 * b * s.powf(2.0 * exponent) * gamma_fn(exponent)?;
        Ok(sum + analytic)
    }

    /// Quadrature error of the grid on r^γ e^{−r²/s²} (integrated against r dr).
    ///
    /// Integrands that behave like c r^γ at the origin inherit c times this
    /// error at leading order, so subtracting it lifts the convergence rate.
    pub fn origin_quadrature_error(&self, gamma: f64) -> Result<f64> {
        let s = 0.1 * self.radius;
        let approx: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * r.powf(gamma) * (-(r * r) / (s * s)).exp())
            .sum();
        let exact = 0.5 * s.powf(gamma + 2.0) * gamma_fn(0.5 * gamma + 1.0)?;
        Ok(approx - exact)
    }

    /// Σ_m w_m g_m J_{ν_out}(ρ r_m), corrected at the origin for profiles g ≈ b r^ν.
    fn cross_sum(&self, profile: &[Complex64], b0: Complex64, nu_out: f64, origin_error: f64, rho: f64) -> Complex64 {
        let raw: Complex64 = profile
            .iter()
            .zip(&self.nodes)
            .zip(&self.weights)
            .map(|((g, &r), &w)| g * (w * bessel_j_unchecked(nu_out, rho * r)))
            .sum();
        let lead = (0.5 * rho).powf(nu_out) / gamma_fn(nu_out + 1.0).expect("nu_out + 1 > 0");
        raw - b0 * (lead * origin_error)
    }

    /// Cross-order kernel to the spectral nodes of the order-`nu_out` grid, cached per order.
    pub fn cross_table(&self, nu_out: BesselOrder) -> Result<Arc<CrossTable>> {
        let key = nu_out.value().to_bits();
        if let Some(t) = self.cross.lock().expect("cross cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let vo = nu_out.value();
        let zeros = bessel_zeros(nu_out, self.n_modes + 1)?;
        let rho: Vec<f64> = zeros[..self.n_modes].iter().map(|z| z / self.radius).collect();
        let spectral_weights: Vec<f64> = zeros[..self.n_modes]
            .iter()
            .map(|&z| {
                let d = bessel_j_unchecked(vo + 1.0, z);
                2.0 / (self.radius * self.radius * d * d)
            })
            .collect();
        let mut kernel = Array2::<f64>::zeros((self.n_modes, self.n_modes));
        for (k, &p) in rho.iter().enumerate() {
            for (m, &r) in self.nodes.iter().enumerate() {
                kernel[[k, m]] = bessel_j_unchecked(vo, p * r);
            }
        }
        let origin_error = self.origin_quadrature_error(self.nu.value() + vo)?;
        let table = Arc::new(CrossTable { nu_out: vo, rho, spectral_weights, kernel, origin_error });
        self.cross
            .lock()
            .expect("cross cache poisoned")
            .entry(key)
            .or_insert_with(|| Arc::clone(&table));
        Ok(table)
    }
}

impl CrossTable {
    /// G_k = Σ_m w_m g_m J_{ν_out}(ρ_k r_m).
    pub fn forward(&self, grid: &RadialGrid, profile: &[Complex64]) -> Vec<Complex64> {
        let weighted: Vec<Complex64> =
            profile.iter().zip(grid.weights()).map(|(g, w)| g * w).collect();
        let b0 = grid.origin_coefficient(&grid.coefficients(profile));
        let g1 = gamma_fn(self.nu_out + 1.0).expect("nu_out + 1 > 0");
        mat_complex(&self.kernel, &weighted, false)
            .into_iter()
            .zip(&self.rho)
            .map(|(v, &p)| v - b0 * ((0.5 * p).powf(self.nu_out) / g1 * self.origin_error))
            .collect()
    }

    /// Σ_k ŵ_k G_k J_{ν_out}(ρ_k r_m) at the grid's nodes.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let weighted: Vec<Complex64> =
            spectrum.iter().zip(&self.spectral_weights).map(|(g, w)| g * w).collect();
        mat_complex(&self.kernel, &weighted, true)
    }
}

fn mat_complex(a: &Array2<f64>, v: &[Complex64], transpose: bool) -> Vec<Complex64> {
    let n = v.len();
    let mut packed = Array2::<f64>::zeros((n, 2));
    for (i, z) in v.iter().enumerate() {
        packed[[i, 0]] = z.re;
        packed[[i, 1]] = z.im;
    }
    let out = if transpose { a.t().dot(&packed) } else { a.dot(&packed) };
    out.axis_iter(Axis(0)).map(|row| Complex64::new(row[0], row[1])).collect()
}

/// Complex samples of u on a grid, for sector `sector` of ℝ^`dim`.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    samples: Vec<Complex64>,
    dim: usize,
    sector: usize,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, samples: Vec<Complex64>, dim: usize, sector: usize) -> Result<Self> {
        if samples.len() != grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a grid with {} nodes",
                samples.len(),
                grid.n_modes()
            )));
        }
        if dim < 2 {
            return Err(Error::Domain(format!("field dimension must be at least 2, got {dim}")));
        }
        if let Some(i) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerics(format!("non-finite sample at node {i}")));
        }
        Ok(RadialField { grid, samples, dim, sector })
    }

    pub fn from_fn(grid: Arc<RadialGrid>, dim: usize, sector: usize, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let samples = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, samples, dim, sector)
    }

    pub fn zeros(grid: Arc<RadialGrid>, dim: usize, sector: usize) -> Self {
        let n = grid.n_modes();
        RadialField { grid, samples: vec![Complex64::new(0.0, 0.0); n], dim, sector }
    }

    /// Build from sector-profile samples g = r^{(n−2)/2} u.
    pub fn from_profile(grid: Arc<RadialGrid>, profile: &[Complex64], dim: usize, sector: usize) -> Result<Self> {
        let factor = grid.profile_factor(dim);
        let samples = profile.iter().zip(&factor).map(|(g, f)| g / f).collect();
        Self::new(grid, samples, dim, sector)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }
    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }
    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn profile(&self) -> Vec<Complex64> {
        let factor = self.grid.profile_factor(self.dim);
        self.samples.iter().zip(&factor).map(|(u, f)| u * f).collect()
    }

    /// Orthonormal spectral coefficients √ŵ_k · (Hg)(ρ_k).
    pub fn coefficients(&self) -> Vec<Complex64> {
        self.grid.field_coefficients(&self.samples, self.dim)
    }

    pub fn with_samples(&self, samples: Vec<Complex64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), samples, self.dim, self.sector)
    }

    pub fn conj(&self) -> Self {
        RadialField { samples: self.samples.iter().map(|z| z.conj()).collect(), ..self.clone() }
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        RadialField { samples: self.samples.iter().map(|z| z * s).collect(), ..self.clone() }
    }

    pub fn sup_norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// ∫|g|² r dr = ‖u‖²_{L²(ℝⁿ)} / |S^{n−1}|.
    pub fn profile_norm_sqr(&self) -> f64 {
        let factor = self.grid.profile_factor(self.dim);
        self.samples
            .iter()
            .zip(&factor)
            .zip(self.grid.weights())
            .map(|((u, f), w)| w * (u * f).norm_sqr())
            .sum()
    }

    /// Fraction of ∫|g|² r dr carried by r > BOUNDARY_SHELL·R.
    pub fn boundary_fraction(&self) -> f64 {
        let factor = self.grid.profile_factor(self.dim);
        let cut = BOUNDARY_SHELL * self.grid.radius();
        let (mut outer, mut total) = (0.0, 0.0);
        for (((u, f), w), r) in self.samples.iter().zip(&factor).zip(self.grid.weights()).zip(self.grid.nodes()) {
            let m = w * (u * f).norm_sqr();
            total += m;
            if *r > cut {
                outer += m;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            outer / total
        }
    }

    pub fn check_compatible(&self, other: &RadialField) -> Result<()> {
        if !self.grid.same_as(&other.grid) || self.dim != other.dim || self.sector != other.sector {
            return Err(Error::GridMismatch("fields live on different grids or sectors".into()));
        }
        Ok(())
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.check_compatible(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(RadialField { samples, ..self.clone() })
    }
}

/// Hankel values F_k = (H_ν g)(ρ_k) at the spectral nodes.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: Arc<RadialGrid>,
    values: Vec<Complex64>,
    dim: usize,
    sector: usize,
}

impl SpectralField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<Complex64>, dim: usize, sector: usize) -> Result<Self> {
        if values.len() != grid.n_modes() {
            return Err(Error::GridMismatch(format!(
                "{} spectral values for a grid with {} modes",
                values.len(),
                grid.n_modes()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerics("non-finite spectral value".into()));
        }
        Ok(SpectralField { grid, values, dim, sector })
    }
    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn sector(&self) -> usize {
        self.sector
    }
    /// Σ ŵ_k |F_k|².
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.spectral_weights())
            .map(|(f, w)| w * f.norm_sqr())
            .sum()
    }
}

pub fn dht_forward(f: &RadialField) -> SpectralField {
    let c = f.coefficients();
    let values = c
        .iter()
        .zip(&f.grid.sqrt_spectral_weights)
        .map(|(c, s)| c / s)
        .collect();
    SpectralField { grid: Arc::clone(&f.grid), values, dim: f.dim, sector: f.sector }
}

pub fn dht_inverse(spec: &SpectralField) -> RadialField {
    let c: Vec<Complex64> = spec
        .values
        .iter()
        .zip(&spec.grid.sqrt_spectral_weights)
        .map(|(f, s)| f * s)
        .collect();
    let samples = spec.grid.field_from_coefficients(&c, spec.dim);
    RadialField { grid: Arc::clone(&spec.grid), samples, dim: spec.dim, sector: spec.sector }
}

/// Σ_m w_m g(r_m) J_{ν_out}(ρ r_m) for each target ρ ≥ 0, with the leading
/// origin term of the quadrature error removed.
pub fn hankel_quadrature(f: &RadialField, nu_out: BesselOrder, rho_targets: &[f64]) -> Result<Vec<Complex64>> {
    if let Some(&bad) = rho_targets.iter().find(|&&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::Domain(format!("Hankel target must be finite and >= 0, got {bad}")));
    }
    let profile = f.profile();
    let grid = f.grid();
    let vo = nu_out.value();
    let b0 = grid.origin_coefficient(&grid.coefficients(&profile));
    let origin_error = grid.origin_quadrature_error(grid.nu().value() + vo)?;
    Ok(rho_targets
        .iter()
        .map(|&p| grid.cross_sum(&profile, b0, vo, origin_error, p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn grid(nu: f64, n: usize, r: f64) -> Arc<RadialGrid> {
        make_grid(BesselOrder::new(nu).unwrap(), n, r).unwrap()
    }

    fn bump(r: f64, radius: f64) -> f64 {
        let x = r / (0.6 * radius);
        if x >= 1.0 {
            0.0
        } else {
            (-1.0 / (1.0 - x * x)).exp()
        }
    }

    #[test]
    fn sine_grid_nodes() {
        let g = grid(0.5, 8, 1.0);
        for (m, r) in g.nodes().iter().enumerate() {
            assert!((r - (m + 1) as f64 / 9.0).abs() < 1e-13);
        }
    }

    #[test]
    fn first_node_matches_zeros() {
        let g = grid(0.0, 64, 10.0);
        let z = bessel_zeros(BesselOrder::new(0.0).unwrap(), 65).unwrap();
        assert!((g.nodes()[0] - 10.0 * z[0] / z[64]).abs() < 1e-14);
    }

    #[test]
    fn transform_is_symmetric_involution() {
        let g = grid(2.3, 64, 20.0);
        let q = g.transform_matrix();
        let q2 = q.dot(q);
        for ((i, j), v) in q2.indexed_iter() {
            let t = if i == j { 1.0 } else { 0.0 };
            assert!((v - t).abs() < 1e-13);
            assert_eq!(q[[i, j]], q[[j, i]]);
        }
    }

    #[test]
    fn round_trip_and_parseval() {
        for &nu in &[0.0, 0.5, 0.9, 2.3] {
            let g = grid(nu, 128, 20.0);
            let f = RadialField::from_fn(Arc::clone(&g), 2, 0, |r| Complex64::new(bump(r, 20.0), 0.3 * r * bump(r, 20.0))).unwrap();
            let spec = dht_forward(&f);
            let back = dht_inverse(&spec);
            let err: f64 = back.sub(&f).unwrap().profile_norm_sqr().sqrt() / f.profile_norm_sqr().sqrt();
            assert!(err < 1e-12, "nu={nu} err={err:e}");
            let pars = (spec.norm_sqr() - f.profile_norm_sqr()).abs() / f.profile_norm_sqr();
            assert!(pars < 1e-12, "nu={nu} parseval={pars:e}");
        }
    }

    #[test]
    fn sine_reduction() {
        // at ν = 1/2, √r·g ↔ discrete sine transform of type I
        let n = 16;
        let g = grid(0.5, n, 1.0);
        let f = RadialField::from_fn(Arc::clone(&g), 2, 0, |r| c(r.sqrt() * (1.0 - r) * r)).unwrap();
        let spec = dht_forward(&f);
        for k in 0..n {
            let mut dst = 0.0;
            for m in 0..n {
                let r = (m + 1) as f64 / (n + 1) as f64;
                dst += (PI * ((k + 1) * (m + 1)) as f64 / (n + 1) as f64).sin() * (1.0 - r) * r * r;
            }
            // w_m = r_m/(N+1) and J_{1/2}(x) = √(2/(πx)) sin x
            let rho = (k + 1) as f64 * PI;
            let expected = dst * (2.0 / (PI * rho)).sqrt() / (n + 1) as f64;
            assert!((spec.values()[k].re - expected).abs() < 1e-12, "k={k}: {} vs {expected}", spec.values()[k].re);
        }
    }

    #[test]
    fn delta_field_spectrum() {
        let g = grid(0.9, 32, 5.0);
        let m = 7;
        let mut samples = vec![c(0.0); 32];
        samples[m] = c(1.0);
        let f = RadialField::new(Arc::clone(&g), samples, 2, 0).unwrap();
        let spec = dht_forward(&f);
        for (k, &rho) in g.rho().iter().enumerate() {
            let direct = g.weights()[m] * bessel_j_unchecked(0.9, rho * g.nodes()[m]);
            let err = (spec.values()[k].re - direct).abs();
            assert!(err < 1e-8 * g.weights()[m], "k={k} err={err:e}");
        }
    }

    #[test]
    fn eigenmode_concentrates() {
        let g = grid(2.3, 64, 10.0);
        let rho5 = g.rho()[4];
        let f = RadialField::from_fn(Arc::clone(&g), 2, 0, |r| c(bessel_j_unchecked(2.3, rho5 * r))).unwrap();
        let spec = dht_forward(&f);
        let total = spec.norm_sqr();
        let at5 = g.spectral_weights()[4] * spec.values()[4].norm_sqr();
        assert!((total - at5) / total < 1e-8, "leakage {:e}", (total - at5) / total);
    }

    #[test]
    fn quadrature_of_gaussian_matches_fourier_transform() {
        // n = 3: g = r^{1/2} e^{−r²/2} and H_{1/2} g(ρ) = ρ^{1/2} e^{−ρ²/2}
        let g = grid(0.5, 128, 15.0);
        let f = RadialField::from_fn(Arc::clone(&g), 3, 0, |r| c((-0.5 * r * r).exp())).unwrap();
        let targets = [0.3, 1.0, 2.2, 4.0];
        let got = hankel_quadrature(&f, BesselOrder::new(0.5).unwrap(), &targets).unwrap();
        for (p, v) in targets.iter().zip(&got) {
            let exact = p.sqrt() * (-0.5 * p * p).exp();
            assert!((v.re - exact).abs() < 1e-10, "rho={p}");
        }
    }

    #[test]
    fn cross_order_quadrature_converges_fast() {
        // g = r^ν e^{−r²/2} on an order-ν grid, transformed at order 1/2
        let nu = 0.8;
        let targets = [1.0, 3.0];
        let eval = |n: usize| {
            let g = grid(nu, n, 20.0);
            let f = RadialField::from_fn(g, 2, 0, |r| c(r.powf(nu) * (-0.5 * r * r).exp())).unwrap();
            hankel_quadrature(&f, BesselOrder::new(0.5).unwrap(), &targets).unwrap()
        };
        let reference = eval(512);
        let coarse = eval(64);
        let fine = eval(128);
        for i in 0..2 {
            let e1 = (coarse[i] - reference[i]).norm();
            let e2 = (fine[i] - reference[i]).norm();
            // observed order q = log2(e1/e2) ≥ 4
            assert!(e1 / e2 >= 16.0, "target {}: {e1:e} -> {e2:e}", targets[i]);
        }
    }

    #[test]
    fn zero_field_and_origin_target() {
        let g = grid(1.3, 16, 3.0);
        let z = RadialField::zeros(Arc::clone(&g), 3, 0);
        let o = BesselOrder::new(0.7).unwrap();
        assert!(hankel_quadrature(&z, o, &[0.5, 1.0]).unwrap().iter().all(|v| v.norm() == 0.0));
        let f = RadialField::from_fn(g, 3, 0, |r| c((-r * r).exp())).unwrap();
        assert_eq!(hankel_quadrature(&f, o, &[0.0]).unwrap()[0].norm(), 0.0);
        assert!(hankel_quadrature(&f, o, &[-1.0]).is_err());
    }

    #[test]
    fn singular_moment_of_regular_gaussian() {
        // g = r^ν e^{−r²/2}: ∫ g² r^{−β} r dr = ½ Γ(ν + 1 − β/2)
        for &(nu, beta) in &[(0.866, 2.0), (0.3, 2.0), (1.2, 3.0), (0.9, 1.0)] {
            let g = grid(nu, 256, 30.0);
            let profile: Vec<Complex64> = g.nodes().iter().map(|&r| c(r.powf(nu) * (-0.5 * r * r).exp())).collect();
            let coeffs = g.coefficients(&profile);
            let got = g.singular_moment(&profile, &coeffs, beta).unwrap();
            let exact = 0.5 * gamma_fn(nu + 1.0 - 0.5 * beta).unwrap();
            // even β leaves an integrand of the grid's own r^{2ν}·even class after subtraction
            let tol = if beta == 2.0 { 1e-9 } else { 1e-4 };
            assert!(((got - exact) / exact).abs() < tol, "nu={nu} beta={beta}: {got} vs {exact}");
        }
    }

    #[test]
    fn cross_table_matches_direct_quadrature_and_is_cached() {
        let g = grid(0.8, 64, 20.0);
        let o = BesselOrder::new(0.5).unwrap();
        let t = g.cross_table(o).unwrap();
        let f = RadialField::from_fn(Arc::clone(&g), 2, 0, |r| c(r.powf(0.8) * (-0.5 * r * r).exp())).unwrap();
        let via_table = t.forward(&g, &f.profile());
        let direct = hankel_quadrature(&f, o, &t.rho).unwrap();
        for (a, b) in via_table.iter().zip(&direct) {
            assert!((a - b).norm() < 1e-13);
        }
        assert!(Arc::ptr_eq(&t, &g.cross_table(o).unwrap()));
    }

    #[test]
    fn same_order_cross_table_inverts() {
        let g = grid(0.5, 64, 20.0);
        let t = g.cross_table(BesselOrder::new(0.5).unwrap()).unwrap();
        let profile: Vec<Complex64> = g.nodes().iter().map(|&r| c(r.sqrt() * (-0.5 * r * r).exp())).collect();
        let back = t.inverse(&t.forward(&g, &profile));
        let err = back.iter().zip(&profile).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err:e}");
    }

    #[test]
    fn mismatched_sizes_rejected() {
        let g = grid(0.0, 8, 1.0);
        assert!(RadialField::new(g, vec![c(1.0); 7], 3, 0).is_err());
        assert!(make_grid(BesselOrder::new(0.0).unwrap(), 4, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn transforms_are_linear_and_conjugation_equivariant(
            a in proptest::collection::vec(-1.0_f64..1.0, 16),
            b in proptest::collection::vec(-1.0_f64..1.0, 16),
            s in -2.0_f64..2.0,
        ) {
            let g = grid(0.9, 16, 4.0);
            let fa = RadialField::new(Arc::clone(&g), a.iter().zip(&b).map(|(x, y)| Complex64::new(*x, *y)).collect(), 3, 0).unwrap();
            let fb = RadialField::new(Arc::clone(&g), b.iter().map(|x| c(*x)).collect(), 3, 0).unwrap();
            let sum = fa.with_samples(fa.samples().iter().zip(fb.samples()).map(|(x, y)| x * s + y).collect()).unwrap();
            let (sa, sb, ss) = (dht_forward(&fa), dht_forward(&fb), dht_forward(&sum));
            for k in 0..16 {
                let lin = sa.values()[k] * s + sb.values()[k];
                prop_assert!((ss.values()[k] - lin).norm() < 1e-11 * (1.0 + lin.norm()));
            }
            let sc = dht_forward(&fa.conj());
            for k in 0..16 {
                prop_assert!((sc.values()[k] - sa.values()[k].conj()).norm() < 1e-13 * (1.0 + sa.values()[k].norm()));
            }
        }
    }
}
