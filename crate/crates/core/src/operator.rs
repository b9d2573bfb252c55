//! The operator P_a = −Δ + a|x|⁻² restricted to spherical-harmonic sectors,
//! its spectral calculus on a [`RadialGrid`], and the closed-form constants
//! attached to it.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hankel::RadialField;
use crate::specfun::{gamma_fn, BesselOrder};

/// Tolerance of the admissibility identity 2/q = n(1/2 − 1/r).
pub const ADMISSIBLE_TOL: f64 = 1e-12;
/// Default margin ε in r̃′ = (·) + ε for the negative-coupling exponent plans.
pub const DEFAULT_LWP_MARGIN: f64 = 0.01;
/// Default resolvent standoff relative to the largest discrete eigenvalue.
pub const DEFAULT_RESOLVENT_STANDOFF: f64 = 1e-6;

pub fn lambda_n(n: usize) -> f64 {
    let m = n as f64 - 2.0;
    0.25 * m * m
}

/// Surface area |S^{n−1}| = 2π^{n/2}/Γ(n/2).
pub fn sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(0.5 * n as f64) / gamma_fn(0.5 * n as f64).expect("n >= 1")
}

pub fn hardy_constant(n: usize) -> f64 {
    let m = n as f64 - 2.0;
    4.0 / (m * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub a: f64,
    pub p: f64,
}

impl ModelParams {
    pub fn new(n: usize, a: f64, p: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidParams(format!("dimension n = {n} must satisfy n >= 3")));
        }
        if !a.is_finite() || !p.is_finite() {
            return Err(Error::InvalidParams("a and p must be finite".into()));
        }
        let lam = lambda_n(n);
        if a <= -lam {
            return Err(Error::InvalidParams(format!(
                "coupling a = {a} violates a > -lambda_{n} = {}",
                -lam
            )));
        }
        if p <= 1.0 {
            return Err(Error::InvalidParams(format!("nonlinearity exponent p = {p} must satisfy p > 1")));
        }
        Ok(ModelParams { n, a, p })
    }

    pub fn lambda(&self) -> f64 {
        lambda_n(self.n)
    }

    /// p ∈ (1 + 4/n, 1 + 4/(n−2)).
    pub fn p_in_range(&self) -> bool {
        let (lo, hi) = self.p_range();
        self.p > lo && self.p < hi
    }

    pub fn p_range(&self) -> (f64, f64) {
        let n = self.n as f64;
        (1.0 + 4.0 / n, 1.0 + 4.0 / (n - 2.0))
    }

    /// Scattering hypothesis on the coupling: a ≥ 4/(p+1)² − λ_n for n ≥ 4, a ≥ 0 for n = 3.
    pub fn scattering_coupling_ok(&self) -> bool {
        self.a >= self.scattering_threshold()
    }

    pub fn scattering_threshold(&self) -> f64 {
        if self.n == 3 {
            0.0
        } else {
            4.0 / ((self.p + 1.0) * (self.p + 1.0)) - self.lambda()
        }
    }

    /// Both conditions needed for scattering.
    pub fn scattering_ok(&self) -> bool {
        self.p_in_range() && self.scattering_coupling_ok()
    }

    /// Reason the scattering hypotheses fail, if they do.
    pub fn scattering_violation(&self) -> Option<String> {
        let (lo, hi) = self.p_range();
        if !(self.p > lo) {
            return Some(format!("p = {} must satisfy p > 1 + 4/n = {lo}", self.p));
        }
        if !(self.p < hi) {
            return Some(format!("p = {} must satisfy p < 1 + 4/(n-2) = {hi}", self.p));
        }
        if !self.scattering_coupling_ok() {
            return Some(if self.n == 3 {
                format!("a = {} must satisfy a >= 0 when n = 3", self.a)
            } else {
                format!(
                    "a = {} must satisfy a >= 4/(p+1)^2 - lambda_n = {}",
                    self.a,
                    self.scattering_threshold()
                )
            });
        }
        None
    }

    /// √((n−2)² + 4a).
    pub fn root(&self) -> f64 {
        let m = self.n as f64 - 2.0;
        (m * m + 4.0 * self.a).sqrt()
    }

    pub fn sector(&self, k: usize) -> SectorSpec {
        SectorSpec::new(self, k)
    }

    /// ν of the order-(n−2)/2 (free) calculus.
    pub fn free_order(&self) -> BesselOrder {
        BesselOrder::new(0.5 * (self.n as f64 - 2.0)).expect("n >= 3")
    }
}

/// A spherical-harmonic sector k with its Bessel order ν_k = √((k+(n−2)/2)² + a)
/// (the Friedrichs branch).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorSpec {
    pub k: usize,
    #[serde(serialize_with = "ser_order")]
    pub nu: BesselOrder,
}

fn ser_order<S: Serializer>(nu: &BesselOrder, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(nu.value())
}

impl SectorSpec {
    pub fn new(params: &ModelParams, k: usize) -> Self {
        let shift = k as f64 + 0.5 * (params.n as f64 - 2.0);
        let nu = (shift * shift + params.a).sqrt();
        SectorSpec { k, nu: BesselOrder::new(nu).expect("a > -lambda_n keeps the radicand positive") }
    }
}

/// σ(a) = ½(n−2) − ½√((n−2)² + 4a).
pub fn sigma_a(params: &ModelParams) -> f64 {
    0.5 * (params.n as f64 - 2.0) - 0.5 * params.root()
}

/// A Lebesgue exponent in [1, ∞].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinite,
}

impl Exponent {
    pub fn reciprocal(self) -> f64 {
        match self {
            Exponent::Finite(v) => 1.0 / v,
            Exponent::Infinite => 0.0,
        }
    }
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinite)
    }
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(v) => Some(v),
            Exponent::Infinite => None,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(v) => write!(f, "{v}"),
            Exponent::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(v) => s.serialize_f64(*v),
            Exponent::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevWindow {
    pub r0: f64,
    pub r1: Exponent,
}

impl SobolevWindow {
    /// r strictly inside (r0, r1).
    pub fn contains(&self, r: f64) -> bool {
        r > self.r0
            && match self.r1 {
                Exponent::Finite(r1) => r < r1,
                Exponent::Infinite => true,
            }
    }
}

/// r0 = 2n / min{n+2+√((n−2)²+4a), 2n}, r1 = 2n / max{n−√((n−2)²+4a), 0}.
pub fn sobolev_window(params: &ModelParams) -> SobolevWindow {
    let n = params.n as f64;
    let root = params.root();
    let r0 = 2.0 * n / (n + 2.0 + root).min(2.0 * n);
    let d = (n - root).max(0.0);
    let r1 = if d > 0.0 { Exponent::Finite(2.0 * n / d) } else { Exponent::Infinite };
    SobolevWindow { r0, r1 }
}

/// Schrödinger admissibility: q, r ≥ 2, 2/q = n(1/2 − 1/r), (q, r, n) ≠ (2, ∞, 2).
pub fn admissible(q: Exponent, r: Exponent, n: usize) -> bool {
    let ge2 = |e: Exponent| match e {
        Exponent::Finite(v) => v >= 2.0,
        Exponent::Infinite => true,
    };
    if !ge2(q) || !ge2(r) {
        return false;
    }
    if n == 2 && q == Exponent::Finite(2.0) && r.is_infinite() {
        return false;
    }
    (2.0 * q.reciprocal() - n as f64 * (0.5 - r.reciprocal())).abs() <= ADMISSIBLE_TOL
}

/// Energy-functional constant c with ‖∇u‖² ≤ c E(u): 2 / min{1, 1 + 4a/(n−2)²}.
pub fn kinetic_bound_constant(params: &ModelParams) -> f64 {
    let m = params.n as f64 - 2.0;
    2.0 / (1.0 + 4.0 * params.a / (m * m)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// a ≥ 0
    NonNegative,
    /// min{1−λ_n, 0} ≤ a < 0
    MildNegative,
    /// −4pλ_n/(p+1)² < a < min{1−λ_n, 0}
    StrongNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentPlan {
    pub q: f64,
    pub r: f64,
    pub regime: Regime,
    /// r̃′ used for negative couplings (with the margin already added).
    pub r_tilde_prime: Option<f64>,
    pub window: SobolevWindow,
    /// Whether r lies in the Sobolev-equivalence window (r0, r1).
    pub r_in_window: bool,
}

/// Lower bound on a for the strong negative regime: −4pλ_n/(p+1)².
pub fn lwp_coupling_floor(params: &ModelParams) -> f64 {
    -4.0 * params.p * params.lambda() / ((params.p + 1.0) * (params.p + 1.0))
}

/// The (q, r) pair of the local theory.
pub fn lwp_exponents(params: &ModelParams, margin: f64) -> Result<ExponentPlan> {
    if !params.p_in_range() {
        let (lo, hi) = params.p_range();
        return Err(Error::InvalidParams(format!(
            "exponent plans need p in (1 + 4/n, 1 + 4/(n-2)) = ({lo}, {hi}), got p = {}",
            params.p
        )));
    }
    if !(margin > 0.0) || !margin.is_finite() {
        return Err(Error::InvalidParams(format!("exponent margin must be positive, got {margin}")));
    }
    let n = params.n as f64;
    let p = params.p;
    let a = params.a;
    let window = sobolev_window(params);
    let (r, regime, rt) = if a >= 0.0 {
        (n * (p + 1.0) / (n + p - 1.0), Regime::NonNegative, None)
    } else {
        let mild_floor = (1.0 - params.lambda()).min(0.0);
        let (base, regime) = if a >= mild_floor {
            (2.0 * n / (n + 2.0), Regime::MildNegative)
        } else {
            let floor = lwp_coupling_floor(params);
            if a <= floor {
                return Err(Error::InvalidParams(format!(
                    "coupling a = {a} violates a > -4p lambda_n/(p+1)^2 = {floor}"
                )));
            }
            (2.0 * n / (n + params.root()), Regime::StrongNegative)
        };
        let rt = base + margin;
        let inv_r = (1.0 / rt + (p - 1.0) / n) / p;
        (1.0 / inv_r, regime, Some(rt))
    };
    let two_over_q = n * (0.5 - 1.0 / r);
    if two_over_q <= 0.0 || two_over_q > 1.0 {
        return Err(Error::InvalidParams(format!(
            "no admissible time exponent for r = {r} (2/q = {two_over_q})"
        )));
    }
    let q = 2.0 / two_over_q;
    if a >= 0.0 {
        // closed form 4(p+1)/((n−2)(p−1)); equal to the admissibility value
        debug_assert!((q - 4.0 * (p + 1.0) / ((n - 2.0) * (p - 1.0))).abs() < 1e-9 * q);
    }
    if !admissible(Exponent::Finite(q), Exponent::Finite(r), params.n) {
        return Err(Error::Numerics(format!("exponent pair ({q}, {r}) failed admissibility")));
    }
    Ok(ExponentPlan { q, r, regime, r_tilde_prime: rt, window, r_in_window: window.contains(r) })
}

/// The coupling a implied by a field's grid order and sector: a = ν² − (k + (n−2)/2)².
pub fn field_coupling(f: &RadialField) -> f64 {
    let shift = f.sector() as f64 + 0.5 * (f.dim() as f64 - 2.0);
    let nu = f.grid().nu().value();
    nu * nu - shift * shift
}

/// Check that a field's grid order is the sector order ν_k for these parameters.
pub fn check_sector(f: &RadialField, params: &ModelParams) -> Result<()> {
    if f.dim() != params.n {
        return Err(Error::GridMismatch(format!("field dimension {} but n = {}", f.dim(), params.n)));
    }
    let expected = params.sector(f.sector()).nu.value();
    let got = f.grid().nu().value();
    if (expected - got).abs() > 1e-12 * expected.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "grid order {got} does not match sector order {expected} for k = {}",
            f.sector()
        )));
    }
    Ok(())
}

/// φ(P_a) f, with φ evaluated at the discrete eigenvalues λ_k = ρ_k².
pub fn apply_multiplier(f: &RadialField, phi: impl Fn(f64) -> Complex64) -> Result<RadialField> {
    let mult: Vec<Complex64> = f.grid().rho().iter().map(|&rho| phi(rho * rho)).collect();
    if let Some(k) = mult.iter().position(|m| !m.re.is_finite() || !m.im.is_finite()) {
        return Err(Error::Numerics(format!(
            "multiplier is not finite at spectral node {k} (lambda = {})",
            f.grid().rho()[k].powi(2)
        )));
    }
    apply_diagonal(f, &mult)
}

/// Multiply the spectral coefficients of `f` by `mult`.
pub fn apply_diagonal(f: &RadialField, mult: &[Complex64]) -> Result<RadialField> {
    if mult.len() != f.grid().n_modes() {
        return Err(Error::GridMismatch("multiplier length differs from mode count".into()));
    }
    let mut samples = f.samples().to_vec();
    f.grid().apply_diagonal(&mut samples, f.dim(), mult);
    f.with_samples(samples)
}

/// P_a^{s/2} f, i.e. the multiplier ρ^s, for s ∈ [−2, 2].
pub fn fractional_power(f: &RadialField, s: f64) -> Result<RadialField> {
    if !(-2.0..=2.0).contains(&s) {
        return Err(Error::Domain(format!("fractional power s = {s} outside [-2, 2]")));
    }
    apply_multiplier(f, |lambda| Complex64::new(lambda.powf(0.5 * s), 0.0))
}

/// Distance from α to the half-line [0, ∞).
pub fn spectrum_distance(alpha: Complex64) -> f64 {
    if alpha.re >= 0.0 {
        alpha.im.abs()
    } else {
        alpha.norm()
    }
}

/// (P_a − α)⁻¹ f with the default standoff.
pub fn resolvent(f: &RadialField, alpha: Complex64) -> Result<RadialField> {
    resolvent_with_standoff(f, alpha, DEFAULT_RESOLVENT_STANDOFF)
}

/// (P_a − α)⁻¹ f, refusing α closer than `standoff · λ_max` to [0, ∞).
pub fn resolvent_with_standoff(f: &RadialField, alpha: Complex64, standoff: f64) -> Result<RadialField> {
    let lam_max = f.grid().rho().last().map(|r| r * r).unwrap_or(1.0);
    let delta = spectrum_distance(alpha);
    if !(delta >= standoff * lam_max) || !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::Domain(format!(
            "alpha = {alpha} lies within {delta:e} of the spectrum [0, inf); \
             add an imaginary offset of at least {:e}",
            standoff * lam_max
        )));
    }
    apply_multiplier(f, |lambda| (Complex64::new(lambda, 0.0) - alpha).inv())
}

/// e^{−itP_a} f.
pub fn schrodinger_group(f: &RadialField, t: f64) -> Result<RadialField> {
    apply_multiplier(f, |lambda| Complex64::from_polar(1.0, -t * lambda))
}

/// Everything the `constants` subcommand reports.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsReport {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub lambda_n: f64,
    pub sigma: f64,
    pub nu0: f64,
    pub r0: f64,
    pub r1: Exponent,
    pub hardy_constant: f64,
    pub kinetic_constant: f64,
    pub p_in_range: bool,
    pub scattering_ok: bool,
    pub lwp: Option<ExponentPlan>,
    pub lwp_error: Option<String>,
}

pub fn constants_report(params: &ModelParams, margin: f64) -> ConstantsReport {
    let window = sobolev_window(params);
    let (lwp, lwp_error) = match lwp_exponents(params, margin) {
        Ok(plan) => (Some(plan), None),
        Err(e) => (None, Some(e.to_string())),
    };
    ConstantsReport {
        n: params.n,
        a: params.a,
        p: params.p,
        lambda_n: params.lambda(),
        sigma: sigma_a(params),
        nu0: params.sector(0).nu.value(),
        r0: window.r0,
        r1: window.r1,
        hardy_constant: hardy_constant(params.n),
        kinetic_constant: kinetic_bound_constant(params),
        p_in_range: params.p_in_range(),
        scattering_ok: params.scattering_ok(),
        lwp,
        lwp_error,
    }
}
