//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! errors reported with their line number. [`ExperimentConfig::to_text`]
//! writes every key in a fixed order, so parse → serialize → parse is the identity.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::heatkernel::QueryGrid;
use crate::operator::{ModelParams, DEFAULT_LWP_MARGIN};
use crate::scattering::DEFAULT_TOLERANCE;
use crate::solver::{GridSpec, InitialData, InitialFamily, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Hardy,
    Kinetic,
    Morawetz,
    Strichartz,
    Sobolev,
    Resolvent,
}

impl Check {
    pub const ALL: [Check; 6] = [Check::Hardy, Check::Kinetic, Check::Morawetz, Check::Strichartz, Check::Sobolev, Check::Resolvent];

    pub fn name(self) -> &'static str {
        match self {
            Check::Hardy => "hardy",
            Check::Kinetic => "kinetic",
            Check::Morawetz => "morawetz",
            Check::Strichartz => "strichartz",
            Check::Sobolev => "sobolev",
            Check::Resolvent => "resolvent",
        }
    }
}

impl FromStr for Check {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check '{s}' (expected hardy, kinetic, morawetz, strichartz, sobolev or resolvent)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Scatter,
    Verify(Check),
    Heatkernel,
    Constants,
    DhtSelftest,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentKind::Simulate => f.write_str("simulate"),
            ExperimentKind::Scatter => f.write_str("scatter"),
            ExperimentKind::Verify(c) => write!(f, "verify:{}", c.name()),
            ExperimentKind::Heatkernel => f.write_str("heatkernel"),
            ExperimentKind::Constants => f.write_str("constants"),
            ExperimentKind::DhtSelftest => f.write_str("dht-selftest"),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => ExperimentKind::Simulate,
            "scatter" => ExperimentKind::Scatter,
            "heatkernel" => ExperimentKind::Heatkernel,
            "constants" => ExperimentKind::Constants,
            "dht-selftest" => ExperimentKind::DhtSelftest,
            _ => match s.strip_prefix("verify:") {
                Some(c) => ExperimentKind::Verify(c.parse()?),
                None => return Err(Error::Config(format!("unknown experiment kind '{s}'"))),
            },
        })
    }
}

/// Options of the `verify` checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOptions {
    /// Size of the seeded test-function family (sobolev, resolvent).
    pub family_size: usize,
    /// ε values of the sharp-Hardy optimizer sweep.
    pub epsilons: Vec<f64>,
    /// (s, p) pairs of the generalized Hardy quotient.
    pub hardy_pairs: Vec<(f64, f64)>,
    /// (q, r) pairs of the Strichartz windows.
    pub strichartz_pairs: Vec<(f64, f64)>,
    /// Window end times [0, T] for the space-time norms.
    pub windows: Vec<f64>,
    pub sobolev_s: f64,
    pub sobolev_r: Vec<f64>,
    /// |α| of the resolvent points, in units of the largest spectral value ρ_max².
    pub resolvent_moduli: Vec<f64>,
    /// arg α in units of π.
    pub resolvent_angles: Vec<f64>,
    pub kinetic_tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            family_size: 20,
            epsilons: vec![0.2, 0.1, 0.05, 0.02, 0.01, 0.005],
            hardy_pairs: vec![(0.5, 2.0), (1.0, 2.0), (0.4, 3.0)],
            strichartz_pairs: vec![(2.0, 6.0), (4.0, 3.0)],
            windows: vec![10.0, 20.0, 40.0],
            sobolev_s: 1.0,
            sobolev_r: vec![1.2, 1.5, 2.0, 2.2],
            resolvent_moduli: vec![1e-3, 1e-2, 1e-1],
            resolvent_angles: vec![0.25, 0.5, 0.75, 1.0],
            kinetic_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatterOptions {
    /// Convergence threshold on the last dyadic increment, relative to ‖u₀‖_{H¹}.
    pub tolerance: f64,
    /// Per-interval space-time norm bound of the subdivision.
    pub eta: f64,
    /// Also run the nonlinearity-off control.
    pub control: bool,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        ScatterOptions { tolerance: DEFAULT_TOLERANCE, eta: 0.5, control: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatKernelOptions {
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub r_count: usize,
    /// Fixed sector truncation; automatic when absent.
    pub k_max: Option<usize>,
}

impl Default for HeatKernelOptions {
    fn default() -> Self {
        HeatKernelOptions { t_min: 1e-3, t_max: 10.0, t_count: 9, r_min: 1e-2, r_max: 10.0, r_count: 7, k_max: None }
    }
}

impl HeatKernelOptions {
    pub fn query_grid(&self) -> Result<QueryGrid> {
        for (name, lo, hi, count) in [("t", self.t_min, self.t_max, self.t_count), ("r", self.r_min, self.r_max, self.r_count)] {
            if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || count == 0 {
                return Err(Error::Config(format!("heatkernel.{name}: need 0 < min <= max and count >= 1")));
            }
        }
        let mut grid = QueryGrid::log_spaced((self.t_min, self.t_max, self.t_count), (self.r_min, self.r_max, self.r_count), vec![-1.0, 0.0, 1.0]);
        grid.k_max = self.k_max;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub solver: SolverConfig,
    /// Seed of every randomized test-function family.
    pub seed: u64,
    pub check: CheckOptions,
    pub scatter: ScatterOptions,
    pub heatkernel: HeatKernelOptions,
    /// Write binary snapshot dumps next to the CSV output.
    pub snapshots: bool,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let params = ModelParams::new(3, 0.0, 3.0).expect("default parameters are valid");
        ExperimentConfig {
            kind: ExperimentKind::Simulate,
            solver: SolverConfig::new(
                params,
                GridSpec { nu_override: None, n_modes: 256, radius: 60.0 },
                0.01,
                1.0,
                InitialData { family: InitialFamily::Regular, width: 1.0, amplitude: 1.0 },
            ),
            seed: 0,
            check: CheckOptions::default(),
            scatter: ScatterOptions::default(),
            heatkernel: HeatKernelOptions::default(),
            snapshots: false,
            out_dir: None,
        }
    }
}

struct Entry {
    line: usize,
    value: String,
}

struct Table {
    entries: BTreeMap<String, Entry>,
}

impl Table {
    fn parse(text: &str) -> Result<Table> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| Error::ConfigLine { line, message: format!("expected 'key = value', got '{body}'") })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::ConfigLine { line, message: "empty key".into() });
            }
            if let Some(prev) = entries.insert(key.to_string(), Entry { line, value: value.trim().to_string() }) {
                return Err(Error::ConfigLine { line, message: format!("key '{key}' repeats line {}", prev.line) });
            }
        }
        Ok(Table { entries })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| Error::ConfigLine { line: e.line, message: format!("bad value '{}' for {key}: {err}", e.value) }),
        }
    }

    fn take_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn take_list(&mut self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(e) => parse_list(&e.value).map_err(|message| Error::ConfigLine { line: e.line, message: format!("{key}: {message}") }),
        }
    }

    fn take_pairs(&mut self, key: &str, default: Vec<(f64, f64)>) -> Result<Vec<(f64, f64)>> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(e) => parse_pairs(&e.value).map_err(|message| Error::ConfigLine { line: e.line, message: format!("{key}: {message}") }),
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|e| e.line)
    }
}

fn parse_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("bad number '{}': {e}", x.trim())))
        .collect::<std::result::Result<_, _>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err("list entries must be finite".into());
    }
    Ok(v)
}

fn parse_pairs(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    s.split(',')
        .map(|item| {
            let (a, b) = item.trim().split_once(':').ok_or_else(|| format!("expected 'x:y', got '{}'", item.trim()))?;
            let a: f64 = a.trim().parse().map_err(|e| format!("bad number '{a}': {e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("bad number '{b}': {e}"))?;
            Ok((a, b))
        })
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn join_pairs(v: &[(f64, f64)]) -> String {
    v.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(",")
}

fn invariant(e: Error) -> Error {
    match e {
        Error::InvalidParams(m) => Error::Config(m),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut t = Table::parse(text)?;
        let d = ExperimentConfig::default();
        let kind: ExperimentKind = match t.entries.remove("experiment") {
            None => d.kind,
            Some(e) => e.value.parse().map_err(|err: Error| Error::ConfigLine { line: e.line, message: err.to_string() })?,
        };
        let n: usize = t.take_or("n", d.solver.params.n)?;
        let a: f64 = t.take_or("a", d.solver.params.a)?;
        let p: f64 = t.take_or("p", d.solver.params.p)?;
        let params = ModelParams::new(n, a, p).map_err(invariant)?;
        let grid = GridSpec {
            nu_override: t.take("nu-override")?,
            n_modes: t.take_or("n-modes", d.solver.grid.n_modes)?,
            radius: t.take_or("radius", d.solver.grid.radius)?,
        };
        let family_line = t.line_of("initial.family");
        let family = match t.entries.remove("initial.family") {
            None => d.solver.initial.family,
            Some(e) => InitialFamily::parse(&e.value).ok_or_else(|| Error::ConfigLine {
                line: family_line.unwrap_or(e.line),
                message: format!("unknown initial.family '{}' (expected gaussian, regular or unit-gaussian)", e.value),
            })?,
        };
        let initial = InitialData {
            family,
            width: t.take_or("initial.width", d.solver.initial.width)?,
            amplitude: t.take_or("initial.amplitude", d.solver.initial.amplitude)?,
        };
        let mut solver = SolverConfig::new(params, grid, t.take_or("dt", d.solver.dt)?, t.take_or("horizon", d.solver.horizon)?, initial);
        solver.snapshot_stride = t.take_or("snapshot-stride", d.solver.snapshot_stride)?;
        solver.coupling = t.take_or("nonlinearity.coupling", d.solver.coupling)?;
        solver.lwp_margin = t.take_or("lwp.margin", DEFAULT_LWP_MARGIN)?;
        let dc = &d.check;
        let check = CheckOptions {
            family_size: t.take_or("check.family-size", dc.family_size)?,
            epsilons: t.take_list("check.epsilons", dc.epsilons.clone())?,
            hardy_pairs: t.take_pairs("check.hardy-pairs", dc.hardy_pairs.clone())?,
            strichartz_pairs: t.take_pairs("check.strichartz-pairs", dc.strichartz_pairs.clone())?,
            windows: t.take_list("check.windows", dc.windows.clone())?,
            sobolev_s: t.take_or("check.sobolev-s", dc.sobolev_s)?,
            sobolev_r: t.take_list("check.sobolev-r", dc.sobolev_r.clone())?,
            resolvent_moduli: t.take_list("check.resolvent-moduli", dc.resolvent_moduli.clone())?,
            resolvent_angles: t.take_list("check.resolvent-angles", dc.resolvent_angles.clone())?,
            kinetic_tolerance: t.take_or("check.kinetic-tolerance", dc.kinetic_tolerance)?,
        };
        let scatter = ScatterOptions {
            tolerance: t.take_or("scatter.tolerance", d.scatter.tolerance)?,
            eta: t.take_or("scatter.eta", d.scatter.eta)?,
            control: t.take_or("scatter.control", d.scatter.control)?,
        };
        let dh = d.heatkernel;
        let heatkernel = HeatKernelOptions {
            t_min: t.take_or("heatkernel.t-min", dh.t_min)?,
            t_max: t.take_or("heatkernel.t-max", dh.t_max)?,
            t_count: t.take_or("heatkernel.t-count", dh.t_count)?,
            r_min: t.take_or("heatkernel.r-min", dh.r_min)?,
            r_max: t.take_or("heatkernel.r-max", dh.r_max)?,
            r_count: t.take_or("heatkernel.r-count", dh.r_count)?,
            k_max: t.take("heatkernel.k-max")?,
        };
        let seed = t.take_or("seed", d.seed)?;
        let snapshots = t.take_or("output.snapshots", d.snapshots)?;
        let out_dir: Option<String> = t.take("output.dir")?;
        if let Some((key, e)) = t.entries.iter().min_by_key(|(_, e)| e.line) {
            return Err(Error::ConfigLine { line: e.line, message: format!("unknown key '{key}'") });
        }
        let cfg = ExperimentConfig { kind, solver, seed, check, scatter, heatkernel, snapshots, out_dir: out_dir.map(PathBuf::from) };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate().map_err(invariant)?;
        let g = &self.solver.grid;
        if g.n_modes < 8 {
            return Err(Error::Config(format!("n-modes = {} must be >= 8", g.n_modes)));
        }
        if !(g.radius > 0.0) || !g.radius.is_finite() {
            return Err(Error::Config(format!("radius = {} must be positive", g.radius)));
        }
        if let Some(nu) = g.nu_override {
            if !(nu >= 0.0) || !nu.is_finite() {
                return Err(Error::Config(format!("nu-override = {nu} must be >= 0")));
            }
        }
        if !(self.solver.lwp_margin > 0.0) {
            return Err(Error::Config(format!("lwp.margin = {} must be positive", self.solver.lwp_margin)));
        }
        if self.kind == ExperimentKind::Scatter {
            let params = &self.solver.params;
            let (lo, hi) = params.p_range();
            if !(params.p > lo && params.p < hi) {
                return Err(Error::Config(format!(
                    "scattering needs 1 + 4/n < p < 1 + 4/(n-2), i.e. {lo} < p < {hi}; got p = {}",
                    params.p
                )));
            }
            if !(self.scatter.tolerance > 0.0) || !(self.scatter.eta > 0.0) {
                return Err(Error::Config("scatter.tolerance and scatter.eta must be positive".into()));
            }
        }
        if self.kind == ExperimentKind::Heatkernel {
            self.heatkernel.query_grid()?;
        }
        if self.check.family_size == 0 {
            return Err(Error::Config("check.family-size must be >= 1".into()));
        }
        if self.check.windows.iter().any(|&w| !(w > 0.0)) {
            return Err(Error::Config("check.windows entries must be positive".into()));
        }
        Ok(())
    }

    /// Canonical text form: every key, fixed order.
    pub fn to_text(&self) -> String {
        let s = &self.solver;
        let c = &self.check;
        let h = &self.heatkernel;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        put("experiment", self.kind.to_string());
        put("n", s.params.n.to_string());
        put("a", s.params.a.to_string());
        put("p", s.params.p.to_string());
        if let Some(nu) = s.grid.nu_override {
            put("nu-override", nu.to_string());
        }
        put("n-modes", s.grid.n_modes.to_string());
        put("radius", s.grid.radius.to_string());
        put("dt", s.dt.to_string());
        put("horizon", s.horizon.to_string());
        put("snapshot-stride", s.snapshot_stride.to_string());
        put("initial.family", s.initial.family.name().to_string());
        put("initial.width", s.initial.width.to_string());
        put("initial.amplitude", s.initial.amplitude.to_string());
        if s.coupling != 1.0 {
            put("nonlinearity.coupling", s.coupling.to_string());
        }
        put("lwp.margin", s.lwp_margin.to_string());
        put("seed", self.seed.to_string());
        put("check.family-size", c.family_size.to_string());
        put("check.epsilons", join(&c.epsilons));
        put("check.hardy-pairs", join_pairs(&c.hardy_pairs));
        put("check.strichartz-pairs", join_pairs(&c.strichartz_pairs));
        put("check.windows", join(&c.windows));
        put("check.sobolev-s", c.sobolev_s.to_string());
        put("check.sobolev-r", join(&c.sobolev_r));
        put("check.resolvent-moduli", join(&c.resolvent_moduli));
        put("check.resolvent-angles", join(&c.resolvent_angles));
        put("check.kinetic-tolerance", c.kinetic_tolerance.to_string());
        put("scatter.tolerance", self.scatter.tolerance.to_string());
        put("scatter.eta", self.scatter.eta.to_string());
        put("scatter.control", self.scatter.control.to_string());
        put("heatkernel.t-min", h.t_min.to_string());
        put("heatkernel.t-max", h.t_max.to_string());
        put("heatkernel.t-count", h.t_count.to_string());
        put("heatkernel.r-min", h.r_min.to_string());
        put("heatkernel.r-max", h.r_max.to_string());
        put("heatkernel.r-count", h.r_count.to_string());
        if let Some(k) = h.k_max {
            put("heatkernel.k-max", k.to_string());
        }
        put("output.snapshots", self.snapshots.to_string());
        if let Some(d) = &self.out_dir {
            put("output.dir", d.display().to_string());
        }
        out
    }

    /// Replace one key by re-parsing the canonical text with the new value.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self> {
        let mut text = String::new();
        let mut found = false;
        for line in self.to_text().lines() {
            match line.split_once(" = ") {
                Some((k, _)) if k == key => {
                    text.push_str(&format!("{key} = {value}\n"));
                    found = true;
                }
                _ => {
                    text.push_str(line);
                    text.push('\n');
                }
            }
        }
        if !found {
            text.push_str(&format!("{key} = {value}\n"));
        }
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_file_gets_defaults_and_flags() {
        let c = ExperimentConfig::parse("n = 3\na = 0\np = 3\n").unwrap();
        assert_eq!(c.kind, ExperimentKind::Simulate);
        assert!(c.solver.params.p_in_range());
        assert!(c.solver.params.scattering_ok());
        assert_eq!(c.check.family_size, 20);
    }

    #[test]
    fn coupling_below_hardy_threshold_rejected() {
        let e = ExperimentConfig::parse("n = 3\na = -0.5\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("-0.25"), "{msg}");
        assert_eq!(e.class(), crate::error::FailureClass::Config);
    }

    #[test]
    fn energy_critical_power_only_rejected_for_scatter() {
        assert!(ExperimentConfig::parse("experiment = simulate\np = 5\n").is_ok());
        let msg = ExperimentConfig::parse("experiment = scatter\np = 5\n").unwrap_err().to_string();
        assert!(msg.contains("1 + 4/(n-2)"), "{msg}");
    }

    #[test]
    fn unknown_key_reports_line() {
        match ExperimentConfig::parse("n = 3\n\n# comment\nbogus = 1\n") {
            Err(Error::ConfigLine { line, message }) => {
                assert_eq!(line, 4);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_repeated_lines() {
        assert!(matches!(ExperimentConfig::parse("n 3"), Err(Error::ConfigLine { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("n = 3\nn = 4"), Err(Error::ConfigLine { line: 2, .. })));
        assert!(matches!(ExperimentConfig::parse("dt = fast"), Err(Error::ConfigLine { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("experiment = verify:nothing"), Err(Error::ConfigLine { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("initial.family = square"), Err(Error::ConfigLine { line: 1, .. })));
    }

    #[test]
    fn invariant_violations() {
        assert!(ExperimentConfig::parse("dt = 0").is_err());
        assert!(ExperimentConfig::parse("n-modes = 4").is_err());
        assert!(ExperimentConfig::parse("radius = -1").is_err());
        assert!(ExperimentConfig::parse("snapshot-stride = 0").is_err());
    }

    #[test]
    fn hidden_coupling_key_round_trips() {
        let c = ExperimentConfig::parse("nonlinearity.coupling = 0").unwrap();
        assert_eq!(c.solver.coupling, 0.0);
        assert!(c.to_text().contains("nonlinearity.coupling = 0"));
        assert!(!ExperimentConfig::default().to_text().contains("nonlinearity"));
    }

    #[test]
    fn override_replaces_a_key() {
        let c = ExperimentConfig::default().with_override("a", "0.5").unwrap();
        assert_eq!(c.solver.params.a, 0.5);
        let c = c.with_override("nu-override", "0.5").unwrap();
        assert_eq!(c.solver.grid.nu_override, Some(0.5));
        assert!(c.with_override("nope", "1").is_err());
    }

    fn family() -> impl Strategy<Value = &'static str> {
        prop_oneof![Just("gaussian"), Just("regular"), Just("unit-gaussian")]
    }

    fn kind() -> impl Strategy<Value = &'static str> {
        prop_oneof![
            Just("simulate"),
            Just("scatter"),
            Just("verify:hardy"),
            Just("verify:morawetz"),
            Just("verify:resolvent"),
            Just("heatkernel"),
            Just("constants"),
            Just("dht-selftest")
        ]
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            kind in kind(),
            n in 3usize..7,
            a_frac in 0.0f64..3.0,
            p in 2.5f64..2.9,
            n_modes in 8usize..1024,
            radius in 1.0f64..500.0,
            dt in 1e-4f64..0.1,
            steps in 0usize..100,
            fam in family(),
            width in 0.1f64..5.0,
            amplitude in -2.0f64..2.0,
            nu in proptest::option::of(0.0f64..3.0),
            seed in any::<u64>(),
            windows in proptest::collection::vec(0.5f64..100.0, 1..4),
            coupling in prop_oneof![Just(1.0), Just(0.0), -1.0f64..1.0],
        ) {
            let a = -0.25 * (n as f64 - 2.0).powi(2) + a_frac;
            let mut text = format!(
                "experiment = {kind}\nn = {n}\na = {a}\np = {p}\nn-modes = {n_modes}\nradius = {radius}\ndt = {dt}\n\
                 horizon = {}\ninitial.family = {fam}\ninitial.width = {width}\ninitial.amplitude = {amplitude}\n\
                 seed = {seed}\ncheck.windows = {}\nnonlinearity.coupling = {coupling}\n",
                dt * steps as f64,
                join(&windows)
            );
            if let Some(nu) = nu {
                text.push_str(&format!("nu-override = {nu}\n"));
            }
            let Ok(c) = ExperimentConfig::parse(&text) else { return Ok(()); };
            let again = ExperimentConfig::parse(&c.to_text()).unwrap();
            prop_assert_eq!(&c, &again);
            prop_assert_eq!(c.to_text(), again.to_text());
        }
    }
}
