//! Experiment orchestration: run one configured experiment, write its CSV
//! tables, plotting scripts and `manifest.json` into an output directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Check, ExperimentConfig, ExperimentKind};
use crate::diagnostics::{
    hardy_quotient, kinetic_check_trajectory, mass, morawetz_action_rate, morawetz_l4_ratio, morawetz_weighted_decay,
    sharp_hardy_quotient, sobolev_equivalence_ratio, spacetime_norm, test_family, uniform_sobolev_ratio, NormRequest,
};
use crate::error::{Error, Result};
use crate::hankel::{dht_forward, dht_inverse, make_grid, RadialField, RadialGrid};
use crate::heatkernel::envelope_check;
use crate::operator::{admissible, constants_report, hardy_constant, sobolev_window, Exponent};
use crate::scattering::{h1_distance, interaction_profile, recommended_radius, scatter_state, subdivide_by_norm};
use crate::snapshot::{Snapshot, LAYOUT_VERSION};
use crate::solver::{run, SolverConfig, Trajectory};
use crate::specfun::BesselOrder;

pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub csv_schema_version: u32,
    pub snapshot_layout_version: u32,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    /// ok | aborted | not-converged | failed
    pub status: String,
    pub scalars: BTreeMap<String, Option<f64>>,
    pub flags: BTreeMap<String, bool>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    Sha256::digest(cfg.to_text().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

struct Recorder {
    dir: PathBuf,
    manifest: Manifest,
}

impl Recorder {
    fn new(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("output directory {} is not writable: {e}", dir.display())))?;
        let mut rec = Recorder {
            dir: dir.to_path_buf(),
            manifest: Manifest {
                tool: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
                csv_schema_version: CSV_SCHEMA_VERSION,
                snapshot_layout_version: LAYOUT_VERSION,
                experiment: cfg.kind.to_string(),
                config_sha256: config_hash(cfg),
                seed: cfg.seed,
                status: "ok".into(),
                scalars: BTreeMap::new(),
                flags: BTreeMap::new(),
                warnings: Vec::new(),
                files: Vec::new(),
            },
        };
        rec.text("config.txt", &cfg.to_text())?;
        Ok(rec)
    }

    fn scalar(&mut self, key: impl Into<String>, v: f64) {
        self.manifest.scalars.insert(key.into(), v.is_finite().then_some(v));
    }

    fn flag(&mut self, key: impl Into<String>, v: bool) {
        self.manifest.flags.insert(key.into(), v);
    }

    fn warn(&mut self, w: impl Into<String>) {
        self.manifest.warnings.push(w.into());
    }

    fn text(&mut self, name: &str, content: &str) -> Result<()> {
        fs::write(self.dir.join(name), content)?;
        self.manifest.files.push(name.into());
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        let mut w = csv::Writer::from_path(self.dir.join(name)).map_err(csv_err)?;
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        self.manifest.files.push(name.into());
        Ok(())
    }

    /// CSV plus a matplotlib script plotting `ys` against `x`.
    fn csv_plot<T: Serialize>(&mut self, name: &str, rows: &[T], x: &str, ys: &[&str], log_y: bool) -> Result<()> {
        self.csv(name, rows)?;
        let stem = name.trim_end_matches(".csv");
        self.text(&format!("plot_{stem}.py"), &plot_script(name, x, ys, log_y))
    }

    fn snapshot(&mut self, name: &str, f: &RadialField, t: f64) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Snapshot::of(f, t).save(&path)?;
        self.manifest.files.push(name.into());
        Ok(())
    }

    fn finish(mut self, status: &str) -> Result<Manifest> {
        self.manifest.status = status.into();
        self.manifest.files.push("manifest.json".into());
        let json = serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(self.dir.join("manifest.json"), json + "\n")?;
        Ok(self.manifest)
    }
}

fn plot_script(csv_name: &str, x: &str, ys: &[&str], log_y: bool) -> String {
    let ys = ys.iter().map(|y| format!("{y:?}")).collect::<Vec<_>>().join(", ");
    let scale = if log_y { "\nax.set_yscale(\"log\")" } else { "" };
    format!(
        "import csv\nimport sys\n\nimport matplotlib.pyplot as plt\n\n\
         with open({csv_name:?}) as fh:\n    rows = list(csv.DictReader(fh))\n\n\
         fig, ax = plt.subplots()\n\
         for col in [{ys}]:\n    pts = [(float(r[{x:?}]), float(r[col])) for r in rows if r[col] not in (\"\", \"NaN\")]\n    \
         if pts:\n        ax.plot(*zip(*pts), marker=\".\", label=col)\n\
         ax.set_xlabel({x:?}){scale}\nax.legend()\nfig.savefig(sys.argv[1] if len(sys.argv) > 1 else {png:?}, dpi=150)\n",
        png = csv_name.replace(".csv", ".png"),
    )
}

/// Run the configured experiment, writing everything into `out_dir`.
///
/// Runs that stop early (wall, blow-up guard, unconverged scattering tail)
/// still flush their partial tables and a manifest before returning the error.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    let mut rec = Recorder::new(out_dir, cfg)?;
    let outcome = match cfg.kind {
        ExperimentKind::Simulate => simulate(cfg, &mut rec),
        ExperimentKind::Scatter => scatter(cfg, &mut rec),
        ExperimentKind::Verify(check) => verify(cfg, check, &mut rec),
        ExperimentKind::Heatkernel => heatkernel(cfg, &mut rec),
        ExperimentKind::Constants => constants(cfg, &mut rec),
        ExperimentKind::DhtSelftest => dht_selftest(cfg, &mut rec),
    };
    match outcome {
        Ok(()) => rec.finish("ok"),
        Err(e) => {
            let status = match &e {
                Error::Aborted { .. } => "aborted",
                Error::NotConverged(_) => "not-converged",
                _ => "failed",
            };
            rec.warn(e.to_string());
            rec.finish(status)?;
            Err(e)
        }
    }
}

#[derive(Serialize)]
struct TrajectoryRow {
    t: f64,
    mass: f64,
    energy: f64,
    kinetic: f64,
    hardy_quotient: f64,
    sup_norm: f64,
    boundary_mass: f64,
    potential: f64,
    nonlinear: f64,
    hdot_half: f64,
}

fn write_trajectory(rec: &mut Recorder, traj: &Trajectory, dump: bool) -> Result<()> {
    let rows: Vec<TrajectoryRow> = traj
        .records
        .iter()
        .map(|r| TrajectoryRow {
            t: r.t,
            mass: r.mass,
            energy: r.energy,
            kinetic: r.kinetic,
            hardy_quotient: r.hardy_quotient,
            sup_norm: r.sup_norm,
            boundary_mass: r.boundary_mass,
            potential: r.potential,
            nonlinear: r.nonlinear,
            hdot_half: r.hdot_half,
        })
        .collect();
    rec.csv_plot("trajectory.csv", &rows, "t", &["mass", "energy", "kinetic"], false)?;
    let m0 = traj.records[0].mass;
    let e0 = traj.records[0].energy;
    let rel = |x: f64, x0: f64| if x0 != 0.0 { ((x - x0) / x0).abs() } else { (x - x0).abs() };
    rec.scalar("final_time", traj.final_time());
    rec.scalar("snapshots", traj.len() as f64);
    rec.scalar("mass_drift", traj.records.iter().map(|r| rel(r.mass, m0)).fold(0.0, f64::max));
    rec.scalar("energy_drift", traj.records.iter().map(|r| rel(r.energy, e0)).fold(0.0, f64::max));
    rec.scalar("max_boundary_mass", traj.records.iter().map(|r| r.boundary_mass).fold(0.0, f64::max));
    if dump {
        for (i, (f, &t)) in traj.snapshots.iter().zip(&traj.times).enumerate() {
            rec.snapshot(&format!("snapshots/snap_{i:06}.bin"), f, t)?;
        }
    }
    Ok(())
}

/// Run the solver, flushing the partial trajectory if it aborts.
fn run_recorded(rec: &mut Recorder, solver: &SolverConfig, dump: bool) -> Result<Trajectory> {
    match run(solver) {
        Ok(traj) => {
            write_trajectory(rec, &traj, dump)?;
            Ok(traj)
        }
        Err(Error::Aborted { reason, partial }) => {
            write_trajectory(rec, &partial, dump)?;
            Err(Error::Aborted { reason, partial })
        }
        Err(e) => Err(e),
    }
}

fn simulate(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let traj = run_recorded(rec, &cfg.solver, cfg.snapshots)?;
    let k = kinetic_check_trajectory(&traj, cfg.check.kinetic_tolerance);
    rec.scalar("kinetic_min_relative_margin", k.relative.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(())
}

#[derive(Serialize)]
struct ScatterRow {
    t: f64,
    cauchy_increment: f64,
    h1_distance_to_free: f64,
    tail_bound: f64,
}

#[derive(Serialize)]
struct IntervalRow {
    t_start: f64,
    t_end: f64,
    norm: f64,
    coarse: bool,
}

fn scatter(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let opts = cfg.scatter;
    if let Some(w) = cfg.solver.params.scattering_violation() {
        rec.warn(format!("scattering hypotheses fail ({w}); proceeding in exploratory mode"));
    }
    let traj = run_recorded(rec, &cfg.solver, cfg.snapshots)?;
    let prof = interaction_profile(&traj)?;
    let state = scatter_state(&traj, opts.tolerance)?;
    let inc = &prof.increments;
    let mut rows = Vec::with_capacity(prof.times.len());
    for (j, &t) in prof.times.iter().enumerate() {
        rows.push(ScatterRow {
            t,
            cauchy_increment: if j == 0 { 0.0 } else { inc[j - 1] },
            h1_distance_to_free: h1_distance(&prof.profile[j], &state.u_plus)?,
            tail_bound: inc[j.min(inc.len())..].iter().sum::<f64>() + state.tail_bound,
        });
    }
    rec.csv_plot("scattering.csv", &rows, "t", &["cauchy_increment", "h1_distance_to_free", "tail_bound"], true)?;
    rec.snapshot("u_plus.bin", &state.u_plus, 0.0)?;
    let sub = subdivide_by_norm(&traj, opts.eta)?;
    let intervals: Vec<IntervalRow> = sub
        .intervals
        .iter()
        .enumerate()
        .map(|(i, &(t_start, t_end, norm))| IntervalRow { t_start, t_end, norm, coarse: sub.coarse.contains(&i) })
        .collect();
    rec.csv("subdivision.csv", &intervals)?;
    if !sub.coarse.is_empty() {
        rec.warn(format!("{} subdivision intervals span a single step; dt is coarse for eta = {}", sub.coarse.len(), opts.eta));
    }

    let h1 = prof.initial_h1;
    let m0 = mass(traj.initial());
    let last = prof.last_increment();
    let needed = recommended_radius(traj.initial(), traj.final_time());
    rec.scalar("initial_h1", h1);
    rec.scalar("last_increment", last);
    rec.scalar("last_increment_relative", if h1 > 0.0 { last / h1 } else { 0.0 });
    rec.scalar("quadrature_gap", state.quadrature_gap);
    rec.scalar("gap_over_increment", if last > 0.0 { state.quadrature_gap / last } else { 0.0 });
    rec.scalar("u_plus_mass_error", if m0 > 0.0 { (mass(&state.u_plus) - m0).abs() / m0 } else { 0.0 });
    rec.scalar("converged_at", prof.converged_at(opts.tolerance).unwrap_or(f64::NAN));
    rec.scalar("subdivision_count", sub.count() as f64);
    rec.scalar("recommended_radius", needed);
    rec.flag("converged", state.converged);
    rec.flag("hypotheses_ok", cfg.solver.params.scattering_ok());
    rec.flag("radius_sufficient", cfg.solver.grid.radius >= needed);
    if cfg.solver.grid.radius < needed {
        rec.warn(format!("radius {} is below the recommended {needed:.1} for horizon {}", cfg.solver.grid.radius, traj.final_time()));
    }

    if opts.control {
        let mut linear = cfg.solver.clone();
        linear.coupling = 0.0;
        let ctrl = interaction_profile(&run(&linear)?)?;
        let worst = ctrl.increments.iter().cloned().fold(0.0, f64::max);
        rec.scalar("control_max_increment", worst);
        rec.scalar("control_max_increment_relative", if h1 > 0.0 { worst / h1 } else { 0.0 });
        rec.flag("control_ok", worst <= 1e-10 * h1.max(1.0));
    }
    if !state.converged {
        return Err(Error::NotConverged(format!(
            "last dyadic increment {:e} is not below {:e} x ||u0||_H1 by t = {}",
            last,
            opts.tolerance,
            traj.final_time()
        )));
    }
    Ok(())
}

fn verify(cfg: &ExperimentConfig, check: Check, rec: &mut Recorder) -> Result<()> {
    match check {
        Check::Hardy => verify_hardy(cfg, rec),
        Check::Kinetic => verify_kinetic(cfg, rec),
        Check::Morawetz => verify_morawetz(cfg, rec),
        Check::Strichartz => verify_strichartz(cfg, rec),
        Check::Sobolev => verify_sobolev(cfg, rec),
        Check::Resolvent => verify_resolvent(cfg, rec),
    }
}

/// Relative change between the first and the last entry.
fn growth(v: &[f64]) -> f64 {
    match (v.first(), v.last()) {
        (Some(&a), Some(&b)) if a != 0.0 => b / a - 1.0,
        _ => f64::NAN,
    }
}

#[derive(Serialize)]
struct SharpRow {
    epsilon: f64,
    quotient: f64,
    oracle: f64,
    sharp_constant: f64,
}

#[derive(Serialize)]
struct GeneralizedRow {
    s: f64,
    p: f64,
    n_modes: usize,
    quotient: f64,
    quotient_refined: f64,
    relative_change: f64,
}

/// The near-optimizer r^{ε−(n−2)/2} e^{−r²/2} on its own order-ε grid; its quotient is 4/((n−2)² + 4ε).
pub fn hardy_optimizer(dim: usize, epsilon: f64, n_modes: usize, radius: f64) -> Result<RadialField> {
    let grid = make_grid(BesselOrder::new(epsilon)?, n_modes, radius)?;
    let e = epsilon - 0.5 * (dim as f64 - 2.0);
    RadialField::from_fn(grid, dim, 0, |r| Complex64::new(r.powf(e) * (-0.5 * r * r).exp(), 0.0))
}

fn verify_hardy(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let s = &cfg.solver;
    let n = s.params.n;
    let c = hardy_constant(n);
    let mut sharp = Vec::new();
    for &eps in &cfg.check.epsilons {
        if !(eps > 0.0) {
            return Err(Error::Config(format!("check.epsilons must be positive, got {eps}")));
        }
        let f = hardy_optimizer(n, eps, s.grid.n_modes, s.grid.radius)?;
        let m = 0.5 * (n as f64 - 2.0);
        sharp.push(SharpRow { epsilon: eps, quotient: sharp_hardy_quotient(&f)?, oracle: 1.0 / (m * m + eps), sharp_constant: c });
    }
    rec.csv_plot("verify_hardy_sharp.csv", &sharp, "epsilon", &["quotient", "oracle", "sharp_constant"], false)?;
    let best = sharp.iter().map(|r| r.quotient).fold(0.0, f64::max);
    rec.scalar("sharp_constant", c);
    rec.scalar("sharp_best_fraction", best / c);
    rec.flag("sharp_never_exceeds", sharp.iter().all(|r| r.quotient <= c * (1.0 + 1e-12)));
    rec.flag("sharp_within_5_percent", best >= 0.95 * c);

    let coarse = s.make_grid()?;
    let fine = make_grid(s.grid_order()?, 2 * s.grid.n_modes, s.grid.radius)?;
    let f0 = s.initial_field(&coarse)?;
    let f1 = s.initial_field(&fine)?;
    let mut general = Vec::new();
    for &(sv, pv) in &cfg.check.hardy_pairs {
        let q0 = hardy_quotient(&f0, sv, pv)?;
        let q1 = hardy_quotient(&f1, sv, pv)?;
        general.push(GeneralizedRow { s: sv, p: pv, n_modes: s.grid.n_modes, quotient: q0, quotient_refined: q1, relative_change: (q1 - q0).abs() / q0.abs() });
    }
    rec.csv("verify_hardy_generalized.csv", &general)?;
    let worst = general.iter().map(|r| r.relative_change).fold(0.0, f64::max);
    rec.scalar("generalized_max_change", worst);
    rec.flag("generalized_stable", worst <= 0.01);
    Ok(())
}

#[derive(Serialize)]
struct KineticRow {
    t: f64,
    energy: f64,
    kinetic: f64,
    constant: f64,
    margin: f64,
    relative_margin: f64,
}

fn verify_kinetic(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let traj = run_recorded(rec, &cfg.solver, false)?;
    let k = kinetic_check_trajectory(&traj, cfg.check.kinetic_tolerance);
    let rows: Vec<KineticRow> = traj
        .records
        .iter()
        .zip(k.margins.iter().zip(&k.relative))
        .map(|(r, (&margin, &relative_margin))| KineticRow {
            t: r.t,
            energy: r.energy,
            kinetic: r.kinetic,
            constant: k.constant,
            margin,
            relative_margin,
        })
        .collect();
    rec.csv_plot("verify_kinetic.csv", &rows, "t", &["margin", "kinetic", "energy"], false)?;
    rec.scalar("kinetic_constant", k.constant);
    rec.scalar("min_relative_margin", k.relative.iter().cloned().fold(f64::INFINITY, f64::min));
    rec.flag("kinetic_bound_holds", k.violation.is_none());
    Ok(())
}

fn windows_within(cfg: &ExperimentConfig, rec: &mut Recorder, end: f64) -> Vec<f64> {
    let (ok, dropped): (Vec<f64>, Vec<f64>) = cfg.check.windows.iter().partition(|&&w| w <= end * (1.0 + 1e-12));
    if !dropped.is_empty() {
        rec.warn(format!("windows {dropped:?} exceed the horizon {end} and were skipped"));
    }
    ok
}

#[derive(Serialize)]
struct MorawetzRow {
    window_end: f64,
    l4_fourth: Option<f64>,
    sup_hdot_half: f64,
    l4_ratio: Option<f64>,
    weighted_integral: Option<f64>,
    weighted_ratio: Option<f64>,
}

#[derive(Serialize)]
struct ActionRow {
    t: f64,
    action_rate: f64,
}

fn verify_morawetz(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let traj = run_recorded(rec, &cfg.solver, false)?;
    let windows = windows_within(cfg, rec, traj.final_time());
    let mut rows = Vec::new();
    let mut gate_errors = Vec::new();
    for &w in &windows {
        let l4 = match morawetz_l4_ratio(&traj, (0.0, w)) {
            Ok(b) => Some(b),
            Err(e) => {
                gate_errors.push(e.to_string());
                None
            }
        };
        let wd = match morawetz_weighted_decay(&traj, (0.0, w)) {
            Ok(d) => Some(d),
            Err(e) => {
                gate_errors.push(e.to_string());
                None
            }
        };
        rows.push(MorawetzRow {
            window_end: w,
            l4_fourth: l4.map(|b| b.l4_fourth),
            sup_hdot_half: l4.map(|b| b.sup_hdot_half).or(wd.map(|d| d.sup_hdot_half)).unwrap_or(f64::NAN),
            l4_ratio: l4.map(|b| b.ratio),
            weighted_integral: wd.map(|d| d.integral),
            weighted_ratio: wd.map(|d| d.ratio),
        });
    }
    gate_errors.dedup();
    if rows.iter().all(|r| r.l4_ratio.is_none() && r.weighted_ratio.is_none()) {
        return Err(Error::Config(gate_errors.first().cloned().unwrap_or_else(|| "no Morawetz window inside the run".into())));
    }
    for e in gate_errors {
        rec.warn(e);
    }
    rec.csv_plot("verify_morawetz.csv", &rows, "window_end", &["l4_ratio", "weighted_ratio"], false)?;
    let rates: Vec<ActionRow> = morawetz_action_rate(&traj).into_iter().map(|(t, action_rate)| ActionRow { t, action_rate }).collect();
    rec.csv_plot("verify_morawetz_action.csv", &rates, "t", &["action_rate"], false)?;
    let l4: Vec<f64> = rows.iter().filter_map(|r| r.l4_ratio).collect();
    let wd: Vec<f64> = rows.iter().filter_map(|r| r.weighted_ratio).collect();
    if !l4.is_empty() {
        rec.scalar("l4_growth", growth(&l4));
        rec.flag("l4_plateau", growth(&l4).abs() < 0.05);
    }
    if !wd.is_empty() {
        rec.scalar("weighted_growth", growth(&wd));
        rec.flag("weighted_plateau", growth(&wd).abs() < 0.05);
    }
    Ok(())
}

#[derive(Serialize)]
struct StrichartzRow {
    q: f64,
    r: f64,
    admissible: bool,
    window_end: f64,
    norm: f64,
    ratio: f64,
}

fn verify_strichartz(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let mut linear = cfg.solver.clone();
    linear.coupling = 0.0;
    let traj = run_recorded(rec, &linear, false)?;
    let windows = windows_within(cfg, rec, traj.final_time());
    let m = mass(traj.initial()).sqrt();
    let n = cfg.solver.params.n;
    let mut rows = Vec::new();
    let mut all_flat = true;
    for &(q, r) in &cfg.check.strichartz_pairs {
        let ok = admissible(Exponent::Finite(q), Exponent::Finite(r), n);
        if !ok {
            rec.warn(format!("(q, r) = ({q}, {r}) is not admissible in dimension {n}"));
        }
        let mut ratios = Vec::new();
        for &w in &windows {
            let norm = spacetime_norm(&traj, &NormRequest::new(q, r, (0.0, w)))?;
            let ratio = if m > 0.0 { norm / m } else { 0.0 };
            ratios.push(ratio);
            rows.push(StrichartzRow { q, r, admissible: ok, window_end: w, norm, ratio });
        }
        let g = growth(&ratios);
        rec.scalar(format!("growth_q{q}_r{r}"), g);
        all_flat &= g.abs() < 0.05;
    }
    rec.csv_plot("verify_strichartz.csv", &rows, "window_end", &["ratio"], false)?;
    rec.flag("strichartz_plateau", all_flat);
    Ok(())
}

#[derive(Serialize)]
struct SobolevRow {
    r: f64,
    in_window: bool,
    member: usize,
    ratio: f64,
}

fn family(cfg: &ExperimentConfig) -> Result<(Arc<RadialGrid>, Vec<RadialField>)> {
    let grid = cfg.solver.make_grid()?;
    let fam = test_family(&grid, cfg.solver.params.n, cfg.check.family_size, cfg.seed)?;
    Ok((grid, fam))
}

fn verify_sobolev(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let params = cfg.solver.params;
    let s = cfg.check.sobolev_s;
    let window = sobolev_window(&params);
    let (_, fam) = family(cfg)?;
    let mut rows = Vec::new();
    let mut worst_bracket: f64 = 1.0;
    for &r in &cfg.check.sobolev_r {
        let inside = window.contains(r);
        let ratios = fam.iter().map(|f| sobolev_equivalence_ratio(f, s, r, &params)).collect::<Result<Vec<_>>>()?;
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        rec.scalar(format!("bracket_r{r}"), hi / lo);
        if inside {
            worst_bracket = worst_bracket.max(hi / lo);
        }
        rows.extend(ratios.into_iter().enumerate().map(|(member, ratio)| SobolevRow { r, in_window: inside, member, ratio }));
    }
    rec.csv_plot("verify_sobolev.csv", &rows, "r", &["ratio"], false)?;
    rec.scalar("window_r0", window.r0);
    rec.scalar("window_r1", window.r1.finite().unwrap_or(f64::INFINITY));
    rec.scalar("worst_bracket_in_window", worst_bracket);
    rec.flag("bracket_within_10", worst_bracket <= 10.0);
    Ok(())
}

#[derive(Serialize)]
struct ResolventRow {
    member: usize,
    modulus: f64,
    angle: f64,
    alpha_re: f64,
    alpha_im: f64,
    ratio: f64,
}

fn verify_resolvent(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let params = cfg.solver.params;
    let (grid, fam) = family(cfg)?;
    let top = grid.rho().last().copied().unwrap_or(1.0).powi(2);
    let mut rows = Vec::new();
    for &m in &cfg.check.resolvent_moduli {
        for &theta in &cfg.check.resolvent_angles {
            let alpha = Complex64::from_polar(m * top, std::f64::consts::PI * theta);
            for (member, f) in fam.iter().enumerate() {
                let ratio = uniform_sobolev_ratio(f, alpha, &params)?;
                rows.push(ResolventRow { member, modulus: m, angle: theta, alpha_re: alpha.re, alpha_im: alpha.im, ratio });
            }
        }
    }
    rec.csv("verify_resolvent.csv", &rows)?;
    let hi = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    rec.scalar("max_ratio", hi);
    rec.scalar("min_ratio", lo);
    Ok(())
}

fn heatkernel(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let grid = cfg.heatkernel.query_grid()?;
    let report = envelope_check(&cfg.solver.params, &grid)?;
    rec.csv("kernel_grid.csv", &report.points)?;
    let e = report.envelope;
    rec.scalar("c_lower", e.c_lower);
    rec.scalar("c_upper", e.c_upper);
    rec.scalar("rate_lower", e.rate_lower);
    rec.scalar("rate_upper", e.rate_upper);
    rec.scalar("sigma", e.sigma);
    rec.scalar("points", report.points.len() as f64);
    rec.scalar("resolved", report.resolved as f64);
    rec.scalar("unresolved", report.unresolved() as f64);
    rec.scalar("sandwiched", report.sandwiched as f64);
    rec.scalar("violations", report.violations.len() as f64);
    rec.flag("all_resolved", report.unresolved() == 0);
    rec.flag("resolved_sandwiched", report.violations.is_empty());
    if report.unresolved() > 0 {
        rec.warn(format!(
            "{} of {} kernel points are not resolved in double precision (cancellation in the sector sum); they are listed with resolved = false",
            report.unresolved(),
            report.points.len()
        ));
    }
    Ok(())
}

fn constants(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let r = constants_report(&cfg.solver.params, cfg.solver.lwp_margin);
    let json = serde_json::to_string_pretty(&r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    rec.text("constants.json", &(json + "\n"))?;
    rec.scalar("lambda_n", r.lambda_n);
    rec.scalar("sigma", r.sigma);
    rec.scalar("kinetic_constant", r.kinetic_constant);
    rec.flag("p_in_range", r.p_in_range);
    rec.flag("scattering_ok", r.scattering_ok);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestRow {
    pub field: &'static str,
    pub nu: f64,
    pub n_modes: usize,
    pub radius: f64,
    pub roundtrip_residual: f64,
    pub parseval_residual: f64,
}

fn bump(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (-1.0 / (1.0 - x * x)).exp()
    } else {
        0.0
    }
}

type Profile = Box<dyn Fn(f64) -> Complex64>;

/// Round-trip and Parseval residuals of the transform on smooth fields supported in [0, R/2].
pub fn dht_residuals(nu: BesselOrder, n_modes: usize, radius: f64, dim: usize) -> Result<Vec<SelftestRow>> {
    let grid = make_grid(nu, n_modes, radius)?;
    let b = 0.5 * radius;
    let lead = nu.value() - 0.5 * (dim as f64 - 2.0);
    let fields: [(&'static str, Profile); 3] = [
        ("regular-bump", Box::new(move |r| Complex64::new(r.powf(lead) * bump(r / b), 0.0))),
        ("plain-bump", Box::new(move |r| Complex64::new(bump(r / b), 0.3 * (r / b) * bump(r / b)))),
        ("oscillating-bump", Box::new(move |r| Complex64::from_polar(bump(r / b), 4.0 * r / b) * (r / b).powi(2))),
    ];
    fields
        .iter()
        .map(|(name, u)| {
            let f = RadialField::from_fn(Arc::clone(&grid), dim, 0, u)?;
            let spec = dht_forward(&f);
            let back = dht_inverse(&spec);
            let norm = f.profile_norm_sqr();
            Ok(SelftestRow {
                field: name,
                nu: nu.value(),
                n_modes,
                radius,
                roundtrip_residual: (back.sub(&f)?.profile_norm_sqr() / norm).sqrt(),
                parseval_residual: (spec.norm_sqr().sqrt() - norm.sqrt()).abs() / norm.sqrt(),
            })
        })
        .collect()
}

fn dht_selftest(cfg: &ExperimentConfig, rec: &mut Recorder) -> Result<()> {
    let s = &cfg.solver;
    let rows = dht_residuals(s.grid_order()?, s.grid.n_modes, s.grid.radius, s.params.n)?;
    rec.csv("dht_selftest.csv", &rows)?;
    let rt = rows.iter().map(|r| r.roundtrip_residual).fold(0.0, f64::max);
    let pv = rows.iter().map(|r| r.parseval_residual).fold(0.0, f64::max);
    rec.scalar("max_roundtrip_residual", rt);
    rec.scalar("max_parseval_residual", pv);
    rec.flag("within_budget", rt <= 1e-9 && pv <= 1e-9);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub overrides: String,
    pub status: String,
    pub config_sha256: String,
    pub error: String,
}

/// Cartesian product of `key = v1,v2,…` variations over a base config.
pub fn sweep_configs(base: &ExperimentConfig, vary: &[(String, Vec<String>)]) -> Result<Vec<(String, ExperimentConfig)>> {
    let mut out = vec![(String::new(), base.clone())];
    for (key, values) in vary {
        if values.is_empty() {
            return Err(Error::Config(format!("sweep key {key} has no values")));
        }
        let mut next = Vec::with_capacity(out.len() * values.len());
        for (label, cfg) in &out {
            for v in values {
                let l = if label.is_empty() { format!("{key}={v}") } else { format!("{label};{key}={v}") };
                next.push((l, cfg.with_override(key, v)?));
            }
        }
        out = next;
    }
    Ok(out)
}

/// Run every config of the sweep in its own subdirectory `run-NNN`, `threads` at a time.
pub fn run_sweep(configs: &[(String, ExperimentConfig)], out_dir: &Path, threads: usize) -> Result<Vec<SweepRow>> {
    fs::create_dir_all(out_dir)?;
    let next = AtomicUsize::new(0);
    let rows = Mutex::new(Vec::with_capacity(configs.len()));
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((label, cfg)) = configs.get(i) else { break };
                let dir = out_dir.join(format!("run-{i:03}"));
                let (status, error) = match run_experiment(cfg, &dir) {
                    Ok(m) => (m.status, String::new()),
                    Err(e) => (
                        match e {
                            Error::Aborted { .. } => "aborted".to_string(),
                            Error::NotConverged(_) => "not-converged".to_string(),
                            _ => "failed".to_string(),
                        },
                        e.to_string(),
                    ),
                };
                let row = SweepRow { index: i, overrides: label.clone(), status, config_sha256: config_hash(cfg), error };
                rows.lock().expect("sweep rows poisoned").push(row);
            });
        }
    });
    let mut rows = rows.into_inner().expect("sweep rows poisoned");
    rows.sort_by_key(|r| r.index);
    let mut w = csv::Writer::from_path(out_dir.join("sweep.csv")).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    for r in &rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(rows)
}
