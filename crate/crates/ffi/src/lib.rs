//! C ABI over `invsq`.
//!
//! Every function returns an [`InvsqStatus`]; on failure the message is kept in a
//! thread-local slot readable with [`invsq_last_error_message`]. Handles are opaque
//! and must be released with their `*_free` function. Panics never cross the boundary.
//!
//! # Safety
//!
//! Pointer arguments must be NULL or valid for the access the function makes:
//! strings NUL-terminated UTF-8, arrays at least as long as the stated length,
//! handles obtained from this library and not yet freed. Handles are not
//! synchronized; do not use one handle from two threads at once.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use invsq::config::ExperimentConfig;
use invsq::error::{Error, FailureClass};
use invsq::experiment::{dht_residuals, run_experiment, Manifest};
use invsq::hankel::{make_grid, RadialField, RadialGrid};
use invsq::heatkernel::{full_kernel, HeatKernelQuery};
use invsq::operator::{constants_report, ModelParams, DEFAULT_LWP_MARGIN};
use invsq::specfun::BesselOrder;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvsqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numerics = 4,
    NotConverged = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Derived constants of the model (n, a, p).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct InvsqConstants {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub lambda_n: f64,
    pub sigma: f64,
    pub nu0: f64,
    pub hardy_constant: f64,
    pub kinetic_constant: f64,
    pub p_in_range: bool,
    pub scattering_ok: bool,
}

/// Experiment configuration.
pub struct InvsqConfig {
    inner: ExperimentConfig,
}

/// Result summary of one experiment run.
pub struct InvsqManifest {
    inner: Manifest,
    status: CString,
    json: CString,
}

/// Radial field sampled on the grid of its model.
pub struct InvsqField {
    field: RadialField,
    params: ModelParams,
}

struct Failure {
    status: InvsqStatus,
    message: String,
}

impl Failure {
    fn new(status: InvsqStatus, message: impl Into<String>) -> Self {
        Failure { status, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match (&e, e.class()) {
            (Error::Io(_), _) => InvsqStatus::Io,
            (_, FailureClass::Config) => InvsqStatus::Config,
            (_, FailureClass::Numerics) => InvsqStatus::Numerics,
            (_, FailureClass::NonConvergence) => InvsqStatus::NotConverged,
        };
        Failure::new(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult) -> InvsqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InvsqStatus::Ok,
        Ok(Err(fail)) => {
            set_last_error(&fail.message);
            fail.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            InvsqStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure::new(InvsqStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| Failure::new(InvsqStatus::NullPointer, format!("{what} is NULL")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Failure::new(InvsqStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::new(InvsqStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> FfiResult {
    if out.is_null() {
        return Err(Failure::new(InvsqStatus::NullPointer, format!("{what} is NULL")));
    }
    out.write(value);
    Ok(())
}

/// Copy `s` plus a NUL into `buf` if it fits; always report the needed size.
unsafe fn copy_string(s: &[u8], buf: *mut c_char, len: usize, needed: *mut usize) -> FfiResult {
    if !needed.is_null() {
        needed.write(s.len() + 1);
    }
    if buf.is_null() || len < s.len() + 1 {
        return Err(Failure::new(InvsqStatus::BufferTooSmall, format!("buffer needs {} bytes", s.len() + 1)));
    }
    std::ptr::copy_nonoverlapping(s.as_ptr() as *const c_char, buf, s.len());
    buf.add(s.len()).write(0);
    Ok(())
}

fn into_handle<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Box `value` into `*out`, checking `out` first so nothing leaks.
unsafe fn give<T>(out: *mut *mut T, value: T) -> FfiResult {
    if out.is_null() {
        return Err(Failure::new(InvsqStatus::NullPointer, "out is NULL"));
    }
    out.write(into_handle(value));
    Ok(())
}

unsafe fn free_handle<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn invsq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated).
/// Returns the size needed including the NUL, or 0 when there is no error.
#[no_mangle]
pub unsafe extern "C" fn invsq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                buf.add(n - 1).write(0);
            }
            bytes.len()
        }
    })
}

#[no_mangle]
pub extern "C" fn invsq_clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

#[no_mangle]
pub unsafe extern "C" fn invsq_config_default(out: *mut *mut InvsqConfig) -> InvsqStatus {
    guard(|| give(out, InvsqConfig { inner: ExperimentConfig::default() }))
}

/// Parse config text (`key = value` lines).
#[no_mangle]
pub unsafe extern "C" fn invsq_config_parse(text_ptr: *const c_char, out: *mut *mut InvsqConfig) -> InvsqStatus {
    guard(|| {
        let cfg = ExperimentConfig::parse(text(text_ptr, "text")?)?;
        give(out, InvsqConfig { inner: cfg })
    })
}

#[no_mangle]
pub unsafe extern "C" fn invsq_config_load(path: *const c_char, out: *mut *mut InvsqConfig) -> InvsqStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_path(Path::new(text(path, "path")?))?;
        give(out, InvsqConfig { inner: cfg })
    })
}

/// Set one key; the config is left unchanged on error.
#[no_mangle]
pub unsafe extern "C" fn invsq_config_set(cfg: *mut InvsqConfig, key: *const c_char, value: *const c_char) -> InvsqStatus {
    guard(|| {
        let cfg = borrow_mut(cfg, "config")?;
        cfg.inner = cfg.inner.with_override(text(key, "key")?, text(value, "value")?)?;
        Ok(())
    })
}

/// Canonical text of the config. `needed` (optional) receives the size including the NUL.
#[no_mangle]
pub unsafe extern "C" fn invsq_config_to_text(
    cfg: *const InvsqConfig,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> InvsqStatus {
    guard(|| copy_string(borrow(cfg, "config")?.inner.to_text().as_bytes(), buf, len, needed))
}

#[no_mangle]
pub unsafe extern "C" fn invsq_config_free(cfg: *mut InvsqConfig) {
    free_handle(cfg)
}

fn manifest_handle(m: Manifest) -> FfiResult<*mut InvsqManifest> {
    let json = serde_json::to_string_pretty(&m).map_err(|e| Failure::new(InvsqStatus::Io, e.to_string()))?;
    let c = |s: String| CString::new(s).map_err(|e| Failure::new(InvsqStatus::InvalidArgument, e.to_string()));
    Ok(into_handle(InvsqManifest { status: c(m.status.clone())?, json: c(json)?, inner: m }))
}

/// Run the configured experiment, writing its files into `out_dir`.
///
/// When the run fails after the manifest was written (aborted, not converged),
/// `*out` still receives that manifest and the failure status is returned;
/// otherwise `*out` is set to NULL on failure.
#[no_mangle]
pub unsafe extern "C" fn invsq_run(cfg: *const InvsqConfig, out_dir: *const c_char, out: *mut *mut InvsqManifest) -> InvsqStatus {
    guard(|| {
        let cfg = borrow(cfg, "config")?;
        let dir = Path::new(text(out_dir, "out_dir")?);
        write_out(out, std::ptr::null_mut(), "out")?;
        match run_experiment(&cfg.inner, dir) {
            Ok(m) => write_out(out, manifest_handle(m)?, "out"),
            Err(e) => {
                let fail = Failure::from(e);
                let partial = std::fs::read_to_string(dir.join("manifest.json"))
                    .ok()
                    .and_then(|s| serde_json::from_str::<Manifest>(&s).ok())
                    .filter(|m| m.status != "ok");
                if let Some(m) = partial {
                    out.write(manifest_handle(m)?);
                }
                Err(fail)
            }
        }
    })
}

/// "ok", "aborted", "not-converged" or "failed"; valid until the manifest is freed.
#[no_mangle]
pub unsafe extern "C" fn invsq_manifest_status(m: *const InvsqManifest) -> *const c_char {
    m.as_ref().map_or(std::ptr::null(), |m| m.status.as_ptr())
}

/// Full manifest as JSON; valid until the manifest is freed.
#[no_mangle]
pub unsafe extern "C" fn invsq_manifest_json(m: *const InvsqManifest) -> *const c_char {
    m.as_ref().map_or(std::ptr::null(), |m| m.json.as_ptr())
}

/// Named scalar; NaN when the run recorded it as not available.
#[no_mangle]
pub unsafe extern "C" fn invsq_manifest_scalar(m: *const InvsqManifest, name: *const c_char, out: *mut f64) -> InvsqStatus {
    guard(|| {
        let m = borrow(m, "manifest")?;
        let name = text(name, "name")?;
        let v = m
            .inner
            .scalars
            .get(name)
            .ok_or_else(|| Failure::new(InvsqStatus::InvalidArgument, format!("no scalar '{name}'")))?;
        write_out(out, v.unwrap_or(f64::NAN), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn invsq_manifest_flag(m: *const InvsqManifest, name: *const c_char, out: *mut bool) -> InvsqStatus {
    guard(|| {
        let m = borrow(m, "manifest")?;
        let name = text(name, "name")?;
        let v = m
            .inner
            .flags
            .get(name)
            .ok_or_else(|| Failure::new(InvsqStatus::InvalidArgument, format!("no flag '{name}'")))?;
        write_out(out, *v, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn invsq_manifest_free(m: *mut InvsqManifest) {
    free_handle(m)
}

#[no_mangle]
pub unsafe extern "C" fn invsq_constants(n: usize, a: f64, p: f64, out: *mut InvsqConstants) -> InvsqStatus {
    guard(|| {
        let params = ModelParams::new(n, a, p)?;
        let r = constants_report(&params, DEFAULT_LWP_MARGIN);
        write_out(
            out,
            InvsqConstants {
                n: r.n,
                a: r.a,
                p: r.p,
                lambda_n: r.lambda_n,
                sigma: r.sigma,
                nu0: r.nu0,
                hardy_constant: r.hardy_constant,
                kinetic_constant: r.kinetic_constant,
                p_in_range: r.p_in_range,
                scattering_ok: r.scattering_ok,
            },
            "out",
        )
    })
}

/// Worst round-trip and Parseval residuals of the transform over the built-in test fields.
#[no_mangle]
pub unsafe extern "C" fn invsq_dht_selftest(
    nu: f64,
    n_modes: usize,
    radius: f64,
    dim: usize,
    roundtrip: *mut f64,
    parseval: *mut f64,
) -> InvsqStatus {
    guard(|| {
        let rows = dht_residuals(BesselOrder::new(nu)?, n_modes, radius, dim)?;
        let worst = |f: fn(&invsq::experiment::SelftestRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
        write_out(roundtrip, worst(|r| r.roundtrip_residual), "roundtrip")?;
        write_out(parseval, worst(|r| r.parseval_residual), "parseval")
    })
}

/// Heat kernel of −Δ + a|x|⁻² in three dimensions at angle cos θ = `mu`.
/// `condition` (optional) receives the cancellation factor of the angular sum.
#[no_mangle]
pub unsafe extern "C" fn invsq_heat_kernel(
    a: f64,
    t: f64,
    r: f64,
    rp: f64,
    mu: f64,
    value: *mut f64,
    condition: *mut f64,
) -> InvsqStatus {
    guard(|| {
        let params = ModelParams::new(3, a, 3.0)?;
        let h = full_kernel(&HeatKernelQuery::new(t, r, rp, mu), &params)?;
        if !condition.is_null() {
            condition.write(h.condition);
        }
        write_out(value, h.value, "value")
    })
}

fn model_grid(n: usize, a: f64, n_modes: usize, radius: f64) -> FfiResult<(ModelParams, Arc<RadialGrid>)> {
    let params = ModelParams::new(n, a, 3.0)?;
    let grid = make_grid(params.sector(0).nu, n_modes, radius)?;
    Ok((params, grid))
}

/// Collocation radii of the model grid, written to `nodes[0..n_modes]`.
#[no_mangle]
pub unsafe extern "C" fn invsq_grid_nodes(n: usize, a: f64, n_modes: usize, radius: f64, nodes: *mut f64, len: usize) -> InvsqStatus {
    guard(|| {
        if nodes.is_null() {
            return Err(Failure::new(InvsqStatus::NullPointer, "nodes is NULL"));
        }
        if len < n_modes {
            return Err(Failure::new(InvsqStatus::BufferTooSmall, format!("nodes needs {n_modes} entries")));
        }
        let (_, grid) = model_grid(n, a, n_modes, radius)?;
        std::ptr::copy_nonoverlapping(grid.nodes().as_ptr(), nodes, n_modes);
        Ok(())
    })
}

/// Field from samples at the grid nodes (see [`invsq_grid_nodes`]); `im` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn invsq_field_create(
    n: usize,
    a: f64,
    p: f64,
    n_modes: usize,
    radius: f64,
    re: *const f64,
    im: *const f64,
    out: *mut *mut InvsqField,
) -> InvsqStatus {
    guard(|| {
        if re.is_null() {
            return Err(Failure::new(InvsqStatus::NullPointer, "re is NULL"));
        }
        let (_, grid) = model_grid(n, a, n_modes, radius)?;
        let params = ModelParams::new(n, a, p)?;
        let re = std::slice::from_raw_parts(re, n_modes);
        let samples = if im.is_null() {
            re.iter().map(|&x| Complex64::new(x, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, n_modes);
            re.iter().zip(im).map(|(&x, &y)| Complex64::new(x, y)).collect()
        };
        let field = RadialField::new(grid, samples, n, 0)?;
        give(out, InvsqField { field, params })
    })
}

#[no_mangle]
pub unsafe extern "C" fn invsq_field_len(f: *const InvsqField) -> usize {
    f.as_ref().map_or(0, |f| f.field.samples().len())
}

/// Copy the samples out; `im` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn invsq_field_samples(f: *const InvsqField, re: *mut f64, im: *mut f64, len: usize) -> InvsqStatus {
    guard(|| {
        let s = borrow(f, "field")?.field.samples();
        if re.is_null() {
            return Err(Failure::new(InvsqStatus::NullPointer, "re is NULL"));
        }
        if len < s.len() {
            return Err(Failure::new(InvsqStatus::BufferTooSmall, format!("buffers need {} entries", s.len())));
        }
        for (i, z) in s.iter().enumerate() {
            re.add(i).write(z.re);
            if !im.is_null() {
                im.add(i).write(z.im);
            }
        }
        Ok(())
    })
}

/// ‖u‖²_{L²}.
#[no_mangle]
pub unsafe extern "C" fn invsq_field_mass(f: *const InvsqField, out: *mut f64) -> InvsqStatus {
    guard(|| write_out(out, invsq::diagnostics::mass(&borrow(f, "field")?.field), "out"))
}

/// Energy with nonlinearity coefficient `coupling` (1 for the defocusing equation).
#[no_mangle]
pub unsafe extern "C" fn invsq_field_energy(f: *const InvsqField, coupling: f64, out: *mut f64) -> InvsqStatus {
    guard(|| {
        let f = borrow(f, "field")?;
        let e = invsq::diagnostics::energy(&f.field, &f.params, coupling)?;
        write_out(out, e.total, "out")
    })
}

/// Apply e^{−itP_a} in place.
#[no_mangle]
pub unsafe extern "C" fn invsq_field_propagate(f: *mut InvsqField, t: f64) -> InvsqStatus {
    guard(|| {
        let f = borrow_mut(f, "field")?;
        if !t.is_finite() {
            return Err(Failure::new(InvsqStatus::InvalidArgument, "t must be finite"));
        }
        f.field = invsq::solver::linear_propagate(&f.field, t);
        Ok(())
    })
}

/// Advance `steps` Strang steps of size `dt` in place.
#[no_mangle]
pub unsafe extern "C" fn invsq_field_evolve(f: *mut InvsqField, dt: f64, steps: usize, coupling: f64) -> InvsqStatus {
    guard(|| {
        let f = borrow_mut(f, "field")?;
        if !(dt > 0.0 && dt.is_finite()) || !coupling.is_finite() {
            return Err(Failure::new(InvsqStatus::InvalidArgument, "dt must be positive and coupling finite"));
        }
        let mut u = f.field.clone();
        for _ in 0..steps {
            u = invsq::solver::nls_step_strang(&u, dt, &f.params, coupling)?;
        }
        f.field = u;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn invsq_field_free(f: *mut InvsqField) {
    free_handle(f)
}
