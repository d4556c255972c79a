//! C ABI for the `beamfd` solver.
//!
//! Every function returns a [`BeamfdStatus`]. On failure a human-readable
//! message is kept per thread and can be fetched with
//! [`beamfd_last_error_message`]. Simulations are opaque handles created by
//! [`beamfd_simulation_new`] and released with [`beamfd_simulation_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use beamfd::config::{preset, Config};
use beamfd::study::{spatial_error, temporal_error};
use beamfd::{Error, ErrorCategory, Grid, KernelSpec, KernelTables, SolverConfig, SolverState};

/// Result of every exported call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamfdStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8, short buffer or similar misuse of the API.
    InvalidArgument = 1,
    /// Configuration or parameter validation failed.
    Config = 2,
    /// The solver failed (non-convergence, factorization breakdown).
    Numerical = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Memory kernel family selector for [`beamfd_weights`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamfdKernelFamily {
    None = 0,
    Oscillatory = 1,
    NonOscillatory = 2,
}

/// Opaque simulation handle.
pub struct BeamfdSimulation {
    state: SolverState,
    solver: SolverConfig,
    n_steps: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(BeamfdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.category() {
            ErrorCategory::Config => BeamfdStatus::Config,
            ErrorCategory::Numerical => BeamfdStatus::Numerical,
            ErrorCategory::Io => BeamfdStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(BeamfdStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status plus stored message.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BeamfdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BeamfdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            BeamfdStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn sim_mut<'a>(p: *mut BeamfdSimulation) -> Result<&'a mut BeamfdSimulation, Failure> {
    p.as_mut().ok_or_else(|| invalid("simulation handle is null"))
}

unsafe fn sim_ref<'a>(p: *const BeamfdSimulation) -> Result<&'a BeamfdSimulation, Failure> {
    p.as_ref().ok_or_else(|| invalid("simulation handle is null"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(invalid("output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn parse_config(text: &str) -> Result<Config, Failure> {
    Ok(Config::from_json_str(text)?)
}

fn build(cfg: &Config) -> Result<BeamfdSimulation, Failure> {
    let spec = cfg.problem()?;
    spec.validate()?;
    let grid = cfg.grid()?;
    let solver = cfg.solver();
    solver.validate()?;
    let n_steps = cfg.time.steps;
    if n_steps == 0 {
        return Err(Failure(BeamfdStatus::Config, "time.steps must be at least 1".into()));
    }
    let dt = spec.horizon / n_steps as f64;
    let tables = Arc::new(KernelTables::new(spec.kernel, dt, n_steps)?);
    let state = SolverState::initialize(&spec, grid, dt, tables)?;
    Ok(BeamfdSimulation {
        state,
        solver,
        n_steps,
    })
}

/// NUL-terminated library version. The pointer is static.
#[no_mangle]
pub extern "C" fn beamfd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null if the last call
/// succeeded. Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn beamfd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a simulation from a JSON configuration. The initial two time
/// levels are set up; no steps are solved yet.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_new(
    config_json: *const c_char,
    out: *mut *mut BeamfdSimulation,
) -> BeamfdStatus {
    guard(|| {
        let text = read_str(config_json, "config_json")?;
        let sim = build(&parse_config(text)?)?;
        write_out(out, Box::into_raw(Box::new(sim)))
    })
}

/// Creates a simulation from a named built-in configuration.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_from_preset(
    name: *const c_char,
    out: *mut *mut BeamfdSimulation,
) -> BeamfdStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let value = preset(name)
            .ok_or_else(|| Failure(BeamfdStatus::Config, format!("unknown preset {name:?}")))?;
        let sim = build(&Config::from_value(value)?)?;
        write_out(out, Box::into_raw(Box::new(sim)))
    })
}

/// Releases a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_free(sim: *mut BeamfdSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Solves up to `count` further steps, stopping at the configured final step.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_step(sim: *mut BeamfdSimulation, count: usize) -> BeamfdStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        for _ in 0..count {
            if sim.state.next_step() > sim.n_steps {
                break;
            }
            sim.state.step(&sim.solver)?;
        }
        Ok(())
    })
}

/// Solves all remaining steps.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_run(sim: *mut BeamfdSimulation) -> BeamfdStatus {
    beamfd_simulation_step(sim, usize::MAX)
}

/// Index of the latest solved time level and its time.
///
/// # Safety
/// `sim` must be a live handle; `level` and `time` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_progress(
    sim: *const BeamfdSimulation,
    level: *mut usize,
    time: *mut f64,
) -> BeamfdStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        write_out(level, sim.state.next_step() - 1)?;
        write_out(time, sim.state.time())
    })
}

/// Number of interior nodes, i.e. the length of the solution vector.
///
/// # Safety
/// `sim` must be a live handle and `len` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_solution_len(
    sim: *const BeamfdSimulation,
    len: *mut usize,
) -> BeamfdStatus {
    guard(|| write_out(len, sim_ref(sim)?.state.solution().len()))
}

/// Copies the latest interior solution into `buf` (capacity `len`).
///
/// # Safety
/// `sim` must be a live handle and `buf` writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn beamfd_simulation_copy_solution(
    sim: *const BeamfdSimulation,
    buf: *mut f64,
    len: usize,
) -> BeamfdStatus {
    guard(|| {
        let u = sim_ref(sim)?.state.solution();
        if buf.is_null() {
            return Err(invalid("buffer is null"));
        }
        if len < u.len() {
            return Err(invalid(format!("buffer holds {len} values, need {}", u.len())));
        }
        std::slice::from_raw_parts_mut(buf, u.len()).copy_from_slice(u);
        Ok(())
    })
}

/// Writes the `n_steps` convolution weights for time step `dt` into `buf`
/// (capacity `len`). `gamma` is ignored for the non-oscillatory family and
/// all parameters are ignored for `None`, which yields zeros.
///
/// # Safety
/// `buf` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn beamfd_weights(
    family: BeamfdKernelFamily,
    sigma: f64,
    gamma: f64,
    alpha: f64,
    dt: f64,
    n_steps: usize,
    buf: *mut f64,
    len: usize,
) -> BeamfdStatus {
    guard(|| {
        if buf.is_null() {
            return Err(invalid("buffer is null"));
        }
        if len < n_steps {
            return Err(invalid(format!("buffer holds {len} values, need {n_steps}")));
        }
        let spec = match family {
            BeamfdKernelFamily::None => KernelSpec::none(),
            BeamfdKernelFamily::Oscillatory => KernelSpec::oscillatory(sigma, gamma, alpha)?,
            BeamfdKernelFamily::NonOscillatory => KernelSpec::non_oscillatory(sigma, alpha)?,
        };
        let w = spec.quadrature_weights(dt, n_steps)?;
        std::slice::from_raw_parts_mut(buf, n_steps).copy_from_slice(&w[..n_steps]);
        Ok(())
    })
}

unsafe fn self_convergence(
    config_json: *const c_char,
    out: *mut f64,
    f: impl FnOnce(&Config, &beamfd::ProblemSpec, &Grid, &SolverConfig) -> beamfd::Result<f64>,
) -> BeamfdStatus {
    guard(|| {
        let cfg = parse_config(read_str(config_json, "config_json")?)?;
        let spec = cfg.problem()?;
        let grid = cfg.grid()?;
        let e = f(&cfg, &spec, &grid, &cfg.solver())?;
        write_out(out, e)
    })
}

/// Temporal self-convergence error of the configured run: the final solution
/// with `time.steps` steps against the one with half as many.
///
/// # Safety
/// `config_json` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn beamfd_temporal_error(config_json: *const c_char, out: *mut f64) -> BeamfdStatus {
    self_convergence(config_json, out, |cfg, spec, grid, solver| {
        temporal_error(spec, grid, cfg.time.steps, solver)
    })
}

/// Spatial self-convergence error of the configured run: the final solution
/// on `grid.intervals` subintervals against the one on half as many.
///
/// # Safety
/// `config_json` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn beamfd_spatial_error(config_json: *const c_char, out: *mut f64) -> BeamfdStatus {
    self_convergence(config_json, out, |cfg, spec, grid, solver| {
        spatial_error(spec, grid, cfg.time.steps, solver)
    })
}
