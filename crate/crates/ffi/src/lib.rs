//! C ABI over `evodyn`.
//!
//! Objects are opaque handles created by `*_new`/`*_find`/`*_simulate` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`EvodynStatus`]; on failure the message is available from
//! [`evodyn_last_error_message`] on the same thread. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use evodyn::composition::{
    make_grid, random_composition, reversed_composition, sorted_composition,
};
use evodyn::config::parse_config;
use evodyn::dynamics::integrate;
use evodyn::equilibria::{find_aggregate_equilibria, DEFAULT_SCAN_RESOLUTION};
use evodyn::run::{run, Command, RunError};
use evodyn::{
    AggregateGame, EquilibriumReport, Error, IntegrateOptions, RevisionProtocol, Stability,
    TypeDistribution,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Input = 4,
    Construction = 5,
    Integration = 6,
    Analysis = 7,
    Tie = 8,
    Io = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynGameFamily {
    /// `F(x̄) = a·x̄ + b`.
    Affine = 0,
    /// `F(x̄) = x̄ − c`.
    LinearCoordination = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynDistFamily {
    Uniform = 0,
    SqrtShift = 1,
    Logistic = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynProtocolKind {
    Standard = 0,
    Power = 1,
    BoundedPower = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynInitial {
    Sorted = 0,
    Reversed = 1,
    Random = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvodynStability {
    Stable = 0,
    Unstable = 1,
    Semistable = 2,
}

/// Plain description of a model. Fields not used by the chosen families
/// are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EvodynModelSpec {
    pub game: EvodynGameFamily,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub dist: EvodynDistFamily,
    pub lo: f64,
    pub hi: f64,
    pub mu: f64,
    pub s: f64,
    /// Half-width of the truncated logistic in units of `s`; 0 selects the default.
    pub tau: f64,
    pub protocol: EvodynProtocolKind,
    pub k: f64,
    pub pisharp: f64,
    /// Number of grid nodes (at least 2).
    pub n: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct EvodynEquilibrium {
    pub xbar: f64,
    pub stability: EvodynStability,
    pub basin_lo: f64,
    pub basin_hi: f64,
}

/// Game, type distribution, protocol and grid size.
pub struct EvodynModel {
    game: AggregateGame,
    dist: TypeDistribution,
    protocol: RevisionProtocol,
    n: usize,
}

pub struct EvodynEquilibria {
    report: EquilibriumReport,
}

pub struct EvodynTrajectory {
    times: Vec<f64>,
    xbar: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> EvodynStatus {
    match e {
        Error::Input(_) => EvodynStatus::Input,
        Error::Construction(_) => EvodynStatus::Construction,
        Error::Integration { .. } => EvodynStatus::Integration,
        Error::Analysis(_) => EvodynStatus::Analysis,
        Error::Tie(_) => EvodynStatus::Tie,
    }
}

struct Failure(EvodynStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        let status = match &e {
            RunError::Config(_) => EvodynStatus::Config,
            RunError::Analysis(inner) => status_of(inner),
            RunError::Io { .. } => EvodynStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EvodynStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EvodynStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EvodynStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(EvodynStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure(
            EvodynStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn put<T>(out: *mut *mut T, value: T) {
    // SAFETY: callers have checked `out` for null.
    unsafe { *out = Box::into_raw(Box::new(value)) };
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn evodyn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evodyn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn model_from_spec(spec: &EvodynModelSpec) -> Result<EvodynModel, Failure> {
    let game = match spec.game {
        EvodynGameFamily::Affine => AggregateGame::affine(spec.a, spec.b)?,
        EvodynGameFamily::LinearCoordination => AggregateGame::linear_coordination(spec.c)?,
    };
    let dist = match spec.dist {
        EvodynDistFamily::Uniform => TypeDistribution::uniform(spec.lo, spec.hi)?,
        EvodynDistFamily::SqrtShift => TypeDistribution::sqrt_shift(),
        EvodynDistFamily::Logistic => {
            let tau = if spec.tau == 0.0 {
                evodyn::game::LOGISTIC_DEFAULT_TAU
            } else {
                spec.tau
            };
            TypeDistribution::logistic(spec.mu, spec.s, tau)?
        }
    };
    let protocol = match spec.protocol {
        EvodynProtocolKind::Standard => RevisionProtocol::Standard,
        EvodynProtocolKind::Power => RevisionProtocol::power(spec.k)?,
        EvodynProtocolKind::BoundedPower => RevisionProtocol::bounded_power(spec.k, spec.pisharp)?,
    };
    if spec.n < 2 {
        return Err(Failure(
            EvodynStatus::Input,
            format!("grid needs at least 2 nodes, got {}", spec.n),
        ));
    }
    Ok(EvodynModel {
        game,
        dist,
        protocol,
        n: spec.n,
    })
}

/// Builds a model from a spec.
///
/// # Safety
/// `spec` must point to a valid spec and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_new(
    spec: *const EvodynModelSpec,
    out: *mut *mut EvodynModel,
) -> EvodynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = model_from_spec(as_ref(spec, "spec")?)?;
        put(out, model);
        Ok(())
    })
}

/// Builds a model from the `[game]`, `[distribution]`, `[protocol]` and
/// `[grid]` sections of a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_from_config(
    path: *const c_char,
    out: *mut *mut EvodynModel,
) -> EvodynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = as_str(path, "path")?;
        let s = parse_config(Path::new(path), &[]).map_err(RunError::from)?;
        put(
            out,
            EvodynModel {
                game: s.game,
                dist: s.dist,
                protocol: s.protocol,
                n: s.n,
            },
        );
        Ok(())
    })
}

/// # Safety
/// `model` must come from a model constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn evodyn_model_free(model: *mut EvodynModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Aggregate equilibria of the model's game and distribution.
///
/// # Safety
/// `model` must be a live model and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evodyn_equilibria_find(
    model: *const EvodynModel,
    out: *mut *mut EvodynEquilibria,
) -> EvodynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = as_ref(model, "model")?;
        let report = find_aggregate_equilibria(&m.game, &m.dist, DEFAULT_SCAN_RESOLUTION)?;
        put(out, EvodynEquilibria { report });
        Ok(())
    })
}

/// Number of equilibria, 0 for a null handle.
///
/// # Safety
/// `eq` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn evodyn_equilibria_len(eq: *const EvodynEquilibria) -> usize {
    eq.as_ref().map_or(0, |e| e.report.equilibria.len())
}

/// # Safety
/// `eq` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evodyn_equilibria_get(
    eq: *const EvodynEquilibria,
    index: usize,
    out: *mut EvodynEquilibrium,
) -> EvodynStatus {
    guard(|| {
        let e = as_ref(eq, "equilibria")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let item = e.report.equilibria.get(index).ok_or_else(|| {
            Failure(
                EvodynStatus::OutOfRange,
                format!(
                    "index {index} out of range ({} equilibria)",
                    e.report.equilibria.len()
                ),
            )
        })?;
        *out = EvodynEquilibrium {
            xbar: item.xbar,
            stability: match item.stability {
                Stability::Stable => EvodynStability::Stable,
                Stability::Unstable => EvodynStability::Unstable,
                Stability::Semistable => EvodynStability::Semistable,
            },
            basin_lo: item.basin_lo,
            basin_hi: item.basin_hi,
        };
        Ok(())
    })
}

/// # Safety
/// `eq` must come from [`evodyn_equilibria_find`], or be null.
#[no_mangle]
pub unsafe extern "C" fn evodyn_equilibria_free(eq: *mut EvodynEquilibria) {
    if !eq.is_null() {
        drop(Box::from_raw(eq));
    }
}

/// Integrates the heterogeneous dynamic from a sorted, reversed or seeded
/// random composition with aggregate `xbar0`.
///
/// # Safety
/// `model` must be a live model and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evodyn_simulate(
    model: *const EvodynModel,
    initial: EvodynInitial,
    xbar0: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
    out: *mut *mut EvodynTrajectory,
) -> EvodynStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = as_ref(model, "model")?;
        let grid = make_grid(&m.dist, m.n)?;
        let x0 = match initial {
            EvodynInitial::Sorted => sorted_composition(&grid, xbar0)?,
            EvodynInitial::Reversed => reversed_composition(&grid, xbar0)?,
            EvodynInitial::Random => {
                random_composition(&grid, xbar0, &mut ChaCha8Rng::seed_from_u64(seed))?
            }
        };
        let traj = integrate(&m.game, &m.protocol, &x0, &IntegrateOptions::new(t_end, dt))?;
        put(
            out,
            EvodynTrajectory {
                times: traj.times,
                xbar: traj.xbar,
            },
        );
        Ok(())
    })
}

/// Number of recorded points, 0 for a null handle.
///
/// # Safety
/// `traj` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn evodyn_trajectory_len(traj: *const EvodynTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.times.len())
}

/// Copies up to `capacity` points into `times` and `xbar`; `written`
/// receives the number copied.
///
/// # Safety
/// `times` and `xbar` must hold `capacity` doubles each; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evodyn_trajectory_copy(
    traj: *const EvodynTrajectory,
    times: *mut f64,
    xbar: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> EvodynStatus {
    guard(|| {
        let t = as_ref(traj, "trajectory")?;
        if times.is_null() || xbar.is_null() || written.is_null() {
            return Err(null("output buffer"));
        }
        let count = capacity.min(t.times.len());
        ptr::copy_nonoverlapping(t.times.as_ptr(), times, count);
        ptr::copy_nonoverlapping(t.xbar.as_ptr(), xbar, count);
        *written = count;
        Ok(())
    })
}

/// # Safety
/// `traj` must come from [`evodyn_simulate`], or be null.
#[no_mangle]
pub unsafe extern "C" fn evodyn_trajectory_free(traj: *mut EvodynTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Same as `evodyn <subcommand> --config <config> --out <out_dir>`.
/// `subcommand` is one of `equilibria`, `simulate`, `critical-mass`,
/// `select`, `flows`, `escape`.
///
/// # Safety
/// All arguments must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn evodyn_run_config(
    config: *const c_char,
    subcommand: *const c_char,
    out_dir: *const c_char,
) -> EvodynStatus {
    guard(|| {
        let config = as_str(config, "config")?;
        let sub = as_str(subcommand, "subcommand")?;
        let out = as_str(out_dir, "out_dir")?;
        let command: Command = sub
            .parse()
            .map_err(|e: String| Failure(EvodynStatus::Input, e))?;
        let scenario = parse_config(Path::new(config), &[]).map_err(RunError::from)?;
        run(&scenario, command, Path::new(out))?;
        Ok(())
    })
}
