//! C ABI for the `evanescent` library.
//!
//! Every function returns an [`EvStatus`] and writes results through out
//! pointers. On failure a description is kept per thread and can be read
//! with [`ev_last_error_message`]. Panics never cross the boundary; they
//! surface as `EV_STATUS_PANIC`.
//!
//! Units follow the Rust library: SI at the boundary, eV for energies in
//! the uncertainty functions, MeV and seconds for particle records, natural
//! units for the massive branch.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use evanescent::medium;
use evanescent::particles::{self, TransmutationRecord};
use evanescent::temporal::{self, MassiveState, TabulatedResponse, TemporalError};
use evanescent::transport::{self, ExitRule, WalkConfig};
use evanescent::uncertainty::{self, OperatorPairState, ProcessKind, UncertaintyError};
use evanescent::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Weight of the delta distribution carried by the on-shell photon delay.
#[allow(clippy::approx_constant)]
pub const EV_ON_SHELL_DELAY_WEIGHT: f64 = -3.141592653589793;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The argument sits on a pole of the requested function.
    Pole = 3,
    /// The point is on shell; the delay is a distribution.
    OnShell = 4,
    ParseError = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvExitRule {
    CompleteCycle = 0,
    Clip = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvProcessKind {
    StableTransfer = 0,
    Decay = 1,
    Transmutation = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvTemporalPair {
    pub tau1: f64,
    pub tau2: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvPropagatorTimes {
    pub tau1: f64,
    pub tau2: f64,
    pub tau2_exact: f64,
    pub retarded: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvWalkConfig {
    pub mean_free_path: f64,
    pub jump: f64,
    pub delay: f64,
    pub length: f64,
    pub n_walkers: u64,
    pub master_seed: u64,
    pub exit_rule: EvExitRule,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvTransportResult {
    pub mean_speed_ratio: f64,
    pub standard_error: f64,
    pub implied_group_index: f64,
    pub group_index_standard_error: f64,
    pub mean_scatter_count: f64,
    pub scatter_count_standard_error: f64,
    pub walker_count: u64,
    pub master_seed: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvRsBound {
    pub lhs: f64,
    pub commutator_term: f64,
    pub covariance_term: f64,
    pub rhs: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvNeutrinoEstimate {
    /// eV².
    pub delta_m2: f64,
    /// Seconds.
    pub tau: f64,
    /// Published-pipeline headline, eV.
    pub delta_m: f64,
    /// ħ/(2τ), eV.
    pub audited_delta_m: f64,
    /// Number of flagged steps in the audit log.
    pub flag_count: u32,
}

/// Opaque list of particle records.
pub struct EvParticleTable {
    records: Vec<TransmutationRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(EvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Temporal(TemporalError::Pole { .. }) => EvStatus::Pole,
            Error::Temporal(TemporalError::OnShell { .. }) => EvStatus::OnShell,
            Error::Parse(_) => EvStatus::ParseError,
            _ => EvStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

macro_rules! impl_from_module_error {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}

impl_from_module_error!(
    TemporalError,
    UncertaintyError,
    medium::MediumError,
    transport::TransportError,
    particles::ParticleError,
    evanescent::ParseError
);

fn null(name: &str) -> Failure {
    Failure(EvStatus::NullPointer, format!("{name} is null"))
}

/// Runs `body`, records any failure for [`ev_last_error_message`] and
/// converts panics into `EV_STATUS_PANIC`.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> EvStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => EvStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            EvStatus::Panic
        }
    }
}

/// Writes `value` through `out` after a null check.
///
/// # Safety
/// `out` must be null or valid for a write of `T`.
unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failure on the calling thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ev_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ev_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Formation time `−(r/c)·cot(ωr/c)`, seconds.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_mixed_formation_time(omega: f64, r: f64, pole_epsilon: f64, out: *mut f64) -> EvStatus {
    guard(|| write(out, temporal::mixed_formation_time(omega, r, pole_epsilon)?))
}

/// Coulomb-subtracted series for the formation time with `n_terms` explicit
/// terms and a tail estimate, seconds.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_renormalized_formation_time(
    omega: f64,
    r: f64,
    n_terms: u64,
    pole_epsilon: f64,
    out: *mut f64,
) -> EvStatus {
    guard(|| write(out, temporal::renormalized_formation_time(omega, r, n_terms, pole_epsilon)?))
}

/// Formation path `πc/|Δω|`, metres.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_formation_path(delta_omega: f64, out: *mut f64) -> EvStatus {
    guard(|| write(out, temporal::formation_path(delta_omega)?))
}

/// Photon propagator times off the light cone. On the cone returns
/// `EV_STATUS_ON_SHELL`; the delay is then `EV_ON_SHELL_DELAY_WEIGHT`
/// times a delta function.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_photon_propagator_times(
    omega: f64,
    k_abs: f64,
    pole_epsilon: f64,
    out: *mut EvPropagatorTimes,
) -> EvStatus {
    guard(|| {
        let t = temporal::photon_propagator_times(omega, k_abs, pole_epsilon)?;
        write(
            out,
            EvPropagatorTimes {
                tau1: t.pair.tau1,
                tau2: t.pair.tau2,
                tau2_exact: t.tau2_exact,
                retarded: t.retarded,
            },
        )
    })
}

/// Delay and formation time of the massive Green function, natural units.
/// `above_threshold` (optional) receives whether `E > m`.
///
/// # Safety
/// `out` must be valid for writes; `above_threshold` may be null.
#[no_mangle]
pub unsafe extern "C" fn ev_massive_temporal(
    energy: f64,
    mass: f64,
    r: f64,
    pole_epsilon: f64,
    out: *mut EvTemporalPair,
    above_threshold: *mut bool,
) -> EvStatus {
    guard(|| {
        let state = MassiveState::new(energy, mass, r)?;
        let m = temporal::massive_temporal(&state, pole_epsilon)?;
        write(out, EvTemporalPair { tau1: m.pair.tau1, tau2: m.pair.tau2 })?;
        if !above_threshold.is_null() {
            above_threshold.write(m.branch == temporal::Branch::AboveThreshold);
        }
        Ok(())
    })
}

/// Delay and formation time of a tabulated response `S(ω) = re + i·im` on
/// strictly increasing `omega`. `step <= 0` selects the default step.
///
/// # Safety
/// `omega`, `re` and `im` must each point to `n` readable values; `out` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_temporal_pair_tabulated(
    omega: *const f64,
    re: *const f64,
    im: *const f64,
    n: usize,
    at: f64,
    step: f64,
    richardson: bool,
    out: *mut EvTemporalPair,
) -> EvStatus {
    guard(|| {
        if omega.is_null() || re.is_null() || im.is_null() {
            return Err(null("sample array"));
        }
        let (w, re, im) = (
            std::slice::from_raw_parts(omega, n),
            std::slice::from_raw_parts(re, n),
            std::slice::from_raw_parts(im, n),
        );
        let samples = (0..n).map(|i| (w[i], Complex64::new(re[i], im[i]))).collect();
        let table = TabulatedResponse::new(samples)?;
        let opts = temporal::DiffOptions {
            step: (step > 0.0).then_some(step),
            richardson,
            ..Default::default()
        };
        let pair = temporal::temporal_pair(&table, at, None, &opts)?;
        write(out, EvTemporalPair { tau1: pair.tau1, tau2: pair.tau2 })
    })
}

/// Mean free path `1/(ρσ)`, metres.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_free_path(rho: f64, sigma: f64, out: *mut f64) -> EvStatus {
    guard(|| write(out, medium::free_path(rho, sigma)?))
}

/// `u/c = 1 + 2π(n − 1)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_closure_speed_ratio(n: f64, out: *mut f64) -> EvStatus {
    guard(|| write(out, medium::closure_speed_ratio(n)?))
}

/// Monte Carlo transit. `threads == 0` uses the global pool; the result does
/// not depend on the thread count.
///
/// # Safety
/// `config` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_mc_simulate(
    config: *const EvWalkConfig,
    threads: usize,
    out: *mut EvTransportResult,
) -> EvStatus {
    guard(|| {
        let c = config.as_ref().ok_or_else(|| null("config"))?;
        let cfg = WalkConfig {
            mean_free_path: c.mean_free_path,
            jump: c.jump,
            delay: c.delay,
            length: c.length,
            n_walkers: c.n_walkers,
            master_seed: c.master_seed,
            exit_rule: match c.exit_rule {
                EvExitRule::CompleteCycle => ExitRule::CompleteCycle,
                EvExitRule::Clip => ExitRule::Clip,
            },
        };
        let r = if threads == 0 {
            transport::simulate(&cfg)?
        } else {
            transport::simulate_with_threads(&cfg, threads)?
        };
        write(
            out,
            EvTransportResult {
                mean_speed_ratio: r.mean_speed_ratio,
                standard_error: r.standard_error,
                implied_group_index: r.implied_group_index,
                group_index_standard_error: r.group_index_standard_error,
                mean_scatter_count: r.mean_scatter_count,
                scatter_count_standard_error: r.scatter_count_standard_error,
                walker_count: r.walker_count,
                master_seed: r.master_seed,
            },
        )
    })
}

fn process_kind(kind: EvProcessKind) -> ProcessKind {
    match kind {
        EvProcessKind::StableTransfer => ProcessKind::StableTransfer,
        EvProcessKind::Decay => ProcessKind::Decay,
        EvProcessKind::Transmutation => ProcessKind::Transmutation,
    }
}

/// Minimal time in seconds for energy spread `delta_e` (eV).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_minimal_time(delta_e: f64, kind: EvProcessKind, out: *mut f64) -> EvStatus {
    guard(|| write(out, uncertainty::minimal_time(delta_e, process_kind(kind))?.seconds))
}

/// First `count` maxima in τ of the transition density at `delta_e` (eV).
///
/// # Safety
/// `out` must be valid for `count` writes.
#[no_mangle]
pub unsafe extern "C" fn ev_transition_maxima(delta_e: f64, count: usize, out: *mut f64) -> EvStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output array"));
        }
        let maxima = uncertainty::transition_maxima(delta_e, count)?;
        std::slice::from_raw_parts_mut(out, count).copy_from_slice(&maxima);
        Ok(())
    })
}

/// Robertson–Schrödinger terms for `n×n` Hermitian `a`, `b` and state `psi`.
/// Complex numbers are interleaved `(re, im)`; matrices are row-major, so
/// `a` and `b` hold `2n²` doubles and `psi` holds `2n`.
///
/// # Safety
/// The arrays must be readable for the stated lengths; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_rs_bound(
    n: usize,
    a: *const f64,
    b: *const f64,
    psi: *const f64,
    out: *mut EvRsBound,
) -> EvStatus {
    guard(|| {
        if a.is_null() || b.is_null() || psi.is_null() {
            return Err(null("input array"));
        }
        let c = |p: *const f64, i: usize| Complex64::new(*p.add(2 * i), *p.add(2 * i + 1));
        let a = DMatrix::from_fn(n, n, |i, j| c(a, i * n + j));
        let b = DMatrix::from_fn(n, n, |i, j| c(b, i * n + j));
        let psi = DVector::from_fn(n, |i, _| c(psi, i));
        let r = uncertainty::rs_bound(&OperatorPairState::new(a, b, psi)?);
        write(
            out,
            EvRsBound {
                lhs: r.lhs,
                commutator_term: r.commutator_term,
                covariance_term: r.covariance_term,
                rhs: r.rhs(),
            },
        )
    })
}

/// Upper lifetime bound `factor·ħ/Δm`, seconds, for `Δm` in MeV.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_lifetime_bound(delta_m_lower: f64, factor: f64, out: *mut f64) -> EvStatus {
    guard(|| write(out, particles::lifetime_bound(delta_m_lower, factor)?))
}

/// Neutrino mass estimate for baseline `l_km` and energy `e_gev`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_neutrino_mass_estimate(l_km: f64, e_gev: f64, out: *mut EvNeutrinoEstimate) -> EvStatus {
    guard(|| {
        let e = particles::neutrino_mass_estimate(l_km, e_gev)?;
        write(
            out,
            EvNeutrinoEstimate {
                delta_m2: e.delta_m2,
                tau: e.tau,
                delta_m: e.delta_m,
                audited_delta_m: e.audited_delta_m,
                flag_count: e.flags().count() as u32,
            },
        )
    })
}

/// Parses a NUL-terminated particle table. Free the handle with
/// [`ev_particle_table_free`].
///
/// # Safety
/// `text` must be a valid C string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_particle_table_load(text: *const c_char, out: *mut *mut EvParticleTable) -> EvStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(EvStatus::ParseError, format!("table is not UTF-8: {e}")))?;
        let records = particles::load_particle_table(text)?;
        write(out, Box::into_raw(Box::new(EvParticleTable { records })))
    })
}

/// The table bundled with the library.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_particle_table_bundled(out: *mut *mut EvParticleTable) -> EvStatus {
    guard(|| {
        let records = particles::load_particle_table(particles::BUNDLED_TABLE)?;
        write(out, Box::into_raw(Box::new(EvParticleTable { records })))
    })
}

/// Number of records, or 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ev_particle_table_len(table: *const EvParticleTable) -> usize {
    table.as_ref().map_or(0, |t| t.records.len())
}

/// `Δm·τ/ħ` of record `index`.
///
/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ev_particle_table_product(
    table: *const EvParticleTable,
    index: usize,
    out: *mut f64,
) -> EvStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let record = t.records.get(index).ok_or_else(|| {
            Failure(
                EvStatus::OutOfRange,
                format!("index {index} outside a table of {}", t.records.len()),
            )
        })?;
        let p = particles::uncertainty_product(record, particles::DEFAULT_PRODUCT_WINDOW)?;
        write(out, p.value)
    })
}

/// Releases a table handle. Null is ignored.
///
/// # Safety
/// `table` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ev_particle_table_free(table: *mut EvParticleTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
