//! C ABI over `ntfd`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns an [`NtfdStatus`]; on failure the message is
//! available from [`ntfd_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ntfd::config::ConfigBuilder;
use ntfd::dynamics::{boltzmann_closed_form, evolve_master, EvolveOptions};
use ntfd::generators::{
    kramers_hamiltonian, oscillator_hamiltonian, unitary_kramers_generator, HatHamiltonian,
};
use ntfd::scenarios::{run_scenario, ScenarioId};
use ntfd::thermal::{
    displaced_vacuum, initial_vacuum, thermal_bra, ThermalKet, TruncatedFockSpace,
};
use ntfd::{Error, C64};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NtfdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    ChecksFailed = 5,
    Panic = 6,
}

pub struct NtfdSpace(TruncatedFockSpace);
pub struct NtfdGenerator(HatHamiltonian);
pub struct NtfdKet(ThermalKet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> NtfdStatus {
    match e {
        Error::Io(_) => NtfdStatus::Io,
        Error::InvalidCutoff { .. }
        | Error::InvalidParameter { .. }
        | Error::NegativeOccupation(_)
        | Error::NuOutOfRange(_)
        | Error::OffGrid(_)
        | Error::StepTooLarge(_)
        | Error::ShapeMismatch(_)
        | Error::UnknownSymbol(_)
        | Error::GridMismatch
        | Error::ParameterMismatch(_)
        | Error::Format(_) => NtfdStatus::InvalidArgument,
        _ => NtfdStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), NtfdStatus>) -> NtfdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NtfdStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside ntfd".into());
            NtfdStatus::Panic
        }
    }
}

fn fail(e: Error) -> NtfdStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn get<'a, T>(p: *const T) -> Result<&'a T, NtfdStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null handle".into());
        NtfdStatus::NullPointer
    })
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> Result<(), NtfdStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(NtfdStatus::NullPointer);
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, NtfdStatus> {
    if p.is_null() {
        set_error("null string".into());
        return Err(NtfdStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not UTF-8".into());
        NtfdStatus::InvalidArgument
    })
}

/// Message of the last failure on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ntfd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ntfd_space_new(
    cutoff: usize,
    guard_levels: usize,
    out: *mut *mut NtfdSpace,
) -> NtfdStatus {
    guard(|| {
        let s = TruncatedFockSpace::new(cutoff, guard_levels).map_err(fail)?;
        put(out, NtfdSpace(s))
    })
}

/// # Safety
/// `s` must come from `ntfd_space_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_space_free(s: *mut NtfdSpace) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Dimension `(N+1)²` of the doubled space, 0 for NULL.
///
/// # Safety
/// `s` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_space_dim(s: *const NtfdSpace) -> usize {
    s.as_ref().map_or(0, |s| s.0.dim())
}

/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ntfd_oscillator_generator(
    s: *const NtfdSpace,
    omega: f64,
    kappa: f64,
    nbar: f64,
    nu: f64,
    out: *mut *mut NtfdGenerator,
) -> NtfdStatus {
    guard(|| {
        let s = get(s)?;
        let h = oscillator_hamiltonian(s.0, omega, kappa, nbar, nu).map_err(fail)?;
        put(out, NtfdGenerator(h))
    })
}

/// `unitary = 0` gives the master-equation generator, otherwise the one
/// implied by unitary noise.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ntfd_kramers_generator(
    s: *const NtfdSpace,
    mass: f64,
    omega: f64,
    kappa: f64,
    nbar: f64,
    unitary: i32,
    out: *mut *mut NtfdGenerator,
) -> NtfdStatus {
    guard(|| {
        let s = get(s)?;
        let h = if unitary == 0 {
            kramers_hamiltonian(s.0, mass, omega, kappa, nbar)
        } else {
            unitary_kramers_generator(s.0, mass, omega, kappa, nbar).map(|(h, _)| h)
        }
        .map_err(fail)?;
        put(out, NtfdGenerator(h))
    })
}

/// # Safety
/// `g` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_generator_free(g: *mut NtfdGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Guarded max-abs of `⟨1|Ĥ` and `‖(iĤ)~ − iĤ‖_max`.
///
/// # Safety
/// `g` must be live; outputs may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_generator_residuals(
    g: *const NtfdGenerator,
    left_zero: *mut f64,
    tildian: *mut f64,
) -> NtfdStatus {
    guard(|| {
        let g = get(g)?;
        if let Some(v) = left_zero.as_mut() {
            *v = g.0.left_zero_residual();
        }
        if let Some(v) = tildian.as_mut() {
            *v = g.0.tildian_residual();
        }
        Ok(())
    })
}

/// Thermal vacuum with occupation `n0`, displaced by `alpha_re + i alpha_im`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ntfd_ket_vacuum(
    s: *const NtfdSpace,
    n0: f64,
    alpha_re: f64,
    alpha_im: f64,
    out: *mut *mut NtfdKet,
) -> NtfdStatus {
    guard(|| {
        let s = get(s)?;
        let k = if alpha_re == 0.0 && alpha_im == 0.0 {
            initial_vacuum(s.0, n0)
        } else {
            displaced_vacuum(s.0, n0, C64::new(alpha_re, alpha_im))
        }
        .map_err(fail)?;
        put(out, NtfdKet(k))
    })
}

/// # Safety
/// `k` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_ket_free(k: *mut NtfdKet) {
    if !k.is_null() {
        drop(Box::from_raw(k));
    }
}

/// Copy the amplitudes into `re[len]` and `im[len]`; `len` must equal the
/// space dimension.
///
/// # Safety
/// `re` and `im` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ntfd_ket_amplitudes(
    k: *const NtfdKet,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> NtfdStatus {
    guard(|| {
        let k = get(k)?;
        let data = k.0.data();
        if len != data.len() {
            return Err(fail(Error::ShapeMismatch(format!(
                "buffer of {len}, ket of {}",
                data.len()
            ))));
        }
        if re.is_null() || im.is_null() {
            set_error("null buffer".into());
            return Err(NtfdStatus::NullPointer);
        }
        for (i, z) in data.iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(())
    })
}

/// `⟨1|a†a|ket⟩`.
///
/// # Safety
/// `k` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ntfd_ket_occupation(k: *const NtfdKet, out: *mut f64) -> NtfdStatus {
    guard(|| {
        let k = get(k)?;
        let s = k.0.space();
        let l = s.ladder();
        let n =
            ntfd::thermal::expectation(&thermal_bra(s), &(&l.a_dag * &l.a), &k.0).map_err(fail)?;
        let out = out.as_mut().ok_or(NtfdStatus::NullPointer)?;
        *out = n.re;
        Ok(())
    })
}

/// RK4 evolution to `t_end`; `t_end` must be a multiple of `dt`.
///
/// # Safety
/// Handles must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ntfd_evolve(
    g: *const NtfdGenerator,
    k: *const NtfdKet,
    t_end: f64,
    dt: f64,
    out: *mut *mut NtfdKet,
) -> NtfdStatus {
    guard(|| {
        let (g, k) = (get(g)?, get(k)?);
        let opts = EvolveOptions {
            record_every: usize::MAX,
            keep_states: false,
        };
        let tr = evolve_master(&g.0, &k.0, t_end, dt, opts).map_err(fail)?;
        put(out, NtfdKet(tr.final_state))
    })
}

/// `n̄ + (n0 − n̄)e^{−2κt}`.
#[no_mangle]
pub extern "C" fn ntfd_boltzmann(n0: f64, nbar: f64, kappa: f64, t: f64) -> f64 {
    boltzmann_closed_form(n0, nbar, kappa, t)
}

fn scenario_id(name: &str) -> Option<ScenarioId> {
    ScenarioId::ALL.into_iter().find(|id| id.name() == name)
}

/// Run a named scenario (`oscillator-nonunitary`, `kramers-unitary`, ...)
/// with a `key = value` config (may be NULL). Data files are written to
/// `out_dir` when it is not NULL. The JSON report is returned through
/// `report_json` (free with `ntfd_string_free`). Returns `ChecksFailed`
/// when the run completed but a check failed.
///
/// # Safety
/// Strings must be NUL-terminated; `report_json` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn ntfd_run_scenario(
    name: *const c_char,
    config: *const c_char,
    out_dir: *const c_char,
    report_json: *mut *mut c_char,
) -> NtfdStatus {
    guard(|| {
        let name = text(name)?;
        let id = scenario_id(name).ok_or_else(|| {
            set_error(format!("unknown scenario `{name}`"));
            NtfdStatus::InvalidArgument
        })?;
        let cfg_text = if config.is_null() { "" } else { text(config)? };
        let cfg = ConfigBuilder::parse(cfg_text)
            .and_then(|b| b.build(id.default_params()))
            .map_err(fail)?;
        let out = run_scenario(id, &cfg.params).map_err(fail)?;
        if !out_dir.is_null() {
            out.write_to(Path::new(text(out_dir)?)).map_err(fail)?;
        }
        if let Some(slot) = report_json.as_mut() {
            *slot = CString::new(out.report.to_json())
                .unwrap_or_default()
                .into_raw();
        }
        if out.report.passed() {
            Ok(())
        } else {
            let names: Vec<&str> = out
                .report
                .failures()
                .iter()
                .map(|c| c.name.as_str())
                .collect();
            set_error(format!("failed checks: {}", names.join(", ")));
            Err(NtfdStatus::ChecksFailed)
        }
    })
}
