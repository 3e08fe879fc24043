//! C interface to `sunbloch`.
//!
//! Models and compiled systems are opaque heap handles owned by the caller
//! and released with the matching `_free` function. Every fallible call
//! returns an [`SbStatus`]; on failure a description is available from
//! [`sb_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use sunbloch::basis::GeneratorBasis;
use sunbloch::compile::{compile, CompileOptions, CompiledBloch, TensorSource};
use sunbloch::error::Error;
use sunbloch::models::{load_model, DimerParams, GammaConvention, InitialState, ModelSpec};
use sunbloch::propagate::{observables, propagate, CoherenceVector, DriveKind, PropagationOptions};
use sunbloch::structure::{nz_d, nz_f};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NonFinite = 4,
    Cache = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbDrive {
    PiecewiseConstant = 0,
    Sinusoidal = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SbGammaConvention {
    InOperator = 0,
    SquaredRate = 1,
    LinearRate = 2,
}

/// Dimer parameters. Fill with [`sb_dimer_params_reference`] and adjust.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SbDimerParams {
    pub n: usize,
    pub j: f64,
    pub u: f64,
    pub e: f64,
    pub a: f64,
    pub period: f64,
    pub gamma: f64,
    pub drive: SbDrive,
    pub convention: SbGammaConvention,
    /// Fock level the run starts in.
    pub initial_fock: usize,
}

/// Opaque model handle.
pub struct SbModel {
    spec: ModelSpec,
}

/// Opaque compiled system, ready to propagate.
pub struct SbCompiled {
    basis: GeneratorBasis,
    model: ModelSpec,
    bloch: CompiledBloch,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SbStatus {
    match err {
        Error::Config(_) => SbStatus::Config,
        Error::NonFinite { .. } => SbStatus::NonFinite,
        Error::Cache(_) => SbStatus::Cache,
        Error::Io { .. } => SbStatus::Io,
        _ => SbStatus::InvalidArgument,
    }
}

/// Runs `body`, translating errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), (SbStatus, String)>) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SbStatus::Ok,
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SbStatus::Panic
        }
    }
}

fn lib<T>(r: sunbloch::error::Result<T>) -> Result<T, (SbStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SbStatus, String) {
    (SbStatus::NullPointer, format!("{what} is null"))
}

/// Reference dimer parameters for `n` levels (J = -1, U = 1, E = 1,
/// A = 1.5, T = 2 pi, gamma = 0.1, piecewise drive, start in level 0).
#[no_mangle]
pub extern "C" fn sb_dimer_params_reference(n: usize) -> SbDimerParams {
    let r = DimerParams::reference(n);
    SbDimerParams {
        n,
        j: r.j,
        u: r.u,
        e: r.e,
        a: r.a,
        period: r.period,
        gamma: r.gamma,
        drive: SbDrive::PiecewiseConstant,
        convention: SbGammaConvention::InOperator,
        initial_fock: 0,
    }
}

/// Builds a dimer model. On success `*out` owns a new handle.
///
/// # Safety
/// `params` must point to a valid `SbDimerParams` and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn sb_dimer_model_new(params: *const SbDimerParams, out: *mut *mut SbModel) -> SbStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let dimer = DimerParams {
            n: p.n,
            j: p.j,
            u: p.u,
            e: p.e,
            a: p.a,
            period: p.period,
            gamma: p.gamma,
            drive: match p.drive {
                SbDrive::PiecewiseConstant => DriveKind::PiecewiseConstant,
                SbDrive::Sinusoidal => DriveKind::Sinusoidal,
            },
            convention: match p.convention {
                SbGammaConvention::InOperator => GammaConvention::InOperator,
                SbGammaConvention::SquaredRate => GammaConvention::SquaredRate,
                SbGammaConvention::LinearRate => GammaConvention::LinearRate,
            },
        };
        if p.initial_fock >= p.n.max(1) {
            return Err((
                SbStatus::InvalidArgument,
                format!("initial_fock {} out of range for n = {}", p.initial_fock, p.n),
            ));
        }
        let spec = lib(ModelSpec::dimer(&dimer, InitialState::Fock(p.initial_fock)))?;
        *out = Box::into_raw(Box::new(SbModel { spec }));
        Ok(())
    })
}

/// Loads a model from a run configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_model_load(path: *const c_char, out: *mut *mut SbModel) -> SbStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| (SbStatus::InvalidArgument, "path is not valid UTF-8".to_string()))?;
        let spec = lib(load_model(Path::new(path)))?;
        *out = Box::into_raw(Box::new(SbModel { spec }));
        Ok(())
    })
}

/// Number of levels of a model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_model_levels(model: *const SbModel) -> usize {
    model.as_ref().map_or(0, |m| m.spec.n)
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_model_free(model: *mut SbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Compiles a model into Bloch form. Assembly evaluates structure constants
/// on the fly; no cache files are touched.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_compile(model: *const SbModel, out: *mut *mut SbCompiled) -> SbStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let basis = lib(GeneratorBasis::new(model.spec.n))?;
        let (ham, channels) = lib(model.spec.decompose(&basis))?;
        let bloch = lib(compile(
            &basis,
            &ham,
            &channels,
            TensorSource::OnTheFly,
            CompileOptions::default(),
        ))?;
        *out = Box::into_raw(Box::new(SbCompiled {
            basis,
            model: model.spec.clone(),
            bloch,
        }));
        Ok(())
    })
}

/// Length of the coherence vector, N^2 - 1, or 0 for a null handle.
///
/// # Safety
/// `compiled` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_compiled_dimension(compiled: *const SbCompiled) -> usize {
    compiled.as_ref().map_or(0, |c| c.bloch.dim())
}

/// Stored nonzeros across Q0, Q1 and R, or 0 for a null handle.
///
/// # Safety
/// `compiled` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sb_compiled_nnz(compiled: *const SbCompiled) -> usize {
    compiled.as_ref().map_or(0, |c| c.bloch.total_nnz())
}

/// # Safety
/// `compiled` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_compiled_free(compiled: *mut SbCompiled) {
    if !compiled.is_null() {
        drop(Box::from_raw(compiled));
    }
}

/// Propagates the model's initial state from t = 0 to `t_end` with step
/// `dt` and writes the final level populations into `probabilities`, which
/// must hold at least N values. `coherence` may be null; otherwise it
/// receives the final coherence vector and must hold N^2 - 1 values.
///
/// # Safety
/// Buffers must be valid for writes of the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn sb_propagate(
    compiled: *const SbCompiled,
    dt: f64,
    t_end: f64,
    probabilities: *mut f64,
    probabilities_len: usize,
    coherence: *mut f64,
    coherence_len: usize,
) -> SbStatus {
    guard(|| {
        let c = compiled.as_ref().ok_or_else(|| null("compiled"))?;
        if probabilities.is_null() {
            return Err(null("probabilities"));
        }
        let n = c.basis.n();
        if probabilities_len < n {
            return Err((
                SbStatus::BufferTooSmall,
                format!("probabilities holds {probabilities_len} values, need {n}"),
            ));
        }
        let m = c.basis.m();
        if !coherence.is_null() && coherence_len < m {
            return Err((
                SbStatus::BufferTooSmall,
                format!("coherence holds {coherence_len} values, need {m}"),
            ));
        }
        let v0: CoherenceVector = lib(c.model.initial.coherence(&c.basis))?;
        let opts = PropagationOptions::new(dt, t_end, 0);
        let (v, _) = lib(propagate(&c.bloch, c.model.drive, &v0, opts, |_, _| {}))?;
        let p = lib(observables(&c.basis, &v.v))?;
        std::slice::from_raw_parts_mut(probabilities, n).copy_from_slice(&p);
        if !coherence.is_null() {
            std::slice::from_raw_parts_mut(coherence, m).copy_from_slice(&v.v);
        }
        Ok(())
    })
}

/// Closed-form nonzero counts of the f and d tensors of SU(N).
///
/// # Safety
/// `nz_f_out` and `nz_d_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_structure_counts(n: usize, nz_f_out: *mut u64, nz_d_out: *mut u64) -> SbStatus {
    guard(|| {
        if n < 2 {
            return Err((SbStatus::InvalidArgument, format!("n must be at least 2, got {n}")));
        }
        let f = nz_f_out.as_mut().ok_or_else(|| null("nz_f_out"))?;
        let d = nz_d_out.as_mut().ok_or_else(|| null("nz_d_out"))?;
        *f = nz_f(n);
        *d = nz_d(n);
        Ok(())
    })
}

/// Message for the most recent failure on this thread, or null if none.
/// Valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn sb_status_message(status: SbStatus) -> *const c_char {
    let s: &'static CStr = match status {
        SbStatus::Ok => c"ok",
        SbStatus::NullPointer => c"null pointer argument",
        SbStatus::InvalidArgument => c"invalid argument",
        SbStatus::Config => c"configuration error",
        SbStatus::NonFinite => c"numerical failure",
        SbStatus::Cache => c"cache integrity failure",
        SbStatus::Io => c"I/O failure",
        SbStatus::BufferTooSmall => c"output buffer too small",
        SbStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}
