//! C ABI over the reconstruction, pole analysis and the delta-shell generator.
//!
//! Every function returns an [`RiStatus`]; on failure the message is kept
//! per thread and can be copied out with [`ri_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use regge_ics::config::RunConfig;
use regge_ics::data::SMatrixRecord;
use regge_ics::pade::{build_rational_interpolant, reconstruct, PadeModel};
use regge_ics::poles::residue_at;
use regge_ics::shell_model::{s_matrix_row, ShellModelParams};
use regge_ics::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    OutOfRange = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RiComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for RiComplex {
    fn from(z: Complex64) -> Self {
        RiComplex { re: z.re, im: z.im }
    }
}

impl From<RiComplex> for Complex64 {
    fn from(z: RiComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Delta-shell hard sphere: radius Å, well width Å, depth meV,
/// barrier strength meV·Å, reduced mass Da.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RiShellParams {
    pub r: f64,
    pub d: f64,
    pub v_well: f64,
    pub omega_delta: f64,
    pub mu: f64,
}

/// Settings of one reconstruction; see [`ri_fit_options_default`].
/// `niter = 0` builds the plain rational interpolant without phase passes.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct RiFitOptions {
    pub energy: f64,
    pub jstart: usize,
    pub jfin: usize,
    pub niter: usize,
    pub sht: f64,
    pub dxl: f64,
    pub extended_precision: bool,
}

/// Opaque reconstructed model.
pub struct RiModel {
    model: PadeModel,
    residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> RiStatus {
    match e {
        Error::Validation(_) | Error::Structure(_) | Error::Usage(_) => RiStatus::InvalidArgument,
        _ => RiStatus::Numerical,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (RiStatus, String)>) -> RiStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RiStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            RiStatus::Panic
        }
    }
}

fn lib(e: Error) -> (RiStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (RiStatus, String) {
    (RiStatus::NullPointer, format!("`{name}` is null"))
}

unsafe fn model_ref<'a>(model: *const RiModel) -> Result<&'a RiModel, (RiStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

unsafe fn write<T>(out: *mut T, name: &str, v: T) -> Result<(), (RiStatus, String)> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(v);
    Ok(())
}

/// Defaults for `n` values starting at J = 0: the whole grid is fitted.
/// `energy` only labels the model and must be positive.
#[no_mangle]
pub extern "C" fn ri_fit_options_default(n: usize) -> RiFitOptions {
    RiFitOptions {
        energy: 1.0,
        jstart: 0,
        jfin: n.saturating_sub(1),
        niter: 2,
        sht: 15.0,
        dxl: 0.5,
        extended_precision: false,
    }
}

/// Reconstructs a model from `n` values S(J), J = 0..n-1. The handle must
/// be released with [`ri_model_free`].
///
/// # Safety
/// `s` must point to `n` readable values and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn ri_model_fit(
    s: *const RiComplex,
    n: usize,
    options: *const RiFitOptions,
    out: *mut *mut RiModel,
) -> RiStatus {
    guard(|| {
        if s.is_null() {
            return Err(null("s"));
        }
        let o = *options.as_ref().ok_or_else(|| null("options"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s_values: Vec<Complex64> = std::slice::from_raw_parts(s, n).iter().map(|&z| z.into()).collect();
        let record = SMatrixRecord {
            energy: o.energy,
            s_values,
            nread: n,
            niter: o.niter,
            sht: o.sht,
            jstart: o.jstart,
            jfin: o.jfin,
            inv: 0,
            dxl: o.dxl,
        };
        record.validate().map_err(lib)?;
        let config = RunConfig {
            use_extended_precision: o.extended_precision,
            ..RunConfig::default()
        };
        let handle = if o.niter == 0 {
            let digits = if o.extended_precision { config.precision_digits } else { f64::DIGITS };
            let model = build_rational_interpolant(&record.fit_points(), o.sht, digits).map_err(lib)?;
            let residual = model.max_fit_residual().map_err(lib)?;
            RiModel { model, residual }
        } else {
            let built = reconstruct(&record, &config).map_err(lib)?;
            RiModel {
                model: built.model,
                residual: built.working_residual,
            }
        };
        out.write(Box::into_raw(Box::new(handle)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`ri_model_fit`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ri_model_free(model: *mut RiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Largest |S_model(J) - S(J)| over the fitted points, in the working precision.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_fit_residual(model: *const RiModel, out: *mut f64) -> RiStatus {
    guard(|| write(out, "out", model_ref(model)?.residual))
}

/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_eval(model: *const RiModel, j: RiComplex, out: *mut RiComplex) -> RiStatus {
    guard(|| {
        let v = model_ref(model)?.model.eval(j.into()).map_err(lib)?;
        write(out, "out", v.into())
    })
}

/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_pole_count(model: *const RiModel, out: *mut usize) -> RiStatus {
    guard(|| write(out, "out", model_ref(model)?.model.poles.len()))
}

/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_zero_count(model: *const RiModel, out: *mut usize) -> RiStatus {
    guard(|| write(out, "out", model_ref(model)?.model.zeros.len()))
}

fn index<T: Copy>(items: &[T], i: usize) -> Result<T, (RiStatus, String)> {
    items
        .get(i)
        .copied()
        .ok_or_else(|| (RiStatus::OutOfRange, format!("index {i} out of range (len {})", items.len())))
}

/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_pole(model: *const RiModel, i: usize, out: *mut RiComplex) -> RiStatus {
    guard(|| write(out, "out", index(&model_ref(model)?.model.poles, i)?.into()))
}

/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_zero(model: *const RiModel, i: usize, out: *mut RiComplex) -> RiStatus {
    guard(|| write(out, "out", index(&model_ref(model)?.model.zeros, i)?.into()))
}

/// Residue of the model at pole `i`.
///
/// # Safety
/// Pointers must be valid or null.
#[no_mangle]
pub unsafe extern "C" fn ri_model_residue(model: *const RiModel, i: usize, out: *mut RiComplex) -> RiStatus {
    guard(|| {
        let m = &model_ref(model)?.model;
        index(&m.poles, i)?;
        write(out, "out", residue_at(m, i).map_err(lib)?.into())
    })
}

/// Writes S(J) of the delta-shell model for J = 0..len-1 at `energy` meV.
///
/// # Safety
/// `out` must point to `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn ri_shell_s_matrix(
    params: *const RiShellParams,
    energy: f64,
    out: *mut RiComplex,
    len: usize,
) -> RiStatus {
    guard(|| {
        let p = *params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len == 0 {
            return Err((RiStatus::InvalidArgument, "len must be positive".into()));
        }
        let params = ShellModelParams {
            r: p.r,
            d: p.d,
            v_well: p.v_well,
            omega_delta: p.omega_delta,
            mu: p.mu,
        };
        let row = s_matrix_row(&params, energy, len - 1).map_err(lib)?;
        for (k, z) in row.into_iter().take(len).enumerate() {
            out.add(k).write(z.into());
        }
        Ok(())
    })
}

/// Copies the last error of this thread into `buf` (NUL-terminated,
/// truncated to `len`) and returns the full message length, 0 if none.
///
/// # Safety
/// `buf` must point to `len` writable bytes or be null.
#[no_mangle]
pub unsafe extern "C" fn ri_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
                buf.add(n).write(0);
            }
            bytes.len()
        }
    })
}
