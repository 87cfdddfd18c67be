//! C ABI over the stencilforge toolkit.
//!
//! Objects cross the boundary as opaque handles created by `sf_*_new*` and
//! released by the matching `sf_*_free`. Every fallible call returns an
//! [`SfStatus`]; on failure [`sf_last_error_message`] describes the error for
//! the calling thread. Array arguments are row-major `double` buffers whose
//! length is passed alongside and checked.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use stencilforge::backend::{write_sfgd, Array};
use stencilforge::cfd::Poisson;
use stencilforge::seismic::{AcousticSolver, DampingProfile, Geometry, Model};
use stencilforge::{Grid, SfError};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Grid = 3,
    Order = 4,
    Binding = 5,
    Compile = 6,
    Location = 7,
    Stability = 8,
    Instability = 9,
    State = 10,
    Io = 11,
    Panic = 99,
}

/// Squared-slowness model with absorbing layer.
pub struct SfModel(Model);

/// Source and receiver layout with source wavelets.
pub struct SfGeometry(Geometry);

/// Compiled forward, adjoint and gradient operators for one geometry.
pub struct SfSolver(AcousticSolver);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SfStatus, String);

impl From<SfError> for Failure {
    fn from(e: SfError) -> Self {
        let code = match &e {
            SfError::Grid(_) => SfStatus::Grid,
            SfError::Order(_) => SfStatus::Order,
            SfError::Binding(_) => SfStatus::Binding,
            SfError::Arity(_)
            | SfError::NotLinear(_)
            | SfError::Singular(_)
            | SfError::Lowering(_)
            | SfError::Scheduling(_) => SfStatus::Compile,
            SfError::Location(_) => SfStatus::Location,
            SfError::Stability(_) => SfStatus::Stability,
            SfError::Instability(_) => SfStatus::Instability,
            SfError::State(_) => SfStatus::State,
            SfError::Io(_) | SfError::Format(_) => SfStatus::Io,
            SfError::Parameter(_) | SfError::Config(_) | SfError::Fit(_) | SfError::Capability(_) => {
                SfStatus::InvalidArgument
            }
        };
        Failure(code, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SfStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            SfStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SfStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: String) -> Failure {
    Failure(SfStatus::InvalidArgument, msg)
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn store<T>(out: *mut *mut T, v: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

fn copy_into(dst: &mut [f64], src: &[f64], what: &str) -> Result<(), Failure> {
    if dst.len() != src.len() {
        return Err(invalid(format!("{what} buffer holds {} values, expected {}", dst.len(), src.len())));
    }
    dst.copy_from_slice(src);
    Ok(())
}

/// Split a flat coordinate buffer into points of `ndim` values.
fn points(flat: &[f64], ndim: usize) -> Vec<Vec<f64>> {
    flat.chunks(ndim).map(|c| c.to_vec()).collect()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Constant-velocity model over a physical grid of `ndim` axes.
///
/// # Safety
/// `shape` and `spacing` point to `ndim` values; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_new_constant(
    ndim: usize,
    shape: *const usize,
    spacing: *const f64,
    vp: f64,
    nbl: usize,
    space_order: usize,
    out: *mut *mut SfModel,
) -> SfStatus {
    guard(|| {
        let shape = slice(shape, ndim, "shape")?;
        let spacing = slice(spacing, ndim, "spacing")?;
        let m = Model::constant(shape, spacing, &vec![0.0; ndim], vp, nbl, space_order)?;
        store(out, SfModel(m))
    })
}

/// Model from a row-major velocity array over the physical grid.
///
/// # Safety
/// `shape` and `spacing` point to `ndim` values, `vp` to `prod(shape)` values.
#[no_mangle]
pub unsafe extern "C" fn sf_model_new_velocity(
    ndim: usize,
    shape: *const usize,
    spacing: *const f64,
    vp: *const f64,
    nbl: usize,
    space_order: usize,
    out: *mut *mut SfModel,
) -> SfStatus {
    guard(|| {
        let shape = slice(shape, ndim, "shape")?;
        let spacing = slice(spacing, ndim, "spacing")?;
        let vp = slice(vp, shape.iter().product(), "vp")?;
        let vp = Array::from_vec(shape, vp.to_vec())?;
        let origin = vec![0.0; ndim];
        let m = Model::from_velocity(&vp, spacing, &origin, nbl, space_order, DampingProfile::default())?;
        store(out, SfModel(m))
    })
}

/// Copy of `model` with squared slowness `m` over the extended grid.
///
/// # Safety
/// `m` points to `len` values.
#[no_mangle]
pub unsafe extern "C" fn sf_model_with_m(
    model: *const SfModel,
    m: *const f64,
    len: usize,
    out: *mut *mut SfModel,
) -> SfStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let m = slice(m, len, "m")?;
        let m = Array::from_vec(model.m.shape(), m.to_vec())?;
        store(out, SfModel(model.with_m(m)?))
    })
}

/// Number of axes and points of the extended grid (physical plus layer).
///
/// # Safety
/// `shape` has room for `capacity` values; `ndim` and `npoints` are writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn sf_model_shape(
    model: *const SfModel,
    shape: *mut usize,
    capacity: usize,
    ndim: *mut usize,
    npoints: *mut usize,
) -> SfStatus {
    guard(|| {
        let s = handle(model, "model")?.0.m.shape();
        if !ndim.is_null() {
            *ndim = s.len();
        }
        if !npoints.is_null() {
            *npoints = s.iter().product();
        }
        if !shape.is_null() {
            let n = capacity.min(s.len());
            slice_mut(shape, n, "shape")?.copy_from_slice(&s[..n]);
        }
        Ok(())
    })
}

/// Squared slowness over the extended grid.
///
/// # Safety
/// `m` has room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sf_model_get_m(model: *const SfModel, m: *mut f64, len: usize) -> SfStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        copy_into(slice_mut(m, len, "m")?, model.m.as_slice(), "m")
    })
}

/// Largest stable time step of the model's discretization.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sf_model_critical_dt(model: *const SfModel, out: *mut f64) -> SfStatus {
    guard(|| {
        let dt = handle(model, "model")?.0.critical_dt();
        *out.as_mut().ok_or_else(|| null("out"))? = dt;
        Ok(())
    })
}

/// # Safety
/// `model` was returned by this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_model_free(model: *mut SfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Ricker sources and receivers; coordinates are `ndim` values per point.
///
/// # Safety
/// `src_coords` holds `nsrc * ndim` values and `rec_coords` `nrec * ndim`.
#[no_mangle]
pub unsafe extern "C" fn sf_geometry_new_ricker(
    ndim: usize,
    nsrc: usize,
    src_coords: *const f64,
    nrec: usize,
    rec_coords: *const f64,
    t0: f64,
    tn: f64,
    dt: f64,
    f0: f64,
    out: *mut *mut SfGeometry,
) -> SfStatus {
    guard(|| {
        if ndim == 0 {
            return Err(invalid("ndim must be positive".into()));
        }
        let src = points(slice(src_coords, nsrc * ndim, "src_coords")?, ndim);
        let rec = points(slice(rec_coords, nrec * ndim, "rec_coords")?, ndim);
        store(out, SfGeometry(Geometry::ricker(src, rec, t0, tn, dt, f0)?))
    })
}

/// Number of time samples and receivers.
///
/// # Safety
/// `nt` and `nrec` are writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn sf_geometry_dims(geom: *const SfGeometry, nt: *mut usize, nrec: *mut usize) -> SfStatus {
    guard(|| {
        let g = &handle(geom, "geometry")?.0;
        if !nt.is_null() {
            *nt = g.nt;
        }
        if !nrec.is_null() {
            *nrec = g.nrec();
        }
        Ok(())
    })
}

/// # Safety
/// `geom` was returned by this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_geometry_free(geom: *mut SfGeometry) {
    if !geom.is_null() {
        drop(Box::from_raw(geom));
    }
}

/// Compile the acoustic operators for `model`'s grid and `geom`.
///
/// # Safety
/// Handles are valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn sf_solver_new(
    model: *const SfModel,
    geom: *const SfGeometry,
    out: *mut *mut SfSolver,
) -> SfStatus {
    guard(|| {
        let s = AcousticSolver::new(&handle(model, "model")?.0, &handle(geom, "geometry")?.0)?;
        store(out, SfSolver(s))
    })
}

/// Forward modelling; writes receiver traces `[nt, nrec]`.
///
/// # Safety
/// `traces` has room for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sf_solver_forward(
    solver: *const SfSolver,
    model: *const SfModel,
    traces: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        let run = handle(solver, "solver")?.0.forward(&handle(model, "model")?.0, false)?;
        copy_into(slice_mut(traces, len, "traces")?, run.traces.as_slice(), "traces")
    })
}

/// Least-squares misfit against `observed` `[nt, nrec]` and its gradient
/// with respect to `m` over the extended grid.
///
/// # Safety
/// `observed` holds `observed_len` values, `gradient` has room for
/// `gradient_len`; `objective` is writable.
#[no_mangle]
pub unsafe extern "C" fn sf_solver_gradient(
    solver: *const SfSolver,
    model: *const SfModel,
    observed: *const f64,
    observed_len: usize,
    objective: *mut f64,
    gradient: *mut f64,
    gradient_len: usize,
) -> SfStatus {
    guard(|| {
        let s = &handle(solver, "solver")?.0;
        let g = &s.geometry;
        let obs = Array::from_vec(&[g.nt, g.nrec()], slice(observed, observed_len, "observed")?.to_vec())?;
        let r = s.objective_and_gradient(&handle(model, "model")?.0, &obs)?;
        *objective.as_mut().ok_or_else(|| null("objective"))? = r.objective;
        copy_into(slice_mut(gradient, gradient_len, "gradient")?, r.gradient.as_slice(), "gradient")
    })
}

/// # Safety
/// `solver` was returned by this library and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sf_solver_free(solver: *mut SfSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// Jacobi iterations for `Δp = b` on an `nx × ny` grid with zero boundary,
/// starting from `p = 0`. `residuals` receives `iterations + 1` norms or is NULL.
///
/// # Safety
/// `b` and `p` hold `nx * ny` values; `residuals` has room for `iterations + 1`.
#[no_mangle]
pub unsafe extern "C" fn sf_poisson_jacobi(
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    b: *const f64,
    iterations: usize,
    p: *mut f64,
    residuals: *mut f64,
) -> SfStatus {
    guard(|| {
        let shape = [nx, ny];
        let b = Array::from_vec(&shape, slice(b, nx * ny, "b")?.to_vec())?;
        let solver = Poisson::new(&Grid::new(&shape, &[hx, hy])?)?;
        let r = solver.iterate(&b, &Array::zeros(&shape), iterations, None)?;
        copy_into(slice_mut(p, nx * ny, "p")?, r.p.as_slice(), "p")?;
        if !residuals.is_null() {
            copy_into(slice_mut(residuals, iterations + 1, "residuals")?, &r.residuals, "residuals")?;
        }
        Ok(())
    })
}

/// Write a row-major array in the SFGD binary grid format.
///
/// # Safety
/// `path` is NUL-terminated UTF-8; `shape` holds `ndim` values and `data` `prod(shape)`.
#[no_mangle]
pub unsafe extern "C" fn sf_write_sfgd(
    path: *const c_char,
    ndim: usize,
    shape: *const usize,
    data: *const f64,
) -> SfStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| invalid(format!("path is not UTF-8: {e}")))?;
        let shape = slice(shape, ndim, "shape")?;
        let a = Array::from_vec(shape, slice(data, shape.iter().product(), "data")?.to_vec())?;
        write_sfgd(Path::new(path), &a)?;
        Ok(())
    })
}
