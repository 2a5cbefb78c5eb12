//! C ABI over `ilc-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_build`
//! functions and released by the matching `*_free`. Every fallible call
//! returns an [`IlcStatus`]; on failure a description is available from
//! [`ilc_last_error`] on the same thread. Arrays are passed as pointer plus
//! length and are never retained.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ilc_core::{
    discretize_zoh, make_second_order, make_third_order, sampled_zeros, DiscreteStateSpace,
    FastForward, IlcError, LawKind, LearningLaw, LearningProblem, LiftedSystem, SwitchReport,
    Trajectory,
};
use nalgebra::DVector;

pub const ILC_LAW_P_TRANSPOSE: u32 = 0;
pub const ILC_LAW_PARTIAL_ISOMETRY: u32 = 1;
pub const ILC_LAW_NORM_OPTIMAL: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IlcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Discretized SISO plant.
pub struct IlcPlant {
    inner: DiscreteStateSpace,
}

/// Lifted (and possibly row-deleted) plant over a fixed horizon.
pub struct IlcLifted {
    inner: LiftedSystem,
}

/// Cached decomposition for fast-forwarding model iterations.
pub struct IlcFastForward {
    inner: FastForward,
}

/// World plant, model, law and desired output.
pub struct IlcProblem {
    inner: LearningProblem,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IlcSwitchReport {
    pub candidate_n: usize,
    pub r_model_n: f64,
    pub r_model_n1: f64,
    pub r_world_n: f64,
    pub r_world_n1: f64,
    pub model_slope: f64,
    pub world_slope: f64,
    pub jump: f64,
    pub slope_factor: f64,
    pub recommend_switch: bool,
}

impl From<SwitchReport> for IlcSwitchReport {
    fn from(r: SwitchReport) -> Self {
        Self {
            candidate_n: r.candidate_n,
            r_model_n: r.r_model_n,
            r_model_n1: r.r_model_n1,
            r_world_n: r.r_world_n,
            r_world_n1: r.r_world_n1,
            model_slope: r.model_slope,
            world_slope: r.world_slope,
            jump: r.jump,
            slope_factor: r.slope_factor,
            recommend_switch: r.recommend_switch,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

struct Failure(IlcStatus, String);

impl From<IlcError> for Failure {
    fn from(err: IlcError) -> Self {
        let status = match err {
            IlcError::InvalidParameter { .. }
            | IlcError::Config { .. }
            | IlcError::Io(_)
            | IlcError::EmptyHorizon
            | IlcError::DegenerateDeletion { .. }
            | IlcError::AlreadyDeleted(_)
            | IlcError::EmptyInput => IlcStatus::InvalidArgument,
            IlcError::Dimension { .. } => IlcStatus::DimensionMismatch,
            _ => IlcStatus::Numerical,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(IlcStatus::NullPointer, format!("null pointer for `{what}`"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> IlcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => IlcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".to_string());
            IlcStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller passes either null or a live handle from this library.
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` readable values at `data`.
    Ok(unsafe { std::slice::from_raw_parts(data, len) })
}

unsafe fn slice_mut<'a>(data: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `len` writable values at `data`.
    Ok(unsafe { std::slice::from_raw_parts_mut(data, len) })
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: `out` is non-null and points to writable storage for a pointer.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

fn copy_out(dst: &mut [f64], src: &DVector<f64>, what: &'static str) -> Result<(), Failure> {
    if dst.len() != src.len() {
        return Err(IlcError::Dimension {
            what,
            expected: src.len(),
            got: dst.len(),
        }
        .into());
    }
    dst.copy_from_slice(src.as_slice());
    Ok(())
}

fn law_from(code: u32, gain: f64) -> Result<LearningLaw, Failure> {
    let kind = match code {
        ILC_LAW_P_TRANSPOSE => LawKind::PTranspose,
        ILC_LAW_PARTIAL_ISOMETRY => LawKind::PartialIsometry,
        ILC_LAW_NORM_OPTIMAL => LawKind::NormOptimal,
        other => {
            return Err(Failure(
                IlcStatus::InvalidArgument,
                format!("unknown law code {other}"),
            ))
        }
    };
    Ok(LearningLaw::new(kind, gain)?)
}

/// Message for the most recent failure on this thread, or null if none.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ilc_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Second-order plant `wn^2 / (s^2 + 2 zeta wn s + wn^2)` sampled with a zero-order hold.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ilc_plant_second_order(
    damping_ratio: f64,
    natural_frequency: f64,
    sample_period: f64,
    out: *mut *mut IlcPlant,
) -> IlcStatus {
    guard(|| {
        let css = make_second_order(damping_ratio, natural_frequency)?;
        let inner = discretize_zoh(&css, sample_period)?;
        unsafe { write_handle(out, IlcPlant { inner }, "out") }
    })
}

/// Third-order plant `(a / (s + a)) wn^2 / (s^2 + 2 zeta wn s + wn^2)` sampled with a zero-order hold.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ilc_plant_third_order(
    real_pole: f64,
    damping_ratio: f64,
    natural_frequency: f64,
    sample_period: f64,
    out: *mut *mut IlcPlant,
) -> IlcStatus {
    guard(|| {
        let css = make_third_order(real_pole, damping_ratio, natural_frequency)?;
        let inner = discretize_zoh(&css, sample_period)?;
        unsafe { write_handle(out, IlcPlant { inner }, "out") }
    })
}

/// # Safety
/// `plant` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ilc_plant_free(plant: *mut IlcPlant) {
    if !plant.is_null() {
        // SAFETY: handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(plant) });
    }
}

/// State dimension of a plant, or 0 for a null handle.
///
/// # Safety
/// `plant` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ilc_plant_order(plant: *const IlcPlant) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { plant.as_ref() }.map_or(0, |p| p.inner.order())
}

/// Sampled zeros, largest modulus first.
///
/// Writes up to `capacity` zeros into `re`/`im` and the total count into
/// `count`. Returns `BufferTooSmall` (with `count` set) if `capacity` is short.
///
/// # Safety
/// `re` and `im` must each hold `capacity` writable doubles; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ilc_plant_sampled_zeros(
    plant: *const IlcPlant,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> IlcStatus {
    guard(|| {
        let plant = unsafe { borrow(plant, "plant") }?;
        if count.is_null() {
            return Err(null("count"));
        }
        let zeros = sampled_zeros(&plant.inner)?;
        // SAFETY: checked non-null above.
        unsafe { *count = zeros.len() };
        if zeros.len() > capacity {
            return Err(Failure(
                IlcStatus::BufferTooSmall,
                format!("{} zeros, capacity {capacity}", zeros.len()),
            ));
        }
        let re = unsafe { slice_mut(re, zeros.len(), "re") }?;
        let im = unsafe { slice_mut(im, zeros.len(), "im") }?;
        for (i, z) in zeros.iter().enumerate() {
            re[i] = z.re;
            im[i] = z.im;
        }
        Ok(())
    })
}

/// Lifts a plant over `horizon` steps and deletes the first `deleted_rows` output rows.
///
/// # Safety
/// `plant` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ilc_lifted_build(
    plant: *const IlcPlant,
    horizon: usize,
    deleted_rows: usize,
    out: *mut *mut IlcLifted,
) -> IlcStatus {
    guard(|| {
        let plant = unsafe { borrow(plant, "plant") }?;
        let inner = LiftedSystem::build(&plant.inner, horizon)?.delete_rows(deleted_rows)?;
        unsafe { write_handle(out, IlcLifted { inner }, "out") }
    })
}

/// # Safety
/// `lifted` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ilc_lifted_free(lifted: *mut IlcLifted) {
    if !lifted.is_null() {
        // SAFETY: handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(lifted) });
    }
}

/// Input length `N` and output length `N - d`.
///
/// # Safety
/// `lifted` must be a live handle; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn ilc_lifted_dims(
    lifted: *const IlcLifted,
    input_len: *mut usize,
    output_len: *mut usize,
) -> IlcStatus {
    guard(|| {
        let lifted = unsafe { borrow(lifted, "lifted") }?;
        if input_len.is_null() || output_len.is_null() {
            return Err(null("input_len/output_len"));
        }
        // SAFETY: checked non-null above.
        unsafe {
            *input_len = lifted.inner.horizon();
            *output_len = lifted.inner.output_len();
        }
        Ok(())
    })
}

/// `y = P u + Abar x0` over the tracked steps.
///
/// # Safety
/// Each array must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn ilc_lifted_output(
    lifted: *const IlcLifted,
    input: *const f64,
    input_len: usize,
    initial_state: *const f64,
    state_len: usize,
    output: *mut f64,
    output_len: usize,
) -> IlcStatus {
    guard(|| {
        let lifted = unsafe { borrow(lifted, "lifted") }?;
        let u = unsafe { slice(input, input_len, "input") }?;
        let x0 = unsafe { slice(initial_state, state_len, "initial_state") }?;
        let out = unsafe { slice_mut(output, output_len, "output") }?;
        let y = lifted.inner.output(
            &Trajectory::input(DVector::from_column_slice(u), lifted.inner.sample_period()),
            &DVector::from_column_slice(x0),
        )?;
        copy_out(out, y.values(), "output buffer")
    })
}

/// Minimum-norm input reaching `desired` from `initial_state`.
///
/// # Safety
/// Each array must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn ilc_lifted_pseudo_inverse(
    lifted: *const IlcLifted,
    desired: *const f64,
    desired_len: usize,
    initial_state: *const f64,
    state_len: usize,
    input: *mut f64,
    input_len: usize,
) -> IlcStatus {
    guard(|| {
        let lifted = unsafe { borrow(lifted, "lifted") }?;
        let yd = unsafe { slice(desired, desired_len, "desired") }?;
        let x0 = unsafe { slice(initial_state, state_len, "initial_state") }?;
        let out = unsafe { slice_mut(input, input_len, "input") }?;
        let desired = Trajectory::new(
            DVector::from_column_slice(yd),
            lifted.inner.output_start_step(),
            lifted.inner.sample_period(),
        );
        let u = lifted
            .inner
            .pseudo_inverse_input(&desired, &DVector::from_column_slice(x0))?;
        copy_out(out, u.values(), "input buffer")
    })
}

/// Decomposes `I - P L` for the given model and law (`ILC_LAW_*`).
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ilc_fast_forward_new(
    model: *const IlcLifted,
    law: u32,
    gain: f64,
    out: *mut *mut IlcFastForward,
) -> IlcStatus {
    guard(|| {
        let model = unsafe { borrow(model, "model") }?;
        let inner = FastForward::new(&model.inner, law_from(law, gain)?)?;
        unsafe { write_handle(out, IlcFastForward { inner }, "out") }
    })
}

/// # Safety
/// `ff` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ilc_fast_forward_free(ff: *mut IlcFastForward) {
    if !ff.is_null() {
        // SAFETY: handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(ff) });
    }
}

unsafe fn model_step(
    ff: *const IlcFastForward,
    arrays: [(*const f64, usize); 2],
    outputs: [(*mut f64, usize); 2],
    n: usize,
    explicit: bool,
) -> Result<(), Failure> {
    let ff = unsafe { borrow(ff, "ff") }?;
    let u0 = unsafe { slice(arrays[0].0, arrays[0].1, "input") }?;
    let e0 = unsafe { slice(arrays[1].0, arrays[1].1, "error") }?;
    let u_out = unsafe { slice_mut(outputs[0].0, outputs[0].1, "input_out") }?;
    let e_out = unsafe { slice_mut(outputs[1].0, outputs[1].1, "error_out") }?;
    let u0 = Trajectory::input(DVector::from_column_slice(u0), 1.0);
    let e0 = Trajectory::new(DVector::from_column_slice(e0), 1, 1.0);
    let state = if explicit {
        ff.inner.explicit(&u0, &e0, n)?
    } else {
        ff.inner.advance(&u0, &e0, n)?
    };
    copy_out(u_out, state.input.values(), "input_out buffer")?;
    copy_out(e_out, state.error.values(), "error_out buffer")
}

/// Input and error after `n` model iterations, in closed form.
///
/// # Safety
/// Input arrays must hold `input_len` and `error_len` doubles; the output
/// arrays must hold the same counts and may not alias the inputs.
#[no_mangle]
pub unsafe extern "C" fn ilc_fast_forward_advance(
    ff: *const IlcFastForward,
    input: *const f64,
    input_len: usize,
    error: *const f64,
    error_len: usize,
    n: usize,
    input_out: *mut f64,
    error_out: *mut f64,
) -> IlcStatus {
    guard(|| unsafe {
        model_step(
            ff,
            [(input, input_len), (error, error_len)],
            [(input_out, input_len), (error_out, error_len)],
            n,
            false,
        )
    })
}

/// The same state as [`ilc_fast_forward_advance`] by `n` explicit iterations.
///
/// # Safety
/// As for [`ilc_fast_forward_advance`].
#[no_mangle]
pub unsafe extern "C" fn ilc_fast_forward_explicit(
    ff: *const IlcFastForward,
    input: *const f64,
    input_len: usize,
    error: *const f64,
    error_len: usize,
    n: usize,
    input_out: *mut f64,
    error_out: *mut f64,
) -> IlcStatus {
    guard(|| unsafe {
        model_step(
            ff,
            [(input, input_len), (error, error_len)],
            [(input_out, input_len), (error_out, error_len)],
            n,
            true,
        )
    })
}

/// Learning problem with the gain built from `model`. A null
/// `initial_state` with `state_len` 0 means the zero state.
///
/// # Safety
/// `world` and `model` must be live handles; arrays must hold the stated counts.
#[no_mangle]
pub unsafe extern "C" fn ilc_problem_new(
    world: *const IlcLifted,
    model: *const IlcLifted,
    law: u32,
    gain: f64,
    desired: *const f64,
    desired_len: usize,
    initial_state: *const f64,
    state_len: usize,
    out: *mut *mut IlcProblem,
) -> IlcStatus {
    guard(|| {
        let world = unsafe { borrow(world, "world") }?;
        let model = unsafe { borrow(model, "model") }?;
        let yd = unsafe { slice(desired, desired_len, "desired") }?;
        let x0 = unsafe { slice(initial_state, state_len, "initial_state") }?;
        let x0 = if x0.is_empty() {
            DVector::zeros(model.inner.source().order())
        } else {
            DVector::from_column_slice(x0)
        };
        let desired = Trajectory::new(
            DVector::from_column_slice(yd),
            model.inner.output_start_step(),
            model.inner.sample_period(),
        );
        let inner = LearningProblem::new(
            world.inner.clone(),
            model.inner.clone(),
            law_from(law, gain)?,
            desired,
            x0,
        )?;
        unsafe { write_handle(out, IlcProblem { inner }, "out") }
    })
}

/// # Safety
/// `problem` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ilc_problem_free(problem: *mut IlcProblem) {
    if !problem.is_null() {
        // SAFETY: handle was created by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// Switch test after `candidate_n` model iterations from `initial_input`.
///
/// # Safety
/// `problem` must be a live handle; `initial_input` must hold `input_len`
/// doubles; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ilc_problem_evaluate_switch(
    problem: *const IlcProblem,
    initial_input: *const f64,
    input_len: usize,
    candidate_n: usize,
    slope_factor: f64,
    report: *mut IlcSwitchReport,
) -> IlcStatus {
    guard(|| {
        let problem = unsafe { borrow(problem, "problem") }?;
        let u0 = unsafe { slice(initial_input, input_len, "initial_input") }?;
        if report.is_null() {
            return Err(null("report"));
        }
        let u0 = Trajectory::input(
            DVector::from_column_slice(u0),
            problem.inner.model().sample_period(),
        );
        let r = problem.inner.evaluate_switch(&u0, candidate_n, slope_factor)?;
        // SAFETY: checked non-null above.
        unsafe { *report = r.into() };
        Ok(())
    })
}
