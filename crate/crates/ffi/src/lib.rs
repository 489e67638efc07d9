//! C ABI over `posterior_hmm`.
//!
//! Models and analyses are opaque handles created by `phmm_*_new` and released
//! with the matching `phmm_*_free`. Every fallible call returns a
//! [`PhmmStatus`]; on failure a description is available from
//! [`phmm_last_error`] on the same thread. Hidden states are 0-based and
//! matrices are row-major. Caller-provided output buffers must have exactly
//! the documented length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use posterior_hmm::decoding::{viterbi, DecodingContext};
use posterior_hmm::fmci::{self, Statistic};
use posterior_hmm::{
    forward_backward, sample_posterior_paths, Error, FBTables, HmmModel, ObsSeq, PosteriorChain,
    StateSeq, ValidationOptions,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhmmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    Impossible = 3,
    InvalidArgument = 4,
    NotTwoState = 5,
    Io = 6,
    Parse = 7,
    BufferLength = 8,
    Panic = 9,
}

/// Pattern statistics of state 1 (the second state).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhmmStatistic {
    Jumps = 0,
    Runs = 1,
    Positions = 2,
    /// Runs of exactly `run_length`.
    ExactRun = 3,
    LongestRun = 4,
}

/// Opaque model handle.
pub struct PhmmModel(HmmModel);

/// Opaque handle holding a model, an observation sequence and its
/// forward-backward tables and posterior chain.
pub struct PhmmAnalysis {
    model: HmmModel,
    obs: ObsSeq,
    tables: FBTables,
    chain: PosteriorChain,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PhmmStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.category() {
            "validation" => PhmmStatus::InvalidModel,
            "impossible" => PhmmStatus::Impossible,
            "two-state" => PhmmStatus::NotTwoState,
            "io" => PhmmStatus::Io,
            "parse" => PhmmStatus::Parse,
            _ => PhmmStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PhmmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PhmmStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PhmmStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(PhmmStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    get(p, what)?;
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(
    p: *mut T,
    len: usize,
    expected: usize,
    what: &str,
) -> Result<&'a mut [T], Failure> {
    if len != expected {
        return Err(Failure(
            PhmmStatus::BufferLength,
            format!("{what} has length {len}, expected {expected}"),
        ));
    }
    if expected == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure(PhmmStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(PhmmStatus::NullPointer, format!("{what} is null")))
}

fn write_path(path: &StateSeq, out: &mut [u32]) {
    for (o, &s) in out.iter_mut().zip(path.states()) {
        *o = s as u32;
    }
}

/// Message describing the last failure on this thread; empty after a success.
/// The pointer is valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn phmm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a model from `pi` (length `k`), `gamma` (`k * k`) and `lambda` (`k`),
/// requiring rows to sum to one within 1e-9.
///
/// # Safety
/// Array arguments must point to the stated number of readable values and
/// `out` to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn phmm_model_new(
    k: usize,
    pi: *const f64,
    gamma: *const f64,
    lambda: *const f64,
    out: *mut *mut PhmmModel,
) -> PhmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = std::ptr::null_mut();
        let pi = slice(pi, k, "pi")?.to_vec();
        let gamma = slice(gamma, k * k, "gamma")?;
        let lambda = slice(lambda, k, "lambda")?.to_vec();
        let rows = gamma.chunks(k.max(1)).map(<[f64]>::to_vec).collect();
        let model = HmmModel::new(pi, rows, lambda)?;
        *out = Box::into_raw(Box::new(PhmmModel(model)));
        Ok(())
    })
}

/// Reads a model file. With `renormalize`, rows within 1e-2 of one are rescaled.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phmm_model_from_file(
    path: *const c_char,
    renormalize: bool,
    out: *mut *mut PhmmModel,
) -> PhmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = std::ptr::null_mut();
        get(path, "path")?;
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure(PhmmStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let options = if renormalize {
            ValidationOptions::relaxed()
        } else {
            ValidationOptions::default()
        };
        let (model, _) = posterior_hmm::io::read_model(Path::new(path), options)?;
        *out = Box::into_raw(Box::new(PhmmModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn phmm_model_free(model: *mut PhmmModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of hidden states, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phmm_model_num_states(model: *const PhmmModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.num_states())
}

/// Simulates `n` steps into `states` and `counts`, both of length `n`.
///
/// # Safety
/// `model` must be a live handle; output arrays must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_simulate(
    model: *const PhmmModel,
    n: usize,
    seed: u64,
    states: *mut u32,
    counts: *mut u64,
) -> PhmmStatus {
    guard(|| {
        let model = &get(model, "model")?.0;
        let states = out_slice(states, n, n, "states")?;
        let counts = out_slice(counts, n, n, "counts")?;
        let (y, x) = model.simulate(n, seed)?;
        write_path(&y, states);
        counts.copy_from_slice(x.counts());
        Ok(())
    })
}

/// Runs forward-backward on `counts` and builds the posterior chain.
///
/// # Safety
/// `model` must be a live handle, `counts` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn phmm_analysis_new(
    model: *const PhmmModel,
    counts: *const u64,
    n: usize,
    out: *mut *mut PhmmAnalysis,
) -> PhmmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = std::ptr::null_mut();
        let model = get(model, "model")?.0.clone();
        let obs = ObsSeq::new(slice(counts, n, "counts")?.to_vec())?;
        let tables = forward_backward(&model, &obs)?;
        let chain = PosteriorChain::build(&model, &tables);
        *out = Box::into_raw(Box::new(PhmmAnalysis {
            model,
            obs,
            tables,
            chain,
        }));
        Ok(())
    })
}

/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phmm_analysis_free(analysis: *mut PhmmAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Sequence length, or 0 for a null handle.
///
/// # Safety
/// `analysis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn phmm_analysis_len(analysis: *const PhmmAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.obs.len())
}

/// # Safety
/// `analysis` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn phmm_analysis_loglik(
    analysis: *const PhmmAnalysis,
    out: *mut f64,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        *out_ptr(out, "out")? = a.tables.loglik();
        Ok(())
    })
}

/// Posterior marginals, `n * K` values, row `t` holding `P(state at t | counts)`.
///
/// # Safety
/// `analysis` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_analysis_marginals(
    analysis: *const PhmmAnalysis,
    out: *mut f64,
    len: usize,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let k = a.model.num_states();
        let out = out_slice(out, len, a.obs.len() * k, "out")?;
        for (t, row) in out.chunks_mut(k).enumerate() {
            a.tables.marginal_into(t, row);
        }
        Ok(())
    })
}

/// Per-position most probable states.
///
/// # Safety
/// `analysis` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_decode_posterior(
    analysis: *const PhmmAnalysis,
    out: *mut u32,
    len: usize,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let out = out_slice(out, len, a.obs.len(), "out")?;
        let ctx = DecodingContext::new(&a.model, &a.obs, &a.tables)?;
        write_path(&ctx.posterior_path(), out);
        Ok(())
    })
}

/// Most probable path.
///
/// # Safety
/// `analysis` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_decode_viterbi(
    analysis: *const PhmmAnalysis,
    out: *mut u32,
    len: usize,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let out = out_slice(out, len, a.obs.len(), "out")?;
        write_path(&viterbi(&a.model, &a.obs)?, out);
        Ok(())
    })
}

/// Hybrid path at weight `alpha` in [0, 1]. `objective` may be null.
///
/// # Safety
/// `analysis` must be a live handle, `out` hold `len` values and `objective`
/// be null or writable.
#[no_mangle]
pub unsafe extern "C" fn phmm_decode_hybrid(
    analysis: *const PhmmAnalysis,
    alpha: f64,
    out: *mut u32,
    len: usize,
    objective: *mut f64,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let out = out_slice(out, len, a.obs.len(), "out")?;
        let ctx = DecodingContext::new(&a.model, &a.obs, &a.tables)?;
        let r = ctx.hybrid_decode(alpha)?;
        write_path(&r.path, out);
        if let Some(o) = objective.as_mut() {
            *o = r.objective;
        }
        Ok(())
    })
}

/// Posterior law of a statistic of state 1 in a two-state model, tracked
/// exactly up to `truncation`. `out` receives `truncation + 2` values: the
/// probabilities of 0..=truncation followed by the mass above.
///
/// # Safety
/// `analysis` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_fmci_distribution(
    analysis: *const PhmmAnalysis,
    statistic: PhmmStatistic,
    run_length: usize,
    truncation: usize,
    out: *mut f64,
    len: usize,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let stat = match statistic {
            PhmmStatistic::Jumps => Statistic::Jumps,
            PhmmStatistic::Runs => Statistic::Runs,
            PhmmStatistic::Positions => Statistic::Positions,
            PhmmStatistic::ExactRun => Statistic::ExactRun(run_length),
            PhmmStatistic::LongestRun => Statistic::LongestRun,
        };
        let out = out_slice(out, len, truncation.saturating_add(2), "out")?;
        let d = fmci::distribution(stat, truncation, &a.chain)?;
        out[..d.probs.len()].copy_from_slice(&d.probs);
        out[d.probs.len()] = d.overflow;
        Ok(())
    })
}

/// Draws `count` posterior paths into `out`, `count * n` values, path by path.
///
/// # Safety
/// `analysis` must be a live handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn phmm_sample_paths(
    analysis: *const PhmmAnalysis,
    count: usize,
    seed: u64,
    out: *mut u32,
    len: usize,
) -> PhmmStatus {
    guard(|| {
        let a = get(analysis, "analysis")?;
        let n = a.obs.len();
        let out = out_slice(out, len, count.saturating_mul(n), "out")?;
        let paths = sample_posterior_paths(&a.chain, count, seed)?;
        for (row, p) in out.chunks_mut(n.max(1)).zip(&paths) {
            write_path(p, row);
        }
        Ok(())
    })
}
