//! C interface to the zforce library.
//!
//! Graphs and models are opaque handles created and released through this
//! API. Every fallible call returns a [`ZfStatus`]; on failure a message is
//! available from [`zf_last_error`] on the same thread. Output buffers are
//! caller-owned: when one is too small the call returns
//! `ZF_STATUS_BUFFER_TOO_SMALL` and reports the required length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::time::Duration;

use zforce::gnn::ModelParams;
use zforce::numeric_verify::{kalman_check, ValueRange, VerifyError};
use zforce::pattern_graph::{EdgeClassPolicy, InputSet, PatternGraph};
use zforce::solvers::{exact_minimum, greedy_degree, ExactBudget, SolveResult};
use zforce::trainer::{solve_rl, train, TrainConfig, TrainError};
use zforce::zero_forcing::{derived_set, is_zfs};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    BudgetExceeded = 3,
    TrainingAborted = 4,
    BufferTooSmall = 5,
    Io = 6,
    Internal = 7,
}

/// A pattern graph.
pub struct ZfGraph(PatternGraph);

/// Trained actor and critic parameters.
pub struct ZfModel(ModelParams);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

type Failure = (ZfStatus, String);

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZfStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ZfStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ZfStatus::Internal
        }
    }
}

fn invalid(e: impl ToString) -> Failure {
    (ZfStatus::InvalidInput, e.to_string())
}

fn null(what: &str) -> Failure {
    (ZfStatus::NullPointer, format!("{what} is null"))
}

fn train_failure(e: TrainError) -> Failure {
    match e {
        TrainError::NonFinite { .. } => (ZfStatus::TrainingAborted, e.to_string()),
        other => invalid(other),
    }
}

unsafe fn graph<'a>(g: *const ZfGraph) -> Result<&'a PatternGraph, Failure> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

unsafe fn utf8<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn inputs(g: &PatternGraph, nodes: *const usize, len: usize) -> Result<InputSet, Failure> {
    let slice = if len == 0 {
        &[][..]
    } else if nodes.is_null() {
        return Err(null("inputs"));
    } else {
        std::slice::from_raw_parts(nodes, len)
    };
    let s = InputSet::new(slice.to_vec()).map_err(invalid)?;
    g.check_inputs(&s).map_err(invalid)?;
    Ok(s)
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn write_set(r: &SolveResult, out: *mut usize, cap: usize, out_len: *mut usize) -> Result<(), Failure> {
    let nodes = r.inputs.nodes();
    write_out(out_len, nodes.len(), "out_len")?;
    if cap < nodes.len() {
        return Err((
            ZfStatus::BufferTooSmall,
            format!("buffer holds {cap} ids, {} needed", nodes.len()),
        ));
    }
    if !nodes.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(nodes.as_ptr(), out, nodes.len());
    }
    Ok(())
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn zf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

unsafe fn store_graph(g: PatternGraph, out: *mut *mut ZfGraph) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(ZfGraph(g))), "out")
}

/// Parses an edge list (`n <count>` header, `src dst class` lines).
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_from_edge_list(src: *const c_char, out: *mut *mut ZfGraph) -> ZfStatus {
    guard(|| {
        let t = utf8(src, "src")?;
        store_graph(PatternGraph::from_edge_list(t).map_err(invalid)?, out)
    })
}

/// Parses a pattern matrix in CSV form with tokens `0`, `*`, `?`.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_from_pattern_csv(src: *const c_char, out: *mut *mut ZfGraph) -> ZfStatus {
    guard(|| {
        let t = utf8(src, "src")?;
        store_graph(PatternGraph::from_pattern_csv(t).map_err(invalid)?, out)
    })
}

/// Random directed graph: each ordered pair is an edge with probability
/// `p`, drawn as `?` with probability `arbitrary_fraction`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_generate_er(
    n: usize,
    p: f64,
    seed: u64,
    arbitrary_fraction: f64,
    out: *mut *mut ZfGraph,
) -> ZfStatus {
    guard(|| {
        let policy = EdgeClassPolicy { arbitrary_fraction };
        store_graph(PatternGraph::generate_er(n, p, seed, policy).map_err(invalid)?, out)
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_free(g: *mut ZfGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count, 0 for a null graph.
///
/// # Safety
/// `g` must be null or a live graph.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_node_count(g: *const ZfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.node_count())
}

/// Edge count including self-loops, 0 for a null graph.
///
/// # Safety
/// `g` must be null or a live graph.
#[no_mangle]
pub unsafe extern "C" fn zf_graph_edge_count(g: *const ZfGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Whether `nodes` colors both the graph and its modified copy.
///
/// # Safety
/// `nodes` must point to `len` ids (may be null when `len` is 0).
#[no_mangle]
pub unsafe extern "C" fn zf_is_zfs(g: *const ZfGraph, nodes: *const usize, len: usize, out: *mut bool) -> ZfStatus {
    guard(|| {
        let g = graph(g)?;
        let s = inputs(g, nodes, len)?;
        write_out(out, is_zfs(g, &s), "out")
    })
}

/// Derived set of `nodes` in the graph: `black[v]` is set to 1 for black
/// nodes and 0 otherwise. `black_len` must be at least the node count.
///
/// # Safety
/// `nodes` must point to `len` ids and `black` to `black_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn zf_derived_set(
    g: *const ZfGraph,
    nodes: *const usize,
    len: usize,
    black: *mut u8,
    black_len: usize,
) -> ZfStatus {
    guard(|| {
        let g = graph(g)?;
        let s = inputs(g, nodes, len)?;
        let n = g.node_count();
        if black_len < n {
            return Err((ZfStatus::BufferTooSmall, format!("buffer holds {black_len}, {n} needed")));
        }
        if n > 0 && black.is_null() {
            return Err(null("black"));
        }
        let colors = derived_set(g, &s).final_colors;
        for v in 0..n {
            black.add(v).write(colors.is_black(v) as u8);
        }
        Ok(())
    })
}

/// Degree-based greedy input set. The set size is always written to
/// `out_len`; ids are copied when `cap` is large enough.
///
/// # Safety
/// `out` must point to `cap` writable ids and `out_len` be valid.
#[no_mangle]
pub unsafe extern "C" fn zf_solve_greedy(
    g: *const ZfGraph,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> ZfStatus {
    guard(|| {
        let r = greedy_degree(graph(g)?);
        write_set(&r, out, cap, out_len)
    })
}

/// Minimum input set by exhaustive search, within a node-count ceiling
/// and a time limit.
///
/// # Safety
/// As for [`zf_solve_greedy`].
#[no_mangle]
pub unsafe extern "C" fn zf_solve_exact(
    g: *const ZfGraph,
    max_nodes: usize,
    time_limit_secs: f64,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> ZfStatus {
    guard(|| {
        let time = Duration::try_from_secs_f64(time_limit_secs).map_err(invalid)?;
        let r = exact_minimum(graph(g)?, ExactBudget { max_nodes, time })
            .map_err(|e| (ZfStatus::BudgetExceeded, e.to_string()))?;
        write_set(&r, out, cap, out_len)
    })
}

unsafe fn store_model(m: ModelParams, out: *mut *mut ZfModel) -> Result<(), Failure> {
    write_out(out, Box::into_raw(Box::new(ZfModel(m))), "out")
}

/// Loads a checkpoint file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn zf_model_load(path: *const c_char, out: *mut *mut ZfModel) -> ZfStatus {
    guard(|| {
        let p = utf8(path, "path")?;
        let m = ModelParams::load(Path::new(p)).map_err(|e| match e {
            zforce::gnn::GnnError::Io(_) => (ZfStatus::Io, e.to_string()),
            other => invalid(other),
        })?;
        store_model(m, out)
    })
}

/// Writes a checkpoint file.
///
/// # Safety
/// `m` must be a live model and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn zf_model_save(m: *const ZfModel, path: *const c_char) -> ZfStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        let p = utf8(path, "path")?;
        m.0.save(Path::new(p)).map_err(|e| (ZfStatus::Io, e.to_string()))
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `m` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn zf_model_free(m: *mut ZfModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Trains a model on `g`. `config_toml` may be null for the defaults. The
/// returned model is the one that produced the best set; `best_z` receives
/// its size, or 0 when no valid set was found.
///
/// # Safety
/// `config_toml` must be null or NUL-terminated; `out` and `best_z` valid.
#[no_mangle]
pub unsafe extern "C" fn zf_train(
    g: *const ZfGraph,
    config_toml: *const c_char,
    out: *mut *mut ZfModel,
    best_z: *mut usize,
) -> ZfStatus {
    guard(|| {
        let g = graph(g)?;
        let cfg = if config_toml.is_null() {
            TrainConfig::default()
        } else {
            TrainConfig::from_toml(utf8(config_toml, "config_toml")?).map_err(invalid)?
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let report = train(g, &cfg).map_err(train_failure)?;
        write_out(best_z, report.best_size().unwrap_or(0), "best_z")?;
        let params = report.best_params.unwrap_or(report.final_params);
        store_model(params, out)
    })
}

/// Greedy rollout of a trained policy.
///
/// # Safety
/// As for [`zf_solve_greedy`]; `m` must be a live model.
#[no_mangle]
pub unsafe extern "C" fn zf_solve_rl(
    g: *const ZfGraph,
    m: *const ZfModel,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> ZfStatus {
    guard(|| {
        let g = graph(g)?;
        let m = m.as_ref().ok_or_else(|| null("model"))?;
        let r = solve_rl(g, &m.0).map_err(train_failure)?;
        write_set(&r, out, cap, out_len)
    })
}

/// Samples `trials` integer realizations with weights in `[lo, hi]` and
/// counts those whose controllability matrix has full rank.
///
/// # Safety
/// `nodes` must point to `len` ids; output pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn zf_kalman_check(
    g: *const ZfGraph,
    nodes: *const usize,
    len: usize,
    trials: usize,
    seed: u64,
    lo: i64,
    hi: i64,
    full_rank_count: *mut usize,
    min_rank: *mut usize,
) -> ZfStatus {
    guard(|| {
        let g = graph(g)?;
        let s = inputs(g, nodes, len)?;
        let r = kalman_check(g, &s, trials, seed, ValueRange { lo, hi }).map_err(|e| match e {
            VerifyError::TooLarge { .. } => (ZfStatus::BudgetExceeded, e.to_string()),
            other => invalid(other),
        })?;
        write_out(full_rank_count, r.full_rank_count, "full_rank_count")?;
        write_out(min_rank, r.min_rank, "min_rank")
    })
}
