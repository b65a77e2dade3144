//! C ABI over the treedist library.
//!
//! The interface is a minimal handle-based wrapper: parse a Newick file
//! into an opaque tree set, then query distances by tree index. Every
//! entry point returns a status code; `td_last_error` retrieves a
//! human-readable message for the most recent failure on the calling
//! thread. All functions catch panics at the boundary and report them
//! as `TD_ERR_PANIC` instead of unwinding into foreign frames.
//!
//! The generated header lives in `include/treedist.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use treedist::geodesic::{geodesic_distance, Algorithm, GeoOptions, GeodesicError};
use treedist::splits::splits_of_tree;
use treedist::tree_io::{build_taxa_map, parse_newick_file};
use treedist::WeightedTree;

/// Success.
pub const TD_OK: i32 = 0;
/// Input could not be parsed into trees.
pub const TD_ERR_PARSE: i32 = 1;
/// Trees are over different leaf sets.
pub const TD_ERR_TAXA: i32 = 2;
/// Brute-force chain enumeration exceeded the cap.
pub const TD_ERR_CAP: i32 = 3;
/// Null pointer, bad index, bad algorithm id, or undersized buffer.
pub const TD_ERR_INVALID_ARG: i32 = 4;
/// An internal panic was caught at the boundary.
pub const TD_ERR_PANIC: i32 = 5;

/// Depth-first search over the lattice of closed sets.
pub const TD_ALG_DYNAMIC: i32 = 0;
/// Minimal-class branching with memoization (the CLI default).
pub const TD_ALG_DIVIDE: i32 = 1;
/// Exhaustive maximal-chain enumeration; bounded by the chain cap.
pub const TD_ALG_BRUTE: i32 = 2;

/// Opaque collection of parsed trees sharing one taxa map.
pub struct TdTreeSet {
    trees: Vec<WeightedTree>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> =
        RefCell::new(CString::new("").expect("empty string has no NUL"));
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL bytes removed");
    });
}

fn guard(body: impl FnOnce() -> i32) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal panic".to_string());
            set_error(&format!("internal panic: {message}"));
            TD_ERR_PANIC
        }
    }
}

fn algorithm_from(id: i32) -> Option<Algorithm> {
    match id {
        TD_ALG_DYNAMIC => Some(Algorithm::Dynamic),
        TD_ALG_DIVIDE => Some(Algorithm::Divide),
        TD_ALG_BRUTE => Some(Algorithm::Brute),
        _ => None,
    }
}

fn geodesic_code(err: &GeodesicError) -> i32 {
    match err {
        GeodesicError::TaxaMismatch => TD_ERR_TAXA,
        GeodesicError::ChainCapExceeded { .. } => TD_ERR_CAP,
        _ => TD_ERR_INVALID_ARG,
    }
}

/// Parses a Newick file (one tree per line) into a new tree set.
///
/// `default_length` is used for edges written without a length; pass a
/// negative or non-finite value to require explicit lengths. On success
/// writes the new handle to `out` and returns `TD_OK`; the handle must
/// be released with `td_treeset_free`.
///
/// # Safety
///
/// `text` must be a valid NUL-terminated string and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn td_treeset_parse(
    text: *const c_char,
    default_length: f64,
    out: *mut *mut TdTreeSet,
) -> i32 {
    guard(|| {
        if text.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TD_ERR_INVALID_ARG;
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("input is not valid UTF-8");
                return TD_ERR_PARSE;
            }
        };
        let default = (default_length.is_finite() && default_length >= 0.0)
            .then_some(default_length);
        let raws = match parse_newick_file(text, default) {
            Ok(r) => r,
            Err(err) => {
                set_error(&err.to_string());
                return TD_ERR_PARSE;
            }
        };
        let taxa = match build_taxa_map(&raws) {
            Ok(t) => Arc::new(t),
            Err(err) => {
                set_error(&err.to_string());
                return TD_ERR_TAXA;
            }
        };
        let mut trees = Vec::with_capacity(raws.len());
        for raw in &raws {
            match splits_of_tree(raw, &taxa) {
                Ok(tree) => trees.push(tree),
                Err(err) => {
                    set_error(&err.to_string());
                    return TD_ERR_PARSE;
                }
            }
        }
        unsafe { *out = Box::into_raw(Box::new(TdTreeSet { trees })) };
        TD_OK
    })
}

/// Releases a tree set. Passing NULL is a no-op.
///
/// # Safety
///
/// `set` must be a pointer returned by `td_treeset_parse` that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn td_treeset_free(set: *mut TdTreeSet) {
    if !set.is_null() {
        drop(unsafe { Box::from_raw(set) });
    }
}

/// Number of trees in the set, or -1 for NULL.
///
/// # Safety
///
/// `set` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn td_treeset_len(set: *const TdTreeSet) -> isize {
    if set.is_null() {
        return -1;
    }
    unsafe { &*set }.trees.len() as isize
}

/// Number of leaves shared by the trees, or -1 for NULL or an empty
/// set.
///
/// # Safety
///
/// `set` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn td_treeset_taxa_count(set: *const TdTreeSet) -> isize {
    if set.is_null() {
        return -1;
    }
    let set = unsafe { &*set };
    match set.trees.first() {
        Some(tree) => tree.n() as isize,
        None => -1,
    }
}

/// Geodesic distance between trees `i` and `j` of the set.
///
/// `algorithm` is one of the `TD_ALG_*` constants; `chain_cap` bounds
/// the brute-force enumeration and is ignored by the other algorithms.
/// Writes the distance to `out_distance` and returns `TD_OK`.
///
/// # Safety
///
/// `set` must be a live handle and `out_distance` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn td_distance(
    set: *const TdTreeSet,
    i: usize,
    j: usize,
    algorithm: i32,
    include_leaves: bool,
    chain_cap: u64,
    out_distance: *mut f64,
) -> i32 {
    guard(|| {
        if set.is_null() || out_distance.is_null() {
            set_error("null pointer argument");
            return TD_ERR_INVALID_ARG;
        }
        let set = unsafe { &*set };
        if i >= set.trees.len() || j >= set.trees.len() {
            set_error("tree index out of range");
            return TD_ERR_INVALID_ARG;
        }
        let Some(algorithm) = algorithm_from(algorithm) else {
            set_error("unknown algorithm id");
            return TD_ERR_INVALID_ARG;
        };
        let opts = GeoOptions {
            algorithm,
            include_leaves,
            chain_cap,
        };
        match geodesic_distance(&set.trees[i], &set.trees[j], &opts) {
            Ok(geo) => {
                unsafe { *out_distance = geo.distance };
                TD_OK
            }
            Err(err) => {
                set_error(&err.to_string());
                geodesic_code(&err)
            }
        }
    })
}

/// Full pairwise distance matrix, written row-major into `out`.
///
/// `out_len` must be at least `n * n` for `n` trees. The matrix is
/// symmetric with a zero diagonal.
///
/// # Safety
///
/// `set` must be a live handle and `out` must point to at least
/// `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn td_distance_matrix(
    set: *const TdTreeSet,
    algorithm: i32,
    include_leaves: bool,
    chain_cap: u64,
    out: *mut f64,
    out_len: usize,
) -> i32 {
    guard(|| {
        if set.is_null() || out.is_null() {
            set_error("null pointer argument");
            return TD_ERR_INVALID_ARG;
        }
        let set = unsafe { &*set };
        let n = set.trees.len();
        if out_len < n * n {
            set_error("output buffer is smaller than n * n");
            return TD_ERR_INVALID_ARG;
        }
        let Some(algorithm) = algorithm_from(algorithm) else {
            set_error("unknown algorithm id");
            return TD_ERR_INVALID_ARG;
        };
        let opts = GeoOptions {
            algorithm,
            include_leaves,
            chain_cap,
        };
        let out = unsafe { std::slice::from_raw_parts_mut(out, n * n) };
        for i in 0..n {
            out[i * n + i] = 0.0;
            for j in i + 1..n {
                match geodesic_distance(&set.trees[i], &set.trees[j], &opts) {
                    Ok(geo) => {
                        out[i * n + j] = geo.distance;
                        out[j * n + i] = geo.distance;
                    }
                    Err(err) => {
                        set_error(&err.to_string());
                        return geodesic_code(&err);
                    }
                }
            }
        }
        TD_OK
    })
}

/// Message for the most recent error on this thread.
///
/// The pointer stays valid until the next failing call from the same
/// thread. Never NULL; the message is empty when nothing failed yet.
#[no_mangle]
pub extern "C" fn td_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn td_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
