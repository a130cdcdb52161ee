//! C interface to the retrievability-audit library.
//!
//! Conventions, in the order a binding author needs them:
//!
//! - Every fallible call returns [`RaStatus`]; `RA_STATUS_OK` is zero. After
//!   a non-zero status, [`ra_last_error`] returns a human-readable message
//!   for the calling thread, valid until that thread's next failure.
//! - `ra_corpus_load` and `ra_index_build` hand out owned handles; release
//!   them with the matching `ra_*_free`. Freeing null is a no-op. Handles
//!   are immutable after construction, so sharing one across threads for
//!   reads is safe; freeing while another thread still uses it is not.
//! - Array outputs use a caller buffer plus capacity. When the buffer is
//!   too small the call writes nothing, stores the required capacity in the
//!   size out-parameter, and returns `RA_STATUS_BUFFER_TOO_SMALL`, so a
//!   zero-capacity probe call sizes the allocation.
//! - Scores, Gini values, and rank measures are bit-identical to what the
//!   `retaudit` CLI reports: both go through the same library.
//!
//! Panics never unwind across the boundary; they surface as
//! `RA_STATUS_INTERNAL` with the panic message in `ra_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use retaudit::analyze::Analyzer;
use retaudit::corpus::{ingest_corpus, Category, Corpus, CorpusError, CorpusFormat};
use retaudit::engine::{build_index, search, Bm25Params, EngineError, InvertedIndex};
use retaudit::inequality::{gini, lorenz, InequalityError};
use retaudit::rankcompare::{
    jaccard_topk, kendall_tau_scores, rbo, spearman_rho_scores, CompareError,
};

/// Default BM25 term-frequency saturation, matching the CLI's `--k1`.
pub const RA_DEFAULT_K1: f64 = 1.2;
/// Default BM25 length-normalization strength, matching the CLI's `--b`.
pub const RA_DEFAULT_B: f64 = 0.75;

/// Result of every fallible call. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The operating system reported an I/O failure.
    Io = 3,
    /// An input file exists but its contents are malformed.
    Parse = 4,
    /// An argument value is outside its documented domain.
    InvalidArgument = 5,
    /// A document ordinal or id does not exist in the index.
    UnknownDoc = 6,
    /// The caller buffer cannot hold the result; the size out-parameter
    /// holds the required capacity.
    BufferTooSmall = 7,
    /// A defect inside the library (including a caught panic).
    Internal = 8,
}

/// One retrieved document.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RaHit {
    /// Position in the result list, 1-based.
    pub rank: u32,
    /// Document ordinal; resolve to an id with [`ra_index_doc_id`].
    pub doc: u32,
    /// BM25 score, strictly positive.
    pub score: f64,
}

/// One Lorenz-curve point.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RaPoint {
    /// Fraction of the population, ascending from 0 to 1.
    pub population_share: f64,
    /// Fraction of the total value held by that population share.
    pub value_share: f64,
}

/// A loaded document collection. Opaque; create with [`ra_corpus_load`].
pub struct RaCorpus {
    corpus: Corpus,
}

/// A searchable index over one corpus slice. Opaque; create with
/// [`ra_index_build`].
pub struct RaIndex {
    index: InvertedIndex,
    analyzer: Analyzer,
}

// ---------------------------------------------------------------------------
// error reporting
// ---------------------------------------------------------------------------

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure {
    status: RaStatus,
    message: String,
}

impl Failure {
    fn new(status: RaStatus, message: impl Into<String>) -> Failure {
        Failure {
            status,
            message: message.into(),
        }
    }

    fn null(what: &str) -> Failure {
        Failure::new(RaStatus::NullPointer, format!("{what} is null"))
    }
}

impl From<CorpusError> for Failure {
    fn from(err: CorpusError) -> Failure {
        let status = match err {
            CorpusError::Io { .. } => RaStatus::Io,
            _ => RaStatus::Parse,
        };
        Failure::new(status, err.to_string())
    }
}

impl From<EngineError> for Failure {
    fn from(err: EngineError) -> Failure {
        let status = match err {
            EngineError::InvalidParams { .. } | EngineError::InvalidK => {
                RaStatus::InvalidArgument
            }
            EngineError::UnknownDocId(_) => RaStatus::UnknownDoc,
            EngineError::Io { .. } => RaStatus::Io,
            EngineError::BadFormat { .. } | EngineError::Version { .. } => RaStatus::Parse,
            EngineError::Pool { .. } => RaStatus::Internal,
        };
        Failure::new(status, err.to_string())
    }
}

impl From<InequalityError> for Failure {
    fn from(err: InequalityError) -> Failure {
        Failure::new(RaStatus::InvalidArgument, err.to_string())
    }
}

impl From<CompareError> for Failure {
    fn from(err: CompareError) -> Failure {
        Failure::new(RaStatus::InvalidArgument, err.to_string())
    }
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("nuls stripped");
    });
}

/// Runs an operation, converting failures and panics into status codes.
fn guarded(op: impl FnOnce() -> Result<(), Failure>) -> RaStatus {
    match catch_unwind(AssertUnwindSafe(op)) {
        Ok(Ok(())) => RaStatus::Ok,
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("internal panic: {message}"));
            RaStatus::Internal
        }
    }
}

// ---------------------------------------------------------------------------
// argument decoding
// ---------------------------------------------------------------------------

unsafe fn decode_str<'a>(what: &str, ptr: *const c_char) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|err| {
        Failure::new(RaStatus::InvalidUtf8, format!("{what} is not UTF-8: {err}"))
    })
}

unsafe fn decode_f64s<'a>(what: &str, ptr: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

unsafe fn decode_str_array<'a>(
    what: &str,
    ptr: *const *const c_char,
    len: usize,
) -> Result<Vec<&'a str>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    let slots = unsafe { std::slice::from_raw_parts(ptr, len) };
    slots
        .iter()
        .enumerate()
        .map(|(i, &s)| unsafe { decode_str(&format!("{what}[{i}]"), s) })
        .collect()
}

unsafe fn deref<'a, T>(what: &str, ptr: *const T) -> Result<&'a T, Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    Ok(unsafe { &*ptr })
}

unsafe fn store<T>(what: &str, ptr: *mut T, value: T) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(Failure::null(what));
    }
    unsafe { ptr.write(value) };
    Ok(())
}

// ---------------------------------------------------------------------------
// library metadata
// ---------------------------------------------------------------------------

/// The library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn ra_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the calling thread's most recent failure, or an empty string
/// if nothing failed yet. The pointer stays valid until this thread's next
/// failing call.
#[no_mangle]
pub extern "C" fn ra_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

// ---------------------------------------------------------------------------
// corpus handles
// ---------------------------------------------------------------------------

/// Loads a typed corpus from `path` (`.jsonl` or `.tsv`, decided by
/// extension) and stores an owned handle in `*out`.
///
/// # Safety
/// `path` must point to a nul-terminated string and `out` to writable
/// storage for one pointer. On success the caller owns `*out` and must
/// release it with [`ra_corpus_free`]; on failure `*out` is untouched.
#[no_mangle]
pub unsafe extern "C" fn ra_corpus_load(
    path: *const c_char,
    out: *mut *mut RaCorpus,
) -> RaStatus {
    guarded(|| {
        let path = Path::new(unsafe { decode_str("path", path)? });
        let format = CorpusFormat::from_path(path).ok_or_else(|| {
            Failure::new(
                RaStatus::InvalidArgument,
                format!("{}: expected a .jsonl or .tsv corpus file", path.display()),
            )
        })?;
        let (corpus, _report) = ingest_corpus(path, format)?;
        let handle = Box::into_raw(Box::new(RaCorpus { corpus }));
        unsafe { store("out", out, handle) }
    })
}

/// Releases a corpus handle. Null is a no-op.
///
/// # Safety
/// `corpus` must be a pointer from [`ra_corpus_load`] that has not been
/// freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ra_corpus_free(corpus: *mut RaCorpus) {
    if !corpus.is_null() {
        drop(unsafe { Box::from_raw(corpus) });
    }
}

/// Number of documents in the corpus; 0 for a null handle.
///
/// # Safety
/// `corpus` must be a live handle from [`ra_corpus_load`], or null.
#[no_mangle]
pub unsafe extern "C" fn ra_corpus_doc_count(corpus: *const RaCorpus) -> u64 {
    if corpus.is_null() {
        return 0;
    }
    unsafe { &*corpus }.corpus.len() as u64
}

// ---------------------------------------------------------------------------
// index handles
// ---------------------------------------------------------------------------

/// Builds a BM25 index over `corpus` and stores an owned handle in `*out`.
/// `category` restricts the index to one document type (`"publication"`,
/// `"dataset"`, `"variable"`, or any custom label); null indexes everything.
///
/// # Safety
/// `corpus` must be a live handle from [`ra_corpus_load`]; `category` must
/// be null or a nul-terminated string; `out` must be writable storage for
/// one pointer. On success the caller owns `*out` and must release it with
/// [`ra_index_free`].
#[no_mangle]
pub unsafe extern "C" fn ra_index_build(
    corpus: *const RaCorpus,
    category: *const c_char,
    out: *mut *mut RaIndex,
) -> RaStatus {
    guarded(|| {
        let handle = unsafe { deref("corpus", corpus)? };
        let filter = if category.is_null() {
            None
        } else {
            Some(Category::parse(unsafe { decode_str("category", category)? }))
        };
        let analyzer = Analyzer::new();
        let index = build_index(&handle.corpus, &analyzer, filter.as_ref());
        let handle = Box::into_raw(Box::new(RaIndex { index, analyzer }));
        unsafe { store("out", out, handle) }
    })
}

/// Releases an index handle. Null is a no-op.
///
/// # Safety
/// `index` must be a pointer from [`ra_index_build`] that has not been
/// freed, or null.
#[no_mangle]
pub unsafe extern "C" fn ra_index_free(index: *mut RaIndex) {
    if !index.is_null() {
        drop(unsafe { Box::from_raw(index) });
    }
}

/// Number of indexed documents; 0 for a null handle.
///
/// # Safety
/// `index` must be a live handle from [`ra_index_build`], or null.
#[no_mangle]
pub unsafe extern "C" fn ra_index_doc_count(index: *const RaIndex) -> u64 {
    if index.is_null() {
        return 0;
    }
    unsafe { &*index }.index.doc_count() as u64
}

/// Mean indexed document length in tokens; 0 for a null handle or an empty
/// index.
///
/// # Safety
/// `index` must be a live handle from [`ra_index_build`], or null.
#[no_mangle]
pub unsafe extern "C" fn ra_index_avg_doc_length(index: *const RaIndex) -> f64 {
    if index.is_null() {
        return 0.0;
    }
    unsafe { &*index }.index.avg_doc_length()
}

/// Runs one BM25 query and fills `hits` with up to `depth` results, best
/// first. `query` is analyzed exactly like document text (lowercased,
/// split on non-alphanumerics, stopwords dropped). `hit_count` receives the
/// number of hits written; if more than `capacity` hits were found, nothing
/// is written, `*hit_count` is the required capacity, and the call returns
/// `RA_STATUS_BUFFER_TOO_SMALL`. Passing `capacity` = `depth` never trips
/// that. Pass [`RA_DEFAULT_K1`]/[`RA_DEFAULT_B`] for standard scoring.
///
/// # Safety
/// `index` must be a live handle from [`ra_index_build`]; `query` must be a
/// nul-terminated string; `hits` must point to `capacity` writable slots
/// (null is allowed when `capacity` is 0); `hit_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_index_search(
    index: *const RaIndex,
    query: *const c_char,
    k1: f64,
    b: f64,
    depth: usize,
    hits: *mut RaHit,
    capacity: usize,
    hit_count: *mut usize,
) -> RaStatus {
    guarded(|| {
        let handle = unsafe { deref("index", index)? };
        let query = unsafe { decode_str("query", query)? };
        if capacity > 0 && hits.is_null() {
            return Err(Failure::null("hits"));
        }
        let params = Bm25Params::new(k1, b)?;
        let terms = handle.analyzer.analyze(query);
        let found = search(&handle.index, params, &terms, depth)?;
        if found.len() > capacity {
            unsafe { store("hit_count", hit_count, found.len())? };
            return Err(Failure::new(
                RaStatus::BufferTooSmall,
                format!("{} hits found but capacity is {capacity}", found.len()),
            ));
        }
        let ids = handle.index.doc_ids();
        for (slot, hit) in (0..).zip(&found) {
            let ordinal = ids
                .binary_search(&hit.doc_id)
                .expect("hit ids come from the index");
            let doc = u32::try_from(ordinal).map_err(|_| {
                Failure::new(
                    RaStatus::InvalidArgument,
                    "index does not fit 32-bit document ordinals",
                )
            })?;
            unsafe {
                hits.add(slot).write(RaHit {
                    rank: hit.rank,
                    doc,
                    score: hit.score,
                });
            }
        }
        unsafe { store("hit_count", hit_count, found.len()) }
    })
}

/// Copies the id of document `ordinal` into `buf` as a nul-terminated
/// string. `written` receives the bytes written including the nul; when
/// `capacity` is too small, nothing is written, `*written` is the required
/// capacity, and the call returns `RA_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `index` must be a live handle from [`ra_index_build`]; `buf` must point
/// to `capacity` writable bytes (null is allowed when `capacity` is 0);
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_index_doc_id(
    index: *const RaIndex,
    ordinal: u32,
    buf: *mut c_char,
    capacity: usize,
    written: *mut usize,
) -> RaStatus {
    guarded(|| {
        let handle = unsafe { deref("index", index)? };
        let ids = handle.index.doc_ids();
        let id = ids.get(ordinal as usize).ok_or_else(|| {
            Failure::new(
                RaStatus::UnknownDoc,
                format!("ordinal {ordinal} is out of range (doc count {})", ids.len()),
            )
        })?;
        let required = id.len() + 1;
        if capacity < required {
            unsafe { store("written", written, required)? };
            return Err(Failure::new(
                RaStatus::BufferTooSmall,
                format!("doc id needs {required} bytes but capacity is {capacity}"),
            ));
        }
        if buf.is_null() {
            return Err(Failure::null("buf"));
        }
        unsafe {
            std::ptr::copy_nonoverlapping(id.as_ptr(), buf.cast(), id.len());
            buf.add(id.len()).write(0);
            store("written", written, required)
        }
    })
}

// ---------------------------------------------------------------------------
// inequality measures
// ---------------------------------------------------------------------------

/// Gini coefficient of `len` nonnegative values with a positive sum, stored
/// in `*out`.
///
/// # Safety
/// `values` must point to `len` readable doubles (null is allowed when
/// `len` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_gini(values: *const f64, len: usize, out: *mut f64) -> RaStatus {
    guarded(|| {
        let values = unsafe { decode_f64s("values", values, len)? };
        let g = gini(values)?;
        unsafe { store("out", out, g) }
    })
}

/// Lorenz curve of `len` nonnegative values with a positive sum: `len + 1`
/// points from (0, 0) to (1, 1). `written` receives the number of points
/// written; when `capacity` is too small, nothing is written, `*written` is
/// the required capacity, and the call returns
/// `RA_STATUS_BUFFER_TOO_SMALL`.
///
/// # Safety
/// `values` must point to `len` readable doubles; `points` must point to
/// `capacity` writable slots (null is allowed when `capacity` is 0);
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_lorenz(
    values: *const f64,
    len: usize,
    points: *mut RaPoint,
    capacity: usize,
    written: *mut usize,
) -> RaStatus {
    guarded(|| {
        let values = unsafe { decode_f64s("values", values, len)? };
        let curve = lorenz(values)?;
        let required = curve.points.len();
        if capacity < required {
            unsafe { store("written", written, required)? };
            return Err(Failure::new(
                RaStatus::BufferTooSmall,
                format!("curve needs {required} points but capacity is {capacity}"),
            ));
        }
        if points.is_null() {
            return Err(Failure::null("points"));
        }
        for (slot, &(x, y)) in (0..).zip(&curve.points) {
            unsafe {
                points.add(slot).write(RaPoint {
                    population_share: x,
                    value_share: y,
                });
            }
        }
        unsafe { store("written", written, required) }
    })
}

// ---------------------------------------------------------------------------
// rank agreement
// ---------------------------------------------------------------------------

/// Kendall's τ-b between two paired score vectors of length `len` (ties
/// handled), stored in `*out`. Needs `len` ≥ 2 and variation on both sides.
///
/// # Safety
/// `xs` and `ys` must each point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ra_kendall_tau(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out: *mut f64,
) -> RaStatus {
    guarded(|| {
        let xs = unsafe { decode_f64s("xs", xs, len)? };
        let ys = unsafe { decode_f64s("ys", ys, len)? };
        let tau = kendall_tau_scores(xs, ys)?;
        unsafe { store("out", out, tau) }
    })
}

/// Spearman's ρ between two paired score vectors of length `len` (average
/// ranks for ties), stored in `*out`. Needs `len` ≥ 2 and variation on both
/// sides.
///
/// # Safety
/// `xs` and `ys` must each point to `len` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ra_spearman_rho(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out: *mut f64,
) -> RaStatus {
    guarded(|| {
        let xs = unsafe { decode_f64s("xs", xs, len)? };
        let ys = unsafe { decode_f64s("ys", ys, len)? };
        let rho = spearman_rho_scores(xs, ys)?;
        unsafe { store("out", out, rho) }
    })
}

/// Rank-biased overlap of two ranked id lists at persistence `p` (strictly
/// between 0 and 1), truncated to the longer list's depth and normalized so
/// identical lists score exactly 1. Stored in `*out`.
///
/// # Safety
/// `left` and `right` must each point to an array of nul-terminated strings
/// of the stated length (null is allowed for a zero-length list); `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_rbo(
    left: *const *const c_char,
    left_len: usize,
    right: *const *const c_char,
    right_len: usize,
    p: f64,
    out: *mut f64,
) -> RaStatus {
    guarded(|| {
        let left = unsafe { decode_str_array("left", left, left_len)? };
        let right = unsafe { decode_str_array("right", right, right_len)? };
        let value = rbo(&left, &right, p, None)?;
        unsafe { store("out", out, value) }
    })
}

/// Jaccard overlap of the top `k` entries of two ranked id lists, stored in
/// `*out`. Lists shorter than `k` are used whole.
///
/// # Safety
/// `left` and `right` must each point to an array of nul-terminated strings
/// of the stated length (null is allowed for a zero-length list); `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn ra_jaccard_topk(
    left: *const *const c_char,
    left_len: usize,
    right: *const *const c_char,
    right_len: usize,
    k: usize,
    out: *mut f64,
) -> RaStatus {
    guarded(|| {
        let left = unsafe { decode_str_array("left", left, left_len)? };
        let right = unsafe { decode_str_array("right", right, right_len)? };
        let value = jaccard_topk(&left, &right, k)?;
        unsafe { store("out", out, value) }
    })
}
