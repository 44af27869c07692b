//! C ABI over `halluc-core`.
//!
//! Every fallible call returns a [`HallucStatus`]; on failure the message is
//! kept per thread and read with [`halluc_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through out-pointers are owned by the caller and freed with
//! [`halluc_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use libc::{c_char, size_t};

use halluc_core::corpus::{parse_annotation_line, serialize_annotation_line, LabeledSeq, TokenSeq};
use halluc_core::eval::{fleiss_kappa, sentence_score_prob, sentence_score_ratio, spearman, PrfCounts, RatingMatrix};
use halluc_core::labeling::{assign_labels, edit_script};
use halluc_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HallucStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed input, mismatched lengths, out-of-range index.
    InvalidInput = 3,
    /// The value is undefined for this input (e.g. constant ranks).
    Degenerate = 4,
    Remote = 5,
    Invariant = 6,
    Panic = 7,
}

/// Annotated token sequence.
pub struct HallucLabeledSeq {
    inner: LabeledSeq,
}

/// Running token-level precision/recall counts.
pub struct HallucPrf {
    counts: PrfCounts,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HallucPrfResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HallucStatus {
    match e {
        Error::Degenerate(_) => HallucStatus::Degenerate,
        Error::Invariant(_) => HallucStatus::Invariant,
        e if e.is_remote() => HallucStatus::Remote,
        _ => HallucStatus::InvalidInput,
    }
}

struct Fail(HallucStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> HallucStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HallucStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside halluc".into());
            HallucStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(HallucStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(HallucStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: size_t, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

fn to_c_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(HallucStatus::Invariant, "string contains NUL".into()))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn halluc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn halluc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn halluc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a `word[0] word[1] ...` line.
///
/// # Safety
/// `line` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_parse(
    line: *const c_char,
    out: *mut *mut HallucLabeledSeq,
) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let inner = parse_annotation_line(str_arg(line, "line")?)?;
        *out = Box::into_raw(Box::new(HallucLabeledSeq { inner }));
        Ok(())
    })
}

/// Labels each token of `hallucinated` against the whitespace-tokenized
/// `base` sentence.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_assign_labels(
    hallucinated: *const c_char,
    base: *const c_char,
    out: *mut *mut HallucLabeledSeq,
) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let h = TokenSeq::from_whitespace(str_arg(hallucinated, "hallucinated")?)?;
        let b = TokenSeq::from_whitespace(str_arg(base, "base")?)?;
        let inner = assign_labels(&h, &b)?;
        *out = Box::into_raw(Box::new(HallucLabeledSeq { inner }));
        Ok(())
    })
}

/// # Safety
/// `seq` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_free(seq: *mut HallucLabeledSeq) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

/// Number of tokens, 0 for NULL.
///
/// # Safety
/// `seq` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_len(seq: *const HallucLabeledSeq) -> size_t {
    seq.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the labels into `buf`, which must hold `halluc_labeled_seq_len`
/// bytes.
///
/// # Safety
/// `seq` must be a live handle; `buf` must have room for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_labels(
    seq: *const HallucLabeledSeq,
    buf: *mut u8,
    cap: size_t,
) -> HallucStatus {
    guard(|| {
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        let labels = seq.inner.labels();
        if cap < labels.len() {
            return Err(Fail(
                HallucStatus::InvalidInput,
                format!("buffer holds {cap} labels, need {}", labels.len()),
            ));
        }
        if !labels.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(labels.as_ptr(), buf, labels.len());
        }
        Ok(())
    })
}

/// Token at `index` as a new string.
///
/// # Safety
/// `seq` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_token(
    seq: *const HallucLabeledSeq,
    index: size_t,
    out: *mut *mut c_char,
) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        let tok = seq.inner.tokens().get(index).ok_or_else(|| {
            Fail(
                HallucStatus::InvalidInput,
                format!("token index {index} out of range for length {}", seq.inner.len()),
            )
        })?;
        *out = to_c_string(tok.clone())?;
        Ok(())
    })
}

/// Serializes back to the `word[label]` line format.
///
/// # Safety
/// `seq` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_labeled_seq_serialize(
    seq: *const HallucLabeledSeq,
    out: *mut *mut c_char,
) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let seq = seq.as_ref().ok_or_else(|| null("seq"))?;
        *out = to_c_string(serialize_annotation_line(&seq.inner)?)?;
        Ok(())
    })
}

/// Unit-cost token edit distance between two whitespace-tokenized strings.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_edit_distance(a: *const c_char, b: *const c_char, out: *mut size_t) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let a = TokenSeq::from_whitespace(str_arg(a, "a")?)?;
        let b = TokenSeq::from_whitespace(str_arg(b, "b")?)?;
        *out = edit_script(&a, &b).total_cost;
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn halluc_prf_new() -> *mut HallucPrf {
    Box::into_raw(Box::new(HallucPrf {
        counts: PrfCounts::default(),
    }))
}

/// # Safety
/// `prf` must come from `halluc_prf_new` or be NULL.
#[no_mangle]
pub unsafe extern "C" fn halluc_prf_free(prf: *mut HallucPrf) {
    if !prf.is_null() {
        drop(Box::from_raw(prf));
    }
}

/// Adds one sentence of gold and predicted 0/1 labels.
///
/// # Safety
/// `prf` must be a live handle; `gold` and `pred` must point to `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn halluc_prf_add(
    prf: *mut HallucPrf,
    gold: *const u8,
    pred: *const u8,
    len: size_t,
) -> HallucStatus {
    guard(|| {
        let prf = out_arg(prf, "prf")?;
        let gold = slice_arg(gold, len, "gold")?;
        let pred = slice_arg(pred, len, "pred")?;
        prf.counts.add(gold, pred)?;
        Ok(())
    })
}

/// # Safety
/// `prf` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_prf_result(prf: *const HallucPrf, out: *mut HallucPrfResult) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let c = prf.as_ref().ok_or_else(|| null("prf"))?.counts;
        let r = c.finish();
        *out = HallucPrfResult {
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
            tp: c.tp,
            fp: c.fp,
            fn_: c.fn_,
            precision_undefined: r.precision_undefined,
            recall_undefined: r.recall_undefined,
        };
        Ok(())
    })
}

/// Spearman rank correlation with average ranks for ties.
///
/// # Safety
/// `x` and `y` must point to `n` doubles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_spearman(x: *const f64, y: *const f64, n: size_t, out: *mut f64) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = spearman(slice_arg(x, n, "x")?, slice_arg(y, n, "y")?)?;
        Ok(())
    })
}

/// Fleiss' kappa from a row-major `items` x `categories` count matrix.
///
/// # Safety
/// `counts` must point to `items * categories` values; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_fleiss_kappa(
    counts: *const u32,
    items: size_t,
    categories: size_t,
    out: *mut f64,
) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let total = items
            .checked_mul(categories)
            .ok_or_else(|| Fail(HallucStatus::InvalidInput, "matrix size overflows".into()))?;
        let flat = slice_arg(counts, total, "counts")?;
        if categories == 0 {
            return Err(Fail(HallucStatus::InvalidInput, "no categories".into()));
        }
        let rows = flat.chunks(categories).map(<[u32]>::to_vec).collect();
        *out = fleiss_kappa(&RatingMatrix::new(rows)?)?;
        Ok(())
    })
}

/// Mean predicted hallucination probability of a sentence.
///
/// # Safety
/// `probs` must point to `n` doubles; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_sentence_score_prob(probs: *const f64, n: size_t, out: *mut f64) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = sentence_score_prob(slice_arg(probs, n, "probs")?)?;
        Ok(())
    })
}

/// Fraction of tokens labeled hallucinated.
///
/// # Safety
/// `labels` must point to `n` bytes; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn halluc_sentence_score_ratio(labels: *const u8, n: size_t, out: *mut f64) -> HallucStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = sentence_score_ratio(slice_arg(labels, n, "labels")?)?;
        Ok(())
    })
}
