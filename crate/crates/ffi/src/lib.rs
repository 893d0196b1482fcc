//! C interface to discoqad: sentence and corpus metrics, the edit rate,
//! the lexical cohesion ratio and MAP / MBR / reranking selection.
//!
//! Conventions:
//! - Every fallible function returns a [`DqStatus`] and writes its result
//!   through an out-pointer; the message of the last failure is read with
//!   [`dq_last_error`].
//! - Strings are NUL-terminated UTF-8. Strings returned by the library are
//!   released with [`dq_string_free`].
//! - `DqRegistry` and `DqPool` are opaque handles with matching `_free`
//!   functions. A registry may be shared between threads; a pool may not be
//!   mutated concurrently.

mod error;

use std::ffi::{c_char, CStr, CString};
use std::panic::AssertUnwindSafe;
use std::ptr;

use discoqad::cohesion::{lexical_cohesion_ratio, register_utilities, ContentWordFilter, UtilityRegistry};
use discoqad::decoding::{map_select, mbr_select, rerank_select, SelectionResult, UtilityContext};
use discoqad::metrics::{chrf, corpus_bleu, corpus_chrf, sentence_bleu, ter_edit_rate, MetricConfig};
use discoqad::model::{Candidate, CandidatePool};

pub use error::{dq_last_error, DqStatus};
use error::{guard, Failure};

/// Edit operations turning a hypothesis into a baseline, with the rate
/// `(insertions + deletions + substitutions + shifts) / reference_length`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DqEditRate {
    pub insertions: usize,
    pub deletions: usize,
    pub substitutions: usize,
    pub shifts: usize,
    pub reference_length: usize,
    pub rate: f64,
}

pub struct DqRegistry {
    inner: UtilityRegistry,
}

pub struct DqPool {
    inner: CandidatePool,
}

fn null(what: &str) -> Failure {
    Failure(DqStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(DqStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn texts<'a>(p: *const *const c_char, n: usize, what: &str) -> Result<Vec<&'a str>, Failure> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(null(what));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, &s)| text(s, &format!("{what}[{i}]")))
        .collect()
}

unsafe fn write<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn stopwords(language: &str) -> Result<ContentWordFilter, Failure> {
    ContentWordFilter::builtin(language).ok_or_else(|| {
        Failure(
            DqStatus::InvalidArgument,
            format!(
                "no built-in stopword list for `{language}`; available: {}",
                ContentWordFilter::builtin_languages().collect::<Vec<_>>().join(", ")
            ),
        )
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn dq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Sentence BLEU (effective order, exponential smoothing), in `[0, 100]`.
///
/// # Safety
/// `hyp` and `ref_` must be valid C strings, `out` a writable `double`.
#[no_mangle]
pub unsafe extern "C" fn dq_sentence_bleu(hyp: *const c_char, ref_: *const c_char, out: *mut f64) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let score = sentence_bleu(text(hyp, "hyp")?, text(ref_, "ref")?, &MetricConfig::default()).score;
        write(out, score)
    }))
}

/// Sentence chrF, in `[0, 100]`.
///
/// # Safety
/// As [`dq_sentence_bleu`].
#[no_mangle]
pub unsafe extern "C" fn dq_sentence_chrf(hyp: *const c_char, ref_: *const c_char, out: *mut f64) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let score = chrf(text(hyp, "hyp")?, text(ref_, "ref")?, &MetricConfig::default()).score;
        write(out, score)
    }))
}

/// Corpus BLEU over `n` aligned hypothesis/reference pairs.
///
/// # Safety
/// `hyps` and `refs` must point to `n` valid C strings each.
#[no_mangle]
pub unsafe extern "C" fn dq_corpus_bleu(
    hyps: *const *const c_char,
    refs: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let score = corpus_bleu(&texts(hyps, n, "hyps")?, &texts(refs, n, "refs")?, &MetricConfig::default())?;
        write(out, score)
    }))
}

/// Corpus chrF over `n` aligned hypothesis/reference pairs.
///
/// # Safety
/// As [`dq_corpus_bleu`].
#[no_mangle]
pub unsafe extern "C" fn dq_corpus_chrf(
    hyps: *const *const c_char,
    refs: *const *const c_char,
    n: usize,
    out: *mut f64,
) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let score = corpus_chrf(&texts(hyps, n, "hyps")?, &texts(refs, n, "refs")?, &MetricConfig::default())?;
        write(out, score)
    }))
}

/// Edit rate of `hyp` against `baseline`. Fails on an empty baseline.
///
/// # Safety
/// `hyp` and `baseline` must be valid C strings, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_edit_rate(hyp: *const c_char, baseline: *const c_char, out: *mut DqEditRate) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let b = ter_edit_rate(text(hyp, "hyp")?, text(baseline, "baseline")?, &MetricConfig::default())?;
        write(
            out,
            DqEditRate {
                insertions: b.insertions,
                deletions: b.deletions,
                substitutions: b.substitutions,
                shifts: b.shifts,
                reference_length: b.reference_length,
                rate: b.rate,
            },
        )
    }))
}

/// Lexical cohesion ratio of `text_`. `language` selects a built-in
/// stopword list; NULL treats every token as a content word.
///
/// # Safety
/// `text_` must be a valid C string, `language` NULL or a valid C string.
#[no_mangle]
pub unsafe extern "C" fn dq_lc_ratio(text_: *const c_char, language: *const c_char, out: *mut f64) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let filter = if language.is_null() { ContentWordFilter::empty() } else { stopwords(text(language, "language")?)? };
        write(out, lexical_cohesion_ratio(text(text_, "text")?, &filter, None))
    }))
}

/// Creates a registry with the `bleu`, `chrf`, `lc` and `lc_raw` utilities.
/// `language` selects the stopword list for the cohesion utilities (NULL for
/// none).
///
/// # Safety
/// `language` NULL or a valid C string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_registry_new(language: *const c_char, out: *mut *mut DqRegistry) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let filter = if language.is_null() { ContentWordFilter::empty() } else { stopwords(text(language, "language")?)? };
        let inner = register_utilities(&MetricConfig::default(), filter, None, [])?;
        write(out, Box::into_raw(Box::new(DqRegistry { inner })))
    }))
}

/// Comma-separated utility names. Free the result with [`dq_string_free`].
///
/// # Safety
/// `registry` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_registry_names(registry: *const DqRegistry, out: *mut *mut c_char) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let registry = registry.as_ref().ok_or_else(|| null("registry"))?;
        let names = CString::new(registry.inner.names().join(",")).expect("names contain no NUL");
        write(out, names.into_raw())
    }))
}

/// # Safety
/// `registry` must be NULL or a handle from [`dq_registry_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dq_registry_free(registry: *mut DqRegistry) {
    if !registry.is_null() {
        drop(Box::from_raw(registry));
    }
}

/// Creates an empty candidate pool for sentence `index` of `doc_id`.
///
/// # Safety
/// `doc_id` must be a valid C string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_pool_new(doc_id: *const c_char, index: usize, out: *mut *mut DqPool) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let inner = CandidatePool { doc_id: text(doc_id, "doc_id")?.to_string(), sentence_index: index, candidates: vec![] };
        write(out, Box::into_raw(Box::new(DqPool { inner })))
    }))
}

/// Appends a candidate. `logprob` (natural log, <= 0) and `qe` are
/// optional: pass NULL to leave them unset.
///
/// # Safety
/// `pool` must be a live handle; `text_` a valid C string; `logprob` and
/// `qe` NULL or readable.
#[no_mangle]
pub unsafe extern "C" fn dq_pool_push(
    pool: *mut DqPool,
    text_: *const c_char,
    logprob: *const f64,
    qe: *const f64,
) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let pool = pool.as_mut().ok_or_else(|| null("pool"))?;
        let candidate = Candidate {
            text: text(text_, "text")?.to_string(),
            model_logprob: logprob.as_ref().copied(),
            qe_score: qe.as_ref().copied(),
        };
        candidate.validate()?;
        pool.inner.candidates.push(candidate);
        Ok(())
    }))
}

/// Number of candidates; 0 for a NULL handle.
///
/// # Safety
/// `pool` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dq_pool_len(pool: *const DqPool) -> usize {
    pool.as_ref().map_or(0, |p| p.inner.len())
}

/// # Safety
/// `pool` must be NULL or a handle from [`dq_pool_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dq_pool_free(pool: *mut DqPool) {
    if !pool.is_null() {
        drop(Box::from_raw(pool));
    }
}

unsafe fn selected(pool: *const DqPool, out: *mut usize, rule: fn(&CandidatePool) -> discoqad::Result<SelectionResult>) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let pool = pool.as_ref().ok_or_else(|| null("pool"))?;
        write(out, rule(&pool.inner)?.chosen_index)
    }))
}

/// Index of the most probable candidate (smallest index on ties). Every
/// candidate needs a log-probability.
///
/// # Safety
/// `pool` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dq_select_map(pool: *const DqPool, out: *mut usize) -> DqStatus {
    selected(pool, out, map_select)
}

/// Index of the candidate with the highest QE score (smallest index on
/// ties). Every candidate needs a QE score.
///
/// # Safety
/// As [`dq_select_map`].
#[no_mangle]
pub unsafe extern "C" fn dq_select_rerank(pool: *const DqPool, out: *mut usize) -> DqStatus {
    selected(pool, out, rerank_select)
}

/// MBR selection with the named utility, using the pool itself as
/// pseudo-references. When `expected_utilities` is not NULL it receives one
/// value per candidate and must hold at least `capacity` doubles, with
/// `capacity >= dq_pool_len(pool)`.
///
/// # Safety
/// `pool` and `registry` must be live handles, `utility` a valid C string,
/// `out` writable and `expected_utilities` NULL or writable for `capacity`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn dq_select_mbr(
    pool: *const DqPool,
    registry: *const DqRegistry,
    utility: *const c_char,
    include_self: bool,
    out: *mut usize,
    expected_utilities: *mut f64,
    capacity: usize,
) -> DqStatus {
    guard(AssertUnwindSafe(|| {
        let pool = pool.as_ref().ok_or_else(|| null("pool"))?;
        let registry = registry.as_ref().ok_or_else(|| null("registry"))?;
        let utility = registry.inner.get(text(utility, "utility")?)?;
        if !expected_utilities.is_null() && capacity < pool.inner.len() {
            return Err(Failure(
                DqStatus::InvalidArgument,
                format!("capacity {capacity} is smaller than the pool ({})", pool.inner.len()),
            ));
        }
        let result = mbr_select(&pool.inner, utility.as_ref(), include_self, &UtilityContext::default())?;
        if !expected_utilities.is_null() {
            let eu = result.expected_utilities.as_deref().unwrap_or_default();
            ptr::copy_nonoverlapping(eu.as_ptr(), expected_utilities, eu.len());
        }
        write(out, result.chosen_index)
    }))
}
