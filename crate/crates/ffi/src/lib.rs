//! C ABI over `kpe-core`.
//!
//! Every fallible call returns a [`KpeStatus`]. On failure the message is
//! available from [`kpe_last_error_message`] on the same thread until the next
//! failing call. Strings returned through out-pointers are owned by the caller
//! and must be released with [`kpe_string_free`]. Handles are released with
//! their matching `_free` function; passing NULL to any `_free` is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use kpe_core::alignment::{render_heatmap, AlignmentMatrix, TokenList};
use kpe_core::corpus::{EvalDataset, LanguagePair};
use kpe_core::metrics::{pairwise_accuracy, KendallCounts, SystemScoreRow};
use kpe_core::parsing::parse_response;
use kpe_core::prompting::{render_template, TemplateRegistry};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KpeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Corpus = 3,
    Prompt = 4,
    Parse = 5,
    Metrics = 6,
    Align = 7,
    /// The value is mathematically undefined, e.g. tau with no decided pairs.
    Undefined = 8,
    Panic = 99,
}

/// A loaded evaluation dataset.
pub struct KpeDataset(EvalDataset);

/// A prompt template registry.
pub struct KpeRegistry(TemplateRegistry);

/// Running concordant/discordant counts for Kendall's tau.
pub struct KpeKendall(KendallCounts);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: KpeStatus, message: impl std::fmt::Display) -> KpeStatus {
    set_error(message.to_string());
    status
}

type FfiResult<T> = Result<T, KpeStatus>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> KpeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KpeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(KpeStatus::Panic, "internal panic"),
    }
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(fail(KpeStatus::NullArgument, format!("{name} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(KpeStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

/// # Safety
/// `p` must be NULL or point to `n` valid string pointers.
unsafe fn str_array(p: *const *const c_char, n: usize, name: &str) -> FfiResult<Vec<String>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if p.is_null() {
        return Err(fail(KpeStatus::NullArgument, format!("{name} is NULL")));
    }
    std::slice::from_raw_parts(p, n)
        .iter()
        .enumerate()
        .map(|(i, &s)| str_arg(s, &format!("{name}[{i}]")).map(str::to_string))
        .collect()
}

/// # Safety
/// `p` must be NULL or point to `n` readable values.
unsafe fn slice_arg<'a, T>(p: *const T, n: usize, name: &str) -> FfiResult<&'a [T]> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(KpeStatus::NullArgument, format!("{name} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    // SAFETY: callers pass either NULL or a writable pointer per the header contract.
    unsafe { p.as_mut() }.ok_or_else(|| fail(KpeStatus::NullArgument, format!("{name} is NULL")))
}

fn handle<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    // SAFETY: non-null handles come from this library and are live until freed.
    unsafe { p.as_ref() }.ok_or_else(|| fail(KpeStatus::NullArgument, format!("{name} is NULL")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map(CString::into_raw).unwrap_or(ptr::null_mut())
}

/// Message for the last failing call on this thread, or NULL.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kpe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a pointer previously returned through a `char **` out-parameter.
#[no_mangle]
pub unsafe extern "C" fn kpe_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads segments, system outputs and judgments (TSV or JSONL by extension).
///
/// # Safety
/// Paths must be valid C strings and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn kpe_dataset_load(
    segments: *const c_char,
    outputs: *const c_char,
    judgments: *const c_char,
    out: *mut *mut KpeDataset,
) -> KpeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let seg = str_arg(segments, "segments")?;
        let sys = str_arg(outputs, "outputs")?;
        let judg = str_arg(judgments, "judgments")?;
        let dataset = EvalDataset::load(Path::new(seg), Path::new(sys), Path::new(judg))
            .map_err(|e| fail(KpeStatus::Corpus, e))?;
        *out = Box::into_raw(Box::new(KpeDataset(dataset)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle from [`kpe_dataset_load`].
#[no_mangle]
pub unsafe extern "C" fn kpe_dataset_free(dataset: *mut KpeDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of source segments; 0 for a NULL handle.
#[no_mangle]
pub extern "C" fn kpe_dataset_segment_count(dataset: *const KpeDataset) -> usize {
    handle(dataset, "dataset").map_or(0, |d| d.0.segments().count())
}

/// Number of system outputs; 0 for a NULL handle.
#[no_mangle]
pub extern "C" fn kpe_dataset_output_count(dataset: *const KpeDataset) -> usize {
    handle(dataset, "dataset").map_or(0, |d| d.0.outputs().count())
}

/// Number of relative-ranking judgments; 0 for a NULL handle.
#[no_mangle]
pub extern "C" fn kpe_dataset_judgment_count(dataset: *const KpeDataset) -> usize {
    handle(dataset, "dataset").map_or(0, |d| d.0.judgments().len())
}

/// The built-in template registry. Never NULL.
#[no_mangle]
pub extern "C" fn kpe_registry_builtin() -> *mut KpeRegistry {
    Box::into_raw(Box::new(KpeRegistry(TemplateRegistry::builtin())))
}

/// Built-in templates, overridden or extended by every `*.txt` template in `dir`.
///
/// # Safety
/// `dir` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn kpe_registry_load(dir: *const c_char, out: *mut *mut KpeRegistry) -> KpeStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let dir = str_arg(dir, "dir")?;
        let registry = TemplateRegistry::with_overrides(Path::new(dir)).map_err(|e| fail(KpeStatus::Prompt, e))?;
        *out = Box::into_raw(Box::new(KpeRegistry(registry)));
        Ok(())
    })
}

/// # Safety
/// `registry` must be NULL or a live registry handle.
#[no_mangle]
pub unsafe extern "C" fn kpe_registry_free(registry: *mut KpeRegistry) {
    if !registry.is_null() {
        drop(Box::from_raw(registry));
    }
}

/// Renders `template_id` with `n` placeholder bindings `names[i] = values[i]`.
///
/// # Safety
/// `names` and `values` must each hold `n` valid C strings; `out_text` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_registry_render(
    registry: *const KpeRegistry,
    template_id: *const c_char,
    names: *const *const c_char,
    values: *const *const c_char,
    n: usize,
    out_text: *mut *mut c_char,
) -> KpeStatus {
    guard(|| {
        let out = out_arg(out_text, "out_text")?;
        *out = ptr::null_mut();
        let registry = handle(registry, "registry")?;
        let id = str_arg(template_id, "template_id")?;
        let names = str_array(names, n, "names")?;
        let values = str_array(values, n, "values")?;
        let template = registry.0.get(id).map_err(|e| fail(KpeStatus::Prompt, e))?;
        let bindings = names.into_iter().zip(values).collect();
        let rendered = render_template(template, &bindings).map_err(|e| fail(KpeStatus::Prompt, e))?;
        *out = into_c_string(rendered.final_text);
        Ok(())
    })
}

/// Parses a completion against the response schema of `template_id` and
/// writes its ordinal (class index, star count or rounded scalar).
///
/// # Safety
/// String arguments must be valid C strings; `out_ordinal` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_parse_response(
    registry: *const KpeRegistry,
    template_id: *const c_char,
    text: *const c_char,
    out_ordinal: *mut i64,
) -> KpeStatus {
    guard(|| {
        let out = out_arg(out_ordinal, "out_ordinal")?;
        let registry = handle(registry, "registry")?;
        let id = str_arg(template_id, "template_id")?;
        let text = str_arg(text, "text")?;
        let template = registry.0.get(id).map_err(|e| fail(KpeStatus::Prompt, e))?;
        let parsed = parse_response(text, &template.response_schema).map_err(|e| fail(KpeStatus::Parse, e))?;
        *out = parsed.ordinal();
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn kpe_kendall_new() -> *mut KpeKendall {
    Box::into_raw(Box::new(KpeKendall(KendallCounts::default())))
}

/// # Safety
/// `counts` must be NULL or a live handle from [`kpe_kendall_new`].
#[no_mangle]
pub unsafe extern "C" fn kpe_kendall_free(counts: *mut KpeKendall) {
    if !counts.is_null() {
        drop(Box::from_raw(counts));
    }
}

/// Records one judgment where `better` was preferred over `worse`.
/// A score whose `has_*` flag is false counts as missing and excludes the pair.
///
/// # Safety
/// `counts` must be a live handle not used concurrently from another thread.
#[no_mangle]
pub unsafe extern "C" fn kpe_kendall_record(
    counts: *mut KpeKendall,
    better: i64,
    has_better: bool,
    worse: i64,
    has_worse: bool,
) -> KpeStatus {
    guard(|| {
        let counts = out_arg(counts, "counts")?;
        counts.0.record(has_better.then_some(better), has_worse.then_some(worse));
        Ok(())
    })
}

/// # Safety
/// Out-pointers must be NULL (ignored) or writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_kendall_counts(
    counts: *const KpeKendall,
    concordant: *mut usize,
    discordant: *mut usize,
    excluded: *mut usize,
) -> KpeStatus {
    guard(|| {
        let c = &handle(counts, "counts")?.0;
        for (p, v) in [(concordant, c.concordant), (discordant, c.discordant), (excluded, c.excluded)] {
            if let Some(p) = p.as_mut() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// `(C - D) / (C + D)`; `Undefined` when no pair was decided.
///
/// # Safety
/// `out_tau` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_kendall_tau(counts: *const KpeKendall, out_tau: *mut f64) -> KpeStatus {
    guard(|| {
        let out = out_arg(out_tau, "out_tau")?;
        let c = &handle(counts, "counts")?.0;
        *out = c.tau().ok_or_else(|| fail(KpeStatus::Undefined, "no concordant or discordant pairs"))?;
        Ok(())
    })
}

/// Fraction of system pairs ordered the same way by `metric[i]` and `human[i]`.
///
/// # Safety
/// `metric` and `human` must each hold `n` values; `out_accuracy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_pairwise_accuracy(
    metric: *const f64,
    human: *const f64,
    n: usize,
    out_accuracy: *mut f64,
) -> KpeStatus {
    guard(|| {
        let out = out_arg(out_accuracy, "out_accuracy")?;
        let metric = slice_arg(metric, n, "metric")?;
        let human = slice_arg(human, n, "human")?;
        let lp = LanguagePair::new("xx", "yy").map_err(|e| fail(KpeStatus::Metrics, e))?;
        let rows: Vec<SystemScoreRow> = metric
            .iter()
            .enumerate()
            .map(|(i, &m)| SystemScoreRow {
                lp: lp.clone(),
                system_id: format!("s{i}"),
                mean_ordinal: m,
                n: 1,
            })
            .collect();
        let human: Vec<(String, f64)> = human.iter().enumerate().map(|(i, &h)| (format!("s{i}"), h)).collect();
        *out = pairwise_accuracy(&rows, &human).map_err(|e| fail(KpeStatus::Metrics, e))?;
        Ok(())
    })
}

/// Renders an alignment heatmap as SVG. `cells` is row-major,
/// `n_src` rows by `n_mt` columns.
///
/// # Safety
/// Token arrays must hold `n_src` / `n_mt` valid C strings, `cells` must hold
/// `n_src * n_mt` values and `out_svg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn kpe_heatmap_svg(
    src_tokens: *const *const c_char,
    n_src: usize,
    mt_tokens: *const *const c_char,
    n_mt: usize,
    cells: *const f64,
    out_svg: *mut *mut c_char,
) -> KpeStatus {
    guard(|| {
        let out = out_arg(out_svg, "out_svg")?;
        *out = ptr::null_mut();
        let align = |e| fail(KpeStatus::Align, e);
        let src = TokenList::new(str_array(src_tokens, n_src, "src_tokens")?).map_err(align)?;
        let mt = TokenList::new(str_array(mt_tokens, n_mt, "mt_tokens")?).map_err(align)?;
        let total = n_src
            .checked_mul(n_mt)
            .ok_or_else(|| fail(KpeStatus::Align, "matrix size overflows"))?;
        let flat = slice_arg(cells, total, "cells")?;
        let rows = flat.chunks(n_mt.max(1)).map(<[f64]>::to_vec).collect();
        let matrix = AlignmentMatrix::new(src, mt, rows).map_err(align)?;
        *out = into_c_string(render_heatmap(&matrix).map_err(align)?);
        Ok(())
    })
}
