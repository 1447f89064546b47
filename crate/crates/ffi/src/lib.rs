//! C interface to the feature extractor, run-log loader and pipeline.
//!
//! Every function returns a [`CodeevoStatus`]; on failure the message is
//! available from [`codeevo_last_error`] on the same thread. Strings handed
//! out with ownership must be released with [`codeevo_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::OnceLock;

use codeevo::features::{canonical_names, extract_features, ExtractOptions};
use codeevo::ingest::{load_jsonl, validate, Dataset, ValidationPolicy};
use codeevo::report::{run, PipelineConfig, Stage, YAxis};
use codeevo::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeevoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Validation = 5,
    InvalidArgument = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeevoPolicy {
    Strict = 0,
    DropDanglingEdges = 1,
}

/// Options for [`codeevo_run_pipeline`]; start from
/// [`codeevo_pipeline_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CodeevoPipelineOptions {
    pub seed: u64,
    pub perplexity: f64,
    pub iterations: usize,
    pub node_radius: f64,
    pub include_eigencentrality: bool,
    pub policy: CodeevoPolicy,
    /// "pc1", "tokens" or "feature:<name>"; NULL means "pc1".
    pub y_axis: *const c_char,
}

/// A validated run log.
pub struct CodeevoDataset {
    dataset: Dataset,
    ids: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(CodeevoStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => CodeevoStatus::Io,
            Error::Parse(_) => CodeevoStatus::Parse,
            Error::MalformedLine { .. } | Error::DuplicateId { .. } | Error::Lineage { .. } => {
                CodeevoStatus::Validation
            }
            Error::FeatureMismatch(_) | Error::InvalidArgument(_) => CodeevoStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

/// Runs `body`, recording any failure or panic as the last error.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CodeevoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CodeevoStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CodeevoStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CodeevoStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CodeevoStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn codeevo_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Number of canonical features written by [`codeevo_extract_features`].
#[no_mangle]
pub extern "C" fn codeevo_feature_count() -> usize {
    canonical_names().len()
}

/// Name of canonical feature `index` (static storage), or NULL when out of
/// range.
#[no_mangle]
pub extern "C" fn codeevo_feature_name(index: usize) -> *const c_char {
    static NAMES: OnceLock<Vec<CString>> = OnceLock::new();
    let names = NAMES.get_or_init(|| canonical_names().into_iter().map(|n| CString::new(n).unwrap()).collect());
    names.get(index).map_or(ptr::null(), |c| c.as_ptr())
}

/// Extract the canonical features of one Python source into `out`, which
/// must hold `out_len >= codeevo_feature_count()` doubles.
///
/// # Safety
/// `code` must be a NUL-terminated string and `out` must point to `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn codeevo_extract_features(code: *const c_char, out: *mut f64, out_len: usize) -> CodeevoStatus {
    guard(|| {
        let code = text(code, "code")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let names = canonical_names();
        if out_len < names.len() {
            return Err(Failure(
                CodeevoStatus::BufferTooSmall,
                format!("need {} doubles, got {out_len}", names.len()),
            ));
        }
        let fv = extract_features(code, ExtractOptions::default()).map_err(|e| Failure::from(Error::from(e)))?;
        let out = std::slice::from_raw_parts_mut(out, names.len());
        for (slot, name) in out.iter_mut().zip(names) {
            *slot = fv.get(name).expect("canonical feature present");
        }
        Ok(())
    })
}

/// Syntax-tree graph of one Python source as JSON. Free the result with
/// [`codeevo_string_free`].
///
/// # Safety
/// `code` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codeevo_parse_to_json(code: *const c_char, out: *mut *mut c_char) -> CodeevoStatus {
    guard(|| {
        let code = text(code, "code")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let graph = codeevo::pyast::parse_to_graph(code).map_err(|e| Failure::from(Error::from(e)))?;
        *out = CString::new(graph.to_json()).expect("JSON has no NUL").into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn codeevo_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load and validate a JSONL run log.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codeevo_dataset_load(
    path: *const c_char,
    policy: CodeevoPolicy,
    out: *mut *mut CodeevoDataset,
) -> CodeevoStatus {
    guard(|| {
        let path = text(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let policy = match policy {
            CodeevoPolicy::Strict => ValidationPolicy::Strict,
            CodeevoPolicy::DropDanglingEdges => ValidationPolicy::DropDanglingEdges,
        };
        let (dataset, _) = validate(&load_jsonl(path)?, policy)?;
        let ids = dataset
            .samples
            .iter()
            .map(|s| CString::new(s.id.replace('\0', " ")).unwrap())
            .collect();
        *out = Box::into_raw(Box::new(CodeevoDataset { dataset, ids }));
        Ok(())
    })
}

/// Number of samples, 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn codeevo_dataset_len(dataset: *const CodeevoDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.dataset.len())
}

/// Id of sample `index`, owned by the handle; NULL when out of range.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn codeevo_dataset_sample_id(dataset: *const CodeevoDataset, index: usize) -> *const c_char {
    dataset
        .as_ref()
        .and_then(|d| d.ids.get(index))
        .map_or(ptr::null(), |c| c.as_ptr())
}

/// # Safety
/// `dataset` must be NULL or a handle from [`codeevo_dataset_load`] that
/// has not been freed.
#[no_mangle]
pub unsafe extern "C" fn codeevo_dataset_free(dataset: *mut CodeevoDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Spearman's rho of two length-`n` arrays. Writes NaN when fewer than 3
/// finite pairs exist.
///
/// # Safety
/// `x` and `y` must point to `n` doubles, `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn codeevo_spearman(x: *const f64, y: *const f64, n: usize, out: *mut f64) -> CodeevoStatus {
    guard(|| {
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("x, y or out"));
        }
        let (x, y) = (std::slice::from_raw_parts(x, n), std::slice::from_raw_parts(y, n));
        *out = codeevo::embed::spearman(x, y).unwrap_or(f64::NAN);
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn codeevo_pipeline_options_default() -> CodeevoPipelineOptions {
    let config = PipelineConfig::new("", "");
    CodeevoPipelineOptions {
        seed: config.tsne.seed,
        perplexity: config.tsne.perplexity,
        iterations: config.tsne.iterations,
        node_radius: config.node_radius,
        include_eigencentrality: config.eigen_centrality,
        policy: CodeevoPolicy::Strict,
        y_axis: ptr::null(),
    }
}

/// Run every stage on the log at `input`, writing into `out_dir`. `options`
/// may be NULL for defaults.
///
/// # Safety
/// `input` and `out_dir` must be NUL-terminated strings; `options` must be
/// NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn codeevo_run_pipeline(
    input: *const c_char,
    out_dir: *const c_char,
    options: *const CodeevoPipelineOptions,
) -> CodeevoStatus {
    guard(|| {
        let input = PathBuf::from(text(input, "input")?);
        let out_dir = PathBuf::from(text(out_dir, "out_dir")?);
        let options = options.as_ref().copied().unwrap_or_else(|| codeevo_pipeline_options_default());
        let mut config = PipelineConfig::new(input, out_dir);
        if !options.y_axis.is_null() {
            config.y_axis = text(options.y_axis, "y_axis")?
                .parse::<YAxis>()
                .map_err(|m| Failure(CodeevoStatus::InvalidArgument, m))?;
        }
        config.tsne.seed = options.seed;
        config.tsne.perplexity = options.perplexity;
        config.tsne.iterations = options.iterations;
        config.node_radius = options.node_radius;
        config.eigen_centrality = options.include_eigencentrality;
        config.policy = match options.policy {
            CodeevoPolicy::Strict => ValidationPolicy::Strict,
            CodeevoPolicy::DropDanglingEdges => ValidationPolicy::DropDanglingEdges,
        };
        run(Stage::All, &config)?;
        Ok(())
    })
}
