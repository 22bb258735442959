//! C ABI over the `informalize` library.
//!
//! Every fallible function returns an [`InfStatus`]. On failure a message is
//! available from [`inf_last_error`] on the same thread. Strings returned
//! through out-pointers are owned by the caller and must be released with
//! [`inf_string_free`]; handles are released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use informalize::dataset::content_id;
use informalize::parser::{classify_tactic, extract_theorems};
use informalize::prompt::{parse_teacher_response, render_tuple};
use informalize::rules::{informalize_tactic, TemplateTable};
use informalize::tokenizer::Tokenizer;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A file could not be read or parsed.
    Io = 3,
    /// Input was well-formed text but not valid for the operation.
    Invalid = 4,
    /// The tactic line matches no known pattern.
    NoMatch = 5,
    /// The text holds no ('formal', 'informal') tuple.
    Format = 6,
    /// An internal error was caught at the boundary.
    Internal = 99,
}

/// Byte-level BPE tokenizer handle.
pub struct InfTokenizer(Tokenizer);

/// Tactic template table handle.
pub struct InfTemplates(TemplateTable);

type Failure = (InfStatus, String);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> InfStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => InfStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal error");
            InfStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err((InfStatus::NullArgument, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (InfStatus::InvalidUtf8, format!("`{name}`: {e}")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err((InfStatus::NullArgument, format!("`{name}` is NULL")))
    } else {
        Ok(())
    }
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "\u{FFFD}"))
        .expect("interior NULs replaced")
        .into_raw()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn inf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn inf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn inf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The bundled reference tokenizer.
///
/// # Safety
/// `out` must be a valid pointer to write a handle to.
#[no_mangle]
pub unsafe extern "C" fn inf_tokenizer_reference(out: *mut *mut InfTokenizer) -> InfStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(InfTokenizer(Tokenizer::reference().clone())));
        Ok(())
    })
}

/// Load a tokenizer from a vocab JSON and a merges file.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inf_tokenizer_from_files(
    vocab_path: *const c_char,
    merges_path: *const c_char,
    out: *mut *mut InfTokenizer,
) -> InfStatus {
    guard(|| {
        let vocab = text(vocab_path, "vocab_path")?;
        let merges = text(merges_path, "merges_path")?;
        out_ptr(out, "out")?;
        let t = Tokenizer::from_files(Path::new(vocab), Path::new(merges)).map_err(|e| (InfStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfTokenizer(t)));
        Ok(())
    })
}

/// Number of BPE tokens in `text_utf8`.
///
/// # Safety
/// `tokenizer` must be a live handle; `text_utf8` NUL-terminated; `out_count` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_tokenizer_count(
    tokenizer: *const InfTokenizer,
    text_utf8: *const c_char,
    out_count: *mut usize,
) -> InfStatus {
    guard(|| {
        let t = tokenizer
            .as_ref()
            .ok_or((InfStatus::NullArgument, "`tokenizer` is NULL".to_string()))?;
        let s = text(text_utf8, "text")?;
        out_ptr(out_count, "out_count")?;
        *out_count = t.0.count(s);
        Ok(())
    })
}

/// # Safety
/// `tokenizer` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn inf_tokenizer_free(tokenizer: *mut InfTokenizer) {
    if !tokenizer.is_null() {
        drop(Box::from_raw(tokenizer));
    }
}

/// The default tactic templates.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn inf_templates_default(out: *mut *mut InfTemplates) -> InfStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(InfTemplates(TemplateTable::default())));
        Ok(())
    })
}

/// Defaults overlaid with a TOML (or `.json`) override file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_templates_load(path: *const c_char, out: *mut *mut InfTemplates) -> InfStatus {
    guard(|| {
        let p = text(path, "path")?;
        out_ptr(out, "out")?;
        let t = TemplateTable::load(Path::new(p)).map_err(|e| (InfStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(InfTemplates(t)));
        Ok(())
    })
}

/// # Safety
/// `templates` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn inf_templates_free(templates: *mut InfTemplates) {
    if !templates.is_null() {
        drop(Box::from_raw(templates));
    }
}

/// Informal sentence for one tactic line. Returns `NoMatch` when the line
/// is not a recognised tactic.
///
/// # Safety
/// `templates` must be live; `line` NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_informalize_tactic(
    templates: *const InfTemplates,
    line: *const c_char,
    out: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let table = templates
            .as_ref()
            .ok_or((InfStatus::NullArgument, "`templates` is NULL".to_string()))?;
        let line = text(line, "line")?;
        out_ptr(out, "out")?;
        let m = classify_tactic(line).ok_or((InfStatus::NoMatch, format!("no tactic pattern matches `{line}`")))?;
        let s = informalize_tactic(&m, &table.0).map_err(|e| (InfStatus::Invalid, e.to_string()))?;
        *out = owned(s);
        Ok(())
    })
}

/// Extract declarations from Lean source as JSON
/// `{"records": [...], "warnings": [...]}`.
///
/// # Safety
/// String arguments must be NUL-terminated; `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_extract_theorems_json(
    source: *const c_char,
    file_name: *const c_char,
    out_json: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let src = text(source, "source")?;
        let name = text(file_name, "file_name")?;
        out_ptr(out_json, "out_json")?;
        let ex = extract_theorems(src, name);
        let v = serde_json::json!({ "records": ex.records, "warnings": ex.warnings });
        *out_json = owned(v.to_string());
        Ok(())
    })
}

/// First ('formal', 'informal') tuple in a teacher completion.
///
/// # Safety
/// `raw` must be NUL-terminated; both out-pointers writable.
#[no_mangle]
pub unsafe extern "C" fn inf_parse_teacher_response(
    raw: *const c_char,
    out_formal: *mut *mut c_char,
    out_informal: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let raw = text(raw, "raw")?;
        out_ptr(out_formal, "out_formal")?;
        out_ptr(out_informal, "out_informal")?;
        let (f, i) = parse_teacher_response(raw).map_err(|e| (InfStatus::Format, e.to_string()))?;
        *out_formal = owned(f);
        *out_informal = owned(i);
        Ok(())
    })
}

/// Render a pair in the single-quoted tuple format.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_render_tuple(
    formal: *const c_char,
    informal: *const c_char,
    out: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let f = text(formal, "formal")?;
        let i = text(informal, "informal")?;
        out_ptr(out, "out")?;
        *out = owned(render_tuple(f, i));
        Ok(())
    })
}

/// Deterministic pair id used for deduplication.
///
/// # Safety
/// String arguments must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn inf_content_id(
    formal: *const c_char,
    informal: *const c_char,
    out: *mut *mut c_char,
) -> InfStatus {
    guard(|| {
        let f = text(formal, "formal")?;
        let i = text(informal, "informal")?;
        out_ptr(out, "out")?;
        *out = owned(content_id(f, i));
        Ok(())
    })
}
