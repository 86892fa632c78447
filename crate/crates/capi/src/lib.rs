//! C ABI over the quasimorphism engines: opaque handles, integer error
//! codes, and a thread-local message for the last failure.

use qmlab::free_qm::{brooks_h, FreeWord};
use qmlab::group::{FuchsianRep, Word};
use qmlab::lie::{self, Target};
use qmlab::qm::{demo_form, Mode, QuasimorphismEngine};
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::sync::Arc;

pub const QMLAB_OK: c_int = 0;
pub const QMLAB_ERR_NULL: c_int = 1;
pub const QMLAB_ERR_INVALID_ARG: c_int = 2;
pub const QMLAB_ERR_PARSE: c_int = 3;
pub const QMLAB_ERR_NUMERIC: c_int = 4;
pub const QMLAB_ERR_BUFFER: c_int = 5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', "?")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Message for the most recent error on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn qmlab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn qmlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Opaque engine handle.
pub struct QmlabEngine {
    inner: QuasimorphismEngine,
}

fn parse_target(target: c_int) -> Option<Target> {
    match target {
        0 => Some(Target::Abelian),
        1 => Some(Target::Su2),
        2 => Some(Target::Heisenberg),
        _ => None,
    }
}

unsafe fn word_arg(s: *const c_char) -> Result<Word, c_int> {
    if s.is_null() {
        set_error("null word pointer");
        return Err(QMLAB_ERR_NULL);
    }
    let text = CStr::from_ptr(s).to_str().map_err(|_| {
        set_error("word is not valid UTF-8");
        QMLAB_ERR_PARSE
    })?;
    Word::parse(text).map_err(|e| {
        set_error(&format!("bad word `{text}`: {e}"));
        QMLAB_ERR_PARSE
    })
}

/// Create an engine over the standard genus-2 representation with the
/// built-in demonstration connection. target: 0 = abelian, 1 = su2,
/// 2 = heisenberg; mode: 0 = geodesic, 1 = homogeneous.
#[no_mangle]
pub extern "C" fn qmlab_engine_new(target: c_int, mode: c_int, tol: f64) -> *mut QmlabEngine {
    let Some(target) = parse_target(target) else {
        set_error("target must be 0, 1, or 2");
        return std::ptr::null_mut();
    };
    let mode = match mode {
        0 => Mode::Bg,
        1 => Mode::Hbg,
        _ => {
            set_error("mode must be 0 (bg) or 1 (hbg)");
            return std::ptr::null_mut();
        }
    };
    if !(tol > 0.0 && tol.is_finite()) {
        set_error("tol must be a positive finite number");
        return std::ptr::null_mut();
    }
    let rep = Arc::new(FuchsianRep::standard());
    let engine = QuasimorphismEngine::new(demo_form(rep, target), mode, tol);
    Box::into_raw(Box::new(QmlabEngine { inner: engine }))
}

/// # Safety
/// `engine` must come from `qmlab_engine_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qmlab_engine_free(engine: *mut QmlabEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Coordinate dimension of engine values (how many doubles `qmlab_engine_value`
/// writes per element).
///
/// # Safety
/// `engine` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qmlab_engine_dim(engine: *const QmlabEngine) -> c_int {
    if engine.is_null() {
        return -1;
    }
    (*engine).inner.identity().entries().len() as c_int
}

/// Evaluate q(word) and write its entries to `out` (capacity `out_len`).
///
/// # Safety
/// `engine` must be a live handle; `out` must point to at least `out_len`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn qmlab_engine_value(
    engine: *const QmlabEngine,
    word: *const c_char,
    out: *mut f64,
    out_len: usize,
) -> c_int {
    if engine.is_null() || out.is_null() {
        set_error("null handle or output buffer");
        return QMLAB_ERR_NULL;
    }
    let w = match word_arg(word) {
        Ok(w) => w,
        Err(code) => return code,
    };
    let value = match (*engine).inner.value(&w) {
        Ok(v) => v,
        Err(e) => {
            set_error(&e.to_string());
            return QMLAB_ERR_NUMERIC;
        }
    };
    let entries = value.entries();
    if entries.len() > out_len {
        set_error(&format!("need {} doubles, buffer holds {out_len}", entries.len()));
        return QMLAB_ERR_BUFFER;
    }
    std::ptr::copy_nonoverlapping(entries.as_ptr(), out, entries.len());
    QMLAB_OK
}

/// Defect d(q(xy), q(x) q(y)) in the bi-invariant metric.
///
/// # Safety
/// `engine` must be a live handle; `out` must be a valid double pointer.
#[no_mangle]
pub unsafe extern "C" fn qmlab_engine_defect(
    engine: *const QmlabEngine,
    x: *const c_char,
    y: *const c_char,
    out: *mut f64,
) -> c_int {
    if engine.is_null() || out.is_null() {
        set_error("null handle or output pointer");
        return QMLAB_ERR_NULL;
    }
    let (wx, wy) = match (word_arg(x), word_arg(y)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(c), _) | (_, Err(c)) => return c,
    };
    let run = || -> Result<f64, qmlab::qm::QmError> {
        let e = &(*engine).inner;
        let qxy = e.value(&wx.concat(&wy))?;
        let qx = e.value(&wx)?;
        let qy = e.value(&wy)?;
        Ok(lie::group_distance(&qxy, &qx.multiply(&qy)?)?)
    };
    match run() {
        Ok(d) => {
            *out = d;
            QMLAB_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            QMLAB_ERR_NUMERIC
        }
    }
}

/// A-priori defect bound for the engine's connection.
///
/// # Safety
/// `engine` must be a live handle; `out` must be a valid double pointer.
#[no_mangle]
pub unsafe extern "C" fn qmlab_engine_bound_estimate(
    engine: *const QmlabEngine,
    out: *mut f64,
) -> c_int {
    if engine.is_null() || out.is_null() {
        set_error("null handle or output pointer");
        return QMLAB_ERR_NULL;
    }
    *out = (*engine).inner.bound_estimate();
    QMLAB_OK
}

/// Translation length of the hyperbolic isometry representing `word`
/// (0 for the identity class).
#[no_mangle]
pub extern "C" fn qmlab_translation_length(word: *const c_char, out: *mut f64) -> c_int {
    if out.is_null() {
        set_error("null output pointer");
        return QMLAB_ERR_NULL;
    }
    let w = match unsafe { word_arg(word) } {
        Ok(w) => w,
        Err(code) => return code,
    };
    let rep = FuchsianRep::standard();
    match rep.translation_length(&w) {
        Ok(len) => {
            unsafe { *out = len };
            QMLAB_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            QMLAB_ERR_NUMERIC
        }
    }
}

/// Brooks counting functional h_w(g) on the free group over {a, b}.
#[no_mangle]
pub extern "C" fn qmlab_brooks_h(
    w: *const c_char,
    g: *const c_char,
    out: *mut i64,
) -> c_int {
    if w.is_null() || g.is_null() || out.is_null() {
        set_error("null argument");
        return QMLAB_ERR_NULL;
    }
    let parse = |p: *const c_char| -> Result<FreeWord, c_int> {
        let text = unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
            set_error("word is not valid UTF-8");
            QMLAB_ERR_PARSE
        })?;
        FreeWord::parse(text).map_err(|e| {
            set_error(&format!("bad free word `{text}`: {e}"));
            QMLAB_ERR_PARSE
        })
    };
    let (fw, fg) = match (parse(w), parse(g)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(c), _) | (_, Err(c)) => return c,
    };
    match brooks_h(&fw, &fg) {
        Ok(h) => {
            unsafe { *out = h };
            QMLAB_OK
        }
        Err(e) => {
            set_error(&e.to_string());
            QMLAB_ERR_INVALID_ARG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn engine_roundtrip() {
        let e = qmlab_engine_new(1, 0, 1e-9);
        assert!(!e.is_null());
        unsafe {
            let dim = qmlab_engine_dim(e);
            assert!(dim > 0);
            let mut buf = vec![0.0f64; dim as usize];
            let code = qmlab_engine_value(e, c("ab").as_ptr(), buf.as_mut_ptr(), buf.len());
            assert_eq!(code, QMLAB_OK);
            assert!(buf.iter().any(|&x| x != 0.0));

            let mut defect = -1.0;
            assert_eq!(
                qmlab_engine_defect(e, c("ab").as_ptr(), c("cd").as_ptr(), &mut defect),
                QMLAB_OK
            );
            let mut bound = 0.0;
            assert_eq!(qmlab_engine_bound_estimate(e, &mut bound), QMLAB_OK);
            assert!(defect >= 0.0 && defect <= 2.0 * bound);
            qmlab_engine_free(e);
        }
    }

    #[test]
    fn error_paths() {
        assert!(qmlab_engine_new(7, 0, 1e-9).is_null());
        let msg = unsafe { CStr::from_ptr(qmlab_last_error_message()) };
        assert!(msg.to_str().unwrap().contains("target"));

        let e = qmlab_engine_new(0, 0, 1e-9);
        unsafe {
            let mut buf = [0.0f64; 1];
            let code = qmlab_engine_value(e, c("xyz").as_ptr(), buf.as_mut_ptr(), 1);
            assert_eq!(code, QMLAB_ERR_PARSE);
            let code = qmlab_engine_value(e, c("ab").as_ptr(), buf.as_mut_ptr(), 0);
            assert_eq!(code, QMLAB_ERR_BUFFER);
            qmlab_engine_free(e);
        }
    }

    #[test]
    fn free_functions() {
        let mut h = 0i64;
        assert_eq!(
            qmlab_brooks_h(c("ab").as_ptr(), c("abab").as_ptr(), &mut h),
            QMLAB_OK
        );
        assert_eq!(h, 2);
        let mut len = 0.0;
        assert_eq!(qmlab_translation_length(c("a").as_ptr(), &mut len), QMLAB_OK);
        assert!(len > 0.0);
        let v = unsafe { CStr::from_ptr(qmlab_version()) };
        assert!(!v.to_bytes().is_empty());
    }
}
