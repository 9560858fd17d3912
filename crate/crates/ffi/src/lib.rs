//! C ABI over `bairelab`.
//!
//! Objects are opaque handles created by `bl_*_from_json` or a generator and
//! released with the matching `bl_*_free`. Every fallible call returns a
//! [`BlStatus`]; on failure `bl_last_error_message` describes the error for
//! the calling thread. Strings returned through `char **out` are owned by the
//! caller and released with `bl_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;

use bairelab::baire::{
    baire_norm_oracle_report, baire_norm_report, BaireVector, ExponentP, ORACLE_NODE_LIMIT,
};
use bairelab::basis::BasisKind;
use bairelab::checkers::{bs_obstruction_check, VectorFamily};
use bairelab::io::{BushDoc, FamilyDoc, NormDoc, VectorDoc};
use bairelab::rational::{parse_rational, Rational};
use bairelab::step::{bush_check, rademacher_bush, BushLevels};
use bairelab::tree::{generate_tree, order_index, FiniteTree, TreeDoc, TreeFamily};
use bairelab::Exec;
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ValidationError = 4,
    Internal = 5,
}

/// A finite tree.
pub struct BlTree(Arc<FiniteTree>);

/// A finitely supported vector on a tree.
pub struct BlVector(BaireVector);

/// A finite bush of dyadic step functions.
pub struct BlBush(BushLevels);

/// A finite family of vectors with its norm context.
pub struct BlFamily(VectorFamily);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(BlStatus, String);

impl Failure {
    fn validation(e: impl ToString) -> Self {
        Failure(BlStatus::ValidationError, e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

fn set_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

/// Runs `body`, storing its output in `out` and translating errors and panics.
fn guard<T>(out: *mut T, body: impl FnOnce() -> Outcome<T>) -> BlStatus {
    if out.is_null() {
        set_error("output pointer is null");
        return BlStatus::NullPointer;
    }
    match panic::catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(value)) => {
            // SAFETY: `out` is non-null and the caller guarantees it is writable.
            unsafe { out.write(value) };
            set_error("");
            BlStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BlStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return Err(Failure(BlStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(BlStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Outcome<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(BlStatus::NullPointer, format!("{what} is null")))
}

fn parse<T: DeserializeOwned>(json: &str) -> Outcome<T> {
    serde_json::from_str(json).map_err(|e| Failure(BlStatus::ParseError, e.to_string()))
}

fn rational(s: &str, what: &str) -> Outcome<Rational> {
    parse_rational(s)
        .ok_or_else(|| Failure::validation(format!("{what}: {s:?} is not a rational \"p/q\"")))
}

fn to_c_string<T: Serialize>(value: &T) -> Outcome<*mut c_char> {
    let json =
        serde_json::to_string(value).map_err(|e| Failure(BlStatus::Internal, e.to_string()))?;
    CString::new(json)
        .map(CString::into_raw)
        .map_err(|e| Failure(BlStatus::Internal, e.to_string()))
}

fn exec_of(parallel: c_int) -> Exec {
    if parallel != 0 {
        Exec::Parallel
    } else {
        Exec::Sequential
    }
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

/// Message for the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `bl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn bl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses `{"nodes": [[...], ...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_from_json(json: *const c_char, out: *mut *mut BlTree) -> BlStatus {
    guard(out, || {
        let doc: TreeDoc = parse(text(json, "json")?)?;
        let tree = FiniteTree::try_from(doc).map_err(Failure::validation)?;
        Ok(boxed(BlTree(Arc::new(tree))))
    })
}

fn generated(family: TreeFamily) -> Outcome<*mut BlTree> {
    let tree = generate_tree(family).map_err(Failure::validation)?;
    Ok(boxed(BlTree(Arc::new(tree))))
}

/// All tuples with entries `< k` and length `≤ d`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_generate_full_kary(
    k: u32,
    d: u32,
    out: *mut *mut BlTree,
) -> BlStatus {
    guard(out, || generated(TreeFamily::FullKary { k, d: d as usize }))
}

/// The chain with `d + 1` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_generate_spine(d: u32, out: *mut *mut BlTree) -> BlStatus {
    guard(out, || generated(TreeFamily::Spine { d: d as usize }))
}

/// A seeded random tree with `n` nodes.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_generate_random(
    n: u32,
    seed: u64,
    out: *mut *mut BlTree,
) -> BlStatus {
    guard(out, || {
        generated(TreeFamily::Random {
            n: n as usize,
            seed,
        })
    })
}

/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_node_count(tree: *const BlTree, out: *mut usize) -> BlStatus {
    guard(out, || Ok(handle(tree, "tree")?.0.len()))
}

/// Number of derivations until the tree is empty.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_order_index(tree: *const BlTree, out: *mut usize) -> BlStatus {
    guard(out, || Ok(order_index(&handle(tree, "tree")?.0)))
}

/// Canonical JSON of the tree.
///
/// # Safety
/// `tree` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_to_json(tree: *const BlTree, out: *mut *mut c_char) -> BlStatus {
    guard(out, || {
        to_c_string(&TreeDoc::from(&*handle(tree, "tree")?.0))
    })
}

/// # Safety
/// `tree` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_tree_free(tree: *mut BlTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Parses a vector document. `tree` may be null when the document embeds its tree.
///
/// # Safety
/// `json` must be a NUL-terminated string, `tree` null or a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_vector_from_json(
    json: *const c_char,
    tree: *const BlTree,
    out: *mut *mut BlVector,
) -> BlStatus {
    guard(out, || {
        let doc: VectorDoc = parse(text(json, "json")?)?;
        let tree = tree.as_ref().map(|t| t.0.clone());
        let x = doc.into_vector_on(tree).map_err(Failure::validation)?;
        Ok(boxed(BlVector(x)))
    })
}

/// # Safety
/// `vector` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_vector_free(vector: *mut BlVector) {
    if !vector.is_null() {
        drop(Box::from_raw(vector));
    }
}

unsafe fn norm_args(basis: *const c_char, p: *const c_char) -> Outcome<(BasisKind, ExponentP)> {
    let kind: BasisKind = text(basis, "basis")?.parse().map_err(Failure::validation)?;
    let p: ExponentP = text(p, "p")?.parse().map_err(Failure::validation)?;
    Ok((kind, p))
}

/// Norm of `vector` as JSON `{"approx", "exact", "witness"}`.
/// `basis` is `"l1"`, `"l2"` or `"c0"`; `p` is `"zero"` or a rational `≥ 1`.
///
/// # Safety
/// Pointers must be valid as documented for the other functions.
#[no_mangle]
pub unsafe extern "C" fn bl_baire_norm(
    vector: *const BlVector,
    basis: *const c_char,
    p: *const c_char,
    parallel: c_int,
    out: *mut *mut c_char,
) -> BlStatus {
    guard(out, || {
        let x = &handle(vector, "vector")?.0;
        let (kind, p) = norm_args(basis, p)?;
        to_c_string(&NormDoc::from(&baire_norm_report(
            x,
            kind,
            &p,
            exec_of(parallel),
        )))
    })
}

/// Like [`bl_baire_norm`] but by exhaustive enumeration; small supports only.
///
/// # Safety
/// Pointers must be valid as documented for the other functions.
#[no_mangle]
pub unsafe extern "C" fn bl_baire_norm_oracle(
    vector: *const BlVector,
    basis: *const c_char,
    p: *const c_char,
    out: *mut *mut c_char,
) -> BlStatus {
    guard(out, || {
        let x = &handle(vector, "vector")?.0;
        let (kind, p) = norm_args(basis, p)?;
        let report = baire_norm_oracle_report(x, kind, &p, ORACLE_NODE_LIMIT)
            .map_err(Failure::validation)?;
        to_c_string(&NormDoc::from(&report))
    })
}

/// The Rademacher bush with levels `0..=k`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bl_bush_rademacher(k: u32, out: *mut *mut BlBush) -> BlStatus {
    guard(out, || {
        let bush = rademacher_bush(k).map_err(Failure::validation)?;
        Ok(boxed(BlBush(bush)))
    })
}

/// Parses `{"K": k, "levels": [...]}`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_bush_from_json(json: *const c_char, out: *mut *mut BlBush) -> BlStatus {
    guard(out, || {
        let doc: BushDoc = parse(text(json, "json")?)?;
        Ok(boxed(BlBush(doc.into_bush().map_err(Failure::validation)?)))
    })
}

/// Verdict JSON of the bush conditions at `delta` and `bound` (rational strings).
///
/// # Safety
/// Pointers must be valid as documented for the other functions.
#[no_mangle]
pub unsafe extern "C" fn bl_bush_check(
    bush: *const BlBush,
    delta: *const c_char,
    bound: *const c_char,
    out: *mut *mut c_char,
) -> BlStatus {
    guard(out, || {
        let bush = &handle(bush, "bush")?.0;
        let delta = rational(text(delta, "delta")?, "delta")?;
        let bound = rational(text(bound, "bound")?, "bound")?;
        to_c_string(&bush_check(bush, &delta, &bound))
    })
}

/// # Safety
/// `bush` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_bush_free(bush: *mut BlBush) {
    if !bush.is_null() {
        drop(Box::from_raw(bush));
    }
}

/// Parses a family document (`"space": "baire"` or `"l1-step"`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bl_family_from_json(
    json: *const c_char,
    out: *mut *mut BlFamily,
) -> BlStatus {
    guard(out, || {
        let doc: FamilyDoc = parse(text(json, "json")?)?;
        Ok(boxed(BlFamily(
            doc.into_family().map_err(Failure::validation)?,
        )))
    })
}

/// Banach-Saks obstruction verdict JSON at `epsilon`.
///
/// # Safety
/// Pointers must be valid as documented for the other functions.
#[no_mangle]
pub unsafe extern "C" fn bl_check_bs(
    family: *const BlFamily,
    epsilon: *const c_char,
    parallel: c_int,
    out: *mut *mut c_char,
) -> BlStatus {
    guard(out, || {
        let family = &handle(family, "family")?.0;
        let epsilon = rational(text(epsilon, "epsilon")?, "epsilon")?;
        let verdict = bs_obstruction_check(family, &epsilon, exec_of(parallel))
            .map_err(Failure::validation)?;
        to_c_string(&verdict)
    })
}

/// # Safety
/// `family` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn bl_family_free(family: *mut BlFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}
