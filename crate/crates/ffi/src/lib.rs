//! C interface to hypercross: opaque tree and table handles, status codes
//! and a per-thread last-error message.
//!
//! Every fallible function returns an [`HcStatus`]. On failure the message
//! is available from [`hc_last_error`] until the next call on the same
//! thread. Strings returned through out-parameters are owned by the caller
//! and released with [`hc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use hypercross::crossratio::{hyperbolicity_constant, CrValue, TableJson};
use hypercross::finite_sharp::{pgl2_fq_action, verify_sharp_transitive, DEFAULT_CAP};
use hypercross::metric_tree::TreeJson;
use hypercross::suites::run_suite;
use hypercross::{fit_tree, CrossratioTable, MetricTree, Rational};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Failed = 4,
    Panic = 5,
}

/// Exact rational `num / den` with `den > 0`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HcRational {
    pub num: i64,
    pub den: i64,
}

impl From<Rational> for HcRational {
    fn from(r: Rational) -> Self {
        HcRational {
            num: *r.numer(),
            den: *r.denom(),
        }
    }
}

/// A finite metric tree with rational edge lengths.
pub struct HcTree {
    inner: MetricTree,
}

/// A crossratio table over a labelled ground set.
pub struct HcTable {
    inner: CrossratioTable,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Error {
    status: HcStatus,
    msg: String,
}

impl Error {
    fn new(status: HcStatus, msg: impl ToString) -> Self {
        Error {
            status,
            msg: msg.to_string(),
        }
    }
}

fn input(e: impl ToString) -> Error {
    Error::new(HcStatus::InvalidInput, e)
}

fn failed(e: impl ToString) -> Error {
    Error::new(HcStatus::Failed, e)
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Error>) -> HcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HcStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.msg);
            e.status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&msg);
            HcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Error> {
    if p.is_null() {
        return Err(Error::new(HcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Error::new(HcStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Error> {
    p.as_ref()
        .ok_or_else(|| Error::new(HcStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Error> {
    if out.is_null() {
        return Err(Error::new(HcStatus::NullPointer, format!("{what} is null")));
    }
    out.write(v);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("json has no nul").into_raw()
}

/// Message of the last failure on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn hc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn hc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` is null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a tree from its JSON form.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_from_json(json: *const c_char, out: *mut *mut HcTree) -> HcStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let j: TreeJson = serde_json::from_str(text).map_err(input)?;
        let inner = MetricTree::from_json(&j).map_err(input)?;
        write(out, Box::into_raw(Box::new(HcTree { inner })), "out")
    })
}

/// A random tree with `leaves` leaves and rational edge lengths.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_random(leaves: usize, seed: u64, out: *mut *mut HcTree) -> HcStatus {
    guard(|| {
        if leaves < 2 {
            return Err(input("need at least two leaves"));
        }
        let inner = MetricTree::random(&mut ChaCha8Rng::seed_from_u64(seed), leaves);
        write(out, Box::into_raw(Box::new(HcTree { inner })), "out")
    })
}

/// # Safety
/// `tree` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_free(tree: *mut HcTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_to_json(tree: *const HcTree, out: *mut *mut c_char) -> HcStatus {
    guard(|| {
        let t = ref_arg(tree, "tree")?;
        let text = serde_json::to_string(&t.inner.to_json()).map_err(failed)?;
        write(out, owned_string(text), "out")
    })
}

/// # Safety
/// `tree` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_leaf_count(tree: *const HcTree, out: *mut usize) -> HcStatus {
    guard(|| {
        let t = ref_arg(tree, "tree")?;
        write(out, t.inner.leaves().len(), "out")
    })
}

/// Distance between two named nodes.
///
/// # Safety
/// `tree` is a live handle; `u` and `v` are nul-terminated; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_distance(
    tree: *const HcTree,
    u: *const c_char,
    v: *const c_char,
    out: *mut HcRational,
) -> HcStatus {
    guard(|| {
        let t = ref_arg(tree, "tree")?;
        let d = t
            .inner
            .distance_by_name(str_arg(u, "u")?, str_arg(v, "v")?)
            .map_err(input)?;
        write(out, d.into(), "out")
    })
}

/// Crossratio table over the leaves of the tree.
///
/// # Safety
/// `tree` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_tree_leaf_table(tree: *const HcTree, out: *mut *mut HcTable) -> HcStatus {
    guard(|| {
        let t = ref_arg(tree, "tree")?;
        let inner = t.inner.leaf_table();
        write(out, Box::into_raw(Box::new(HcTable { inner })), "out")
    })
}

/// Parses a crossratio table from its JSON form.
///
/// # Safety
/// `json` is a nul-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_from_json(json: *const c_char, out: *mut *mut HcTable) -> HcStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let j: TableJson = serde_json::from_str(text).map_err(input)?;
        let inner = CrossratioTable::from_json(&j).map_err(input)?;
        write(out, Box::into_raw(Box::new(HcTable { inner })), "out")
    })
}

/// # Safety
/// `table` is null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn hc_table_free(table: *mut HcTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_to_json(table: *const HcTable, out: *mut *mut c_char) -> HcStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        let text = serde_json::to_string(&t.inner.to_json()).map_err(failed)?;
        write(out, owned_string(text), "out")
    })
}

/// # Safety
/// `table` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_len(table: *const HcTable, out: *mut usize) -> HcStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        write(out, t.inner.len(), "out")
    })
}

/// `(xy|zw)` by ground index. `infinite` is set when the entry is unbounded,
/// in which case `out` is left unchanged.
///
/// # Safety
/// `table` is a live handle; `out` and `infinite` are writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_value(
    table: *const HcTable,
    x: usize,
    y: usize,
    z: usize,
    w: usize,
    out: *mut HcRational,
    infinite: *mut bool,
) -> HcStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        let n = t.inner.len();
        if [x, y, z, w].iter().any(|&i| i >= n) {
            return Err(input(format!("index out of range for {n} points")));
        }
        match t.inner.get(x, y, z, w).map_err(input)? {
            CrValue::Finite(r) => {
                write(infinite, false, "infinite")?;
                write(out, r.into(), "out")
            }
            CrValue::Infinite => write(infinite, true, "infinite"),
        }
    })
}

/// Least `k` for which the table is `k`-hyperbolic.
///
/// # Safety
/// `table` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_hyperbolicity(table: *const HcTable, out: *mut HcRational) -> HcStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        let cert = hyperbolicity_constant(&t.inner).map_err(failed)?;
        write(out, cert.k.into(), "out")
    })
}

/// Best-fitting tree for the table and its largest deviation.
///
/// # Safety
/// `table` is a live handle; `tree_out` and `deviation` are writable.
#[no_mangle]
pub unsafe extern "C" fn hc_table_fit(
    table: *const HcTable,
    tree_out: *mut *mut HcTree,
    deviation: *mut HcRational,
) -> HcStatus {
    guard(|| {
        let t = ref_arg(table, "table")?;
        if tree_out.is_null() || deviation.is_null() {
            return Err(Error::new(HcStatus::NullPointer, "output is null"));
        }
        let e = fit_tree(&t.inner).map_err(failed)?;
        write(deviation, e.deviation.into(), "deviation")?;
        write(tree_out, Box::into_raw(Box::new(HcTree { inner: e.tree })), "tree_out")
    })
}

/// Runs a named property suite; the report is JSON lines ending in a
/// summary object.
///
/// # Safety
/// `name` is nul-terminated; `report` and `pass` are writable.
#[no_mangle]
pub unsafe extern "C" fn hc_suite_run(
    name: *const c_char,
    seed: u64,
    report: *mut *mut c_char,
    pass: *mut bool,
) -> HcStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if report.is_null() || pass.is_null() {
            return Err(Error::new(HcStatus::NullPointer, "output is null"));
        }
        let r = run_suite(name, seed).map_err(input)?;
        write(pass, r.pass(), "pass")?;
        write(report, owned_string(r.to_json_lines()), "report")
    })
}

/// Whether PGL₂(F_q) acting on the projective line is sharply
/// `k`-transitive.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn hc_pgl2_sharp(q: u32, k: usize, out: *mut bool) -> HcStatus {
    guard(|| {
        let g = pgl2_fq_action(q).map_err(input)?;
        let c = verify_sharp_transitive(&g, k, DEFAULT_CAP).map_err(input)?;
        write(out, c.is_sharp(), "out")
    })
}
