//! C ABI for `ribounds`.
//!
//! Fallible functions return an [`RbStatus`]. After a failure,
//! [`rb_last_error`] returns a message describing it; the pointer stays
//! valid until the next failing call on the same thread.
//!
//! Tables and scenarios are opaque handles. Each handle returned through an
//! out-pointer must be released with its `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ribounds::correlators::CorrelatorTable;
use ribounds::optimizer::{maximize_chsh, OptConfig};
use ribounds::qmodel::{moments, QuantumScenario};
use ribounds::{ri, Error};

/// Number of parameters of the two-qubit family searched by [`rb_optimize_chsh`].
pub const RB_QUBIT_PARAMS: usize = 9;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Malformed = 3,
    Degenerate = 4,
    Precondition = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Correlator data for Alice's and Bob's two settings.
pub struct RbTable(CorrelatorTable);

/// A finite-dimensional quantum scenario.
pub struct RbScenario(QuantumScenario);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbVerdict {
    /// 1 local, 0 nonlocal, −1 unknown (outcomes not ±1).
    pub local: i32,
    pub quantum_compatible: bool,
    pub ri_feasible: bool,
    /// NaN when Alice's intervals do not meet.
    pub witness_r: f64,
    pub epsilon: f64,
    pub chsh: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbTlm {
    pub pass: bool,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(RbStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Malformed(_) => RbStatus::Malformed,
            Error::Degenerate(_) => RbStatus::Degenerate,
            Error::Precondition(_) => RbStatus::Precondition,
            Error::Linalg(_) | Error::NonFiniteObjective { .. } => RbStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(RbStatus::NullPointer, format!("{name} is null"))
}

fn record(status: RbStatus, msg: String) -> RbStatus {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
    status
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RbStatus::Ok,
        Ok(Err(Failure(status, msg))) => record(status, msg),
        Err(_) => record(RbStatus::Panic, "internal panic".to_owned()),
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write<T>(out: *mut T, name: &str, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

unsafe fn read_pair(p: *const f64, name: &str) -> Result<[f64; 2], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok([*p, *p.add(1)])
}

unsafe fn read_block(p: *const f64, name: &str) -> Result<[[f64; 2]; 2], Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    Ok([[*p, *p.add(1)], [*p.add(2), *p.add(3)]])
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the most recent failure on this thread, or NULL if none.
#[no_mangle]
pub extern "C" fn rb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a table from four Pearson coefficients in row-major order
/// `ϱ00, ϱ01, ϱ10, ϱ11` (Alice's setting first).
///
/// # Safety
/// `pearson` must point to 4 readable doubles and `out` to a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rb_table_from_pearson(pearson: *const f64, out: *mut *mut RbTable) -> RbStatus {
    guard(|| {
        let rho = read_block(pearson, "pearson")?;
        let t = CorrelatorTable::from_pearson(rho)?;
        write(out, "out", Box::into_raw(Box::new(RbTable(t))))
    })
}

/// Builds a table from means, variances and the row-major covariance block.
///
/// # Safety
/// The four pair pointers must each reference 2 doubles, `cov` 4 doubles,
/// and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rb_table_from_moments(
    means_a: *const f64,
    means_b: *const f64,
    var_a: *const f64,
    var_b: *const f64,
    cov: *const f64,
    out: *mut *mut RbTable,
) -> RbStatus {
    guard(|| {
        let t = CorrelatorTable::from_covariances(
            read_pair(means_a, "means_a")?,
            read_pair(means_b, "means_b")?,
            read_pair(var_a, "var_a")?,
            read_pair(var_b, "var_b")?,
            read_block(cov, "cov")?,
        )?;
        write(out, "out", Box::into_raw(Box::new(RbTable(t))))
    })
}

/// Writes the Pearson coefficients row-major into `out[4]`.
///
/// # Safety
/// `table` must be a live handle and `out` must reference 4 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rb_table_pearson(table: *const RbTable, out: *mut f64) -> RbStatus {
    guard(|| {
        let rho = as_ref(table, "table")?.0.pearson_matrix()?;
        if out.is_null() {
            return Err(null("out"));
        }
        for (k, x) in rho.iter().flatten().enumerate() {
            out.add(k).write(*x);
        }
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_table_free(table: *mut RbTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_classify(table: *const RbTable, tol: f64, out: *mut RbVerdict) -> RbStatus {
    guard(|| {
        let v = ri::classify(&as_ref(table, "table")?.0, tol)?;
        let verdict = RbVerdict {
            local: v.local.map_or(-1, i32::from),
            quantum_compatible: v.quantum_compatible,
            ri_feasible: v.ri_feasible,
            witness_r: v.witness_r.unwrap_or(f64::NAN),
            epsilon: v.epsilon,
            chsh: v.chsh,
        };
        write(out, "out", verdict)
    })
}

/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_tlm_check(table: *const RbTable, tol: f64, out: *mut RbTlm) -> RbStatus {
    guard(|| {
        let r = ri::tlm_check(&as_ref(table, "table")?.0, tol)?;
        write(out, "out", RbTlm { pass: r.pass, lhs: r.lhs, rhs: r.rhs })
    })
}

/// Gap between Alice's `r'` intervals; zero when they meet within `tol`.
///
/// # Safety
/// `table` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rb_epsilon(table: *const RbTable, tol: f64, out: *mut f64) -> RbStatus {
    guard(|| {
        let e = ri::epsilon_gap_with_tol(&as_ref(table, "table")?.0, tol)?;
        write(out, "out", e)
    })
}

/// Parses a scenario from the JSON form the CLI reads.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rb_scenario_from_json(json: *const c_char, out: *mut *mut RbScenario) -> RbStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Failure(RbStatus::InvalidUtf8, e.to_string()))?;
        let sc: QuantumScenario = serde_json::from_str(text).map_err(|e| Failure(RbStatus::Malformed, e.to_string()))?;
        write(out, "out", Box::into_raw(Box::new(RbScenario(sc))))
    })
}

/// Alice–Bob correlator table of a scenario, as a new handle.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn rb_scenario_table(scenario: *const RbScenario, out: *mut *mut RbTable) -> RbStatus {
    guard(|| {
        let m = moments(&as_ref(scenario, "scenario")?.0)?;
        write(out, "out", Box::into_raw(Box::new(RbTable(m.correlator_table()))))
    })
}

/// `η` of Alice and Bob.
///
/// # Safety
/// `scenario` must be a live handle; `eta_a` and `eta_b` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rb_scenario_eta(scenario: *const RbScenario, eta_a: *mut f64, eta_b: *mut f64) -> RbStatus {
    guard(|| {
        let m = moments(&as_ref(scenario, "scenario")?.0)?;
        write(eta_a, "eta_a", m.eta_a)?;
        write(eta_b, "eta_b", m.eta_b)
    })
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rb_scenario_free(scenario: *mut RbScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Multistart CHSH maximisation over two-qubit scenarios. Writes the best
/// value and, when `params` is non-NULL, its [`RB_QUBIT_PARAMS`] parameters.
///
/// # Safety
/// `best` must be writable; `params`, if non-NULL, must reference
/// `params_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rb_optimize_chsh(
    restarts: u32,
    max_evals: u32,
    seed: u64,
    best: *mut f64,
    params: *mut f64,
    params_len: usize,
) -> RbStatus {
    guard(|| {
        if best.is_null() {
            return Err(null("best"));
        }
        if !params.is_null() && params_len < RB_QUBIT_PARAMS {
            return Err(Failure(
                RbStatus::BufferTooSmall,
                format!("params holds {params_len} values, {RB_QUBIT_PARAMS} needed"),
            ));
        }
        let config = OptConfig { restarts: restarts as usize, max_evals: max_evals as usize, seed, ..OptConfig::default() };
        let r = maximize_chsh(&config)?;
        best.write(r.best_value);
        if !params.is_null() {
            for (k, x) in r.best_params.iter().enumerate() {
                params.add(k).write(*x);
            }
        }
        Ok(())
    })
}
