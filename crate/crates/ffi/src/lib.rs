//! C interface to the ART1 network.
//!
//! Every function returns a [`VodartStatus`]. On failure a human-readable
//! message is kept per thread and can be fetched with
//! [`vodart_last_error_message`]. Networks are opaque handles created by
//! [`vodart_network_new`] or [`vodart_network_load`] and released with
//! [`vodart_network_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use vodart::art1::{similarity, Art1Config, Art1Error, Art1Network, CapacityPolicy};
use vodart::snapshot::{self, SnapshotError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VodartStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    ZeroPattern = 4,
    Capacity = 5,
    Io = 6,
    Parse = 7,
    Panic = 8,
}

/// Opaque network handle.
pub struct VodartNetwork {
    inner: Art1Network,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(VodartStatus, String);

impl From<Art1Error> for Failure {
    fn from(e: Art1Error) -> Self {
        Failure(art1_status(&e), e.to_string())
    }
}

/// Batch failures report the status of the pattern that caused them.
fn art1_status(e: &Art1Error) -> VodartStatus {
    match e {
        Art1Error::DimensionMismatch { .. } => VodartStatus::DimensionMismatch,
        Art1Error::ZeroPattern => VodartStatus::ZeroPattern,
        Art1Error::Capacity { .. } => VodartStatus::Capacity,
        Art1Error::InvalidPattern { source, .. } => art1_status(source),
        _ => VodartStatus::InvalidArgument,
    }
}

impl From<SnapshotError> for Failure {
    fn from(e: SnapshotError) -> Self {
        let status = match &e {
            SnapshotError::Io(_) => VodartStatus::Io,
            SnapshotError::Format { .. } | SnapshotError::Network(_) => VodartStatus::Parse,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: VodartStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VodartStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VodartStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VodartStatus::Panic
        }
    }
}

unsafe fn network<'a>(net: *const VodartNetwork) -> Result<&'a VodartNetwork, Failure> {
    net.as_ref()
        .ok_or_else(|| fail(VodartStatus::NullPointer, "network handle is null"))
}

unsafe fn network_mut<'a>(net: *mut VodartNetwork) -> Result<&'a mut VodartNetwork, Failure> {
    net.as_mut()
        .ok_or_else(|| fail(VodartStatus::NullPointer, "network handle is null"))
}

unsafe fn input<'a, T>(data: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if data.is_null() {
        return Err(fail(VodartStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts(data, len))
}

unsafe fn output<'a, T>(data: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if data.is_null() {
        return Err(fail(VodartStatus::NullPointer, format!("{what} is null")));
    }
    Ok(slice::from_raw_parts_mut(data, len))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(VodartStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(fail(VodartStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(VodartStatus::InvalidArgument, "path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn vodart_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn vodart_status_name(status: VodartStatus) -> *const c_char {
    let name: &'static CStr = match status {
        VodartStatus::Ok => c"ok",
        VodartStatus::NullPointer => c"null pointer",
        VodartStatus::InvalidArgument => c"invalid argument",
        VodartStatus::DimensionMismatch => c"dimension mismatch",
        VodartStatus::ZeroPattern => c"zero pattern",
        VodartStatus::Capacity => c"capacity exhausted",
        VodartStatus::Io => c"i/o error",
        VodartStatus::Parse => c"parse error",
        VodartStatus::Panic => c"panic",
    };
    name.as_ptr()
}

/// Creates an empty network. With `force_on_capacity` a full network
/// assigns to its most similar cluster instead of failing.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_new(
    input_dim: usize,
    vigilance: f64,
    max_clusters: usize,
    force_on_capacity: bool,
    out: *mut *mut VodartNetwork,
) -> VodartStatus {
    guard(|| {
        check_out(out, "out")?;
        let mut cfg = Art1Config::new(input_dim, vigilance, max_clusters);
        if force_on_capacity {
            cfg.on_capacity = CapacityPolicy::ForceBest;
        }
        let inner = Art1Network::new(cfg)?;
        *out = Box::into_raw(Box::new(VodartNetwork { inner }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_free(net: *mut VodartNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Presents one binary pattern of `len` bytes and writes the chosen cluster.
///
/// # Safety
/// `pattern` must point to `len` readable bytes and `out_cluster` to one
/// writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_present(
    net: *mut VodartNetwork,
    pattern: *const u8,
    len: usize,
    out_cluster: *mut usize,
) -> VodartStatus {
    guard(|| {
        let net = network_mut(net)?;
        let x = input(pattern, len, "pattern")?;
        check_out(out_cluster, "out_cluster")?;
        *out_cluster = net.inner.present(x)?.cluster;
        Ok(())
    })
}

/// Trains on `count` patterns stored row-major in `patterns`, each
/// `input_dim` bytes long, until the assignment repeats or the epoch limit
/// is hit. Writes one cluster index per pattern. `out_converged` may be NULL.
///
/// # Safety
/// `patterns` must hold `count * input_dim` bytes and `out_clusters`
/// room for `count` values.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_train(
    net: *mut VodartNetwork,
    patterns: *const u8,
    count: usize,
    input_dim: usize,
    out_clusters: *mut usize,
    out_converged: *mut bool,
) -> VodartStatus {
    guard(|| {
        let net = network_mut(net)?;
        let total = count
            .checked_mul(input_dim)
            .ok_or_else(|| fail(VodartStatus::InvalidArgument, "pattern buffer size overflows"))?;
        let flat = input(patterns, total, "patterns")?;
        let out = output(out_clusters, count, "out_clusters")?;
        let rows: Vec<Vec<u8>> = if input_dim == 0 {
            vec![vec![]; count]
        } else {
            flat.chunks_exact(input_dim).map(<[u8]>::to_vec).collect()
        };
        let assignment = net.inner.train(&rows)?;
        out.copy_from_slice(&assignment.clusters);
        if !out_converged.is_null() {
            *out_converged = assignment.converged;
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writing one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_active_clusters(net: *const VodartNetwork, out: *mut usize) -> VodartStatus {
    guard(|| {
        let net = network(net)?;
        check_out(out, "out")?;
        *out = net.inner.active_clusters();
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writing one `size_t`.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_input_dim(net: *const VodartNetwork, out: *mut usize) -> VodartStatus {
    guard(|| {
        let net = network(net)?;
        check_out(out, "out")?;
        *out = net.inner.input_dim();
        Ok(())
    })
}

fn cluster_row<T>(row: Option<&[T]>, cluster: usize, len: usize, dim: usize) -> Result<&[T], Failure> {
    let row = row.ok_or_else(|| fail(VodartStatus::InvalidArgument, format!("no committed cluster {cluster}")))?;
    if len != dim {
        return Err(fail(
            VodartStatus::DimensionMismatch,
            format!("buffer holds {len} values, network has {dim}"),
        ));
    }
    Ok(row)
}

/// Copies the top-down prototype of a committed cluster into `out`.
///
/// # Safety
/// `out` must have room for `len` bytes; `len` must equal the input dimension.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_prototype(
    net: *const VodartNetwork,
    cluster: usize,
    out: *mut u8,
    len: usize,
) -> VodartStatus {
    guard(|| {
        let net = network(net)?;
        let row = cluster_row(net.inner.prototype(cluster), cluster, len, net.inner.input_dim())?;
        output(out, len, "out")?.copy_from_slice(row);
        Ok(())
    })
}

/// Copies the bottom-up weights of a committed cluster into `out`.
///
/// # Safety
/// `out` must have room for `len` doubles; `len` must equal the input dimension.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_bottom_up(
    net: *const VodartNetwork,
    cluster: usize,
    out: *mut f64,
    len: usize,
) -> VodartStatus {
    guard(|| {
        let net = network(net)?;
        let row = cluster_row(net.inner.bottom_up(cluster), cluster, len, net.inner.input_dim())?;
        output(out, len, "out")?.copy_from_slice(row);
        Ok(())
    })
}

/// Fraction of the set bits of `pattern` that are also set in `prototype`.
///
/// # Safety
/// Both inputs must point to `len` readable bytes and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn vodart_similarity(
    pattern: *const u8,
    prototype: *const u8,
    len: usize,
    out: *mut f64,
) -> VodartStatus {
    guard(|| {
        let x = input(pattern, len, "pattern")?;
        let t = input(prototype, len, "prototype")?;
        check_out(out, "out")?;
        *out = similarity(x, t)?;
        Ok(())
    })
}

/// Writes the network to `path` in the text snapshot format.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_save(net: *const VodartNetwork, path: *const c_char) -> VodartStatus {
    guard(|| {
        let net = network(net)?;
        let path = path_arg(path)?;
        std::fs::write(&path, snapshot::to_string(&net.inner))
            .map_err(|e| fail(VodartStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// Reads a snapshot and returns a new handle through `out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for one pointer.
#[no_mangle]
pub unsafe extern "C" fn vodart_network_load(path: *const c_char, out: *mut *mut VodartNetwork) -> VodartStatus {
    guard(|| {
        let path = path_arg(path)?;
        check_out(out, "out")?;
        let text =
            std::fs::read_to_string(&path).map_err(|e| fail(VodartStatus::Io, format!("{}: {e}", path.display())))?;
        let inner = snapshot::from_str(&text)?;
        *out = Box::into_raw(Box::new(VodartNetwork { inner }));
        Ok(())
    })
}
