//! C ABI over the osnlab graph, hashing and metrics layers.
//!
//! Graphs and metric reports cross the boundary as opaque handles that the
//! caller owns and must release with the matching `*_free` function. Every
//! fallible call returns an [`OsnStatus`]; on failure a human-readable
//! message is kept per thread and can be fetched with
//! [`osn_last_error_message`]. Panics never unwind into C: they are caught
//! and reported as [`OsnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use osnlab::graph::{self, SocialGraph};
use osnlab::metrics::{full_report, MetricsParams, MetricsReport, SpectralOptions};
use osnlab::pipeline;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OsnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    /// The requested quantity does not exist for this input, e.g. the
    /// effective diameter of a graph without edges.
    Undefined = 6,
    Panic = 7,
    BufferTooSmall = 8,
}

/// Opaque owned graph.
pub struct OsnGraph {
    inner: SocialGraph,
}

/// Opaque owned metrics report.
pub struct OsnReport {
    inner: MetricsReport,
}

/// Scalar summary of a metrics report.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OsnMetricsSummary {
    pub nodes: u64,
    pub edges: u64,
    pub avg_degree: f64,
    pub median_degree: u64,
    pub max_degree: u64,
    /// Only meaningful when `has_effective_diameter` is true.
    pub effective_diameter: f64,
    pub has_effective_diameter: bool,
    pub avg_clustering: f64,
    pub components: u64,
    pub largest_component_fraction: f64,
    pub top_singular_value: f64,
    pub spectral_converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(OsnStatus, String);

impl Failure {
    fn new(status: OsnStatus, message: impl Into<String>) -> Self {
        Failure(status, message.into())
    }
}

fn set_last_error(message: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = message);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> OsnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            OsnStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            OsnStatus::Panic
        }
    }
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(Failure::new(OsnStatus::NullPointer, "path is null"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|e| Failure::new(OsnStatus::InvalidUtf8, format!("path is not UTF-8: {e}")))?;
    Ok(PathBuf::from(s))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(OsnStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(OsnStatus::NullPointer, format!("{what} is null")))
}

fn boxed_graph(g: SocialGraph) -> *mut OsnGraph {
    Box::into_raw(Box::new(OsnGraph { inner: g }))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `cap - 1` bytes. Returns the buffer
/// size needed for the full message including the terminator; `buf` may be
/// null to query that size. The message is empty after a successful call.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn osn_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Static NUL-terminated version string of the library.
#[no_mangle]
pub extern "C" fn osn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Loads a TAB-separated edge list. Duplicate lines are merged.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_from_edge_list(path: *const c_char, out: *mut *mut OsnGraph) -> OsnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path)?;
        let read = graph::read_edge_list(&path).map_err(|e| match e {
            graph::EdgeListError::Io(_) => Failure::new(OsnStatus::Io, format!("{}: {e}", path.display())),
            graph::EdgeListError::Parse { .. } => Failure::new(OsnStatus::Parse, format!("{}: {e}", path.display())),
        })?;
        *out = boxed_graph(read.graph);
        Ok(())
    })
}

/// Loads an undirected GraphML document.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_from_graphml(path: *const c_char, out: *mut *mut OsnGraph) -> OsnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = path_arg(path)?;
        let doc = std::fs::read_to_string(&path)
            .map_err(|e| Failure::new(OsnStatus::Io, format!("{}: {e}", path.display())))?;
        let g = graph::import_graphml(&doc)
            .map_err(|e| Failure::new(OsnStatus::Parse, format!("{}: {e}", path.display())))?;
        *out = boxed_graph(g);
        Ok(())
    })
}

/// Builds a graph from `n_edges` pairs stored flat in `pairs`
/// (`u0, v0, u1, v1, ...`). Self-loops are rejected; duplicates are merged.
///
/// # Safety
/// `pairs` must be valid for `2 * n_edges` reads (it may be null when
/// `n_edges` is zero); `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_from_edges(pairs: *const u64, n_edges: usize, out: *mut *mut OsnGraph) -> OsnStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let flat: &[u64] = if n_edges == 0 {
            &[]
        } else {
            if pairs.is_null() {
                return Err(Failure::new(OsnStatus::NullPointer, "pairs is null"));
            }
            let len = n_edges
                .checked_mul(2)
                .ok_or_else(|| Failure::new(OsnStatus::InvalidArgument, "edge count overflows"))?;
            std::slice::from_raw_parts(pairs, len)
        };
        let mut b = graph::GraphBuilder::with_capacity(0, n_edges);
        for (i, pair) in flat.chunks_exact(2).enumerate() {
            b.add_edge(pair[0], pair[1])
                .map_err(|e| Failure::new(OsnStatus::InvalidArgument, format!("edge {i}: {e}")))?;
        }
        *out = boxed_graph(b.build());
        Ok(())
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_free(g: *mut OsnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live graph handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_node_count(g: *const OsnGraph, out: *mut u64) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        *out_arg(out, "out")? = g.inner.node_count() as u64;
        Ok(())
    })
}

/// # Safety
/// `g` must be a live graph handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_edge_count(g: *const OsnGraph, out: *mut u64) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        *out_arg(out, "out")? = g.inner.edge_count() as u64;
        Ok(())
    })
}

/// Degree of node `id`; [`OsnStatus::InvalidArgument`] if it is absent.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_degree(g: *const OsnGraph, id: u64, out: *mut u64) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let out = out_arg(out, "out")?;
        let d = g
            .inner
            .degree_of(id)
            .ok_or_else(|| Failure::new(OsnStatus::InvalidArgument, format!("node {id} is not in the graph")))?;
        *out = d as u64;
        Ok(())
    })
}

/// Writes the graph as GraphML.
///
/// # Safety
/// `g` must be a live graph handle; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_write_graphml(g: *const OsnGraph, path: *const c_char) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let path = path_arg(path)?;
        graph::write_graphml(&g.inner, &path)
            .map_err(|e| Failure::new(OsnStatus::Io, format!("{}: {e}", path.display())))
    })
}

/// Induced subgraph on all nodes within `radius` hops of `center`.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_graph_ego(g: *const OsnGraph, center: u64, radius: u32, out: *mut *mut OsnGraph) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let out = out_arg(out, "out")?;
        let ego = pipeline::extract_ego_network(&g.inner, center, radius)
            .map_err(|e| Failure::new(OsnStatus::InvalidArgument, e.to_string()))?;
        *out = boxed_graph(ego);
        Ok(())
    })
}

/// 48-bit pseudonym of `len` bytes at `key`. `key` may be null when `len`
/// is zero.
///
/// # Safety
/// `key` must be valid for `len` bytes of reads.
#[no_mangle]
pub unsafe extern "C" fn osn_aphash48(key: *const u8, len: usize) -> u64 {
    let bytes: &[u8] = if len == 0 || key.is_null() { &[] } else { std::slice::from_raw_parts(key, len) };
    pipeline::aphash48(bytes).value()
}

/// Pseudonym of the decimal rendering of a numeric ID.
#[no_mangle]
pub extern "C" fn osn_anonymize_id(raw: u64) -> u64 {
    pipeline::anonymize_numeric(raw).value()
}

/// Computes the full metrics suite. `q` is the effective-diameter quantile
/// in (0, 1]; `spectral_k >= 1` singular values are requested; `seed`
/// drives hop-plot sampling and the eigensolver.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_metrics_compute(
    g: *const OsnGraph,
    q: f64,
    spectral_k: usize,
    seed: u64,
    out: *mut *mut OsnReport,
) -> OsnStatus {
    guard(|| {
        let g = ref_arg(g, "graph")?;
        let out = out_arg(out, "out")?;
        let params = MetricsParams {
            q,
            spectral: SpectralOptions { k: spectral_k, seed, ..SpectralOptions::default() },
            rng_seed: seed,
            ..MetricsParams::default()
        };
        let analysis = full_report(&g.inner, &params).map_err(|e| {
            let status = match e {
                osnlab::metrics::MetricsError::BadQuantile(_) | osnlab::metrics::MetricsError::InvalidParameter(_) => {
                    OsnStatus::InvalidArgument
                }
                _ => OsnStatus::Undefined,
            };
            Failure::new(status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(OsnReport { inner: analysis.report }));
        Ok(())
    })
}

/// Releases a report. Null is ignored.
///
/// # Safety
/// `r` must be null or a handle returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn osn_report_free(r: *mut OsnReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// # Safety
/// `r` must be a live report handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_report_summary(r: *const OsnReport, out: *mut OsnMetricsSummary) -> OsnStatus {
    guard(|| {
        let r = &ref_arg(r, "report")?.inner;
        let out = out_arg(out, "out")?;
        *out = OsnMetricsSummary {
            nodes: r.n_nodes as u64,
            edges: r.n_edges as u64,
            avg_degree: r.avg_degree,
            median_degree: r.median_degree as u64,
            max_degree: r.max_degree as u64,
            effective_diameter: r.effective_diameter.unwrap_or(f64::NAN),
            has_effective_diameter: r.effective_diameter.is_some(),
            avg_clustering: r.avg_clustering,
            components: r.component_sizes.len() as u64,
            largest_component_fraction: r.largest_component_fraction,
            top_singular_value: r.top_singular_values.first().copied().unwrap_or(0.0),
            spectral_converged: r.spectral_converged,
        };
        Ok(())
    })
}

/// Effective diameter, or [`OsnStatus::Undefined`] when the graph has no
/// connected pairs.
///
/// # Safety
/// `r` must be a live report handle; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_report_effective_diameter(r: *const OsnReport, out: *mut f64) -> OsnStatus {
    guard(|| {
        let r = &ref_arg(r, "report")?.inner;
        let out = out_arg(out, "out")?;
        *out = r
            .effective_diameter
            .ok_or_else(|| Failure::new(OsnStatus::Undefined, "effective diameter is undefined: no connected pairs"))?;
        Ok(())
    })
}

/// Copies the descending singular values into `buf`. `*written` always
/// receives the number of values available; if that exceeds `cap` nothing
/// is copied and [`OsnStatus::BufferTooSmall`] is returned.
///
/// # Safety
/// `r` must be a live report handle; `buf` must be valid for `cap` writes
/// (it may be null when `cap` is zero); `written` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn osn_report_singular_values(
    r: *const OsnReport,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> OsnStatus {
    guard(|| {
        let r = &ref_arg(r, "report")?.inner;
        let written = out_arg(written, "written")?;
        let values = &r.top_singular_values;
        *written = values.len();
        if values.len() > cap {
            return Err(Failure::new(
                OsnStatus::BufferTooSmall,
                format!("{} singular values do not fit in {cap}", values.len()),
            ));
        }
        if !values.is_empty() {
            if buf.is_null() {
                return Err(Failure::new(OsnStatus::NullPointer, "buf is null"));
            }
            ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
        }
        Ok(())
    })
}
