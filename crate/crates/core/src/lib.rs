//! Numerical characteristic numbers of closed manifolds from atlases of
//! charts: differential-form kernels, Hölder/Sobolev regularity estimates,
//! atlas and partition-of-unity machinery, connections and their curvature,
//! and Chern–Weil integration.

pub mod error;
pub mod forms;
pub mod holder;
pub mod atlas;
pub mod connections;
pub mod chern_weil;

pub use error::{Error, Result};

/// Size the global thread pool from `CHARNUM_THREADS` (if set) before the
/// first parallel computation; later calls are no-ops.
pub fn configure_threads() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| {
        if let Some(n) = std::env::var("CHARNUM_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    });
}
