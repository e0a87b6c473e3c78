//! Reports, sweeps and the acceptance suite behind the `gqr` binary.

pub mod circuit;
pub mod output;
pub mod reports;
pub mod sweep;
pub mod verify;

pub type Result<T> = std::result::Result<T, Box<dyn std::error::Error + Send + Sync>>;

pub const WORKERS_ENV: &str = "GQR_WORKERS";

/// Worker count: flag, then `GQR_WORKERS`, then the config file, then the
/// available parallelism.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    let env = match std::env::var(WORKERS_ENV) {
        Ok(v) if !v.trim().is_empty() => Some(
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("{WORKERS_ENV}={v:?} is not a worker count"))?,
        ),
        _ => None,
    };
    let n = flag
        .or(env)
        .or(config)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err("worker count must be at least 1".into());
    }
    Ok(n)
}

pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    Ok(pool.install(f))
}

/// Default grids of the background-enhancement report: `(κ, N_S, N_B)`.
pub fn fig2a_defaults() -> (f64, Vec<f64>, Vec<f64>) {
    (1e-3, reports::spaced(1.0, 100.0, 21, true), vec![0.0, 2.0, 5.0, 10.0, 20.0])
}

/// Default grids of the detection report: `(N_B, κ, N_S, M)`.
pub fn fig2b_defaults() -> (f64, f64, Vec<f64>, Vec<f64>) {
    (20.0, 1e-4, vec![1e-2, 1e-1], reports::default_m_grid(4))
}
