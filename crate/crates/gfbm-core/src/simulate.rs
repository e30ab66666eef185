//! Exact Gaussian path sampling on grids via covariance factorization.
//!
//! The increments are non-stationary, so circulant/spectral samplers do not
//! apply; paths are drawn exactly as `L·z` with `L` the (jittered) Cholesky
//! factor of the assembled covariance matrix and `z` per-path seeded normal
//! substreams. An ensemble is a pure function of `(params, grid, n_paths,
//! master_seed)` — worker count never changes a byte.

use crate::covariance::{CovError, CovarianceOracle};
use crate::math;
use crate::params::{GfbmParams, ProcessTag};
use crate::rng::NormalStream;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

/// Time grid `0 < t_1 < … < t_n`; the origin is implicit (`X(0) = 0` a.s.)
/// and excluded because its zero row would make the matrix singular.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    kind: GridKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    /// Clustered at 0: `t_k = horizon·r^{n−k}` with ratio `r ∈ (0,1)`.
    Geometric { ratio: f64 },
}

impl GridKind {
    pub fn label(&self) -> &'static str {
        match self {
            GridKind::Uniform => "uniform",
            GridKind::Geometric { .. } => "geometric",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimError {
    BadSize { n: usize },
    BadRatio { ratio: f64 },
    BadHorizon { horizon: f64 },
    /// Factorization failed after the jitter ladder; carries the most
    /// negative pivot seen, a lower estimate of the smallest eigenvalue.
    FactorizationFailure { min_pivot: f64, max_jitter: f64 },
    OutOfRange { t: f64, horizon: f64 },
    Cov(CovError),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::BadSize { n } => write!(f, "grid needs at least 2 points, got {n}"),
            SimError::BadRatio { ratio } => {
                write!(f, "geometric ratio must lie in (0,1), got {ratio}")
            }
            SimError::BadHorizon { horizon } => write!(f, "horizon must be > 0, got {horizon}"),
            SimError::FactorizationFailure { min_pivot, max_jitter } => write!(
                f,
                "covariance factorization failed (smallest eigenvalue estimate {min_pivot:e}, \
                 jitter tried up to {max_jitter:e})"
            ),
            SimError::OutOfRange { t, horizon } => {
                write!(f, "t = {t} beyond grid horizon {horizon}")
            }
            SimError::Cov(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SimError {}

impl From<CovError> for SimError {
    fn from(e: CovError) -> Self {
        SimError::Cov(e)
    }
}

/// Build a grid of `n` points on `(0, horizon]`.
///
/// Uniform: `t_k = k·horizon/n`. Geometric: `t_k = horizon·ratio^{n−k}`.
pub fn build_grid(kind: GridKind, n: usize, horizon: f64) -> Result<Grid, SimError> {
    if n < 2 {
        return Err(SimError::BadSize { n });
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(SimError::BadHorizon { horizon });
    }
    let points = match kind {
        GridKind::Uniform => (1..=n)
            .map(|k| horizon * (k as f64 / n as f64))
            .collect::<Vec<_>>(),
        GridKind::Geometric { ratio } => {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(SimError::BadRatio { ratio });
            }
            (1..=n)
                .map(|k| horizon * math::powf(ratio, (n - k) as f64))
                .collect()
        }
    };
    Ok(Grid { points, kind })
}

impl Grid {
    /// Strictly increasing positive points; asserts the invariant on entry.
    pub fn from_points(points: Vec<f64>) -> Result<Grid, SimError> {
        if points.len() < 2 {
            return Err(SimError::BadSize { n: points.len() });
        }
        if points[0] <= 0.0 || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::BadHorizon {
                horizon: *points.last().unwrap(),
            });
        }
        Ok(Grid {
            points,
            kind: GridKind::Uniform,
        })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }
}

/// Dense symmetric matrix in row-major order.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Upper bound on the spectral radius (max absolute row sum).
    pub fn row_sum_bound(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Assemble the covariance matrix of the selected process on the grid.
///
/// Entries are computed once per unordered pair. Geometric grids use the exact
/// self-similarity identity `Cov(t_i, t_j) = t_i^{2H}·Cov(1, t_j/t_i)` so only
/// `n` distinct quadratures are needed; the point ratios collapse to powers of
/// the grid ratio.
pub fn assemble_covariance(
    oracle: &CovarianceOracle,
    tag: ProcessTag,
    grid: &Grid,
    workers: usize,
) -> Result<SymMatrix, SimError> {
    let n = grid.len();
    let pts = grid.points();
    let mut data = vec![0.0f64; n * n];

    if let GridKind::Geometric { ratio } = grid.kind() {
        // g[d] = Cov(1, ratio^{−d}); entry (i,j) = t_i^{2H}·g[j−i] for i ≤ j.
        let two_h = 2.0 * oracle.params().h();
        let mut g = vec![0.0f64; n];
        let compute = |d: usize| -> Result<f64, CovError> {
            oracle.cov(tag, 1.0, math::powf(ratio, -(d as f64)))
        };
        run_indexed(workers, n, &mut g, |d| compute(d))?;
        for i in 0..n {
            let scale = math::powf(pts[i], two_h);
            for j in i..n {
                let v = scale * g[j - i];
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        return Ok(SymMatrix { n, data });
    }

    // General grids: one quadrature per unordered pair, rows split round-robin.
    let mut rows: Vec<Vec<f64>> = vec![Vec::new(); n];
    run_indexed(workers, n, &mut rows, |i| -> Result<Vec<f64>, CovError> {
        let mut row = Vec::with_capacity(n - i);
        for j in i..n {
            row.push(oracle.cov(tag, pts[i], pts[j])?);
        }
        Ok(row)
    })?;
    for (i, row) in rows.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(SymMatrix { n, data })
}

/// Run `f(i)` for `i in 0..n`, writing results into `out[i]`; indices are
/// interleaved across workers and the output layout is index-determined, so
/// the result is identical for any worker count.
#[cfg(feature = "std")]
fn run_indexed<T, E, F>(workers: usize, n: usize, out: &mut [T], f: F) -> Result<(), E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync,
{
    let w = effective_workers(workers, n);
    if w > 1 {
        let mut partitions: Vec<Vec<(usize, &mut T)>> = (0..w).map(|_| Vec::new()).collect();
        for (k, slot) in out.iter_mut().enumerate() {
            partitions[k % w].push((k, slot));
        }
        let errors = std::sync::Mutex::new(Vec::new());
        std::thread::scope(|scope| {
            for part in partitions {
                let errors = &errors;
                let f = &f;
                scope.spawn(move || {
                    for (k, slot) in part {
                        match f(k) {
                            Ok(v) => *slot = v,
                            Err(e) => {
                                errors.lock().unwrap().push(e);
                                return;
                            }
                        }
                    }
                });
            }
        });
        if let Some(e) = errors.into_inner().unwrap().pop() {
            return Err(e);
        }
        return Ok(());
    }
    for (k, slot) in out.iter_mut().enumerate().take(n) {
        *slot = f(k)?;
    }
    Ok(())
}

#[cfg(not(feature = "std"))]
fn run_indexed<T, E, F>(_workers: usize, n: usize, out: &mut [T], f: F) -> Result<(), E>
where
    F: Fn(usize) -> Result<T, E>,
{
    for (k, slot) in out.iter_mut().enumerate().take(n) {
        *slot = f(k)?;
    }
    Ok(())
}

pub(crate) fn effective_workers(requested: usize, jobs: usize) -> usize {
    #[cfg(feature = "std")]
    {
        let auto = std::thread::available_parallelism()
            .map(|p| p.get())
            .unwrap_or(1);
        let w = if requested == 0 { auto } else { requested };
        w.min(jobs).max(1)
    }
    #[cfg(not(feature = "std"))]
    {
        let _ = requested;
        1.min(jobs).max(1)
    }
}

/// Lower-triangular Cholesky factor with the diagonal jitter that was needed.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    l: Vec<f64>,
    pub jitter_used: f64,
}

/// Factor `M = L·Lᵀ`, escalating diagonal jitter on failure:
/// 0, then `10⁻¹²·trace/n`, ×10 per retry, 3 retries. Jitter beyond
/// `10⁻⁶·trace/n` would silently deform the law and aborts instead.
pub fn factorize(mat: &SymMatrix) -> Result<CholeskyFactor, SimError> {
    let n = mat.n;
    let base = mat.trace() / n as f64;
    let mut min_pivot = f64::INFINITY;
    let mut jitter = 0.0f64;
    for retry in 0..=3 {
        if retry > 0 {
            jitter = 1e-12 * base * math::powf(10.0, (retry - 1) as f64);
        }
        if jitter > 1e-6 * base {
            break;
        }
        match try_cholesky(mat, jitter) {
            Ok(l) => {
                return Ok(CholeskyFactor {
                    n,
                    l,
                    jitter_used: jitter,
                })
            }
            Err(pivot) => min_pivot = min_pivot.min(pivot),
        }
    }
    Err(SimError::FactorizationFailure {
        min_pivot,
        max_jitter: jitter,
    })
}

fn try_cholesky(mat: &SymMatrix, jitter: f64) -> Result<Vec<f64>, f64> {
    let n = mat.n;
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = mat.get(i, j);
            if i == j {
                sum += jitter;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(sum);
                }
                l[i * n + i] = math::sqrt(sum);
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sample the paths in `range` into `out` (row-major, `n` columns per
    /// path). Each path is a pure function of `(master_seed, path index)`.
    pub fn sample_block(&self, master_seed: u64, range: Range<u64>, out: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(out.len(), (range.end - range.start) as usize * n);
        let mut z = vec![0.0f64; n];
        for (row, path) in range.clone().enumerate() {
            let mut stream = NormalStream::for_path(master_seed, path);
            stream.fill_normals(&mut z);
            let dst = &mut out[row * n..(row + 1) * n];
            for i in 0..n {
                let lrow = &self.l[i * n..i * n + i + 1];
                let mut acc = 0.0;
                for (lk, zk) in lrow.iter().zip(z.iter()) {
                    acc += lk * zk;
                }
                dst[i] = acc;
            }
        }
    }
}

/// Seeded ensemble of exact Gaussian sample paths.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    pub grid: Grid,
    pub params: GfbmParams,
    pub n_paths: usize,
    pub master_seed: u64,
    /// `n_paths × grid.len()` row-major path values.
    pub values: Vec<f64>,
    pub factor_jitter_used: f64,
}

/// Assemble, factor, and draw `n_paths` paths of the full process.
pub fn sample_ensemble(
    oracle: &CovarianceOracle,
    grid: &Grid,
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> Result<PathEnsemble, SimError> {
    sample_ensemble_of(oracle, ProcessTag::Full, grid, n_paths, master_seed, workers)
}

/// As [`sample_ensemble`] for a chosen component of the decomposition.
pub fn sample_ensemble_of(
    oracle: &CovarianceOracle,
    tag: ProcessTag,
    grid: &Grid,
    n_paths: usize,
    master_seed: u64,
    workers: usize,
) -> Result<PathEnsemble, SimError> {
    let mat = assemble_covariance(oracle, tag, grid, workers)?;
    let factor = factorize(&mat)?;
    let n = grid.len();
    let mut values = vec![0.0f64; n_paths * n];
    sample_into(&factor, master_seed, n_paths, workers, &mut values);
    Ok(PathEnsemble {
        grid: grid.clone(),
        params: *oracle.params(),
        n_paths,
        master_seed,
        values,
        factor_jitter_used: factor.jitter_used,
    })
}

/// Fill `out` with paths `0..n_paths`, splitting contiguous blocks over
/// workers; block boundaries cannot affect the bytes because substreams are
/// per-path.
pub fn sample_into(
    factor: &CholeskyFactor,
    master_seed: u64,
    n_paths: usize,
    workers: usize,
    out: &mut [f64],
) {
    let n = factor.n();
    debug_assert_eq!(out.len(), n_paths * n);
    if n_paths == 0 {
        return;
    }
    let w = effective_workers(workers, n_paths);
    #[cfg(feature = "std")]
    {
        if w > 1 {
            let per = n_paths.div_ceil(w);
            std::thread::scope(|scope| {
                for (b, chunk) in out.chunks_mut(per * n).enumerate() {
                    let start = (b * per) as u64;
                    let end = start + (chunk.len() / n) as u64;
                    scope.spawn(move || factor.sample_block(master_seed, start..end, chunk));
                }
            });
            return;
        }
    }
    let _ = w;
    factor.sample_block(master_seed, 0..n_paths as u64, out);
}

impl PathEnsemble {
    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    /// Per-path running supremum `max |X(s)|` over grid points `s ≤ t`.
    ///
    /// The implicit `X(0) = 0` never changes the maximum. When `t` falls
    /// before the first grid point the sup is 0 for every path and the
    /// result is flagged grid-too-coarse.
    pub fn running_sup(&self, t: f64) -> Result<RunningSup, SimError> {
        let horizon = self.grid.horizon();
        if t <= 0.0 || t > horizon * (1.0 + 1e-12) {
            return Err(SimError::OutOfRange { t, horizon });
        }
        let pts = self.grid.points();
        let m = pts.partition_point(|&p| p <= t);
        let mut values = Vec::with_capacity(self.n_paths);
        for i in 0..self.n_paths {
            let row = self.path(i);
            let mut acc = 0.0f64;
            for &v in &row[..m] {
                acc = acc.max(v.abs());
            }
            values.push(acc);
        }
        Ok(RunningSup {
            values,
            grid_too_coarse: m == 0,
        })
    }
}

#[derive(Debug, Clone)]
pub struct RunningSup {
    pub values: Vec<f64>,
    pub grid_too_coarse: bool,
}

/// Max |x| over the prefix of one path row with grid points ≤ t.
pub fn sup_prefix(row: &[f64], grid: &Grid, t: f64) -> f64 {
    let m = grid.points().partition_point(|&p| p <= t);
    row[..m].iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}
