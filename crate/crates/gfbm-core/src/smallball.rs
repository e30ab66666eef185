//! Monte Carlo estimation of the small-ball probability
//! `φ(θ) = P(sup_{[0,1]} |X| ≤ θ)` and the `ψ = −log φ` toolkit.
//!
//! By self-similarity `P(M(h) ≤ θ·h^H) = φ(θ)` for every horizon `h`, so an
//! estimate may be taken on any horizon; each one records the grid it was
//! computed on because the discrete supremum under-estimates the continuous
//! one and biases `φ̂` upward. Exponent fits exclude saturated estimates and
//! work in `log(−log p̂)` against `log(1/θ)`, where the theory predicts slope
//! `1/β`.

use crate::covariance::CovarianceOracle;
use crate::math;
use crate::params::{GfbmParams, ProcessTag};
use crate::rng::UniformStream;
use crate::simulate::{assemble_covariance, build_grid, factorize, Grid, GridKind, SimError};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

const Z95: f64 = 1.959_963_984_540_054;

/// 95% Wilson score interval for `hits` successes out of `n`. Always
/// contains `hits/n`, including the saturated endpoints.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    debug_assert!(n > 0);
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * math::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    let lo = if hits == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if hits == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Grid descriptor; the actual grid is instantiated per horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub kind: GridKind,
    pub n: usize,
}

impl GridSpec {
    pub fn build(&self, horizon: f64) -> Result<Grid, SimError> {
        build_grid(self.kind, self.n, horizon)
    }

    /// Halve every panel (n → 2n−1 points, nested refinement for uniform and
    /// geometric kinds alike).
    pub fn refined(&self) -> GridSpec {
        match self.kind {
            GridKind::Uniform => GridSpec {
                kind: GridKind::Uniform,
                n: 2 * self.n,
            },
            GridKind::Geometric { ratio } => GridSpec {
                kind: GridKind::Geometric {
                    ratio: math::sqrt(ratio),
                },
                n: 2 * self.n - 1,
            },
        }
    }
}

/// Default small-ball grid: geometric, clustered at 0 where the canonical
/// metric is largest per unit time. The ratio solves
/// `(1−r)^β = r^γ / 8`, which makes the coarsest panel satisfy
/// `(panel length)^β / t^γ ≤ horizon^H / 8`, and the smallest point sits at
/// `horizon / 8^{1/H}` so the first panel obeys the same budget.
pub fn default_grid_spec(params: &GfbmParams) -> GridSpec {
    let beta = params.beta();
    let gamma = params.gamma();
    let (mut lo, mut hi) = (1e-9, 1.0 - 1e-9);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let f = math::powf(1.0 - mid, beta) - math::powf(mid, gamma) / 8.0;
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ratio = 0.5 * (lo + hi);
    let depth = math::ln(8.0) / params.h();
    let n = (depth / -math::ln(ratio)) as usize + 2;
    GridSpec {
        kind: GridKind::Geometric { ratio },
        n: n.max(2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaturationFlag {
    None,
    /// Every path satisfied the ball constraint.
    AllHits,
    /// No path satisfied the ball constraint.
    NoHits,
}

/// One Monte Carlo estimate of `φ(θ)`, with its provenance.
#[derive(Debug, Clone)]
pub struct SmallBallEstimate {
    pub theta: f64,
    pub horizon: f64,
    pub n_paths: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub grid_n: usize,
    pub grid_kind: GridKind,
    pub seed: u64,
    pub flag: SaturationFlag,
}

/// Estimate `φ(θ)` by counting paths with `sup_{[0,horizon]} |X| ≤ θ·horizon^H`.
pub fn estimate_phi(
    oracle: &CovarianceOracle,
    theta: f64,
    horizon: f64,
    grid_spec: &GridSpec,
    n_paths: u64,
    seed: u64,
    workers: usize,
) -> Result<SmallBallEstimate, SimError> {
    if !(theta > 0.0) {
        return Err(SimError::Cov(crate::covariance::CovError::BadInput(
            "theta must be > 0",
        )));
    }
    let grid = grid_spec.build(horizon)?;
    let mat = assemble_covariance(oracle, ProcessTag::Full, &grid, workers)?;
    let factor = factorize(&mat)?;
    let threshold = theta * math::powf(horizon, oracle.params().h());

    let n = grid.len();
    // Stream paths in blocks; per-path seeding keeps the count independent of
    // the blocking.
    let block_paths = (8usize << 20) / n.max(1);
    let block_paths = block_paths.clamp(1, n_paths.min(1 << 20) as usize);
    let mut buf = vec![0.0f64; block_paths * n];
    let mut hits = 0u64;
    let mut done = 0u64;
    while done < n_paths {
        let m = block_paths.min((n_paths - done) as usize);
        let out = &mut buf[..m * n];
        sample_block_range(&factor, seed, done, m, workers, out);
        for row in out.chunks_exact(n) {
            let sup = row.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if sup <= threshold {
                hits += 1;
            }
        }
        done += m as u64;
    }

    let p_hat = hits as f64 / n_paths as f64;
    let (ci_low, ci_high) = wilson_interval(hits, n_paths);
    let flag = if hits == 0 {
        SaturationFlag::NoHits
    } else if hits == n_paths {
        SaturationFlag::AllHits
    } else {
        SaturationFlag::None
    };
    Ok(SmallBallEstimate {
        theta,
        horizon,
        n_paths,
        hits,
        p_hat,
        ci_low,
        ci_high,
        grid_n: grid.len(),
        grid_kind: grid.kind(),
        seed,
        flag,
    })
}

fn sample_block_range(
    factor: &crate::simulate::CholeskyFactor,
    seed: u64,
    first_path: u64,
    count: usize,
    workers: usize,
    out: &mut [f64],
) {
    let n = factor.n();
    let w = crate::simulate::effective_workers(workers, count);
    #[cfg(feature = "std")]
    {
        if w > 1 {
            let per = count.div_ceil(w);
            std::thread::scope(|scope| {
                for (b, chunk) in out.chunks_mut(per * n).enumerate() {
                    let start = first_path + (b * per) as u64;
                    let end = start + (chunk.len() / n) as u64;
                    scope.spawn(move || factor.sample_block(seed, start..end, chunk));
                }
            });
            return;
        }
    }
    let _ = (n, w);
    factor.sample_block(seed, first_path..first_path + count as u64, out);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitError {
    /// Fewer than 4 usable (unsaturated, non-extreme) estimates.
    TooFewPoints { usable: usize },
    /// The usable θ values span less than a factor of 2.
    InsufficientSpread { spread: f64 },
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::TooFewPoints { usable } => {
                write!(f, "exponent fit needs >= 4 usable estimates, got {usable}")
            }
            FitError::InsufficientSpread { spread } => {
                write!(f, "theta spread factor {spread:.3} below 2")
            }
        }
    }
}

impl core::error::Error for FitError {}

#[derive(Debug, Clone)]
pub struct ExponentFit {
    /// Slope of `log(−log p̂)` on `log(1/θ)`; the theory predicts `1/β`.
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub points_used: usize,
}

/// Weighted least-squares fit of the small-ball exponent.
///
/// Estimates with `p̂` outside `[10/n, 1 − 10/n]` are dropped — the variance
/// of `log(−log p̂)` explodes at the edges. Weights are inverse delta-method
/// variances with a floor of 0.05² that accounts for the power law holding
/// only asymptotically; without the floor the largest-θ points dominate and
/// drag the fit toward their curvature.
pub fn fit_small_ball_exponent(estimates: &[SmallBallEstimate]) -> Result<ExponentFit, FitError> {
    const FLOOR2: f64 = 0.0025;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut ws = Vec::new();
    for e in estimates {
        let n = e.n_paths as f64;
        let edge = 10.0 / n;
        if !(e.p_hat >= edge && e.p_hat <= 1.0 - edge) {
            continue;
        }
        let lp = math::ln(e.p_hat);
        xs.push(math::ln(1.0 / e.theta));
        ys.push(math::ln(-lp));
        let var = (1.0 - e.p_hat) / (n * e.p_hat * lp * lp);
        ws.push(1.0 / (var + FLOOR2));
    }
    if xs.len() < 4 {
        return Err(FitError::TooFewPoints { usable: xs.len() });
    }
    let mut tmin = f64::INFINITY;
    let mut tmax = 0.0f64;
    for e in estimates {
        tmin = tmin.min(e.theta);
        tmax = tmax.max(e.theta);
    }
    let spread = tmax / tmin;
    if !(spread >= 2.0) {
        return Err(FitError::InsufficientSpread { spread });
    }
    let sw: f64 = ws.iter().sum();
    let xb = xs.iter().zip(&ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let yb = ys.iter().zip(&ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for ((x, y), w) in xs.iter().zip(&ys).zip(&ws) {
        sxy += w * (x - xb) * (y - yb);
        sxx += w * (x - xb) * (x - xb);
    }
    let slope = sxy / sxx;
    Ok(ExponentFit {
        slope,
        stderr: math::sqrt(1.0 / sxx),
        intercept: yb - slope * xb,
        points_used: xs.len(),
    })
}

/// Fitted constant for the two-sided bound `1/(K₁θ^{1/β}) ≤ ψ(θ) ≤ K₁/θ^{1/β}`
/// over the usable estimates.
pub fn fit_k1(estimates: &[SmallBallEstimate], beta: f64) -> Option<f64> {
    let mut k1 = 1.0f64;
    let mut seen = false;
    for e in estimates {
        let n = e.n_paths as f64;
        if !(e.p_hat >= 10.0 / n && e.p_hat <= 1.0 - 10.0 / n) {
            continue;
        }
        let psi = -math::ln(e.p_hat);
        if psi <= 0.0 {
            continue;
        }
        let prod = psi * math::powf(e.theta, 1.0 / beta);
        k1 = k1.max(prod).max(1.0 / prod);
        seen = true;
    }
    seen.then_some(k1)
}

/// Parametric small-ball model `φ(θ) = exp(−κ θ^{−1/β})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallBallModel {
    pub kappa: f64,
    pub beta: f64,
}

impl SmallBallModel {
    pub fn new(kappa: f64, beta: f64) -> Option<Self> {
        (kappa > 0.0 && beta > 0.0 && beta < 1.0).then_some(SmallBallModel { kappa, beta })
    }

    pub fn phi(&self, theta: f64) -> f64 {
        math::exp(-self.psi(theta))
    }

    /// Rate function `ψ(θ) = κ θ^{−1/β}`; positive, nonincreasing, convex.
    pub fn psi(&self, theta: f64) -> f64 {
        self.kappa * math::powf(theta, -1.0 / self.beta)
    }

    pub fn psi_prime(&self, theta: f64) -> f64 {
        -(self.kappa / self.beta) * math::powf(theta, -1.0 - 1.0 / self.beta)
    }

    /// Two-sided ψ′ envelope constant `K₂ = max(κ/β, β/κ)`.
    pub fn k2(&self) -> f64 {
        (self.kappa / self.beta).max(self.beta / self.kappa)
    }

    /// Below `θ₀ = (β/K₂)^β` the map `θ^{−1/β} φ(θ)` is increasing.
    pub fn theta0(&self) -> f64 {
        math::powf(self.beta / self.k2(), self.beta)
    }

    /// Exact monotonicity threshold of `θ^{−1/β} φ(θ)` for this model: `κ^β`.
    pub fn monotonicity_threshold(&self) -> f64 {
        math::powf(self.kappa, self.beta)
    }
}

/// Exact-model property report for the ψ toolkit.
#[derive(Debug, Clone)]
pub struct ModelPsiReport {
    pub convexity_ok: bool,
    /// ψ′ lies in `[−K₂ θ^{−1−1/β}, −θ^{−1−1/β}/K₂]` on `(0, 1/K₂)`.
    pub psi_prime_bounds_ok: bool,
    /// Fitted ratio-control constant: sup of `|log(φ(ε)/φ(θ))|·θ^{1+1/β}/|ε−θ|`
    /// over `θ ≤ ε ≤ 2θ < 1`.
    pub fitted_k3: f64,
    pub ratio_bound_ok: bool,
    /// `θ^{−1/β} φ(θ)` increasing on the sampled sub-threshold range.
    pub monotone_below_theta0_ok: bool,
    pub k2: f64,
    pub theta0: f64,
}

/// Check the model-mode ψ properties on a log-spaced θ grid.
pub fn model_psi_report(model: &SmallBallModel, grid_points: usize) -> ModelPsiReport {
    let m = grid_points.max(16);
    let theta_at = |i: usize| -> f64 {
        // log-spaced over [1e-3, 0.999]
        let t = i as f64 / (m - 1) as f64;
        math::exp(math::ln(1e-3) * (1.0 - t) + math::ln(0.999) * t)
    };
    let mut convexity_ok = true;
    for i in 1..m - 1 {
        let (a, b, c) = (theta_at(i - 1), theta_at(i), theta_at(i + 1));
        // second difference on a non-uniform grid
        let d2 = (model.psi(c) - model.psi(b)) / (c - b) - (model.psi(b) - model.psi(a)) / (b - a);
        if d2 < -1e-12 * model.psi(b).abs() {
            convexity_ok = false;
        }
    }
    let k2 = model.k2();
    let mut psi_prime_bounds_ok = true;
    for i in 0..m {
        let th = theta_at(i);
        if th >= 1.0 / k2 {
            continue;
        }
        let envelope = math::powf(th, -1.0 - 1.0 / model.beta);
        let d = model.psi_prime(th);
        if !(-k2 * envelope - 1e-12 <= d && d <= -envelope / k2 + 1e-12) {
            psi_prime_bounds_ok = false;
        }
    }
    let mut fitted_k3 = 0.0f64;
    for i in 0..m {
        let th = theta_at(i);
        for j in 1..=8 {
            let eps = th * (1.0 + j as f64 / 8.0);
            if !(eps <= 2.0 * th && 2.0 * th < 1.0) {
                continue;
            }
            let lhs = (model.psi(th) - model.psi(eps)).abs();
            let k3 = lhs * math::powf(th, 1.0 + 1.0 / model.beta) / (eps - th);
            fitted_k3 = fitted_k3.max(k3);
        }
    }
    let theta0 = model.theta0();
    let mut monotone_ok = true;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..m {
        let th = theta_at(i);
        if th >= theta0 {
            break;
        }
        let v = math::powf(th, -1.0 / model.beta) * model.phi(th);
        if v < prev * (1.0 - 1e-13) {
            monotone_ok = false;
        }
        prev = v;
    }
    ModelPsiReport {
        convexity_ok,
        psi_prime_bounds_ok,
        fitted_k3,
        ratio_bound_ok: fitted_k3.is_finite() && fitted_k3 > 0.0,
        monotone_below_theta0_ok: monotone_ok,
        k2,
        theta0,
    }
}

/// Empirical ψ report over CI-bearing estimates (sorted by θ internally).
#[derive(Debug, Clone)]
pub struct EmpiricalPsiReport {
    /// Largest θ up to which `θ^{−1/β} p̂` is nondecreasing within joint CIs.
    pub detected_monotone_threshold: f64,
    /// Violations of monotonicity that exceed the joint confidence bands.
    pub monotonicity_violations: usize,
    /// Convexity violations of `ψ̂` beyond CI slack.
    pub convexity_violations: usize,
}

pub fn empirical_psi_report(estimates: &[SmallBallEstimate], beta: f64) -> EmpiricalPsiReport {
    let mut es: Vec<&SmallBallEstimate> = estimates
        .iter()
        .filter(|e| e.p_hat > 0.0 && e.p_hat < 1.0)
        .collect();
    es.sort_by(|a, b| a.theta.partial_cmp(&b.theta).unwrap());

    let val = |e: &SmallBallEstimate, p: f64| math::powf(e.theta, -1.0 / beta) * p;
    let mut threshold = f64::NAN;
    let mut violations = 0usize;
    for w in es.windows(2) {
        let (a, b) = (w[0], w[1]);
        // nondecreasing within CIs: upper(b) must not fall below lower(a)
        if val(b, b.ci_high) < val(a, a.ci_low) {
            violations += 1;
        } else {
            threshold = b.theta;
        }
    }
    let mut convexity_violations = 0usize;
    for w in es.windows(3) {
        let (a, b, c) = (w[0], w[1], w[2]);
        // ψ̂ convex: interior point below the chord, with CI slack
        let chord = ((c.theta - b.theta) * -math::ln(a.p_hat)
            + (b.theta - a.theta) * -math::ln(c.p_hat))
            / (c.theta - a.theta);
        let slack = (math::ln(b.ci_high) - math::ln(b.ci_low)).abs()
            + (math::ln(a.ci_high) - math::ln(a.ci_low)).abs()
            + (math::ln(c.ci_high) - math::ln(c.ci_low)).abs();
        if -math::ln(b.p_hat) > chord + slack {
            convexity_violations += 1;
        }
    }
    EmpiricalPsiReport {
        detected_monotone_threshold: threshold,
        monotonicity_violations: violations,
        convexity_violations,
    }
}

/// Joint small-ball probe `P(M(t) ≤ θ t^H, M(u) ≤ η)` with its decoupling
/// covariate `(u−t)/(u^{γ/β} η^{1/β})`; the theory predicts at-least-linear
/// decay of `log(p_joint/φ(θ))` in the covariate.
#[derive(Debug, Clone)]
pub struct JointProbe {
    pub p_joint: f64,
    pub covariate: f64,
    /// Same-ensemble estimate of `P(M(t) ≤ θ t^H)` for normalization.
    pub p_first: f64,
    pub n_paths: u64,
    pub no_hits: bool,
}

pub fn joint_smallball_probe(
    oracle: &CovarianceOracle,
    t: f64,
    u: f64,
    theta: f64,
    eta: f64,
    grid_spec: &GridSpec,
    n_paths: u64,
    seed: u64,
    workers: usize,
) -> Result<JointProbe, SimError> {
    if !(t > 0.0 && t <= u) {
        return Err(SimError::Cov(crate::covariance::CovError::BadInput(
            "need 0 < t <= u",
        )));
    }
    let p = oracle.params();
    let grid = grid_spec.build(u)?;
    let mat = assemble_covariance(oracle, ProcessTag::Full, &grid, workers)?;
    let factor = factorize(&mat)?;
    let thr_t = theta * math::powf(t, p.h());
    let n = grid.len();
    let cut = grid.points().partition_point(|&x| x <= t);

    let block_paths = ((8usize << 20) / n.max(1)).clamp(1, n_paths.min(1 << 20) as usize);
    let mut buf = vec![0.0f64; block_paths * n];
    let mut joint = 0u64;
    let mut first = 0u64;
    let mut done = 0u64;
    while done < n_paths {
        let m = block_paths.min((n_paths - done) as usize);
        let out = &mut buf[..m * n];
        sample_block_range(&factor, seed, done, m, workers, out);
        for row in out.chunks_exact(n) {
            let sup_t = row[..cut].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if sup_t <= thr_t {
                first += 1;
                let sup_u = row.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
                if sup_u <= eta {
                    joint += 1;
                }
            }
        }
        done += m as u64;
    }
    let covariate =
        (u - t) / (math::powf(u, p.gamma() / p.beta()) * math::powf(eta, 1.0 / p.beta()));
    Ok(JointProbe {
        p_joint: joint as f64 / n_paths as f64,
        covariate,
        p_first: first as f64 / n_paths as f64,
        n_paths,
        no_hits: joint == 0,
    })
}

/// Synthetic Bernoulli draws for CI-coverage checks (test support).
pub fn bernoulli_hits(p: f64, n: u64, seed: u64, stream: u64) -> u64 {
    let mut s = UniformStream::for_stream(seed, stream);
    let mut hits = 0u64;
    for _ in 0..n {
        if s.next_uniform() < p {
            hits += 1;
        }
    }
    hits
}
