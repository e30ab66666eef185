//! Parameter validation, derived indices, and pointwise kernel evaluation.
//!
//! The process is driven by the kernel
//!
//! ```text
//! G(s, x) = ((s−x)₊^α − (−x)₊^α) |x|^{−γ}
//! ```
//!
//! with `γ ∈ (0, 1/2)` and `α ∈ (−1/2+γ, 1/2)`. The fractional-Brownian limit
//! `γ = 0` is admitted behind an explicit flag: it is the only case with a
//! closed-form covariance and serves as a cross-oracle everywhere.

use crate::math;
use core::fmt;

/// Validated parameter pair with all derived indices.
///
/// * `h = α − γ + 1/2` — self-similarity index, in (0, 1);
/// * `beta = α + 1/2` — small-ball exponent scale, in (γ, 1);
/// * `tau = min{(1−H)/4, H/4, (1/2−γ)/4}` — decoupling exponent for joint
///   small-ball bounds;
/// * `kappa5 = min{1/2−γ, 1/2+γ−α}` — decay rate of the Lamperti
///   autocovariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GfbmParams {
    alpha: f64,
    gamma: f64,
    h: f64,
    beta: f64,
    tau: f64,
    kappa5: f64,
    fbm_limit: bool,
}

/// Which component of the decomposition `X = Y + Z` a covariance refers to.
///
/// `Y` is the history part (integral over negative time), `Z` the generalized
/// Riemann–Liouville part (integral over (0, t)). They are independent, so
/// `Cov_X = Cov_Y + Cov_Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProcessTag {
    Full,
    History,
    RiemannLiouville,
}

impl ProcessTag {
    pub fn label(self) -> &'static str {
        match self {
            ProcessTag::Full => "X",
            ProcessTag::History => "Y",
            ProcessTag::RiemannLiouville => "Z",
        }
    }
}

/// Rejected parameter input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangeError {
    /// γ outside [0, 1/2), or γ = 0 without the FBM-limit flag.
    Gamma { gamma: f64, fbm_limit: bool },
    /// α outside (−1/2+γ, 1/2).
    Alpha { alpha: f64, gamma: f64 },
    /// α in [1/2, 1/2+γ): the process is differentiable there and every
    /// small-ball criterion here assumes β = α + 1/2 < 1.
    AlphaDerivativeRegime { alpha: f64, gamma: f64 },
    /// Non-finite input.
    NotFinite,
}

impl fmt::Display for RangeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeError::Gamma { gamma, fbm_limit } => {
                if *gamma == 0.0 && !fbm_limit {
                    write!(f, "gamma = 0 requires the explicit FBM-limit mode")
                } else {
                    write!(f, "gamma = {gamma} outside (0, 1/2)")
                }
            }
            RangeError::Alpha { alpha, gamma } => write!(
                f,
                "alpha = {alpha} outside ({}, 1/2) for gamma = {gamma}",
                gamma - 0.5
            ),
            RangeError::AlphaDerivativeRegime { alpha, gamma } => write!(
                f,
                "alpha = {alpha} lies in the differentiable regime [1/2, 1/2+gamma) \
                 (gamma = {gamma}); not supported"
            ),
            RangeError::NotFinite => write!(f, "parameters must be finite"),
        }
    }
}

impl core::error::Error for RangeError {}

/// Validate `(α, γ)` and compute the derived indices.
///
/// `γ = 0` is rejected here; use [`derive_indices_fbm`] for the fractional
/// Brownian oracle mode.
pub fn derive_indices(alpha: f64, gamma: f64) -> Result<GfbmParams, RangeError> {
    derive(alpha, gamma, false)
}

/// Validate with the FBM-limit mode enabled, which additionally admits γ = 0.
pub fn derive_indices_fbm(alpha: f64, gamma: f64) -> Result<GfbmParams, RangeError> {
    derive(alpha, gamma, true)
}

fn derive(alpha: f64, gamma: f64, fbm_limit: bool) -> Result<GfbmParams, RangeError> {
    if !alpha.is_finite() || !gamma.is_finite() {
        return Err(RangeError::NotFinite);
    }
    let gamma_ok = (gamma > 0.0 && gamma < 0.5) || (gamma == 0.0 && fbm_limit);
    if !gamma_ok {
        return Err(RangeError::Gamma { gamma, fbm_limit });
    }
    if alpha >= 0.5 && alpha < 0.5 + gamma {
        return Err(RangeError::AlphaDerivativeRegime { alpha, gamma });
    }
    if alpha <= -0.5 + gamma || alpha >= 0.5 {
        return Err(RangeError::Alpha { alpha, gamma });
    }
    let h = alpha - gamma + 0.5;
    let beta = alpha + 0.5;
    let tau = ((1.0 - h) / 4.0).min(h / 4.0).min((0.5 - gamma) / 4.0);
    let kappa5 = (0.5 - gamma).min(0.5 + gamma - alpha);
    Ok(GfbmParams {
        alpha,
        gamma,
        h,
        beta,
        tau,
        kappa5,
        fbm_limit: gamma == 0.0,
    })
}

impl GfbmParams {
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    /// Self-similarity index `H = α − γ + 1/2`.
    pub fn h(&self) -> f64 {
        self.h
    }
    /// Small-ball exponent scale `β = α + 1/2`; `φ(θ) ≈ exp(−κ θ^{−1/β})`.
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn kappa5(&self) -> f64 {
        self.kappa5
    }
    /// True when the parameters are the γ = 0 fractional-Brownian oracle mode.
    pub fn is_fbm_limit(&self) -> bool {
        self.fbm_limit
    }

    /// Kernel value `G(s, x)`; see [`kernel_eval`].
    pub fn kernel(&self, s: f64, x: f64) -> Result<f64, SingularPoint> {
        kernel_eval(self, s, x)
    }
}

/// The kernel value would be unbounded at this point; integrate around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularPoint {
    pub s: f64,
    pub x: f64,
}

impl fmt::Display for SingularPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kernel unbounded at (s = {}, x = {})", self.s, self.x)
    }
}

impl core::error::Error for SingularPoint {}

/// Pointwise kernel evaluation `G(s, x)` for `s ≥ 0`.
///
/// * `x ∈ (0, s)`: `(s−x)^α x^{−γ}`;
/// * `x < 0`: `((s−x)^α − (−x)^α) |x|^{−γ}`;
/// * `x ≥ s > 0` (and `x > 0`): `0`;
/// * `s = 0`: `0` everywhere.
///
/// Returns [`SingularPoint`] where the value is unbounded: at `x = 0` when
/// `γ > 0` (or `α < 0` with `s > 0`), and at `x = s` when `α < 0`.
pub fn kernel_eval(p: &GfbmParams, s: f64, x: f64) -> Result<f64, SingularPoint> {
    debug_assert!(s >= 0.0);
    if s == 0.0 {
        // (−x)₊^α − (−x)₊^α ≡ 0, except the x = 0 singular point itself.
        if x == 0.0 && (p.gamma > 0.0 || p.alpha < 0.0) {
            return Err(SingularPoint { s, x });
        }
        return Ok(0.0);
    }
    if x == 0.0 {
        if p.gamma > 0.0 || p.alpha < 0.0 {
            return Err(SingularPoint { s, x });
        }
        // γ = 0, α ≥ 0: the two-sided limits agree at s^α.
        return Ok(math::powf(s, p.alpha));
    }
    if x > 0.0 {
        if x > s {
            return Ok(0.0);
        }
        if x == s {
            if p.alpha < 0.0 {
                return Err(SingularPoint { s, x });
            }
            return Ok(0.0);
        }
        Ok(math::powf(s - x, p.alpha) * math::powf(x, -p.gamma))
    } else {
        let neg = -x;
        Ok(math::pow_diff(s, neg, p.alpha) * math::powf(neg, -p.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn derived_indices_running_example() {
        let p = derive_indices(0.2, 0.1).unwrap();
        assert!((p.h() - 0.6).abs() < 1e-15);
        assert!((p.beta() - 0.7).abs() < 1e-15);
        assert!((p.kappa5() - 0.4).abs() < 1e-15);
        assert!((p.tau() - 0.1).abs() < 1e-15); // min{0.1, 0.15, 0.1}
        assert!(!p.is_fbm_limit());
    }

    #[test]
    fn brownian_limit_requires_flag() {
        assert!(matches!(
            derive_indices(0.0, 0.0),
            Err(RangeError::Gamma { .. })
        ));
        let p = derive_indices_fbm(0.0, 0.0).unwrap();
        assert!((p.h() - 0.5).abs() < 1e-15);
        assert!((p.beta() - 0.5).abs() < 1e-15);
        assert!(p.is_fbm_limit());
    }

    #[test]
    fn gamma_out_of_range_rejected() {
        assert!(matches!(
            derive_indices(0.2, 0.6),
            Err(RangeError::Gamma { .. })
        ));
        assert!(matches!(
            derive_indices(0.2, 0.5),
            Err(RangeError::Gamma { .. })
        ));
    }

    #[test]
    fn alpha_ranges_rejected_distinctly() {
        assert!(matches!(
            derive_indices(-0.45, 0.1),
            Err(RangeError::Alpha { .. })
        ));
        assert!(matches!(
            derive_indices(0.55, 0.1),
            Err(RangeError::AlphaDerivativeRegime { .. })
        ));
        // beyond the derivative regime it is a plain range error
        assert!(matches!(
            derive_indices(0.7, 0.1),
            Err(RangeError::Alpha { .. })
        ));
    }

    #[test]
    fn kernel_brownian_indicator() {
        let p = derive_indices_fbm(0.0, 0.0).unwrap();
        assert_eq!(kernel_eval(&p, 1.0, 0.5).unwrap(), 1.0);
        assert_eq!(kernel_eval(&p, 1.0, -1.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(&p, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn kernel_vanishes_at_time_zero() {
        let p = derive_indices(0.2, 0.1).unwrap();
        for &x in &[-3.0, -0.2, -1e-9] {
            assert_eq!(kernel_eval(&p, 0.0, x).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_singular_points_reported() {
        let p = derive_indices(0.2, 0.1).unwrap();
        assert!(kernel_eval(&p, 1.0, 0.0).is_err());
        let neg = derive_indices(-0.2, 0.1).unwrap();
        assert!(kernel_eval(&neg, 1.0, 1.0).is_err());
        // α > 0: value at x = s is the limit 0
        assert_eq!(kernel_eval(&p, 1.0, 1.0).unwrap(), 0.0);
    }

    proptest! {
        // Totality and idempotence of validation on the admissible rectangle.
        #[test]
        fn derive_total_on_rectangle(gamma in 1e-6..0.499f64, u in 0.0..1.0f64) {
            let lo = -0.5 + gamma;
            let alpha = lo + u * (0.5 - lo);
            if alpha > lo && alpha < 0.5 {
                let p = derive_indices(alpha, gamma).unwrap();
                prop_assert!(p.h() > 0.0 && p.h() < 1.0);
                prop_assert!(p.beta() > gamma && p.beta() < 1.0);
                prop_assert!(p.kappa5() > 0.0);
                let again = derive_indices(p.alpha(), p.gamma()).unwrap();
                prop_assert_eq!(p, again);
            }
        }

        // Sign: G(s,·) ≥ 0 on (0,s); sign(G) = sign(α) on x < 0.
        #[test]
        fn kernel_sign(x in -10.0..10.0f64) {
            let pos = derive_indices(0.2, 0.1).unwrap();
            let neg = derive_indices(-0.2, 0.1).unwrap();
            let s = 1.0;
            if x != 0.0 && x != s {
                let g = kernel_eval(&pos, s, x).unwrap();
                let gn = kernel_eval(&neg, s, x).unwrap();
                if x > 0.0 && x < s {
                    prop_assert!(g >= 0.0);
                    prop_assert!(gn >= 0.0);
                } else if x < 0.0 {
                    prop_assert!(g >= 0.0);
                    prop_assert!(gn <= 0.0);
                }
            }
        }
    }
}
