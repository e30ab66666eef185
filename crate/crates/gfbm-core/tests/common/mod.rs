//! Shared independent oracles for the acceptance suite. These never call
//! into the covariance/simulation code paths they are used to check.

#![allow(dead_code)]

/// Log-gamma, Lanczos approximation (g = 7, 9 terms), ~1e-14 relative.
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + 7.5;
    for (i, &c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Euler Beta via log-gamma.
pub fn beta_fn(p: f64, q: f64) -> f64 {
    (ln_gamma(p) + ln_gamma(q) - ln_gamma(p + q)).exp()
}

/// `P(sup_{[0,1]} |B| ≤ θ)` for standard Brownian motion, by the classical
/// reflection series `(4/π) Σ (−1)^k (2k+1)^{−1} exp(−π²(2k+1)²/(8θ²))`.
pub fn phi_brownian(theta: f64) -> f64 {
    let mut s = 0.0;
    for k in 0..200u32 {
        let m = (2 * k + 1) as f64;
        let term = (if k % 2 == 0 { 1.0 } else { -1.0 }) / m
            * (-std::f64::consts::PI.powi(2) * m * m / (8.0 * theta * theta)).exp();
        s += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    4.0 / std::f64::consts::PI * s
}

pub struct Timer(std::time::Instant);

impl Timer {
    pub fn start() -> Self {
        Timer(std::time::Instant::now())
    }
    pub fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
