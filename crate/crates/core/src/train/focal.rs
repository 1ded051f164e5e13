#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

pub const P_MIN: f64 = 1e-7;
pub const P_MAX: f64 = 1.0 - 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize), serde(default))]
pub struct FocalConfig {
    /// Class weight.
    pub delta: f64,
    /// Focusing exponent.
    pub gamma: f64,
    /// Replace the normal-class coefficient `(y − 1)(1 − δ)` by `−|1 − δ|`,
    /// which keeps that term non-negative for any `δ`.
    pub standard_focal: bool,
}

impl Default for FocalConfig {
    fn default() -> Self {
        Self {
            delta: 2.0,
            gamma: 2.0,
            standard_focal: true,
        }
    }
}

impl FocalConfig {
    /// Printed form, `standard_focal` off.
    pub fn as_printed(delta: f64, gamma: f64) -> Self {
        Self {
            delta,
            gamma,
            standard_focal: false,
        }
    }

    fn normal_coefficient(&self, y: f64) -> f64 {
        if self.standard_focal {
            -(1.0 - self.delta).abs() * (1.0 - y)
        } else {
            (y - 1.0) * (1.0 - self.delta)
        }
    }
}

/// `(y − 1)(1 − δ) p^γ ln(1 − p) − y δ (1 − p)^γ ln p` with `p` clamped to
/// `[1e-7, 1 − 1e-7]`; `p` is the anomalous-class probability.
pub fn focal_loss(p: f64, y: u8, cfg: &FocalConfig) -> f64 {
    let p = p.clamp(P_MIN, P_MAX);
    let y = y as f64;
    let q = 1.0 - p;
    cfg.normal_coefficient(y) * libm::pow(p, cfg.gamma) * libm::log(q)
        - y * cfg.delta * libm::pow(q, cfg.gamma) * libm::log(p)
}

/// `d focal_loss / d p`; zero where the clamp is active.
pub fn focal_loss_grad(p: f64, y: u8, cfg: &FocalConfig) -> f64 {
    if !(P_MIN..=P_MAX).contains(&p) {
        return 0.0;
    }
    let y = y as f64;
    let q = 1.0 - p;
    let g = cfg.gamma;
    let ln_p = libm::log(p);
    let ln_q = libm::log(q);
    // d/dp [p^γ ln q] = γ p^(γ−1) ln q − p^γ / q
    let normal = if g == 0.0 {
        -1.0 / q
    } else {
        g * libm::pow(p, g - 1.0) * ln_q - libm::pow(p, g) / q
    };
    // d/dp [q^γ ln p] = −γ q^(γ−1) ln p + q^γ / p
    let anomalous = if g == 0.0 {
        1.0 / p
    } else {
        -g * libm::pow(q, g - 1.0) * ln_p + libm::pow(q, g) / p
    };
    cfg.normal_coefficient(y) * normal - y * cfg.delta * anomalous
}
