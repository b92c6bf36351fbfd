//! Problem parameters for the focusing mass-critical NLS with an
//! inverse-square potential,
//!
//!   i u_t + Δu + c |x|^{-2} u = -|u|^{4/d} u,   d >= 3,  c < λ(d) = ((d-2)/2)².
//!
//! The coupling bound comes from the sharp Hardy inequality
//! λ(d) ∫ |x|^{-2}|f|² <= ∫ |∇f|², which keeps -Δ - c|x|^{-2} positive.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Dimension and inverse-square coupling. `c = 0` is admitted as a reference
/// configuration (the classical equation) even though the interesting regime
/// here is `c != 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub d: u32,
    pub c: f64,
}

impl ProblemParams {
    pub fn new(d: u32, c: f64) -> Result<Self> {
        let p = Self { d, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidParams {
                reason: format!("dimension d = {} must be >= 3", self.d),
            });
        }
        if !self.c.is_finite() {
            return Err(Error::InvalidParams {
                reason: format!("coupling c = {} is not finite", self.c),
            });
        }
        let lam = self.hardy_constant();
        if self.c >= lam {
            return Err(Error::InvalidParams {
                reason: format!(
                    "coupling c = {} must satisfy c < lambda(d) = {} for d = {}",
                    self.c, lam, self.d
                ),
            });
        }
        Ok(())
    }

    /// Sharp Hardy constant λ(d) = ((d-2)/2)².
    pub fn hardy_constant(&self) -> f64 {
        let s = (self.d as f64 - 2.0) / 2.0;
        s * s
    }

    pub fn dim_f(&self) -> f64 {
        self.d as f64
    }

    /// Nonlinearity power p = 1 + 4/d, so the equation reads ... = -|u|^{p-1} u.
    pub fn nonlin_power(&self) -> f64 {
        1.0 + 4.0 / self.dim_f()
    }

    /// Critical Lebesgue exponent q = 2 + 4/d appearing in the Weinstein
    /// functional and the energy.
    pub fn critical_exponent(&self) -> f64 {
        2.0 + 4.0 / self.dim_f()
    }

    /// Surface area of the unit sphere S^{d-1}: 2 π^{d/2} / Γ(d/2).
    pub fn sphere_area(&self) -> f64 {
        let d = self.dim_f();
        2.0 * std::f64::consts::PI.powf(d / 2.0) / gamma_half(self.d)
    }

    /// Volume of the ball of radius `r` in dimension d.
    pub fn ball_volume(&self, r: f64) -> f64 {
        self.sphere_area() * r.powi(self.d as i32) / self.dim_f()
    }
}

/// Γ(d/2) for integer d >= 1, exact for even and odd d.
pub fn gamma_half(d: u32) -> f64 {
    if d.is_multiple_of(2) {
        // Γ(m) = (m-1)!
        let m = d / 2;
        (1..m).map(|k| k as f64).product()
    } else {
        // Γ(m + 1/2) = (2m)! / (4^m m!) √π
        let m = (d - 1) / 2;
        let mut v = std::f64::consts::PI.sqrt();
        // multiply (2k-1)/2 for k = 1..m
        for k in 1..=m {
            v *= (2 * k - 1) as f64 / 2.0;
        }
        v
    }
}
