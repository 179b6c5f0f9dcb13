//! Construction parameters. Every constant is derived from `(n, d, ε, t)`;
//! `κ` and the degree scale are the only knobs.

use crate::math;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpannerParams {
    /// Top-level point count; `Δ` and the `H′_u` shadow ratio use it at every depth.
    pub n: usize,
    pub dim: usize,
    pub eps: f64,
    pub t: f64,
    pub s: f64,
    pub kappa: u32,
    /// `Δ = ⌈log_{3/2} n⌉`, at least 1.
    pub delta: u32,
    pub alpha: f64,
    pub beta: f64,
    pub delta_dense: f64,
    pub a: f64,
    pub zeta: f64,
    pub eta: f64,
    pub c: f64,
    /// Multiplier on every expander degree. Values below 1 void the guarantees.
    pub degree_scale: f64,
}

/// `⌈log_{3/2} n⌉`, at least 1.
pub fn big_delta(n: usize) -> u32 {
    if n <= 1 {
        return 1;
    }
    // 1.5^k is never an integer for k ≥ 1, so the ceiling is floor + 1
    math::floor_log(n as u64, 1.5) + 1
}

/// Separation from stretch: `⌈2d(2C+3)/(t−1)⌉` with `C = 4d`.
pub fn separation_for_stretch(dim: usize, t: f64) -> f64 {
    let d = dim as f64;
    math::ceil(2.0 * d * (2.0 * 4.0 * d + 3.0) / (t - 1.0))
}

impl SpannerParams {
    pub fn new(n: usize, dim: usize, eps: f64, t: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0 / 3.0) {
            return Err(Error::invalid("eps must lie in (0, 1/3)"));
        }
        if !(t > 1.0) || !t.is_finite() {
            return Err(Error::invalid("stretch t must be a finite value > 1"));
        }
        if n == 0 || dim == 0 {
            return Err(Error::invalid("need at least one point and one dimension"));
        }
        let beta = eps / 4.0;
        let a = beta / 2.0;
        Ok(SpannerParams {
            n,
            dim,
            eps,
            t,
            s: separation_for_stretch(dim, t),
            kappa: 5,
            delta: big_delta(n),
            alpha: eps / (eps + 1.0),
            beta,
            delta_dense: eps / 2.0,
            a,
            zeta: beta / 6.0,
            eta: a / 3.0,
            c: 4.0 * dim as f64,
            degree_scale: 1.0,
        })
    }

    pub fn with_kappa(mut self, kappa: u32) -> Result<Self> {
        if kappa < 5 {
            return Err(Error::invalid("kappa must be at least 5"));
        }
        self.kappa = kappa;
        Ok(self)
    }

    pub fn with_degree_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::invalid("degree scale must be a finite value > 0"));
        }
        self.degree_scale = scale;
        Ok(self)
    }

    fn big_delta_f(&self) -> f64 {
        self.delta as f64
    }

    /// `(k, τ)` of the shrink half of `H_T`.
    pub fn ht_shrink(&self) -> (f64, f64) {
        (self.big_delta_f() / self.beta, self.big_delta_f() / self.alpha)
    }

    /// `(k, ℓ)` of the expand half of `H_T`.
    pub fn ht_expand(&self) -> (f64, f64) {
        (self.big_delta_f() / self.eta, self.big_delta_f() / self.zeta)
    }

    /// `(k, τ)` of the shrink half of `H′_u`: `τ = log_{1+ε}(n)/ε`, at least 1.
    pub fn hu_shrink(&self) -> (f64, f64) {
        let tau = math::ln(self.n as f64) / math::ln(1.0 + self.eps) / self.eps;
        (1.0 / self.eps, tau.max(1.0))
    }

    /// `(k, ℓ)` of the expand half of `H′_u`.
    pub fn hu_expand(&self) -> (f64, f64) {
        (1.0 / self.eps, 1.0 / self.eps)
    }

    /// Applies the degree scale: `max(1, ⌈degree·scale⌉)`.
    pub fn scaled(&self, degree: u32) -> u32 {
        if self.degree_scale == 1.0 {
            return degree.max(1);
        }
        (math::ceil(degree as f64 * self.degree_scale).min(u32::MAX as f64) as u32).max(1)
    }

    /// Largest unscaled degree worth computing before saturation at `side`.
    pub(crate) fn unscaled_cap(&self, side: usize) -> u32 {
        (math::ceil(side as f64 / self.degree_scale).min(u32::MAX as f64 / 2.0) as u32).max(1)
    }
}
