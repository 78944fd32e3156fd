//! Planar Brownian disc hitting: closed-form asymptotics, the Laplace
//! transform of the hitting time, and Monte Carlo on both the continuum and
//! the lattice side.
//!
//! Brownian motion is standard (each coordinate has variance `t`). A simple
//! random walk at time `n` has per-coordinate variance `n / 2`, so lattice
//! time `n` corresponds to Brownian time `n / 2`, and hitting a lattice site
//! corresponds to hitting a disc of radius [`SRW_EFFECTIVE_RADIUS`].

mod bessel;
mod discrete;
mod simulate;

pub use bessel::{bessel_k0, bessel_k0_asymptotic_scaled, bessel_k0_scaled, bessel_k0_series};
pub use discrete::{discrete_hit_estimate, le_gall_check, LeGallCheck};
pub use simulate::{simulate_disc_hit, BesselConfig, DiscHitEstimate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^{-gamma} / (2 sqrt 2)`: the potential kernel of the simple walk is
/// `(2/pi)(ln|x| + gamma + (3/2) ln 2) + o(1)`, so a lattice point acts like a
/// disc of this radius for Brownian motion at half the lattice time.
pub const SRW_EFFECTIVE_RADIUS: f64 = 0.198_505_904_095_820_7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingQuery {
    /// Disc radius.
    pub a: f64,
    /// Distance of the start from the centre.
    pub r: f64,
    pub t1: f64,
    pub t2: f64,
    /// The `c0 log N` radius this disc stands for, when it stands for one.
    pub c0_log: Option<f64>,
}

impl HittingQuery {
    pub fn new(a: f64, r: f64, t1: f64, t2: f64) -> Result<Self> {
        let q = Self {
            a,
            r,
            t1,
            t2,
            c0_log: None,
        };
        q.validate()?;
        Ok(q)
    }

    /// Disc of radius `c0 ln N` seen from the origin over `[t1, t2]`.
    pub fn log_scale(c0: f64, ln_n: f64, t1: f64, t2: f64) -> Result<Self> {
        let mut q = Self::new(c0 * ln_n, 0.0, t1, t2)?;
        q.c0_log = Some(c0 * ln_n);
        Ok(q)
    }

    /// Two lattice walks from one site meeting during `[t1, t2)`: their
    /// difference at time `n` is a walk at time `2n`, i.e. Brownian time `n`.
    pub fn lattice_pair(t1: u64, t2: u64) -> Result<Self> {
        Self::new(SRW_EFFECTIVE_RADIUS, 0.0, t1 as f64, t2 as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a > 0.0
            && self.r >= 0.0
            && self.t1 >= 0.0
            && self.t1 <= self.t2
            && [self.a, self.r, self.t1, self.t2].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "need a > 0, r >= 0 and 0 <= t1 <= t2, got {self:?}"
            )))
        }
    }

    /// The asymptotic formulas assume the start lies outside the disc.
    pub fn start_outside(&self) -> bool {
        self.a < self.r
    }
}

/// A formula value together with the additive error budget the asymptotic
/// statement supplies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub error_budget: f64,
}

/// `ln(t / r^2) / ln(t / a^2)`, the leading term of `P_r(T_a <= t)`.
pub fn ratio_formula(a: f64, r: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && a <= r) {
        return Err(Error::Domain(format!("need 0 < a <= r, got a = {a}, r = {r}")));
    }
    if !(t > r * r) {
        return Err(Error::Domain(format!("need t > r^2, got t = {t}, r = {r}")));
    }
    Ok((t / (r * r)).ln() / (t / (a * a)).ln())
}

/// `ln(t2/t1) / ln(t2/a^2)` for `P_0(inf_{[t1,t2]} |B| <= a)`, with budget
/// `a^2 / t1`.
pub fn window_formula(q: &HittingQuery) -> Result<Prediction> {
    q.validate()?;
    if !(q.a * q.a < q.t1) {
        return Err(Error::Domain(format!("need a^2 < t1, got a = {}, t1 = {}", q.a, q.t1)));
    }
    Ok(Prediction {
        value: (q.t2 / q.t1).ln() / (q.t2 / (q.a * q.a)).ln(),
        error_budget: q.a * q.a / q.t1,
    })
}

/// Laplace transform `int e^{-lambda t} P_r(T_a <= t) dt
/// = K_0(r sqrt(2 lambda)) / (lambda K_0(a sqrt(2 lambda)))`.
pub fn laplace_hitting(a: f64, r: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && a <= r && r.is_finite()) {
        return Err(Error::Domain(format!("need 0 < a <= r, got a = {a}, r = {r}")));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("need lambda > 0, got {lambda}")));
    }
    if a == r {
        return Ok(1.0 / lambda);
    }
    let s = (2.0 * lambda).sqrt();
    let (x, y) = (r * s, a * s);
    let ratio = bessel_k0_scaled(x)? / bessel_k0_scaled(y)? * (y - x).exp();
    Ok(ratio / lambda)
}

/// Small-`lambda` form `(1/lambda) ln(r^2 lambda) / ln(a^2 lambda)`.
pub fn laplace_small_lambda(a: f64, r: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && a <= r && lambda > 0.0 && r * r * lambda < 1.0) {
        return Err(Error::Domain(format!(
            "need 0 < a <= r and r^2 lambda < 1, got a = {a}, r = {r}, lambda = {lambda}"
        )));
    }
    Ok((r * r * lambda).ln() / (a * a * lambda).ln() / lambda)
}
