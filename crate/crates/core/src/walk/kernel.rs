//! The n-step transition kernel of the simple random walk on Z^2.
//!
//! In rotated coordinates `u = x + y`, `v = x - y` the two components are
//! independent one-dimensional simple walks, so
//! `p_n(x) = B(n, u) * B(n, v)` with `B(n, k) = C(n, (n+k)/2) / 2^n`.
//! `B` is evaluated with the saddle-point expansion of the binomial mass
//! (Stirling remainder plus deviance term), which stays accurate to a few ulp
//! in log space for every `n` representable here and never forms a large
//! factorial.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use super::LatticePoint;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub probability: f64,
    pub log_probability: f64,
}

impl KernelValue {
    pub const ZERO: KernelValue = KernelValue {
        probability: 0.0,
        log_probability: f64::NEG_INFINITY,
    };

    fn from_log(lp: f64) -> Self {
        Self {
            probability: lp.exp(),
            log_probability: lp,
        }
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// n! is exact in f64 for n <= 22; the Stirling remainder is taken from it
/// directly for small n and from its asymptotic series beyond.
fn stirlerr(n: u64) -> f64 {
    if n <= 15 {
        let mut fact = 1.0f64;
        for k in 2..=n {
            fact *= k as f64;
        }
        let nf = n as f64;
        return fact.ln() - (nf + 0.5) * nf.ln() + nf - LN_SQRT_2PI;
    }
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    let nf = n as f64;
    let nn = nf * nf;
    if n > 500 {
        return (S0 - S1 / nn) / nf;
    }
    if n > 80 {
        return (S0 - (S1 - S2 / nn) / nn) / nf;
    }
    if n > 35 {
        return (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / nf;
    }
    (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / nf
}

/// Deviance `x ln(x/np) + np - x`, accurate when `x` is close to `np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        return s;
    }
    x * (x / np).ln() + np - x
}

/// `ln( C(n, j) / 2^n )` for `0 <= j <= n`.
pub fn log_binomial_half(n: u64, j: u64) -> f64 {
    debug_assert!(j <= n);
    if j == 0 || j == n {
        return -(n as f64) * LN_2;
    }
    if n <= 50 {
        return binomial_half_small(n, j).ln();
    }
    let (nf, jf) = (n as f64, j as f64);
    let kf = nf - jf;
    let half = nf / 2.0;
    let lc = stirlerr(n) - stirlerr(j) - stirlerr(n - j) - bd0(jf, half) - bd0(kf, half);
    let lf = (2.0 * PI).ln() + jf.ln() + (kf / nf).ln();
    lc - 0.5 * lf
}

/// `C(n, j) / 2^n` formed exactly and rounded once; `n <= 50`.
fn binomial_half_small(n: u64, j: u64) -> f64 {
    let mut c: u64 = 1;
    let jj = j.min(n - j);
    for i in 0..jj {
        c = c * (n - i) / (i + 1);
    }
    c as f64 / (1u64 << n) as f64
}

/// One-dimensional simple walk mass `P(X_n = k)`, in log space.
fn log_b(n: u64, k: i64) -> Option<f64> {
    let ak = k.unsigned_abs();
    if ak > n || (n + ak) % 2 != 0 {
        return None;
    }
    let j = (n as i128 + k as i128) / 2;
    Some(log_binomial_half(n, j as u64))
}

/// `p_n(x) = P_0(S_n = x)`.
pub fn exact_transition(n: u64, x: LatticePoint) -> KernelValue {
    let u = x.x as i128 + x.y as i128;
    let v = x.x as i128 - x.y as i128;
    if u.unsigned_abs() > n as u128 || v.unsigned_abs() > n as u128 {
        return KernelValue::ZERO;
    }
    if n <= 50 {
        let (u, v) = (u as i64, v as i64);
        if (n as i64 + u) % 2 != 0 {
            return KernelValue::ZERO;
        }
        let j = |k: i64| ((n as i64 + k) / 2) as u64;
        let p = binomial_half_small(n, j(u)) * binomial_half_small(n, j(v));
        return KernelValue {
            probability: p,
            log_probability: p.ln(),
        };
    }
    match (log_b(n, u as i64), log_b(n, v as i64)) {
        (Some(a), Some(b)) => KernelValue::from_log(a + b),
        _ => KernelValue::ZERO,
    }
}

/// Leading term of the local limit theorem, `(2 / (pi t)) exp(-|x|^2 / t)`,
/// for parity-matching `x`.
pub fn lclt_approx(t: u64, x: LatticePoint) -> f64 {
    let t = t as f64;
    2.0 / (PI * t) * (-x.norm_sq() / t).exp()
}

/// `max |p_t(x) / lclt(t, x) - 1|` over parity-matching `|x| <= 3 sqrt(t)`.
pub fn lclt_max_relative_error(t: u64) -> f64 {
    let r = 3.0 * (t as f64).sqrt();
    let ri = r.floor() as i64;
    let mut worst: f64 = 0.0;
    for x in -ri..=ri {
        for y in -ri..=ri {
            let p = LatticePoint::new(x, y);
            if p.norm_sq() > r * r || (x + y).rem_euclid(2) as u64 != t % 2 {
                continue;
            }
            let exact = exact_transition(t, p).probability;
            let approx = lclt_approx(t, p);
            worst = worst.max((exact / approx - 1.0).abs());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupBoundReport {
    pub observed_max: f64,
    pub bound_ratio: f64,
}

/// `max_x p_n(x)` and `n * max_x p_n(x)`. Both one-dimensional factors are
/// unimodal in their offset, so the maximum sits at the origin for even `n`
/// and at a neighbour of it for odd `n`.
pub fn kernel_sup_bound_check(n: u64) -> SupBoundReport {
    let at = if n % 2 == 0 {
        LatticePoint::ORIGIN
    } else {
        LatticePoint::new(1, 0)
    };
    let m = exact_transition(n, at).probability;
    SupBoundReport {
        observed_max: m,
        bound_ratio: n as f64 * m,
    }
}
