//! Modified Bessel function of the second kind, order zero.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Power series, accurate for `u <= 2` (cancellation grows beyond).
pub fn bessel_k0_series(u: f64) -> f64 {
    let y = u * u / 4.0;
    let lead = -((u / 2.0).ln() + EULER_GAMMA);
    let (mut term, mut harmonic) = (1.0, 0.0);
    let (mut i0, mut rest) = (1.0, 0.0);
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        rest += term * harmonic;
        if term < 1e-18 * i0 {
            break;
        }
    }
    lead * i0 + rest
}

/// `e^u K_0(u)` by Steed's continued fraction (Temme's CF2), for `u >= 2`.
fn k0_scaled_cf2(x: f64) -> f64 {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let (mut q1, mut q2) = (0.0, 1.0);
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    (PI / (2.0 * x)).sqrt() / s
}

/// Large-argument expansion `sqrt(pi/2u) e^{-u} sum_{k<=6} c_k u^{-k}`,
/// scaled by `e^u`. Good to 1e-10 absolute once `u` exceeds about 8.
pub fn bessel_k0_asymptotic_scaled(u: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..=6 {
        let odd = (2 * k - 1) as f64;
        term *= -odd * odd / (k as f64 * 8.0 * u);
        sum += term;
    }
    (PI / (2.0 * u)).sqrt() * sum
}

fn check(u: f64) -> Result<()> {
    if u > 0.0 && u.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("K0 needs a positive finite argument, got {u}")))
    }
}

pub fn bessel_k0(u: f64) -> Result<f64> {
    check(u)?;
    Ok(if u <= 2.0 {
        bessel_k0_series(u)
    } else {
        k0_scaled_cf2(u) * (-u).exp()
    })
}

/// `e^u K_0(u)`, finite for every positive `u`.
pub fn bessel_k0_scaled(u: f64) -> Result<f64> {
    check(u)?;
    Ok(if u <= 2.0 {
        bessel_k0_series(u) * u.exp()
    } else {
        k0_scaled_cf2(u)
    })
}
