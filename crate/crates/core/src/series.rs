//! Truncated power series arithmetic: products and reciprocals.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Products with at most this many multiply-adds are done directly.
const DIRECT_WORK: usize = 1 << 20;
const DIRECT_INVERSE: usize = 2048;

/// First `len` coefficients of `a * b`.
pub fn mul_truncated(a: &[f64], b: &[f64], len: usize) -> Vec<f64> {
    let a = &a[..a.len().min(len)];
    let b = &b[..b.len().min(len)];
    if a.is_empty() || b.is_empty() {
        return vec![0.0; len];
    }
    if a.len().saturating_mul(b.len()) <= DIRECT_WORK {
        let mut out = vec![0.0; len];
        for (i, &ai) in a.iter().enumerate() {
            if ai == 0.0 {
                continue;
            }
            let lim = (len - i).min(b.len());
            for j in 0..lim {
                out[i + j] += ai * b[j];
            }
        }
        return out;
    }
    let size = (a.len() + b.len() - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut fa = to_complex(a, size);
    let mut fb = to_complex(b, size);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / size as f64;
    (0..len)
        .map(|i| if i < fa.len() { fa[i].re * scale } else { 0.0 })
        .collect()
}

fn to_complex(a: &[f64], size: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); size];
    for (slot, &x) in v.iter_mut().zip(a) {
        slot.re = x;
    }
    v
}

/// First `len` coefficients of `1 / a`. Requires `a[0] != 0`.
pub fn inverse(a: &[f64], len: usize) -> Vec<f64> {
    assert!(!a.is_empty() && a[0] != 0.0, "series inverse needs a nonzero constant term");
    if len <= DIRECT_INVERSE {
        return inverse_direct(a, len);
    }
    // Newton: g <- g (2 - a g), doubling precision each round.
    let mut g = inverse_direct(a, DIRECT_INVERSE.min(len));
    let mut have = g.len();
    while have < len {
        let next = (2 * have).min(len);
        let ag = mul_truncated(a, &g, next);
        let mut corr: Vec<f64> = ag.iter().map(|x| -x).collect();
        corr[0] += 2.0;
        g = mul_truncated(&g, &corr, next);
        have = next;
    }
    g
}

fn inverse_direct(a: &[f64], len: usize) -> Vec<f64> {
    let mut g = vec![0.0; len];
    if len == 0 {
        return g;
    }
    let a0 = a[0];
    g[0] = 1.0 / a0;
    for n in 1..len {
        let mut s = 0.0;
        for m in 1..=n.min(a.len() - 1) {
            s += a[m] * g[n - m];
        }
        g[n] = -s / a0;
    }
    g
}

/// Repeated multiplication by a fixed series, truncated to a fixed length.
/// The spectrum of the fixed factor is computed once.
pub struct FixedMultiplier {
    len: usize,
    factor: Vec<f64>,
    fft: Option<FftState>,
}

struct FftState {
    size: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl FixedMultiplier {
    pub fn new(factor: &[f64], len: usize) -> Self {
        let factor: Vec<f64> = factor[..factor.len().min(len)].to_vec();
        let nnz = factor.len();
        let fft = if len.saturating_mul(nnz) > DIRECT_WORK {
            let size = (2 * len).next_power_of_two();
            let mut planner = FftPlanner::<f64>::new();
            let fwd = planner.plan_fft_forward(size);
            let inv = planner.plan_fft_inverse(size);
            let mut spectrum = to_complex(&factor, size);
            fwd.process(&mut spectrum);
            Some(FftState {
                size,
                fwd,
                inv,
                spectrum,
            })
        } else {
            None
        };
        Self { len, factor, fft }
    }

    /// Returns the first `len` coefficients of `x * factor`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match &self.fft {
            None => mul_truncated(x, &self.factor, self.len),
            Some(st) => {
                let mut buf = to_complex(&x[..x.len().min(self.len)], st.size);
                st.fwd.process(&mut buf);
                for (b, s) in buf.iter_mut().zip(&st.spectrum) {
                    *b *= s;
                }
                st.inv.process(&mut buf);
                let scale = 1.0 / st.size as f64;
                buf[..self.len].iter().map(|c| c.re * scale).collect()
            }
        }
    }
}
