//! Exact law of `L_N = sum_{n=1}^N 1{S_{2n} = 0}` and the second moment
//! `E W_N^2 = E exp(beta_N^2 L_N)`.
//!
//! With return masses `r_n = p_{2n}(0)` and first-return masses `f_n`
//! (`F = 1 - 1/U` as power series), `P(L_N >= k) = sum_{t<=N} [F^k]_t` and
//! `P(L_N = k) = sum_{t<=N} [F^k]_t S(N - t)` where `S` is the survival
//! function of the first return time.

use serde::{Deserialize, Serialize};

use super::{return_masses, DisorderParams};
use crate::error::{Error, Result};
use crate::series::{inverse, FixedMultiplier};
use crate::stats::Neumaier;

/// Largest horizon handled by the exact computation.
pub const EXACT_HORIZON_LIMIT: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimePmf {
    pub horizon: u64,
    /// `(k, P(L_N = k))` for `k = 0..=k_max`.
    pub masses: Vec<(u64, f64)>,
    /// `P(L_N > k_max)`.
    pub truncation_tail: f64,
    /// `P(first return <= N)`, the per-excursion ratio bounding the tail.
    pub return_probability: f64,
}

impl LocalTimePmf {
    pub fn k_max(&self) -> u64 {
        self.masses.last().map(|m| m.0).unwrap_or(0)
    }

    pub fn total(&self) -> f64 {
        let mut acc = Neumaier::new();
        for &(_, p) in &self.masses {
            acc.add(p);
        }
        acc.add(self.truncation_tail);
        acc.value()
    }

    /// Mean over the retained atoms.
    pub fn truncated_mean(&self) -> f64 {
        let mut acc = Neumaier::new();
        for &(k, p) in &self.masses {
            acc.add(k as f64 * p);
        }
        acc.value()
    }

    /// Upper bound on `E[L_N; L_N > k_max]`. Each further return needs another
    /// excursion of length at most `N`, so `P(L >= K + j) <= P(L >= K) theta^(j)`.
    pub fn tail_mean_allowance(&self) -> f64 {
        if self.truncation_tail == 0.0 {
            return 0.0;
        }
        let k = self.k_max() as f64;
        self.truncation_tail * (k + 1.0 / (1.0 - self.return_probability))
    }
}

struct FirstReturn {
    f: Vec<f64>,
    survival: Vec<f64>,
}

fn first_return(horizon: u64) -> FirstReturn {
    let len = horizon as usize + 1;
    let r = return_masses(horizon);
    let inv = inverse(&r, len);
    let mut f: Vec<f64> = inv.iter().map(|x| (-x).max(0.0)).collect();
    f[0] = 0.0;
    let mut survival = Vec::with_capacity(len);
    let mut acc = Neumaier::new();
    acc.add(1.0);
    for &x in &f {
        acc.add(-x);
        survival.push(acc.value());
    }
    FirstReturn { f, survival }
}

struct Iteration {
    masses: Vec<(u64, f64)>,
    tail: f64,
    theta: f64,
}

/// Produces `P(L_N = k)` for `k = 0, 1, ...` until `stop(k, P(L_N > k), theta, masses)`
/// returns true or the support is exhausted.
fn iterate<F>(horizon: u64, mut stop: F) -> Iteration
where
    F: FnMut(u64, f64, f64, &[(u64, f64)]) -> bool,
{
    let n = horizon as usize;
    let fr = first_return(horizon);
    let theta = 1.0 - fr.survival[n];
    let mult = FixedMultiplier::new(&fr.f, n + 1);
    let mut power = vec![0.0; n + 1];
    power[0] = 1.0;
    let mut masses = Vec::new();
    let mut k = 0u64;
    loop {
        let mut acc = Neumaier::new();
        for t in k as usize..=n {
            acc.add(power[t] * fr.survival[n - t]);
        }
        masses.push((k, acc.value().max(0.0)));
        if k == horizon {
            return Iteration {
                masses,
                tail: 0.0,
                theta,
            };
        }
        let mut next = mult.apply(&power);
        for (t, c) in next.iter_mut().enumerate() {
            if t <= k as usize || *c < 0.0 {
                *c = 0.0;
            }
        }
        let mut tail = Neumaier::new();
        for &c in &next {
            tail.add(c);
        }
        let tail = tail.value();
        if tail <= 0.0 || stop(k, tail, theta, &masses) {
            return Iteration {
                masses,
                tail: tail.max(0.0),
                theta,
            };
        }
        power = next;
        k += 1;
    }
}

fn check_horizon(horizon: u64) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon N must be at least 1".into()));
    }
    if horizon > EXACT_HORIZON_LIMIT {
        return Err(Error::Capacity(format!(
            "exact local-time law limited to N <= {EXACT_HORIZON_LIMIT} (got {horizon}); use the Monte Carlo estimator"
        )));
    }
    Ok(())
}

pub fn local_time_pmf(horizon: u64, tail_cut: f64) -> Result<LocalTimePmf> {
    check_horizon(horizon)?;
    if !(tail_cut > 0.0 && tail_cut <= 1e-6) {
        return Err(Error::InvalidParameter(format!("tail_cut must lie in (0, 1e-6], got {tail_cut}")));
    }
    let it = iterate(horizon, |_, tail, _, _| tail < tail_cut);
    Ok(LocalTimePmf {
        horizon,
        masses: it.masses,
        truncation_tail: it.tail,
        return_probability: it.theta,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentReport {
    /// Truncated sum plus the tail mass placed at `k_max + 1`; a lower bound.
    pub value: f64,
    /// Width of the rigorous interval `[value, value + error_bar]`.
    pub error_bar: f64,
    pub k_max: u64,
    pub truncation_tail: f64,
}

/// Upper bound on `sum_{k > k_max} P(L = k) e^{b k}` given `tail = P(L > k_max)`.
fn tilted_tail_bound(b: f64, k_max: u64, horizon: u64, tail: f64, theta: f64) -> f64 {
    if tail == 0.0 {
        return 0.0;
    }
    let first = (b * (k_max + 1) as f64).exp();
    let crude = {
        // tail * sum_{k = k_max+1}^{N} e^{b k}
        let m = (horizon - k_max) as f64;
        if b == 0.0 {
            tail * m
        } else {
            tail * first * (b * m).exp_m1() / b.exp_m1()
        }
    };
    let ratio = theta * b.exp();
    if ratio < 1.0 {
        crude.min(tail * first / (1.0 - ratio))
    } else {
        crude
    }
}

pub fn exact_second_moment_report(params: &DisorderParams) -> Result<SecondMomentReport> {
    check_horizon(params.n)?;
    let b = params.beta_n_sq();
    let horizon = params.n;
    let it = iterate(horizon, |k, tail, theta, masses| {
        let mut acc = Neumaier::new();
        for &(j, p) in masses {
            acc.add(p * (b * j as f64).exp());
        }
        tilted_tail_bound(b, k, horizon, tail, theta) <= 1e-15 * acc.value()
    });
    let mut acc = Neumaier::new();
    for &(k, p) in &it.masses {
        acc.add(p * (b * k as f64).exp());
    }
    let k_max = it.masses.last().unwrap().0;
    let placed = it.tail * (b * (k_max + 1) as f64).exp();
    acc.add(placed);
    let upper = tilted_tail_bound(b, k_max, horizon, it.tail, it.theta);
    Ok(SecondMomentReport {
        value: acc.value(),
        error_bar: (upper - placed).max(0.0),
        k_max,
        truncation_tail: it.tail,
    })
}

/// `E W_N^2 = sum_k P(L_N = k) e^{beta_N^2 k}`.
pub fn exact_second_moment(params: &DisorderParams) -> Result<f64> {
    exact_second_moment_report(params).map(|r| r.value)
}
