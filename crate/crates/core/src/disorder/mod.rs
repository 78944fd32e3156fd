//! Disorder-strength quantities and moments of the partition function.
//!
//! With `R_N = sum_{n<=N} p_{2n}(0)` and `beta_N = beta_hat / sqrt(R_N)`, the
//! `q`-th moment of the normalised partition function is
//! `E exp(beta_N^2 * sum_{i<j} sum_{n<=N} 1{S^i_n = S^j_n})`.

mod local_time;
mod moments;

pub use local_time::{
    exact_second_moment, exact_second_moment_report, local_time_pmf, LocalTimePmf,
    SecondMomentReport, EXACT_HORIZON_LIMIT,
};
pub use moments::{
    estimate_pair_exp_moment, mc_moment, mc_moment_weights, qlarge_lower_bound_log,
    subcritical_prediction, MomentEstimate,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::Neumaier;
use crate::walk::{exact_transition, LatticePoint};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderParams {
    pub beta_hat: f64,
    pub n: u64,
    pub r_n: f64,
    pub beta_n: f64,
    /// `-ln(1 - beta_hat^2)`; absent when `beta_hat >= 1`.
    pub lambda_sq: Option<f64>,
}

impl DisorderParams {
    pub fn beta_n_sq(&self) -> f64 {
        self.beta_n * self.beta_n
    }
}

/// `p_{2n}(0)` for `n = 0..=horizon`.
pub fn return_masses(horizon: u64) -> Vec<f64> {
    (0..=horizon)
        .map(|n| exact_transition(2 * n, LatticePoint::ORIGIN).probability)
        .collect()
}

/// Expected number of returns of the doubled walk, `sum_{n=1}^N p_{2n}(0)`.
pub fn expected_returns(horizon: u64) -> f64 {
    let mut acc = Neumaier::new();
    for n in 1..=horizon {
        acc.add(exact_transition(2 * n, LatticePoint::ORIGIN).probability);
    }
    acc.value()
}

pub fn build_disorder(beta_hat: f64, n: u64) -> Result<DisorderParams> {
    if !(beta_hat > 0.0) || !beta_hat.is_finite() {
        return Err(Error::InvalidParameter(format!("beta_hat must be positive, got {beta_hat}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("horizon N must be at least 1".into()));
    }
    let r_n = expected_returns(n);
    let lambda_sq = if beta_hat < 1.0 {
        Some(-(-beta_hat * beta_hat).ln_1p())
    } else {
        None
    };
    Ok(DisorderParams {
        beta_hat,
        n,
        r_n,
        beta_n: beta_hat / r_n.sqrt(),
        lambda_sq,
    })
}

/// `-ln(1 - beta_hat^2 ln(l_k) / ln N)`.
pub fn lambda_k_sq(params: &DisorderParams, l_k: u64) -> Result<f64> {
    if l_k == 0 || l_k > params.n {
        return Err(Error::Domain(format!("l_k = {l_k} must lie in [1, N = {}]", params.n)));
    }
    if l_k == 1 {
        return Ok(0.0);
    }
    let x = params.beta_hat * params.beta_hat * (l_k as f64).ln() / (params.n as f64).ln();
    if x >= 1.0 {
        return Err(Error::Domain(format!(
            "beta_hat^2 log(l_k)/log(N) = {x} >= 1: disorder too strong at this scale"
        )));
    }
    Ok(-(-x).ln_1p())
}
