use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::DisorderParams;
use crate::error::{Error, Result};
use crate::stats::{run_replicates, Estimate};
use crate::walk::{BridgeWalker, FreeWalker, LatticePoint, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub q: u32,
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: u64,
    pub seed: u64,
    pub stream_id: u64,
    /// Seconds. Not part of the reproducibility contract.
    pub wall_time: f64,
}

impl MomentEstimate {
    fn from_weights(q: u32, weights: &[f64], stream: RngStream, started: Instant) -> Self {
        let e = Estimate::from_samples(weights);
        Self {
            q,
            estimate: e.estimate,
            std_error: e.std_error,
            replicates: e.replicates,
            seed: stream.seed,
            stream_id: stream.stream_id,
            wall_time: started.elapsed().as_secs_f64(),
        }
    }
}

/// Number of coinciding pairs among `pos`.
fn coinciding_pairs(pos: &[LatticePoint], scratch: &mut Vec<LatticePoint>) -> u64 {
    if pos.len() <= 8 {
        let mut c = 0;
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                if pos[i] == pos[j] {
                    c += 1;
                }
            }
        }
        return c;
    }
    scratch.clear();
    scratch.extend_from_slice(pos);
    scratch.sort_unstable();
    let mut c = 0u64;
    let mut run = 1u64;
    for w in scratch.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            c += run * (run - 1) / 2;
            run = 1;
        }
    }
    c + run * (run - 1) / 2
}

/// `sum_{i<j} sum_{n=1}^N 1{S^i_n = S^j_n}` for one ensemble of `q` walks
/// started at the origin, walk `i` drawing from `stream.child(i)`.
pub fn ensemble_coincidences(q: u32, horizon: u64, stream: RngStream) -> u64 {
    let mut walkers: Vec<FreeWalker> = (0..q as u64)
        .map(|i| FreeWalker::new(LatticePoint::ORIGIN, stream.child(i)))
        .collect();
    let mut pos = vec![LatticePoint::ORIGIN; q as usize];
    let mut scratch = Vec::with_capacity(q as usize);
    let mut total = 0u64;
    for _ in 0..horizon {
        for (p, w) in pos.iter_mut().zip(walkers.iter_mut()) {
            *p = w.advance();
        }
        total += coinciding_pairs(&pos, &mut scratch);
    }
    total
}

/// Per-replicate weights `exp(beta_N^2 * coincidences)`, replicate `r` using
/// `stream.child(r)`. Reusing a stream at a different horizon gives common
/// random numbers: the walks agree on their common prefix.
pub fn mc_moment_weights(params: &DisorderParams, q: u32, replicates: u64, stream: RngStream) -> Vec<f64> {
    let b = params.beta_n_sq();
    if q < 2 {
        return vec![1.0; replicates as usize];
    }
    run_replicates(replicates, stream, |_, s| {
        (b * ensemble_coincidences(q, params.n, s) as f64).exp()
    })
}

pub fn mc_moment(
    params: &DisorderParams,
    q: u32,
    replicates: u64,
    stream: RngStream,
) -> Result<MomentEstimate> {
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    let started = Instant::now();
    let w = mc_moment_weights(params, q, replicates, stream);
    Ok(MomentEstimate::from_weights(q, &w, stream, started))
}

/// Large-`N` limit `exp(lambda^2 C(q, 2))` below the critical point.
pub fn subcritical_prediction(params: &DisorderParams, q: u32) -> Result<f64> {
    let l = params.lambda_sq.ok_or_else(|| {
        Error::Domain(format!("beta_hat = {} is not subcritical", params.beta_hat))
    })?;
    let pairs = q as f64 * (q as f64 - 1.0) / 2.0;
    Ok((l * pairs).exp())
}

/// Log of the confinement lower bound on `E W_N^q`: all `q` walks pinned to
/// the same two-site oscillation for `floor(N/2)` excursions collect
/// `C(q,2)` coincidences per excursion at probability `4^{-q}` each.
pub fn qlarge_lower_bound_log(params: &DisorderParams, q: u32) -> Result<f64> {
    if q < 2 {
        return Err(Error::InvalidParameter("q must be at least 2".into()));
    }
    let half = (params.n / 2) as f64;
    let pairs = q as f64 * (q as f64 - 1.0) / 2.0;
    Ok(params.beta_n_sq() * half * pairs - q as f64 * half * 4f64.ln())
}

/// Two bridges from `meet_point` to `end1` and `end2` over `horizon` steps;
/// averages `exp(beta_sq * sum_{n=1}^l 1{S^1_n = S^2_n})`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_pair_exp_moment(
    l: u64,
    horizon: u64,
    meet_point: LatticePoint,
    end1: LatticePoint,
    end2: LatticePoint,
    beta_sq: f64,
    replicates: u64,
    stream: RngStream,
) -> Result<MomentEstimate> {
    if l > horizon {
        return Err(Error::InvalidParameter(format!("l = {l} exceeds horizon {horizon}")));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    BridgeWalker::new(horizon, meet_point, end1, stream)?;
    BridgeWalker::new(horizon, meet_point, end2, stream)?;
    let started = Instant::now();
    let weights = run_replicates(replicates, stream, |_, s| {
        let mut a = BridgeWalker::new(horizon, meet_point, end1, s.child(0)).unwrap();
        let mut b = BridgeWalker::new(horizon, meet_point, end2, s.child(1)).unwrap();
        let mut c = 0u64;
        for _ in 0..l {
            if a.advance() == b.advance() {
                c += 1;
            }
        }
        if beta_sq == 0.0 {
            1.0
        } else {
            (beta_sq * c as f64).exp()
        }
    });
    Ok(MomentEstimate::from_weights(2, &weights, stream, started))
}
