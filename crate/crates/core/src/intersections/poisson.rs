//! Poisson approximation of the all-pairs count through two moments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pairs, WindowGeometry, WindowTracker};
use crate::error::{Error, Result};
use crate::stats::{pairwise_sum, run_replicates, sample_sd, Estimate, Neumaier};
use crate::walk::{BridgeWalker, LatticePoint, RngStream};

pub type Pair = (usize, usize);

fn shares_index(a: Pair, b: Pair) -> bool {
    a.0 == b.0 || a.0 == b.1 || a.1 == b.0 || a.1 == b.1
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChenStein {
    pub mu: f64,
    pub e1: f64,
    pub e2: f64,
    /// `2 (e1 + e2)`.
    pub bound: f64,
}

/// `mu = sum p_c`, `e1 = sum_c sum_{b in B_c} p_c p_b`,
/// `e2 = sum_c sum_{b in B_c, b != c} p_{c,b}`, where `B_c` holds the pairs
/// sharing an index with `c` (itself included). Joint entries may be keyed
/// in either order.
pub fn chen_stein_bound(pair_probs: &BTreeMap<Pair, f64>, joint_probs: &BTreeMap<(Pair, Pair), f64>) -> Result<ChenStein> {
    let check = |v: f64, what: &str| {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!("{what} = {v} is not a probability")))
        }
    };
    for (&(i, j), &p) in pair_probs {
        if i >= j {
            return Err(Error::InvalidParameter(format!("pair ({i}, {j}) must satisfy i < j")));
        }
        check(p, "pair probability")?;
    }
    let (mut mu, mut e1, mut e2) = (Neumaier::new(), Neumaier::new(), Neumaier::new());
    for (&c, &pc) in pair_probs {
        mu.add(pc);
        for (&b, &pb) in pair_probs {
            if !shares_index(c, b) {
                continue;
            }
            e1.add(pc * pb);
            if b == c {
                continue;
            }
            let joint = joint_probs
                .get(&(c, b))
                .or_else(|| joint_probs.get(&(b, c)))
                .copied()
                .ok_or_else(|| Error::IncompleteInput(format!("no joint probability for {c:?} and {b:?}")))?;
            e2.add(check(joint, "joint probability")?);
        }
    }
    let (e1, e2) = (e1.value(), e2.value());
    Ok(ChenStein {
        mu: mu.value(),
        e1,
        e2,
        bound: 2.0 * (e1 + e2),
    })
}

fn poisson_log_pmf(mu: f64, k: u64, ln_fact: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mu + k as f64 * mu.ln() - ln_fact
}

/// `Po(mu)` masses at `0..len`.
fn poisson_pmf(mu: f64, len: usize) -> Vec<f64> {
    let mut ln_fact = 0.0;
    (0..len)
        .map(|k| {
            if k > 0 {
                ln_fact += (k as f64).ln();
            }
            poisson_log_pmf(mu, k as u64, ln_fact).exp()
        })
        .collect()
}

/// Poisson mass strictly above `k_max`.
fn poisson_tail(mu: f64, k_max: u64) -> f64 {
    if mu == 0.0 {
        return 0.0;
    }
    let mut ln_fact: f64 = (1..=k_max + 1).map(|k| (k as f64).ln()).sum();
    let mut acc = Neumaier::new();
    let mut k = k_max + 1;
    loop {
        let t = poisson_log_pmf(mu, k, ln_fact).exp();
        acc.add(t);
        if k as f64 > mu && t < 1e-18 * acc.value().max(1e-300) {
            break;
        }
        if k as f64 > mu && t == 0.0 {
            break;
        }
        k += 1;
        ln_fact += (k as f64).ln();
    }
    acc.value()
}

/// Total variation distance between the empirical law of `counts`
/// (`counts[k]` observations of value `k`) and `Po(mu)`.
pub fn tv_to_poisson(counts: &[u64], mu: f64) -> Result<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidParameter("histogram is empty".into()));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidParameter(format!("mu must be finite and nonnegative, got {mu}")));
    }
    let po = poisson_pmf(mu, counts.len());
    let mut acc = Neumaier::new();
    for (c, p) in counts.iter().zip(&po) {
        acc.add((*c as f64 / total as f64 - p).abs());
    }
    acc.add(poisson_tail(mu, counts.len() as u64 - 1));
    Ok((0.5 * acc.value()).clamp(0.0, 1.0))
}

/// CSV with header `k,count`.
pub fn histogram_csv(counts: &[u64]) -> String {
    let mut s = String::from("k,count\n");
    for (k, c) in counts.iter().enumerate() {
        s.push_str(&format!("{k},{c}\n"));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub i: usize,
    pub j: usize,
    pub p: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonReport {
    pub q0: usize,
    pub geometry: WindowGeometry,
    pub mu: f64,
    pub mu_std_error: f64,
    pub e1: f64,
    pub e2: f64,
    /// Standard error of `e1 + e2` by linearisation.
    pub e_std_error: f64,
    pub chen_stein_bound: f64,
    pub empirical_tv: f64,
    /// Sampling error of `empirical_tv`, first order.
    pub tv_std_error: f64,
    /// `tv_std_error + 2 e_std_error`.
    pub propagated_error: f64,
    pub replicates: u64,
    pub pairs: Vec<PairEstimate>,
    /// Histogram of the all-pairs count.
    pub r_tilde_counts: Vec<u64>,
    /// Histogram of the greedy count.
    pub r_counts: Vec<u64>,
}

impl PoissonReport {
    /// `empirical_tv <= chen_stein_bound + k * propagated_error`.
    pub fn within_bound(&self, k: f64) -> bool {
        self.empirical_tv <= self.chen_stein_bound + k * self.propagated_error
    }
}

fn histogram(values: impl Iterator<Item = usize>) -> Vec<u64> {
    let mut h = Vec::new();
    for v in values {
        if h.len() <= v {
            h.resize(v + 1, 0);
        }
        h[v] += 1;
    }
    h
}

/// Bridges from `x[i]` to `y[i]` over the block; per replicate the meeting
/// indicator of every pair. `e1` and `e2` are estimated from the same
/// replicates and their joint error comes from the linearised influence
/// `V_r = sum_c 2 (sum_{b in B_c} p_b) 1_c + sum_c sum_{b in B_c, b != c} 1_c 1_b`.
pub fn poisson_experiment(
    g: &WindowGeometry,
    x: &[LatticePoint],
    y: &[LatticePoint],
    replicates: u64,
    stream: RngStream,
) -> Result<PoissonReport> {
    let q0 = x.len();
    if q0 < 2 || y.len() != q0 {
        return Err(Error::InvalidParameter(format!(
            "need at least two walks with matching endpoints, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        BridgeWalker::new(g.horizon, a, b, stream.child(i as u64))?;
    }
    let rows = run_replicates(replicates, stream, |_, s| {
        let mut t = WindowTracker::new(q0, g.ball_radius);
        if g.len > 0 {
            let mut w: Vec<BridgeWalker> = x
                .iter()
                .zip(y)
                .enumerate()
                .map(|(i, (&a, &b))| BridgeWalker::new(g.horizon, a, b, s.child(i as u64)).unwrap())
                .collect();
            let mut pos: Vec<LatticePoint> = w.iter_mut().map(|w| w.jump(g.start)).collect();
            for n in g.start..g.start + g.len {
                if n > g.start {
                    for (p, w) in pos.iter_mut().zip(w.iter_mut()) {
                        *p = w.advance();
                    }
                }
                t.observe(n, &pos);
                if t.all_exited() {
                    break;
                }
            }
        }
        (t.met().collect::<Vec<bool>>(), t.greedy_len())
    });

    let ps = pairs(q0);
    let n = replicates as f64;
    let p_hat: Vec<f64> = (0..ps.len())
        .map(|c| rows.iter().filter(|r| r.0[c]).count() as f64 / n)
        .collect();
    let pair_est: Vec<PairEstimate> = ps
        .iter()
        .enumerate()
        .map(|(c, &(i, j))| PairEstimate {
            i,
            j,
            p: Estimate::from_indicators(&rows.iter().map(|r| r.0[c]).collect::<Vec<_>>()),
        })
        .collect();

    let mut joint = BTreeMap::new();
    for (a, &ca) in ps.iter().enumerate() {
        for (b, &cb) in ps.iter().enumerate().skip(a + 1) {
            if shares_index(ca, cb) {
                let k = rows.iter().filter(|r| r.0[a] && r.0[b]).count();
                joint.insert((ca, cb), k as f64 / n);
            }
        }
    }
    let pair_map: BTreeMap<Pair, f64> = ps.iter().copied().zip(p_hat.iter().copied()).collect();
    let cs = chen_stein_bound(&pair_map, &joint)?;

    // Influence of each replicate on e1 + e2.
    let grad: Vec<f64> = ps
        .iter()
        .map(|&c| {
            2.0 * ps
                .iter()
                .enumerate()
                .filter(|(_, &b)| shares_index(c, b))
                .map(|(bi, _)| p_hat[bi])
                .sum::<f64>()
        })
        .collect();
    let influence: Vec<f64> = rows
        .iter()
        .map(|(met, _)| {
            let mut per_walk = vec![0u64; q0];
            let mut v = 0.0;
            for (c, &(i, j)) in ps.iter().enumerate() {
                if met[c] {
                    per_walk[i] += 1;
                    per_walk[j] += 1;
                    v += grad[c];
                }
            }
            v + per_walk.iter().map(|&m| (m * m.saturating_sub(1)) as f64).sum::<f64>()
        })
        .collect();
    let e_std_error = sample_sd(&influence) / n.sqrt();

    let r_tilde: Vec<usize> = rows.iter().map(|r| r.0.iter().filter(|&&m| m).count()).collect();
    let r_tilde_f: Vec<f64> = r_tilde.iter().map(|&v| v as f64).collect();
    let mu_std_error = sample_sd(&r_tilde_f) / n.sqrt();
    debug_assert!((pairwise_sum(&r_tilde_f) / n - cs.mu).abs() < 1e-9 * (1.0 + cs.mu));
    let r_tilde_counts = histogram(r_tilde.iter().copied());
    let r_counts = histogram(rows.iter().map(|r| r.1));
    let empirical_tv = tv_to_poisson(&r_tilde_counts, cs.mu)?;

    let po = poisson_pmf(cs.mu, r_tilde_counts.len() + 1);
    let mut tv_err = Neumaier::new();
    for (k, &c) in r_tilde_counts.iter().enumerate() {
        let ph = c as f64 / n;
        tv_err.add(0.5 * (ph * (1.0 - ph) / n).sqrt());
        let dpo = if k == 0 { -po[0] } else { po[k - 1] - po[k] };
        tv_err.add(0.5 * mu_std_error * dpo.abs());
    }
    let tv_std_error = tv_err.value();

    Ok(PoissonReport {
        q0,
        geometry: *g,
        mu: cs.mu,
        mu_std_error,
        e1: cs.e1,
        e2: cs.e2,
        e_std_error,
        chen_stein_bound: cs.bound,
        empirical_tv,
        tv_std_error,
        propagated_error: tv_std_error + 2.0 * e_std_error,
        replicates,
        pairs: pair_est,
        r_tilde_counts,
        r_counts,
    })
}
