use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::Schedule;
use crate::stats::{run_replicates, Estimate};
use crate::walk::{FreeWalker, LatticePoint, RngStream};

/// Confinement of `q` free walks at the block boundaries `L_1, ..., L_{K+1}`.
/// Entry `k - 1` of each per-block vector refers to block `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfinementStats {
    pub q: u64,
    #[serde(rename = "K")]
    pub k: u64,
    /// `per_k_g_size[k-1][s]`: replicates with `|G_k| = s`.
    #[serde(rename = "per_k_G_size")]
    pub per_k_g_size: Vec<Vec<u64>>,
    #[serde(rename = "per_k_A")]
    pub per_k_a: Vec<Estimate>,
    #[serde(rename = "D_N_estimate")]
    pub d_n_estimate: Estimate,
}

/// `G_k` holds the walks inside the closed ball of radius
/// `delta^{-1} L_k^{1/2}` at both `L_k` and `L_{k+1}`; `A_k` holds when
/// `|G_k| >= (1 - eps0) q`. Walks jump between boundaries in one draw.
pub fn confinement_stats(
    s: &Schedule,
    q: u64,
    delta: f64,
    epsilon0: f64,
    replicates: u64,
    stream: RngStream,
) -> Result<ConfinementStats> {
    if s.k == 0 {
        return Err(Error::InvalidParameter("schedule has no blocks (K = 0)".into()));
    }
    if !(delta > 0.0) || !(0.0..1.0).contains(&epsilon0) {
        return Err(Error::InvalidParameter(format!(
            "need delta > 0 and eps0 in [0, 1), got {delta} and {epsilon0}"
        )));
    }
    if q == 0 || replicates < 2 {
        return Err(Error::InvalidParameter("need q >= 1 and at least 2 replicates".into()));
    }
    let kk = s.k as usize;
    let checkpoints: Vec<u64> = s.big_l[1..=kk + 1]
        .iter()
        .map(|&v| u64::try_from(v).map_err(|_| Error::Capacity("block boundary exceeds 64 bits".into())))
        .collect::<Result<_>>()?;
    let slack = epsilon0 * q as f64;

    let rows = run_replicates(replicates, stream, |_, st| {
        // inside[i][c]: walk i within the checkpoint-c ball.
        let inside: Vec<Vec<bool>> = (0..q)
            .map(|i| {
                let mut w = FreeWalker::new(LatticePoint::ORIGIN, st.child(i));
                let mut t = 0;
                checkpoints
                    .iter()
                    .map(|&c| {
                        let p = w.jump(c - t);
                        t = c;
                        p.norm_sq() <= c as f64 / (delta * delta)
                    })
                    .collect()
            })
            .collect();
        (0..kk)
            .map(|k| inside.iter().filter(|v| v[k] && v[k + 1]).count() as u64)
            .collect::<Vec<u64>>()
    });

    let mut per_k_g_size = vec![vec![0u64; q as usize + 1]; kk];
    let mut a = vec![Vec::with_capacity(rows.len()); kk];
    let mut all = Vec::with_capacity(rows.len());
    for g in &rows {
        let mut every = true;
        for k in 0..kk {
            per_k_g_size[k][g[k] as usize] += 1;
            let ak = (q - g[k]) as f64 <= slack;
            a[k].push(ak);
            every &= ak;
        }
        all.push(every);
    }
    Ok(ConfinementStats {
        q,
        k: s.k,
        per_k_g_size,
        per_k_a: a.iter().map(|v| Estimate::from_indicators(v)).collect(),
        d_n_estimate: Estimate::from_indicators(&all),
    })
}
