use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::HittingQuery;
use crate::error::{Error, Result};
use crate::stats::{run_replicates, Estimate};
use crate::walk::RngStream;

// Smallest substep, as a fraction of the base step.
const FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselConfig {
    /// Base time step; also the largest one taken.
    pub step: f64,
    /// Within this distance of the disc, steps shrink like the squared
    /// distance.
    pub refinement_radius: f64,
    /// Adds the probability that the radial motion dipped into the disc
    /// between two grid points.
    pub crossing_correction: bool,
}

impl BesselConfig {
    /// Base step `span / 100`, refinement at three base-step standard
    /// deviations, crossing correction on.
    pub fn for_query(q: &HittingQuery) -> Self {
        let span = if q.t1 > 0.0 { q.t1 } else { q.t2 };
        let step = span / 100.0;
        Self {
            step,
            refinement_radius: 3.0 * step.sqrt(),
            crossing_correction: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscHitEstimate {
    pub query: HittingQuery,
    pub config: BesselConfig,
    pub estimate: Estimate,
    /// Set when the discretisation bias is not controlled: crossing
    /// correction off, or some path needed the smallest substep.
    pub bias_flag: bool,
    /// Paths that reached the smallest substep.
    pub floor_hits: u64,
}

fn gauss(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Monte Carlo estimate of `P(inf_{[t1, t2]} |B_t| <= a)` for Brownian
/// motion started at `(r, 0)`.
pub fn simulate_disc_hit(
    q: &HittingQuery,
    cfg: &BesselConfig,
    replicates: u64,
    stream: RngStream,
) -> Result<DiscHitEstimate> {
    q.validate()?;
    let span = if q.t1 > 0.0 { q.t1 } else { q.t2 };
    if !(cfg.step > 0.0) || cfg.step > span / 100.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "step must lie in (0, {}], got {}",
            span / 100.0,
            cfg.step
        )));
    }
    if !(cfg.refinement_radius > 0.0) {
        return Err(Error::InvalidParameter("refinement radius must be positive".into()));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    let a = q.a;
    let rows = run_replicates(replicates, stream, |_, s| {
        let mut rng = s.rng();
        let (mut x, mut y) = (q.r, 0.0);
        let mut t = 0.0;
        if q.t1 > 0.0 {
            let sd = q.t1.sqrt();
            x += sd * gauss(&mut rng);
            y += sd * gauss(&mut rng);
            t = q.t1;
        }
        let mut rho = x.hypot(y);
        if rho <= a {
            return (true, false);
        }
        let mut floored = false;
        while t < q.t2 {
            let d = rho - a;
            let mut dt = cfg.step;
            if d < cfg.refinement_radius {
                let f = (d / cfg.refinement_radius).powi(2);
                if f <= FLOOR {
                    floored = true;
                }
                dt *= f.max(FLOOR);
            }
            dt = dt.min(q.t2 - t);
            let sd = dt.sqrt();
            x += sd * gauss(&mut rng);
            y += sd * gauss(&mut rng);
            t += dt;
            let next = x.hypot(y);
            if next <= a {
                return (true, floored);
            }
            if cfg.crossing_correction {
                let e = 2.0 * d * (next - a) / dt;
                if e < 40.0 && rng.random::<f64>() < (-e).exp() {
                    return (true, floored);
                }
            }
            rho = next;
        }
        (false, floored)
    });
    let hits: Vec<bool> = rows.iter().map(|r| r.0).collect();
    let floor_hits = rows.iter().filter(|r| r.1).count() as u64;
    Ok(DiscHitEstimate {
        query: *q,
        config: *cfg,
        estimate: Estimate::from_indicators(&hits),
        bias_flag: !cfg.crossing_correction || floor_hits > 0,
        floor_hits,
    })
}
