//! Meeting probabilities of two or three walks inside one window.

use serde::{Deserialize, Serialize};

use super::WindowTracker;
use crate::error::{Error, Result};
use crate::schedule::{IntervalTk, Schedule};
use crate::series;
use crate::stats::{run_replicates, Estimate};
use crate::walk::{BridgeWalker, FreeWalker, LatticePoint, RngStream};

/// Block geometry seen from the block start: walks live on `[0, horizon]`,
/// intersections count on `[start, start + len)` and exits on the ball of
/// radius `ball_radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowGeometry {
    pub start: u64,
    pub len: u64,
    pub horizon: u64,
    pub ball_radius: f64,
}

impl WindowGeometry {
    pub fn new(start: u64, len: u64, horizon: u64, ball_radius: f64) -> Result<Self> {
        if !(ball_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {ball_radius}")));
        }
        if len > 0 && start + len - 1 > horizon {
            return Err(Error::InvalidParameter(format!(
                "window [{start}, {}) does not fit in horizon {horizon}",
                start + len
            )));
        }
        Ok(Self {
            start,
            len,
            horizon,
            ball_radius,
        })
    }

    /// Block `k` of a schedule with ball radius `m l_k^{1/2}`.
    pub fn from_schedule(s: &Schedule, k: u64, m: f64) -> Result<Self> {
        let t = s.interval(k)?;
        let (_, o) = s.block(k)?;
        let horizon = u64::try_from(o).map_err(|_| Error::Capacity(format!("o_{k} exceeds 64 bits")))?;
        Self::new(t.start, t.len(), horizon, m * (t.len() as f64).sqrt())
    }

    pub fn interval(&self) -> IntervalTk {
        IntervalTk::new(self.start, self.start + self.len)
    }
}

trait Mover {
    fn jump(&mut self, t: u64) -> LatticePoint;
    fn advance(&mut self) -> LatticePoint;
}

impl Mover for FreeWalker {
    fn jump(&mut self, t: u64) -> LatticePoint {
        FreeWalker::jump(self, t)
    }
    fn advance(&mut self) -> LatticePoint {
        FreeWalker::advance(self)
    }
}

impl Mover for BridgeWalker {
    fn jump(&mut self, t: u64) -> LatticePoint {
        BridgeWalker::jump(self, t)
    }
    fn advance(&mut self) -> LatticePoint {
        BridgeWalker::advance(self)
    }
}

/// Drives `walkers` through the window, feeding every tracker, until
/// `done` says every tracker has what it needs.
fn drive<W: Mover>(
    walkers: &mut [W],
    g: &WindowGeometry,
    trackers: &mut [WindowTracker],
    done: impl Fn(&[WindowTracker]) -> bool,
) {
    if g.len == 0 {
        return;
    }
    let mut pos: Vec<LatticePoint> = walkers.iter_mut().map(|w| w.jump(g.start)).collect();
    for n in g.start..g.start + g.len {
        if n > g.start {
            for (p, w) in pos.iter_mut().zip(walkers.iter_mut()) {
                *p = w.advance();
            }
        }
        for t in trackers.iter_mut() {
            t.observe(n, &pos);
        }
        if done(trackers) {
            return;
        }
    }
}

fn bridges(g: &WindowGeometry, x: &[LatticePoint], y: &[LatticePoint], s: RngStream) -> Result<Vec<BridgeWalker>> {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(i, (&a, &b))| BridgeWalker::new(g.horizon, a, b, s.child(i as u64)))
        .collect()
}

fn free(x: &[LatticePoint], s: RngStream) -> Vec<FreeWalker> {
    x.iter()
        .enumerate()
        .map(|(i, &a)| FreeWalker::new(a, s.child(i as u64)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairProbabilityReport {
    pub geometry: WindowGeometry,
    /// Bridges pinned at both ends, with the exit guard.
    pub conditioned: Estimate,
    /// Free walks, with the exit guard.
    pub unconditioned: Estimate,
    /// Free walks, without the exit guard.
    pub unguarded: Estimate,
}

/// Monte Carlo estimates of `P(tau^{(1,2)} < infinity)` for two walks from
/// `x` (and, for the bridge estimator, to `y` at the horizon). The free
/// estimators share one set of paths, so `unguarded >= unconditioned`
/// replicate by replicate.
pub fn estimate_pair_probability(
    g: &WindowGeometry,
    x: [LatticePoint; 2],
    y: [LatticePoint; 2],
    replicates: u64,
    stream: RngStream,
) -> Result<PairProbabilityReport> {
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    bridges(g, &x, &y, stream)?;
    let rows = run_replicates(replicates, stream, |_, s| {
        let mut b = bridges(g, &x, &y, s.child(0)).unwrap();
        let mut t = [WindowTracker::new(2, g.ball_radius)];
        drive(&mut b, g, &mut t, |t| t[0].finite_pairs() == 1 || t[0].all_exited());
        let cond = t[0].finite_pairs() == 1;

        let mut f = free(&x, s.child(1));
        let mut t = [
            WindowTracker::new(2, g.ball_radius),
            WindowTracker::new(2, f64::INFINITY),
        ];
        drive(&mut f, g, &mut t, |t| t[1].finite_pairs() == 1);
        [cond, t[0].finite_pairs() == 1, t[1].finite_pairs() == 1]
    });
    let col = |c: usize| Estimate::from_indicators(&rows.iter().map(|r| r[c]).collect::<Vec<_>>());
    Ok(PairProbabilityReport {
        geometry: *g,
        conditioned: col(0),
        unconditioned: col(1),
        unguarded: col(2),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleProbabilityReport {
    pub geometry: WindowGeometry,
    pub p12: Estimate,
    pub p13: Estimate,
    /// `P(tau^{(1,2)} < infinity, tau^{(1,3)} < infinity)`.
    pub joint: Estimate,
}

/// Three bridges; walk 1 is the shared index.
pub fn estimate_triple_probability(
    g: &WindowGeometry,
    x: [LatticePoint; 3],
    y: [LatticePoint; 3],
    replicates: u64,
    stream: RngStream,
) -> Result<TripleProbabilityReport> {
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    bridges(g, &x, &y, stream)?;
    let rows = run_replicates(replicates, stream, |_, s| {
        let mut b = bridges(g, &x, &y, s).unwrap();
        let mut t = [WindowTracker::new(3, g.ball_radius)];
        drive(&mut b, g, &mut t, |t| {
            (t[0].tau(0, 1).is_some() && t[0].tau(0, 2).is_some()) || t[0].exited(0)
        });
        let (a, c) = (t[0].tau(0, 1).is_some(), t[0].tau(0, 2).is_some());
        [a, c, a && c]
    });
    let col = |c: usize| Estimate::from_indicators(&rows.iter().map(|r| r[c]).collect::<Vec<_>>());
    Ok(TripleProbabilityReport {
        geometry: *g,
        p12: col(0),
        p13: col(1),
        joint: col(2),
    })
}

/// Exact probability that two free walks started at the same site meet
/// during `[start, start + len)`, ignoring the exit guard.
///
/// The difference of the walks at time `n` is a simple walk at time `2n`, so
/// with `u_n = p_{2n}(0)` and `r_j` the probability of no return within `j`
/// steps of the difference walk, a last-visit decomposition gives
/// `sum_{n in window} u_n r_{end - 1 - n}`, where `sum_{i<=j} u_i r_{j-i} = 1`.
pub fn pair_meeting_exact(start: u64, len: u64) -> Result<f64> {
    if len == 0 {
        return Ok(0.0);
    }
    let last = start + len - 1;
    if last > crate::disorder::EXACT_HORIZON_LIMIT {
        return Err(Error::Capacity(format!(
            "exact meeting probability limited to times <= {}",
            crate::disorder::EXACT_HORIZON_LIMIT
        )));
    }
    let m = last as usize + 1;
    let u = crate::disorder::return_masses(last);
    // r = 1 / ((1 - s) U(s)): invert U, then take partial sums.
    let inv = series::inverse(&u, m);
    let mut r = Vec::with_capacity(m);
    let mut acc = 0.0;
    for c in inv {
        acc += c;
        r.push(acc);
    }
    let mut sum = crate::stats::Neumaier::new();
    for n in start..=last {
        sum.add(u[n as usize] * r[(last - n) as usize]);
    }
    Ok(sum.value().clamp(0.0, 1.0))
}
