use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::IntervalTk;
use crate::stats::{run_replicates, Estimate};
use crate::walk::{FreeWalker, LatticePoint, RngStream};

/// Monte Carlo estimate of `P_x(S_n = 0 for some n in interval)`.
pub fn discrete_hit_estimate(
    x: LatticePoint,
    interval: IntervalTk,
    replicates: u64,
    stream: RngStream,
) -> Result<Estimate> {
    if interval.is_empty() {
        return Err(Error::InvalidParameter("interval is empty".into()));
    }
    if replicates < 2 {
        return Err(Error::InvalidParameter("need at least 2 replicates".into()));
    }
    let hits = run_replicates(replicates, stream, |_, s| {
        let mut w = FreeWalker::new(x, s);
        if w.jump(interval.start) == LatticePoint::ORIGIN {
            return true;
        }
        (interval.start + 1..interval.end).any(|_| w.advance() == LatticePoint::ORIGIN)
    });
    Ok(Estimate::from_indicators(&hits))
}

/// `(ln l) h(z) <= C (ln(l / |z|^2))_+ + C 1{|z|^2 >= l}` for an estimate
/// `h` of `P_z(T_0 <= l)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeGallCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// Upper end of a three-standard-error band on the left-hand side.
    pub lhs_upper: f64,
    pub holds: bool,
}

pub fn le_gall_check(z: LatticePoint, l: u64, h: &Estimate, c: f64) -> Result<LeGallCheck> {
    if l < 2 || !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("need l >= 2 and C > 0, got l = {l}, C = {c}")));
    }
    let ln_l = (l as f64).ln();
    let z2 = z.norm_sq();
    let log_part = if z2 == 0.0 { f64::INFINITY } else { (l as f64 / z2).ln().max(0.0) };
    let rhs = c * log_part + if z2 >= l as f64 { c } else { 0.0 };
    let lhs = ln_l * h.estimate;
    Ok(LeGallCheck {
        lhs,
        rhs,
        lhs_upper: ln_l * (h.estimate + 3.0 * h.std_error),
        holds: lhs <= rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intersections::pair_meeting_exact;

    #[test]
    fn immediate_hit() {
        let e = discrete_hit_estimate(LatticePoint::ORIGIN, IntervalTk::new(0, 5), 50, RngStream::new(0, 0)).unwrap();
        assert_eq!(e.estimate, 1.0);
    }

    #[test]
    fn one_step() {
        let e = discrete_hit_estimate(LatticePoint::new(1, 0), IntervalTk::new(1, 2), 100_000, RngStream::new(1, 0))
            .unwrap();
        assert!(e.within(0.25, 4.0), "{e:?}");
        let e = discrete_hit_estimate(LatticePoint::new(1, 1), IntervalTk::new(1, 2), 100, RngStream::new(1, 0))
            .unwrap();
        assert_eq!(e.estimate, 0.0);
    }

    #[test]
    fn matches_exact_return_window() {
        // From the origin, visits at even times only; the pair meeting
        // probability over [s, e) is the walk's visit probability over
        // [2s, 2e).
        let exact = pair_meeting_exact(10, 30).unwrap();
        let e = discrete_hit_estimate(LatticePoint::ORIGIN, IntervalTk::new(20, 80), 40_000, RngStream::new(2, 0))
            .unwrap();
        assert!(e.within(exact, 4.0), "{e:?} vs {exact}");
    }

    #[test]
    fn le_gall_examples() {
        let h = Estimate { estimate: 0.3, std_error: 0.01, replicates: 100 };
        let c = le_gall_check(LatticePoint::new(3, 4), 10_000, &h, 1.0).unwrap();
        assert!((c.lhs - 0.3 * 10_000f64.ln()).abs() < 1e-12);
        assert!((c.rhs - 400f64.ln()).abs() < 1e-12);
        assert!(c.holds);
        let far = le_gall_check(LatticePoint::new(200, 0), 10_000, &h, 1.0).unwrap();
        assert_eq!(far.rhs, 1.0);
        assert!(!far.holds);
        assert!(le_gall_check(LatticePoint::ORIGIN, 1, &h, 1.0).is_err());
    }

    #[test]
    fn empty_interval_rejected() {
        assert!(discrete_hit_estimate(LatticePoint::ORIGIN, IntervalTk::new(3, 3), 10, RngStream::new(0, 0)).is_err());
    }
}
