use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

use super::{exact_transition, LatticePoint, RngStream, Step};
use crate::error::{Error, Result};

/// A finite nearest-neighbour trajectory. Positions are cached at
/// construction so `position(n)` is O(1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    start: LatticePoint,
    steps: Vec<Step>,
    positions: Vec<LatticePoint>,
}

impl WalkPath {
    pub fn new(start: LatticePoint, steps: Vec<Step>) -> Self {
        let mut positions = Vec::with_capacity(steps.len() + 1);
        let mut p = start;
        positions.push(p);
        for &s in &steps {
            p = p.step(s);
            positions.push(p);
        }
        Self {
            start,
            steps,
            positions,
        }
    }

    pub fn start(&self) -> LatticePoint {
        self.start
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn position(&self, n: usize) -> LatticePoint {
        self.positions[n]
    }

    pub fn positions(&self) -> &[LatticePoint] {
        &self.positions
    }

    pub fn end(&self) -> LatticePoint {
        *self.positions.last().unwrap()
    }
}

/// Free simple random walk driven by two random bits per step.
pub struct FreeWalker {
    pos: LatticePoint,
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl FreeWalker {
    pub fn new(start: LatticePoint, stream: RngStream) -> Self {
        Self {
            pos: start,
            rng: stream.rng(),
            bits: 0,
            left: 0,
        }
    }

    pub fn position(&self) -> LatticePoint {
        self.pos
    }

    #[inline]
    pub fn next_step(&mut self) -> Step {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 32;
        }
        let s = Step::from_bits(self.bits);
        self.bits >>= 2;
        self.left -= 1;
        s
    }

    #[inline]
    pub fn advance(&mut self) -> LatticePoint {
        let s = self.next_step();
        self.pos = self.pos.step(s);
        self.pos
    }

    /// Moves `t` steps ahead in one draw: each rotated coordinate is a sum of
    /// `t` independent signs, i.e. `2 Bin(t, 1/2) - t`.
    pub fn jump(&mut self, t: u64) -> LatticePoint {
        if t == 0 {
            return self.pos;
        }
        let b = Binomial::new(t, 0.5).expect("valid binomial");
        let du = 2 * b.sample(&mut self.rng) as i64 - t as i64;
        let dv = 2 * b.sample(&mut self.rng) as i64 - t as i64;
        self.pos = self.pos.add(LatticePoint::new((du + dv) / 2, (du - dv) / 2));
        self.pos
    }
}

/// Walk conditioned to sit at `end` after exactly `n` steps. In rotated
/// coordinates the bridge splits into two independent one-dimensional
/// bridges; with `r` steps left and remaining displacement `d`, the next
/// rotated increment is `+1` with probability `(r + d) / (2r)`. This equals
/// the kernel ratio `(1/4) p_{r-1}(end - pos - e) / p_r(end - pos)` summed
/// over the compatible moves, and is sampled exactly with integer draws.
pub struct BridgeWalker {
    pos: LatticePoint,
    end: LatticePoint,
    remaining: u64,
    rng: ChaCha8Rng,
}

impl BridgeWalker {
    pub fn new(n: u64, start: LatticePoint, end: LatticePoint, stream: RngStream) -> Result<Self> {
        if exact_transition(n, end.sub(start)).probability == 0.0 {
            return Err(Error::InvalidEndpoint(format!(
                "{end} is not reachable from {start} in {n} steps"
            )));
        }
        Ok(Self {
            pos: start,
            end,
            remaining: n,
            rng: stream.rng(),
        })
    }

    pub fn position(&self) -> LatticePoint {
        self.pos
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    fn rotated_increment(&mut self, d: i64) -> i64 {
        let r = self.remaining;
        // P(+1) = (r + d) / (2r); (r + d) is even.
        let up = ((r as i64 + d) / 2) as u64;
        if self.rng.random_range(0..r) < up {
            1
        } else {
            -1
        }
    }

    /// Takes one step. Panics if the bridge is already complete.
    pub fn next_step(&mut self) -> Step {
        assert!(self.remaining > 0, "bridge already at its endpoint");
        let diff = self.end.sub(self.pos);
        let du = self.rotated_increment(diff.x + diff.y);
        let dv = self.rotated_increment(diff.x - diff.y);
        self.remaining -= 1;
        Step::from_rotated(du, dv)
    }

    pub fn advance(&mut self) -> LatticePoint {
        let s = self.next_step();
        self.pos = self.pos.step(s);
        self.pos
    }

    /// Moves `t` steps ahead in one draw. Given its endpoint, a rotated
    /// coordinate is a uniformly shuffled sequence of `(r + d)/2` up-steps
    /// among `r`, so the up-steps in the first `t` are hypergeometric.
    pub fn jump(&mut self, t: u64) -> LatticePoint {
        assert!(t <= self.remaining, "jump past the bridge endpoint");
        if t == 0 {
            return self.pos;
        }
        let r = self.remaining;
        let diff = self.end.sub(self.pos);
        let inc = |d: i64, rng: &mut ChaCha8Rng| -> i64 {
            let ups = ((r as i64 + d) / 2) as u64;
            let h = Hypergeometric::new(r, ups, t).expect("valid hypergeometric");
            2 * h.sample(rng) as i64 - t as i64
        };
        let du = inc(diff.x + diff.y, &mut self.rng);
        let dv = inc(diff.x - diff.y, &mut self.rng);
        self.remaining -= t;
        self.pos = self.pos.add(LatticePoint::new((du + dv) / 2, (du - dv) / 2));
        self.pos
    }
}

pub fn sample_path(n: u64, start: LatticePoint, stream: RngStream) -> WalkPath {
    let mut w = FreeWalker::new(start, stream);
    let steps = (0..n).map(|_| w.next_step()).collect();
    WalkPath::new(start, steps)
}

pub fn sample_bridge(
    n: u64,
    start: LatticePoint,
    end: LatticePoint,
    stream: RngStream,
) -> Result<WalkPath> {
    let mut w = BridgeWalker::new(n, start, end, stream)?;
    let mut steps = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let s = w.next_step();
        w.pos = w.pos.step(s);
        steps.push(s);
    }
    Ok(WalkPath::new(start, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    /// Pearson chi-square p-value of observed counts against expected masses.
    fn chi_square_p(counts: &HashMap<LatticePoint, u64>, expected: &[(LatticePoint, f64)], n: u64) -> f64 {
        let mut stat = 0.0;
        for &(p, m) in expected {
            let e = m * n as f64;
            let o = *counts.get(&p).unwrap_or(&0) as f64;
            stat += (o - e) * (o - e) / e;
        }
        let observed_total: u64 = expected.iter().map(|(p, _)| counts.get(p).copied().unwrap_or(0)).sum();
        assert_eq!(observed_total, n, "mass outside the support");
        ChiSquared::new((expected.len() - 1) as f64).unwrap().sf(stat)
    }

    fn support(n: u64, from: LatticePoint) -> Vec<(LatticePoint, f64)> {
        let ni = n as i64;
        let mut v = Vec::new();
        for x in -ni..=ni {
            for y in -ni..=ni {
                let d = LatticePoint::new(x, y);
                let p = exact_transition(n, d).probability;
                if p > 0.0 {
                    v.push((from.add(d), p));
                }
            }
        }
        v
    }

    #[test]
    fn empty_path() {
        let p = sample_path(0, LatticePoint::new(3, -1), RngStream::new(1, 1));
        assert_eq!(p.len(), 0);
        assert_eq!(p.end(), LatticePoint::new(3, -1));
    }

    #[test]
    fn deterministic() {
        let s = RngStream::new(99, 12);
        assert_eq!(sample_path(500, LatticePoint::ORIGIN, s), sample_path(500, LatticePoint::ORIGIN, s));
        let b1 = sample_bridge(500, LatticePoint::ORIGIN, LatticePoint::new(4, 6), s).unwrap();
        let b2 = sample_bridge(500, LatticePoint::ORIGIN, LatticePoint::new(4, 6), s).unwrap();
        assert_eq!(b1, b2);
    }

    #[test]
    fn two_step_law() {
        let n = 1_000_000u64;
        let root = RngStream::new(2024, 0);
        let mut counts = HashMap::new();
        let mut w = FreeWalker::new(LatticePoint::ORIGIN, root);
        for _ in 0..n {
            let a = w.next_step().delta();
            let b = w.next_step().delta();
            *counts.entry(a.add(b)).or_insert(0) += 1;
        }
        let p = chi_square_p(&counts, &support(2, LatticePoint::ORIGIN), n);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn difference_of_two_walks() {
        let k = 3u64;
        let n = 200_000u64;
        let root = RngStream::new(5, 0);
        let mut counts = HashMap::new();
        for r in 0..n {
            let a = sample_path(k, LatticePoint::ORIGIN, root.child(r).child(0)).end();
            let b = sample_path(k, LatticePoint::ORIGIN, root.child(r).child(1)).end();
            *counts.entry(a.sub(b)).or_insert(0) += 1;
        }
        let p = chi_square_p(&counts, &support(2 * k, LatticePoint::ORIGIN), n);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn bridge_first_step_forced() {
        for r in 0..100 {
            let b = sample_bridge(2, LatticePoint::ORIGIN, LatticePoint::new(2, 0), RngStream::new(r, 0)).unwrap();
            assert_eq!(b.position(1), LatticePoint::new(1, 0));
        }
    }

    #[test]
    fn bridge_parity_error() {
        let e = sample_bridge(2, LatticePoint::ORIGIN, LatticePoint::new(1, 0), RngStream::new(0, 0));
        assert!(matches!(e, Err(Error::InvalidEndpoint(_))));
        let e = sample_bridge(2, LatticePoint::ORIGIN, LatticePoint::new(3, 1), RngStream::new(0, 0));
        assert!(matches!(e, Err(Error::InvalidEndpoint(_))));
    }

    #[test]
    fn bridge_loop_midpoint_uniform() {
        let n = 40_000u64;
        let mut counts = HashMap::new();
        for r in 0..n {
            let b = sample_bridge(2, LatticePoint::ORIGIN, LatticePoint::ORIGIN, RngStream::new(77, r)).unwrap();
            *counts.entry(b.position(1)).or_insert(0) += 1;
        }
        let expected: Vec<_> = Step::ALL.iter().map(|s| (s.delta(), 0.25)).collect();
        assert!(chi_square_p(&counts, &expected, n) > 0.001);
    }

    #[test]
    fn bridge_midpoint_law() {
        let cases = [
            (4u64, LatticePoint::ORIGIN, LatticePoint::new(2, 0)),
            (6, LatticePoint::new(1, 1), LatticePoint::new(-1, 3)),
            (8, LatticePoint::ORIGIN, LatticePoint::ORIGIN),
            (10, LatticePoint::new(0, 0), LatticePoint::new(3, -5)),
        ];
        let reps = 100_000u64;
        for (ci, &(n, start, end)) in cases.iter().enumerate() {
            let half = n / 2;
            let total = exact_transition(n, end.sub(start)).probability;
            let expected: Vec<(LatticePoint, f64)> = support(half, start)
                .into_iter()
                .map(|(m, p)| (m, p * exact_transition(half, end.sub(m)).probability / total))
                .filter(|&(_, q)| q > 0.0)
                .collect();
            let root = RngStream::new(31 + ci as u64, 0);
            let mut counts = HashMap::new();
            for r in 0..reps {
                let b = sample_bridge(n, start, end, root.child(r)).unwrap();
                assert_eq!(b.end(), end);
                *counts.entry(b.position(half as usize)).or_insert(0) += 1;
            }
            let p = chi_square_p(&counts, &expected, reps);
            assert!(p > 0.001, "case {ci}: p = {p}");
        }
    }

    #[test]
    fn free_jump_law() {
        let n = 200_000u64;
        let root = RngStream::new(8, 0);
        let mut counts = HashMap::new();
        for r in 0..n {
            let mut w = FreeWalker::new(LatticePoint::ORIGIN, root.child(r));
            *counts.entry(w.jump(5)).or_insert(0) += 1;
        }
        let p = chi_square_p(&counts, &support(5, LatticePoint::ORIGIN), n);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn bridge_jump_law() {
        let (n, start, end, t) = (12u64, LatticePoint::new(1, 0), LatticePoint::new(-3, 2), 5u64);
        let total = exact_transition(n, end.sub(start)).probability;
        let expected: Vec<(LatticePoint, f64)> = support(t, start)
            .into_iter()
            .map(|(m, p)| (m, p * exact_transition(n - t, end.sub(m)).probability / total))
            .filter(|&(_, q)| q > 0.0)
            .collect();
        let reps = 200_000u64;
        let root = RngStream::new(9, 0);
        let mut counts = HashMap::new();
        for r in 0..reps {
            let mut w = BridgeWalker::new(n, start, end, root.child(r)).unwrap();
            let m = w.jump(t);
            *counts.entry(m).or_insert(0) += 1;
            for _ in t..n {
                w.advance();
            }
            assert_eq!(w.position(), end);
        }
        let p = chi_square_p(&counts, &expected, reps);
        assert!(p > 0.001, "p = {p}");
    }

    #[test]
    fn bridge_step_probability_matches_kernel_ratio() {
        // With r steps left and offset d, each move e has probability
        // (1/4) p_{r-1}(d - e) / p_r(d); the sampler's rotated rule must agree.
        for r in 1..=12u64 {
            let ri = r as i64;
            for x in -ri..=ri {
                for y in -ri..=ri {
                    let d = LatticePoint::new(x, y);
                    let pr = exact_transition(r, d).probability;
                    if pr == 0.0 {
                        continue;
                    }
                    for s in Step::ALL {
                        let e = s.delta();
                        let ratio = 0.25 * exact_transition(r - 1, d.sub(e)).probability / pr;
                        let du = e.x + e.y;
                        let dv = e.x - e.y;
                        let pu = (ri + d.x + d.y) as f64 / (2.0 * r as f64);
                        let pv = (ri + d.x - d.y) as f64 / (2.0 * r as f64);
                        let rotated = (if du > 0 { pu } else { 1.0 - pu }) * (if dv > 0 { pv } else { 1.0 - pv });
                        assert!((ratio - rotated).abs() < 1e-12, "r={r} d={d} e={e}");
                    }
                }
            }
        }
    }
}
