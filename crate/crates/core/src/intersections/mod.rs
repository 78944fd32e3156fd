//! Intersections of walk ensembles inside an observation window.
//!
//! Inside `T_k` each walk carries an exit time `sigma^i`, the first time it is
//! strictly outside the ball of radius `M l_k^{1/2}`. A pair `(i, j)` meets at
//! the first `n in T_k` with `S^i_n = S^j_n` and `n < sigma^i, sigma^j`. The
//! greedy sequence takes, at each strictly later time, the lexicographically
//! first meeting pair whose indices are disjoint from every pair taken so far.
//! Walk indices are 0-based throughout.

mod confinement;
mod pair;
mod poisson;

pub use confinement::{confinement_stats, ConfinementStats};
pub use pair::{
    estimate_pair_probability, estimate_triple_probability, pair_meeting_exact,
    PairProbabilityReport, TripleProbabilityReport, WindowGeometry,
};
pub use poisson::{
    chen_stein_bound, histogram_csv, poisson_experiment, tv_to_poisson, ChenStein, Pair,
    PairEstimate, PoissonReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedule::IntervalTk;
use crate::walk::{LatticePoint, WalkPath};

/// Index of pair `(i, j)`, `i < j < q`, in lexicographic order.
pub fn pair_index(q: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < q);
    i * q - i * (i + 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)`, `i < j < q`, in lexicographic order.
pub fn pairs(q: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(q * q.saturating_sub(1) / 2);
    for i in 0..q {
        for j in i + 1..q {
            v.push((i, j));
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyMeeting {
    pub tau: u64,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairTime {
    pub i: usize,
    pub j: usize,
    /// `None` stands for an infinite meeting time.
    pub tau: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectionReport {
    /// `None` stands for no exit within the window.
    pub sigma: Vec<Option<u64>>,
    pub tau_pairs: Vec<PairTime>,
    pub greedy: Vec<GreedyMeeting>,
    #[serde(rename = "R_k")]
    pub r_k: usize,
    #[serde(rename = "R_tilde_k")]
    pub r_tilde_k: usize,
}

impl IntersectionReport {
    /// True when two pairs with finite meeting times share an index.
    pub fn finite_pairs_overlap(&self) -> bool {
        let mut seen = vec![false; self.sigma.len()];
        for p in self.tau_pairs.iter().filter(|p| p.tau.is_some()) {
            if seen[p.i] || seen[p.j] {
                return true;
            }
            seen[p.i] = true;
            seen[p.j] = true;
        }
        false
    }
}

// Up to this many live walks a direct pair scan beats sorting.
const SMALL_ENSEMBLE: usize = 16;

/// Incremental evaluation of the window definitions. Feed positions for
/// consecutive times of the window with [`WindowTracker::observe`].
#[derive(Clone, Debug)]
pub struct WindowTracker {
    q: usize,
    radius_sq: f64,
    sigma: Vec<Option<u64>>,
    tau: Vec<Option<u64>>,
    greedy: Vec<GreedyMeeting>,
    used: Vec<bool>,
    meetings: Option<Vec<Vec<u64>>>,
    order: Vec<usize>,
    found: usize,
}

impl WindowTracker {
    pub fn new(q: usize, ball_radius: f64) -> Self {
        Self {
            q,
            radius_sq: ball_radius * ball_radius,
            sigma: vec![None; q],
            tau: vec![None; q * q.saturating_sub(1) / 2],
            greedy: Vec::new(),
            used: vec![false; q],
            meetings: None,
            order: Vec::with_capacity(q),
            found: 0,
        }
    }

    /// Also keeps every valid meeting time of every pair.
    pub fn recording(mut self) -> Self {
        self.meetings = Some(vec![Vec::new(); self.tau.len()]);
        self
    }

    pub fn tau(&self, i: usize, j: usize) -> Option<u64> {
        self.tau[pair_index(self.q, i, j)]
    }

    pub fn finite_pairs(&self) -> usize {
        self.found
    }

    pub fn greedy_len(&self) -> usize {
        self.greedy.len()
    }

    pub fn exited(&self, i: usize) -> bool {
        self.sigma[i].is_some()
    }

    pub fn all_exited(&self) -> bool {
        self.sigma.iter().all(|s| s.is_some())
    }

    /// Meeting-time indicators in pair order.
    pub fn met(&self) -> impl Iterator<Item = bool> + '_ {
        self.tau.iter().map(|t| t.is_some())
    }

    pub fn observe(&mut self, n: u64, pos: &[LatticePoint]) {
        debug_assert_eq!(pos.len(), self.q);
        for (i, p) in pos.iter().enumerate() {
            if self.sigma[i].is_none() && p.norm_sq() > self.radius_sq {
                self.sigma[i] = Some(n);
            }
        }
        self.order.clear();
        self.order.extend((0..self.q).filter(|&i| self.sigma[i].is_none()));
        if self.order.len() < 2 {
            return;
        }
        let mut best: Option<(usize, usize)> = None;
        if self.order.len() <= SMALL_ENSEMBLE {
            for x in 0..self.order.len() {
                let i = self.order[x];
                for y in x + 1..self.order.len() {
                    let j = self.order[y];
                    if pos[i] == pos[j] {
                        self.record(n, i, j, &mut best);
                    }
                }
            }
        } else {
            self.order.sort_unstable_by_key(|&i| (pos[i], i));
            let mut a = 0;
            while a < self.order.len() {
                let mut b = a + 1;
                while b < self.order.len() && pos[self.order[b]] == pos[self.order[a]] {
                    b += 1;
                }
                for x in a..b {
                    for y in x + 1..b {
                        let (i, j) = (self.order[x], self.order[y]);
                        self.record(n, i, j, &mut best);
                    }
                }
                a = b;
            }
        }
        if let Some((i, j)) = best {
            self.used[i] = true;
            self.used[j] = true;
            self.greedy.push(GreedyMeeting { tau: n, i, j });
        }
    }

    fn record(&mut self, n: u64, i: usize, j: usize, best: &mut Option<(usize, usize)>) {
        let idx = pair_index(self.q, i, j);
        if self.tau[idx].is_none() {
            self.tau[idx] = Some(n);
            self.found += 1;
        }
        if let Some(m) = self.meetings.as_mut() {
            m[idx].push(n);
        }
        if !self.used[i] && !self.used[j] && best.is_none_or(|bp| (i, j) < bp) {
            *best = Some((i, j));
        }
    }

    pub fn report(&self) -> IntersectionReport {
        let tau_pairs = pairs(self.q)
            .into_iter()
            .map(|(i, j)| PairTime {
                i,
                j,
                tau: self.tau(i, j),
            })
            .collect();
        IntersectionReport {
            sigma: self.sigma.clone(),
            tau_pairs,
            greedy: self.greedy.clone(),
            r_k: self.greedy.len(),
            r_tilde_k: self.found,
        }
    }

    pub fn meeting_times(&self) -> Option<&[Vec<u64>]> {
        self.meetings.as_deref()
    }
}

/// A window over an ensemble of explicit paths.
#[derive(Clone, Debug)]
pub struct EnsembleWindow {
    pub paths: Vec<WalkPath>,
    pub interval: IntervalTk,
    pub ball_radius: f64,
}

impl EnsembleWindow {
    pub fn new(paths: Vec<WalkPath>, interval: IntervalTk, ball_radius: f64) -> Result<Self> {
        if !(ball_radius > 0.0) {
            return Err(Error::InvalidParameter(format!("ball radius must be positive, got {ball_radius}")));
        }
        if let Some(first) = paths.first() {
            if paths.iter().any(|p| p.len() != first.len()) {
                return Err(Error::InvalidParameter("all paths must share one length".into()));
            }
            if !interval.is_empty() && interval.end - 1 > first.len() as u64 {
                return Err(Error::InvalidParameter(format!(
                    "window ends at {} but paths have length {}",
                    interval.end - 1,
                    first.len()
                )));
            }
        }
        Ok(Self {
            paths,
            interval,
            ball_radius,
        })
    }

    pub fn q0(&self) -> usize {
        self.paths.len()
    }

    pub fn pair_set(&self) -> Vec<(usize, usize)> {
        pairs(self.q0())
    }

    fn run(&self, tracker: &mut WindowTracker) {
        let mut pos = vec![LatticePoint::ORIGIN; self.q0()];
        for n in self.interval.start..self.interval.end {
            for (slot, path) in pos.iter_mut().zip(&self.paths) {
                *slot = path.position(n as usize);
            }
            tracker.observe(n, &pos);
        }
    }
}

pub fn analyze_window(w: &EnsembleWindow) -> IntersectionReport {
    let mut t = WindowTracker::new(w.q0(), w.ball_radius);
    w.run(&mut t);
    t.report()
}

/// Largest family of index-disjoint pairs that can be assigned pairwise
/// distinct valid meeting times, i.e. realised as an increasing sequence.
pub const ORACLE_MAX_WALKS: usize = 12;

pub fn max_disjoint_oracle(w: &EnsembleWindow) -> Result<usize> {
    if w.q0() > ORACLE_MAX_WALKS {
        return Err(Error::Capacity(format!(
            "exhaustive search limited to {ORACLE_MAX_WALKS} walks, got {}",
            w.q0()
        )));
    }
    let mut t = WindowTracker::new(w.q0(), w.ball_radius).recording();
    w.run(&mut t);
    let times = t.meeting_times().unwrap();
    Ok(max_disjoint_family(w.q0(), times))
}

/// Exhaustive search over matchings; `times[pair_index]` lists valid meeting
/// times of each pair.
pub fn max_disjoint_family(q: usize, times: &[Vec<u64>]) -> usize {
    struct Search<'a> {
        q: usize,
        times: &'a [Vec<u64>],
        chosen: Vec<usize>,
        used: Vec<bool>,
        best: usize,
    }

    fn distinct_times(times: &[Vec<u64>], chosen: &[usize]) -> bool {
        // Bipartite matching of pairs to times (augmenting paths).
        let mut owner: std::collections::HashMap<u64, usize> = std::collections::HashMap::new();
        fn augment(
            p: usize,
            times: &[Vec<u64>],
            chosen: &[usize],
            owner: &mut std::collections::HashMap<u64, usize>,
            seen: &mut std::collections::HashSet<u64>,
        ) -> bool {
            for &t in &times[chosen[p]] {
                if !seen.insert(t) {
                    continue;
                }
                match owner.get(&t).copied() {
                    None => {
                        owner.insert(t, p);
                        return true;
                    }
                    Some(o) => {
                        if augment(o, times, chosen, owner, seen) {
                            owner.insert(t, p);
                            return true;
                        }
                    }
                }
            }
            false
        }
        (0..chosen.len()).all(|p| {
            let mut seen = std::collections::HashSet::new();
            augment(p, times, chosen, &mut owner, &mut seen)
        })
    }

    impl Search<'_> {
        fn go(&mut self, from: usize) {
            let free = self.used[from.min(self.q)..].iter().filter(|u| !**u).count();
            if self.chosen.len() + free / 2 <= self.best {
                return;
            }
            let Some(i) = (from..self.q).find(|&i| !self.used[i]) else {
                self.best = self.best.max(self.chosen.len());
                return;
            };
            self.used[i] = true;
            for j in i + 1..self.q {
                if self.used[j] {
                    continue;
                }
                let idx = pair_index(self.q, i, j);
                if self.times[idx].is_empty() {
                    continue;
                }
                self.chosen.push(idx);
                if distinct_times(self.times, &self.chosen) {
                    self.used[j] = true;
                    self.go(i + 1);
                    self.used[j] = false;
                }
                self.chosen.pop();
            }
            // leave i unmatched
            self.go(i + 1);
            self.used[i] = false;
            self.best = self.best.max(self.chosen.len());
        }
    }

    let mut s = Search {
        q,
        times,
        chosen: Vec::new(),
        used: vec![false; q],
        best: 0,
    };
    if q >= 2 {
        s.go(0);
    }
    s.best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::Step;

    fn path(start: (i64, i64), steps: &[Step]) -> WalkPath {
        WalkPath::new(LatticePoint::new(start.0, start.1), steps.to_vec())
    }

    use Step::{East as E, North as N, South as S, West as W};

    #[test]
    fn pair_index_is_lexicographic() {
        for q in 2..10 {
            for (k, (i, j)) in pairs(q).into_iter().enumerate() {
                assert_eq!(pair_index(q, i, j), k);
            }
        }
    }

    #[test]
    fn two_disjoint_meetings() {
        let paths = vec![
            path((0, 0), &[E, N]),
            path((2, 0), &[W, S]),
            path((10, 0), &[E, E]),
            path((14, 0), &[W, W]),
        ];
        let w = EnsembleWindow::new(paths, IntervalTk::new(1, 3), 100.0).unwrap();
        let r = analyze_window(&w);
        assert_eq!(r.r_k, 2);
        assert_eq!(r.r_tilde_k, 2);
        assert_eq!(r.greedy[0], GreedyMeeting { tau: 1, i: 0, j: 1 });
        assert_eq!(r.greedy[1], GreedyMeeting { tau: 2, i: 2, j: 3 });
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 2);
    }

    #[test]
    fn shared_index_is_blocked() {
        let paths = vec![
            path((0, 0), &[E, N]),
            path((2, 0), &[W, E]),
            path((2, 0), &[N, S]),
        ];
        // 0,1 meet at n=1 at (1,0); 1,2 meet at n=2 at (2,0).
        let w = EnsembleWindow::new(paths, IntervalTk::new(1, 3), 100.0).unwrap();
        let r = analyze_window(&w);
        assert_eq!(r.r_k, 1);
        assert_eq!(r.r_tilde_k, 2);
        assert!(r.finite_pairs_overlap());
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 1);
    }

    #[test]
    fn meeting_after_exit_is_infinite() {
        // Both walks leave the ball of radius 1.5 before they meet at n=2 and n=3.
        let paths = vec![path((0, 0), &[E, E, W]), path((4, 0), &[W, W, W])];
        let w = EnsembleWindow::new(paths, IntervalTk::new(1, 4), 1.5).unwrap();
        let r = analyze_window(&w);
        assert_eq!(r.sigma, vec![Some(2), Some(1)]);
        assert_eq!(r.tau_pairs[0].tau, None);
        assert_eq!(r.r_k, 0);
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 0);
    }

    #[test]
    fn empty_intersections() {
        let paths = vec![path((0, 0), &[E]), path((5, 5), &[N])];
        let w = EnsembleWindow::new(paths, IntervalTk::new(0, 2), 100.0).unwrap();
        assert_eq!(analyze_window(&w).r_tilde_k, 0);
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 0);
    }

    #[test]
    fn greedy_is_not_maximal() {
        // (0,1) meet at n=1, (1,2) at n=2, (0,3) at n=3.
        let paths = vec![
            path((0, 0), &[E, W, W]),
            path((2, 0), &[W, N, N]),
            path((1, 3), &[S, S, N]),
            path((-4, 0), &[E, E, E]),
        ];
        let w = EnsembleWindow::new(paths.clone(), IntervalTk::new(1, 4), 100.0).unwrap();
        let r = analyze_window(&w);
        assert_eq!(r.tau_pairs[pair_index(4, 0, 1)].tau, Some(1));
        assert_eq!(r.tau_pairs[pair_index(4, 1, 2)].tau, Some(2));
        assert_eq!(r.tau_pairs[pair_index(4, 0, 3)].tau, Some(3));
        assert_eq!(r.r_k, 1);
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 2);
    }

    #[test]
    fn oracle_needs_distinct_times() {
        // Two disjoint pairs that can only meet at the same instant are
        // not realisable as an increasing sequence.
        let times = vec![vec![5], vec![], vec![], vec![], vec![], vec![5]];
        assert_eq!(max_disjoint_family(4, &times), 1);
        let times = vec![vec![5, 6], vec![], vec![], vec![], vec![], vec![5]];
        assert_eq!(max_disjoint_family(4, &times), 2);
    }

    #[test]
    fn simultaneous_disjoint_meetings() {
        // (0,1) and (2,3) meet only at n=1: one pick per time, so R_k < R~_k
        // although no two meeting pairs share an index.
        let paths = vec![
            path((0, 0), &[E, N]),
            path((2, 0), &[W, S]),
            path((10, 0), &[E, N]),
            path((12, 0), &[W, S]),
        ];
        let w = EnsembleWindow::new(paths, IntervalTk::new(1, 3), 100.0).unwrap();
        let r = analyze_window(&w);
        assert!(!r.finite_pairs_overlap());
        assert_eq!((r.r_k, r.r_tilde_k), (1, 2));
        assert_eq!(max_disjoint_oracle(&w).unwrap(), 1);
    }

    #[test]
    fn oracle_budget() {
        let paths: Vec<_> = (0..13).map(|i| path((3 * i, 0), &[E])).collect();
        let w = EnsembleWindow::new(paths, IntervalTk::new(0, 2), 100.0).unwrap();
        assert!(matches!(max_disjoint_oracle(&w), Err(Error::Capacity(_))));
    }

    #[test]
    fn one_greedy_pick_per_time() {
        // Both (0,1) and (2,3) meet at n=1; only the first is taken at that
        // time, and (2,3) is taken when it meets again at n=3.
        let paths = vec![
            path((0, 0), &[E, N, N]),
            path((2, 0), &[W, S, S]),
            path((10, 0), &[E, N, S]),
            path((12, 0), &[W, E, W]),
        ];
        let w = EnsembleWindow::new(paths, IntervalTk::new(1, 4), 100.0).unwrap();
        let r = analyze_window(&w);
        assert_eq!(r.greedy.len(), 2);
        assert_eq!(r.greedy[0], GreedyMeeting { tau: 1, i: 0, j: 1 });
        assert_eq!(r.greedy[1], GreedyMeeting { tau: 3, i: 2, j: 3 });
    }

    fn random_window(q: usize, len: usize, spread: i64, radius: f64, seed: u64) -> EnsembleWindow {
        use crate::walk::{sample_path, RngStream};
        let paths = (0..q)
            .map(|i| {
                let s = RngStream::new(seed, i as u64);
                let start = LatticePoint::new(2 * ((i as i64 * 7) % (spread + 1)) - spread, 0);
                sample_path(len as u64, start, s)
            })
            .collect();
        EnsembleWindow::new(paths, IntervalTk::new(1, len as u64 + 1), radius).unwrap()
    }

    // The recursive definition read literally: scan times forward, find all
    // valid meetings of fresh pairs, keep the lexicographically first.
    fn reference(w: &EnsembleWindow) -> (Vec<Option<u64>>, Vec<Option<u64>>, Vec<GreedyMeeting>) {
        let q = w.q0();
        let r2 = w.ball_radius * w.ball_radius;
        let sigma: Vec<Option<u64>> = w
            .paths
            .iter()
            .map(|p| (w.interval.start..w.interval.end).find(|&n| p.position(n as usize).norm_sq() > r2))
            .collect();
        let alive = |i: usize, n: u64| sigma[i].is_none_or(|s| n < s);
        let meets = |i: usize, j: usize, n: u64| {
            alive(i, n) && alive(j, n) && w.paths[i].position(n as usize) == w.paths[j].position(n as usize)
        };
        let tau = pairs(q)
            .into_iter()
            .map(|(i, j)| (w.interval.start..w.interval.end).find(|&n| meets(i, j, n)))
            .collect();
        let mut greedy: Vec<GreedyMeeting> = Vec::new();
        let mut from = w.interval.start;
        loop {
            let used = |k: usize| greedy.iter().any(|g| g.i == k || g.j == k);
            let next = (from..w.interval.end).find_map(|n| {
                pairs(q)
                    .into_iter()
                    .find(|&(i, j)| !used(i) && !used(j) && meets(i, j, n))
                    .map(|(i, j)| GreedyMeeting { tau: n, i, j })
            });
            match next {
                Some(g) => {
                    from = g.tau + 1;
                    greedy.push(g);
                }
                None => break,
            }
        }
        (sigma, tau, greedy)
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn window_invariants(q in 2usize..9, len in 1usize..40, spread in 0i64..4, radius in 1.5f64..12.0, seed in 0u64..10_000) {
            let w = random_window(q, len, spread, radius, seed);
            let r = analyze_window(&w);
            let pairs_total = q * (q - 1) / 2;
            prop_assert_eq!(r.r_k, r.greedy.len());
            prop_assert!(r.r_k <= q / 2);
            prop_assert!(r.r_k <= r.r_tilde_k && r.r_tilde_k <= pairs_total);
            prop_assert!(r.greedy.windows(2).all(|g| g[0].tau < g[1].tau));
            let mut seen = vec![false; q];
            for g in &r.greedy {
                prop_assert!(!seen[g.i] && !seen[g.j]);
                seen[g.i] = true;
                seen[g.j] = true;
            }
            let mut firsts: Vec<u64> = r.tau_pairs.iter().filter_map(|p| p.tau).collect();
            firsts.sort_unstable();
            firsts.dedup();
            if !r.finite_pairs_overlap() && firsts.len() == r.r_tilde_k {
                prop_assert_eq!(r.r_k, r.r_tilde_k);
            }
            let oracle = max_disjoint_oracle(&w).unwrap();
            prop_assert!(oracle >= r.r_k);
            let (sigma, tau, greedy) = reference(&w);
            prop_assert_eq!(&r.sigma, &sigma);
            prop_assert_eq!(r.tau_pairs.iter().map(|p| p.tau).collect::<Vec<_>>(), tau);
            prop_assert_eq!(&r.greedy, &greedy);
        }

        #[test]
        fn large_ensembles_use_sorting_consistently(q in 17usize..30, len in 1usize..25, seed in 0u64..10_000) {
            let w = random_window(q, len, 2, 8.0, seed);
            let r = analyze_window(&w);
            let (sigma, tau, greedy) = reference(&w);
            prop_assert_eq!(&r.sigma, &sigma);
            prop_assert_eq!(r.tau_pairs.iter().map(|p| p.tau).collect::<Vec<_>>(), tau);
            prop_assert_eq!(&r.greedy, &greedy);
        }
    }

    #[test]
    fn report_json_round_trip() {
        let w = random_window(5, 20, 1, 4.0, 9);
        let r = analyze_window(&w);
        let s = serde_json::to_string(&r).unwrap();
        assert!(s.contains("\"R_k\"") && s.contains("\"R_tilde_k\""));
        assert_eq!(serde_json::from_str::<IntersectionReport>(&s).unwrap(), r);
    }
}
