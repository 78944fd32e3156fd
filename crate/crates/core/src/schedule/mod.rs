//! Multi-scale decomposition of `[0, N]`.
//!
//! With `f_k = e^{k alpha_bar}`, block `k` has core length
//! `l_k = ceil(N^{gamma f_k})`, total length `o_k = nu1 l_{k-1} + (2 + nu2) l_k`
//! and starts at `L_k = o_1 + ... + o_{k-1}`. `K` is the last block that
//! fits: `K = max{k : L_{k+1} <= N}`.

mod params;
mod validate;

pub use params::{check_parameters, ClauseResult, ConstraintReport, Horizon, ParameterTuple};
pub use validate::{
    build_log_schedule, validate_lemma_2_1, validate_log_schedule, LemmaCheck, LogSchedule,
    ValidationReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScheduleMode {
    /// `alpha_bar = alpha / ln N`.
    #[serde(rename = "log_N")]
    LogN,
    /// `alpha_bar = alpha / C(q, 2)`.
    #[serde(rename = "binom_q")]
    BinomQ,
}

impl std::str::FromStr for ScheduleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "log_N" | "log_n" | "logN" => Ok(ScheduleMode::LogN),
            "binom_q" | "binomq" => Ok(ScheduleMode::BinomQ),
            _ => Err(Error::InvalidParameter(format!("unknown schedule mode {s:?}"))),
        }
    }
}

impl ScheduleMode {
    pub fn alpha_bar(self, alpha: f64, ln_n: f64, q: u64) -> Result<f64> {
        match self {
            ScheduleMode::LogN => {
                if !(ln_n > 0.0) {
                    return Err(Error::InvalidParameter("need N >= 2".into()));
                }
                Ok(alpha / ln_n)
            }
            ScheduleMode::BinomQ => {
                if q < 2 {
                    return Err(Error::InvalidParameter("binom_q mode needs q >= 2".into()));
                }
                Ok(alpha / (q as f64 * (q as f64 - 1.0) / 2.0))
            }
        }
    }
}

/// The observation window `T_k = [t1, t1 + l_k)` inside block `k`, in times
/// relative to the block start `L_k`. It holds exactly `l_k` time points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalTk {
    pub start: u64,
    pub end: u64,
}

impl IntervalTk {
    pub fn new(start: u64, end: u64) -> Self {
        assert!(start <= end);
        Self { start, end }
    }

    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn contains(&self, n: u64) -> bool {
        self.start <= n && n < self.end
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub mode: ScheduleMode,
    pub n: u64,
    pub nu1: u64,
    pub nu2: u64,
    pub alpha_bar: f64,
    /// `f[k]` for `k = 0..=K+1`.
    pub f: Vec<f64>,
    /// `l[k]` for `k = 0..=K+1`; `l[0] = 0`.
    pub l: Vec<u64>,
    /// `N^{gamma f_k}` before rounding up, for auditing the ceiling.
    pub l_raw: Vec<f64>,
    /// `o[k]` for `k = 1..=K+1`; `o[0] = 0` by convention.
    pub o: Vec<u128>,
    /// `big_l[k]` for `k = 1..=K+2`; `big_l[0] = 0` by convention.
    #[serde(rename = "L")]
    pub big_l: Vec<u128>,
    #[serde(rename = "K")]
    pub k: u64,
    /// Indices whose ceiling sits within rounding distance of an integer.
    pub ambiguous_ceilings: Vec<u64>,
}

/// `ceil(e^x)` with a flag when `e^x` is within a few ulp of an integer.
fn guarded_ceil(x: f64) -> (f64, u64, bool) {
    let v = x.exp();
    let c = v.ceil();
    let slack = 4.0 * f64::EPSILON * v.max(1.0);
    let ambiguous = (c - v) < slack || (v - (c - 1.0)) < slack;
    (v, c as u64, ambiguous)
}

const L_CAP: f64 = 9_223_372_036_854_775_808.0; // 2^63

pub fn build_schedule(p: &ParameterTuple, mode: ScheduleMode) -> Result<Schedule> {
    let n = p.n.steps().ok_or_else(|| {
        Error::Capacity("N exceeds 64-bit range; use the log-domain schedule for validation".into())
    })?;
    if n < 2 {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    p.validate_ranges()?;
    let ln_n = (n as f64).ln();
    let alpha_bar = mode.alpha_bar(p.alpha as f64, ln_n, p.q)?;
    let mut f = vec![1.0];
    let mut l = vec![0u64];
    let mut l_raw = vec![0.0];
    let mut o = vec![0u128];
    let mut big_l = vec![0u128, 0u128];
    let mut ambiguous = Vec::new();
    let mut k = 1u64;
    loop {
        let fk = (k as f64 * alpha_bar).exp();
        let x = p.gamma * fk * ln_n;
        let (raw, lk, amb) = guarded_ceil(x);
        if !(raw < L_CAP) {
            return Err(Error::Capacity(format!(
                "l_{k} = N^(gamma f_{k}) ~ {raw:.3e} exceeds 2^63"
            )));
        }
        if amb {
            ambiguous.push(k);
        }
        f.push(fk);
        l.push(lk);
        l_raw.push(raw);
        let ok = p.nu1 as u128 * l[k as usize - 1] as u128 + (2 + p.nu2 as u128) * lk as u128;
        o.push(ok);
        let next = big_l[k as usize] + ok;
        big_l.push(next);
        if next > n as u128 {
            return Ok(Schedule {
                mode,
                n,
                nu1: p.nu1,
                nu2: p.nu2,
                alpha_bar,
                f,
                l,
                l_raw,
                o,
                big_l,
                k: k - 1,
                ambiguous_ceilings: ambiguous,
            });
        }
        k += 1;
    }
}

impl Schedule {
    /// `T_k` relative to `L_k`, for `1 <= k <= K + 1`.
    pub fn interval(&self, k: u64) -> Result<IntervalTk> {
        if k == 0 || k > self.k + 1 {
            return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", self.k + 1)));
        }
        let start = self.nu1 as u128 * self.l[k as usize - 1] as u128;
        let end = start + self.l[k as usize] as u128;
        if end > u64::MAX as u128 {
            return Err(Error::Capacity(format!("T_{k} extends beyond 64-bit time")));
        }
        Ok(IntervalTk::new(start as u64, end as u64))
    }

    /// `(L_k, o_k)`: absolute start and length of block `k`.
    pub fn block(&self, k: u64) -> Result<(u128, u128)> {
        if k == 0 || k > self.k + 1 {
            return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", self.k + 1)));
        }
        Ok((self.big_l[k as usize], self.o[k as usize]))
    }
}
