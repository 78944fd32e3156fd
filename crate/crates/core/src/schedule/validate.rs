//! Log-domain evaluation of the schedule and of its structural bounds.
//!
//! Every quantity is carried as a natural logarithm, so horizons far beyond
//! any machine integer (`ln N` in the hundreds or thousands) can be checked.
//! `ln ceil(e^x)` is formed exactly for `x < 36` and equals `x` to within
//! rounding above that.

use serde::{Deserialize, Serialize};

use super::{ParameterTuple, Schedule, ScheduleMode};
use crate::error::{Error, Result};
use crate::serde_ext::{ext_f64, ext_f64_vec};

const MAX_BLOCKS: u64 = 10_000_000;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

fn ln_ceil_exp(x: f64) -> f64 {
    if x < 36.0 {
        x.exp().ceil().ln()
    } else {
        x
    }
}

fn tolerance(a: f64, b: f64) -> f64 {
    let scale = [1.0, a.abs(), b.abs()]
        .into_iter()
        .filter(|v| v.is_finite())
        .fold(1.0, f64::max);
    1e-9 * scale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogSchedule {
    pub mode: ScheduleMode,
    pub ln_n: f64,
    pub alpha_bar: f64,
    /// `ln l_k` for `k = 0..=K+1` (`ln l_0 = -inf`).
    #[serde(with = "ext_f64_vec")]
    pub ln_l: Vec<f64>,
    /// `ln L_k` for `k = 0..=K+2` (`ln L_0 = ln L_1 = -inf`).
    #[serde(with = "ext_f64_vec", rename = "ln_L")]
    pub ln_big_l: Vec<f64>,
    #[serde(rename = "K")]
    pub k: u64,
    /// Blocks whose fit test `L_{k+1} <= N` was decided within rounding.
    pub near_ties: Vec<u64>,
}

pub fn build_log_schedule(p: &ParameterTuple, mode: ScheduleMode) -> Result<LogSchedule> {
    p.validate_ranges()?;
    let ln_n = p.n.ln();
    if !(ln_n > 0.0) {
        return Err(Error::InvalidParameter("N must be at least 2".into()));
    }
    let alpha_bar = mode.alpha_bar(p.alpha as f64, ln_n, p.q)?;
    let ln_nu1 = (p.nu1 as f64).ln();
    let ln_tail = (2.0 + p.nu2 as f64).ln();
    let mut ln_l = vec![f64::NEG_INFINITY];
    let mut ln_big_l = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
    let mut near_ties = Vec::new();
    let mut k = 1u64;
    loop {
        if k > MAX_BLOCKS {
            return Err(Error::Capacity(format!("more than {MAX_BLOCKS} blocks")));
        }
        let fk = (k as f64 * alpha_bar).exp();
        let lk = ln_ceil_exp(p.gamma * fk * ln_n);
        ln_l.push(lk);
        let ln_o = log_add(ln_nu1 + ln_l[k as usize - 1], ln_tail + lk);
        let next = log_add(ln_big_l[k as usize], ln_o);
        ln_big_l.push(next);
        if (next - ln_n).abs() <= tolerance(next, ln_n) {
            near_ties.push(k);
        }
        if next > ln_n {
            return Ok(LogSchedule {
                mode,
                ln_n,
                alpha_bar,
                ln_l,
                ln_big_l,
                k: k - 1,
                near_ties,
            });
        }
        k += 1;
    }
}

impl Schedule {
    pub fn log_view(&self) -> LogSchedule {
        let ln_l = self
            .l
            .iter()
            .map(|&x| if x == 0 { f64::NEG_INFINITY } else { (x as f64).ln() })
            .collect();
        let ln_big_l = self
            .big_l
            .iter()
            .map(|&x| if x == 0 { f64::NEG_INFINITY } else { (x as f64).ln() })
            .collect();
        LogSchedule {
            mode: self.mode,
            ln_n: (self.n as f64).ln(),
            alpha_bar: self.alpha_bar,
            ln_l,
            ln_big_l,
            k: self.k,
            near_ties: Vec::new(),
        }
    }
}

/// One inequality `lhs <= rhs`, evaluated in log space where noted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub k: Option<u64>,
    pub inequality: String,
    #[serde(with = "ext_f64")]
    pub lhs: f64,
    #[serde(with = "ext_f64")]
    pub rhs: f64,
    pub holds: bool,
    /// Decided within rounding tolerance.
    pub near_tie: bool,
}

impl LemmaCheck {
    fn new(k: Option<u64>, inequality: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            k,
            inequality: inequality.into(),
            lhs,
            rhs,
            holds: lhs <= rhs,
            near_tie: (lhs - rhs).abs() <= tolerance(lhs, rhs),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    #[serde(rename = "K")]
    pub k: u64,
    /// No block fits, so the per-block inequalities are empty.
    pub vacuous: bool,
    pub checks: Vec<LemmaCheck>,
    pub all_hold: bool,
    pub near_ties: usize,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &LemmaCheck> {
        self.checks.iter().filter(|c| !c.holds)
    }
}

/// Block-ratio bounds, the `L_{k+1}` bound, `nu1 l_{k-1} <= l_k` and the
/// bracket on `K`.
pub fn validate_log_schedule(s: &LogSchedule, p: &ParameterTuple) -> ValidationReport {
    let (g, a) = (p.gamma, p.alpha as f64);
    let ln_nu1 = (p.nu1 as f64).ln();
    let ln_4nu2 = (4.0 * p.nu2 as f64).ln();
    let mut checks = Vec::new();
    for k in 1..=s.k {
        let i = k as usize;
        let ratio = s.ln_l[i + 1] - s.ln_l[i];
        checks.push(LemmaCheck::new(Some(k), "gamma alpha/2 <= ln(l_{k+1}/l_k)", g * a / 2.0, ratio));
        checks.push(LemmaCheck::new(Some(k), "ln(l_{k+1}/l_k) <= e alpha", ratio, std::f64::consts::E * a));
        checks.push(LemmaCheck::new(Some(k), "ln L_{k+1} <= ln(4 nu2 l_k)", s.ln_big_l[i + 1], ln_4nu2 + s.ln_l[i]));
        checks.push(LemmaCheck::new(Some(k), "ln(nu1 l_{k-1}) <= ln l_k", ln_nu1 + s.ln_l[i - 1], s.ln_l[i]));
    }
    let upper = (1.0 / g).ln() / s.alpha_bar;
    let frac = ln_4nu2 / s.ln_n;
    let lower = if frac < 1.0 {
        ((1.0 / g).ln() + (-frac).ln_1p()) / s.alpha_bar
    } else {
        f64::NEG_INFINITY
    };
    checks.push(LemmaCheck::new(None, "K lower bracket <= K", lower, s.k as f64));
    // The argument behind the lower bracket (L_{K+2} > N with the L bound
    // applied at K + 1) only yields this weaker form.
    checks.push(LemmaCheck::new(None, "K lower bracket <= K + 1", lower, s.k as f64 + 1.0));
    checks.push(LemmaCheck::new(None, "K <= ln(1/gamma)/alpha_bar", s.k as f64, upper));
    let all_hold = checks.iter().all(|c| c.holds);
    let near_ties = checks.iter().filter(|c| c.near_tie).count() + s.near_ties.len();
    ValidationReport {
        k: s.k,
        vacuous: s.k == 0,
        checks,
        all_hold,
        near_ties,
    }
}

pub fn validate_lemma_2_1(s: &Schedule, p: &ParameterTuple) -> ValidationReport {
    validate_log_schedule(&s.log_view(), p)
}
