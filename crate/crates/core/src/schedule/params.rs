use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time horizon. Paper-scale horizons exceed any machine integer and are
/// carried by their logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Steps(u64),
    Log { ln: f64 },
}

impl Horizon {
    pub fn ln(&self) -> f64 {
        match *self {
            Horizon::Steps(n) => (n as f64).ln(),
            Horizon::Log { ln } => ln,
        }
    }

    pub fn steps(&self) -> Option<u64> {
        match *self {
            Horizon::Steps(n) => Some(n),
            Horizon::Log { .. } => None,
        }
    }

    /// `N >= x` for a real threshold.
    fn at_least(&self, x: f64) -> bool {
        match *self {
            Horizon::Steps(n) => n as f64 >= x,
            Horizon::Log { ln } => ln >= x.ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterTuple {
    pub gamma: f64,
    pub epsilon0: f64,
    pub delta: f64,
    #[serde(rename = "M")]
    pub m: u64,
    pub nu1: u64,
    pub nu2: u64,
    pub alpha: u64,
    #[serde(rename = "N")]
    pub n: Horizon,
    pub q: u64,
}

impl ParameterTuple {
    /// `q0 = floor((1 - eps0) q)`.
    pub fn q0(&self) -> u64 {
        ((1.0 - self.epsilon0) * self.q as f64).floor() as u64
    }

    pub fn validate_ranges(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("epsilon0", self.epsilon0)?;
        unit("delta", self.delta)?;
        if self.m == 0 || self.alpha == 0 {
            return Err(Error::InvalidParameter("M and alpha must be positive".into()));
        }
        if let Horizon::Log { ln } = self.n {
            if !(ln.is_finite() && ln > 0.0) {
                return Err(Error::InvalidParameter(format!("ln N must be positive and finite, got {ln}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClauseResult {
    pub clause: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    /// Clauses (i) to (v) in order.
    pub clauses: Vec<ClauseResult>,
    /// `N, 1/eps0, 1/delta, nu1, nu2, M, alpha >= 100`.
    pub strict_floor: bool,
    pub all_hold: bool,
}

/// Evaluates the standing parameter constraints. Advisory only: desk-scale
/// runs violate (v) by construction.
pub fn check_parameters(p: &ParameterTuple) -> ConstraintReport {
    let (g, a) = (p.gamma, p.alpha as f64);
    let (nu1, nu2, m) = (p.nu1 as f64, p.nu2 as f64, p.m as f64);
    let half = g * a / 2.0;
    let c1 = (-2.0 * p.delta.ln() - half).exp();
    let c2 = (4.0 * nu1).ln() / (a * g);
    let c3 = nu2 / (nu1 * p.delta * p.delta);
    let c4 = (nu2.ln() - half - 2.0 * m.ln()).exp();
    let c5_rhs = (4.0 * nu2).ln().max(2.0 * a);
    let ln_n = p.n.ln();
    let clauses = vec![
        ClauseResult {
            clause: "(i) delta^-2 exp(-gamma alpha/2) <= 1".into(),
            lhs: c1,
            rhs: 1.0,
            holds: c1 <= 1.0,
        },
        ClauseResult {
            clause: "(ii) ln(4 nu1)/(alpha gamma) < 1/4".into(),
            lhs: c2,
            rhs: 0.25,
            holds: c2 < 0.25,
        },
        ClauseResult {
            clause: "(iii) nu2/(nu1 delta^2) <= 1/32".into(),
            lhs: c3,
            rhs: 1.0 / 32.0,
            holds: c3 <= 1.0 / 32.0,
        },
        ClauseResult {
            clause: "(iv) nu2 exp(-gamma alpha/2)/M^2 <= 1/16".into(),
            lhs: c4,
            rhs: 1.0 / 16.0,
            holds: c4 <= 1.0 / 16.0,
        },
        ClauseResult {
            clause: "(v) ln N > max(ln(4 nu2), 2 alpha)".into(),
            lhs: ln_n,
            rhs: c5_rhs,
            holds: ln_n > c5_rhs,
        },
    ];
    let strict_floor = p.n.at_least(100.0)
        && 1.0 / p.epsilon0 >= 100.0
        && 1.0 / p.delta >= 100.0
        && p.nu1 >= 100
        && p.nu2 >= 100
        && p.m >= 100
        && p.alpha >= 100;
    let all_hold = strict_floor && clauses.iter().all(|c| c.holds);
    ConstraintReport {
        clauses,
        strict_floor,
        all_hold,
    }
}
