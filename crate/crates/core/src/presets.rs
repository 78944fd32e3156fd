//! Named parameter sets. `desk-small` and `desk-large` are simulatable;
//! `paper-scale-validate` satisfies every parameter constraint and is only
//! meant for log-domain schedule validation.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::{Horizon, ParameterTuple};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub params: ParameterTuple,
    pub beta_hat: f64,
    pub replicates: u64,
    /// Whether walks can actually be simulated at this horizon.
    pub simulatable: bool,
}

pub const PRESET_NAMES: [&str; 3] = ["desk-small", "desk-large", "paper-scale-validate"];

const DESK: ParameterTuple = ParameterTuple {
    gamma: 0.2,
    epsilon0: 0.01,
    delta: 0.01,
    m: 100,
    nu1: 10,
    nu2: 10,
    alpha: 5,
    n: Horizon::Steps(1_000),
    q: 10,
};

pub fn preset(name: &str) -> Result<Preset> {
    match name {
        "desk-small" => Ok(Preset {
            name: "desk-small",
            params: DESK,
            beta_hat: 0.5,
            replicates: 10_000,
            simulatable: true,
        }),
        "desk-large" => Ok(Preset {
            name: "desk-large",
            params: ParameterTuple {
                n: Horizon::Steps(1_000_000),
                ..DESK
            },
            beta_hat: 0.5,
            replicates: 20_000,
            simulatable: true,
        }),
        "paper-scale-validate" => Ok(Preset {
            name: "paper-scale-validate",
            params: ParameterTuple {
                gamma: 0.5,
                epsilon0: 0.01,
                delta: 0.01,
                m: 100,
                nu1: 100_000_000,
                nu2: 100,
                alpha: 400,
                n: Horizon::Log { ln: 10_000.0 },
                q: 100,
            },
            beta_hat: 0.5,
            replicates: 0,
            simulatable: false,
        }),
        other => Err(Error::InvalidParameter(format!(
            "unknown preset {other:?}, expected one of {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
