//! System, power, region and tilt parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BoundError, Result};
use crate::numerics::BinomialTop;

/// Random-coding ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookKind {
    /// i.i.d. `N(0, P')` entries.
    Gaussian,
    /// i.i.d. equiprobable `±√P` entries.
    Binary,
}

impl fmt::Display for CodebookKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CodebookKind::Gaussian => "gaussian",
            CodebookKind::Binary => "binary",
        })
    }
}

impl FromStr for CodebookKind {
    type Err = BoundError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" => Ok(CodebookKind::Gaussian),
            "binary" | "bpsk" => Ok(CodebookKind::Binary),
            other => Err(BoundError::Config(format!("unknown codebook kind `{other}`"))),
        }
    }
}

/// Frame length `n`, payload `k` bits (`M = 2^k`), `K_a` active users and the
/// PUPE target `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub n: u64,
    pub k: u32,
    pub ka: u32,
    pub epsilon: f64,
}

impl SystemParams {
    pub fn new(n: u64, k: u32, ka: u32, epsilon: f64) -> Result<Self> {
        let p = Self { n, k, ka, epsilon };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(BoundError::InvalidParams("frame length n must be >= 1".into()));
        }
        if self.k == 0 || self.k > 1000 {
            return Err(BoundError::InvalidParams(format!("payload k = {} outside [1, 1000]", self.k)));
        }
        if self.ka == 0 {
            return Err(BoundError::InvalidParams("K_a must be >= 1".into()));
        }
        if self.k < 64 && (self.ka as u64) >= (1u64 << self.k) {
            return Err(BoundError::InvalidParams(format!(
                "K_a = {} must be below M = 2^{}",
                self.ka, self.k
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(BoundError::InvalidParams(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        Ok(())
    }

    /// `M - K_a` as a binomial upper argument.
    pub fn false_pool(&self) -> BinomialTop {
        BinomialTop::PowerOfTwoMinus {
            log2: self.k,
            offset: self.ka as u64,
        }
    }

    pub fn log_m(&self) -> f64 {
        self.k as f64 * std::f64::consts::LN_2
    }

    /// Per-symbol power for an energy-per-bit in dB.
    ///
    /// Uses `Eb/N0 = n P / (2 k)`: unit noise variance per real channel use is
    /// `N0 / 2`, so the energy per bit `nP/k` is divided by `N0 = 2`.
    pub fn power_from_ebno_db(&self, ebno_db: f64) -> f64 {
        2.0 * self.k as f64 * 10f64.powf(ebno_db / 10.0) / self.n as f64
    }

    pub fn ebno_db_from_power(&self, p: f64) -> f64 {
        10.0 * (p * self.n as f64 / (2.0 * self.k as f64)).log10()
    }
}

/// Power constraint `P`, codebook variance `P'` and the matching Eb/N0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerParams {
    pub p: f64,
    pub p_prime: f64,
    pub ebno_db: f64,
}

impl PowerParams {
    /// Gaussian ensemble: `P' = ratio * P` with `0 < ratio < 1`.
    pub fn gaussian(params: &SystemParams, ebno_db: f64, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(BoundError::Domain(format!("P'/P = {ratio} must lie in (0, 1)")));
        }
        let p = params.power_from_ebno_db(ebno_db);
        Ok(Self {
            p,
            p_prime: ratio * p,
            ebno_db,
        })
    }

    /// Binary ensemble: symbols have power exactly `P`.
    pub fn binary(params: &SystemParams, ebno_db: f64) -> Self {
        let p = params.power_from_ebno_db(ebno_db);
        Self { p, p_prime: p, ebno_db }
    }

    pub fn from_power(params: &SystemParams, p: f64, p_prime: f64) -> Self {
        Self {
            p,
            p_prime,
            ebno_db: params.ebno_db_from_power(p),
        }
    }

    pub fn ratio(&self) -> f64 {
        self.p_prime / self.p
    }
}

/// Good-region slope `α` and offset `β`:
/// `‖z‖² < α ‖c_M + z‖² + β n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub alpha: f64,
    pub beta: f64,
}

impl RegionParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(BoundError::Domain(format!("region needs alpha, beta > 0 (got {alpha}, {beta})")));
        }
        Ok(Self { alpha, beta })
    }
}

/// Chernoff tilts: `u` on the error event, `v` on the region event, `delta`
/// on the region complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltParams {
    pub u: f64,
    pub v: f64,
    pub delta: f64,
}
