use serde::{Deserialize, Serialize};

use crate::diffcore::RmsPropConfig;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionVariant {
    /// softmax(Q[o] + Q[|O|+p]) per input, then mixed with V.
    SampleDependent,
    /// softmax_rows(Q)·V shared by all inputs, then indexed.
    SampleIndependent,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    Random,
    FixedRows,
}

/// Starting point of the outcome kernels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaInit {
    /// Kernel z starts as `omega_gain` at offset z − S2, i.e. the pure
    /// shifts; kernels beyond 2·S2+1 are Glorot-uniform.
    Shifts,
    Glorot,
}

/// Architecture, loss and optimizer settings for one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyper {
    /// Rows of the attention table (abstract property vectors).
    pub k: usize,
    /// Number of outcome kernels.
    pub m: usize,
    /// Encoder bottleneck width; embedding points live here.
    pub d1: usize,
    pub dp: usize,
    pub dr: usize,
    /// Half-width of the relational windows.
    pub s1: usize,
    /// Half-width of the outcome kernels.
    pub s2: usize,
    /// Decoder hidden width.
    pub hidden: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    pub steps: usize,
    pub variant: AttentionVariant,
    pub init: InitScheme,
    pub omega_init: OmegaInit,
    pub omega_gain: f64,
    pub seed: u64,
}

impl Default for Hyper {
    fn default() -> Self {
        Self {
            k: 4,
            m: 3,
            d1: 2,
            dp: 4,
            dr: 4,
            s1: 1,
            s2: 1,
            hidden: 16,
            lambda1: 5e-7,
            lambda2: 5e-6,
            lr: 1e-2,
            rho: 0.99,
            eps: 1e-8,
            steps: 20_000,
            variant: AttentionVariant::SampleDependent,
            init: InitScheme::Random,
            omega_init: OmegaInit::Shifts,
            omega_gain: 3.0,
            seed: 0,
        }
    }
}

impl Hyper {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            ("k", self.k),
            ("m", self.m),
            ("d1", self.d1),
            ("dp", self.dp),
            ("dr", self.dr),
            ("hidden", self.hidden),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(Error::Config {
                    path: format!("hyper.{name}"),
                    message: "must be at least 1".into(),
                });
            }
        }
        for (name, v) in [("lambda1", self.lambda1), ("lambda2", self.lambda2)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config {
                    path: format!("hyper.{name}"),
                    message: format!("must be a finite non-negative number, got {v}"),
                });
            }
        }
        if !self.omega_gain.is_finite() {
            return Err(Error::Config {
                path: "hyper.omega_gain".into(),
                message: "must be finite".into(),
            });
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config {
                path: "hyper.lr".into(),
                message: "must be positive".into(),
            });
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config {
                path: "hyper.rho".into(),
                message: "must lie in (0, 1)".into(),
            });
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config {
                path: "hyper.eps".into(),
                message: "must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn optimizer(&self) -> RmsPropConfig {
        RmsPropConfig {
            lr: self.lr,
            rho: self.rho,
            eps: self.eps,
        }
    }

    pub fn kernel_len(&self) -> usize {
        2 * self.s2 + 1
    }

    pub fn window_len(&self) -> usize {
        2 * self.s1 + 1
    }
}
