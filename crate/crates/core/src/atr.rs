//! Abstract task representations: the bank of context vectors, their scalar
//! values, and the TD-error threshold that decides when to switch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::Symbol;
use crate::network::logmod;
use crate::scalar::Scalar;

/// Starting threshold in dynamic mode.
pub const DYNAMIC_THRESHOLD_START: f64 = 1.0;

/// Lower clamp on a dynamic threshold. Positive errors push the threshold
/// down and a non-positive band would switch on every step.
pub const DYNAMIC_THRESHOLD_MIN: f64 = 1e-3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    #[default]
    Static,
    Dynamic,
}

/// Which TD-error crossings may trigger an ATR switch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    #[default]
    Both,
    PositiveOnly,
    NegativeOnly,
    None,
}

impl AblationMode {
    pub const ALL: [AblationMode; 4] = [
        AblationMode::PositiveOnly,
        AblationMode::NegativeOnly,
        AblationMode::Both,
        AblationMode::None,
    ];

    pub fn allows(self, crossing: Crossing) -> bool {
        matches!(
            (self, crossing),
            (AblationMode::Both, Crossing::Negative | Crossing::Positive)
                | (AblationMode::PositiveOnly, Crossing::Positive)
                | (AblationMode::NegativeOnly, Crossing::Negative)
        )
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::Both => "both",
            AblationMode::PositiveOnly => "positive_only",
            AblationMode::NegativeOnly => "negative_only",
            AblationMode::None => "none",
        })
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(AblationMode::Both),
            "positive_only" => Ok(AblationMode::PositiveOnly),
            "negative_only" => Ok(AblationMode::NegativeOnly),
            "none" => Ok(AblationMode::None),
            other => Err(Error::Config(format!("unknown ablation mode `{other}`"))),
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThresholdMode::Static => "static",
            ThresholdMode::Dynamic => "dynamic",
        })
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(ThresholdMode::Static),
            "dynamic" => Ok(ThresholdMode::Dynamic),
            other => Err(Error::Config(format!("unknown threshold mode `{other}`"))),
        }
    }
}

/// Side of the `[-t, t]` band a TD error fell on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossing {
    None,
    Negative,
    Positive,
}

#[derive(Clone, Debug)]
pub struct AtrBank<T: Scalar> {
    atrs: Vec<Symbol>,
    values: Vec<T>,
    current: usize,
    threshold: T,
    mode: ThresholdMode,
    static_threshold: T,
    threshold_alpha: T,
    atr_alpha: T,
    growth_floor: T,
}

#[derive(Clone, Copy, Debug)]
pub struct BankParams {
    pub mode: ThresholdMode,
    /// Band half-width in static mode; ignored in dynamic mode.
    pub threshold: f64,
    pub threshold_alpha: f64,
    pub atr_alpha: f64,
    pub growth_floor: f64,
}

impl<T: Scalar> AtrBank<T> {
    pub fn new(atrs: Vec<Symbol>, params: BankParams) -> Result<Self> {
        if atrs.is_empty() {
            return Err(Error::InvalidArgument("an ATR bank needs at least one ATR".into()));
        }
        if params.mode == ThresholdMode::Static && !(params.threshold > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "static threshold must be positive, got {}",
                params.threshold
            )));
        }
        let mut bank = Self {
            values: vec![T::zero(); atrs.len()],
            atrs,
            current: 0,
            threshold: T::zero(),
            mode: params.mode,
            static_threshold: T::of(params.threshold),
            threshold_alpha: T::of(params.threshold_alpha),
            atr_alpha: T::of(params.atr_alpha),
            growth_floor: T::of(params.growth_floor),
        };
        bank.reset_threshold();
        Ok(bank)
    }

    pub fn count(&self) -> usize {
        self.atrs.len()
    }

    pub fn current(&self) -> usize {
        self.current
    }

    pub fn current_symbol(&self) -> Symbol {
        self.atrs[self.current]
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.atrs
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn threshold(&self) -> T {
        self.threshold
    }

    pub fn mode(&self) -> ThresholdMode {
        self.mode
    }

    pub fn mean_value(&self) -> T {
        let sum = self.values.iter().fold(T::zero(), |a, &b| a + b);
        sum / T::of(self.values.len() as f64)
    }

    pub fn crossing(&self, delta: T) -> Crossing {
        if delta < -self.threshold {
            Crossing::Negative
        } else if delta > self.threshold {
            Crossing::Positive
        } else {
            Crossing::None
        }
    }

    /// `A(current) += α_a * logmod(δ)`
    pub fn update_values(&mut self, delta: T) {
        self.values[self.current] += self.atr_alpha * logmod(delta);
    }

    /// `t += α_t * logmod(δ)` in dynamic mode, except on switch steps.
    pub fn update_threshold(&mut self, delta: T, switched_this_step: bool) {
        if self.mode == ThresholdMode::Static || switched_this_step {
            return;
        }
        self.threshold += self.threshold_alpha * logmod(delta);
        self.threshold = self.threshold.max(T::of(DYNAMIC_THRESHOLD_MIN));
    }

    /// Sequential switch used for large negative errors.
    pub fn advance(&mut self) {
        self.current = (self.current + 1) % self.atrs.len();
    }

    pub fn select(&mut self, index: usize) -> Result<()> {
        if index >= self.atrs.len() {
            return Err(Error::InvalidArgument(format!(
                "ATR index {index} out of range for {} ATRs",
                self.atrs.len()
            )));
        }
        self.current = index;
        Ok(())
    }

    pub fn wants_growth(&self) -> bool {
        self.mean_value() < self.growth_floor
    }

    /// Appends a new ATR, makes it current, zeroes every value and resets
    /// the threshold.
    pub fn grow(&mut self, atr: Symbol) {
        self.atrs.push(atr);
        self.values = vec![T::zero(); self.atrs.len()];
        self.current = self.atrs.len() - 1;
        self.reset_threshold();
    }

    fn reset_threshold(&mut self) {
        self.threshold = match self.mode {
            ThresholdMode::Static => self.static_threshold,
            ThresholdMode::Dynamic => T::of(DYNAMIC_THRESHOLD_START),
        };
    }
}
