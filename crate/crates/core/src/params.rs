//! Model parameters and the closed-form pieces of the model: power-law
//! impact, recovery intensities, the terminal condition and the map from
//! the reduced value back to total wealth.

use std::fmt;
use std::str::FromStr;

use crate::config::KvMap;
use crate::error::ParamError;

/// Shape of the price-recovery intensity as a function of current impact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryKind {
    /// `lambda_bar1 * (exp(lambda_bar2 * xi) - 1)`
    Strong,
    /// `lambda_bar1 * xi`
    Weak,
}

impl fmt::Display for RecoveryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecoveryKind::Strong => f.write_str("strong"),
            RecoveryKind::Weak => f.write_str("weak"),
        }
    }
}

impl FromStr for RecoveryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strong" => Ok(RecoveryKind::Strong),
            "weak" => Ok(RecoveryKind::Weak),
            other => Err(format!("expected `strong` or `weak`, got `{other}`")),
        }
    }
}

/// Every market, impact, intensity and action-set parameter.
///
/// Defaults are the reference configuration: 50 shares, unit grids,
/// linear impact with amplitude 2, unit recovery amplitude/exponent,
/// weak recovery, no limit orders, `T = 10`, `sigma = 0.08`, `p0 = 150`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub x0: f64,
    pub horizon: f64,
    pub delta_x: f64,
    pub delta_t: f64,
    pub delta_xi: f64,
    /// Spread bonus over the best bid credited to limit-order fills.
    pub spread: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub lambda_bar1: f64,
    pub lambda_bar2: f64,
    pub recovery_kind: RecoveryKind,
    /// Fill intensity of a resting limit order.
    pub lambda_l: f64,
    pub l_max: f64,
    /// Simulation only.
    pub sigma: f64,
    /// Simulation only.
    pub p0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            x0: 50.0,
            horizon: 10.0,
            delta_x: 1.0,
            delta_t: 0.001,
            delta_xi: 1.0,
            spread: 1.0,
            theta1: 2.0,
            theta2: 1.0,
            lambda_bar1: 1.0,
            lambda_bar2: 1.0,
            recovery_kind: RecoveryKind::Weak,
            lambda_l: 0.0,
            l_max: 0.0,
            sigma: 0.08,
            p0: 150.0,
        }
    }
}

/// Config-file key names, in render order.
pub const PARAM_KEYS: [&str; 15] = [
    "x0",
    "T",
    "delta_x",
    "delta_t",
    "delta_Xi",
    "s",
    "theta1",
    "theta2",
    "lambda_bar1",
    "lambda_bar2",
    "recovery_kind",
    "lambda_L",
    "l_max",
    "sigma",
    "p0",
];

/// Returns `num / den` as an integer when it is one up to rounding noise.
pub(crate) fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    if !r.is_finite() || r < -0.5 {
        return None;
    }
    let rounded = r.round();
    if (r - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        fn positive(name: &'static str, v: f64) -> Result<(), ParamError> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    requirement: "finite and > 0",
                    value: v,
                })
            }
        }
        fn nonneg(name: &'static str, v: f64) -> Result<(), ParamError> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ParamError::OutOfRange {
                    name,
                    requirement: "finite and >= 0",
                    value: v,
                })
            }
        }
        positive("x0", self.x0)?;
        positive("T", self.horizon)?;
        positive("delta_x", self.delta_x)?;
        positive("delta_t", self.delta_t)?;
        positive("delta_Xi", self.delta_xi)?;
        positive("theta2", self.theta2)?;
        positive("p0", self.p0)?;
        nonneg("s", self.spread)?;
        nonneg("theta1", self.theta1)?;
        nonneg("lambda_bar1", self.lambda_bar1)?;
        nonneg("lambda_bar2", self.lambda_bar2)?;
        nonneg("lambda_L", self.lambda_l)?;
        nonneg("l_max", self.l_max)?;
        nonneg("sigma", self.sigma)?;

        match integer_ratio(self.x0, self.delta_x) {
            Some(n) if n >= 1 => {}
            _ => {
                return Err(ParamError::NotIntegerMultiple {
                    ratio: "x0 / delta_x",
                    value: self.x0 / self.delta_x,
                })
            }
        }
        match integer_ratio(self.horizon, self.delta_t) {
            Some(n) if n >= 1 => {}
            _ => {
                return Err(ParamError::NotIntegerMultiple {
                    ratio: "T / delta_t",
                    value: self.horizon / self.delta_t,
                })
            }
        }
        if integer_ratio(self.l_max, self.delta_x).is_none() {
            return Err(ParamError::NotIntegerMultiple {
                ratio: "l_max / delta_x",
                value: self.l_max / self.delta_x,
            });
        }
        Ok(())
    }

    /// Market impact `theta1 * zeta^theta2` of selling `zeta` shares at once.
    pub fn impact(&self, zeta: f64) -> Result<f64, ParamError> {
        if zeta < 0.0 {
            return Err(ParamError::NegativeArgument {
                function: "impact",
                value: zeta,
            });
        }
        Ok(self.impact_unchecked(zeta))
    }

    pub(crate) fn impact_unchecked(&self, zeta: f64) -> f64 {
        if zeta == 0.0 {
            0.0
        } else {
            self.theta1 * zeta.powf(self.theta2)
        }
    }

    /// Arrival rate of refilling orders at impact level `xi`.
    pub fn recovery_intensity(&self, xi: f64) -> Result<f64, ParamError> {
        if xi < 0.0 {
            return Err(ParamError::NegativeArgument {
                function: "recovery_intensity",
                value: xi,
            });
        }
        Ok(self.recovery_intensity_unchecked(xi))
    }

    pub(crate) fn recovery_intensity_unchecked(&self, xi: f64) -> f64 {
        match self.recovery_kind {
            // 0 * inf would be NaN once exp overflows
            RecoveryKind::Strong if self.lambda_bar1 == 0.0 => 0.0,
            RecoveryKind::Strong => self.lambda_bar1 * (self.lambda_bar2 * xi).exp_m1(),
            RecoveryKind::Weak => self.lambda_bar1 * xi,
        }
    }

    /// Reduced value at maturity: the whole position is dumped at once.
    pub fn terminal_phi(&self, x: f64) -> Result<f64, ParamError> {
        if x < 0.0 {
            return Err(ParamError::NegativeArgument {
                function: "terminal_phi",
                value: x,
            });
        }
        Ok(-x * self.impact_unchecked(x))
    }

    /// Number of inventory grid steps, `x0 / delta_x`.
    pub fn inventory_steps(&self) -> usize {
        integer_ratio(self.x0, self.delta_x).unwrap_or(0)
    }

    pub fn time_steps(&self) -> usize {
        integer_ratio(self.horizon, self.delta_t).unwrap_or(0)
    }

    pub fn l_max_steps(&self) -> usize {
        integer_ratio(self.l_max, self.delta_x).unwrap_or(0)
    }

    /// Same parameters with a different horizon.
    pub fn with_horizon(&self, horizon: f64) -> Self {
        ModelParams {
            horizon,
            ..self.clone()
        }
    }

    /// Reads the parameter keys out of `kv`, falling back to defaults.
    /// Keys that are not parameters are left in the map.
    pub fn from_kv(kv: &mut KvMap) -> Result<Self, ParamError> {
        let mut p = ModelParams::default();
        macro_rules! field {
            ($key:literal, $slot:expr) => {
                if let Some(v) = kv.take($key)? {
                    $slot = v;
                }
            };
        }
        field!("x0", p.x0);
        field!("T", p.horizon);
        field!("delta_x", p.delta_x);
        field!("delta_t", p.delta_t);
        field!("delta_Xi", p.delta_xi);
        field!("s", p.spread);
        field!("theta1", p.theta1);
        field!("theta2", p.theta2);
        field!("lambda_bar1", p.lambda_bar1);
        field!("lambda_bar2", p.lambda_bar2);
        field!("recovery_kind", p.recovery_kind);
        field!("lambda_L", p.lambda_l);
        field!("l_max", p.l_max);
        field!("sigma", p.sigma);
        field!("p0", p.p0);
        p.validate()?;
        Ok(p)
    }

    /// Parses a complete parameter file; unknown keys are rejected.
    pub fn from_config_str(text: &str) -> Result<Self, ParamError> {
        let mut kv = KvMap::parse(text)?;
        let p = Self::from_kv(&mut kv)?;
        kv.finish()?;
        Ok(p)
    }

    /// Key/value pairs in [`PARAM_KEYS`] order. Floats use the shortest
    /// representation that parses back to the same bits.
    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        let values = [
            self.x0.to_string(),
            self.horizon.to_string(),
            self.delta_x.to_string(),
            self.delta_t.to_string(),
            self.delta_xi.to_string(),
            self.spread.to_string(),
            self.theta1.to_string(),
            self.theta2.to_string(),
            self.lambda_bar1.to_string(),
            self.lambda_bar2.to_string(),
            self.recovery_kind.to_string(),
            self.lambda_l.to_string(),
            self.l_max.to_string(),
            self.sigma.to_string(),
            self.p0.to_string(),
        ];
        PARAM_KEYS.iter().copied().zip(values).collect()
    }
}

/// Allowed order sizes for a given inventory, in units of `delta_x`.
///
/// Both sets are capped by the inventory, so short selling cannot be
/// expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionSets {
    l_max_steps: usize,
}

impl ActionSets {
    pub fn new(params: &ModelParams) -> Self {
        ActionSets {
            l_max_steps: params.l_max_steps(),
        }
    }

    /// `1..=inventory`; empty when nothing is held.
    pub fn market_volumes(&self, inventory: usize) -> std::ops::RangeInclusive<usize> {
        if inventory == 0 {
            #[allow(clippy::reversed_empty_ranges)]
            return 1..=0;
        }
        1..=inventory
    }

    /// `0..=min(l_max, inventory)`; zero means no quote.
    pub fn limit_volumes(&self, inventory: usize) -> std::ops::RangeInclusive<usize> {
        0..=self.l_max_steps.min(inventory)
    }
}

/// Total wealth `y + x (p - xi) + phi` recovered from the reduced value.
pub fn reconstruct_value(x: f64, y: f64, p: f64, xi: f64, phi_value: f64) -> f64 {
    y + x * (p - xi) + phi_value
}
