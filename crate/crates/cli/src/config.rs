//! Run configuration: JSON schema, defaults, and validation.

use serde::{Deserialize, Serialize};
use spectrum_market::{ChannelModel, DemandMode, MarketInstance, TypeSpec};

use crate::CliError;

fn default_horizon() -> usize {
    100
}
fn default_occupancies() -> Vec<usize> {
    vec![1, 2]
}
fn default_resolution() -> usize {
    400
}
fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    42
}
fn default_axis_min() -> f64 {
    10.0
}
fn default_axis_max() -> f64 {
    150.0
}
fn default_axis_steps() -> usize {
    30
}
fn default_gain_high() -> f64 {
    2.0
}

/// Sweep grid: inclusive ranges over both elasticity axes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_axis_min")]
    pub k_l_min: f64,
    #[serde(default = "default_axis_max")]
    pub k_l_max: f64,
    #[serde(default = "default_axis_steps")]
    pub k_l_steps: usize,
    #[serde(default = "default_axis_min")]
    pub k_h_min: f64,
    #[serde(default = "default_axis_max")]
    pub k_h_max: f64,
    #[serde(default = "default_axis_steps")]
    pub k_h_steps: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            k_l_min: default_axis_min(),
            k_l_max: default_axis_max(),
            k_l_steps: default_axis_steps(),
            k_h_min: default_axis_min(),
            k_h_max: default_axis_max(),
            k_h_steps: default_axis_steps(),
        }
    }
}

/// Wireless channel block for channel-driven demand simulation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub slot_seconds: f64,
    pub bandwidth_hz: f64,
    pub max_power_w: f64,
    pub noise_density: f64,
    pub data_valuation: f64,
    pub base_sensitivity: f64,
    #[serde(default)]
    pub gain_low: f64,
    #[serde(default = "default_gain_high")]
    pub gain_high: f64,
}

impl ChannelConfig {
    pub fn model(&self) -> ChannelModel {
        ChannelModel {
            slot_seconds: self.slot_seconds,
            bandwidth_hz: self.bandwidth_hz,
            max_power_w: self.max_power_w,
            noise_density: self.noise_density,
            data_valuation: self.data_valuation,
            base_sensitivity: self.base_sensitivity,
        }
    }
}

/// One run's configuration. `elasticities` selects elastic mode;
/// `fixed_prices` (with `demand_probs`) selects fixed-price mode; the two are
/// mutually exclusive.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_occupancies")]
    pub occupancies: Vec<usize>,
    #[serde(default)]
    pub elasticities: Option<Vec<f64>>,
    #[serde(default)]
    pub fixed_prices: Option<Vec<f64>>,
    #[serde(default)]
    pub demand_probs: Option<Vec<f64>>,
    #[serde(default = "default_resolution")]
    pub search_resolution: usize,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub channel: Option<ChannelConfig>,
}

impl Config {
    pub fn validate(&self) -> Result<(), CliError> {
        let n_types = self.occupancies.len();
        if self.horizon < 1 {
            return Err(CliError::config("horizon: must be at least 1"));
        }
        if n_types == 0 {
            return Err(CliError::config(
                "occupancies: at least one type is required",
            ));
        }
        if self.occupancies[0] != 1 {
            return Err(CliError::config(
                "occupancies: the first entry must be 1 (light type)",
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for occ in &self.occupancies {
            if !seen.insert(occ) {
                return Err(CliError::config(format!(
                    "occupancies: duplicate occupancy {occ}"
                )));
            }
        }
        if self.elasticities.is_some()
            && (self.fixed_prices.is_some() || self.demand_probs.is_some())
        {
            return Err(CliError::config(
                "elasticities is mutually exclusive with fixed_prices/demand_probs",
            ));
        }
        if self.elasticities.is_none() && self.fixed_prices.is_none() {
            return Err(CliError::config(
                "either elasticities or fixed_prices is required",
            ));
        }
        for (field, values) in [
            ("elasticities", &self.elasticities),
            ("fixed_prices", &self.fixed_prices),
            ("demand_probs", &self.demand_probs),
        ] {
            if let Some(v) = values {
                if v.len() != n_types {
                    return Err(CliError::config(format!(
                        "{field}: expected {n_types} entries (one per occupancy), got {}",
                        v.len()
                    )));
                }
            }
        }
        if let Some(ks) = &self.elasticities {
            if let Some(bad) = ks.iter().find(|k| !k.is_finite() || **k <= 0.0) {
                return Err(CliError::config(format!(
                    "elasticities: must be > 0, got {bad}"
                )));
            }
        }
        if let Some(ps) = &self.demand_probs {
            if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(CliError::config(format!(
                    "demand_probs: must lie in [0, 1], got {bad}"
                )));
            }
        }
        if self.fixed_prices.is_some() && self.demand_probs.is_none() {
            return Err(CliError::config(
                "demand_probs: required alongside fixed_prices",
            ));
        }
        if self.search_resolution < 2 {
            return Err(CliError::config("search_resolution: must be at least 2"));
        }
        if let Some(sweep) = &self.sweep {
            for (field, steps) in [
                ("sweep.k_l_steps", sweep.k_l_steps),
                ("sweep.k_h_steps", sweep.k_h_steps),
            ] {
                if steps < 2 {
                    return Err(CliError::config(format!("{field}: must be at least 2")));
                }
            }
            for (field, lo, hi) in [
                ("sweep.k_l", sweep.k_l_min, sweep.k_l_max),
                ("sweep.k_h", sweep.k_h_min, sweep.k_h_max),
            ] {
                if !lo.is_finite() || lo <= 0.0 || hi < lo {
                    return Err(CliError::config(format!(
                        "{field}: need 0 < min <= max, got [{lo}, {hi}]"
                    )));
                }
            }
        }
        if let Some(ch) = &self.channel {
            if ch.gain_high < ch.gain_low || ch.gain_low < 0.0 {
                return Err(CliError::config(
                    "channel.gain_low/gain_high: need 0 <= low <= high",
                ));
            }
        }
        // Surface the remaining structural constraints through the instance
        // constructor so both entry points agree.
        self.instance()?;
        Ok(())
    }

    /// The market instance this configuration describes.
    pub fn instance(&self) -> Result<MarketInstance, CliError> {
        let types: Vec<TypeSpec> = self
            .occupancies
            .iter()
            .enumerate()
            .map(|(i, &occ)| TypeSpec {
                occupancy: occ,
                elasticity: self.elasticities.as_ref().map(|v| v[i]),
                price: self.fixed_prices.as_ref().map(|v| v[i]),
                demand_prob: self.demand_probs.as_ref().map(|v| v[i]),
            })
            .collect();
        let mode = if self.elasticities.is_some() {
            DemandMode::Elastic
        } else {
            DemandMode::FixedPrices
        };
        MarketInstance::new(self.horizon, types, mode).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn is_elastic(&self) -> bool {
        self.elasticities.is_some()
    }

    /// Elasticities of a two-type elastic configuration.
    pub fn two_type_elasticities(&self) -> Result<(f64, f64), CliError> {
        let ks = self
            .elasticities
            .as_ref()
            .ok_or_else(|| CliError::config("elasticities: required for this command"))?;
        if ks.len() != 2 {
            return Err(CliError::config(format!(
                "occupancies: this command needs exactly two types (light + heavy), got {}",
                ks.len()
            )));
        }
        Ok((ks[0], ks[1]))
    }

    pub fn heavy_occupancy(&self) -> usize {
        self.occupancies.get(1).copied().unwrap_or(2)
    }
}

/// Reads, parses, and validates a configuration file, applying defaults.
pub fn load_config(path: &std::path::Path) -> Result<Config, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    let config: Config = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    config.validate()?;
    Ok(config)
}
