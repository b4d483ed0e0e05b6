//! Market model: instances, demand, state dynamics, and feasible actions.
//!
//! A database operator sells idle slots of one channel over a horizon of `N`
//! consecutive slots. Secondary users come in types distinguished by how many
//! consecutive slots they occupy; type 0 is always the light type (one slot).
//! Demand per type is Bernoulli per slot, with probability either given
//! directly (fixed-price analysis) or derived from a linear demand curve
//! `p = 1 - k*r` (elastic analysis).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of the light type in every instance's type list.
pub const LIGHT: usize = 0;

/// How demand probabilities are determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    /// Prices are exogenous; demand probabilities are given directly.
    FixedPrices,
    /// Demand follows `p_i = 1 - k_i * r_i` with price cap `1/k_i`.
    Elastic,
}

/// One secondary-user type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeSpec {
    /// Consecutive slots consumed if admitted (1 for the light type).
    pub occupancy: usize,
    /// Demand slope `k` (1/price units); present in elastic mode.
    pub elasticity: Option<f64>,
    /// Exogenous price (fixed-price mode only).
    pub price: Option<f64>,
    /// Demand probability; either given directly or derived as `1 - k*r`.
    pub demand_prob: Option<f64>,
}

impl TypeSpec {
    pub fn fixed(occupancy: usize, price: f64, demand_prob: f64) -> Self {
        TypeSpec {
            occupancy,
            elasticity: None,
            price: Some(price),
            demand_prob: Some(demand_prob),
        }
    }

    pub fn elastic(occupancy: usize, elasticity: f64) -> Self {
        TypeSpec {
            occupancy,
            elasticity: Some(elasticity),
            price: None,
            demand_prob: None,
        }
    }

    /// Price cap `1/k` in elastic mode.
    pub fn price_cap(&self) -> Option<f64> {
        self.elasticity.map(|k| 1.0 / k)
    }
}

/// A market instance: the problem definition shared by every solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    horizon: usize,
    types: Vec<TypeSpec>,
    mode: DemandMode,
}

impl MarketInstance {
    /// Validates and builds an instance.
    ///
    /// Requirements: `N >= 1`, at least one type, distinct positive
    /// occupancies with exactly type 0 occupying one slot, probabilities in
    /// `[0, 1]`, elasticities positive, and prices within `[0, 1/k]` when an
    /// elasticity is present. A type whose occupancy exceeds the horizon is
    /// valid but never admissible.
    pub fn new(horizon: usize, types: Vec<TypeSpec>, mode: DemandMode) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::Instance("horizon must be at least 1".into()));
        }
        if types.is_empty() {
            return Err(Error::Instance("at least one SU type is required".into()));
        }
        if types[LIGHT].occupancy != 1 {
            return Err(Error::Instance(
                "type 0 must be the light type (occupancy 1)".into(),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, t) in types.iter().enumerate() {
            if t.occupancy < 1 {
                return Err(Error::Instance(format!(
                    "type {i}: occupancy must be positive"
                )));
            }
            if !seen.insert(t.occupancy) {
                return Err(Error::Instance(format!(
                    "duplicate occupancy {}",
                    t.occupancy
                )));
            }
            if i != LIGHT && t.occupancy == 1 {
                return Err(Error::Instance("only type 0 may have occupancy 1".into()));
            }
            if let Some(k) = t.elasticity {
                if !k.is_finite() || k <= 0.0 {
                    return Err(Error::Instance(format!("type {i}: elasticity must be > 0")));
                }
            }
            if let Some(p) = t.demand_prob {
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::Instance(format!(
                        "type {i}: demand_prob {p} outside [0, 1]"
                    )));
                }
            }
            if let Some(r) = t.price {
                if r < 0.0 {
                    return Err(Error::Instance(format!("type {i}: price {r} is negative")));
                }
                if let Some(k) = t.elasticity {
                    if r > 1.0 / k {
                        return Err(Error::Instance(format!(
                            "type {i}: price {r} exceeds cap {}",
                            1.0 / k
                        )));
                    }
                }
            }
            match mode {
                DemandMode::Elastic => {
                    if t.elasticity.is_none() {
                        return Err(Error::Instance(format!(
                            "type {i}: elastic mode needs an elasticity"
                        )));
                    }
                }
                DemandMode::FixedPrices => {
                    if t.price.is_none() {
                        return Err(Error::Instance(format!(
                            "type {i}: fixed_prices mode needs a price"
                        )));
                    }
                    if t.demand_prob.is_none() && t.elasticity.is_none() {
                        return Err(Error::Instance(format!(
                            "type {i}: fixed_prices mode needs a demand_prob or an elasticity"
                        )));
                    }
                }
            }
        }
        Ok(MarketInstance {
            horizon,
            types,
            mode,
        })
    }

    /// Two-type fixed-price instance: light (occupancy 1) plus heavy (occupancy `m`).
    pub fn two_type_fixed(
        horizon: usize,
        m: usize,
        p_l: f64,
        p_h: f64,
        r_l: f64,
        r_h: f64,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::Instance("heavy occupancy must be at least 2".into()));
        }
        MarketInstance::new(
            horizon,
            vec![TypeSpec::fixed(1, r_l, p_l), TypeSpec::fixed(m, r_h, p_h)],
            DemandMode::FixedPrices,
        )
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn types(&self) -> &[TypeSpec] {
        &self.types
    }

    pub fn mode(&self) -> DemandMode {
        self.mode
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    pub fn max_occupancy(&self) -> usize {
        self.types.iter().map(|t| t.occupancy).max().unwrap_or(1)
    }

    /// Effective demand probability of type `i` (direct, or `1 - k*r`).
    pub fn demand_prob(&self, i: usize) -> f64 {
        let t = &self.types[i];
        match t.demand_prob {
            Some(p) => p,
            None => demand_probability(
                t.elasticity.expect("validated: elasticity present"),
                t.price.expect("validated: price present"),
            )
            .expect("validated: price within cap"),
        }
    }

    /// Price charged to type `i` (fixed-price instances).
    pub fn price(&self, i: usize) -> f64 {
        self.types[i].price.expect("fixed-price instance")
    }

    /// True when the instance is exactly {light, one heavy type}.
    pub fn is_two_type(&self) -> bool {
        self.types.len() == 2
    }

    /// Heavy occupancy `M` of a two-type instance.
    pub fn heavy_occupancy(&self) -> Result<usize> {
        if !self.is_two_type() {
            return Err(Error::Instance("expected a two-type instance".into()));
        }
        Ok(self.types[1].occupancy)
    }

    /// A type is admissible at slot `n` only if it fits before the horizon ends.
    pub fn admissible(&self, type_idx: usize, slot: usize) -> bool {
        slot + self.types[type_idx].occupancy - 1 <= self.horizon
    }
}

/// Per-slot demand realization: bit `i` set means at least one type-`i`
/// request arrived and is willing to pay the announced price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DemandPattern(pub u32);

impl DemandPattern {
    pub fn has(&self, type_idx: usize) -> bool {
        self.0 >> type_idx & 1 == 1
    }

    pub fn with(self, type_idx: usize) -> Self {
        DemandPattern(self.0 | 1 << type_idx)
    }

    /// All `2^I` patterns for `I` types, in increasing bitmask order.
    pub fn all(num_types: usize) -> impl Iterator<Item = DemandPattern> {
        (0..1u32 << num_types).map(DemandPattern)
    }

    /// Joint probability of this realization under independent Bernoulli demand.
    pub fn probability(&self, probs: &[f64]) -> f64 {
        probs
            .iter()
            .enumerate()
            .map(|(i, p)| if self.has(i) { *p } else { 1.0 - *p })
            .product()
    }

    /// Bit string in type order, e.g. `"10"` = light present, heavy absent.
    pub fn bits(&self, num_types: usize) -> String {
        (0..num_types)
            .map(|i| if self.has(i) { '1' } else { '0' })
            .collect()
    }
}

/// An admission decision: reject everyone or admit one type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    /// Admit no one this slot.
    None,
    /// Admit one SU of the given type index.
    Admit(usize),
}

impl Action {
    /// Slots consumed by the action: 1 for no-admit or light, `M` for heavy.
    pub fn occupancy(&self, instance: &MarketInstance) -> usize {
        match self {
            Action::None => 1,
            Action::Admit(i) => instance.types()[*i].occupancy,
        }
    }

    /// Immediate revenue collected by the action.
    pub fn revenue(&self, prices: &[f64]) -> f64 {
        match self {
            Action::None => 0.0,
            Action::Admit(i) => prices[*i],
        }
    }

    /// Compact action code: 0 = none, `i + 1` = type `i` (so light = 1).
    pub fn code(&self) -> usize {
        match self {
            Action::None => 0,
            Action::Admit(i) => i + 1,
        }
    }
}

/// System state at the start of a slot: remaining occupied slots plus the
/// realized demand bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemState {
    /// Remaining occupied slots; 0 means the channel is free.
    pub remaining: usize,
    /// Per-type demand presence bits.
    pub demands: DemandPattern,
}

/// Linear demand probability `1 - k*r`, clamped into `[0, 1]`.
pub fn demand_probability(k: f64, r: f64) -> Result<f64> {
    if !k.is_finite() || k <= 0.0 {
        return Err(Error::Domain(format!("elasticity must be > 0, got {k}")));
    }
    if r < 0.0 {
        return Err(Error::Domain(format!("price {r} below lower bound 0")));
    }
    let cap = 1.0 / k;
    if r > cap {
        return Err(Error::Domain(format!("price {r} above cap 1/k = {cap}")));
    }
    Ok((1.0 - k * r).clamp(0.0, 1.0))
}

/// Remaining-occupancy dynamics `S' = (S + a(1-S) - 1)^+`, with the action
/// encoded as its occupancy (0 = no admission).
pub fn state_transition(remaining: usize, admitted_occupancy: usize) -> Result<usize> {
    if remaining >= 1 {
        if admitted_occupancy > 0 {
            return Err(Error::OccupiedAdmission { remaining });
        }
        return Ok(remaining - 1);
    }
    Ok(admitted_occupancy.saturating_sub(1))
}

/// Feasible admission actions for `state` at slot `n`: no-admit always, plus
/// each type whose demand is present, provided the channel is free and the
/// type's occupancy fits in the remaining horizon.
pub fn feasible_actions(
    state: &SystemState,
    slot: usize,
    instance: &MarketInstance,
) -> Vec<Action> {
    let mut actions = vec![Action::None];
    if state.remaining == 0 {
        for i in 0..instance.num_types() {
            if state.demands.has(i) && instance.admissible(i, slot) {
                actions.push(Action::Admit(i));
            }
        }
    }
    actions
}

/// An SU requests the channel iff its realized utility covers the price.
pub fn su_accepts(utility: f64, price: f64) -> bool {
    utility >= price
}

/// Wireless channel parameters used to derive demand from fading statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Slot duration `T` in seconds.
    pub slot_seconds: f64,
    /// Bandwidth `w` in Hz.
    pub bandwidth_hz: f64,
    /// Maximum transmit power in W.
    pub max_power_w: f64,
    /// Noise power density in W/Hz.
    pub noise_density: f64,
    /// Valuation per nat of transmitted data.
    pub data_valuation: f64,
    /// Base price sensitivity, made dimensionless by the mean utility.
    pub base_sensitivity: f64,
}

impl ChannelModel {
    fn validate(&self) -> Result<()> {
        let fields = [
            ("slot_seconds", self.slot_seconds),
            ("bandwidth_hz", self.bandwidth_hz),
            ("max_power_w", self.max_power_w),
            ("noise_density", self.noise_density),
            ("data_valuation", self.data_valuation),
            ("base_sensitivity", self.base_sensitivity),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "channel model: {name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Total data in nats over the occupied slots, one gain per slot:
    /// `sum_m T*w*ln(1 + P*Z_m / (n0*w))`.
    pub fn transmitted_data(&self, gains: &[f64]) -> Result<f64> {
        self.validate()?;
        if gains.is_empty() {
            return Err(Error::Domain(
                "at least one occupied slot is required".into(),
            ));
        }
        let mut total = 0.0;
        for &z in gains {
            if z < 0.0 {
                return Err(Error::Domain(format!("channel gain {z} is negative")));
            }
            total += self.slot_seconds
                * self.bandwidth_hz
                * (1.0 + self.max_power_w * z / (self.noise_density * self.bandwidth_hz)).ln();
        }
        Ok(total)
    }

    /// Utility of an SU with the given per-slot gains: valuation times data.
    pub fn utility(&self, gains: &[f64]) -> Result<f64> {
        Ok(self.data_valuation * self.transmitted_data(gains)?)
    }

    /// Demand elasticity `k = k_hat / E[U]` scaled so a zero price yields
    /// demand probability 1.
    pub fn elasticity_from_mean_utility(&self, mean_utility: f64) -> Result<f64> {
        self.validate()?;
        if !mean_utility.is_finite() || mean_utility <= 0.0 {
            return Err(Error::Domain(format!(
                "mean utility must be > 0 (degenerate channel), got {mean_utility}"
            )));
        }
        Ok(self.base_sensitivity / mean_utility)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_type(n: usize, m: usize) -> MarketInstance {
        MarketInstance::two_type_fixed(n, m, 0.5, 0.5, 1.0, 3.0).unwrap()
    }

    #[test]
    fn demand_probability_examples() {
        assert_eq!(demand_probability(2.0, 0.0).unwrap(), 1.0);
        assert_eq!(demand_probability(2.0, 0.5).unwrap(), 0.0);
        assert!((demand_probability(100.0, 0.004).unwrap() - 0.6).abs() < 1e-12);
        assert!(demand_probability(2.0, 0.6).is_err());
        assert!(demand_probability(2.0, -0.1).is_err());
    }

    #[test]
    fn demand_probability_is_affine_and_decreasing() {
        let k = 3.0;
        let p0 = demand_probability(k, 0.0).unwrap();
        let p1 = demand_probability(k, 1.0 / k).unwrap();
        assert_eq!(p0, 1.0);
        assert_eq!(p1, 0.0);
        let mid = demand_probability(k, 0.5 / k).unwrap();
        assert!((mid - 0.5).abs() < 1e-12);
    }

    #[test]
    fn state_transition_examples() {
        assert_eq!(state_transition(0, 0).unwrap(), 0);
        assert_eq!(state_transition(0, 2).unwrap(), 1);
        assert_eq!(state_transition(1, 0).unwrap(), 0);
        assert!(state_transition(1, 2).is_err());
    }

    #[test]
    fn transition_returns_to_free_in_occupancy_steps() {
        for occ in 1..=6 {
            let mut s = state_transition(0, occ).unwrap();
            let mut steps = 1;
            while s > 0 {
                s = state_transition(s, 0).unwrap();
                steps += 1;
            }
            assert_eq!(steps, occ);
        }
    }

    #[test]
    fn feasible_actions_examples() {
        let inst = two_type(10, 2);
        let free = SystemState {
            remaining: 0,
            demands: DemandPattern(0b11),
        };
        assert_eq!(
            feasible_actions(&free, 1, &inst),
            vec![Action::None, Action::Admit(0), Action::Admit(1)]
        );
        let busy = SystemState {
            remaining: 1,
            demands: DemandPattern(0b11),
        };
        assert_eq!(feasible_actions(&busy, 1, &inst), vec![Action::None]);
        // Horizon cutoff: the heavy type no longer fits at slot N.
        let last = SystemState {
            remaining: 0,
            demands: DemandPattern(0b10),
        };
        assert_eq!(feasible_actions(&last, 10, &inst), vec![Action::None]);
    }

    #[test]
    fn feasible_actions_monotone_in_demands() {
        let inst = two_type(10, 2);
        for slot in 1..=10 {
            for bits in 0u32..4 {
                let base = SystemState {
                    remaining: 0,
                    demands: DemandPattern(bits),
                };
                let with_all = SystemState {
                    remaining: 0,
                    demands: DemandPattern(0b11),
                };
                let a = feasible_actions(&base, slot, &inst);
                let b = feasible_actions(&with_all, slot, &inst);
                for act in &a {
                    assert!(b.contains(act));
                }
            }
        }
    }

    #[test]
    fn transmitted_data_examples() {
        let ch = ChannelModel {
            slot_seconds: 1.0,
            bandwidth_hz: 1.0,
            max_power_w: 1.0,
            noise_density: 1.0,
            data_valuation: 1.0,
            base_sensitivity: 1.0,
        };
        assert_eq!(ch.transmitted_data(&[0.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert!((ch.transmitted_data(&[e - 1.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((ch.transmitted_data(&[e - 1.0, e - 1.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(ch.transmitted_data(&[-0.5]).is_err());
    }

    #[test]
    fn elasticity_from_channel() {
        let mut ch = ChannelModel {
            slot_seconds: 1.0,
            bandwidth_hz: 1.0,
            max_power_w: 1.0,
            noise_density: 1.0,
            data_valuation: 1.0,
            base_sensitivity: 1.0,
        };
        assert_eq!(ch.elasticity_from_mean_utility(1.0).unwrap(), 1.0);
        ch.base_sensitivity = 2.0;
        assert_eq!(ch.elasticity_from_mean_utility(4.0).unwrap(), 0.5);
        assert!(ch.elasticity_from_mean_utility(0.0).is_err());
    }

    #[test]
    fn su_accepts_boundary() {
        assert!(su_accepts(1.0, 1.0));
        assert!(!su_accepts(0.5, 1.0));
        assert!(su_accepts(2.0, 0.0));
    }

    #[test]
    fn instance_validation() {
        assert!(MarketInstance::two_type_fixed(0, 2, 0.5, 0.5, 1.0, 1.0).is_err());
        // M > N is allowed; the heavy type is simply never admissible.
        assert!(MarketInstance::two_type_fixed(1, 2, 0.5, 0.5, 1.0, 1.0).is_ok());
        assert!(MarketInstance::new(
            3,
            vec![
                TypeSpec::fixed(1, 1.0, 0.5),
                TypeSpec::fixed(2, 1.0, 0.5),
                TypeSpec::fixed(2, 1.0, 0.5)
            ],
            DemandMode::FixedPrices,
        )
        .is_err());
        assert!(MarketInstance::new(
            3,
            vec![TypeSpec::fixed(2, 1.0, 0.5)],
            DemandMode::FixedPrices,
        )
        .is_err());
        assert!(MarketInstance::two_type_fixed(3, 2, 1.5, 0.5, 1.0, 1.0).is_err());
    }
}
