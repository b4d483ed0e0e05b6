//! Admission control under fixed prices: backward-induction solver, regime
//! classification, closed-form value functions, and static price optimization.
//!
//! The two-type dynamic program compares, in every free-channel slot, the
//! candidate totals `r_h + V(n+M)`, `r_l + V(n+1)`, and `V(n+1)`, which makes
//! each slot's rule one of three strategies: heavy-priority, light-priority,
//! or light-dominant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Action, DemandPattern, MarketInstance, LIGHT};
use crate::multitype::PriorityOrder;

/// Per-slot admission rule: which candidate outranks which.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Strategy {
    /// Admit heavy whenever present, light otherwise.
    #[serde(rename = "HP")]
    HeavyPriority,
    /// Admit light whenever present, heavy only when light is absent.
    #[serde(rename = "LP")]
    LightPriority,
    /// Admit light whenever present, never heavy.
    #[serde(rename = "LD")]
    LightDominant,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::HeavyPriority,
        Strategy::LightPriority,
        Strategy::LightDominant,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Strategy::HeavyPriority => "HP",
            Strategy::LightPriority => "LP",
            Strategy::LightDominant => "LD",
        }
    }

    /// Two-type action under this rule for a free channel.
    pub fn action(&self, light_present: bool, heavy_present: bool) -> Action {
        let (x, y) = (light_present, heavy_present);
        match self {
            Strategy::HeavyPriority if y => Action::Admit(1),
            Strategy::LightPriority if y && !x => Action::Admit(1),
            _ if x => Action::Admit(LIGHT),
            _ => Action::None,
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Price-ratio regime in which a stationary admission policy is optimal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    LightDominant,
    LightPriority,
    /// No stationary policy is provably optimal; run the full DP.
    AlgorithmNeeded,
    HeavyPriority,
}

impl Regime {
    pub fn label(&self) -> &'static str {
        match self {
            Regime::LightDominant => "LD",
            Regime::LightPriority => "LP",
            Regime::AlgorithmNeeded => "ALG",
            Regime::HeavyPriority => "HP",
        }
    }
}

/// Optimal expected revenue-to-go `V_n` with a free channel, for `n = 1..=N`;
/// zero beyond the horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    values: Vec<f64>,
}

impl ValueFunction {
    pub(crate) fn from_values(values: Vec<f64>) -> Self {
        ValueFunction { values }
    }

    /// `V_n`; slots past the horizon have no revenue opportunity.
    pub fn get(&self, n: usize) -> f64 {
        if n >= 1 && n <= self.values.len() {
            self.values[n - 1]
        } else {
            0.0
        }
    }

    /// Optimal expected total revenue `V_1`.
    pub fn total(&self) -> f64 {
        self.get(1)
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }
}

/// One slot of a contingency plan: explicit free-channel actions per demand
/// realization, plus the priority order and (for two types) the strategy label
/// they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotPolicy {
    /// Action per demand bitmask (index = `DemandPattern.0`).
    pub actions: Vec<Action>,
    pub order: Option<PriorityOrder>,
    pub label: Option<Strategy>,
}

/// Contingency plan mapping (slot, free-channel demand realization) to an
/// action; an occupied channel always maps to no-admit.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTable {
    pub slots: Vec<SlotPolicy>,
}

impl PolicyTable {
    /// Action at 1-based `slot` for a free channel under `demands`.
    pub fn action(&self, slot: usize, demands: DemandPattern) -> Action {
        self.slots[slot - 1].actions[demands.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Stationary plan that applies `strategy` at every slot of a two-type
    /// instance (heavy is skipped where it no longer fits the horizon).
    pub fn stationary(strategy: Strategy, instance: &MarketInstance) -> Result<Self> {
        if !instance.is_two_type() {
            return Err(Error::Instance("stationary tables are two-type".into()));
        }
        let n = instance.horizon();
        let slots = (1..=n)
            .map(|slot| {
                let heavy_ok = instance.admissible(1, slot);
                let actions = DemandPattern::all(2)
                    .map(|d| {
                        let a = strategy.action(d.has(LIGHT), d.has(1) && heavy_ok);
                        debug_assert!(a != Action::Admit(1) || heavy_ok);
                        a
                    })
                    .collect();
                SlotPolicy {
                    actions,
                    order: None,
                    label: Some(strategy),
                }
            })
            .collect();
        Ok(PolicyTable { slots })
    }
}

/// Fixed-price parameters of a two-type instance.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TwoTypeParams {
    pub n: usize,
    pub m: usize,
    pub p_l: f64,
    pub p_h: f64,
    pub r_l: f64,
    pub r_h: f64,
}

impl TwoTypeParams {
    pub fn from_instance(instance: &MarketInstance) -> Result<Self> {
        let m = instance.heavy_occupancy()?;
        Ok(TwoTypeParams {
            n: instance.horizon(),
            m,
            p_l: instance.demand_prob(LIGHT),
            p_h: instance.demand_prob(1),
            r_l: instance.price(LIGHT),
            r_h: instance.price(1),
        })
    }
}

/// One-slot expectation of the DP recursion with the actions pinned by
/// `strategy`; `v_next` is `V(n+1)` and `v_skip` is `V(n+M)`.
pub fn stage_value(
    strategy: Strategy,
    v_next: f64,
    v_skip: f64,
    p_l: f64,
    p_h: f64,
    r_l: f64,
    r_h: f64,
) -> f64 {
    match strategy {
        Strategy::HeavyPriority => {
            (1.0 - p_h) * v_next + p_h * v_skip + p_l * r_l * (1.0 - p_h) + p_h * r_h
        }
        Strategy::LightPriority => {
            (1.0 - p_h + p_l * p_h) * v_next
                + (1.0 - p_l) * p_h * v_skip
                + p_l * r_l
                + (1.0 - p_l) * p_h * r_h
        }
        Strategy::LightDominant => v_next + p_l * r_l,
    }
}

/// Backward-induction admission solver for a two-type fixed-price instance.
///
/// Each slot's rule maximizes immediate revenue plus expected future revenue;
/// ties between heavy and light admit heavy, while a heavy candidate that only
/// matches the no-admit total is rejected.
pub fn solve_admission(instance: &MarketInstance) -> Result<(PolicyTable, ValueFunction)> {
    let p = TwoTypeParams::from_instance(instance)?;
    let (policy, values) = solve_two_type(&p);
    Ok((policy, values))
}

pub(crate) fn solve_two_type(p: &TwoTypeParams) -> (PolicyTable, ValueFunction) {
    let mut values = vec![0.0; p.n];
    let mut slots: Vec<SlotPolicy> = Vec::with_capacity(p.n);
    let get = |values: &[f64], n: usize| {
        if n >= 1 && n <= p.n {
            values[n - 1]
        } else {
            0.0
        }
    };
    for slot in (1..=p.n).rev() {
        let v_next = get(&values, slot + 1);
        let heavy_fits = slot + p.m - 1 <= p.n;
        let strategy = if !heavy_fits {
            Strategy::LightDominant
        } else {
            let v_skip = get(&values, slot + p.m);
            let heavy_total = p.r_h + v_skip;
            let light_total = p.r_l + v_next;
            if heavy_total >= light_total {
                Strategy::HeavyPriority
            } else if heavy_total > v_next {
                Strategy::LightPriority
            } else {
                Strategy::LightDominant
            }
        };
        let v_skip = get(&values, slot + p.m);
        values[slot - 1] = if heavy_fits {
            stage_value(strategy, v_next, v_skip, p.p_l, p.p_h, p.r_l, p.r_h)
        } else {
            stage_value(
                Strategy::LightDominant,
                v_next,
                0.0,
                p.p_l,
                p.p_h,
                p.r_l,
                p.r_h,
            )
        };
        let actions = DemandPattern::all(2)
            .map(|d| strategy.action(d.has(LIGHT), d.has(1) && heavy_fits))
            .collect();
        slots.push(SlotPolicy {
            actions,
            order: None,
            label: Some(strategy),
        });
    }
    slots.reverse();
    (PolicyTable { slots }, ValueFunction::from_values(values))
}

/// Expected total revenue of forcing `strategy` at every slot (heavy skipped
/// where it no longer fits); the stationary-policy benchmark.
pub fn stationary_value(
    strategy: Strategy,
    n: usize,
    m: usize,
    p_l: f64,
    p_h: f64,
    r_l: f64,
    r_h: f64,
) -> f64 {
    let mut values = vec![0.0; n];
    let get = |values: &[f64], idx: usize| {
        if idx >= 1 && idx <= n {
            values[idx - 1]
        } else {
            0.0
        }
    };
    for slot in (1..=n).rev() {
        let v_next = get(&values, slot + 1);
        values[slot - 1] = if slot + m - 1 <= n {
            stage_value(strategy, v_next, get(&values, slot + m), p_l, p_h, r_l, r_h)
        } else {
            v_next + p_l * r_l
        };
    }
    get(&values, 1)
}

/// Stationary-policy regime of a price ratio `r_h / r_l`.
///
/// Heavy-priority from `2*p_l + (1-p_l)/(1-p_h)` upward, light-priority on the
/// closed band `[p_l, 1+p_l]`, light-dominant strictly below `p_l`; anything
/// else (including `p_h = 1`, where the heavy-priority bound diverges) needs
/// the full DP.
pub fn classify_price_ratio(ratio: f64, p_l: f64, p_h: f64) -> Regime {
    if ratio < p_l {
        Regime::LightDominant
    } else if ratio <= 1.0 + p_l {
        Regime::LightPriority
    } else if p_h < 1.0 && ratio >= hp_ratio_bound(p_l, p_h) {
        Regime::HeavyPriority
    } else {
        Regime::AlgorithmNeeded
    }
}

/// The heavy-priority regime bound `2*p_l + (1-p_l)/(1-p_h)`.
pub fn hp_ratio_bound(p_l: f64, p_h: f64) -> f64 {
    2.0 * p_l + (1.0 - p_l) / (1.0 - p_h)
}

/// Per-slot heavy-priority thresholds `theta(n)` for `n = 1..=N-1` (M = 2),
/// plus their maximum. For `N >= 3` the maximum equals
/// `2*p_l + (1-p_l)/(1-p_h)`, attained at `n = N-2`.
pub fn hp_threshold_sequence(p_l: f64, p_h: f64, n: usize) -> (Vec<f64>, f64) {
    let thresholds: Vec<f64> = (1..n)
        .map(|slot| {
            let sign_pow = (-p_h).powi((n - slot - 1) as i32);
            (1.0 + p_h + p_l * (1.0 - p_h) + 2.0 * p_l * p_h * sign_pow) / (1.0 + p_h * sign_pow)
        })
        .collect();
    let max = thresholds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (thresholds, max)
}

/// Closed-form stationary value `V_n` for M = 2, valid when the strategy's
/// regime condition holds.
///
/// Heavy-priority and light-priority solve the first-order difference
/// equation of the stationary recursion; light-dominant is simply
/// `(N-n+1)*p_l*r_l`. The light-priority tail uses `(1 - q^(N-n+1))/(1 - q)`
/// with `q = p_l*p_h - p_h`, which matches the boundary `V_N = p_l*r_l`.
pub fn closed_form_value(
    strategy: Strategy,
    n: usize,
    horizon: usize,
    p_l: f64,
    p_h: f64,
    r_l: f64,
    r_h: f64,
) -> f64 {
    let slots_left = (horizon + 1 - n) as f64;
    match strategy {
        Strategy::HeavyPriority => {
            let c = p_l * r_l * (1.0 - p_h) + p_h * r_h;
            let b = (2.0 * p_l * r_l * p_h - p_h * r_h) / (1.0 + p_h);
            let tail = (1.0 - (-p_h).powi((horizon + 1 - n) as i32)) / (1.0 + p_h);
            slots_left * c / (1.0 + p_h) + b * tail
        }
        Strategy::LightPriority => {
            let q = p_l * p_h - p_h;
            let c = p_l * r_l + (1.0 - p_l) * p_h * r_h;
            let b = q * (r_h - p_l * r_l) / (1.0 - q);
            let tail = (1.0 - q.powi((horizon + 1 - n) as i32)) / (1.0 - q);
            slots_left * c / (1.0 - q) + b * tail
        }
        Strategy::LightDominant => slots_left * p_l * r_l,
    }
}

/// Result of the static price search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StaticOptimum {
    pub r_l: f64,
    pub r_h: f64,
    pub value: f64,
    pub regime: Regime,
}

/// Optimal static prices by exhaustive grid search over
/// `[0, 1/k_l] x [0, 1/k_h]`, each cell valued by the exact admission DP with
/// `p = 1 - k*r`, followed by one 10x refinement pass around the incumbent.
///
/// Value ties are broken toward the smaller `r_l`, then the smaller `r_h`.
pub fn optimize_static_prices(
    k_l: f64,
    k_h: f64,
    n: usize,
    m: usize,
    resolution: usize,
) -> Result<StaticOptimum> {
    optimize_prices_by(k_l, k_h, n, m, resolution, |p| solve_two_type(p).1.total())
}

/// Same grid machinery with the per-cell objective forced to a stationary
/// policy; used as the benchmark side of the dominance checks.
pub fn optimize_static_prices_stationary(
    strategy: Strategy,
    k_l: f64,
    k_h: f64,
    n: usize,
    m: usize,
    resolution: usize,
) -> Result<StaticOptimum> {
    optimize_prices_by(k_l, k_h, n, m, resolution, move |p| {
        stationary_value(strategy, p.n, p.m, p.p_l, p.p_h, p.r_l, p.r_h)
    })
}

fn optimize_prices_by<F>(
    k_l: f64,
    k_h: f64,
    n: usize,
    m: usize,
    resolution: usize,
    value_of: F,
) -> Result<StaticOptimum>
where
    F: Fn(&TwoTypeParams) -> f64 + Sync,
{
    if !(k_l.is_finite() && k_l > 0.0 && k_h.is_finite() && k_h > 0.0) {
        return Err(Error::Domain("elasticities must be > 0".into()));
    }
    if resolution < 2 {
        return Err(Error::Domain("grid resolution must be at least 2".into()));
    }
    if m < 2 || n < 1 {
        return Err(Error::Instance(format!(
            "need M >= 2 and N >= 1, got M = {m}, N = {n}"
        )));
    }
    let cap_l = 1.0 / k_l;
    let cap_h = 1.0 / k_h;
    let eval = |r_l: f64, r_h: f64| {
        let params = TwoTypeParams {
            n,
            m,
            p_l: (1.0 - k_l * r_l).clamp(0.0, 1.0),
            p_h: (1.0 - k_h * r_h).clamp(0.0, 1.0),
            r_l,
            r_h,
        };
        value_of(&params)
    };
    let scan = |lo_l: f64, hi_l: f64, lo_h: f64, hi_h: f64, steps: usize| {
        (0..=steps)
            .into_par_iter()
            .map(|i| {
                let r_l = lo_l + (hi_l - lo_l) * i as f64 / steps as f64;
                let mut best = (f64::NEG_INFINITY, r_l, 0.0);
                for j in 0..=steps {
                    let r_h = lo_h + (hi_h - lo_h) * j as f64 / steps as f64;
                    let v = eval(r_l, r_h);
                    if v > best.0 {
                        best = (v, r_l, r_h);
                    }
                }
                best
            })
            .reduce(
                || (f64::NEG_INFINITY, 0.0, 0.0),
                |a, b| {
                    if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                        b
                    } else {
                        a
                    }
                },
            )
    };
    let coarse = scan(0.0, cap_l, 0.0, cap_h, resolution);
    let step_l = cap_l / resolution as f64;
    let step_h = cap_h / resolution as f64;
    let fine = scan(
        (coarse.1 - step_l).max(0.0),
        (coarse.1 + step_l).min(cap_l),
        (coarse.2 - step_h).max(0.0),
        (coarse.2 + step_h).min(cap_h),
        20,
    );
    let (value, r_l, r_h) = if fine.0 > coarse.0 { fine } else { coarse };
    let ratio = if r_l > 0.0 { r_h / r_l } else { f64::INFINITY };
    let regime = classify_price_ratio(
        ratio,
        (1.0 - k_l * r_l).clamp(0.0, 1.0),
        (1.0 - k_h * r_h).clamp(0.0, 1.0),
    );
    Ok(StaticOptimum {
        r_l,
        r_h,
        value,
        regime,
    })
}
