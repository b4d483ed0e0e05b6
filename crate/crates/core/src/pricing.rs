//! Per-slot dynamic pricing under each admission strategy, and the joint
//! backward solver that picks the best strategy slot by slot.
//!
//! Each slot's price problem is a small constrained maximization whose
//! optimum is one of three closed-form candidates: an interior point `I0` or
//! one of two extreme points `E1` (strategy constraint active) and `E2`
//! (heavy price cap involved). The selecting quantity is the value gap
//! `dR = V(n+1) - V(n+M)`, the opportunity cost of committing the channel.

use serde::{Deserialize, Serialize};

use crate::admission::{stage_value, PolicyTable, SlotPolicy, Strategy, ValueFunction};
use crate::error::{Error, Result};
use crate::market::{DemandPattern, LIGHT};
use crate::multitype::PriorityOrder;

/// Which closed-form solution a slot's prices came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KktCase {
    I0,
    E1,
    E2,
}

impl KktCase {
    pub fn label(&self) -> &'static str {
        match self {
            KktCase::I0 => "I0",
            KktCase::E1 => "E1",
            KktCase::E2 => "E2",
        }
    }
}

/// Optimized prices for one slot under a fixed strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotPricing {
    pub r_l: f64,
    pub r_h: f64,
    pub case: KktCase,
    /// Expected revenue gain of the slot over `V(n+1)`.
    pub gain: f64,
    /// Whether the strategy's optimality constraints hold at these prices.
    /// The backward solver only lets feasible candidates win.
    pub feasible: bool,
}

/// One slot of the optimal dynamic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotQuote {
    pub slot: usize,
    pub strategy: Strategy,
    pub r_l: f64,
    pub r_h: f64,
    pub case: KktCase,
    /// Expected revenue-to-go `V_n` with a free channel.
    pub value: f64,
}

/// The full dynamic pricing solution: per-slot prices, strategy labels, and
/// the value function.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSchedule {
    pub k_l: f64,
    pub k_h: f64,
    pub heavy_occupancy: usize,
    pub slots: Vec<SlotQuote>,
    pub values: ValueFunction,
}

impl PriceSchedule {
    pub fn horizon(&self) -> usize {
        self.slots.len()
    }

    pub fn quote(&self, slot: usize) -> &SlotQuote {
        &self.slots[slot - 1]
    }

    /// Expected total revenue `V_1`.
    pub fn total(&self) -> f64 {
        self.values.total()
    }

    /// Collapsed strategy label over the slots where heavy still fits:
    /// `Some(strategy)` when they all agree, `None` for a mixed schedule.
    /// A horizon with no heavy-feasible slot collapses over all slots.
    pub fn stationary_label(&self) -> Option<Strategy> {
        let cutoff = self
            .horizon()
            .saturating_sub(self.heavy_occupancy - 1)
            .max(1)
            .min(self.horizon());
        let mut labels = self.slots[..cutoff].iter().map(|s| s.strategy);
        let first = labels.next()?;
        labels.all(|s| s == first).then_some(first)
    }

    /// Constant schedule announcing the same prices every slot.
    pub fn from_static(k_l: f64, k_h: f64, m: usize, n: usize, r_l: f64, r_h: f64) -> Self {
        let slots = (1..=n)
            .map(|slot| SlotQuote {
                slot,
                strategy: Strategy::LightDominant,
                r_l,
                r_h,
                case: KktCase::I0,
                value: 0.0,
            })
            .collect();
        PriceSchedule {
            k_l,
            k_h,
            heavy_occupancy: m,
            slots,
            values: ValueFunction::from_values(vec![0.0; n]),
        }
    }

    /// The contingency plan induced by the per-slot strategies.
    pub fn policy(&self) -> PolicyTable {
        let n = self.horizon();
        let slots = self
            .slots
            .iter()
            .map(|q| {
                let heavy_fits = q.slot + self.heavy_occupancy - 1 <= n;
                let actions = DemandPattern::all(2)
                    .map(|d| q.strategy.action(d.has(LIGHT), d.has(1) && heavy_fits))
                    .collect();
                SlotPolicy {
                    actions,
                    order: Some(PriorityOrder::two_type(q.strategy)),
                    label: Some(q.strategy),
                }
            })
            .collect();
        PolicyTable { slots }
    }
}

fn check_elasticities(k_l: f64, k_h: f64) -> Result<()> {
    if !(k_l.is_finite() && k_l > 0.0 && k_h.is_finite() && k_h > 0.0) {
        return Err(Error::Domain(format!(
            "elasticities must be > 0, got k_l = {k_l}, k_h = {k_h}"
        )));
    }
    Ok(())
}

/// Expected slot gain over `V(n+1)` of playing `strategy` at prices
/// `(r_l, r_h)` when the value gap is `d_r`, with linear demand.
pub(crate) fn strategy_gain(
    strategy: Strategy,
    r_l: f64,
    r_h: f64,
    k_l: f64,
    k_h: f64,
    d_r: f64,
) -> f64 {
    let p_l = (1.0 - k_l * r_l).clamp(0.0, 1.0);
    let p_h = (1.0 - k_h * r_h).clamp(0.0, 1.0);
    match strategy {
        Strategy::HeavyPriority => p_l * r_l * (1.0 - p_h) + p_h * (r_h - d_r),
        Strategy::LightPriority => p_l * r_l + (1.0 - p_l) * p_h * (r_h - d_r),
        Strategy::LightDominant => p_l * r_l,
    }
}

/// Whether the strategy's optimality constraints hold at `(r_l, r_h)` given
/// the value gap, to within `tol`.
pub(crate) fn strategy_feasible(
    strategy: Strategy,
    r_l: f64,
    r_h: f64,
    k_l: f64,
    k_h: f64,
    d_r: f64,
    tol: f64,
) -> bool {
    let in_box = r_l >= -tol && r_l <= 1.0 / k_l + tol && r_h >= -tol && r_h <= 1.0 / k_h + tol;
    in_box
        && match strategy {
            Strategy::HeavyPriority => r_h >= r_l + d_r - tol,
            Strategy::LightPriority => r_h >= d_r - tol && r_h <= r_l + d_r + tol,
            Strategy::LightDominant => r_h <= d_r + tol,
        }
}

/// Optimal heavy-priority prices for a slot with value gap `d_r`.
///
/// Case selection on `d_r` against `(4k_l - 3k_h)/(4 k_h k_l)` and
/// `(2 - sqrt(1 + k_h/k_l))/k_h`; the left edge belongs to `I0`, where the
/// two formulas coincide exactly. A gap above the heavy price cap leaves the
/// strategy without feasible prices; the clamped `E2` point is returned and
/// marked infeasible so the cross-strategy maximum discards it.
pub fn hp_slot_pricing(d_r: f64, k_l: f64, k_h: f64) -> Result<SlotPricing> {
    check_elasticities(k_l, k_h)?;
    if d_r < 0.0 {
        return Err(Error::Domain(format!(
            "value gap must be nonnegative, got {d_r}"
        )));
    }
    let interior_edge = (4.0 * k_l - 3.0 * k_h) / (4.0 * k_h * k_l);
    let cap_edge = (2.0 - (1.0 + k_h / k_l).sqrt()) / k_h;
    let (r_l, r_h, case) = if d_r <= interior_edge {
        (0.5 / k_l, 0.5 * (0.25 / k_l + 1.0 / k_h + d_r), KktCase::I0)
    } else if d_r < cap_edge {
        let s = (d_r * d_r + 3.0 / (k_l * k_h)).sqrt();
        ((s - d_r) / 3.0, (2.0 * d_r + s) / 3.0, KktCase::E1)
    } else {
        ((1.0 / k_h - d_r).max(0.0), 1.0 / k_h, KktCase::E2)
    };
    let gain = strategy_gain(Strategy::HeavyPriority, r_l, r_h, k_l, k_h, d_r);
    let feasible = strategy_feasible(Strategy::HeavyPriority, r_l, r_h, k_l, k_h, d_r, 1e-12);
    Ok(SlotPricing {
        r_l,
        r_h,
        case,
        gain,
        feasible,
    })
}

/// Optimal light-priority prices for a slot with value gap `d_r`.
///
/// For `k_h >= 3 k_l / 4` the interior point is the only candidate; below
/// that the case follows `d_r` against `(2 sqrt(1 - k_h/k_l) - 1)/k_h` and
/// `(k_l - 3 k_h)/(2 k_h k_l)`. Gaps at or above the heavy cap have no
/// feasible light-priority prices; the interior point is clamped to the cap
/// and marked infeasible.
pub fn lp_slot_pricing(d_r: f64, k_l: f64, k_h: f64) -> Result<SlotPricing> {
    check_elasticities(k_l, k_h)?;
    if d_r < 0.0 {
        return Err(Error::Domain(format!(
            "value gap must be nonnegative, got {d_r}"
        )));
    }
    let cap_h = 1.0 / k_h;
    let interior_edge = if k_h < k_l {
        (2.0 * (1.0 - k_h / k_l).sqrt() - 1.0) / k_h
    } else {
        f64::NEG_INFINITY
    };
    let extreme_edge = (k_l - 3.0 * k_h) / (2.0 * k_h * k_l);
    let (r_l, r_h, case) = if k_h >= 0.75 * k_l || d_r >= interior_edge {
        let r_l = (k_h / 8.0) * (d_r - cap_h) * (d_r - cap_h) + 0.5 / k_l;
        let r_h = 0.5 * (d_r + cap_h);
        (r_l.min(1.0 / k_l), r_h.min(cap_h), KktCase::I0)
    } else if d_r > extreme_edge {
        let s = (d_r * d_r + 3.0 / (k_l * k_h)).sqrt();
        ((s - d_r) / 3.0, (2.0 * d_r + s) / 3.0, KktCase::E1)
    } else {
        (1.0 / k_l, 1.0 / k_l + d_r, KktCase::E2)
    };
    let gain = strategy_gain(Strategy::LightPriority, r_l, r_h, k_l, k_h, d_r);
    let feasible = strategy_feasible(Strategy::LightPriority, r_l, r_h, k_l, k_h, d_r, 1e-12);
    Ok(SlotPricing {
        r_l,
        r_h,
        case,
        gain,
        feasible,
    })
}

/// Optimal light-dominant prices: `r_l = 1/(2 k_l)` earns `1/(4 k_l)` per
/// slot; the heavy price never sells and is only pinned by the constraint,
/// `r_h = min(d_r, 1/k_h)`.
pub fn ld_slot_pricing(d_r: f64, k_l: f64, k_h: f64) -> Result<SlotPricing> {
    check_elasticities(k_l, k_h)?;
    if d_r < 0.0 {
        return Err(Error::Domain(format!(
            "value gap must be nonnegative, got {d_r}"
        )));
    }
    Ok(SlotPricing {
        r_l: 0.5 / k_l,
        r_h: d_r.min(1.0 / k_h),
        case: KktCase::I0,
        gain: 0.25 / k_l,
        feasible: true,
    })
}

/// Evaluation of a strategy at explicit prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyEvaluation {
    /// Expected revenue-to-go of playing the strategy at these prices.
    pub value: f64,
    /// Whether the strategy's optimality condition holds at these prices.
    pub condition_holds: bool,
}

/// Expected revenue-to-go of `strategy` at prices `(r_l, r_h)` under linear
/// demand, given the continuation values `v_next = V(n+1)` and
/// `v_skip = V(n+M)`, plus whether the strategy's condition holds there.
pub fn slot_strategy_value(
    strategy: Strategy,
    r_l: f64,
    r_h: f64,
    k_l: f64,
    k_h: f64,
    v_next: f64,
    v_skip: f64,
) -> Result<StrategyEvaluation> {
    check_elasticities(k_l, k_h)?;
    if !(0.0..=1.0 / k_l + 1e-12).contains(&r_l) || !(0.0..=1.0 / k_h + 1e-12).contains(&r_h) {
        return Err(Error::Domain(format!(
            "prices ({r_l}, {r_h}) outside their caps"
        )));
    }
    let p_l = (1.0 - k_l * r_l).clamp(0.0, 1.0);
    let p_h = (1.0 - k_h * r_h).clamp(0.0, 1.0);
    let value = stage_value(strategy, v_next, v_skip, p_l, p_h, r_l, r_h);
    let condition_holds = strategy_feasible(strategy, r_l, r_h, k_l, k_h, v_next - v_skip, 1e-12);
    Ok(StrategyEvaluation {
        value,
        condition_holds,
    })
}

/// Joint dynamic pricing and admission: backward over slots, optimize prices
/// under each strategy, keep the best.
///
/// Slots where heavy no longer fits are priced light-dominant with the gap
/// taken against an empty continuation (`d_r = V(n+1)`), making the emitted
/// heavy price advisory; a horizon shorter than `M` is therefore priced
/// light-dominant throughout. Ties between strategies prefer the lighter
/// commitment: LD over LP over HP.
pub fn solve_dynamic(k_l: f64, k_h: f64, n: usize, m: usize) -> Result<PriceSchedule> {
    check_elasticities(k_l, k_h)?;
    if m < 2 || n < 1 {
        return Err(Error::Instance(format!(
            "need M >= 2 and N >= 1, got M = {m}, N = {n}"
        )));
    }
    let mut values = vec![0.0; n];
    let get = |values: &[f64], idx: usize| {
        if idx >= 1 && idx <= n {
            values[idx - 1]
        } else {
            0.0
        }
    };
    let mut slots: Vec<SlotQuote> = Vec::with_capacity(n);
    for slot in (1..=n).rev() {
        let v_next = get(&values, slot + 1);
        let (strategy, pricing) = if slot + m - 1 > n {
            (Strategy::LightDominant, ld_slot_pricing(v_next, k_l, k_h)?)
        } else {
            let d_r = v_next - get(&values, slot + m);
            // max_by keeps the last maximum, so listing HP, LP, LD breaks
            // gain ties toward the lighter commitment.
            let candidates = [
                (Strategy::HeavyPriority, hp_slot_pricing(d_r, k_l, k_h)?),
                (Strategy::LightPriority, lp_slot_pricing(d_r, k_l, k_h)?),
                (Strategy::LightDominant, ld_slot_pricing(d_r, k_l, k_h)?),
            ];
            candidates
                .into_iter()
                .filter(|(_, p)| p.feasible)
                .max_by(|a, b| a.1.gain.partial_cmp(&b.1.gain).expect("finite gains"))
                .expect("light-dominant pricing is always feasible")
        };
        values[slot - 1] = v_next + pricing.gain;
        slots.push(SlotQuote {
            slot,
            strategy,
            r_l: pricing.r_l,
            r_h: pricing.r_h,
            case: pricing.case,
            value: values[slot - 1],
        });
    }
    slots.reverse();
    Ok(PriceSchedule {
        k_l,
        k_h,
        heavy_occupancy: m,
        slots,
        values: ValueFunction::from_values(values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hp_pricing_cases() {
        let p = hp_slot_pricing(0.0, 1.0, 1.0).unwrap();
        assert_eq!(p.case, KktCase::I0);
        assert!((p.r_l - 0.5).abs() < 1e-12 && (p.r_h - 0.625).abs() < 1e-12);

        let p = hp_slot_pricing(0.5, 1.0, 1.0).unwrap();
        assert_eq!(p.case, KktCase::E1);
        let s = (0.25_f64 + 3.0).sqrt();
        assert!((p.r_l - (s - 0.5) / 3.0).abs() < 1e-12);
        assert!((p.r_h - (1.0 + s) / 3.0).abs() < 1e-12);

        let p = hp_slot_pricing(0.2, 1.0, 4.0).unwrap();
        assert_eq!(p.case, KktCase::E2);
        assert!((p.r_l - 0.05).abs() < 1e-12 && (p.r_h - 0.25).abs() < 1e-12);
    }

    #[test]
    fn hp_pricing_boundary_continuity() {
        // At the I0/E1 edge both formulas give the same prices.
        let (k_l, k_h) = (1.0, 1.0);
        let edge = (4.0 * k_l - 3.0 * k_h) / (4.0 * k_h * k_l);
        let p = hp_slot_pricing(edge, k_l, k_h).unwrap();
        assert_eq!(p.case, KktCase::I0);
        assert!((p.r_l - 0.5).abs() < 1e-12 && (p.r_h - 0.75).abs() < 1e-12);
        let s = (edge * edge + 3.0 / (k_l * k_h)).sqrt();
        assert!(((s - edge) / 3.0 - p.r_l).abs() < 1e-12);
        assert!(((2.0 * edge + s) / 3.0 - p.r_h).abs() < 1e-12);
    }

    #[test]
    fn hp_pricing_infeasible_gap() {
        // Gap above the heavy cap: no feasible heavy-priority prices.
        let p = hp_slot_pricing(2.5, 0.1, 10.0).unwrap();
        assert!(!p.feasible);
        assert!(p.r_l >= 0.0);
    }

    #[test]
    fn lp_pricing_cases() {
        let p = lp_slot_pricing(1.8, 1.0, 0.5).unwrap();
        assert_eq!(p.case, KktCase::I0);
        assert!((p.r_l - 0.5025).abs() < 1e-12 && (p.r_h - 1.9).abs() < 1e-12);

        let p = lp_slot_pricing(0.4, 1.0, 0.5).unwrap();
        assert_eq!(p.case, KktCase::E1);
        let s = (0.4_f64 * 0.4 + 6.0).sqrt();
        assert!((p.r_l - (s - 0.4) / 3.0).abs() < 1e-12);
        assert!((p.r_h - (0.8 + s) / 3.0).abs() < 1e-12);
        assert!((p.r_l - 0.693978).abs() < 1e-6);
        assert!((p.r_h - 1.093978).abs() < 1e-6);

        let p = lp_slot_pricing(0.5, 1.0, 0.2).unwrap();
        assert_eq!(p.case, KktCase::E2);
        assert!((p.r_l - 1.0).abs() < 1e-12 && (p.r_h - 1.5).abs() < 1e-12);
    }

    #[test]
    fn lp_pricing_clamps_above_cap() {
        let p = lp_slot_pricing(2.5, 1.0, 1.0).unwrap();
        assert!(!p.feasible);
        assert!((p.r_h - 1.0).abs() < 1e-12);
        assert!(p.r_l <= 1.0 + 1e-12);
    }

    #[test]
    fn ld_pricing_examples() {
        let p = ld_slot_pricing(0.1, 2.0, 4.0).unwrap();
        assert!((p.r_l - 0.25).abs() < 1e-12 && (p.r_h - 0.1).abs() < 1e-12);
        assert!((p.gain - 0.125).abs() < 1e-12);
        let p = ld_slot_pricing(0.0, 1.0, 1.0).unwrap();
        assert!((p.r_l - 0.5).abs() < 1e-12 && p.r_h == 0.0);
        let p = ld_slot_pricing(10.0, 1.0, 1.0).unwrap();
        assert!((p.r_h - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slot_strategy_value_examples() {
        let e =
            slot_strategy_value(Strategy::HeavyPriority, 0.5, 0.75, 1.0, 1.0, 0.25, 0.0).unwrap();
        assert!((e.value - 0.5625).abs() < 1e-12);
        assert!(e.condition_holds);
        let e = slot_strategy_value(
            Strategy::LightPriority,
            0.5703125,
            0.625,
            1.0,
            1.0,
            0.25,
            0.0,
        )
        .unwrap();
        assert!((e.value - 0.57525634765625).abs() < 1e-10);
        assert!(e.condition_holds);
        let e =
            slot_strategy_value(Strategy::LightDominant, 0.5, 0.0, 1.0, 1.0, 0.25, 0.0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-12);
        assert!(e.condition_holds);
    }

    #[test]
    fn solve_dynamic_two_slots() {
        let schedule = solve_dynamic(1.0, 1.0, 2, 2).unwrap();
        assert!((schedule.total() - 0.57525634765625).abs() < 1e-9);
        assert_eq!(schedule.quote(1).strategy, Strategy::LightPriority);
        assert_eq!(schedule.quote(1).case, KktCase::I0);
        assert!((schedule.quote(1).r_l - 0.5703125).abs() < 1e-9);
        assert!((schedule.quote(1).r_h - 0.625).abs() < 1e-9);
        assert_eq!(schedule.quote(2).strategy, Strategy::LightDominant);
        assert!((schedule.quote(2).r_l - 0.5).abs() < 1e-12);
    }

    #[test]
    fn solve_dynamic_scaling() {
        let a = solve_dynamic(1.0, 1.0, 2, 2).unwrap();
        let b = solve_dynamic(2.0, 2.0, 2, 2).unwrap();
        assert!((b.total() - a.total() / 2.0).abs() < 1e-15);
        for (qa, qb) in a.slots.iter().zip(&b.slots) {
            assert_eq!(qa.strategy, qb.strategy);
            assert_eq!(qa.case, qb.case);
            assert!((qb.r_l - qa.r_l / 2.0).abs() < 1e-15);
            assert!((qb.r_h - qa.r_h / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_dynamic_single_slot() {
        // Heavy never fits; every slot is priced light-dominant.
        let schedule = solve_dynamic(1.0, 1.0, 1, 2).unwrap();
        assert!((schedule.total() - 0.25).abs() < 1e-12);
        assert_eq!(schedule.quote(1).strategy, Strategy::LightDominant);
        assert!((schedule.quote(1).r_l - 0.5).abs() < 1e-12);
        assert_eq!(schedule.stationary_label(), Some(Strategy::LightDominant));
    }

    #[test]
    fn solve_dynamic_rejects_bad_occupancy() {
        assert!(solve_dynamic(1.0, 1.0, 5, 1).is_err());
        assert!(solve_dynamic(1.0, 1.0, 0, 2).is_err());
    }

    #[test]
    fn gap_stays_nonnegative() {
        let schedule = solve_dynamic(3.0, 0.7, 20, 4).unwrap();
        for n in 1..=20 {
            assert!(schedule.values.get(n) >= schedule.values.get(n + 1) - 1e-12);
        }
    }
}
