//! Independent brute-force verifiers: exhaustive policy enumeration,
//! scenario-tree policy evaluation, demand-pattern enumeration, and 2-D price
//! grid search. These certify the fast solvers at desk scale and never
//! approximate; oversized requests are hard errors.

use rayon::prelude::*;

use crate::admission::{PolicyTable, SlotPolicy, Strategy};
use crate::error::{Error, Result};
use crate::market::{state_transition, Action, DemandPattern, MarketInstance, LIGHT};
use crate::pricing::{strategy_feasible, strategy_gain};

/// Demand-realization tree of an instance: per-slot branch sets with their
/// probabilities. Paths are walked on demand rather than materialized.
#[derive(Debug, Clone)]
pub struct ScenarioTree {
    branches: Vec<Vec<(DemandPattern, f64)>>,
}

impl ScenarioTree {
    pub fn new(instance: &MarketInstance) -> Self {
        let probs: Vec<f64> = (0..instance.num_types())
            .map(|i| instance.demand_prob(i))
            .collect();
        let level: Vec<(DemandPattern, f64)> = DemandPattern::all(instance.num_types())
            .map(|d| (d, d.probability(&probs)))
            .collect();
        ScenarioTree {
            branches: vec![level; instance.horizon()],
        }
    }

    /// Branch set `(pattern, probability)` at a 1-based slot.
    pub fn level(&self, slot: usize) -> &[(DemandPattern, f64)] {
        &self.branches[slot - 1]
    }

    pub fn depth(&self) -> usize {
        self.branches.len()
    }
}

fn path_count(instance: &MarketInstance) -> f64 {
    let per_slot = (1u64 << instance.num_types()) as f64;
    per_slot.powi(instance.horizon() as i32)
}

/// Exact expected revenue of executing `policy` forward along every demand
/// path, weighting by path probability. Guarded to about 4^12 paths.
pub fn scenario_tree_value(policy: &PolicyTable, instance: &MarketInstance) -> Result<f64> {
    if policy.is_empty() && instance.horizon() == 0 {
        return Ok(0.0);
    }
    if policy.len() != instance.horizon() {
        return Err(Error::Instance(format!(
            "policy covers {} slots but the horizon is {}",
            policy.len(),
            instance.horizon()
        )));
    }
    if path_count(instance) > 1.7e7 {
        return Err(Error::SizeGuard(format!(
            "{} demand paths exceed the scenario-tree budget",
            path_count(instance)
        )));
    }
    let tree = ScenarioTree::new(instance);
    let prices: Vec<f64> = (0..instance.num_types())
        .map(|i| instance.price(i))
        .collect();
    fn walk(
        tree: &ScenarioTree,
        policy: &PolicyTable,
        instance: &MarketInstance,
        prices: &[f64],
        slot: usize,
        remaining: usize,
    ) -> f64 {
        if slot > tree.depth() {
            return 0.0;
        }
        let mut total = 0.0;
        for &(pattern, prob) in tree.level(slot) {
            if prob == 0.0 {
                continue;
            }
            let action = if remaining == 0 {
                policy.action(slot, pattern)
            } else {
                Action::None
            };
            if let Action::Admit(i) = action {
                assert!(
                    remaining == 0 && pattern.has(i) && instance.admissible(i, slot),
                    "policy action infeasible at slot {slot}"
                );
            }
            let occ = match action {
                Action::None => 0,
                Action::Admit(i) => instance.types()[i].occupancy,
            };
            let next = state_transition(remaining, occ).expect("feasible action");
            total += prob
                * (action.revenue(prices) + walk(tree, policy, instance, prices, slot + 1, next));
        }
        total
    }
    Ok(walk(&tree, policy, instance, &prices, 1, 0))
}

/// Free-channel decision rules available at one slot of a two-type instance.
fn slot_rules(heavy_fits: bool) -> Vec<[Action; 4]> {
    let light_only: &[Action] = &[Action::None, Action::Admit(LIGHT)];
    let with_heavy: &[Action] = &[Action::None, Action::Admit(LIGHT), Action::Admit(1)];
    let heavy_or_none: &[Action] = &[Action::None, Action::Admit(1)];
    let (hy, both): (&[Action], &[Action]) = if heavy_fits {
        (heavy_or_none, with_heavy)
    } else {
        (&[Action::None], light_only)
    };
    let mut rules = Vec::new();
    for &a10 in light_only {
        for &a01 in hy {
            for &a11 in both {
                rules.push([Action::None, a10, a01, a11]);
            }
        }
    }
    rules
}

/// Certifies the admission DP by exhausting every two-type contingency
/// policy (N <= 3) and evaluating each on the scenario tree.
pub fn enumerate_policies_value(instance: &MarketInstance) -> Result<(f64, PolicyTable)> {
    if !instance.is_two_type() {
        return Err(Error::Instance("policy enumeration is two-type".into()));
    }
    let n = instance.horizon();
    if n > 3 {
        return Err(Error::SizeGuard(format!(
            "policy enumeration is limited to N <= 3, got {n}"
        )));
    }
    let per_slot: Vec<Vec<[Action; 4]>> = (1..=n)
        .map(|slot| slot_rules(instance.admissible(1, slot)))
        .collect();
    let combos: usize = per_slot.iter().map(Vec::len).product();
    let mut best: Option<(f64, PolicyTable)> = None;
    for combo in 0..combos {
        let mut idx = combo;
        let mut slots = Vec::with_capacity(n);
        for rules in &per_slot {
            slots.push(SlotPolicy {
                actions: rules[idx % rules.len()].to_vec(),
                order: None,
                label: None,
            });
            idx /= rules.len();
        }
        let policy = PolicyTable { slots };
        let value = scenario_tree_value(&policy, instance)?;
        if best.as_ref().is_none_or(|(v, _)| value > *v) {
            best = Some((value, policy));
        }
    }
    Ok(best.expect("at least the never-admit policy exists"))
}

/// Exact expectation of `max(v0, max over present candidates)` by enumerating
/// all `2^I` demand patterns; the independent counterpart of the sorted
/// computation.
pub fn expected_max_by_enumeration(v0: f64, candidates: &[(f64, f64)]) -> Result<f64> {
    let i = candidates.len();
    if i > 20 {
        return Err(Error::SizeGuard(format!(
            "{i} candidates exceed the enumeration budget"
        )));
    }
    let mut expectation = 0.0;
    for pattern in DemandPattern::all(i) {
        let mut prob = 1.0;
        let mut value = v0;
        for (idx, &(v, p)) in candidates.iter().enumerate() {
            if pattern.has(idx) {
                prob *= p;
                if v > value {
                    value = v;
                }
            } else {
                prob *= 1.0 - p;
            }
        }
        expectation += prob * value;
    }
    Ok(expectation)
}

/// Best prices for one slot strategy found by brute force: a full grid over
/// both price boxes with infeasible points skipped, boundary-projected
/// candidates for optima on the constraint lines, and one 10x local
/// refinement. Returns `(r_l, r_h, gain)`.
pub fn grid_search_slot_prices(
    strategy: Strategy,
    d_r: f64,
    k_l: f64,
    k_h: f64,
    resolution: usize,
) -> Result<(f64, f64, f64)> {
    if resolution < 100 {
        return Err(Error::Domain(format!(
            "resolution must be at least 100, got {resolution}"
        )));
    }
    if d_r < 0.0 || !(k_l.is_finite() && k_l > 0.0 && k_h.is_finite() && k_h > 0.0) {
        return Err(Error::Domain(
            "need d_r >= 0 and positive elasticities".into(),
        ));
    }
    let cap_l = 1.0 / k_l;
    let cap_h = 1.0 / k_h;
    let tol = 1e-12;
    // For each light price the heavy candidates are the grid plus the
    // projections onto the constraint lines, so optima sitting on a line are
    // only gridded along it. Vertices of the feasible polytope are evaluated
    // exactly as corner candidates.
    let scan =
        |lo_l: f64, hi_l: f64, lo_h: f64, hi_h: f64, steps: usize| -> Option<(f64, f64, f64)> {
            (0..=steps)
                .into_par_iter()
                .filter_map(|i| {
                    let r_l = lo_l + (hi_l - lo_l) * i as f64 / steps as f64;
                    let mut best: Option<(f64, f64, f64)> = None;
                    let specials = [r_l + d_r, d_r, cap_h];
                    let grid = (0..=steps).map(|j| lo_h + (hi_h - lo_h) * j as f64 / steps as f64);
                    for r_h in grid.chain(specials.into_iter().map(|s| s.clamp(0.0, cap_h))) {
                        if !strategy_feasible(strategy, r_l, r_h, k_l, k_h, d_r, tol) {
                            continue;
                        }
                        let gain = strategy_gain(strategy, r_l, r_h, k_l, k_h, d_r);
                        if best.is_none_or(|(g, _, _)| gain > g) {
                            best = Some((gain, r_l, r_h));
                        }
                    }
                    best
                })
                .reduce_with(|a, b| if b.0 > a.0 { b } else { a })
        };
    let corners = [
        (0.0, 0.0),
        (0.0, d_r),
        (0.0, cap_h),
        (cap_l, 0.0),
        (cap_l, d_r),
        (cap_l, cap_h),
        (cap_l, cap_l + d_r),
        (cap_h - d_r, cap_h),
        (0.5 / k_l, d_r),
        (0.5 / k_l, cap_h),
    ];
    let mut best: Option<(f64, f64, f64)> = None;
    for (r_l, r_h) in corners {
        if !(0.0..=cap_l).contains(&r_l) || !(0.0..=cap_h).contains(&r_h) {
            continue;
        }
        if strategy_feasible(strategy, r_l, r_h, k_l, k_h, d_r, tol) {
            let gain = strategy_gain(strategy, r_l, r_h, k_l, k_h, d_r);
            if best.is_none_or(|(g, _, _)| gain > g) {
                best = Some((gain, r_l, r_h));
            }
        }
    }
    let coarse = scan(0.0, cap_l, 0.0, cap_h, resolution);
    let best_coarse = match (best, coarse) {
        (Some(a), Some(b)) => Some(if b.0 > a.0 { b } else { a }),
        (a, b) => a.or(b),
    };
    let Some(incumbent) = best_coarse else {
        return Err(Error::EmptyFeasibleRegion(format!(
            "{strategy} has no feasible prices at gap {d_r}"
        )));
    };
    let step_l = cap_l / resolution as f64;
    let step_h = cap_h / resolution as f64;
    let fine = scan(
        (incumbent.1 - step_l).max(0.0),
        (incumbent.1 + step_l).min(cap_l),
        (incumbent.2 - step_h).max(0.0),
        (incumbent.2 + step_h).min(cap_h),
        40,
    );
    let best = match fine {
        Some(f) if f.0 > incumbent.0 => f,
        _ => incumbent,
    };
    Ok((best.1, best.2, best.0))
}
