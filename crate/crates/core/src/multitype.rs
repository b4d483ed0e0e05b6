//! General market extensions: arbitrary heavy occupancy thresholds, the
//! multi-type admission DP, and a numeric per-slot price optimizer for
//! markets where no closed form exists.

use serde::{Deserialize, Serialize};

use crate::admission::{PolicyTable, SlotPolicy, Strategy, ValueFunction};
use crate::error::{Error, Result};
use crate::market::{Action, DemandPattern, MarketInstance, LIGHT};

/// A slot's candidate, ranked by total revenue-to-go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Candidate {
    NoAdmit,
    Type(usize),
}

/// Admission priority for one slot: candidates sorted by total revenue-to-go
/// `r_a + V(n + occ(a))`, with no-admit valued at `V(n+1)`.
///
/// Ties between types go to the larger occupancy; a type that only matches
/// the no-admit total is ranked below it (committing the channel buys
/// nothing). Types that no longer fit the horizon sit at the very end and are
/// never reached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorityOrder {
    pub ranked: Vec<Candidate>,
}

impl PriorityOrder {
    /// Builds the order from per-type totals `v[i] = r_i + V(n + occ_i)`
    /// (`None` marks a type that does not fit the horizon), the no-admit
    /// total `v0`, and occupancies for tie-breaking.
    pub fn from_totals(totals: &[Option<f64>], v0: f64, occupancies: &[usize]) -> Self {
        // Tie rule: no-admit beats an equal-valued type (committing the
        // channel buys nothing), larger occupancies beat smaller ones.
        let tie_key = |c: &Candidate| match c {
            Candidate::NoAdmit => (0u8, 0usize, 0usize),
            Candidate::Type(i) => (1, usize::MAX - occupancies[*i], *i),
        };
        let mut entries: Vec<(Candidate, f64)> = vec![(Candidate::NoAdmit, v0)];
        entries.extend(
            totals
                .iter()
                .enumerate()
                .filter_map(|(i, t)| t.map(|v| (Candidate::Type(i), v))),
        );
        entries.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("finite totals")
                .then_with(|| tie_key(&a.0).cmp(&tie_key(&b.0)))
        });
        let mut ranked: Vec<Candidate> = entries.into_iter().map(|(c, _)| c).collect();
        ranked.extend(
            totals
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_none())
                .map(|(i, _)| Candidate::Type(i)),
        );
        PriorityOrder { ranked }
    }

    /// Two-type order corresponding to a named strategy.
    pub fn two_type(strategy: Strategy) -> Self {
        let ranked = match strategy {
            Strategy::HeavyPriority => vec![
                Candidate::Type(1),
                Candidate::Type(LIGHT),
                Candidate::NoAdmit,
            ],
            Strategy::LightPriority => vec![
                Candidate::Type(LIGHT),
                Candidate::Type(1),
                Candidate::NoAdmit,
            ],
            Strategy::LightDominant => vec![
                Candidate::Type(LIGHT),
                Candidate::NoAdmit,
                Candidate::Type(1),
            ],
        };
        PriorityOrder { ranked }
    }

    /// First candidate present in `demands`; `NoAdmit` stops the scan.
    pub fn action(&self, demands: DemandPattern) -> Action {
        for c in &self.ranked {
            match c {
                Candidate::NoAdmit => return Action::None,
                Candidate::Type(i) if demands.has(*i) => return Action::Admit(*i),
                _ => {}
            }
        }
        Action::None
    }

    /// Types ranked above no-admit, best first.
    pub fn admitted_types(&self) -> Vec<usize> {
        self.ranked
            .iter()
            .take_while(|c| !matches!(c, Candidate::NoAdmit))
            .map(|c| match c {
                Candidate::Type(i) => *i,
                Candidate::NoAdmit => unreachable!(),
            })
            .collect()
    }
}

/// Expected value of admitting the best present candidate.
///
/// `candidates` are `(total value, presence probability)` pairs for the types
/// ranked above no-admit, already sorted best first (ties resolved by input
/// order); `v0` is the always-available no-admit value. Computed in
/// O(I) after sorting as `sum_i v_i p_i prod_{j above i} (1 - p_j)` plus
/// `v0 prod_j (1 - p_j)`; candidates valued below `v0` must be left out (they
/// are never admitted).
pub fn expected_max_value(v0: f64, candidates: &[(f64, f64)]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = candidates.to_vec();
    sorted.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite values"));
    let mut expectation = 0.0;
    let mut none_above = 1.0;
    for &(value, prob) in sorted.iter().filter(|(v, _)| *v >= v0) {
        expectation += value * prob * none_above;
        none_above *= 1.0 - prob;
    }
    expectation + v0 * none_above
}

/// Backward-induction admission solver for any number of types under fixed
/// prices. Returns the per-slot priority orders (materialized as an explicit
/// contingency table) and the value function.
pub fn solve_multitype(instance: &MarketInstance) -> Result<(PolicyTable, ValueFunction)> {
    let n = instance.horizon();
    let i = instance.num_types();
    if i > 16 {
        return Err(Error::SizeGuard(format!(
            "policy table with {i} types is too large"
        )));
    }
    let probs: Vec<f64> = (0..i).map(|t| instance.demand_prob(t)).collect();
    let prices: Vec<f64> = (0..i).map(|t| instance.price(t)).collect();
    let occupancies: Vec<usize> = instance.types().iter().map(|t| t.occupancy).collect();
    let mut values = vec![0.0; n];
    let get = |values: &[f64], idx: usize| {
        if idx >= 1 && idx <= n {
            values[idx - 1]
        } else {
            0.0
        }
    };
    let mut slots: Vec<SlotPolicy> = Vec::with_capacity(n);
    for slot in (1..=n).rev() {
        let v0 = get(&values, slot + 1);
        let totals: Vec<Option<f64>> = (0..i)
            .map(|t| {
                instance
                    .admissible(t, slot)
                    .then(|| prices[t] + get(&values, slot + occupancies[t]))
            })
            .collect();
        let order = PriorityOrder::from_totals(&totals, v0, &occupancies);
        let ranked_candidates: Vec<(f64, f64)> = order
            .admitted_types()
            .iter()
            .map(|&t| (totals[t].unwrap(), probs[t]))
            .collect();
        values[slot - 1] = expected_max_value(v0, &ranked_candidates);
        let actions = DemandPattern::all(i).map(|d| order.action(d)).collect();
        slots.push(SlotPolicy {
            actions,
            order: Some(order),
            label: None,
        });
    }
    slots.reverse();
    Ok((PolicyTable { slots }, ValueFunction::from_values(values)))
}

/// Per-slot coefficients `(alpha_n, beta_n)` of the heavy-priority
/// stationary value `V_n = alpha_n * r_l + beta_n * r_h` at fixed demand
/// probabilities. The stationary recursion is linear in the prices, so the
/// coefficients follow the same recursion with unit prices.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearValueCoeffs {
    /// `alpha_n` for `n = 1..=N` (index 0 is slot 1).
    pub light: Vec<f64>,
    /// `beta_n` for `n = 1..=N`.
    pub heavy: Vec<f64>,
}

impl LinearValueCoeffs {
    /// Coefficients under the heavy-priority stationary policy with heavy
    /// occupancy `m`: slots where heavy fits follow
    /// `V_n = (1-p_h) V(n+1) + p_h V(n+M) + p_l r_l (1-p_h) + p_h r_h`,
    /// later slots collect light revenue only.
    pub fn heavy_priority(p_l: f64, p_h: f64, m: usize, n: usize) -> Self {
        let mut light = vec![0.0; n];
        let mut heavy = vec![0.0; n];
        let get = |v: &[f64], idx: usize| {
            if idx >= 1 && idx <= n {
                v[idx - 1]
            } else {
                0.0
            }
        };
        for slot in (1..=n).rev() {
            if slot + m - 1 <= n {
                light[slot - 1] = (1.0 - p_h) * get(&light, slot + 1)
                    + p_h * get(&light, slot + m)
                    + p_l * (1.0 - p_h);
                heavy[slot - 1] =
                    (1.0 - p_h) * get(&heavy, slot + 1) + p_h * get(&heavy, slot + m) + p_h;
            } else {
                light[slot - 1] = get(&light, slot + 1) + p_l;
                heavy[slot - 1] = get(&heavy, slot + 1);
            }
        }
        LinearValueCoeffs { light, heavy }
    }

    fn at(&self, n: usize) -> (f64, f64) {
        if n >= 1 && n <= self.light.len() {
            (self.light[n - 1], self.heavy[n - 1])
        } else {
            (0.0, 0.0)
        }
    }
}

/// Price-ratio threshold above which the heavy-priority stationary policy is
/// optimal for an arbitrary heavy occupancy `m`.
///
/// Writing the stationary value as `alpha_n r_l + beta_n r_h`, the slot-n
/// condition `r_h + V(n+M) >= r_l + V(n+1)` becomes a ratio bound
/// `(1 + alpha(n+1) - alpha(n+M)) / (1 - beta(n+1) + beta(n+M))`; the
/// threshold is the largest bound over the slots where heavy fits. A
/// non-positive denominator means no finite ratio makes the policy
/// stationary-optimal.
pub fn hp_threshold_general(p_l: f64, p_h: f64, m: usize, n: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_l) || !(0.0..1.0).contains(&p_h) {
        return Err(Error::Domain(format!(
            "need p_l in [0, 1] and p_h in [0, 1), got ({p_l}, {p_h})"
        )));
    }
    if m < 2 || m > n {
        return Err(Error::Instance(format!(
            "need 2 <= M <= N, got M = {m}, N = {n}"
        )));
    }
    let coeffs = LinearValueCoeffs::heavy_priority(p_l, p_h, m, n);
    let mut threshold = f64::NEG_INFINITY;
    for slot in 1..=n - m + 1 {
        let (a_next, b_next) = coeffs.at(slot + 1);
        let (a_skip, b_skip) = coeffs.at(slot + m);
        let numerator = 1.0 + a_next - a_skip;
        let denominator = 1.0 - b_next + b_skip;
        if denominator <= 0.0 {
            return Err(Error::ThresholdUnattainable(format!(
                "slot {slot}: heavy coefficient gap consumes the whole price"
            )));
        }
        threshold = threshold.max(numerator / denominator);
    }
    Ok(threshold)
}

/// Numeric per-slot price optimizer for a fixed admission priority.
///
/// Maximizes the expected slot value by coordinate descent, each coordinate
/// scanned on its `[0, 1/k_i]` grid with points violating the priority's
/// value ordering skipped, followed by a 10x refinement per coordinate.
/// `tails[i]` is `V(n + occ_i)` for type `i` and `v0` is `V(n+1)`.
pub fn optimize_slot_prices_numeric(
    priority: &PriorityOrder,
    tails: &[f64],
    v0: f64,
    elasticities: &[f64],
    resolution: usize,
) -> Result<(Vec<f64>, f64)> {
    let i = elasticities.len();
    if i > 4 {
        return Err(Error::UnsupportedDimension(format!(
            "numeric pricing supports at most 4 types, got {i}"
        )));
    }
    if tails.len() != i {
        return Err(Error::Domain("one tail value per type is required".into()));
    }
    if elasticities.iter().any(|k| !k.is_finite() || *k <= 0.0) {
        return Err(Error::Domain("elasticities must be > 0".into()));
    }
    let admitted = priority.admitted_types();
    let objective = |prices: &[f64]| -> Option<f64> {
        // The chosen priority must be value-consistent at these prices.
        let totals: Vec<f64> = (0..i).map(|t| prices[t] + tails[t]).collect();
        let mut previous = f64::INFINITY;
        for &t in &admitted {
            if totals[t] > previous + 1e-12 || totals[t] < v0 - 1e-12 {
                return None;
            }
            previous = totals[t];
        }
        let candidates: Vec<(f64, f64)> = admitted
            .iter()
            .map(|&t| (totals[t], 1.0 - elasticities[t] * prices[t]))
            .collect();
        Some(expected_max_value(v0, &candidates))
    };
    let mut prices: Vec<f64> = elasticities.iter().map(|k| 0.5 / k).collect();
    let mut best = objective(&prices);
    // Coordinate descent over the full boxes.
    for _ in 0..60 {
        let mut improved = false;
        for dim in 0..i {
            let cap = 1.0 / elasticities[dim];
            for step in 0..=resolution {
                let candidate_price = cap * step as f64 / resolution as f64;
                let mut trial = prices.clone();
                trial[dim] = candidate_price;
                if let Some(v) = objective(&trial) {
                    if best.is_none_or(|b| v > b + 1e-15) {
                        best = Some(v);
                        prices = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    // One refinement sweep per coordinate around the incumbent.
    for dim in 0..i {
        let cap = 1.0 / elasticities[dim];
        let width = cap / resolution as f64;
        let lo = (prices[dim] - width).max(0.0);
        let hi = (prices[dim] + width).min(cap);
        for step in 0..=(2 * resolution / 10).max(20) {
            let candidate_price =
                lo + (hi - lo) * step as f64 / ((2 * resolution / 10).max(20)) as f64;
            let mut trial = prices.clone();
            trial[dim] = candidate_price;
            if let Some(v) = objective(&trial) {
                if best.is_none_or(|b| v > b + 1e-15) {
                    best = Some(v);
                    prices = trial;
                }
            }
        }
    }
    let value = best.ok_or_else(|| {
        Error::EmptyFeasibleRegion("no prices realize the requested priority".into())
    })?;
    Ok((prices, value))
}
