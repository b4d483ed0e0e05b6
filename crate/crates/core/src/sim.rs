//! Seeded Monte-Carlo execution of a price schedule and policy, the
//! channel-realization demand model, and the switch-over pricing baseline.
//!
//! All randomness flows through ChaCha8 generators seeded per trial by a
//! SplitMix64 mix of the user seed and the trial counter, so runs are
//! reproducible and trials are order-independent.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::admission::{PolicyTable, Strategy, ValueFunction};
use crate::error::{Error, Result};
use crate::market::{state_transition, Action, ChannelModel, DemandPattern, MarketInstance};
use crate::pricing::{
    ld_slot_pricing, solve_dynamic, strategy_gain, KktCase, PriceSchedule, SlotQuote,
};

/// SplitMix64 finalizer; mixes the user seed with a stream index.
fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Demand generation for an episode: price-driven Bernoulli bits, or utility
/// thresholding against realized channel gains.
#[derive(Debug, Clone)]
pub enum DemandDraw {
    /// Type `i` requests with probability `1 - k_i * r_i(n)`.
    Bernoulli,
    /// Draw one gain per occupied slot from `Uniform(gain_low, gain_high)`,
    /// request iff the resulting utility covers the price.
    Channel {
        model: ChannelModel,
        gain_low: f64,
        gain_high: f64,
    },
}

/// Per-slot record of one simulated episode.
#[derive(Debug, Clone, Serialize)]
pub struct SlotRecord {
    pub slot: usize,
    pub r_l: f64,
    pub r_h: f64,
    /// Realized per-type channel gains (channel mode only).
    pub gains: Option<Vec<Vec<f64>>>,
    /// Realized demand bits, in type order.
    pub demands: String,
    pub action: usize,
    pub revenue: f64,
    /// Remaining occupied slots after the transition.
    pub s_after: usize,
}

/// Full trace of one episode.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeTrace {
    pub seed: u64,
    pub slots: Vec<SlotRecord>,
    pub total_revenue: f64,
}

/// Executes the slot loop once: announce prices, realize demand, admit per
/// the policy, collect revenue, advance the occupancy state. Deterministic
/// given the seed.
pub fn run_episode(
    schedule: &PriceSchedule,
    policy: &PolicyTable,
    instance: &MarketInstance,
    demand: &DemandDraw,
    seed: u64,
) -> Result<EpisodeTrace> {
    let n = instance.horizon();
    if schedule.horizon() < n || policy.len() < n {
        return Err(Error::Instance(
            "schedule and policy must cover all slots".into(),
        ));
    }
    if instance.num_types() > 2 {
        return Err(Error::Instance(
            "episode simulation covers light plus one heavy type".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut remaining = 0usize;
    let mut slots = Vec::with_capacity(n);
    let mut total = 0.0;
    for slot in 1..=n {
        let quote = schedule.quote(slot);
        let prices = [quote.r_l, quote.r_h];
        let mut pattern = DemandPattern(0);
        let mut gains_record = None;
        match demand {
            DemandDraw::Bernoulli => {
                for (i, t) in instance.types().iter().enumerate() {
                    // Elastic types respond to the announced price; fixed
                    // instances carry their demand probability directly.
                    let p = match t.elasticity {
                        Some(k) => (1.0 - k * prices[i.min(1)]).clamp(0.0, 1.0),
                        None => t.demand_prob.expect("validated: probability present"),
                    };
                    if rng.random::<f64>() < p {
                        pattern = pattern.with(i);
                    }
                }
            }
            DemandDraw::Channel {
                model,
                gain_low,
                gain_high,
            } => {
                let mut all_gains = Vec::with_capacity(instance.num_types());
                for (i, t) in instance.types().iter().enumerate() {
                    let gains: Vec<f64> = (0..t.occupancy)
                        .map(|_| gain_low + (gain_high - gain_low) * rng.random::<f64>())
                        .collect();
                    let utility = model.utility(&gains)?;
                    if utility >= prices[i.min(1)] {
                        pattern = pattern.with(i);
                    }
                    all_gains.push(gains);
                }
                gains_record = Some(all_gains);
            }
        }
        let action = if remaining == 0 {
            policy.action(slot, pattern)
        } else {
            Action::None
        };
        let revenue = action.revenue(&prices);
        let occ = match action {
            Action::None => 0,
            Action::Admit(i) => instance.types()[i].occupancy,
        };
        remaining = state_transition(remaining, occ)?;
        total += revenue;
        slots.push(SlotRecord {
            slot,
            r_l: quote.r_l,
            r_h: quote.r_h,
            gains: gains_record,
            demands: pattern.bits(instance.num_types()),
            action: action.code(),
            revenue,
            s_after: remaining,
        });
    }
    Ok(EpisodeTrace {
        seed,
        slots,
        total_revenue: total,
    })
}

/// Sample mean and standard error of episode revenue over `trials` episodes.
/// Trials use independent sub-streams of `seed` and a deterministic reduce,
/// so results are bit-stable and order-independent.
pub fn monte_carlo(
    schedule: &PriceSchedule,
    policy: &PolicyTable,
    instance: &MarketInstance,
    demand: &DemandDraw,
    trials: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let revenues: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            run_episode(schedule, policy, instance, demand, mix_seed(seed, t))
                .map(|trace| trace.total_revenue)
        })
        .collect::<Result<_>>()?;
    let mean = revenues.iter().sum::<f64>() / trials as f64;
    if trials == 1 {
        return Ok((mean, 0.0));
    }
    let var = revenues
        .iter()
        .map(|r| (r - mean) * (r - mean))
        .sum::<f64>()
        / (trials - 1) as f64;
    Ok((mean, (var / trials as f64).sqrt()))
}

/// Switch-over pricing baseline: heavy admissions are forced by the price
/// rule `r_h / 2 >= r_l` instead of by value comparison.
///
/// Per slot the prices maximize the stage value under the forced rule
/// (heavy-priority actions when `r_h / 2 >= r_l`, light-dominant otherwise)
/// over a grid with one 10x refinement. The `literal` variant keeps the
/// optimal dynamic prices and only swaps the admission rule.
pub fn switchover_baseline(
    k_l: f64,
    k_h: f64,
    n: usize,
    m: usize,
    resolution: usize,
    literal: bool,
) -> Result<(f64, PriceSchedule)> {
    if !(k_l.is_finite() && k_l > 0.0 && k_h.is_finite() && k_h > 0.0) {
        return Err(Error::Domain("elasticities must be > 0".into()));
    }
    if m < 2 || n < 1 {
        return Err(Error::Instance(format!(
            "need M >= 2 and N >= 1, got M = {m}, N = {n}"
        )));
    }
    if resolution < 2 {
        return Err(Error::Domain("grid resolution must be at least 2".into()));
    }
    let optimal = if literal {
        Some(solve_dynamic(k_l, k_h, n, m)?)
    } else {
        None
    };
    let rule = |r_l: f64, r_h: f64| {
        if r_h / 2.0 >= r_l {
            Strategy::HeavyPriority
        } else {
            Strategy::LightDominant
        }
    };
    let cap_l = 1.0 / k_l;
    let cap_h = 1.0 / k_h;
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
        let heavy_fits = slot + m - 1 <= n;
        let d_r = if heavy_fits {
            v_next - get(&values, slot + m)
        } else {
            v_next
        };
        let (strategy, r_l, r_h, gain) = if !heavy_fits {
            let p = ld_slot_pricing(d_r, k_l, k_h)?;
            (Strategy::LightDominant, p.r_l, p.r_h, p.gain)
        } else if let Some(opt) = &optimal {
            let q = opt.quote(slot);
            let s = rule(q.r_l, q.r_h);
            (
                s,
                q.r_l,
                q.r_h,
                strategy_gain(s, q.r_l, q.r_h, k_l, k_h, d_r),
            )
        } else {
            let scan = |lo_l: f64, hi_l: f64, lo_h: f64, hi_h: f64, steps: usize| {
                (0..=steps)
                    .into_par_iter()
                    .map(|i| {
                        let r_l = lo_l + (hi_l - lo_l) * i as f64 / steps as f64;
                        let mut best = (f64::NEG_INFINITY, r_l, 0.0);
                        for j in 0..=steps {
                            let r_h = lo_h + (hi_h - lo_h) * j as f64 / steps as f64;
                            let g = strategy_gain(rule(r_l, r_h), r_l, r_h, k_l, k_h, d_r);
                            if g > best.0 {
                                best = (g, r_l, r_h);
                            }
                        }
                        best
                    })
                    .reduce(
                        || (f64::NEG_INFINITY, 0.0, 0.0),
                        |a, b| if b.0 > a.0 { b } else { a },
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
            let best = if fine.0 > coarse.0 { fine } else { coarse };
            (rule(best.1, best.2), best.1, best.2, best.0)
        };
        values[slot - 1] = v_next + gain;
        slots.push(SlotQuote {
            slot,
            strategy,
            r_l,
            r_h,
            case: KktCase::I0,
            value: values[slot - 1],
        });
    }
    slots.reverse();
    let schedule = PriceSchedule {
        k_l,
        k_h,
        heavy_occupancy: m,
        slots,
        values: ValueFunction::from_values(values),
    };
    Ok((schedule.total(), schedule))
}
