//! Revenue-optimal pricing and admission control for a slotted
//! single-channel spectrum market with stochastic, heterogeneous demand.
//!
//! A database operator sells idle slots of one channel over a finite horizon.
//! Light requests occupy one slot, heavy requests several consecutive ones,
//! and demand per type is Bernoulli with a price-dependent probability. The
//! crate provides:
//!
//! - [`market`]: the domain model, linear demand, channel-derived
//!   elasticities, state dynamics, and feasible actions;
//! - [`admission`]: the backward-induction admission solver under fixed
//!   prices, stationary-policy regimes, closed-form value functions, and the
//!   static price optimizer;
//! - [`pricing`]: closed-form per-slot price optimization under each
//!   admission strategy and the joint dynamic solver;
//! - [`multitype`]: arbitrary occupancies and many SU types, priority-order
//!   policies, and a numeric per-slot price search;
//! - [`oracle`]: brute-force verifiers (policy enumeration, scenario trees,
//!   price grids) used by tests and the `verify` command;
//! - [`sim`]: seeded Monte-Carlo execution and the switch-over baseline.

pub mod admission;
pub mod error;
pub mod market;
pub mod multitype;
pub mod oracle;
pub mod pricing;
pub mod sim;

pub use admission::{
    classify_price_ratio, closed_form_value, hp_ratio_bound, hp_threshold_sequence,
    optimize_static_prices, solve_admission, stage_value, stationary_value, PolicyTable, Regime,
    StaticOptimum, Strategy, ValueFunction,
};
pub use error::{Error, Result};
pub use market::{
    demand_probability, feasible_actions, state_transition, su_accepts, Action, ChannelModel,
    DemandMode, DemandPattern, MarketInstance, SystemState, TypeSpec,
};
pub use multitype::{
    expected_max_value, hp_threshold_general, optimize_slot_prices_numeric, solve_multitype,
    LinearValueCoeffs, PriorityOrder,
};
pub use oracle::{
    enumerate_policies_value, expected_max_by_enumeration, grid_search_slot_prices,
    scenario_tree_value, ScenarioTree,
};
pub use pricing::{
    hp_slot_pricing, ld_slot_pricing, lp_slot_pricing, slot_strategy_value, solve_dynamic, KktCase,
    PriceSchedule, SlotPricing, SlotQuote,
};
pub use sim::{monte_carlo, run_episode, switchover_baseline, DemandDraw, EpisodeTrace};
