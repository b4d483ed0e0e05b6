//! Acceptance suite: one test per release criterion, each printing a
//! `criterion N: PASS` line (run with `--nocapture` to see measurements).
//!
//! Criterion 6 encodes the headline improvement targets verbatim. Under
//! this model the optimal dynamic schedule's mid-horizon prices are constant,
//! so optimal static pricing can match it up to an O(M/N) horizon-boundary
//! term and the measured improvements sit far below the targeted 30%/10%
//! levels; the test reports the measured values and fails honestly. See
//! README "Reproduction notes" for the analysis.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectrum_market::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_fixed_instance(r: &mut ChaCha8Rng, n: usize, m: usize) -> MarketInstance {
    let p_l = r.random_range(0.05..0.95);
    let p_h = r.random_range(0.05..0.95);
    let r_l = r.random_range(0.1..1.0);
    let r_h = r.random_range(0.02..3.0);
    MarketInstance::two_type_fixed(n, m, p_l, p_h, r_l, r_h).unwrap()
}

#[test]
fn criterion_01_oracle_optimality() {
    let start = Instant::now();
    let mut r = rng(101);
    for _ in 0..50 {
        let inst = random_fixed_instance(&mut r, 3, 2);
        let (_, values) = solve_admission(&inst).unwrap();
        let (best, _) = enumerate_policies_value(&inst).unwrap();
        assert!(
            (values.total() - best).abs() <= 1e-12,
            "DP {} vs exhaustive {} on {inst:?}",
            values.total(),
            best
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    println!("criterion 1: PASS - 50 exhaustive N=3 certifications in {elapsed:?}");
}

#[test]
fn criterion_02_closed_form_equivalence() {
    let start = Instant::now();
    // Concrete anchors first.
    let v = closed_form_value(Strategy::HeavyPriority, 1, 2, 0.5, 0.5, 1.0, 3.0);
    assert!((v - 2.0).abs() <= 1e-9, "HP anchor gave {v}");
    let v = closed_form_value(Strategy::LightPriority, 1, 2, 0.5, 0.5, 1.0, 1.2);
    assert!((v - 1.175).abs() <= 1e-9, "LP anchor gave {v}");

    let mut r = rng(202);
    for strategy in Strategy::ALL {
        for _ in 0..100 {
            let n = r.random_range(2..=20);
            let p_l: f64 = r.random_range(0.05..0.95);
            let p_h: f64 = r.random_range(0.05..0.90);
            let r_l: f64 = r.random_range(0.1..1.0);
            let ratio = match strategy {
                Strategy::HeavyPriority => hp_ratio_bound(p_l, p_h) + r.random_range(0.0..2.0),
                Strategy::LightPriority => r.random_range(p_l..=1.0 + p_l),
                Strategy::LightDominant => r.random_range(0.0..p_l),
            };
            let inst = MarketInstance::two_type_fixed(n, 2, p_l, p_h, r_l, ratio * r_l).unwrap();
            let (_, values) = solve_admission(&inst).unwrap();
            for slot in 1..=n {
                let cf = closed_form_value(strategy, slot, n, p_l, p_h, r_l, ratio * r_l);
                assert!(
                    (cf - values.get(slot)).abs() <= 1e-9,
                    "{strategy:?} slot {slot}/{n}: closed form {cf} vs DP {}",
                    values.get(slot)
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}, budget 1 s");
    println!("criterion 2: PASS - closed forms match the DP to 1e-9 ({elapsed:?})");
}

#[test]
fn criterion_03_regime_fidelity() {
    let mut r = rng(303);
    for strategy in Strategy::ALL {
        for _ in 0..100 {
            let n = r.random_range(3..=20);
            let p_l: f64 = r.random_range(0.05..0.95);
            let p_h: f64 = r.random_range(0.05..0.90);
            let r_l: f64 = r.random_range(0.1..1.0);
            let ratio = match strategy {
                Strategy::HeavyPriority => hp_ratio_bound(p_l, p_h) + r.random_range(0.001..2.0),
                Strategy::LightPriority => p_l + (1.0 - 1e-9) * r.random_range(0.001..1.0),
                Strategy::LightDominant => r.random_range(0.0..p_l * (1.0 - 1e-9)),
            };
            let expected_regime = match strategy {
                Strategy::HeavyPriority => Regime::HeavyPriority,
                Strategy::LightPriority => Regime::LightPriority,
                Strategy::LightDominant => Regime::LightDominant,
            };
            assert_eq!(classify_price_ratio(ratio, p_l, p_h), expected_regime);
            let inst = MarketInstance::two_type_fixed(n, 2, p_l, p_h, r_l, ratio * r_l).unwrap();
            let (policy, _) = solve_admission(&inst).unwrap();
            let stationary = PolicyTable::stationary(strategy, &inst).unwrap();
            for slot in 1..=n {
                for pattern in DemandPattern::all(2) {
                    assert_eq!(
                        policy.action(slot, pattern),
                        stationary.action(slot, pattern),
                        "{strategy:?} ratio {ratio} slot {slot} pattern {pattern:?}"
                    );
                }
            }
        }
    }
    // Threshold supremum and its arbitrary-occupancy generalization.
    for _ in 0..100 {
        let p_l: f64 = r.random_range(0.0..1.0);
        let p_h: f64 = r.random_range(0.0..0.95);
        let n = r.random_range(3..=30);
        let bound = hp_ratio_bound(p_l, p_h);
        let (_, max) = hp_threshold_sequence(p_l, p_h, n);
        assert!(
            (max - bound).abs() <= 1e-12,
            "sequence max {max} vs bound {bound}"
        );
        let general = hp_threshold_general(p_l, p_h, 2, n).unwrap();
        assert!(
            (general - bound).abs() <= 1e-12,
            "general M=2 {general} vs bound {bound}"
        );
    }
    println!("criterion 3: PASS - stationary tables and thresholds reproduce");
}

#[test]
fn criterion_04_kkt_pricing_certification() {
    let start = Instant::now();
    let mut r = rng(404);
    let resolution = 2000;
    let mut checked = 0usize;

    let mut certify = |strategy: Strategy, d_r: f64, k_l: f64, k_h: f64| {
        let closed = match strategy {
            Strategy::HeavyPriority => hp_slot_pricing(d_r, k_l, k_h).unwrap(),
            Strategy::LightPriority => lp_slot_pricing(d_r, k_l, k_h).unwrap(),
            Strategy::LightDominant => ld_slot_pricing(d_r, k_l, k_h).unwrap(),
        };
        assert!(
            closed.feasible,
            "{strategy:?} d_r={d_r} k=({k_l},{k_h}) infeasible in-cell"
        );
        let (g_l, g_h, g_gain) =
            grid_search_slot_prices(strategy, d_r, k_l, k_h, resolution).unwrap();
        assert!(
            (closed.r_l - g_l).abs() <= 1e-3,
            "{strategy:?} d_r={d_r} k=({k_l},{k_h}): r_l {} vs grid {g_l}",
            closed.r_l
        );
        // The light-dominant heavy price never sells; only its cap clamp matters.
        if strategy != Strategy::LightDominant {
            assert!(
                (closed.r_h - g_h).abs() <= 1e-3,
                "{strategy:?} d_r={d_r} k=({k_l},{k_h}): r_h {} vs grid {g_h}",
                closed.r_h
            );
        }
        let denom = g_gain.abs().max(1e-12);
        assert!(
            (closed.gain - g_gain).abs() / denom <= 1e-6,
            "{strategy:?} d_r={d_r} k=({k_l},{k_h}): gain {} vs grid {g_gain}",
            closed.gain
        );
        checked += 1;
    };

    for _ in 0..30 {
        // Heavy-priority cells.
        {
            // I0: needs k_h < 4/3 k_l and the interior edge positive.
            let k_l = r.random_range(0.5..3.0);
            let k_h = k_l * r.random_range(0.3..1.3);
            let edge = (4.0 * k_l - 3.0 * k_h) / (4.0 * k_h * k_l);
            certify(
                Strategy::HeavyPriority,
                r.random_range(0.0..=edge),
                k_l,
                k_h,
            );
            // E1: between the interior edge and the cap edge.
            let cap_edge = (2.0 - (1.0 + k_h / k_l).sqrt()) / k_h;
            let lo = edge.max(0.0);
            certify(
                Strategy::HeavyPriority,
                lo + (cap_edge - lo) * r.random_range(0.05..0.95),
                k_l,
                k_h,
            );
            // E2: from the cap edge up to the heavy cap.
            let hi = 1.0 / k_h;
            certify(
                Strategy::HeavyPriority,
                cap_edge + (hi - cap_edge) * r.random_range(0.0..0.95),
                k_l,
                k_h,
            );
        }
        // Light-priority cells.
        {
            // I0 for any elasticity pair, gap above the interior edge.
            let k_l: f64 = r.random_range(0.5..3.0);
            let k_h: f64 = k_l * r.random_range(0.2..2.0);
            let lo = if k_h < k_l {
                ((2.0 * (1.0 - k_h / k_l).sqrt() - 1.0) / k_h).max(0.0)
            } else {
                0.0
            };
            let hi = 1.0 / k_h;
            certify(
                Strategy::LightPriority,
                lo + (hi - lo) * r.random_range(0.01..0.95),
                k_l,
                k_h,
            );
            // E1: needs k_h < 3/4 k_l.
            let k_h = k_l * r.random_range(0.2..0.74);
            let lo = ((k_l - 3.0 * k_h) / (2.0 * k_h * k_l)).max(0.0);
            let hi = (2.0 * (1.0 - k_h / k_l).sqrt() - 1.0) / k_h;
            certify(
                Strategy::LightPriority,
                lo + (hi - lo) * r.random_range(0.05..0.95),
                k_l,
                k_h,
            );
            // E2: needs k_h < k_l / 3.
            let k_h = k_l * r.random_range(0.05..0.32);
            let hi = (k_l - 3.0 * k_h) / (2.0 * k_h * k_l);
            certify(
                Strategy::LightPriority,
                hi * r.random_range(0.0..1.0),
                k_l,
                k_h,
            );
        }
        // Light-dominant formula.
        {
            let k_l = r.random_range(0.5..3.0);
            let k_h = r.random_range(0.5..3.0);
            certify(
                Strategy::LightDominant,
                r.random_range(0.0..2.0 / k_h),
                k_l,
                k_h,
            );
        }
    }
    assert!(checked >= 200, "only {checked} cells certified");

    // Boundary continuity: the interior and first extreme solution coincide
    // exactly at the shared cell edge.
    for _ in 0..20 {
        let k_l = r.random_range(0.5..3.0);
        let k_h = k_l * r.random_range(0.3..1.3);
        let edge = (4.0 * k_l - 3.0 * k_h) / (4.0 * k_h * k_l);
        let i0 = hp_slot_pricing(edge, k_l, k_h).unwrap();
        let s = (edge * edge + 3.0 / (k_l * k_h)).sqrt();
        let e1 = ((s - edge) / 3.0, (2.0 * edge + s) / 3.0);
        assert!((i0.r_l - e1.0).abs() <= 1e-12 && (i0.r_h - e1.1).abs() <= 1e-12);
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "took {elapsed:?}, budget 60 s"
    );
    println!("criterion 4: PASS - {checked} KKT cells certified against the grid ({elapsed:?})");
}

#[test]
fn criterion_05_dominance_chain() {
    let mut r = rng(505);
    let resolution = 150;
    for _ in 0..100 {
        let n = r.random_range(2..=30usize);
        let m = if n >= 3 && r.random_bool(0.3) { 3 } else { 2 };
        let k_l = r.random_range(0.2..5.0);
        let k_h = r.random_range(0.2..5.0);
        let dynamic = solve_dynamic(k_l, k_h, n, m).unwrap().total();
        let static_opt = optimize_static_prices(k_l, k_h, n, m, resolution)
            .unwrap()
            .value;
        assert!(
            dynamic >= static_opt - 1e-9,
            "dynamic {dynamic} < static {static_opt} at k=({k_l},{k_h}), N={n}, M={m}"
        );
        let best_stationary = Strategy::ALL
            .iter()
            .map(|s| {
                admission::optimize_static_prices_stationary(*s, k_l, k_h, n, m, resolution)
                    .unwrap()
                    .value
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(
            static_opt >= best_stationary - 1e-9,
            "static {static_opt} < stationary {best_stationary} at k=({k_l},{k_h}), N={n}, M={m}"
        );
        let (switchover, _) = switchover_baseline(k_l, k_h, n, m, resolution, false).unwrap();
        assert!(
            switchover <= dynamic + 1e-9,
            "switchover {switchover} > dynamic {dynamic} at k=({k_l},{k_h}), N={n}, M={m}"
        );
    }
    println!("criterion 5: PASS - dynamic >= static >= stationary and switchover <= dynamic");
}

#[test]
fn criterion_06_improvement_anchors() {
    let improvement = |k_l: f64, k_h: f64, m: usize| {
        let dynamic = solve_dynamic(k_l, k_h, 100, m).unwrap().total();
        let static_opt = optimize_static_prices(k_l, k_h, 100, m, 400).unwrap().value;
        100.0 * (dynamic - static_opt) / static_opt
    };
    let m2 = improvement(100.0, 65.0, 2);
    let m3 = improvement(100.0, 65.0, 3);
    let low = improvement(10.0, 10.0, 2);

    let anchor_a = m2 >= 30.0;
    let anchor_b = (5.0..=20.0).contains(&m3) && m3 < m2;
    let anchor_c = low < 10.0;
    println!(
        "criterion 6: anchor k=(100,65) M=2: measured {m2:.4}% (needs >= 30%) - {}",
        if anchor_a { "PASS" } else { "FAIL" }
    );
    println!(
        "criterion 6: anchor k=(100,65) M=3: measured {m3:.4}% (needs 5%..20% and < M=2) - {}",
        if anchor_b { "PASS" } else { "FAIL" }
    );
    println!(
        "criterion 6: anchor k=(10,10): measured {low:.4}% (needs < 10%) - {}",
        if anchor_c { "PASS" } else { "FAIL" }
    );
    assert!(
        anchor_a && anchor_b && anchor_c,
        "headline improvement targets not reproduced: M=2 {m2:.4}%, M=3 {m3:.4}%, low {low:.4}% \
         (optimal static pricing matches the stationary mid-horizon dynamic prices, bounding the \
         true improvement by an O(M/N) horizon term; see README \"Reproduction notes\")"
    );
    println!("criterion 6: PASS - improvement anchors reproduced");
}

#[test]
fn criterion_07_regime_map_anchors() {
    let label = |k_l: f64, k_h: f64| solve_dynamic(k_l, k_h, 100, 2).unwrap().stationary_label();
    assert_eq!(
        label(100.0, 10.0),
        Some(Strategy::HeavyPriority),
        "k=(100,10)"
    );
    assert_eq!(
        label(10.0, 100.0),
        Some(Strategy::LightDominant),
        "k=(10,100)"
    );
    assert_eq!(
        label(50.0, 50.0),
        Some(Strategy::LightPriority),
        "k=(50,50)"
    );

    // Sweep a line from deep heavy-priority territory to the light-priority
    // band; a mixed-label region must separate them.
    let mut labels = Vec::new();
    let mut k_h = 10.0;
    while k_h <= 100.0 {
        labels.push(label(100.0, k_h));
        k_h += 2.5;
    }
    assert_eq!(labels.first().unwrap(), &Some(Strategy::HeavyPriority));
    assert_eq!(labels.last().unwrap(), &Some(Strategy::LightPriority));
    let mixed = labels.iter().filter(|l| l.is_none()).count();
    assert!(
        mixed >= 1,
        "no mixed-label cells between the HP and LP bands: {labels:?}"
    );
    // Stationary labels dominate: mixing is confined to a narrow band.
    assert!(
        mixed * 4 < labels.len(),
        "mixed cells are not the exception: {labels:?}"
    );
    let first_mixed = labels.iter().position(|l| l.is_none()).unwrap();
    let last_hp = labels
        .iter()
        .rposition(|l| *l == Some(Strategy::HeavyPriority))
        .unwrap();
    let first_lp = labels
        .iter()
        .position(|l| *l == Some(Strategy::LightPriority))
        .unwrap();
    assert!(
        last_hp < first_mixed || first_mixed < first_lp,
        "mixed region not between bands"
    );
    println!("criterion 7: PASS - regime anchors and a mixed band ({mixed} cells) detected");
}

#[test]
fn criterion_08_scaling_invariance() {
    let mut r = rng(808);
    for _ in 0..50 {
        let n = r.random_range(2..=20usize);
        let m = if n >= 3 && r.random_bool(0.3) { 3 } else { 2 };
        let k_l = r.random_range(0.2..5.0);
        let k_h = r.random_range(0.2..5.0);
        let base = solve_dynamic(k_l, k_h, n, m).unwrap();
        let scaled = solve_dynamic(2.0 * k_l, 2.0 * k_h, n, m).unwrap();
        for (a, b) in base.slots.iter().zip(&scaled.slots) {
            assert_eq!(a.strategy, b.strategy, "label changed under scaling");
            assert_eq!(a.case, b.case, "KKT case changed under scaling");
            assert!((b.r_l - a.r_l / 2.0).abs() <= 1e-12 * a.r_l.abs().max(1.0));
            assert!((b.r_h - a.r_h / 2.0).abs() <= 1e-12 * a.r_h.abs().max(1.0));
            assert!((b.value - a.value / 2.0).abs() <= 1e-12 * a.value.abs().max(1.0));
        }
    }
    // The static grid optimum scales the same way.
    for _ in 0..8 {
        let n = r.random_range(2..=12usize);
        let k_l = r.random_range(0.2..5.0);
        let k_h = r.random_range(0.2..5.0);
        let base = optimize_static_prices(k_l, k_h, n, 2, 100).unwrap();
        let scaled = optimize_static_prices(2.0 * k_l, 2.0 * k_h, n, 2, 100).unwrap();
        assert!((scaled.value - base.value / 2.0).abs() <= 1e-12 * base.value.max(1.0));
        assert!((scaled.r_l - base.r_l / 2.0).abs() <= 1e-12);
        assert!((scaled.r_h - base.r_h / 2.0).abs() <= 1e-12);
        assert_eq!(scaled.regime, base.regime);
    }
    println!("criterion 8: PASS - joint elasticity scaling is exact");
}

#[test]
fn criterion_09_monte_carlo_consistency() {
    let mut r = rng(909);
    for trial in 0..5 {
        let n = r.random_range(5..=15usize);
        let k_l = r.random_range(0.5..3.0);
        let k_h = r.random_range(0.5..3.0);
        let schedule = solve_dynamic(k_l, k_h, n, 2).unwrap();
        let policy = schedule.policy();
        let instance = MarketInstance::new(
            n,
            vec![TypeSpec::elastic(1, k_l), TypeSpec::elastic(2, k_h)],
            DemandMode::Elastic,
        )
        .unwrap();
        let seed = 1000 + trial;
        let (mean, stderr) = monte_carlo(
            &schedule,
            &policy,
            &instance,
            &DemandDraw::Bernoulli,
            100_000,
            seed,
        )
        .unwrap();
        assert!(
            (mean - schedule.total()).abs() <= 3.0 * stderr,
            "instance {trial}: mean {mean} vs value {} (stderr {stderr})",
            schedule.total()
        );
        let (again, stderr_again) = monte_carlo(
            &schedule,
            &policy,
            &instance,
            &DemandDraw::Bernoulli,
            100_000,
            seed,
        )
        .unwrap();
        assert_eq!(mean.to_bits(), again.to_bits(), "same seed, different mean");
        assert_eq!(stderr.to_bits(), stderr_again.to_bits());
    }
    println!("criterion 9: PASS - simulated means within 3 standard errors, bit-stable");
}

#[test]
fn criterion_10_multitype_reduction() {
    let mut r = rng(1010);
    for _ in 0..100 {
        let n = r.random_range(2..=12usize);
        let m = r.random_range(2..=4usize);
        let inst = random_fixed_instance(&mut r, n, m);
        let (policy_a, values_a) = solve_admission(&inst).unwrap();
        let (policy_b, values_b) = solve_multitype(&inst).unwrap();
        for slot in 1..=n {
            assert!((values_a.get(slot) - values_b.get(slot)).abs() <= 1e-12);
            for pattern in DemandPattern::all(2) {
                assert_eq!(
                    policy_a.action(slot, pattern),
                    policy_b.action(slot, pattern),
                    "slot {slot} pattern {pattern:?} of {inst:?}"
                );
            }
        }
    }
    // Sorted-expectation exactness: dyadic inputs keep both routes exact in
    // IEEE arithmetic, so equality is bitwise for every I up to 10.
    for i in 1..=10usize {
        for _ in 0..20 {
            let candidates: Vec<(f64, f64)> = (0..i)
                .map(|_| {
                    let v = r.random_range(0..=256) as f64 / 32.0;
                    let p = r.random_range(0..=16) as f64 / 16.0;
                    (v, p)
                })
                .collect();
            let v0 = r.random_range(0..=128) as f64 / 32.0;
            let sorted = expected_max_value(v0, &candidates);
            let enumerated = expected_max_by_enumeration(v0, &candidates).unwrap();
            assert_eq!(
                sorted.to_bits(),
                enumerated.to_bits(),
                "I={i} {candidates:?} v0={v0}"
            );
        }
        // Continuous draws agree to floating-point accumulation error.
        for _ in 0..20 {
            let candidates: Vec<(f64, f64)> = (0..i)
                .map(|_| (r.random_range(0.0..8.0), r.random_range(0.0..1.0)))
                .collect();
            let v0 = r.random_range(0.0..4.0);
            let sorted = expected_max_value(v0, &candidates);
            let enumerated = expected_max_by_enumeration(v0, &candidates).unwrap();
            assert!((sorted - enumerated).abs() <= 1e-12 * enumerated.abs().max(1.0));
        }
    }
    println!("criterion 10: PASS - multi-type reduction and expectation exactness hold");
}
