//! Command-line front end: configuration ingestion, subcommand dispatch, and
//! bit-stable JSON/CSV emission of solver outputs.
//!
//! Exit codes: 0 on success, 2 on configuration or usage errors, 1 on
//! internal failures. Summary lines go to stderr with 12 significant digits;
//! machine-readable JSON/CSV goes to stdout or `--out`.

pub mod config;
pub mod report;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use spectrum_market as sm;
use spectrum_market::{DemandDraw, Strategy};

pub use config::{load_config, ChannelConfig, Config, SweepSpec};
pub use report::{emit_policy_json, SweepRow, SWEEP_HEADER};

/// CLI-level error carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or arguments (exit 2).
    Usage(String),
    /// Internal failure (exit 1).
    Internal(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        CliError::Internal(msg.into())
    }
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Internal(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<sm::Error> for CliError {
    fn from(e: sm::Error) -> Self {
        match e {
            sm::Error::Instance(_) | sm::Error::Domain(_) => CliError::Usage(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "spectrum-market",
    about = "Revenue-optimal spectrum pricing and admission policies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// Configuration file (JSON).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Write the command's JSON/CSV output to this file as well.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured Monte-Carlo trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Override the configured grid resolution.
    #[arg(long)]
    resolution: Option<usize>,
    /// Override the heavy type's occupancy (sets occupancies to [1, M]).
    #[arg(long, value_name = "M")]
    occupancy: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BaselineKind {
    Switchover,
    Static,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimal static prices and the regime of the optimum.
    Static(CommonArgs),
    /// Optimal dynamic pricing and admission schedule.
    Dynamic(CommonArgs),
    /// Contingency-plan dump (fixed prices or dynamic schedule).
    Policy(CommonArgs),
    /// Static-vs-dynamic sweep over an elasticity grid (CSV).
    Sweep(CommonArgs),
    /// Monte-Carlo execution of the solved policy.
    Simulate(CommonArgs),
    /// Compare the dynamic optimum against a baseline.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        /// Baseline to compare against.
        #[arg(long, value_enum, default_value_t = BaselineKind::Switchover)]
        baseline: BaselineKind,
        /// Evaluate the switch-over rule at the optimal dynamic prices
        /// instead of re-optimizing prices under the rule.
        #[arg(long)]
        literal_switchover: bool,
    },
    /// Run the desk-scale oracle suite.
    Verify {
        /// Optional configuration (defaults are used when omitted).
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
    },
}

/// Parses `argv` (excluding the program name) and runs the command,
/// returning the process exit code.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut args: Vec<String> = vec!["spectrum-market".to_string()];
    args.extend(argv.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Static(common) => cmd_static(&common),
        Command::Dynamic(common) => cmd_dynamic(&common),
        Command::Policy(common) => cmd_policy(&common),
        Command::Sweep(common) => cmd_sweep(&common),
        Command::Simulate(common) => cmd_simulate(&common),
        Command::Compare {
            common,
            baseline,
            literal_switchover,
        } => cmd_compare(&common, baseline, literal_switchover),
        Command::Verify { config } => cmd_verify(config.as_deref()),
    }
}

fn effective_config(common: &CommonArgs) -> Result<Config, CliError> {
    let mut config = load_config(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(trials) = common.trials {
        config.trials = trials;
    }
    if let Some(resolution) = common.resolution {
        config.search_resolution = resolution;
    }
    if let Some(m) = common.occupancy {
        config.occupancies = vec![1, m];
    }
    config.validate()?;
    // Echo the effective configuration so runs are self-describing.
    eprintln!(
        "config: N={} occupancies={:?} mode={} resolution={} trials={} seed={}",
        config.horizon,
        config.occupancies,
        if config.is_elastic() {
            "elastic"
        } else {
            "fixed_prices"
        },
        config.search_resolution,
        config.trials,
        config.seed
    );
    Ok(config)
}

fn emit<T: serde::Serialize>(doc: &T, out: Option<&Path>) -> Result<(), CliError> {
    let text = report::to_pretty_json(doc)?;
    print!("{text}");
    if let Some(path) = out {
        std::fs::write(path, text.as_bytes())
            .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_static(common: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(common)?;
    let (k_l, k_h) = config.two_type_elasticities()?;
    let m = config.heavy_occupancy();
    let opt = sm::optimize_static_prices(k_l, k_h, config.horizon, m, config.search_resolution)?;
    eprintln!(
        "static optimum: r_l = {}, r_h = {}, value = {}, regime = {}",
        report::sig12(opt.r_l),
        report::sig12(opt.r_h),
        report::sig12(opt.value),
        opt.regime.label()
    );
    emit(
        &report::static_doc(config.horizon, m, k_l, k_h, &opt),
        common.out.as_deref(),
    )
}

fn cmd_dynamic(common: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(common)?;
    let (k_l, k_h) = config.two_type_elasticities()?;
    let m = config.heavy_occupancy();
    let schedule = sm::solve_dynamic(k_l, k_h, config.horizon, m)?;
    let policy = schedule.policy();
    eprintln!(
        "dynamic optimum: V1 = {}, stationary label = {}",
        report::sig12(schedule.total()),
        schedule.stationary_label().map_or("MIXED", |s| s.label())
    );
    emit(
        &report::schedule_doc(&schedule, &policy),
        common.out.as_deref(),
    )
}

fn cmd_policy(common: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(common)?;
    if config.is_elastic() {
        return cmd_dynamic(common);
    }
    let instance = config.instance()?;
    let (policy, values) = if instance.is_two_type() {
        sm::solve_admission(&instance)?
    } else {
        sm::solve_multitype(&instance)?
    };
    eprintln!("fixed-price policy: V1 = {}", report::sig12(values.total()));
    emit(
        &report::fixed_policy_doc(&instance, &policy, &values),
        common.out.as_deref(),
    )
}

fn cmd_sweep(common: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(common)?;
    let spec = config.sweep.clone().unwrap_or_default();
    let m = config.heavy_occupancy();
    let rows = run_sweep(&spec, config.horizon, m, config.search_resolution)?;
    let mut buf = Vec::new();
    report::write_sweep_csv(&mut buf, &rows)?;
    let text = String::from_utf8(buf).expect("CSV is UTF-8");
    print!("{text}");
    if let Some(path) = &common.out {
        std::fs::write(path, text.as_bytes())
            .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))?;
    }
    eprintln!("sweep: {} cells", rows.len());
    Ok(())
}

/// Evaluates every sweep cell (concurrently) in row-major grid order.
pub fn run_sweep(
    spec: &SweepSpec,
    n: usize,
    m: usize,
    resolution: usize,
) -> Result<Vec<SweepRow>, CliError> {
    let axis = |lo: f64, hi: f64, steps: usize| -> Vec<f64> {
        (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let k_ls = axis(spec.k_l_min, spec.k_l_max, spec.k_l_steps);
    let k_hs = axis(spec.k_h_min, spec.k_h_max, spec.k_h_steps);
    let cells: Vec<(f64, f64)> = k_ls
        .iter()
        .flat_map(|&k_l| k_hs.iter().map(move |&k_h| (k_l, k_h)))
        .collect();
    cells
        .into_par_iter()
        .map(|(k_l, k_h)| {
            let dynamic = sm::solve_dynamic(k_l, k_h, n, m)?;
            let static_opt = sm::optimize_static_prices(k_l, k_h, n, m, resolution)?;
            let dynamic_regime = dynamic
                .stationary_label()
                .map_or_else(|| "MIXED".to_string(), |s| s.label().to_string());
            Ok(SweepRow {
                k_l,
                k_h,
                static_revenue: static_opt.value,
                dynamic_revenue: dynamic.total(),
                improvement_pct: 100.0 * (dynamic.total() - static_opt.value) / static_opt.value,
                dynamic_regime,
                static_regime: report::regime_label(static_opt.regime),
            })
        })
        .collect()
}

#[derive(Debug, serde::Serialize)]
struct SimulateDoc {
    expected_value: f64,
    simulated_mean: f64,
    standard_error: f64,
    trials: u64,
    seed: u64,
}

fn cmd_simulate(common: &CommonArgs) -> Result<(), CliError> {
    let config = effective_config(common)?;
    let instance = config.instance()?;
    let m = config.heavy_occupancy();
    let (schedule, policy, expected) = if config.is_elastic() {
        let (k_l, k_h) = config.two_type_elasticities()?;
        let schedule = sm::solve_dynamic(k_l, k_h, config.horizon, m)?;
        let policy = schedule.policy();
        let expected = schedule.total();
        (schedule, policy, expected)
    } else {
        if !instance.is_two_type() {
            return Err(CliError::config(
                "occupancies: simulation needs exactly two types (light + heavy)",
            ));
        }
        let (policy, values) = sm::solve_admission(&instance)?;
        let schedule = sm::PriceSchedule::from_static(
            1.0,
            1.0,
            m,
            config.horizon,
            instance.price(0),
            instance.price(1),
        );
        (schedule, policy, values.total())
    };
    let demand = match &config.channel {
        Some(ch) => DemandDraw::Channel {
            model: ch.model(),
            gain_low: ch.gain_low,
            gain_high: ch.gain_high,
        },
        None => DemandDraw::Bernoulli,
    };
    let (mean, stderr) = sm::monte_carlo(
        &schedule,
        &policy,
        &instance,
        &demand,
        config.trials,
        config.seed,
    )?;
    eprintln!(
        "simulate: mean = {} (stderr {}), solver value = {}",
        report::sig12(mean),
        report::sig12(stderr),
        report::sig12(expected)
    );
    emit(
        &SimulateDoc {
            expected_value: expected,
            simulated_mean: mean,
            standard_error: stderr,
            trials: config.trials,
            seed: config.seed,
        },
        common.out.as_deref(),
    )
}

#[derive(Debug, serde::Serialize)]
struct CompareDoc {
    baseline: String,
    literal_switchover: bool,
    dynamic_value: f64,
    baseline_value: f64,
    improvement_pct: f64,
}

fn cmd_compare(common: &CommonArgs, baseline: BaselineKind, literal: bool) -> Result<(), CliError> {
    let config = effective_config(common)?;
    let (k_l, k_h) = config.two_type_elasticities()?;
    let m = config.heavy_occupancy();
    let dynamic = sm::solve_dynamic(k_l, k_h, config.horizon, m)?;
    let (name, baseline_value) = match baseline {
        BaselineKind::Switchover => {
            let (value, _) = sm::switchover_baseline(
                k_l,
                k_h,
                config.horizon,
                m,
                config.search_resolution,
                literal,
            )?;
            ("switchover", value)
        }
        BaselineKind::Static => {
            let opt =
                sm::optimize_static_prices(k_l, k_h, config.horizon, m, config.search_resolution)?;
            ("static", opt.value)
        }
    };
    let doc = CompareDoc {
        baseline: name.to_string(),
        literal_switchover: literal,
        dynamic_value: dynamic.total(),
        baseline_value,
        improvement_pct: 100.0 * (dynamic.total() - baseline_value) / baseline_value,
    };
    eprintln!(
        "compare: dynamic = {}, {} = {}, improvement = {}%",
        report::sig12(doc.dynamic_value),
        name,
        report::sig12(doc.baseline_value),
        report::sig12(doc.improvement_pct)
    );
    emit(&doc, common.out.as_deref())
}

fn cmd_verify(config: Option<&Path>) -> Result<(), CliError> {
    let resolution = match config {
        Some(path) => load_config(path)?.search_resolution.min(400),
        None => 400,
    };
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        println!("{} {name}", if ok { "ok  " } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // DP optimality against exhaustive policy enumeration.
    let mut dp_ok = true;
    for (i, (p_l, p_h, r_l, r_h)) in [
        (0.5, 0.5, 1.0, 3.0),
        (0.5, 0.5, 1.0, 1.2),
        (0.3, 0.7, 0.8, 1.1),
        (0.9, 0.2, 1.0, 0.3),
    ]
    .iter()
    .enumerate()
    {
        let inst = sm::MarketInstance::two_type_fixed(3, 2, *p_l, *p_h, *r_l, *r_h)?;
        let (_, values) = sm::solve_admission(&inst)?;
        let (best, _) = sm::enumerate_policies_value(&inst)?;
        if (values.total() - best).abs() > 1e-12 {
            eprintln!(
                "  mismatch on instance {i}: dp={} oracle={best}",
                values.total()
            );
            dp_ok = false;
        }
    }
    check(
        "admission DP matches exhaustive policy enumeration (N=3)",
        dp_ok,
    );

    // Closed-form anchors.
    let hp = sm::closed_form_value(Strategy::HeavyPriority, 1, 2, 0.5, 0.5, 1.0, 3.0);
    let lp = sm::closed_form_value(Strategy::LightPriority, 1, 2, 0.5, 0.5, 1.0, 1.2);
    check(
        "closed-form value anchors (2.0 / 1.175)",
        (hp - 2.0).abs() < 1e-9 && (lp - 1.175).abs() < 1e-9,
    );

    // KKT pricing against grid search, one cell per case.
    let mut kkt_ok = true;
    let cells: [(Strategy, f64, f64, f64); 7] = [
        (Strategy::HeavyPriority, 0.0, 1.0, 1.0),
        (Strategy::HeavyPriority, 0.5, 1.0, 1.0),
        (Strategy::HeavyPriority, 0.2, 1.0, 4.0),
        (Strategy::LightPriority, 1.8, 1.0, 0.5),
        (Strategy::LightPriority, 0.4, 1.0, 0.5),
        (Strategy::LightPriority, 0.5, 1.0, 0.2),
        (Strategy::LightDominant, 0.3, 2.0, 1.0),
    ];
    for (strategy, d_r, k_l, k_h) in cells {
        let closed = match strategy {
            Strategy::HeavyPriority => sm::hp_slot_pricing(d_r, k_l, k_h)?,
            Strategy::LightPriority => sm::lp_slot_pricing(d_r, k_l, k_h)?,
            Strategy::LightDominant => sm::ld_slot_pricing(d_r, k_l, k_h)?,
        };
        let (g_l, g_h, g_v) = sm::grid_search_slot_prices(strategy, d_r, k_l, k_h, resolution)?;
        let ld_heavy_free = strategy == Strategy::LightDominant;
        if (closed.r_l - g_l).abs() > 1e-3
            || (!ld_heavy_free && (closed.r_h - g_h).abs() > 1e-3)
            || (closed.gain - g_v).abs() > 1e-6 * g_v.abs().max(1.0)
        {
            eprintln!(
                "  {} gap {d_r}: closed=({},{}) grid=({g_l},{g_h})",
                strategy.label(),
                closed.r_l,
                closed.r_h
            );
            kkt_ok = false;
        }
    }
    check("closed-form slot pricing matches grid search", kkt_ok);

    // Multi-type reduction.
    let mut red_ok = true;
    for (p_l, p_h, r_l, r_h) in [(0.5, 0.5, 1.0, 3.0), (0.4, 0.6, 0.9, 1.3)] {
        let inst = sm::MarketInstance::two_type_fixed(8, 2, p_l, p_h, r_l, r_h)?;
        let (_, v1) = sm::solve_admission(&inst)?;
        let (_, v2) = sm::solve_multitype(&inst)?;
        if (v1.total() - v2.total()).abs() > 1e-12 {
            red_ok = false;
        }
    }
    check("multi-type DP reduces to the two-type DP", red_ok);

    // Sorted expectation vs full enumeration.
    let candidates = [(3.0, 0.5), (1.0, 0.25), (2.5, 0.75), (0.25, 0.5)];
    let sorted = sm::expected_max_value(0.5, &candidates);
    let enumerated = sm::expected_max_by_enumeration(0.5, &candidates)?;
    check(
        "sorted demand expectation equals 2^I enumeration",
        sorted == enumerated,
    );

    // Dominance and scaling.
    let dynamic = sm::solve_dynamic(1.0, 1.0, 6, 2)?.total();
    let static_opt = sm::optimize_static_prices(1.0, 1.0, 6, 2, resolution)?.value;
    let (switchover, _) = sm::switchover_baseline(1.0, 1.0, 6, 2, resolution, false)?;
    check(
        "dominance: dynamic >= static and dynamic >= switchover",
        dynamic >= static_opt - 1e-9 && dynamic >= switchover - 1e-9,
    );
    let half = sm::solve_dynamic(2.0, 2.0, 6, 2)?.total();
    check(
        "joint elasticity scaling halves the value",
        (half - dynamic / 2.0).abs() < 1e-12,
    );

    if failures == 0 {
        println!("verify: all checks passed");
        Ok(())
    } else {
        Err(CliError::internal(format!(
            "verify: {failures} check(s) failed"
        )))
    }
}
