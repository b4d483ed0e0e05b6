//! Output documents: policy/schedule JSON, sweep CSV, and numeric summaries.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use spectrum_market::{
    DemandPattern, MarketInstance, PolicyTable, PriceSchedule, Regime, StaticOptimum,
};

use crate::CliError;

/// Formats a number to 12 significant digits in shortest decimal form.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor();
    let scale = 10f64.powf(11.0 - magnitude);
    format!("{}", (x * scale).round() / scale)
}

#[derive(Debug, Serialize)]
pub struct SlotDoc {
    pub n: usize,
    pub strategy: String,
    pub r_l: f64,
    pub r_h: f64,
    pub kkt_case: Option<String>,
    pub value: f64,
    /// Demand bit pattern (type order) to action code (0 = none, i+1 = type i).
    pub actions: BTreeMap<String, usize>,
}

#[derive(Debug, Serialize)]
pub struct ScheduleDoc {
    pub horizon: usize,
    pub occupancies: Vec<usize>,
    pub pricing: String,
    pub total_value: f64,
    pub slots: Vec<SlotDoc>,
}

/// Builds the contingency-plan document for a dynamic schedule.
pub fn schedule_doc(schedule: &PriceSchedule, policy: &PolicyTable) -> ScheduleDoc {
    let slots = schedule
        .slots
        .iter()
        .map(|q| SlotDoc {
            n: q.slot,
            strategy: q.strategy.label().to_string(),
            r_l: q.r_l,
            r_h: q.r_h,
            kkt_case: Some(q.case.label().to_string()),
            value: q.value,
            actions: action_map(policy, q.slot, 2),
        })
        .collect();
    ScheduleDoc {
        horizon: schedule.horizon(),
        occupancies: vec![1, schedule.heavy_occupancy],
        pricing: "dynamic".to_string(),
        total_value: schedule.total(),
        slots,
    }
}

/// Builds the contingency-plan document for a fixed-price policy.
pub fn fixed_policy_doc(
    instance: &MarketInstance,
    policy: &PolicyTable,
    values: &spectrum_market::ValueFunction,
) -> ScheduleDoc {
    let n_types = instance.num_types();
    let prices: Vec<f64> = (0..n_types).map(|i| instance.price(i)).collect();
    let slots = (1..=instance.horizon())
        .map(|n| SlotDoc {
            n,
            strategy: policy.slots[n - 1]
                .label
                .map(|s| s.label().to_string())
                .unwrap_or_else(|| "PRIORITY".to_string()),
            r_l: prices[0],
            r_h: prices.get(1).copied().unwrap_or(0.0),
            kkt_case: None,
            value: values.get(n),
            actions: action_map(policy, n, n_types),
        })
        .collect();
    ScheduleDoc {
        horizon: instance.horizon(),
        occupancies: instance.types().iter().map(|t| t.occupancy).collect(),
        pricing: "fixed".to_string(),
        total_value: values.total(),
        slots,
    }
}

fn action_map(policy: &PolicyTable, slot: usize, n_types: usize) -> BTreeMap<String, usize> {
    DemandPattern::all(n_types)
        .map(|d| (d.bits(n_types), policy.action(slot, d).code()))
        .collect()
}

/// Serializes a contingency plan to `path` as stable pretty JSON.
pub fn emit_policy_json(doc: &ScheduleDoc, path: &Path) -> Result<(), CliError> {
    let text = to_pretty_json(doc)?;
    std::fs::write(path, text.as_bytes())
        .map_err(|e| CliError::internal(format!("cannot write {}: {e}", path.display())))
}

pub fn to_pretty_json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(doc)
        .map_err(|e| CliError::internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct StaticDoc {
    pub horizon: usize,
    pub occupancies: Vec<usize>,
    pub k_l: f64,
    pub k_h: f64,
    pub r_l: f64,
    pub r_h: f64,
    pub value: f64,
    pub regime: String,
}

pub fn static_doc(n: usize, m: usize, k_l: f64, k_h: f64, opt: &StaticOptimum) -> StaticDoc {
    StaticDoc {
        horizon: n,
        occupancies: vec![1, m],
        k_l,
        k_h,
        r_l: opt.r_l,
        r_h: opt.r_h,
        value: opt.value,
        regime: opt.regime.label().to_string(),
    }
}

/// One sweep cell: revenues and collapsed regime labels.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub k_l: f64,
    pub k_h: f64,
    pub static_revenue: f64,
    pub dynamic_revenue: f64,
    pub improvement_pct: f64,
    pub dynamic_regime: String,
    pub static_regime: String,
}

pub const SWEEP_HEADER: &str =
    "k_l,k_h,static_revenue,dynamic_revenue,improvement_pct,dynamic_regime,static_regime";

/// Writes sweep rows as CSV in row-major grid order. Floats use shortest
/// round-trip form, so identical configs produce byte-identical files.
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut text = String::with_capacity(rows.len() * 64 + SWEEP_HEADER.len() + 1);
    text.push_str(SWEEP_HEADER);
    text.push('\n');
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k_l,
            r.k_h,
            r.static_revenue,
            r.dynamic_revenue,
            r.improvement_pct,
            r.dynamic_regime,
            r.static_regime
        ));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::internal(format!("cannot write sweep CSV: {e}")))
}

pub fn regime_label(regime: Regime) -> String {
    regime.label().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounds_to_twelve_digits() {
        assert_eq!(sig12(0.575256347656250), "0.575256347656");
        assert_eq!(sig12(2.0), "2");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-1234.56789012345), "-1234.56789012");
        assert_eq!(sig12(0.0001234567890123456), "0.000123456789012");
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "k_l,k_h,static_revenue,dynamic_revenue,improvement_pct,dynamic_regime,static_regime\n"
        );
    }
}
