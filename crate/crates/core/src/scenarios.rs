//! Product variants, batch execution of the full pipeline and a linear
//! cost model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocate::{allocate_all, automation_metrics, AutomationMetrics};
use crate::balance::{balance_line, takt, BalanceError, LinePlan};
use crate::model::{Criterion, Dataset, ShiftConfig};
use crate::simulate::{run_replications, SimConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid variant rule: {0}")]
    Rule(String),
    #[error("invalid cost config: {0}")]
    Cost(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantRule {
    /// Multiplicative duration range `[lo, hi]`.
    pub duration_perturbation: [f64; 2],
    pub criteria_flip_probability: f64,
    pub seed: u64,
}

impl Default for VariantRule {
    fn default() -> Self {
        VariantRule {
            duration_perturbation: [0.9, 1.1],
            criteria_flip_probability: 0.05,
            seed: 0,
        }
    }
}

impl VariantRule {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let [lo, hi] = self.duration_perturbation;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= 1.0 && hi >= 1.0) {
            return Err(ScenarioError::Rule(format!(
                "duration range needs 0 < lo <= 1 <= hi, got [{lo}, {hi}]"
            )));
        }
        let p = self.criteria_flip_probability;
        if !(0.0..=0.5).contains(&p) {
            return Err(ScenarioError::Rule(format!(
                "flip probability must lie in [0, 0.5], got {p}"
            )));
        }
        Ok(())
    }
}

pub fn variant_name(base: &str, index: usize) -> String {
    format!("{base}-v{:03}", index + 1)
}

/// `n` perturbed copies of `base`. Variant `i` draws from its own stream,
/// so a variant does not depend on how many others are generated.
pub fn generate_variants(
    base: &Dataset,
    n: usize,
    rule: &VariantRule,
) -> Result<Vec<Dataset>, ScenarioError> {
    rule.validate()?;
    let [lo, hi] = rule.duration_perturbation;
    Ok((0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(rule.seed);
            rng.set_stream(i as u64);
            let mut d = base.clone();
            d.product.name = variant_name(&base.product.name, i);
            for t in &mut d.product.tasks {
                let factor: f64 = if lo < hi {
                    rng.random_range(lo..=hi)
                } else {
                    lo
                };
                t.duration_s = ((t.duration_s as f64 * factor).round() as u64).max(1);
                for c in Criterion::ALL {
                    if rng.random_bool(rule.criteria_flip_probability) {
                        let v = t.criteria.get(c);
                        t.criteria.set(c, !v);
                    }
                }
            }
            d
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub variant: String,
    pub robot_task_share: f64,
    pub time_share: f64,
    pub stations: Option<usize>,
    pub feasible: bool,
    /// Mean completed units per shift over the configured replications.
    pub throughput: Option<f64>,
    pub takt_compliance: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Allocation, takt and balance for one dataset.
pub fn plan_line(dataset: &Dataset) -> Result<(AutomationMetrics, LinePlan), BalanceError> {
    let plan = allocate_all(&dataset.product);
    let metrics = automation_metrics(&plan, &dataset.product);
    let takt_s = takt(&dataset.shift)?;
    let line = balance_line(&dataset.product, &plan, takt_s)?;
    Ok((metrics, line))
}

fn run_variant(variant: &Dataset, shift: &ShiftConfig, sim: &SimConfig) -> ScenarioRow {
    let mut d = variant.clone();
    d.shift = *shift;
    let plan = allocate_all(&d.product);
    let metrics = automation_metrics(&plan, &d.product);
    let mut row = ScenarioRow {
        variant: d.product.name.clone(),
        robot_task_share: metrics.task_share,
        time_share: metrics.time_share,
        stations: None,
        feasible: false,
        throughput: None,
        takt_compliance: None,
        error: None,
    };
    let line = match plan_line(&d) {
        Ok((_, line)) => line,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    let cfg = SimConfig {
        shift: *shift,
        record_trace: false,
        ..sim.clone()
    };
    match run_replications(&d.product, &line, &cfg) {
        Ok((agg, _)) => {
            let tp = agg.completed_units.mean;
            row.stations = Some(line.stations.len());
            row.feasible = true;
            row.throughput = Some(tp);
            row.takt_compliance = Some(tp >= shift.demand_units as f64);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Runs the pipeline on every variant. Failures are recorded in their row;
/// rows come back sorted by variant name.
pub fn batch_run(variants: &[Dataset], shift: &ShiftConfig, sim: &SimConfig) -> Vec<ScenarioRow> {
    let mut rows: Vec<ScenarioRow> = variants
        .par_iter()
        .map(|v| run_variant(v, shift, sim))
        .collect();
    rows.sort_by(|a, b| a.variant.cmp(&b.variant));
    rows
}

pub fn rows_to_csv(rows: &[ScenarioRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "variant",
        "robot_task_share",
        "time_share",
        "stations",
        "feasible",
        "throughput",
        "takt_compliance",
    ])
    .unwrap();
    let opt = |o: Option<String>| o.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.variant.clone(),
            r.robot_task_share.to_string(),
            r.time_share.to_string(),
            opt(r.stations.map(|s| s.to_string())),
            r.feasible.to_string(),
            opt(r.throughput.map(|t| t.to_string())),
            opt(r.takt_compliance.map(|t| t.to_string())),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn feasible_fraction(rows: &[ScenarioRow]) -> f64 {
    if rows.is_empty() {
        return 0.0;
    }
    rows.iter().filter(|r| r.feasible).count() as f64 / rows.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostConfig {
    pub labor_rate_per_h: f64,
    pub robot_capex: f64,
    pub robot_operating_per_h: f64,
    pub material_handling_saved_s_per_shift: f64,
    pub shifts_per_year: f64,
}

impl Default for CostConfig {
    fn default() -> Self {
        CostConfig {
            labor_rate_per_h: 30.0,
            robot_capex: 100_000.0,
            robot_operating_per_h: 5.0,
            material_handling_saved_s_per_shift: 3600.0,
            shifts_per_year: 250.0,
        }
    }
}

impl CostConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let fields = [
            ("labor_rate_per_h", self.labor_rate_per_h),
            ("robot_capex", self.robot_capex),
            ("robot_operating_per_h", self.robot_operating_per_h),
            (
                "material_handling_saved_s_per_shift",
                self.material_handling_saved_s_per_shift,
            ),
            ("shifts_per_year", self.shifts_per_year),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ScenarioError::Cost(format!("{name} must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economics {
    pub labor_s_saved_per_shift: f64,
    pub annual_saving: f64,
    /// Absent when the line never pays back.
    pub payback_years: Option<f64>,
}

/// Labor saved is robot work per unit times output plus the fixed
/// material-handling credit; robot operating cost runs for the whole shift.
pub fn economics(
    completed_units: f64,
    metrics: &AutomationMetrics,
    shift: &ShiftConfig,
    cost: &CostConfig,
) -> Economics {
    let saved_s = metrics.automated_time_s as f64 * completed_units
        + cost.material_handling_saved_s_per_shift;
    let shift_h = shift.duration_s as f64 / 3600.0;
    let annual = saved_s / 3600.0 * cost.labor_rate_per_h * cost.shifts_per_year
        - cost.robot_operating_per_h * shift_h * cost.shifts_per_year;
    Economics {
        labor_s_saved_per_shift: saved_s,
        annual_saving: annual,
        payback_years: (annual > 0.0).then(|| cost.robot_capex / annual),
    }
}
