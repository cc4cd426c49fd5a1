//! Report assembly and rendering shared by the CLI binary and the tests.
//!
//! Reports render to JSON (default) or CSV. Rendering is byte-stable:
//! object keys are sorted, floating-point statistics are formatted as
//! decimal strings with 17 significant digits (enough to reproduce the
//! `f64` exactly), and nothing volatile (timestamps, paths, pointers)
//! ever enters a document.

use serde_json::{json, Map, Value};

use crate::chain::{HittingTimeReport, McHittingEstimate, TransitionMatrix};
use crate::fleet::FleetMetrics;
use crate::optimize::OptimizationResult;
use crate::spatial::{BuildingSpec, LegMoments, WaitressSummary};

/// Formats a statistic with 17 significant digits, the shortest width that
/// always round-trips an `f64` exactly.
pub fn format_stat(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

/// Serializes a JSON value with sorted keys and a trailing newline.
/// Parsing the output and re-rendering it reproduces the bytes exactly.
pub fn render_json(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report values are valid JSON");
    text.push('\n');
    text
}

fn moments_value(m: &LegMoments) -> Value {
    json!({
        "mean": format_stat(m.mean),
        "variance": format_stat(m.variance),
        "lag1_product_moment": format_stat(m.lag1_product_moment),
        "lag1_autocovariance": format_stat(m.lag1_autocovariance),
        "lag1_autocorrelation": format_stat(m.lag1_autocorrelation),
        "lag2_autocorrelation": format_stat(m.lag2_autocorrelation),
    })
}

/// Everything the `spatial` command reports.
#[derive(Debug, Clone)]
pub struct SpatialReport {
    pub n_legs: usize,
    pub seed: u64,
    pub positions: Vec<f64>,
    pub legs: Vec<f64>,
    pub total_distance: f64,
    pub mean_leg: f64,
    /// Present when the run is long enough for lag statistics (3 legs).
    pub empirical: Option<LegMoments>,
    pub analytic: LegMoments,
    pub seconds: Option<SecondsReport>,
}

/// Travel-time conversion for a specific building.
#[derive(Debug, Clone, Copy)]
pub struct SecondsReport {
    pub floors: u32,
    pub floor_height_m: f64,
    pub elevator_speed_m_per_min: f64,
    pub mean_leg_fraction: f64,
    pub seconds_exact: f64,
    pub seconds_rounded: f64,
}

impl SecondsReport {
    pub fn for_building(
        building: &BuildingSpec,
        fraction: f64,
    ) -> Result<Self, crate::spatial::SpatialError> {
        Ok(Self {
            floors: building.floors(),
            floor_height_m: building.floor_height_m(),
            elevator_speed_m_per_min: building.elevator_speed_m_per_min(),
            mean_leg_fraction: fraction,
            seconds_exact: crate::spatial::seconds_per_call(building, fraction)?,
            seconds_rounded: crate::spatial::seconds_per_call_rounded(building, fraction)?,
        })
    }
}

impl SpatialReport {
    pub fn to_json_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("schema_version".into(), json!(1));
        map.insert("n_legs".into(), json!(self.n_legs));
        map.insert("seed".into(), json!(self.seed));
        map.insert(
            "total_distance".into(),
            json!(format_stat(self.total_distance)),
        );
        map.insert("mean_leg".into(), json!(format_stat(self.mean_leg)));
        if let Some(m) = &self.empirical {
            map.insert("empirical_moments".into(), moments_value(m));
        }
        map.insert("analytic_moments".into(), moments_value(&self.analytic));
        if let Some(s) = &self.seconds {
            map.insert(
                "seconds_per_call".into(),
                json!({
                    "floors": s.floors,
                    "floor_height_m": format_stat(s.floor_height_m),
                    "elevator_speed_m_per_min": format_stat(s.elevator_speed_m_per_min),
                    "mean_leg_fraction": format_stat(s.mean_leg_fraction),
                    "exact": format_stat(s.seconds_exact),
                    "rounded": format_stat(s.seconds_rounded),
                }),
            );
        }
        Value::Object(map)
    }

    /// The trajectory table: one row per stop; the final stop has no
    /// outgoing leg, so its leg cell is empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,position,leg\n");
        for (i, &p) in self.positions.iter().enumerate() {
            let leg = self
                .legs
                .get(i)
                .map(|&l| format_stat(l))
                .unwrap_or_default();
            out.push_str(&format!("{i},{},{leg}\n", format_stat(p)));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => render_json(&self.to_json_value()),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

pub fn waitress_report(summary: &WaitressSummary, seed: u64, format: OutputFormat) -> String {
    match format {
        OutputFormat::Json => render_json(&json!({
            "schema_version": 1,
            "batches": summary.batches,
            "seed": seed,
            "mean_improvement_ratio": format_stat(summary.mean_improvement_ratio),
            "strict_improvements": summary.strict_improvements,
            "violations": summary.violations,
        })),
        OutputFormat::Csv => format!(
            "batches,mean_improvement_ratio,strict_improvements,violations\n{},{},{},{}\n",
            summary.batches,
            format_stat(summary.mean_improvement_ratio),
            summary.strict_improvements,
            summary.violations
        ),
    }
}

/// Chain evaluation output: exact per-target expectations with optional
/// Monte Carlo cross-check columns.
#[derive(Debug, Clone)]
pub struct ChainEvalReport {
    pub floors: usize,
    pub state_count: usize,
    pub irreducible: bool,
    pub report: HittingTimeReport,
    /// Monte Carlo estimate per target floor, when requested.
    pub mc_check: Option<Vec<(usize, McHittingEstimate)>>,
}

impl ChainEvalReport {
    fn mc_for(&self, floor: usize) -> Option<&McHittingEstimate> {
        self.mc_check
            .as_ref()
            .and_then(|mc| mc.iter().find(|(f, _)| *f == floor))
            .map(|(_, e)| e)
    }

    pub fn to_json_value(&self) -> Value {
        let targets: Vec<Value> = self
            .report
            .per_target
            .iter()
            .map(|(&floor, &value)| {
                let mut entry = Map::new();
                entry.insert("target_floor".into(), json!(floor));
                entry.insert("expected_steps".into(), json!(format_stat(value)));
                if let Some(estimate) = self.mc_for(floor) {
                    entry.insert("mc_mean".into(), json!(format_stat(estimate.mean)));
                    entry.insert(
                        "mc_std_error".into(),
                        json!(format_stat(estimate.std_error)),
                    );
                    entry.insert("mc_episodes".into(), json!(estimate.episodes));
                }
                Value::Object(entry)
            })
            .collect();
        json!({
            "schema_version": 1,
            "floors": self.floors,
            "state_count": self.state_count,
            "irreducible": self.irreducible,
            "targets": targets,
            "objective": format_stat(self.report.objective),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("target_floor,expected_steps,mc_mean,mc_std_error\n");
        for (&floor, &value) in &self.report.per_target {
            let (mc_mean, mc_se) = self
                .mc_for(floor)
                .map(|e| (format_stat(e.mean), format_stat(e.std_error)))
                .unwrap_or_default();
            out.push_str(&format!(
                "{floor},{},{mc_mean},{mc_se}\n",
                format_stat(value)
            ));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => render_json(&self.to_json_value()),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

/// Policy-search output. The JSON document embeds the winning policy in
/// the same explicit per-state form the chain spec files accept, so it can
/// be pasted straight into a spec's `policy` field.
#[derive(Debug, Clone)]
pub struct OptimizeReport {
    pub floors: usize,
    pub baseline_objective: f64,
    pub result: OptimizationResult,
}

impl OptimizeReport {
    pub fn improvement_percent(&self) -> f64 {
        if self.baseline_objective == 0.0 {
            0.0
        } else {
            (self.baseline_objective - self.result.best_objective) / self.baseline_objective
                * 100.0
        }
    }

    pub fn to_json_value(&self) -> Value {
        json!({
            "schema_version": 1,
            "floors": self.floors,
            "baseline_objective": format_stat(self.baseline_objective),
            "best_objective": format_stat(self.result.best_objective),
            "improvement_percent": format_stat(self.improvement_percent()),
            "history": self
                .result
                .history
                .iter()
                .map(|&v| json!(format_stat(v)))
                .collect::<Vec<_>>(),
            "policy": crate::config::policy_to_value(&self.result.best_policy),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_objective\n");
        for (generation, &value) in self.result.history.iter().enumerate() {
            out.push_str(&format!("{generation},{}\n", format_stat(value)));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => render_json(&self.to_json_value()),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

/// Fleet distribution plus per-car and pooled trajectory statistics.
#[derive(Debug, Clone)]
pub struct FleetReport {
    pub elevators: u32,
    pub capacity: u32,
    pub passengers: u32,
    pub legs_per_elevator: usize,
    pub seed: u64,
    pub metrics: FleetMetrics,
}

impl FleetReport {
    pub fn to_json_value(&self) -> Value {
        let per_elevator: Vec<Value> = self
            .metrics
            .per_elevator
            .iter()
            .enumerate()
            .map(|(i, car)| {
                json!({
                    "elevator": i,
                    "passengers": self.metrics.assignment.counts[i],
                    "sub_seed": car.sub_seed,
                    "total_distance": format_stat(car.total_distance),
                    "moments": moments_value(&car.moments),
                })
            })
            .collect();
        json!({
            "schema_version": 1,
            "elevators": self.elevators,
            "capacity": self.capacity,
            "passengers": self.passengers,
            "legs_per_elevator": self.legs_per_elevator,
            "seed": self.seed,
            "counts": self.metrics.assignment.counts,
            "feasible": self.metrics.assignment.feasible,
            "per_elevator": per_elevator,
            "pooled_total_distance": format_stat(self.metrics.pooled_total_distance),
            "pooled_moments": moments_value(&self.metrics.pooled_moments),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("elevator,passengers,total_distance,mean_leg,variance\n");
        for (i, car) in self.metrics.per_elevator.iter().enumerate() {
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                self.metrics.assignment.counts[i],
                format_stat(car.total_distance),
                format_stat(car.moments.mean),
                format_stat(car.moments.variance)
            ));
        }
        out.push_str(&format!(
            "pooled,{},{},{},{}\n",
            self.passengers,
            format_stat(self.metrics.pooled_total_distance),
            format_stat(self.metrics.pooled_moments.mean),
            format_stat(self.metrics.pooled_moments.variance)
        ));
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Json => render_json(&self.to_json_value()),
            OutputFormat::Csv => self.to_csv(),
        }
    }
}

/// Renders a transition matrix document (see the chain module's JSON form).
pub fn render_matrix(matrix: &TransitionMatrix) -> String {
    render_json(&matrix.to_json_value())
}
