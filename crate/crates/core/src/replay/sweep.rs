//! Hyperparameter sweeps: one independent replay per `(T, W, ablation)`
//! cell, each starting from an empty case memory. Cells are embarrassingly
//! parallel.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use crate::detector::DetectorConfig;
use crate::model::VerdictKind;
use crate::replay::{
    compute_metrics, compute_savings, simulate_sequential, Dataset, Metrics, ReplayError,
};

/// One abstraction ablation setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AblationSetting {
    pub purification: bool,
    pub masking: bool,
}

impl AblationSetting {
    pub const RAW: Self = Self {
        purification: false,
        masking: false,
    };
    pub const PURIFY_ONLY: Self = Self {
        purification: true,
        masking: false,
    };
    pub const MASK_ONLY: Self = Self {
        purification: false,
        masking: true,
    };
    pub const FULL: Self = Self {
        purification: true,
        masking: true,
    };

    /// The four settings, weakest abstraction first.
    pub fn all() -> [Self; 4] {
        [Self::RAW, Self::PURIFY_ONLY, Self::MASK_ONLY, Self::FULL]
    }

    pub fn label(&self) -> &'static str {
        match (self.purification, self.masking) {
            (false, false) => "raw",
            (true, false) => "purify_only",
            (false, true) => "mask_only",
            (true, true) => "full",
        }
    }
}

/// Result of one sweep cell. Saved fractions are in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepCell {
    pub match_threshold: u32,
    pub min_unique_words: u32,
    pub purification: bool,
    pub masking: bool,
    pub metrics: Metrics,
    pub machine_time_saved_pct: Option<f64>,
    pub executions_saved_pct: Option<f64>,
    pub flaky_by_match: u64,
}

fn cell_configs(
    base: &DetectorConfig,
    t_values: &[u32],
    w_values: &[u32],
    settings: &[AblationSetting],
) -> Vec<DetectorConfig> {
    let mut configs = Vec::with_capacity(settings.len() * t_values.len() * w_values.len());
    for setting in settings {
        for &t in t_values {
            for &w in w_values {
                let mut config = base.clone();
                config.match_threshold = t;
                config.min_unique_words = w;
                config.abstraction = config
                    .abstraction
                    .with_toggles(setting.purification, setting.masking);
                configs.push(config);
            }
        }
    }
    configs
}

fn run_cell(dataset: &Dataset, config: &DetectorConfig) -> Result<SweepCell, ReplayError> {
    // Each cell replays sequentially; parallelism lives across cells.
    let result = simulate_sequential(dataset, config)?;
    let metrics = compute_metrics(&result);
    let savings = compute_savings(&result, dataset).expect("result was produced from this dataset");
    Ok(SweepCell {
        match_threshold: config.match_threshold,
        min_unique_words: config.min_unique_words,
        purification: config.abstraction.purification_enabled,
        masking: config.abstraction.masking_enabled,
        metrics,
        machine_time_saved_pct: savings.machine_time_saved_pct,
        executions_saved_pct: savings.executions_saved_pct,
        flaky_by_match: result.verdict_count(VerdictKind::FlakyByMatch),
    })
}

/// Replays every `(T, W, setting)` combination from a fresh empty memory.
/// Cell order is settings-major, then `T`, then `W`.
pub fn sweep(
    dataset: &Dataset,
    base: &DetectorConfig,
    t_values: &[u32],
    w_values: &[u32],
    settings: &[AblationSetting],
) -> Result<Vec<SweepCell>, ReplayError> {
    let configs = cell_configs(base, t_values, w_values, settings);
    #[cfg(feature = "parallel")]
    {
        configs
            .par_iter()
            .map(|config| run_cell(dataset, config))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs
            .iter()
            .map(|config| run_cell(dataset, config))
            .collect()
    }
}

/// Single-threaded sweep with identical output.
pub fn sweep_sequential(
    dataset: &Dataset,
    base: &DetectorConfig,
    t_values: &[u32],
    w_values: &[u32],
    settings: &[AblationSetting],
) -> Result<Vec<SweepCell>, ReplayError> {
    cell_configs(base, t_values, w_values, settings)
        .iter()
        .map(|config| run_cell(dataset, config))
        .collect()
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

/// Renders sweep cells as CSV with the fixed column order
/// `T,W,purification,masking,precision,recall,f1,time_saved_pct,exec_saved_pct`.
/// Undefined values are left empty; saved fractions are in `[0, 1]`.
pub fn sweep_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(
        "T,W,purification,masking,precision,recall,f1,time_saved_pct,exec_saved_pct\n",
    );
    for cell in cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            cell.match_threshold,
            cell.min_unique_words,
            cell.purification,
            cell.masking,
            fmt_opt(cell.metrics.precision),
            fmt_opt(cell.metrics.recall),
            fmt_opt(cell.metrics.f1),
            fmt_opt(cell.machine_time_saved_pct),
            fmt_opt(cell.executions_saved_pct),
        ));
    }
    out
}
