//! Independent runs over a decreasing list of viscosities.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use vll_core::rates::loglog_slope;

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, f17, write_atomic, write_json};
use crate::run::{execute, write_outputs, RunOutcome};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub r1: f64,
    pub cells: usize,
    pub metric: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "ET")]
    pub et: f64,
    pub kato_monitor: f64,
    pub lgamma_monitor: f64,
    pub gronwall_c: f64,
    pub gronwall_holds: bool,
    pub flags: Vec<String>,
}

impl SweepRow {
    pub fn from_outcome(o: &RunOutcome) -> Self {
        let r = &o.report;
        Self {
            epsilon: o.params.epsilon,
            r1: o.params.drag,
            cells: o.trajectory.grid.cells(),
            metric: r.metric.sup,
            e0: r.e0,
            et: *r.energy.energy.last().expect("non-empty series"),
            kato_monitor: r.conditions.kato_monitor,
            lgamma_monitor: r.conditions.lgamma_monitor,
            gronwall_c: r.gronwall.c,
            gronwall_holds: r.gronwall.bound_holds,
            flags: o.flags.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    /// Log-log slope of the metric against `ε`; absent for a single row.
    pub metric_slope: Option<f64>,
    pub metric_decreasing: bool,
    pub kato_decreasing: bool,
    pub lgamma_decreasing: bool,
    pub e0_decreasing: bool,
    /// `max C / min C` over the rows; 1 when every fit is zero.
    pub gronwall_c_ratio: f64,
    pub gronwall_all_hold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Ordered by `ε` descending.
    pub rows: Vec<SweepRow>,
    pub summary: SweepSummary,
}

/// Strictly smaller at every smaller `ε` (rows are in descending `ε`).
pub fn strictly_decreasing_in_eps(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

pub fn summarize(rows: &[SweepRow]) -> SweepSummary {
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let metric = col(|r| r.metric);
    let eps = col(|r| r.epsilon);
    let metric_slope = if rows.len() >= 2 { loglog_slope(&eps, &metric).ok() } else { None };
    let cs = col(|r| r.gronwall_c);
    let cmax = cs.iter().copied().fold(0.0_f64, f64::max);
    let cmin = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let gronwall_c_ratio = if cmax == 0.0 {
        1.0
    } else if cmin > 0.0 {
        cmax / cmin
    } else {
        f64::INFINITY
    };
    SweepSummary {
        metric_slope,
        metric_decreasing: strictly_decreasing_in_eps(&metric),
        kato_decreasing: strictly_decreasing_in_eps(&col(|r| r.kato_monitor)),
        lgamma_decreasing: strictly_decreasing_in_eps(&col(|r| r.lgamma_monitor)),
        e0_decreasing: strictly_decreasing_in_eps(&col(|r| r.e0)),
        gronwall_c_ratio,
        gronwall_all_hold: rows.iter().all(|r| r.gronwall_holds),
    }
}

/// Worker count: `--jobs` if given, else all cores, capped by `VLL_THREADS`.
pub fn thread_count(jobs: Option<usize>) -> usize {
    let base = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let cap = std::env::var("VLL_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    cap.map_or(base, |c| base.min(c)).max(1)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    write_atomic(path, |w| {
        use std::io::Write;
        writeln!(w, "epsilon,r1,metric,E0,ET,kato_monitor,lgamma_monitor,gronwall_C")?;
        for r in rows {
            let vals = [r.epsilon, r.r1, r.metric, r.e0, r.et, r.kato_monitor, r.lgamma_monitor, r.gronwall_c];
            writeln!(w, "{}", vals.iter().map(|&v| f17(v)).collect::<Vec<_>>().join(","))?;
        }
        Ok(())
    })
}

/// Runs every `ε` (in parallel), writes `sweep.csv`, `sweep_summary.json`
/// and one `run_<k>` directory per row. On a failing run the rows that did
/// finish are still written before the error is returned.
pub fn sweep(config: &RunConfig, eps_list: &[f64], jobs: Option<usize>, out: Option<&Path>) -> Result<SweepResult> {
    let mut cfg = config.clone();
    cfg.sweep.epsilons = eps_list.to_vec();
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count(jobs))
        .build()
        .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?;
    if let Some(dir) = out {
        ensure_dir(dir)?;
    }
    let results: Vec<Result<SweepRow>> = pool.install(|| {
        eps_list
            .par_iter()
            .enumerate()
            .map(|(k, &eps)| {
                let o = execute(&cfg.for_epsilon(eps))?;
                if let Some(dir) = out {
                    write_outputs(&o, &dir.join(format!("run_{k}")))?;
                }
                Ok(SweepRow::from_outcome(&o))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut first_err = None;
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let summary = summarize(&rows);
    let result = SweepResult { rows, summary };
    if let Some(dir) = out {
        write_sweep_csv(&dir.join("sweep.csv"), &result.rows)?;
        write_json(&dir.join("sweep_summary.json"), &result)?;
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(result),
    }
}
