//! Text and CSV rendering of a [`RunSummary`].
//!
//! All numeric cells print with three decimal places; counts stay integral
//! in the CSV files. Rendering is a pure function of the summary, so the
//! same run always produces byte-identical files.
//!
//! CSV schemas (UTF-8, header row, `.` decimal separator):
//!
//! - `waits.csv`: `phase,size,executions,delays,min_wait,max_wait,mean_wait,std_dev`
//! - `completions.csv`: `size,projects,min,max,mean,std_dev`
//! - `phase_durations.csv`: `phase,size,executions,min,max,mean,std_dev`
//!   (duration = wait + service)
//! - `failures.csv`: `phase,size,failed,total,percentage` (the analysis rows
//!   always report 0 failed, so the `all` row is the sum of the phase rows)
//! - `utilization.csv`: `time,role,available,in_use,queue_len`, one row per
//!   pool-level change

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::metrics::{phase_label, size_label, RunSummary, StatSummary, PHASE_ROWS, SIZE_COLUMNS};
use crate::model::Size;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn f3(value: f64) -> String {
    format!("{value:.3}")
}

pub fn waits_csv(summary: &RunSummary) -> String {
    let mut out = String::from("phase,size,executions,delays,min_wait,max_wait,mean_wait,std_dev\n");
    for phase in PHASE_ROWS {
        for size in SIZE_COLUMNS {
            let stats = summary.wait_stats.get(phase, size);
            let delays = summary.delay_counts.get(phase, size);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                phase_label(phase),
                size_label(size),
                stats.count,
                delays,
                f3(stats.min),
                f3(stats.max),
                f3(stats.mean),
                f3(stats.std_dev)
            )
            .expect("writing to string");
        }
    }
    out
}

pub fn completions_csv(summary: &RunSummary) -> String {
    let mut out = String::from("size,projects,min,max,mean,std_dev\n");
    for size in SIZE_COLUMNS {
        let stats = summary.completion_stats.get(size);
        writeln!(
            out,
            "{},{},{},{},{},{}",
            size_label(size),
            stats.count,
            f3(stats.min),
            f3(stats.max),
            f3(stats.mean),
            f3(stats.std_dev)
        )
        .expect("writing to string");
    }
    out
}

pub fn phase_durations_csv(summary: &RunSummary) -> String {
    let mut out = String::from("phase,size,executions,min,max,mean,std_dev\n");
    for phase in PHASE_ROWS {
        for size in SIZE_COLUMNS {
            let stats = summary.duration_stats.get(phase, size);
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                phase_label(phase),
                size_label(size),
                stats.count,
                f3(stats.min),
                f3(stats.max),
                f3(stats.mean),
                f3(stats.std_dev)
            )
            .expect("writing to string");
        }
    }
    out
}

pub fn failures_csv(summary: &RunSummary) -> String {
    let mut out = String::from("phase,size,failed,total,percentage\n");
    for phase in PHASE_ROWS {
        for size in SIZE_COLUMNS {
            let cell = summary.failure_table.get(phase, size);
            writeln!(
                out,
                "{},{},{},{},{}",
                phase_label(phase),
                size_label(size),
                cell.failed,
                cell.total,
                f3(cell.percentage())
            )
            .expect("writing to string");
        }
    }
    out
}

pub fn utilization_csv(summary: &RunSummary) -> String {
    let mut out = String::from("time,role,available,in_use,queue_len\n");
    for point in &summary.timeline {
        writeln!(
            out,
            "{},{},{},{},{}",
            f3(point.time),
            point.role.label(),
            point.available,
            point.in_use,
            point.queue_len
        )
        .expect("writing to string");
    }
    out
}

/// Renders the human-readable report: delay and wait statistics, completion
/// times, phase durations, and failure accounting, each by project size.
/// Every cell prints with three decimals, counts included.
pub fn render_text(summary: &RunSummary) -> String {
    let mut out = String::new();
    let mix = &summary.size_mix;
    writeln!(out, "Waterfall run summary").unwrap();
    writeln!(out, "=====================").unwrap();
    writeln!(
        out,
        "projects:  {} (small {}, medium {}, large {})",
        summary.n_projects,
        mix[Size::Small],
        mix[Size::Medium],
        mix[Size::Large]
    )
    .unwrap();
    writeln!(out, "seed:      {}", summary.seed).unwrap();
    writeln!(out, "makespan:  {} units", f3(summary.makespan)).unwrap();

    let header = format!(
        "{:<16} {:<8} {:>10} {:>10} {:>10} {:>10}",
        "phase", "stat", "small", "medium", "large", "all"
    );

    writeln!(out, "\nResource waits (times delayed; wait to acquire the pool)").unwrap();
    writeln!(out, "{header}").unwrap();
    for phase in PHASE_ROWS {
        let row = |stat: &str, values: [f64; 4]| {
            format!(
                "{:<16} {:<8} {:>10} {:>10} {:>10} {:>10}",
                if stat == "delays" { phase_label(phase) } else { "" },
                stat,
                f3(values[0]),
                f3(values[1]),
                f3(values[2]),
                f3(values[3])
            )
        };
        let pick = |f: &dyn Fn(Option<Size>) -> f64| {
            [
                f(Some(Size::Small)),
                f(Some(Size::Medium)),
                f(Some(Size::Large)),
                f(None),
            ]
        };
        let delays = pick(&|s| *summary.delay_counts.get(phase, s) as f64);
        let max = pick(&|s| summary.wait_stats.get(phase, s).max);
        let mean = pick(&|s| summary.wait_stats.get(phase, s).mean);
        let std = pick(&|s| summary.wait_stats.get(phase, s).std_dev);
        writeln!(out, "{}", row("delays", delays)).unwrap();
        writeln!(out, "{}", row("max", max)).unwrap();
        writeln!(out, "{}", row("mean", mean)).unwrap();
        writeln!(out, "{}", row("std dev", std)).unwrap();
    }

    writeln!(out, "\nProject completion times (completion - arrival)").unwrap();
    writeln!(
        out,
        "{:<8} {:>10} {:>10} {:>10} {:>10}",
        "stat", "small", "medium", "large", "all"
    )
    .unwrap();
    for (stat, f) in [
        ("min", &(|s: &StatSummary| s.min) as &dyn Fn(&StatSummary) -> f64),
        ("max", &|s: &StatSummary| s.max),
        ("mean", &|s: &StatSummary| s.mean),
        ("std dev", &|s: &StatSummary| s.std_dev),
    ] {
        writeln!(
            out,
            "{:<8} {:>10} {:>10} {:>10} {:>10}",
            stat,
            f3(f(summary.completion_stats.get(Some(Size::Small)))),
            f3(f(summary.completion_stats.get(Some(Size::Medium)))),
            f3(f(summary.completion_stats.get(Some(Size::Large)))),
            f3(f(summary.completion_stats.get(None)))
        )
        .unwrap();
    }

    writeln!(out, "\nPhase completion times (wait + service per execution)").unwrap();
    writeln!(out, "{header}").unwrap();
    for phase in PHASE_ROWS {
        for (stat, f) in [
            ("min", &(|s: &StatSummary| s.min) as &dyn Fn(&StatSummary) -> f64),
            ("max", &|s: &StatSummary| s.max),
            ("mean", &|s: &StatSummary| s.mean),
            ("std dev", &|s: &StatSummary| s.std_dev),
        ] {
            writeln!(
                out,
                "{:<16} {:<8} {:>10} {:>10} {:>10} {:>10}",
                if stat == "min" { phase_label(phase) } else { "" },
                stat,
                f3(f(summary.duration_stats.get(phase, Some(Size::Small)))),
                f3(f(summary.duration_stats.get(phase, Some(Size::Medium)))),
                f3(f(summary.duration_stats.get(phase, Some(Size::Large)))),
                f3(f(summary.duration_stats.get(phase, None)))
            )
            .unwrap();
        }
    }

    writeln!(out, "\nPhase failures (analysis cannot fail; the all row spans every attempt)").unwrap();
    writeln!(out, "{header}").unwrap();
    for phase in PHASE_ROWS {
        if phase == Some(crate::model::Phase::Analysis) {
            continue;
        }
        let pick = |f: &dyn Fn(Option<Size>) -> f64| {
            [
                f(Some(Size::Small)),
                f(Some(Size::Medium)),
                f(Some(Size::Large)),
                f(None),
            ]
        };
        let failed = pick(&|s| summary.failure_table.get(phase, s).failed as f64);
        let total = pick(&|s| summary.failure_table.get(phase, s).total as f64);
        let pct = pick(&|s| summary.failure_table.get(phase, s).percentage());
        for (stat, values) in [("failed", failed), ("attempts", total), ("percent", pct)] {
            writeln!(
                out,
                "{:<16} {:<8} {:>10} {:>10} {:>10} {:>10}",
                if stat == "failed" { phase_label(phase) } else { "" },
                stat,
                f3(values[0]),
                f3(values[1]),
                f3(values[2]),
                f3(values[3])
            )
            .unwrap();
        }
    }
    out
}

/// Writes the five CSV files plus `report.txt` into `directory`, creating
/// it if needed. Returns the written paths.
pub fn write_reports(summary: &RunSummary, directory: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(directory).map_err(|source| ReportError::Io {
        path: directory.to_path_buf(),
        source,
    })?;
    let files = [
        ("waits.csv", waits_csv(summary)),
        ("completions.csv", completions_csv(summary)),
        ("phase_durations.csv", phase_durations_csv(summary)),
        ("failures.csv", failures_csv(summary)),
        ("utilization.csv", utilization_csv(summary)),
        ("report.txt", render_text(summary)),
    ];
    let mut written = Vec::with_capacity(files.len());
    for (name, content) in files {
        let path = directory.join(name);
        fs::write(&path, content).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        written.push(path);
    }
    Ok(written)
}

/// One line of the cross-replication aggregate.
#[derive(Clone, Copy, Debug)]
pub struct ReplicationRow {
    pub replication: u32,
    pub seed: u64,
    pub makespan: f64,
    pub completion_mean: f64,
    pub completion_max: f64,
    pub total_delays: u64,
}

impl ReplicationRow {
    pub fn from_summary(replication: u32, summary: &RunSummary) -> ReplicationRow {
        let completions = summary.completion_stats.get(None);
        ReplicationRow {
            replication,
            seed: summary.seed,
            makespan: summary.makespan,
            completion_mean: completions.mean,
            completion_max: completions.max,
            total_delays: *summary.delay_counts.get(None, None),
        }
    }
}

/// `aggregate.csv`: one row per replication plus a final `mean` row.
pub fn aggregate_csv(rows: &[ReplicationRow]) -> String {
    let mut out =
        String::from("replication,seed,makespan,completion_mean,completion_max,total_delays\n");
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            row.replication,
            row.seed,
            f3(row.makespan),
            f3(row.completion_mean),
            f3(row.completion_max),
            row.total_delays
        )
        .expect("writing to string");
    }
    if !rows.is_empty() {
        let n = rows.len() as f64;
        writeln!(
            out,
            "mean,,{},{},{},{}",
            f3(rows.iter().map(|r| r.makespan).sum::<f64>() / n),
            f3(rows.iter().map(|r| r.completion_mean).sum::<f64>() / n),
            f3(rows.iter().map(|r| r.completion_max).sum::<f64>() / n),
            f3(rows.iter().map(|r| r.total_delays as f64).sum::<f64>() / n)
        )
        .expect("writing to string");
    }
    out
}
