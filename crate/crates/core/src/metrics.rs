//! Aggregation of a [`RunRecord`] into summary statistics.
//!
//! Conventions, fixed across every table:
//!
//! - wait statistics run over **all** executions, zero waits included; a
//!   "delay" is an execution whose wait is strictly positive;
//! - a phase's "duration" is wait plus service, so queueing shows up in the
//!   duration tables;
//! - "all" rows merge the underlying populations, they are never means of
//!   means;
//! - standard deviations are population standard deviations;
//! - empty populations report count 0 and zeros throughout.

use crate::model::{Phase, Role, RoleMap, RunRecord, Size, SizeMap};

/// Count, extrema, mean, and population standard deviation of one
/// population.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StatSummary {
    pub count: u64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std_dev: f64,
}

impl StatSummary {
    pub fn from_values(values: &[f64]) -> StatSummary {
        if values.is_empty() {
            return StatSummary::default();
        }
        let count = values.len() as u64;
        let mean = values.iter().sum::<f64>() / count as f64;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        StatSummary {
            count,
            min,
            max,
            mean,
            std_dev: variance.sqrt(),
        }
    }
}

/// Row selectors for tables keyed by phase plus an "all phases" row.
pub const PHASE_ROWS: [Option<Phase>; 6] = [
    Some(Phase::Analysis),
    Some(Phase::Design),
    Some(Phase::Implementation),
    Some(Phase::Testing),
    Some(Phase::Maintenance),
    None,
];

/// Column selectors for tables keyed by size plus an "all sizes" column.
pub const SIZE_COLUMNS: [Option<Size>; 4] =
    [Some(Size::Small), Some(Size::Medium), Some(Size::Large), None];

pub fn phase_label(phase: Option<Phase>) -> &'static str {
    phase.map_or("all", Phase::label)
}

pub fn size_label(size: Option<Size>) -> &'static str {
    size.map_or("all", Size::label)
}

fn phase_index(phase: Option<Phase>) -> usize {
    phase.map_or(5, |p| p as usize)
}

fn size_index(size: Option<Size>) -> usize {
    size.map_or(3, |s| s as usize)
}

/// A value per `(phase | all, size | all)` cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSizeTable<T> {
    cells: Vec<T>,
}

impl<T> PhaseSizeTable<T> {
    pub fn from_fn(mut f: impl FnMut(Option<Phase>, Option<Size>) -> T) -> Self {
        let mut cells = Vec::with_capacity(24);
        for phase in PHASE_ROWS {
            for size in SIZE_COLUMNS {
                cells.push(f(phase, size));
            }
        }
        PhaseSizeTable { cells }
    }

    pub fn get(&self, phase: Option<Phase>, size: Option<Size>) -> &T {
        &self.cells[phase_index(phase) * 4 + size_index(size)]
    }

    fn get_mut(&mut self, phase: Option<Phase>, size: Option<Size>) -> &mut T {
        &mut self.cells[phase_index(phase) * 4 + size_index(size)]
    }
}

/// A value per `(size | all)` column.
#[derive(Clone, Debug, PartialEq)]
pub struct BySize<T> {
    cells: Vec<T>,
}

impl<T> BySize<T> {
    pub fn from_fn(mut f: impl FnMut(Option<Size>) -> T) -> Self {
        BySize {
            cells: SIZE_COLUMNS.iter().map(|&s| f(s)).collect(),
        }
    }

    pub fn get(&self, size: Option<Size>) -> &T {
        &self.cells[size_index(size)]
    }
}

/// Failure accounting for one cell: failed attempts out of total attempts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FailureCell {
    pub failed: u64,
    pub total: u64,
}

impl FailureCell {
    pub fn percentage(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            100.0 * self.failed as f64 / self.total as f64
        }
    }
}

/// One step of a pool's utilization timeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtilizationPoint {
    pub time: f64,
    pub role: Role,
    pub available: u32,
    pub in_use: u32,
    pub queue_len: u32,
}

/// Everything the reports print, aggregated by phase and size.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub n_projects: u32,
    pub seed: u64,
    pub makespan: f64,
    pub size_mix: SizeMap<u32>,
    pub capacities: RoleMap<u32>,
    /// Executions that waited a positive time for their pool.
    pub delay_counts: PhaseSizeTable<u64>,
    /// Wait statistics over every execution, zero waits included.
    pub wait_stats: PhaseSizeTable<StatSummary>,
    /// Statistics of wait + service per execution.
    pub duration_stats: PhaseSizeTable<StatSummary>,
    /// Statistics of completion - arrival per project.
    pub completion_stats: BySize<StatSummary>,
    /// Failed / total attempts; the all-phases row spans every phase,
    /// including analysis, which cannot fail.
    pub failure_table: PhaseSizeTable<FailureCell>,
    /// Pool levels at every change, in chronological order.
    pub timeline: Vec<UtilizationPoint>,
}

/// Reduces a completed run to the tables above. Deterministic: the same
/// record always summarizes to the same summary.
pub fn summarize(record: &RunRecord) -> RunSummary {
    let mut waits = PhaseSizeTable::from_fn(|_, _| Vec::new());
    let mut durations = PhaseSizeTable::from_fn(|_, _| Vec::new());
    let mut delays = PhaseSizeTable::from_fn(|_, _| 0u64);
    let mut failures = PhaseSizeTable::from_fn(|_, _| FailureCell::default());
    let mut completions = vec![Vec::new(); 4];
    let mut size_mix = SizeMap::from_fn(|_| 0u32);

    for project in &record.projects {
        size_mix[project.size] += 1;
        let span = project.completion - project.arrival;
        completions[project.size as usize].push(span);
        completions[3].push(span);
        for execution in &project.executions {
            for phase in [Some(execution.phase), None] {
                for size in [Some(project.size), None] {
                    waits.get_mut(phase, size).push(execution.wait);
                    durations
                        .get_mut(phase, size)
                        .push(execution.wait + execution.service);
                    if execution.wait > 0.0 {
                        *delays.get_mut(phase, size) += 1;
                    }
                    let cell = failures.get_mut(phase, size);
                    cell.total += 1;
                    cell.failed += u64::from(execution.failed);
                }
            }
        }
    }

    let mut timeline: Vec<UtilizationPoint> = Vec::new();
    for role in Role::ALL {
        let capacity = record.config.capacities[role];
        timeline.extend(record.pool_timelines[role].iter().map(|level| UtilizationPoint {
            time: level.time.value(),
            role,
            available: capacity - level.in_use,
            in_use: level.in_use,
            queue_len: level.queue_len,
        }));
    }
    timeline.sort_by(|a, b| a.time.partial_cmp(&b.time).expect("times are finite"));

    RunSummary {
        n_projects: record.config.n_projects,
        seed: record.config.seed,
        makespan: record.makespan.value(),
        size_mix,
        capacities: record.config.capacities,
        delay_counts: delays,
        wait_stats: PhaseSizeTable::from_fn(|p, s| StatSummary::from_values(waits.get(p, s))),
        duration_stats: PhaseSizeTable::from_fn(|p, s| {
            StatSummary::from_values(durations.get(p, s))
        }),
        completion_stats: BySize::from_fn(|s| {
            StatSummary::from_values(&completions[size_index(s)])
        }),
        failure_table: failures,
        timeline,
    }
}
