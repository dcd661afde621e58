//! Stepwise search for staffing levels with zero resource waits.
//!
//! Each iteration simulates the scenario at the current levels under a fresh
//! seed (`master_seed + run_index`, wrapping), then raises the level of every
//! role whose pool delayed at least one acquisition. A streak of
//! `clean_threshold` consecutive delay-free runs ends the search; levels
//! never decrease. The sequential mode instead raises only the first lacking
//! role in phase order each iteration, for comparison experiments.

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{run_scenario, ConfigError, ModelError, Role, RoleMap, ScenarioConfig};

/// Whether one iteration raises every delayed role or only the first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IncrementMode {
    #[default]
    Simultaneous,
    Sequential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    /// Allowed level range per role; the search clamps at the maximum.
    pub bounds: RoleMap<(u32, u32)>,
    pub step: u32,
    /// Consecutive delay-free runs required to declare success.
    pub clean_threshold: u32,
    pub max_runs: u32,
    pub master_seed: u64,
    pub mode: IncrementMode,
}

pub const DEFAULT_MAX_LEVEL: u32 = 1000;

impl OptimizerConfig {
    /// Default search for a scenario: start at its capacities, step 1,
    /// three clean runs, at most 200 runs.
    pub fn for_scenario(base: &ScenarioConfig, master_seed: u64) -> OptimizerConfig {
        OptimizerConfig {
            bounds: RoleMap::from_fn(|role| {
                let level = base.capacities[role];
                (level, DEFAULT_MAX_LEVEL.max(level))
            }),
            step: 1,
            clean_threshold: 3,
            max_runs: 200,
            master_seed,
            mode: IncrementMode::Simultaneous,
        }
    }
}

/// One simulated run of the search: the levels it used, the delays it saw,
/// and the streak after evaluating it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerIteration {
    pub run_index: u32,
    pub seed: u64,
    pub levels: RoleMap<u32>,
    pub delays: RoleMap<u64>,
    pub clean_streak: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerResult {
    pub levels: RoleMap<u32>,
    pub runs_used: u32,
    /// False when the run budget ran out before a full clean streak.
    pub converged: bool,
    pub trace: Vec<OptimizerIteration>,
}

impl OptimizerResult {
    /// The trace as CSV: `run,role,level,delays,clean_streak`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("run,role,level,delays,clean_streak\n");
        for iteration in &self.trace {
            for role in Role::ALL {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    iteration.run_index,
                    role.label(),
                    iteration.levels[role],
                    iteration.delays[role],
                    iteration.clean_streak
                )
                .expect("writing to string");
            }
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("optimizer: {0}")]
    InvalidParams(String),
    #[error("bounds.{role}: maximum {max} is below the large demand {needed}; zero-wait is unreachable")]
    InfeasibleBounds { role: Role, max: u32, needed: u32 },
    #[error("capacities.{role}: starting level {level} outside bounds [{min}, {max}]")]
    BaseOutsideBounds {
        role: Role,
        level: u32,
        min: u32,
        max: u32,
    },
}

/// Runs the stepwise search and returns the final levels, the number of
/// simulation runs used, and the full per-iteration trace.
pub fn find_zero_wait(
    base: &ScenarioConfig,
    opt: &OptimizerConfig,
) -> Result<OptimizerResult, OptimizerError> {
    if opt.step == 0 {
        return Err(OptimizerError::InvalidParams("step must be at least 1".into()));
    }
    if opt.clean_threshold == 0 {
        return Err(OptimizerError::InvalidParams(
            "clean_threshold must be at least 1".into(),
        ));
    }
    if opt.max_runs < opt.clean_threshold {
        return Err(OptimizerError::InvalidParams(format!(
            "max_runs {} is below clean_threshold {}",
            opt.max_runs, opt.clean_threshold
        )));
    }
    for role in Role::ALL {
        let (_, max) = opt.bounds[role];
        let needed = base.demand.max_for_role(role);
        if max < needed {
            return Err(OptimizerError::InfeasibleBounds { role, max, needed });
        }
    }
    base.validate()?;
    for role in Role::ALL {
        let (min, max) = opt.bounds[role];
        let level = base.capacities[role];
        if level < min || level > max {
            return Err(OptimizerError::BaseOutsideBounds { role, level, min, max });
        }
    }

    let mut levels = base.capacities;
    let mut streak = 0u32;
    let mut trace = Vec::new();
    for run_index in 0..opt.max_runs {
        let seed = opt.master_seed.wrapping_add(u64::from(run_index));
        let config = base.clone().with_capacities(levels).with_seed(seed);
        let record = run_scenario(&config)?;
        let delays = record.delayed_acquisitions_by_role();
        let clean = Role::ALL.iter().all(|&role| delays[role] == 0);
        if clean {
            streak += 1;
        } else {
            streak = 0;
            match opt.mode {
                IncrementMode::Simultaneous => {
                    for role in Role::ALL {
                        if delays[role] > 0 {
                            levels[role] = (levels[role] + opt.step).min(opt.bounds[role].1);
                        }
                    }
                }
                IncrementMode::Sequential => {
                    if let Some(&role) = Role::ALL.iter().find(|&&r| delays[r] > 0) {
                        levels[role] = (levels[role] + opt.step).min(opt.bounds[role].1);
                    }
                }
            }
        }
        trace.push(OptimizerIteration {
            run_index,
            seed,
            levels: record.config.capacities,
            delays,
            clean_streak: streak,
        });
        if streak == opt.clean_threshold {
            return Ok(OptimizerResult {
                levels,
                runs_used: run_index + 1,
                converged: true,
                trace,
            });
        }
    }
    Ok(OptimizerResult {
        levels,
        runs_used: opt.max_runs,
        converged: false,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Phase, SizeMap};

    /// Two near-simultaneous projects, every pool a single unit, every
    /// phase one unit of work: contention cascades one pool per run.
    fn contended_pair() -> ScenarioConfig {
        let mut config = ScenarioConfig::default().with_projects(2);
        config.arrival_mean = 1e-3;
        config.capacities = RoleMap::from_fn(|_| 1);
        config.demand = crate::model::DemandTable::new(RoleMap::from_fn(|_| {
            SizeMap::from_array([1, 1, 1])
        }));
        for phase in Phase::ALL {
            config.phase_specs[phase].duration_lo = 1;
            config.phase_specs[phase].duration_hi = 1;
            config.phase_specs[phase].fail_prob = SizeMap::from_array([0.0, 0.0, 0.0]);
        }
        config
    }

    #[test]
    fn over_provisioned_base_returns_unchanged_after_clean_streak() {
        let base = ScenarioConfig::default().with_generous_capacities();
        let opt = OptimizerConfig::for_scenario(&base, 11);
        let result = find_zero_wait(&base, &opt).unwrap();
        assert!(result.converged);
        assert_eq!(result.runs_used, 3);
        assert_eq!(result.levels, base.capacities);
        assert_eq!(result.trace.len(), 3);
        assert!(result.trace.iter().all(|i| i.levels == base.capacities));
    }

    #[test]
    fn contended_pool_gets_one_more_unit() {
        let base = contended_pair();
        let opt = OptimizerConfig::for_scenario(&base, 5);
        let result = find_zero_wait(&base, &opt).unwrap();
        assert!(result.converged);
        // The second project first queues on analysts; raising that pool
        // shifts the collision one phase down, so every pool ends at 2
        // after five increment runs and three clean ones.
        for role in Role::ALL {
            assert_eq!(result.levels[role], 2, "{role}");
        }
        assert_eq!(result.runs_used, 8);
        let final_runs = &result.trace[result.trace.len() - 3..];
        assert!(final_runs
            .iter()
            .all(|i| Role::ALL.iter().all(|&r| i.delays[r] == 0 && i.levels[r] == 2)));
    }

    #[test]
    fn levels_never_decrease() {
        let base = contended_pair();
        let opt = OptimizerConfig::for_scenario(&base, 3);
        let result = find_zero_wait(&base, &opt).unwrap();
        for pair in result.trace.windows(2) {
            for role in Role::ALL {
                assert!(pair[0].levels[role] <= pair[1].levels[role]);
            }
        }
    }

    #[test]
    fn clamped_bounds_exhaust_the_budget() {
        let base = contended_pair();
        let mut opt = OptimizerConfig::for_scenario(&base, 5);
        opt.bounds = RoleMap::from_fn(|_| (1, 1));
        opt.max_runs = 6;
        let result = find_zero_wait(&base, &opt).unwrap();
        assert!(!result.converged);
        assert_eq!(result.runs_used, 6);
        assert_eq!(result.trace.len(), 6);
        assert!(Role::ALL.iter().all(|&r| result.levels[r] == 1));
    }

    #[test]
    fn sequential_mode_raises_one_role_per_run() {
        let base = contended_pair();
        let mut opt = OptimizerConfig::for_scenario(&base, 5);
        opt.mode = IncrementMode::Sequential;
        let result = find_zero_wait(&base, &opt).unwrap();
        assert!(result.converged);
        for pair in result.trace.windows(2) {
            let raised: u32 = Role::ALL
                .iter()
                .map(|&r| pair[1].levels[r] - pair[0].levels[r])
                .sum();
            assert!(raised <= 1);
        }
    }

    #[test]
    fn bound_below_large_demand_is_infeasible() {
        let base = ScenarioConfig::default();
        let mut opt = OptimizerConfig::for_scenario(&base, 1);
        opt.bounds[Role::Programmers] = (5, 8);
        let err = find_zero_wait(&base, &opt).unwrap_err();
        assert!(matches!(
            err,
            OptimizerError::InfeasibleBounds { role: Role::Programmers, max: 8, needed: 10 }
        ));
    }

    #[test]
    fn base_outside_bounds_rejected_up_front() {
        let base = ScenarioConfig::default();
        let mut opt = OptimizerConfig::for_scenario(&base, 1);
        opt.bounds[Role::Testers] = (25, 40);
        let err = find_zero_wait(&base, &opt).unwrap_err();
        assert!(matches!(
            err,
            OptimizerError::BaseOutsideBounds { role: Role::Testers, level: 20, .. }
        ));
    }

    #[test]
    fn trace_csv_schema() {
        let base = ScenarioConfig::default().with_generous_capacities();
        let opt = OptimizerConfig::for_scenario(&base, 2);
        let result = find_zero_wait(&base, &opt).unwrap();
        let csv = result.trace_csv();
        assert!(csv.starts_with("run,role,level,delays,clean_streak\n"));
        assert_eq!(csv.lines().count(), 1 + result.trace.len() * 5);
    }

    #[test]
    fn bad_parameters_rejected() {
        let base = ScenarioConfig::default();
        let mut opt = OptimizerConfig::for_scenario(&base, 1);
        opt.step = 0;
        assert!(matches!(
            find_zero_wait(&base, &opt),
            Err(OptimizerError::InvalidParams(_))
        ));
        opt.step = 1;
        opt.clean_threshold = 5;
        opt.max_runs = 4;
        assert!(matches!(
            find_zero_wait(&base, &opt),
            Err(OptimizerError::InvalidParams(_))
        ));
    }
}
