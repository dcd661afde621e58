//! Helpers shared by the integration suites: a seeded mini-scenario
//! generator and the full battery of per-run invariant checks.

use waterfall_sim::model::{
    rework_target, DemandTable, Phase, PhaseMap, Role, RoleMap, RunRecord, ScenarioConfig, Size,
    SizeMap,
};
use waterfall_sim::stochastic::{RngStream, SizeDistribution};

/// Deterministically generates a small random scenario from `seed`.
pub fn mini_scenario(seed: u64) -> ScenarioConfig {
    let mut rng = RngStream::substream(seed, 0xF00D);
    let mut config = ScenarioConfig { seed, ..ScenarioConfig::default() };
    config.n_projects = rng.uniform_int(1, 20).unwrap() as u32;
    config.arrival_mean = 0.5 + 19.5 * rng.uniform_int(0, 1000).unwrap() as f64 / 1000.0;
    let a = rng.uniform_int(1, 100).unwrap() as f64;
    let b = rng.uniform_int(1, 100).unwrap() as f64;
    let c = rng.uniform_int(1, 100).unwrap() as f64;
    let sum = a + b + c;
    config.size_dist =
        SizeDistribution::new(a / sum, b / sum, 1.0 - a / sum - b / sum).unwrap();
    let mut demand = RoleMap::from_fn(|_| SizeMap::from_array([1, 1, 1]));
    for role in Role::ALL {
        for size in Size::ALL {
            demand[role][size] = rng.uniform_int(1, 4).unwrap() as u32;
        }
    }
    config.demand = DemandTable::new(demand);
    config.capacities = RoleMap::from_fn(|role| {
        config.demand.max_for_role(role) + rng.uniform_int(0, 2).unwrap() as u32
    });
    for phase in Phase::ALL {
        let lo = rng.uniform_int(1, 4).unwrap() as u32;
        let hi = lo + rng.uniform_int(0, 4).unwrap() as u32;
        config.phase_specs[phase].duration_lo = lo;
        config.phase_specs[phase].duration_hi = hi;
        if phase != Phase::Analysis {
            let p = rng.uniform_int(0, 45).unwrap() as f64 / 100.0;
            config.phase_specs[phase].fail_prob = SizeMap::from_array([p, p, p]);
        }
    }
    config
}

/// Runs every structural invariant against a completed record and returns
/// the violations found (empty when the record is sound).
pub fn run_invariant_violations(record: &RunRecord) -> Vec<String> {
    let mut violations = Vec::new();
    let mut complain = |msg: String| violations.push(msg);
    let config = &record.config;

    // Per-project timeline contiguity and the rework walk.
    for project in &record.projects {
        let mut cursor = project.arrival;
        let mut expected = Phase::Analysis;
        for (i, e) in project.executions.iter().enumerate() {
            if e.phase != expected {
                complain(format!(
                    "project {}: execution {i} is {}, expected {}",
                    project.id, e.phase, expected
                ));
                break;
            }
            if (e.requested_at - cursor).abs() > 1e-9 {
                complain(format!(
                    "project {}: execution {i} requested at {} but previous ended at {}",
                    project.id, e.requested_at, cursor
                ));
            }
            if e.wait < 0.0 || (e.started_at - e.requested_at - e.wait).abs() > 1e-9 {
                complain(format!("project {}: execution {i} has inconsistent wait", project.id));
            }
            let spec = config.phase_specs[e.phase];
            if e.service.fract() != 0.0
                || e.service < f64::from(spec.duration_lo)
                || e.service > f64::from(spec.duration_hi)
            {
            complain(format!(
                    "project {}: execution {i} service {} outside {}..={}",
                    project.id, e.service, spec.duration_lo, spec.duration_hi
                ));
            }
            if e.failed && e.phase == Phase::Analysis {
                complain(format!("project {}: analysis failed", project.id));
            }
            if e.units_held != config.demand.required(spec.role, project.size) {
                complain(format!("project {}: execution {i} held wrong batch", project.id));
            }
            cursor = e.ended_at;
            expected = if e.failed {
                rework_target(e.phase).expect("failing phase has a rework target")
            } else {
                match e.phase.next() {
                    Some(next) => next,
                    None => break,
                }
            };
        }
        if (project.completion - cursor).abs() > 1e-9 {
            complain(format!("project {}: completion differs from last execution end", project.id));
        }
        match project.executions.last() {
            Some(last) if last.phase == Phase::Maintenance && !last.failed => {}
            _ => complain(format!("project {}: does not end with successful maintenance", project.id)),
        }
        let total: f64 = project.executions.iter().map(|e| e.wait + e.service).sum();
        if (project.completion - project.arrival - total).abs() > 1e-9 {
            complain(format!("project {}: completion is not the sum of waits and services", project.id));
        }
    }

    // Phase-count identity.
    let n = u64::from(config.n_projects);
    let mut executions = PhaseMap::from_fn(|_| 0u64);
    let mut failures = PhaseMap::from_fn(|_| 0u64);
    for (_, e) in record.executions() {
        executions[e.phase] += 1;
        failures[e.phase] += u64::from(e.failed);
    }
    let expected = PhaseMap::from_array([
        n + failures[Phase::Design],
        n + failures[Phase::Design] + failures[Phase::Implementation],
        n + failures[Phase::Implementation] + failures[Phase::Testing],
        n + failures[Phase::Testing] + failures[Phase::Maintenance],
        n + failures[Phase::Maintenance],
    ]);
    for phase in Phase::ALL {
        if executions[phase] != expected[phase] {
            complain(format!(
                "phase-count identity: {} has {} executions, expected {}",
                phase, executions[phase], expected[phase]
            ));
        }
    }

    // Pool conservation and clock monotonicity of the timelines.
    for role in Role::ALL {
        let timeline = &record.pool_timelines[role];
        if timeline.windows(2).any(|w| w[0].time > w[1].time) {
            complain(format!("{role} timeline is not chronological"));
        }
        if timeline.iter().any(|p| p.in_use > config.capacities[role]) {
            complain(format!("{role} exceeded its capacity"));
        }
        match timeline.last() {
            Some(last) if last.in_use == 0 && last.queue_len == 0 => {}
            _ => complain(format!("{role} did not drain by the end of the run")),
        }
    }

    // FIFO fairness: an earlier request on a pool never starts later than
    // one made after it. Simultaneous requests tie-break internally, so
    // only strictly ordered pairs are compared.
    for role in Role::ALL {
        let mut requests: Vec<(f64, f64)> = record
            .executions()
            .filter(|(_, e)| config.phase_specs[e.phase].role == role)
            .map(|(_, e)| (e.requested_at.value(), e.started_at.value()))
            .collect();
        requests.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
        let mut max_started_before = f64::NEG_INFINITY;
        let mut i = 0;
        while i < requests.len() {
            let mut j = i;
            while j < requests.len() && requests[j].0 == requests[i].0 {
                j += 1;
            }
            let group_min = requests[i..j].iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
            let group_max = requests[i..j].iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
            if group_min < max_started_before - 1e-9 {
                complain(format!("{role}: a later request bypassed an earlier one"));
            }
            max_started_before = max_started_before.max(group_max);
            i = j;
        }
    }

    violations
}
