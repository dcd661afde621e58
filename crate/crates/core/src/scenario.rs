//! TOML scenario files: parsing, defaults, overrides, and serialization.
//!
//! Every key is optional; omitted keys fall back to the baseline software
//! house of [`ScenarioConfig::default`]. A full document looks like:
//!
//! ```toml
//! seed = 42            # 0..=2^63-1 in files; the CLI flag takes any u64
//! projects = 100
//! arrival_mean = 35.0
//!
//! [size_mix]
//! small = 0.48
//! medium = 0.25
//! large = 0.27
//!
//! [capacities]
//! analysts = 5
//! designers = 5
//! programmers = 10
//! testers = 20
//! maintenance = 5
//!
//! [fail_prob]          # failure probability by project size
//! small = 0.10
//! medium = 0.20
//! large = 0.30
//!
//! [demand.programmers] # units required by project size, one table per role
//! small = 2
//! medium = 4
//! large = 10
//!
//! [phases.implementation]
//! duration = [15, 20]  # integer units, inclusive
//! # role = "programmers"         # pool override
//! # [phases.implementation.fail_prob]  # per-phase probability override
//! # small = 0.05
//! ```
//!
//! Overrides of the form `key=value` (dotted paths, e.g.
//! `capacities.programmers=12`) patch the document before it is parsed, so
//! they are validated exactly like file contents and unknown keys are
//! rejected either way.

use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ConfigError, Phase, Role, ScenarioConfig, Size};
use crate::stochastic::SizeDistribution;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: io::Error },
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("override '{0}': expected key=value")]
    BadOverride(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct ScenarioFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    projects: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    arrival_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    size_mix: Option<SizeMixFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    capacities: Option<ByRole<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fail_prob: Option<BySizeFile<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    demand: Option<ByRole<BySizeFile<u32>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phases: Option<PhasesFile>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SizeMixFile {
    small: f64,
    medium: f64,
    large: f64,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct BySizeFile<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    small: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    medium: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    large: Option<T>,
}

impl<T: Copy> BySizeFile<T> {
    fn get(&self, size: Size) -> Option<T> {
        match size {
            Size::Small => self.small,
            Size::Medium => self.medium,
            Size::Large => self.large,
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct ByRole<T> {
    #[serde(skip_serializing_if = "Option::is_none")]
    analysts: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    designers: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    programmers: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    testers: Option<T>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maintenance: Option<T>,
}

impl<T> ByRole<T> {
    fn get(&self, role: Role) -> Option<&T> {
        match role {
            Role::Analysts => self.analysts.as_ref(),
            Role::Designers => self.designers.as_ref(),
            Role::Programmers => self.programmers.as_ref(),
            Role::Testers => self.testers.as_ref(),
            Role::Maintenance => self.maintenance.as_ref(),
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct PhasesFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis: Option<PhaseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    design: Option<PhaseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    implementation: Option<PhaseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    testing: Option<PhaseFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    maintenance: Option<PhaseFile>,
}

impl PhasesFile {
    fn get(&self, phase: Phase) -> Option<&PhaseFile> {
        match phase {
            Phase::Analysis => self.analysis.as_ref(),
            Phase::Design => self.design.as_ref(),
            Phase::Implementation => self.implementation.as_ref(),
            Phase::Testing => self.testing.as_ref(),
            Phase::Maintenance => self.maintenance.as_ref(),
        }
    }
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
struct PhaseFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    role: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration: Option<[u32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fail_prob: Option<BySizeFile<f64>>,
}

fn parse_role(name: &str) -> Option<Role> {
    Role::ALL.into_iter().find(|role| role.label() == name)
}

fn resolve(file: ScenarioFile) -> Result<ScenarioConfig, ScenarioError> {
    let mut config = ScenarioConfig::default();
    let mut issues = Vec::new();
    if let Some(seed) = file.seed {
        config.seed = seed;
    }
    if let Some(projects) = file.projects {
        config.n_projects = projects;
    }
    if let Some(mean) = file.arrival_mean {
        config.arrival_mean = mean;
    }
    if let Some(mix) = &file.size_mix {
        match SizeDistribution::new(mix.small, mix.medium, mix.large) {
            Ok(dist) => config.size_dist = dist,
            Err(e) => issues.push(format!("size_mix: {e}")),
        }
    }
    if let Some(capacities) = &file.capacities {
        for role in Role::ALL {
            if let Some(&units) = capacities.get(role) {
                config.capacities[role] = units;
            }
        }
    }
    if let Some(demand) = &file.demand {
        for role in Role::ALL {
            if let Some(row) = demand.get(role) {
                let mut sizes = config.demand.row(role);
                for size in Size::ALL {
                    if let Some(units) = row.get(size) {
                        sizes[size] = units;
                    }
                }
                config.demand.set_row(role, sizes);
            }
        }
    }
    if let Some(shared) = &file.fail_prob {
        for phase in Phase::ALL {
            if phase == Phase::Analysis {
                continue;
            }
            for size in Size::ALL {
                if let Some(p) = shared.get(size) {
                    config.phase_specs[phase].fail_prob[size] = p;
                }
            }
        }
    }
    if let Some(phases) = &file.phases {
        for phase in Phase::ALL {
            let Some(entry) = phases.get(phase) else { continue };
            if let Some(role_name) = &entry.role {
                match parse_role(role_name) {
                    Some(role) => config.phase_specs[phase].role = role,
                    None => issues.push(format!(
                        "phases.{}.role: unknown role '{role_name}'",
                        phase.label()
                    )),
                }
            }
            if let Some([lo, hi]) = entry.duration {
                config.phase_specs[phase].duration_lo = lo;
                config.phase_specs[phase].duration_hi = hi;
            }
            if let Some(probs) = &entry.fail_prob {
                for size in Size::ALL {
                    if let Some(p) = probs.get(size) {
                        config.phase_specs[phase].fail_prob[size] = p;
                    }
                }
            }
        }
    }
    if issues.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError { issues }.into())
    }
}

fn parse_scalar(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut table) => table.remove("v").expect("key v was just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ScenarioError> {
    let Some((path, raw_value)) = spec.split_once('=') else {
        return Err(ScenarioError::BadOverride(spec.to_string()));
    };
    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ScenarioError::BadOverride(spec.to_string()));
    }
    let mut cursor = table;
    for segment in &segments[..segments.len() - 1] {
        let entry = cursor
            .entry(segment.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry.as_table_mut() {
            Some(next) => cursor = next,
            None => return Err(ScenarioError::BadOverride(spec.to_string())),
        }
    }
    let leaf = segments.last().expect("segments are non-empty");
    cursor.insert(leaf.to_string(), parse_scalar(raw_value.trim()));
    Ok(())
}

/// Parses scenario text, applies `key=value` overrides, and validates the
/// resolved configuration.
pub fn parse_scenario(text: &str, overrides: &[String]) -> Result<ScenarioConfig, ScenarioError> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))?;
    for spec in overrides {
        apply_override(&mut table, spec)?;
    }
    let file: ScenarioFile = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))?;
    let config = resolve(file)?;
    config.validate()?;
    Ok(config)
}

/// Loads a scenario file from disk; see [`parse_scenario`].
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<ScenarioConfig, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, overrides)
}

/// Renders the full configuration as an explicit TOML document (every key
/// written out, field order fixed).
pub fn to_toml_string(config: &ScenarioConfig) -> String {
    let by_size_u32 = |f: &dyn Fn(Size) -> u32| BySizeFile {
        small: Some(f(Size::Small)),
        medium: Some(f(Size::Medium)),
        large: Some(f(Size::Large)),
    };
    let specs = &config.phase_specs;
    let phase_file = |phase: Phase| {
        let spec = specs[phase];
        Some(PhaseFile {
            role: Some(spec.role.label().to_string()),
            duration: Some([spec.duration_lo, spec.duration_hi]),
            fail_prob: Some(BySizeFile {
                small: Some(spec.fail_prob[Size::Small]),
                medium: Some(spec.fail_prob[Size::Medium]),
                large: Some(spec.fail_prob[Size::Large]),
            }),
        })
    };
    let file = ScenarioFile {
        seed: Some(config.seed),
        projects: Some(config.n_projects),
        arrival_mean: Some(config.arrival_mean),
        size_mix: Some(SizeMixFile {
            small: config.size_dist.probability(Size::Small),
            medium: config.size_dist.probability(Size::Medium),
            large: config.size_dist.probability(Size::Large),
        }),
        capacities: Some(ByRole {
            analysts: Some(config.capacities[Role::Analysts]),
            designers: Some(config.capacities[Role::Designers]),
            programmers: Some(config.capacities[Role::Programmers]),
            testers: Some(config.capacities[Role::Testers]),
            maintenance: Some(config.capacities[Role::Maintenance]),
        }),
        fail_prob: None,
        demand: Some(ByRole {
            analysts: Some(by_size_u32(&|s| config.demand.required(Role::Analysts, s))),
            designers: Some(by_size_u32(&|s| config.demand.required(Role::Designers, s))),
            programmers: Some(by_size_u32(&|s| config.demand.required(Role::Programmers, s))),
            testers: Some(by_size_u32(&|s| config.demand.required(Role::Testers, s))),
            maintenance: Some(by_size_u32(&|s| config.demand.required(Role::Maintenance, s))),
        }),
        phases: Some(PhasesFile {
            analysis: phase_file(Phase::Analysis),
            design: phase_file(Phase::Design),
            implementation: phase_file(Phase::Implementation),
            testing: phase_file(Phase::Testing),
            maintenance: phase_file(Phase::Maintenance),
        }),
    };
    toml::to_string_pretty(&file).expect("scenario serializes to TOML")
}

/// Writes [`to_toml_string`] to `path`.
pub fn save_scenario(config: &ScenarioConfig, path: &Path) -> Result<(), ScenarioError> {
    std::fs::write(path, to_toml_string(config)).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })
}
