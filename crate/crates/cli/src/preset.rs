//! Named experiment configurations compiled into the binary from `presets/`.

use ransomgame_core::montecarlo::SweepConfig;
use ransomgame_core::{ReputationMode, ScenarioConfig};
use serde::{Deserialize, Serialize};

use crate::error::{parse_json, CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Optimal reputation at each total ransom.
    Reputation,
    /// Expected profit of the optimal reputation, with the overcharge bound.
    Profit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Simulate {
        modes: Vec<ReputationMode>,
        scenario: ScenarioConfig,
    },
    Sweep {
        kind: SweepKind,
        config: SweepConfig,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub job: Job,
}

const EMBEDDED: [(&str, &str); 9] = [
    ("fig2", include_str!("../../../presets/fig2.json")),
    ("fig3", include_str!("../../../presets/fig3.json")),
    ("fig4", include_str!("../../../presets/fig4.json")),
    ("fig5", include_str!("../../../presets/fig5.json")),
    ("fig6", include_str!("../../../presets/fig6.json")),
    ("fig7", include_str!("../../../presets/fig7.json")),
    ("fig8", include_str!("../../../presets/fig8.json")),
    ("fig9", include_str!("../../../presets/fig9.json")),
    ("fig10", include_str!("../../../presets/fig10.json")),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    EMBEDDED.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    EMBEDDED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<Preset> {
    let text = source(name).ok_or_else(|| {
        CliError::Usage(format!(
            "unknown preset {name:?}; available: {}",
            names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    parse_json(&format!("preset {name}"), text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_validates() {
        for name in names() {
            let p = load(name).unwrap();
            assert_eq!(p.name, name);
            match p.job {
                Job::Simulate { modes, scenario } => {
                    assert!(!modes.is_empty());
                    scenario.validate().unwrap();
                    assert!(!scenario.notes.is_empty());
                }
                Job::Sweep { config, .. } => {
                    assert!(!config.ransom_grid.is_empty());
                    config.instance(config.ransom_grid[0]).unwrap();
                    assert!(!config.notes.is_empty());
                }
            }
        }
    }

    #[test]
    fn fig2_matches_the_overcharge_setting() {
        let Job::Simulate { scenario, .. } = load("fig2").unwrap().job else {
            panic!("fig2 is a simulation");
        };
        assert_eq!(scenario.rounds, 8);
        assert_eq!(scenario.victim_count, 40);
        assert_eq!(scenario.total_ransom, 1000.0);
        assert_eq!(
            (scenario.value_distribution.lo, scenario.value_distribution.hi),
            (250.0, 350.0)
        );
    }

    #[test]
    fn unknown_preset_is_a_usage_error() {
        assert!(matches!(load("fig99"), Err(CliError::Usage(_))));
    }
}
