use super::config::{parse_config_str, ScenarioConfig};
use crate::error::{Error, Result};

const SOURCES: [(&str, &str); 7] = [
    ("example1_vortex", include_str!("../../scenarios/example1_vortex.toml")),
    ("example1_drain", include_str!("../../scenarios/example1_drain.toml")),
    ("example1_AB12", include_str!("../../scenarios/example1_AB12.toml")),
    (
        "example2_profile",
        include_str!("../../scenarios/example2_profile.toml"),
    ),
    ("gordon_slab", include_str!("../../scenarios/gordon_slab.toml")),
    (
        "slow_medium_gradient",
        include_str!("../../scenarios/slow_medium_gradient.toml"),
    ),
    (
        "nonuniqueness_blackhole",
        include_str!("../../scenarios/nonuniqueness_blackhole.toml"),
    ),
];

/// Names of the shipped scenarios.
pub fn builtin_names() -> Vec<&'static str> {
    SOURCES.iter().map(|(n, _)| *n).collect()
}

/// TOML text of a shipped scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    SOURCES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    let text = builtin_source(name).ok_or_else(|| {
        Error::validation(
            "scenario",
            format!(
                "no built-in scenario `{name}`; available: {}",
                builtin_names().join(", ")
            ),
        )
    })?;
    parse_config_str(text)
}

/// Every shipped scenario, parsed and validated.
pub fn builtin_scenarios() -> Result<Vec<ScenarioConfig>> {
    builtin_names().into_iter().map(builtin).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_builtins_load_under_their_own_name() {
        for cfg in builtin_scenarios().unwrap() {
            assert!(builtin_source(&cfg.name).is_some(), "{}", cfg.name);
        }
    }

    #[test]
    fn vortex_example_has_unit_coefficients() {
        let cfg = builtin("example1_vortex").unwrap();
        assert_eq!(cfg.metric.family, "vortex");
        assert_eq!((cfg.metric.a, cfg.metric.b), (Some(1.0), Some(1.0)));
        assert!(cfg.metric.c.is_none() && cfg.metric.density.is_none());
    }

    #[test]
    fn unknown_builtin_is_a_config_error() {
        assert!(builtin("example9").unwrap_err().is_config_error());
    }
}
