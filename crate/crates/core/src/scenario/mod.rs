//! Scenario files, the shipped examples, and command dispatch with
//! hashed artifact manifests.

mod builtin;
mod commands;
mod config;

pub use builtin::{builtin, builtin_names, builtin_scenarios, builtin_source};
pub use commands::{
    default_command, flatten_json, run_command, sha256_hex, verify_manifest, Command, ErrorRecord, FileRecord, Format,
    Manifest, RunArtifacts, RunOptions, RunStatus, COMMANDS,
};
pub use config::{
    parse_config, parse_config_str, BumpSection, ExperimentSection, FlowSection, GridSection, HorizonSection,
    MetricSection, OutputsSection, RaysSection, ScenarioConfig, SourceSection, TolerancesSection, WaveSection,
    FAMILIES, FLOW_KINDS,
};
