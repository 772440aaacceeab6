//! Scenario configuration, seeded Monte Carlo execution and result export.

mod config;
mod export;
mod run;
mod scenarios;

pub use config::{
    parse_config, ChannelConfig, MethodName, RefinementChoice, ScenarioConfig, Scheme,
};
pub use export::{export, read_json, write_csv, write_json, OutputFormat, CSV_HEADER};
pub use run::{
    child_seed, measure_refinement_threshold, noise_power, run_scenario, run_with, Provenance,
    RawSamples, RunOptions, RunResult, TX_POWER,
};
pub use scenarios::{named_scenarios, scenario, NamedScenario, SCENARIO_NAMES};
