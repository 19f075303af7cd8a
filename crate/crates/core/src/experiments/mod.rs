//! Config-driven experiment runs with JSON manifests and CSV tables.

mod config;
mod manifest;
mod run;
mod table;

pub use config::{
    apply_overrides, Assertion, BoxConfig, CaccioppoliParams, CalculusParams, CarlemanParams, Comparison,
    ControlParams, Experiment, FeynmanKacParams, HeatKernelParams, InitialData, LocalizationParams, MaskConfig,
    NecessityParams, ObservabilityParams, OperatorParams, RunConfig, SpectralParams,
};
pub use manifest::{
    compare, config_hash, discover_configs, lookup, output_dir, run, AssertionOutcome, DiffReport, FieldDiff,
    Manifest, RunBundle,
};
pub use run::RunOutput;
pub use table::Table;
