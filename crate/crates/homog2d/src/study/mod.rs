//! Configuration-driven studies: parse a TOML description, run the
//! pipeline over a list of periods, fit rates and write tables and plots.

mod config;
mod output;
mod rate;
mod runner;

pub use config::{
    parse_config, parse_config_str, CoefficientConfig, DomainConfig, DeltaName, EdgeRef, FieldName, Forcing, LimitName, ModeName,
    ModelConfig, NewtonConfig, Number, OutputConfig, ProbeConfig, ReactionName, StudyConfig, SweepConfig, VariantName,
};
pub use output::{cell_text, emit_outputs, probe_text, solve_text, study_text, sweep_svg, write_sweep_csv, SWEEP_HEADER};
pub use rate::{fit_rate, RateFit};
pub use runner::{
    build_model, run_cell, run_cell_at, run_homogenized, run_probe, run_solve, run_study, CellOutcome, CrossCheck,
    HomogenizedOutcome, ProbeSummary, SolveReport, StudyReport, SweepRecord, SweepRow,
};
