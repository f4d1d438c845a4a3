//! Command surface of qinfra: configuration, the six subcommands, the lemma harness and reports.

pub mod commands;
pub mod config;
pub mod lemmas;
pub mod report;

pub use commands::{
    cmd_find_disc, cmd_pip, cmd_regulator, cmd_resources, cmd_simulate, cmd_verify_lemmas, find_disc, FindDiscOpts, SimulateOpts,
    Subroutine,
};
pub use config::{Mode, Overrides, RunConfig};
pub use lemmas::{verify_lemmas, LemmaConfig, LemmaReport};
pub use report::{Exit, Outcome};
