//! File formats, reports and subcommands of the `dilate` tool.

pub mod commands;
pub mod error;
pub mod format;
pub mod report;

pub use commands::{run_command, Execution};
pub use error::CliError;
pub use format::{
    load_channel, load_instrument, load_state, ChannelSpecFile, InstrumentSpecFile, StateSpecFile,
};
pub use report::{save_report, Report, Status};
