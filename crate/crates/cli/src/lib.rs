//! Library behind the `ttk` binary. Every subcommand is a plain function
//! over its argument struct, so tests can drive them without a process.

pub mod commands;
pub mod error;
pub mod io;
pub mod render;
pub mod report;

pub use commands::eval::{cmd_eval_binary, cmd_score};
pub use commands::human::{cmd_disagreement, cmd_eval_pairwise, cmd_eval_pointwise};
pub use commands::qe::{cmd_qe_bleu, cmd_qe_correlate};
pub use commands::shifts::cmd_shifts;
pub use commands::stats::cmd_stats_corpus;
pub use error::{CliError, CliResult};
pub use render::cmd_report;
pub use report::{EvalReport, ReportKind};
