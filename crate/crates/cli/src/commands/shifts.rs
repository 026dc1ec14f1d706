use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use tindex_core::shifts::{
    cancellation_from_observations, compute_all_shifts, read_grid_csv, shift_regression, synthetic_grid,
    write_grid_csv, CancellationReport, ShiftFilter,
};
use tindex_core::stats::RegressionReport;

use super::write_report;
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{ConfigHasher, EvalReport, ReportKind};

#[derive(Debug, Clone, Args)]
pub struct ShiftArgs {
    /// MLL grid CSV (model_genre, model_author, model_cond, data_genre,
    /// data_author, data_cond, mll).
    #[arg(long, conflicts_with = "synthetic_seed", required_unless_present = "synthetic_seed")]
    pub grid: Option<PathBuf>,
    /// Use the built-in additive synthetic grid with this seed instead.
    #[arg(long)]
    pub synthetic_seed: Option<u64>,
    /// Noise standard deviation for the synthetic grid.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// all, or exclude_self to drop observations on the training domain.
    #[arg(long, default_value = "all")]
    pub filter: ShiftFilter,
    /// Also write the grid that was analyzed.
    #[arg(long)]
    pub grid_out: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftPayload {
    pub filter: ShiftFilter,
    pub n_cells: usize,
    pub n_observations: usize,
    pub regression: RegressionReport,
    /// Paired tests between each low model and its high twin, over all
    /// observations. Absent when the grid has no such pairs.
    pub cancellation: Option<CancellationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cancellation_error: Option<String>,
}

pub fn cmd_shifts(args: &ShiftArgs) -> CliResult<EvalReport> {
    let mut hash = ConfigHasher::new("shifts").flag("filter", format!("{:?}", args.filter));
    let grid = match (&args.grid, args.synthetic_seed) {
        (Some(p), _) => {
            hash = hash.input("grid", p)?;
            io::load(p, read_grid_csv)?
        }
        (None, Some(seed)) => {
            if !(args.noise >= 0.0 && args.noise.is_finite()) {
                return Err(CliError::validation(format!("noise must be a non-negative number, got {}", args.noise)));
            }
            hash = hash.flag("synthetic_seed", seed).flag("noise", format!("{:?}", args.noise));
            synthetic_grid(seed, args.noise)
        }
        (None, None) => return Err(CliError::validation("give --grid or --synthetic-seed")),
    };
    if let Some(p) = &args.grid_out {
        let mut w = io::create(p)?;
        write_grid_csv(&grid, &mut w).map_err(|e| CliError::from(e).in_file(p))?;
    }
    let all = compute_all_shifts(&grid)?;
    let kept = args.filter.apply(&all);
    let regression = shift_regression(&kept)?;
    let (cancellation, cancellation_error) = match cancellation_from_observations(&all) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let payload = ShiftPayload {
        filter: args.filter,
        n_cells: grid.len(),
        n_observations: kept.len(),
        regression,
        cancellation,
        cancellation_error,
    };
    let report = EvalReport::new(ReportKind::ShiftReport, hash.finish(), &payload)?;
    write_report(&report, args.out.as_deref())?;
    Ok(report)
}
