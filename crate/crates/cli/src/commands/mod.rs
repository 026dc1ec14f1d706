//! One function per subcommand. Each takes its clap argument struct, so the
//! binary and the tests drive exactly the same code.

pub mod dataset;
pub mod dump;
pub mod eval;
pub mod human;
pub mod qe;
pub mod remote;
pub mod shifts;
pub mod stats;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use tindex_core::corpus::{parse_labels, LabelRecord};
use tindex_core::scoring::{parse_scores, Method, Reference, ScoreRecord};

use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::EvalReport;

/// Writes a report as JSON to `out`, or stdout.
pub fn write_report(report: &EvalReport, out: Option<&Path>) -> CliResult<()> {
    io::emit(out, &report.to_json())
}

pub(crate) fn load_labels(path: &Path) -> CliResult<Vec<LabelRecord>> {
    io::load(path, parse_labels)
}

pub(crate) fn load_scores(path: &Path) -> CliResult<Vec<ScoreRecord>> {
    io::load(path, parse_scores)
}

/// Oriented scores per method, keyed by sample id. Larger always means
/// more translationese.
pub(crate) fn index_scores(
    records: &[ScoreRecord],
    reference: Reference,
) -> CliResult<Vec<(Method, HashMap<String, f64>)>> {
    let mut by_method: Vec<(Method, HashMap<String, f64>)> = Vec::new();
    for r in records {
        let idx = match by_method.iter().position(|(m, _)| *m == r.method) {
            Some(i) => i,
            None => {
                by_method.push((r.method, HashMap::new()));
                by_method.len() - 1
            }
        };
        let value = r.value * r.method.orientation(reference);
        if by_method[idx].1.insert(r.sample_id.clone(), value).is_some() {
            return Err(CliError::validation(format!("sample {:?} has two {} scores", r.sample_id, r.method)));
        }
    }
    by_method.sort_by_key(|(m, _)| *m);
    Ok(by_method)
}

pub(crate) fn path_list(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;
    use tindex_core::scoring::Normalization;

    fn rec(id: &str, method: Method, value: f64) -> ScoreRecord {
        let model_ids = if method.needs_pair() { vec!["l".into(), "h".into()] } else { vec!["h".into()] };
        ScoreRecord { sample_id: id.into(), method, model_ids, value, normalization: Normalization::PerToken }
    }

    #[test]
    fn scores_are_oriented_and_unique() {
        let recs = [rec("a", Method::Entropy, 2.0), rec("a", Method::Tindex, 1.0)];
        let idx = index_scores(&recs, Reference::High).unwrap();
        assert_eq!(idx[0].0, Method::Tindex);
        assert_eq!(idx[1].1["a"], -2.0);
        let idx = index_scores(&recs, Reference::Low).unwrap();
        assert_eq!(idx[1].1["a"], 2.0);
        let dup = [rec("a", Method::Tindex, 1.0), rec("a", Method::Tindex, 2.0)];
        assert!(index_scores(&dup, Reference::High).is_err());
    }
}
