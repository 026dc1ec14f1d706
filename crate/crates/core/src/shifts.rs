//! Distribution-shift decomposition over a grid of (model, dataset) MLL
//! cells.
//!
//! A model trained on domain key `(g_i, a_i, t_i)` scores every test set
//! `(g_j, a_j, t_j)`. Relative to the model's score on its own training
//! key, the overall shift is compared with three single-component shifts,
//! each obtained by moving one component of the data key to the test value:
//!
//! ```text
//! o_shift = MLL(g_j, a_j, t_j) − ref
//! g_shift = MLL(g_j, a_i, t_i) − ref
//! a_shift = MLL(g_i, a_j, t_i) − ref
//! t_shift = MLL(g_i, a_i, t_j) − ref
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::backend::TokenScores;
use crate::corpus::Label;
use crate::error::ErrorClass;
use crate::rng::XorShift64Star;
use crate::stats::linalg::Matrix;
use crate::stats::{mean, ols, ttest_paired, RegressionReport, StatsError, TTestResult};

pub const PREDICTORS: [&str; 3] = ["genre_shift", "author_shift", "translationese_shift"];

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub genre: String,
    pub author: String,
    pub condition: Label,
}

impl CellKey {
    pub fn new(genre: impl Into<String>, author: impl Into<String>, condition: Label) -> Self {
        Self { genre: genre.into(), author: author.into(), condition }
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.condition {
            Label::Low => "low",
            Label::High => "high",
        };
        write!(f, "{}/{}/{}", self.genre, self.author, c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MllCell {
    pub model_key: CellKey,
    pub data_key: CellKey,
    pub mll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftObservation {
    pub model_key: CellKey,
    pub data_key: CellKey,
    pub o_shift: f64,
    pub g_shift: f64,
    pub a_shift: f64,
    pub t_shift: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ShiftError {
    #[error("cannot take the MLL of an empty set of samples")]
    Empty,
    #[error("grid has no cell for model {model} on data {data}")]
    MissingCell { model: CellKey, data: CellKey },
    #[error("grid lists model {model} on data {data} twice")]
    DuplicateCell { model: CellKey, data: CellKey },
    #[error("grid has no cells for model {0}")]
    UnknownModel(CellKey),
    #[error("MLL for model {model} on data {data} is not finite")]
    NonFinite { model: CellKey, data: CellKey },
    #[error("grid CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("cancellation pairing: {0}")]
    Pairing(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ShiftError {
    pub fn class(&self) -> ErrorClass {
        match self {
            ShiftError::Io(_) => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }
}

/// Mean over samples of the per-sample mean token logprob.
pub fn mll(samples: &[TokenScores]) -> Result<f64, ShiftError> {
    if samples.is_empty() {
        return Err(ShiftError::Empty);
    }
    let per_sample: Vec<f64> = samples.iter().map(|s| mean(&s.token_logprobs)).collect();
    Ok(mean(&per_sample))
}

/// Lookup table of MLL cells keyed by (model, data).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MllGrid {
    cells: BTreeMap<(CellKey, CellKey), f64>,
}

impl MllGrid {
    pub fn from_cells(cells: impl IntoIterator<Item = MllCell>) -> Result<Self, ShiftError> {
        let mut map = BTreeMap::new();
        for c in cells {
            if !c.mll.is_finite() {
                return Err(ShiftError::NonFinite { model: c.model_key, data: c.data_key });
            }
            let key = (c.model_key, c.data_key);
            if map.contains_key(&key) {
                return Err(ShiftError::DuplicateCell { model: key.0, data: key.1 });
            }
            map.insert(key, c.mll);
        }
        Ok(Self { cells: map })
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, model: &CellKey, data: &CellKey) -> Result<f64, ShiftError> {
        self.cells
            .get(&(model.clone(), data.clone()))
            .copied()
            .ok_or_else(|| ShiftError::MissingCell { model: model.clone(), data: data.clone() })
    }

    /// Distinct model keys, sorted.
    pub fn models(&self) -> Vec<CellKey> {
        let mut v: Vec<CellKey> = self.cells.keys().map(|(m, _)| m.clone()).collect();
        v.dedup();
        v
    }

    pub fn cells(&self) -> Vec<MllCell> {
        self.cells.iter().map(|((m, d), &mll)| MllCell { model_key: m.clone(), data_key: d.clone(), mll }).collect()
    }
}

/// Shifts of one model against every data key it was evaluated on, sorted
/// by data key.
pub fn compute_shifts(grid: &MllGrid, train_key: &CellKey) -> Result<Vec<ShiftObservation>, ShiftError> {
    let reference = grid.get(train_key, train_key)?;
    let data_keys: Vec<&CellKey> = grid.cells.keys().filter(|(m, _)| m == train_key).map(|(_, d)| d).collect();
    if data_keys.is_empty() {
        return Err(ShiftError::UnknownModel(train_key.clone()));
    }
    let mut out = Vec::with_capacity(data_keys.len());
    for d in data_keys {
        let vary = |genre: &str, author: &str, condition: Label| -> Result<f64, ShiftError> {
            Ok(grid.get(train_key, &CellKey::new(genre, author, condition))? - reference)
        };
        out.push(ShiftObservation {
            model_key: train_key.clone(),
            data_key: d.clone(),
            o_shift: grid.get(train_key, d)? - reference,
            g_shift: vary(&d.genre, &train_key.author, train_key.condition)?,
            a_shift: vary(&train_key.genre, &d.author, train_key.condition)?,
            t_shift: vary(&train_key.genre, &train_key.author, d.condition)?,
        });
    }
    Ok(out)
}

/// Observations for every model in the grid, grouped by model key.
pub fn compute_all_shifts(grid: &MllGrid) -> Result<Vec<ShiftObservation>, ShiftError> {
    let mut out = Vec::new();
    for m in grid.models() {
        out.extend(compute_shifts(grid, &m)?);
    }
    Ok(out)
}

/// Which observations enter the regression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftFilter {
    /// Every (model, data) observation, including the all-zero rows where
    /// data key = training key.
    #[default]
    All,
    /// Drop observations whose data key equals the training key.
    ExcludeSelf,
}

impl std::str::FromStr for ShiftFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(ShiftFilter::All),
            "exclude_self" => Ok(ShiftFilter::ExcludeSelf),
            other => Err(format!("filter must be all or exclude_self, got {other:?}")),
        }
    }
}

impl ShiftFilter {
    pub fn apply(self, obs: &[ShiftObservation]) -> Vec<ShiftObservation> {
        obs.iter().filter(|o| self == ShiftFilter::All || o.model_key != o.data_key).cloned().collect()
    }
}

/// OLS of o_shift on (g_shift, a_shift, t_shift) with intercept; the
/// report carries a VIF per predictor.
pub fn shift_regression(observations: &[ShiftObservation]) -> Result<RegressionReport, ShiftError> {
    if observations.len() < 5 {
        return Err(StatsError::TooFew { needed: 5, got: observations.len() }.into());
    }
    let x = Matrix::from_rows(&observations.iter().map(|o| vec![o.g_shift, o.a_shift, o.t_shift]).collect::<Vec<_>>());
    let y: Vec<f64> = observations.iter().map(|o| o.o_shift).collect();
    let names: Vec<String> = PREDICTORS.iter().map(|s| s.to_string()).collect();
    Ok(ols(&x, &y, true, Some(&names))?)
}

/// Result of one paired comparison between a model and its contrastive
/// counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CancellationOutcome {
    Tested {
        #[serde(flatten)]
        result: TTestResult,
        n: usize,
    },
    /// Every pair differs by exactly zero: the component cancels perfectly.
    PerfectlyCanceled { n: usize },
    /// Every pair differs by the same non-zero constant; the paired t-test
    /// is undefined.
    ConstantOffset { offset: f64, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationReport {
    pub genre_shift: CancellationOutcome,
    pub author_shift: CancellationOutcome,
}

fn paired_outcome(a: &[f64], b: &[f64]) -> Result<CancellationOutcome, ShiftError> {
    match ttest_paired(a, b) {
        Ok(result) => Ok(CancellationOutcome::Tested { result, n: a.len() }),
        Err(StatsError::ZeroVarianceDifferences { mean }) if mean == 0.0 => {
            Ok(CancellationOutcome::PerfectlyCanceled { n: a.len() })
        }
        Err(StatsError::ZeroVarianceDifferences { mean }) => {
            Ok(CancellationOutcome::ConstantOffset { offset: mean, n: a.len() })
        }
        Err(e) => Err(e.into()),
    }
}

/// Paired t-tests of g_shift and a_shift between models θ and θ̃, given as
/// aligned lists (entry i of each list belongs to the same pairing).
pub fn cancellation_test(
    genre_theta: &[f64],
    genre_theta_tilde: &[f64],
    author_theta: &[f64],
    author_theta_tilde: &[f64],
) -> Result<CancellationReport, ShiftError> {
    Ok(CancellationReport {
        genre_shift: paired_outcome(genre_theta, genre_theta_tilde)?,
        author_shift: paired_outcome(author_theta, author_theta_tilde)?,
    })
}

/// Pairs the low-condition model of every (genre, author) base with its
/// high-condition counterpart on the same data key, and runs
/// [`cancellation_test`] on their genre and author shifts.
pub fn cancellation_from_observations(obs: &[ShiftObservation]) -> Result<CancellationReport, ShiftError> {
    let mut by_key: BTreeMap<(&CellKey, &CellKey), &ShiftObservation> = BTreeMap::new();
    for o in obs {
        by_key.insert((&o.model_key, &o.data_key), o);
    }
    let (mut g0, mut g1, mut a0, mut a1) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for ((m, d), o) in &by_key {
        if m.condition != Label::Low {
            continue;
        }
        let twin = CellKey { condition: Label::High, ..(*m).clone() };
        let Some(t) = by_key.get(&(&twin, *d)) else {
            return Err(ShiftError::Pairing(format!("no observation for model {twin} on data {d}")));
        };
        g0.push(o.g_shift);
        g1.push(t.g_shift);
        a0.push(o.a_shift);
        a1.push(t.a_shift);
    }
    if g0.is_empty() {
        return Err(ShiftError::Pairing("no low/high model pairs in the observations".into()));
    }
    cancellation_test(&g0, &g1, &a0, &a1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct GridRow {
    model_genre: String,
    model_author: String,
    model_cond: Label,
    data_genre: String,
    data_author: String,
    data_cond: Label,
    mll: String,
}

pub fn read_grid_csv<R: Read>(reader: R) -> Result<MllGrid, ShiftError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut cells = Vec::new();
    for rec in rdr.deserialize::<GridRow>() {
        let row =
            rec.map_err(|e| ShiftError::Csv { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let mll: f64 = row.mll.trim().parse().map_err(|_| ShiftError::Csv {
            line: cells.len() as u64 + 2,
            message: format!("mll {:?} is not a number", row.mll),
        })?;
        cells.push(MllCell {
            model_key: CellKey::new(row.model_genre, row.model_author, row.model_cond),
            data_key: CellKey::new(row.data_genre, row.data_author, row.data_cond),
            mll,
        });
    }
    MllGrid::from_cells(cells)
}

/// Writes cells in key order; `mll` uses the shortest round-trip form.
pub fn write_grid_csv<W: Write>(grid: &MllGrid, writer: W) -> Result<(), ShiftError> {
    let mut w = csv::Writer::from_writer(writer);
    for c in grid.cells() {
        w.serialize(GridRow {
            model_genre: c.model_key.genre,
            model_author: c.model_key.author,
            model_cond: c.model_key.condition,
            data_genre: c.data_key.genre,
            data_author: c.data_key.author,
            data_cond: c.data_key.condition,
            mll: format!("{:?}", c.mll),
        })
        .map_err(|e| ShiftError::Csv { line: 0, message: e.to_string() })?;
    }
    w.flush()?;
    Ok(())
}

/// Every (genre, author, condition) key over `genres × authors × {low, high}`.
pub fn domain_keys(genres: &[&str], authors: &[&str]) -> Vec<CellKey> {
    let mut keys = Vec::new();
    for g in genres {
        for a in authors {
            for c in [Label::Low, Label::High] {
                keys.push(CellKey::new(*g, *a, c));
            }
        }
    }
    keys
}

/// A synthetic full grid with additive structure:
///
/// `MLL(m, d) = base(m) + G[m.g][d.g] + A[m.a][d.a] + T[m.t][d.t] + noise`
///
/// with zero diagonals in G, A, T, off-diagonal entries drawn from
/// `−U(0.2, 1.2)`, base from `−U(1, 3)`, and Gaussian noise of standard
/// deviation `noise_sd` added to every cell. Seven genres and two authors
/// give 28 models × 28 datasets. Because the grid is a full cross product,
/// the three components are exactly uncorrelated over all observations.
pub fn synthetic_grid(seed: u64, noise_sd: f64) -> MllGrid {
    const GENRES: [&str; 7] = ["g0", "g1", "g2", "g3", "g4", "g5", "g6"];
    const AUTHORS: [&str; 2] = ["a0", "a1"];
    let mut rng = XorShift64Star::new(seed);
    let mut table = |n: usize| -> Vec<Vec<f64>> {
        (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { -(0.2 + rng.next_f64()) }).collect()).collect()
    };
    let g = table(GENRES.len());
    let a = table(AUTHORS.len());
    let t = table(2);
    let keys = domain_keys(&GENRES, &AUTHORS);
    let gi = |k: &CellKey| GENRES.iter().position(|x| *x == k.genre).unwrap();
    let ai = |k: &CellKey| AUTHORS.iter().position(|x| *x == k.author).unwrap();
    let ti = |k: &CellKey| usize::from(k.condition == Label::High);
    let mut cells = Vec::with_capacity(keys.len() * keys.len());
    for m in &keys {
        let base = -(1.0 + 2.0 * rng.next_f64());
        for d in &keys {
            let v = base + g[gi(m)][gi(d)] + a[ai(m)][ai(d)] + t[ti(m)][ti(d)];
            let noise = if noise_sd > 0.0 { noise_sd * rng.next_normal() } else { 0.0 };
            cells.push(MllCell { model_key: m.clone(), data_key: d.clone(), mll: v + noise });
        }
    }
    MllGrid::from_cells(cells).expect("synthetic grid cells are unique and finite")
}
