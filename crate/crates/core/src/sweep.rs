//! Parameter sweeps over `(n, m, rho)` and their CSV form.
//!
//! Each `(n, rho)` cell is evaluated independently, in parallel, with its
//! own Monte Carlo seed derived from the root seed, and rows come out in
//! `(n, m, rho)` order whatever the completion order. Floats are written as
//! the shortest decimal that round-trips to the same binary64.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::exact::{self, EvalMode, ExactError, ModelKind, Ratio};
use crate::graph::NetworkConfig;
use crate::monte_carlo::{self, McError};
use crate::rng::mix_seed;
use crate::stats;
use crate::svg;

/// Exact CSV header.
pub const CSV_HEADER: [&str; 11] = [
    "model",
    "n",
    "m",
    "rho",
    "q_exact",
    "eval_mode",
    "cancellation_ratio",
    "p_hat",
    "stderr",
    "trials",
    "z",
];

/// Node counts of the published figures.
pub const FIGURE_NODE_COUNTS: [usize; 3] = [5, 10, 20];

/// Component counts of the published figures, one file each.
pub const FIGURE_COMPONENT_COUNTS: std::ops::RangeInclusive<usize> = 1..=6;

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid sweep: {0}")]
    Spec(String),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    MonteCarlo(#[from] McError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed csv row {row}: {reason}")]
    Parse { row: usize, reason: String },
}

/// `start, start + step, ...` up to and including `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl RhoGrid {
    /// 0.25 to 30 in steps of 0.25: 120 points.
    pub const FIGURES: RhoGrid = RhoGrid {
        start: 0.25,
        stop: 30.0,
        step: 0.25,
    };

    pub fn points(&self) -> Vec<f64> {
        // Points are start + k * step, never accumulated.
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Grid of evaluation points plus the simulation budget.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: ModelKind,
    pub n_values: Vec<usize>,
    pub m_values: Vec<usize>,
    pub rho_grid: RhoGrid,
    /// Monte Carlo trials per `(n, rho)` cell; 0 disables simulation.
    pub trials: u64,
    pub seed: u64,
    pub mode: EvalMode,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let g = &self.rho_grid;
        let mut problems = Vec::new();
        if !(g.start > 0.0 && g.start.is_finite()) {
            problems.push("rho start must be positive");
        }
        if !(g.step > 0.0 && g.step.is_finite()) {
            problems.push("rho step must be positive");
        }
        if !(g.stop >= g.start && g.stop.is_finite()) {
            problems.push("rho stop must be at least rho start");
        }
        if self.n_values.is_empty() || self.n_values.contains(&0) {
            problems.push("n values must be non-empty and at least 1");
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            problems.push("m values must be non-empty and at least 1");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SweepError::Spec(problems.join("; ")))
        }
    }
}

/// One evaluated `(model, n, m, rho)` point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub model: ModelKind,
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub q_exact: f64,
    pub eval_mode: EvalMode,
    pub cancellation_ratio: f64,
    pub p_hat: Option<f64>,
    pub stderr: Option<f64>,
    pub trials: Option<u64>,
    pub z: Option<f64>,
}

/// Root seed of the simulation for one `(n, rho)` cell.
pub fn cell_seed(seed: u64, n: usize, rho: f64) -> u64 {
    mix_seed(mix_seed(seed, n as u64), rho.to_bits())
}

/// Evaluates every point of `spec` on `workers` threads.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRow>, SweepError> {
    spec.validate()?;
    if workers == 0 {
        return Err(SweepError::Spec("workers must be at least 1".into()));
    }
    let rhos = spec.rho_grid.points();
    let cells: Vec<(usize, f64)> = spec
        .n_values
        .iter()
        .flat_map(|&n| rhos.iter().map(move |&rho| (n, rho)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SweepError::Spec(e.to_string()))?;
    let per_cell: Vec<Vec<SweepRow>> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, rho)| evaluate_cell(spec, n, rho))
            .collect::<Result<_, _>>()
    })?;

    // Cells are (n, rho)-ordered; reorder rows to (n, m, rho).
    let mut rows: Vec<SweepRow> = per_cell.into_iter().flatten().collect();
    let m_pos = |m: usize| spec.m_values.iter().position(|&x| x == m).unwrap_or(usize::MAX);
    let n_pos = |n: usize| spec.n_values.iter().position(|&x| x == n).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (n_pos(r.n), m_pos(r.m)));
    Ok(rows)
}

fn evaluate_cell(spec: &SweepSpec, n: usize, rho: f64) -> Result<Vec<SweepRow>, SweepError> {
    let ratio = Ratio::new(rho)?;
    let counts = if spec.trials > 0 {
        let config = NetworkConfig::from_model(spec.model, n, rho).map_err(McError::from)?;
        Some(monte_carlo::simulate_counts(
            &config,
            spec.trials,
            cell_seed(spec.seed, n, rho),
            1,
        )?)
    } else {
        None
    };
    spec.m_values
        .iter()
        .map(|&m| {
            let v = exact::q_m(spec.model, n, m, &ratio, spec.mode)?;
            let mut row = SweepRow {
                model: spec.model,
                n,
                m,
                rho,
                q_exact: v.float_value,
                eval_mode: v.mode_used,
                cancellation_ratio: v.cancellation_ratio,
                p_hat: None,
                stderr: None,
                trials: None,
                z: None,
            };
            if let Some(counts) = &counts {
                let est =
                    monte_carlo::McEstimate::from_count(m, counts.get(m).copied().unwrap_or(0), spec.trials, spec.seed);
                row.p_hat = Some(est.p_hat);
                row.stderr = Some(est.stderr);
                row.trials = Some(spec.trials);
                row.z = Some(stats::z_score(est.p_hat, v.float_value, spec.trials));
            }
            Ok(row)
        })
        .collect()
}

/// Shortest round-trip decimal form of `v`.
pub fn format_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_owned()
}

/// Writes the header and `rows` as CSV.
pub fn write_csv<W: io::Write>(writer: W, rows: &[SweepRow]) -> Result<(), SweepError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let opt_f = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.model.as_str().to_owned(),
            r.n.to_string(),
            r.m.to_string(),
            format_f64(r.rho),
            format_f64(r.q_exact),
            r.eval_mode.as_str().to_owned(),
            format_f64(r.cancellation_ratio),
            opt_f(r.p_hat),
            opt_f(r.stderr),
            r.trials.map(|t| t.to_string()).unwrap_or_default(),
            opt_f(r.z),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parses rows written by [`write_csv`].
pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<SweepRow>, SweepError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(SweepError::Parse {
            row: 0,
            reason: format!("unexpected header {header:?}"),
        });
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            let bad = |field: &str| SweepError::Parse {
                row,
                reason: format!("bad {field}"),
            };
            let field = |idx: usize| rec.get(idx).unwrap_or("");
            let f = |idx: usize| field(idx).parse::<f64>().map_err(|_| bad(CSV_HEADER[idx]));
            let opt_f = |idx: usize| match field(idx) {
                "" => Ok(None),
                s => s.parse::<f64>().map(Some).map_err(|_| bad(CSV_HEADER[idx])),
            };
            Ok(SweepRow {
                model: field(0).parse().map_err(|_| bad("model"))?,
                n: field(1).parse().map_err(|_| bad("n"))?,
                m: field(2).parse().map_err(|_| bad("m"))?,
                rho: f(3)?,
                q_exact: f(4)?,
                eval_mode: field(5).parse().map_err(|_| bad("eval_mode"))?,
                cancellation_ratio: f(6)?,
                p_hat: opt_f(7)?,
                stderr: opt_f(8)?,
                trials: match field(9) {
                    "" => None,
                    s => Some(s.parse().map_err(|_| bad("trials"))?),
                },
                z: opt_f(10)?,
            })
        })
        .collect()
}

/// Settings for [`write_figures`].
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
    pub mode: EvalMode,
    pub rho_grid: RhoGrid,
    pub svg: bool,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions {
            trials: 100_000,
            seed: 42,
            workers: 1,
            mode: EvalMode::Auto,
            rho_grid: RhoGrid::FIGURES,
            svg: false,
        }
    }
}

/// The sweep behind the figure files: anchored model, `n` in {5, 10, 20},
/// `m` from 1 to 6.
pub fn figure_spec(opts: &FigureOptions) -> SweepSpec {
    SweepSpec {
        model: ModelKind::Anchored,
        n_values: FIGURE_NODE_COUNTS.to_vec(),
        m_values: FIGURE_COMPONENT_COUNTS.collect(),
        rho_grid: opts.rho_grid,
        trials: opts.trials,
        seed: opts.seed,
        mode: opts.mode,
    }
}

/// Writes `fig1.csv` ... `fig6.csv` (and `.svg` files if requested) into
/// `dir`, one file per component count. Returns the paths written.
pub fn write_figures(dir: &Path, opts: &FigureOptions) -> Result<Vec<PathBuf>, SweepError> {
    let io_err = |path: &Path| {
        let path = path.to_owned();
        move |source| SweepError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rows = run_sweep(&figure_spec(opts), opts.workers)?;
    let mut written = Vec::new();
    for m in FIGURE_COMPONENT_COUNTS {
        let fig: Vec<SweepRow> = rows.iter().filter(|r| r.m == m).cloned().collect();
        let path = dir.join(format!("fig{m}.csv"));
        let mut buf = Vec::new();
        write_csv(&mut buf, &fig)?;
        fs::write(&path, buf).map_err(io_err(&path))?;
        written.push(path);
        if opts.svg {
            let path = dir.join(format!("fig{m}.svg"));
            fs::write(&path, svg::render_figure(m, &fig)).map_err(io_err(&path))?;
            written.push(path);
        }
    }
    Ok(written)
}
