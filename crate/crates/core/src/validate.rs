//! Self-check suites behind `linenet validate`.
//!
//! The quick level checks algebraic identities of the closed forms
//! (normalization, closed small cases, range, empty sums, saturation). The
//! full level adds the grid-quadrature oracle for `n <= 3` and a Monte Carlo
//! z-score sweep over the figure grid.
//!
//! Suites run against any [`Formula`], so a deliberately broken evaluator
//! can be plugged in to confirm that the checks catch it.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::exact::{self, EvalMode, ExactError, ExactValue, ModelKind, Ratio};
use crate::graph::{ComponentDistribution, NetworkConfig, Provenance, Subject};
use crate::monte_carlo;
use crate::oracle;
use crate::sweep::cell_seed;

/// `rho` values of the normalization and range checks.
pub const NORMALIZATION_RHOS: [f64; 9] = [0.3, 0.9, 1.0, 1.5, 2.5, 5.0, 10.0, 17.3, 30.0];
/// Largest `n` of the normalization check.
pub const NORMALIZATION_MAX_N: usize = 50;
/// Float-mode normalization tolerance.
pub const FLOAT_SUM_TOL: f64 = 1e-9;
/// Tolerance of the closed small cases, rational mode.
pub const CLOSED_CASE_TOL: f64 = 1e-12;
/// `rho` values of the oracle comparison.
pub const ORACLE_RHOS: [f64; 6] = [0.5, 1.5, 2.0, 3.0, 5.0, 7.5];
/// Absolute floor of the oracle tolerance `max(5 * richardson_error, floor)`.
pub const ORACLE_TOL_FLOOR: f64 = 1e-4;

/// Something that evaluates `Q_m`.
pub trait Formula: Sync {
    fn q_m(
        &self,
        model: ModelKind,
        n: usize,
        m: usize,
        ratio: &Ratio,
        mode: EvalMode,
    ) -> Result<ExactValue, ExactError>;

    /// `Q_m` for `m` from 1 to the vertex count.
    fn distribution(
        &self,
        model: ModelKind,
        n: usize,
        ratio: &Ratio,
        mode: EvalMode,
    ) -> Result<ComponentDistribution, ExactError> {
        let values: Vec<ExactValue> = (1..=model.max_components(n))
            .map(|m| self.q_m(model, n, m, ratio, mode))
            .collect::<Result<_, _>>()?;
        let rational = values.iter().all(|v| v.rational_value.is_some());
        Ok(ComponentDistribution {
            probs: values.iter().enumerate().map(|(i, v)| (i + 1, v.float_value)).collect(),
            exact: rational.then(|| {
                values
                    .iter()
                    .enumerate()
                    .filter_map(|(i, v)| Some((i + 1, v.rational_value.clone()?)))
                    .collect()
            }),
            provenance: if rational {
                Provenance::ExactRational
            } else {
                Provenance::ExactFloat
            },
            subject: Subject::Model {
                model,
                n,
                rho: ratio.value(),
            },
        })
    }
}

/// The closed forms of [`crate::exact`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ClosedForm;

impl Formula for ClosedForm {
    fn q_m(
        &self,
        model: ModelKind,
        n: usize,
        m: usize,
        ratio: &Ratio,
        mode: EvalMode,
    ) -> Result<ExactValue, ExactError> {
        exact::q_m(model, n, m, ratio, mode)
    }

    fn distribution(
        &self,
        model: ModelKind,
        n: usize,
        ratio: &Ratio,
        mode: EvalMode,
    ) -> Result<ComponentDistribution, ExactError> {
        exact::distribution(model, n, ratio, mode)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

/// Settings of the Monte Carlo part of the full suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationBudget {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for SimulationBudget {
    fn default() -> Self {
        SimulationBudget {
            trials: 100_000,
            seed: 42,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{status}] {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &'static str, result: Result<String, String>) {
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        self.checks.push(Check { name, passed, detail });
    }
}

/// Runs the suite at `level`.
pub fn run(formula: &dyn Formula, level: Level, budget: SimulationBudget) -> ValidationReport {
    let mut report = ValidationReport::default();
    report.push("normalization", normalization(formula));
    report.push("closed small cases", closed_cases(formula));
    report.push("range and empty sums", range_and_empty_sums(formula));
    report.push("saturated regime", saturated_regime(formula));
    report.push("connected fast path", connected_fast_path(formula));
    if level == Level::Full {
        report.push("quadrature oracle", oracle_equivalence(formula));
        report.push(
            "simulator agreement",
            simulator_agreement(formula, budget).and_then(|s| s.verdict()),
        );
    }
    report
}

fn models() -> [ModelKind; 2] {
    [ModelKind::Free, ModelKind::Anchored]
}

fn ratio(rho: f64) -> Ratio {
    Ratio::new(rho).expect("check grids use positive ratios")
}

fn cell(model: ModelKind, n: usize, m: Option<usize>, rho: f64) -> String {
    match m {
        Some(m) => format!("(model={model}, n={n}, m={m}, rho={rho})"),
        None => format!("(model={model}, n={n}, rho={rho})"),
    }
}

/// Sum over `m` is exactly 1 in rational mode and within [`FLOAT_SUM_TOL`]
/// in float mode.
pub fn normalization(formula: &dyn Formula) -> Result<String, String> {
    let cells: Vec<(ModelKind, usize, f64)> = models()
        .into_iter()
        .flat_map(|model| (1..=NORMALIZATION_MAX_N).flat_map(move |n| NORMALIZATION_RHOS.map(|rho| (model, n, rho))))
        .collect();
    let failures: Vec<Option<String>> = cells
        .par_iter()
        .map(|&(model, n, rho)| {
            let r = ratio(rho);
            let exact = formula
                .distribution(model, n, &r, EvalMode::Rational)
                .map_err(|e| e.to_string());
            let sum: Option<BigRational> = exact.ok().and_then(|d| d.exact).map(|e| e.values().sum());
            if !sum.is_some_and(|s| s.is_one()) {
                return Some(format!("rational sum != 1 at {}", cell(model, n, None, rho)));
            }
            let float = formula.distribution(model, n, &r, EvalMode::Float).ok()?;
            let total = float.total();
            (!((total - 1.0).abs() <= FLOAT_SUM_TOL))
                .then(|| format!("float sum {total} at {}", cell(model, n, None, rho)))
        })
        .collect();
    match failures.into_iter().flatten().next() {
        Some(first) => Err(first),
        None => Ok(format!("{} cells", cells.len())),
    }
}

/// Anchored `n = 1`: `Q_1 = min(1, 1/rho)`. Free `n = 2`:
/// `Q_1 = 1 - (1 - 1/rho)^2` for `rho >= 1`, else 1.
pub fn closed_cases(formula: &dyn Formula) -> Result<String, String> {
    let rhos = [0.25, 0.5, 1.0, 1.25, 2.0, 3.0, 4.5, 7.0, 10.0, 33.3, 100.0];
    for rho in rhos {
        let r = ratio(rho);
        let anchored = formula
            .q_m(ModelKind::Anchored, 1, 1, &r, EvalMode::Rational)
            .map_err(|e| e.to_string())?
            .float_value;
        let expect = if rho >= 1.0 { 1.0 / rho } else { 1.0 };
        if !((anchored - expect).abs() <= CLOSED_CASE_TOL) {
            return Err(format!(
                "{anchored} != {expect} at {}",
                cell(ModelKind::Anchored, 1, Some(1), rho)
            ));
        }
        let free = formula
            .q_m(ModelKind::Free, 2, 1, &r, EvalMode::Rational)
            .map_err(|e| e.to_string())?
            .float_value;
        let expect = if rho >= 1.0 {
            1.0 - (1.0 - 1.0 / rho).powi(2)
        } else {
            1.0
        };
        if !((free - expect).abs() <= CLOSED_CASE_TOL) {
            return Err(format!(
                "{free} != {expect} at {}",
                cell(ModelKind::Free, 2, Some(1), rho)
            ));
        }
    }
    Ok(format!("{} ratios", rhos.len()))
}

/// Rational values lie in `[0, 1]`; beyond the truncation index the result
/// is exactly 0 in both modes.
pub fn range_and_empty_sums(formula: &dyn Formula) -> Result<String, String> {
    let mut checked = 0;
    for model in models() {
        for n in 1..=25 {
            for rho in NORMALIZATION_RHOS {
                let r = ratio(rho);
                let k = exact::truncation_index(model, n, &r).map_err(|e| e.to_string())?;
                for m in 1..=model.max_components(n) + 2 {
                    let v = formula
                        .q_m(model, n, m, &r, EvalMode::Rational)
                        .map_err(|e| e.to_string())?;
                    let q = v
                        .rational_value
                        .unwrap_or_else(|| BigRational::from_float(v.float_value).unwrap());
                    if q.is_negative() || q > BigRational::one() {
                        return Err(format!("value {q} outside [0, 1] at {}", cell(model, n, Some(m), rho)));
                    }
                    if m > k + 1 {
                        let f = formula
                            .q_m(model, n, m, &r, EvalMode::Float)
                            .map_err(|e| e.to_string())?;
                        if !q.is_zero() || f.float_value != 0.0 {
                            return Err(format!("empty sum not zero at {}", cell(model, n, Some(m), rho)));
                        }
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} points"))
}

/// `rho <= 1` forces a connected network.
pub fn saturated_regime(formula: &dyn Formula) -> Result<String, String> {
    for model in models() {
        for n in 1..=30 {
            for rho in [0.1, 0.5, 0.9, 1.0] {
                let d = formula
                    .distribution(model, n, &ratio(rho), EvalMode::Rational)
                    .map_err(|e| e.to_string())?;
                for (&m, &p) in &d.probs {
                    let expect = if m == 1 { 1.0 } else { 0.0 };
                    if p != expect {
                        return Err(format!("Q = {p} at {}", cell(model, n, Some(m), rho)));
                    }
                }
            }
        }
    }
    Ok("rho <= 1".into())
}

/// `Q_1` through the general path equals the dedicated fast path bit for bit.
pub fn connected_fast_path(formula: &dyn Formula) -> Result<String, String> {
    for model in models() {
        for n in 1..=NORMALIZATION_MAX_N {
            for rho in NORMALIZATION_RHOS {
                let r = ratio(rho);
                let general = formula
                    .q_m(model, n, 1, &r, EvalMode::Float)
                    .map_err(|e| e.to_string())?;
                let fast = exact::q_1(model, n, &r, EvalMode::Float).map_err(|e| e.to_string())?;
                if general.float_value.to_bits() != fast.float_value.to_bits() {
                    return Err(format!(
                        "{} != {} at {}",
                        general.float_value,
                        fast.float_value,
                        cell(model, n, Some(1), rho)
                    ));
                }
            }
        }
    }
    Ok("bitwise equal".into())
}

/// Coarse grid of the oracle check; the reported values come from the
/// refinement at twice this.
pub const ORACLE_GRID: usize = 512;

/// Quadrature agrees with the rational values within
/// `max(5 * richardson_error, 1e-4)`.
pub fn oracle_equivalence(formula: &dyn Formula) -> Result<String, String> {
    let mut checked = 0;
    for model in models() {
        for n in 1..=oracle::MAX_NODES {
            for rho in ORACLE_RHOS {
                let r = ratio(rho);
                let quad = oracle::quadrature_distribution(model, n, &r, ORACLE_GRID).map_err(|e| e.to_string())?;
                for (i, qr) in quad.iter().enumerate() {
                    let m = i + 1;
                    let q = formula
                        .q_m(model, n, m, &r, EvalMode::Rational)
                        .map_err(|e| e.to_string())?;
                    let tol = (5.0 * qr.richardson_error).max(ORACLE_TOL_FLOOR);
                    if !((qr.value - q.float_value).abs() <= tol) {
                        return Err(format!(
                            "quadrature {} vs {} (tol {tol:.2e}) at {}",
                            qr.value,
                            q.float_value,
                            cell(model, n, Some(m), rho)
                        ));
                    }
                    checked += 1;
                }
            }
        }
    }
    Ok(format!("{checked} points"))
}

/// Node counts, component counts and ratios of the simulator sweep.
pub const AGREEMENT_NODES: [usize; 3] = [5, 10, 20];
pub const AGREEMENT_MAX_M: usize = 6;
pub fn agreement_rhos() -> Vec<f64> {
    (1..=15).map(|k| 2.0 * k as f64).collect()
}

/// Pass thresholds of the simulator sweep.
pub const AGREEMENT_MIN_Q: f64 = 1e-3;
pub const AGREEMENT_FRAC_Z2: f64 = 0.95;
pub const AGREEMENT_MAX_Z: f64 = 5.0;
pub const AGREEMENT_MIN_P: f64 = 0.001;
pub const AGREEMENT_FRAC_P: f64 = 0.99;

/// Aggregate of the simulator sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementSummary {
    /// Cells with `Q_m >= 1e-3`.
    pub cells: usize,
    pub within_z2: usize,
    pub within_z5: usize,
    /// Worst `(|z|, n, m, rho)`.
    pub worst: (f64, usize, usize, f64),
    pub chi_cells: usize,
    pub chi_pass: usize,
    /// Smallest `(p_value, n, rho)`.
    pub worst_chi: (f64, usize, f64),
}

impl AgreementSummary {
    pub fn frac_z2(&self) -> f64 {
        self.within_z2 as f64 / self.cells as f64
    }

    pub fn frac_chi(&self) -> f64 {
        self.chi_pass as f64 / self.chi_cells as f64
    }

    pub fn verdict(&self) -> Result<String, String> {
        let (wz, wn, wm, wr) = self.worst;
        let (wp, pn, pr) = self.worst_chi;
        let detail = format!(
            "|z|<=2 in {}/{} ({:.3}), |z|<=5 in {}/{}, chi-square p>{AGREEMENT_MIN_P} in {}/{}; \
             worst |z|={wz:.2} at {}, smallest p={wp:.2e} at {}",
            self.within_z2,
            self.cells,
            self.frac_z2(),
            self.within_z5,
            self.cells,
            self.chi_pass,
            self.chi_cells,
            cell(ModelKind::Anchored, wn, Some(wm), wr),
            cell(ModelKind::Anchored, pn, None, pr),
        );
        let ok =
            self.frac_z2() >= AGREEMENT_FRAC_Z2 && self.within_z5 == self.cells && self.frac_chi() >= AGREEMENT_FRAC_P;
        if ok {
            Ok(detail)
        } else {
            Err(detail)
        }
    }
}

/// Monte Carlo against `formula` over the anchored figure grid.
pub fn simulator_agreement(formula: &dyn Formula, budget: SimulationBudget) -> Result<AgreementSummary, String> {
    let mut s = AgreementSummary {
        cells: 0,
        within_z2: 0,
        within_z5: 0,
        worst: (0.0, 0, 0, 0.0),
        chi_cells: 0,
        chi_pass: 0,
        worst_chi: (1.0, 0, 0.0),
    };
    for n in AGREEMENT_NODES {
        for rho in agreement_rhos() {
            let config = NetworkConfig::from_model(ModelKind::Anchored, n, rho).map_err(|e| e.to_string())?;
            let est = monte_carlo::estimate_distribution(
                &config,
                budget.trials,
                cell_seed(budget.seed, n, rho),
                budget.workers,
            )
            .map_err(|e| e.to_string())?;
            let exact = formula
                .distribution(ModelKind::Anchored, n, &ratio(rho), EvalMode::Auto)
                .map_err(|e| e.to_string())?;
            let report = monte_carlo::compare(&config, &est, &exact).map_err(|e| e.to_string())?;
            for row in report
                .rows
                .iter()
                .filter(|r| r.m <= AGREEMENT_MAX_M && r.exact >= AGREEMENT_MIN_Q)
            {
                let z = row.z.abs();
                s.cells += 1;
                s.within_z2 += usize::from(z <= 2.0);
                s.within_z5 += usize::from(z <= AGREEMENT_MAX_Z);
                if !(z <= s.worst.0) {
                    s.worst = (z, n, row.m, rho);
                }
            }
            s.chi_cells += 1;
            s.chi_pass += usize::from(report.p_value > AGREEMENT_MIN_P);
            if report.p_value < s.worst_chi.0 {
                s.worst_chi = (report.p_value, n, rho);
            }
        }
    }
    Ok(s)
}
