//! Seeded Monte Carlo estimation of the component-count distribution.
//!
//! Works for any [`NetworkConfig`], including access points away from the
//! ends of the segment where no closed form exists. Trial `t` draws from the
//! stream `(seed, t)` (see [`crate::rng`]), and per-worker count vectors are
//! merged by integer addition, so results are bit-identical for every worker
//! count.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::graph::{count_components, ComponentDistribution, ConfigError, NetworkConfig, Realization};
use crate::rng::{TrialRng, TrialStreams};
use crate::stats::{self, PooledBin, Z_95};

/// Trials per unit of parallel work.
const BLOCK: u64 = 4096;

/// Minimum expected count per pooled chi-square bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("workers must be at least 1")]
    NoWorkers,
    #[error("estimates and exact distribution describe different networks: {0}")]
    Mismatch(String),
    #[error("failed to start worker pool: {0}")]
    Pool(String),
}

/// Monte Carlo estimate of `P(m components)`.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub m: usize,
    pub count: u64,
    pub p_hat: f64,
    pub trials: u64,
    /// `sqrt(p_hat (1 - p_hat) / trials)`.
    pub stderr: f64,
    /// Wilson 95% interval.
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_count(m: usize, count: u64, trials: u64, seed: u64) -> Self {
        let t = trials as f64;
        let p_hat = count as f64 / t;
        let (ci_low, ci_high) = stats::wilson_interval(count, trials, Z_95);
        McEstimate {
            m,
            count,
            p_hat,
            trials,
            stderr: (p_hat * (1.0 - p_hat) / t).sqrt(),
            ci_low,
            ci_high,
            seed,
        }
    }
}

/// Draws one realization: `n` uniform positions on `[0, L]`, then the
/// access point, sorted.
pub fn sample_realization(config: &NetworkConfig, rng: &mut TrialRng) -> Realization {
    let random = (0..config.n).map(|_| rng.uniform() * config.length).collect();
    Realization::new(*config, random).expect("uniform draws lie in [0, L]")
}

/// Same draws as [`sample_realization`], into a reused buffer.
fn trial_components(config: &NetworkConfig, rng: &mut TrialRng, buf: &mut Vec<f64>) -> usize {
    buf.clear();
    buf.extend((0..config.n).map(|_| rng.uniform() * config.length));
    buf.extend(config.access_point);
    buf.sort_unstable_by(f64::total_cmp);
    count_components(buf, config.radius)
}

/// Raw histogram: `counts[m]` is the number of trials with `m` components.
pub fn simulate_counts(config: &NetworkConfig, trials: u64, seed: u64, workers: usize) -> Result<Vec<u64>, McError> {
    let config = config.validate()?;
    if trials == 0 {
        return Err(McError::NoTrials);
    }
    if workers == 0 {
        return Err(McError::NoWorkers);
    }
    let streams = TrialStreams::new(seed);
    let bins = config.vertex_count() + 1;
    let run_block = |block: u64| {
        let mut counts = vec![0u64; bins];
        let mut buf = Vec::with_capacity(bins);
        for t in block * BLOCK..((block + 1) * BLOCK).min(trials) {
            let mut rng = streams.stream(t);
            counts[trial_components(&config, &mut rng, &mut buf)] += 1;
        }
        counts
    };
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    let blocks = trials.div_ceil(BLOCK);
    if workers == 1 {
        return Ok((0..blocks).map(run_block).fold(vec![0; bins], merge));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| McError::Pool(e.to_string()))?;
    Ok(pool.install(|| {
        (0..blocks)
            .into_par_iter()
            .map(run_block)
            .reduce(|| vec![0; bins], merge)
    }))
}

/// One estimate per observed component count, in increasing `m`.
pub fn estimate_distribution(
    config: &NetworkConfig,
    trials: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<McEstimate>, McError> {
    let counts = simulate_counts(config, trials, seed, workers)?;
    Ok(counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(m, &c)| McEstimate::from_count(m, c, trials, seed))
        .collect())
}

/// One row of a [`ComparisonReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub m: usize,
    pub exact: f64,
    pub p_hat: f64,
    pub stderr: f64,
    pub z: f64,
}

/// Monte Carlo estimates checked against an exact distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    pub trials: u64,
}

impl ComparisonReport {
    pub fn row(&self, m: usize) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.m == m)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.rows.iter().map(|r| r.z.abs()).fold(0.0, f64::max)
    }
}

/// Per-`m` z-scores plus a pooled chi-square test of `estimates` against
/// `exact`.
///
/// Every `m` in the exact support is reported, including counts that were
/// never observed.
pub fn compare(
    config: &NetworkConfig,
    estimates: &[McEstimate],
    exact: &ComponentDistribution,
) -> Result<ComparisonReport, McError> {
    let cfg_triple = config
        .model_kind()
        .map(|model| (model, config.n, config.length / config.radius));
    let exact_triple = exact.subject.model_triple();
    if cfg_triple.is_none() || cfg_triple != exact_triple {
        return Err(McError::Mismatch(format!("{cfg_triple:?} vs {exact_triple:?}")));
    }
    let trials = estimates.first().ok_or(McError::NoTrials)?.trials;
    if estimates.iter().any(|e| e.trials != trials) {
        return Err(McError::Mismatch("estimates use different trial counts".into()));
    }

    let ms: BTreeSet<usize> = exact
        .probs
        .keys()
        .chain(estimates.iter().map(|e| &e.m))
        .copied()
        .collect();
    let mut rows = Vec::with_capacity(ms.len());
    let mut expected = Vec::with_capacity(ms.len());
    let mut observed = Vec::with_capacity(ms.len());
    for &m in &ms {
        let q = exact.prob(m);
        let est = estimates.iter().find(|e| e.m == m);
        let (p_hat, stderr, count) = est.map_or((0.0, 0.0, 0), |e| (e.p_hat, e.stderr, e.count));
        rows.push(ComparisonRow {
            m,
            exact: q,
            p_hat,
            stderr,
            z: stats::z_score(p_hat, q, trials),
        });
        expected.push(q.clamp(0.0, 1.0) * trials as f64);
        observed.push(count);
    }
    let bins: Vec<PooledBin> = stats::pool_bins(&expected, &observed, MIN_EXPECTED);
    let (chi_square, dof, p_value) = stats::chi_square(&bins);
    Ok(ComparisonReport {
        rows,
        chi_square,
        dof,
        p_value,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{distribution, EvalMode, ModelKind, Ratio};

    fn cfg(model: ModelKind, n: usize, rho: f64) -> NetworkConfig {
        NetworkConfig::from_model(model, n, rho).unwrap()
    }

    #[test]
    fn access_point_only_realization() {
        let c = NetworkConfig::new(0, 3.0, 1.0, Some(0.0)).unwrap();
        let mut rng = TrialStreams::new(9).stream(0);
        assert_eq!(sample_realization(&c, &mut rng).positions(), &[0.0]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = NetworkConfig::new(3, 10.0, 1.0, None).unwrap();
        let streams = TrialStreams::new(123);
        let a = sample_realization(&c, &mut streams.stream(4));
        let b = sample_realization(&c, &mut TrialStreams::new(123).stream(4));
        assert_eq!(a, b);
        assert_eq!(a.positions().len(), 3);
        assert!(a.positions().windows(2).all(|w| w[0] <= w[1]));
        assert!(a.positions().iter().all(|&p| (0.0..=10.0).contains(&p)));
    }

    #[test]
    fn buffered_trial_matches_realization() {
        let c = NetworkConfig::new(8, 4.0, 0.5, Some(1.3)).unwrap();
        let streams = TrialStreams::new(5);
        let mut buf = Vec::new();
        for t in 0..200 {
            let a = sample_realization(&c, &mut streams.stream(t)).component_count();
            let b = trial_components(&c, &mut streams.stream(t), &mut buf);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn saturated_geometry_is_always_connected() {
        let est = estimate_distribution(&cfg(ModelKind::Free, 5, 0.5), 10_000, 3, 2).unwrap();
        assert_eq!(est.len(), 1);
        assert_eq!(est[0].m, 1);
        assert_eq!(est[0].p_hat, 1.0);
        assert_eq!(est[0].count, 10_000);
    }

    #[test]
    fn domain_errors() {
        let c = cfg(ModelKind::Free, 5, 2.0);
        assert_eq!(estimate_distribution(&c, 0, 1, 1), Err(McError::NoTrials));
        assert_eq!(estimate_distribution(&c, 10, 1, 0), Err(McError::NoWorkers));
        let bad = NetworkConfig {
            n: 2,
            length: 1.0,
            radius: -1.0,
            access_point: None,
        };
        assert!(matches!(estimate_distribution(&bad, 10, 1, 1), Err(McError::Config(_))));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = NetworkConfig::new(7, 5.0, 1.0, Some(2.2)).unwrap();
        let one = simulate_counts(&c, 30_001, 77, 1).unwrap();
        for workers in [2, 3, 8] {
            assert_eq!(simulate_counts(&c, 30_001, 77, workers).unwrap(), one);
        }
    }

    #[test]
    fn conservation() {
        let c = cfg(ModelKind::Anchored, 6, 4.0);
        let trials = 12_345;
        let est = estimate_distribution(&c, trials, 11, 4).unwrap();
        assert_eq!(est.iter().map(|e| e.count).sum::<u64>(), trials);
        let total: f64 = est.iter().map(|e| e.p_hat).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for e in &est {
            assert!(0.0 <= e.ci_low && e.ci_low <= e.p_hat && e.p_hat <= e.ci_high && e.ci_high <= 1.0);
            assert_eq!(e.p_hat * trials as f64, e.count as f64);
        }
    }

    #[test]
    fn quadrupling_trials_halves_stderr() {
        let a = McEstimate::from_count(2, 2_500, 10_000, 0);
        let b = McEstimate::from_count(2, 10_000, 40_000, 0);
        assert!((a.stderr / b.stderr - 2.0).abs() < 1e-12);
    }

    #[test]
    fn anchored_single_node() {
        let c = cfg(ModelKind::Anchored, 1, 2.0);
        let est = estimate_distribution(&c, 1_000_000, 42, 4).unwrap();
        let e = &est[0];
        assert_eq!(e.m, 1);
        assert!((e.p_hat - 0.5).abs() <= 4.0 * e.stderr, "{}", e.p_hat);
    }

    #[test]
    fn free_five_nodes_matches_exact() {
        let c = cfg(ModelKind::Free, 5, 5.0);
        let est = estimate_distribution(&c, 1_000_000, 42, 4).unwrap();
        let exact = distribution(ModelKind::Free, 5, &Ratio::new(5.0).unwrap(), EvalMode::Rational).unwrap();
        let report = compare(&c, &est, &exact).unwrap();
        assert!(report.max_abs_z() <= 4.0, "{report:?}");
    }

    #[test]
    fn synthetic_exact_match_gives_zero_statistics() {
        let c = cfg(ModelKind::Anchored, 1, 2.0);
        let exact = distribution(ModelKind::Anchored, 1, &Ratio::new(2.0).unwrap(), EvalMode::Rational).unwrap();
        let est = vec![
            McEstimate::from_count(1, 500, 1000, 0),
            McEstimate::from_count(2, 500, 1000, 0),
        ];
        let report = compare(&c, &est, &exact).unwrap();
        assert!(report.rows.iter().all(|r| r.z == 0.0));
        assert_eq!(report.chi_square, 0.0);
        assert_eq!(report.dof, 1);
    }

    #[test]
    fn synthetic_offset_gives_z_of_ten() {
        let c = cfg(ModelKind::Anchored, 1, 2.0);
        let mut exact = distribution(ModelKind::Anchored, 1, &Ratio::new(2.0).unwrap(), EvalMode::Float).unwrap();
        let est = vec![
            McEstimate::from_count(1, 600, 1000, 0),
            McEstimate::from_count(2, 400, 1000, 0),
        ];
        let shifted = est[0].p_hat - 10.0 * est[0].stderr;
        exact.probs.insert(1, shifted);
        exact.probs.insert(2, 1.0 - shifted);
        let report = compare(&c, &est, &exact).unwrap();
        assert!((report.row(1).unwrap().z - 10.0).abs() < 1e-9);
    }

    #[test]
    fn unobserved_bins_are_reported() {
        let c = cfg(ModelKind::Free, 4, 3.0);
        let exact = distribution(ModelKind::Free, 4, &Ratio::new(3.0).unwrap(), EvalMode::Rational).unwrap();
        let est = vec![McEstimate::from_count(1, 100, 100, 0)];
        let report = compare(&c, &est, &exact).unwrap();
        assert_eq!(report.rows.len(), 4);
        let row = report.row(2).unwrap();
        assert_eq!(row.p_hat, 0.0);
        assert!(row.z.is_finite() && row.z < 0.0);
    }

    #[test]
    fn mismatched_configs_are_rejected() {
        let exact = distribution(ModelKind::Free, 4, &Ratio::new(3.0).unwrap(), EvalMode::Float).unwrap();
        let est = vec![McEstimate::from_count(1, 10, 10, 0)];
        for other in [
            cfg(ModelKind::Anchored, 4, 3.0),
            cfg(ModelKind::Free, 5, 3.0),
            cfg(ModelKind::Free, 4, 3.5),
        ] {
            assert!(matches!(compare(&other, &est, &exact), Err(McError::Mismatch(_))));
        }
        let mid = NetworkConfig::new(4, 3.0, 1.0, Some(1.0)).unwrap();
        assert!(matches!(compare(&mid, &est, &exact), Err(McError::Mismatch(_))));
    }

    #[test]
    fn free_ten_nodes_chi_square() {
        let c = cfg(ModelKind::Free, 10, 8.0);
        let est = estimate_distribution(&c, 100_000, 7, 4).unwrap();
        let exact = distribution(ModelKind::Free, 10, &Ratio::new(8.0).unwrap(), EvalMode::Auto).unwrap();
        let report = compare(&c, &est, &exact).unwrap();
        assert!(report.p_value > 0.001, "{report:?}");
        assert!(report.dof >= 1 && report.chi_square >= 0.0);
    }

    #[test]
    fn reflection_symmetry_of_access_point() {
        let at = |x| NetworkConfig::new(5, 5.0, 1.0, Some(x)).unwrap();
        let left = estimate_distribution(&at(0.0), 200_000, 1, 4).unwrap();
        let right = estimate_distribution(&at(5.0), 200_000, 2, 4).unwrap();
        let exact = distribution(ModelKind::Anchored, 5, &Ratio::new(5.0).unwrap(), EvalMode::Rational).unwrap();
        for m in 1..=6 {
            let get = |v: &[McEstimate]| v.iter().find(|e| e.m == m).map_or((0.0, 0.0), |e| (e.p_hat, e.stderr));
            let (pl, sl) = get(&left);
            let (pr, sr) = get(&right);
            let se = (sl * sl + sr * sr).sqrt();
            if se > 0.0 {
                assert!(((pl - pr) / se).abs() <= 4.0, "m={m}: {pl} vs {pr}");
            }
            assert!((pl - exact.prob(m)).abs() <= 4.0 * sl.max(1e-6), "m={m}");
        }
    }
}
