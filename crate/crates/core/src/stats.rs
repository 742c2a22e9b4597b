//! Binomial intervals and chi-square goodness of fit.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials`.
///
/// The bounds always bracket the point estimate and stay inside `[0, 1]`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    assert!(trials > 0, "wilson_interval needs at least one trial");
    let t = trials as f64;
    let p = successes as f64 / t;
    let z2 = z * z;
    let denom = 1.0 + z2 / t;
    let center = (p + z2 / (2.0 * t)) / denom;
    let half = z / denom * (p * (1.0 - p) / t + z2 / (4.0 * t * t)).sqrt();
    let low = (center - half).max(0.0).min(p);
    let high = (center + half).min(1.0).max(p);
    (low, high)
}

/// Standardized difference `(p_hat - q) / se`.
///
/// Uses the empirical standard error, or the exact-variance one when the
/// empirical estimate is degenerate (`p_hat` of 0 or 1).
pub fn z_score(p_hat: f64, q: f64, trials: u64) -> f64 {
    let t = trials as f64;
    let diff = p_hat - q;
    if diff == 0.0 {
        return 0.0;
    }
    let mut se = (p_hat * (1.0 - p_hat) / t).sqrt();
    if !(se > 0.0) {
        let q = q.clamp(0.0, 1.0);
        se = (q * (1.0 - q) / t).sqrt();
    }
    if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY.copysign(diff)
    }
}

/// One bin after pooling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PooledBin {
    pub expected: f64,
    pub observed: u64,
}

/// Merges adjacent bins so that each pooled bin has expected count at least
/// `min_expected`. Sparse bins are folded toward the mode (the bin with the
/// largest expected count).
pub fn pool_bins(expected: &[f64], observed: &[u64], min_expected: f64) -> Vec<PooledBin> {
    assert_eq!(expected.len(), observed.len());
    if expected.is_empty() {
        return Vec::new();
    }
    let mode = expected
        .iter()
        .enumerate()
        .fold(0, |best, (i, &e)| if e > expected[best] { i } else { best });

    let sweep = |indices: &mut dyn Iterator<Item = usize>| {
        let mut bins = Vec::new();
        let mut pending = PooledBin {
            expected: 0.0,
            observed: 0,
        };
        for i in indices {
            pending.expected += expected[i];
            pending.observed += observed[i];
            if pending.expected >= min_expected {
                bins.push(pending);
                pending = PooledBin {
                    expected: 0.0,
                    observed: 0,
                };
            }
        }
        (bins, pending)
    };
    let (left, left_rest) = sweep(&mut (0..mode));
    let (mut right, right_rest) = sweep(&mut (mode + 1..expected.len()).rev());
    right.reverse();

    let centre = PooledBin {
        expected: expected[mode] + left_rest.expected + right_rest.expected,
        observed: observed[mode] + left_rest.observed + right_rest.observed,
    };
    let mut bins = left;
    bins.push(centre);
    bins.extend(right);

    // The mode bin itself can only be sparse when the whole sample is tiny.
    let centre_idx = bins.iter().position(|b| *b == centre).unwrap_or(0);
    if centre.expected < min_expected && bins.len() > 1 {
        let neighbour = match (centre_idx.checked_sub(1), bins.get(centre_idx + 1)) {
            (Some(l), Some(r)) if r.expected > bins[l].expected => centre_idx + 1,
            (Some(l), _) => l,
            (None, _) => centre_idx + 1,
        };
        let c = bins.remove(centre_idx);
        let target = if neighbour > centre_idx {
            neighbour - 1
        } else {
            neighbour
        };
        bins[target].expected += c.expected;
        bins[target].observed += c.observed;
    }
    bins
}

/// Pearson statistic, degrees of freedom and upper-tail p-value.
///
/// A single pooled bin carries no information; it is reported as statistic
/// 0 with one degree of freedom and p-value 1.
pub fn chi_square(bins: &[PooledBin]) -> (f64, usize, f64) {
    if bins.len() < 2 {
        return (0.0, 1, 1.0);
    }
    let stat: f64 = bins
        .iter()
        .map(|b| {
            let d = b.observed as f64 - b.expected;
            if b.expected > 0.0 {
                d * d / b.expected
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .sum();
    let dof = bins.len() - 1;
    let p = if stat.is_finite() {
        ChiSquared::new(dof as f64).expect("dof >= 1").sf(stat)
    } else {
        0.0
    };
    (stat, dof, p)
}
