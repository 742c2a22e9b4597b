//! Brute-force grid quadrature of the component-count probabilities.
//!
//! Integrates the indicator "exactly `m` components" over `[0, 1]^n` with the
//! midpoint rule, using `L = 1` and `r = 1 / rho`. The integrand only calls
//! [`count_components`]; there is no closed-form code here, so a bug in the
//! alternating sums cannot cancel against the oracle.
//!
//! The integrand is symmetric under permutations of the `n` coordinates, so
//! only sorted index tuples are visited, each weighted by the number of
//! distinct permutations of its indices. Cell counts are integers, so the
//! parallel reduction is exact and the result does not depend on scheduling.

use rayon::prelude::*;

use crate::exact::{ModelKind, Ratio};
use crate::graph::count_components;

/// Largest supported node count; the cost grows as `grid^n`.
pub const MAX_NODES: usize = 3;

/// Smallest accepted number of grid points per dimension.
pub const MIN_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("quadrature supports 1 <= n <= {MAX_NODES}, got n = {0}")]
    NodeCount(usize),
    #[error("grid must have at least {MIN_GRID} points per dimension, got {0}")]
    GridTooCoarse(usize),
    #[error("component count m must be at least 1")]
    ZeroComponents,
    #[error("access point fraction must lie in [0, 1], got {0}")]
    AccessPoint(f64),
}

/// Model for the oracle: the two closed-form models plus an access point at
/// an arbitrary fraction `x / L` of the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleModel {
    Free,
    Anchored,
    AnchoredAt(f64),
}

impl OracleModel {
    fn anchor(self) -> Option<f64> {
        match self {
            OracleModel::Free => None,
            OracleModel::Anchored => Some(0.0),
            OracleModel::AnchoredAt(x) => Some(x),
        }
    }
}

impl From<ModelKind> for OracleModel {
    fn from(model: ModelKind) -> Self {
        match model {
            ModelKind::Free => OracleModel::Free,
            ModelKind::Anchored => OracleModel::Anchored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    /// Estimate on the finer of the two grids.
    pub value: f64,
    /// Points per dimension of the finer grid.
    pub grid_points_per_dim: usize,
    /// `|value(grid) - value(2 grid)|`.
    pub richardson_error: f64,
}

/// `P(exactly m components)` by midpoint quadrature at `grid` and
/// `2 * grid` points per dimension.
pub fn quadrature_q_m(
    model: impl Into<OracleModel>,
    n: usize,
    m: usize,
    ratio: &Ratio,
    grid: usize,
) -> Result<QuadratureResult, OracleError> {
    if m == 0 {
        return Err(OracleError::ZeroComponents);
    }
    let all = quadrature_distribution(model, n, ratio, grid)?;
    Ok(all.get(m - 1).copied().unwrap_or(QuadratureResult {
        value: 0.0,
        grid_points_per_dim: 2 * grid,
        richardson_error: 0.0,
    }))
}

/// Quadrature estimates for every `m` from 1 to the vertex count.
pub fn quadrature_distribution(
    model: impl Into<OracleModel>,
    n: usize,
    ratio: &Ratio,
    grid: usize,
) -> Result<Vec<QuadratureResult>, OracleError> {
    let model = model.into();
    if !(1..=MAX_NODES).contains(&n) {
        return Err(OracleError::NodeCount(n));
    }
    if grid < MIN_GRID {
        return Err(OracleError::GridTooCoarse(grid));
    }
    if let Some(x) = model.anchor() {
        if !(0.0..=1.0).contains(&x) {
            return Err(OracleError::AccessPoint(x));
        }
    }
    let radius = 1.0 / ratio.value();
    let coarse = cell_counts(model.anchor(), n, radius, grid);
    let fine = cell_counts(model.anchor(), n, radius, 2 * grid);
    let volume = |g: usize| (g as f64).powi(n as i32);
    Ok(coarse
        .iter()
        .zip(&fine)
        .skip(1)
        .map(|(&c, &f)| {
            let c = c as f64 / volume(grid);
            let f = f as f64 / volume(2 * grid);
            QuadratureResult {
                value: f,
                grid_points_per_dim: 2 * grid,
                richardson_error: (c - f).abs(),
            }
        })
        .collect())
}

/// `counts[m]`: number of grid cells whose midpoint configuration has `m`
/// components.
fn cell_counts(anchor: Option<f64>, n: usize, radius: f64, grid: usize) -> Vec<u64> {
    let vertices = n + usize::from(anchor.is_some());
    let mid = |j: usize| (j as f64 + 0.5) / grid as f64;
    let add = |a: Vec<u64>, b: Vec<u64>| a.into_iter().zip(b).map(|(x, y)| x + y).collect::<Vec<_>>();

    (0..grid)
        .into_par_iter()
        .map(|first| {
            let mut counts = vec![0u64; vertices + 1];
            let mut idx = [first; MAX_NODES];
            let mut buf = [0.0f64; MAX_NODES + 1];
            // Odometer over first <= idx[1] <= ... <= idx[n-1] < grid.
            loop {
                let len = fill_sorted(&idx[..n], anchor, &mid, &mut buf);
                counts[count_components(&buf[..len], radius)] += permutations(&idx[..n]);
                let Some(pos) = (1..n).rev().find(|&p| idx[p] + 1 < grid) else {
                    break;
                };
                idx[pos] += 1;
                for p in pos + 1..n {
                    idx[p] = idx[pos];
                }
            }
            counts
        })
        .reduce(|| vec![0u64; vertices + 1], add)
}

/// Midpoints for sorted indices plus the anchor, in ascending order.
fn fill_sorted(idx: &[usize], anchor: Option<f64>, mid: &impl Fn(usize) -> f64, buf: &mut [f64]) -> usize {
    let mut len = 0;
    let mut pending = anchor;
    for &j in idx {
        let p = mid(j);
        if let Some(a) = pending.filter(|&a| a <= p) {
            buf[len] = a;
            len += 1;
            pending = None;
        }
        buf[len] = p;
        len += 1;
    }
    if let Some(a) = pending {
        buf[len] = a;
        len += 1;
    }
    len
}

/// Number of distinct orderings of a sorted index tuple.
fn permutations(idx: &[usize]) -> u64 {
    let factorial = |k: usize| (1..=k as u64).product::<u64>();
    let mut result = factorial(idx.len());
    let mut run = 1;
    for w in idx.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            result /= factorial(run);
            run = 1;
        }
    }
    result / factorial(run)
}
