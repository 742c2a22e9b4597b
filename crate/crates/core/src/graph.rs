//! Network model types and component counting on a realized set of positions.
//!
//! A realization is a sorted list of vertex positions on `[0, L]`. Two
//! vertices share an edge when their distance is at most the radius, so on a
//! line the components are separated exactly by the consecutive gaps that
//! exceed the radius. Counting never needs an explicit edge set.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use crate::exact::{ModelKind, Ratio};

/// Physical parameters of one experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    /// Number of uniformly placed random nodes.
    pub n: usize,
    /// Segment length `L`.
    pub length: f64,
    /// Transmission radius `r`.
    pub radius: f64,
    /// Position of a fixed access point, if any.
    pub access_point: Option<f64>,
}

/// One violated constraint on a [`NetworkConfig`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub constraint: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// Every violation found while validating a [`NetworkConfig`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid network config: {}", join_violations(.violations))]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

impl NetworkConfig {
    /// Builds and validates a config.
    pub fn new(n: usize, length: f64, radius: f64, access_point: Option<f64>) -> Result<Self, ConfigError> {
        NetworkConfig {
            n,
            length,
            radius,
            access_point,
        }
        .validate()
    }

    /// Config for a dimensionless ratio `rho = L / r`, with `L = rho` and
    /// `r = 1`, so that `length / radius` is exactly `rho`.
    pub fn from_model(model: ModelKind, n: usize, rho: f64) -> Result<Self, ConfigError> {
        let access_point = match model {
            ModelKind::Free => None,
            ModelKind::Anchored => Some(0.0),
        };
        NetworkConfig::new(n, rho, 1.0, access_point)
    }

    /// Returns the config unchanged if it is valid, otherwise the complete
    /// list of violations.
    pub fn validate(self) -> Result<Self, ConfigError> {
        let mut violations = Vec::new();
        if !(self.length > 0.0 && self.length.is_finite()) {
            violations.push(Violation {
                field: "length",
                constraint: "segment length must be positive and finite",
            });
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            violations.push(Violation {
                field: "radius",
                constraint: "radius must be positive and finite",
            });
        }
        if let Some(x) = self.access_point {
            // NaN fails both comparisons.
            if !(x >= 0.0 && x <= self.length) {
                violations.push(Violation {
                    field: "access_point",
                    constraint: "access point outside segment [0, L]",
                });
            }
        }
        if violations.is_empty() {
            Ok(self)
        } else {
            Err(ConfigError { violations })
        }
    }

    /// Number of vertices in every realization: `n`, plus one for the
    /// access point.
    pub fn vertex_count(&self) -> usize {
        self.n + usize::from(self.access_point.is_some())
    }

    /// `L / r`, rounded once to binary64.
    pub fn ratio(&self) -> Option<Ratio> {
        Ratio::new(self.length / self.radius).ok()
    }

    /// The closed-form model this config corresponds to, if any.
    ///
    /// Only configs without an access point or with the access point at
    /// exactly `0` have closed forms.
    pub fn model_kind(&self) -> Option<ModelKind> {
        match self.access_point {
            None => Some(ModelKind::Free),
            Some(0.0) => Some(ModelKind::Anchored),
            Some(_) => None,
        }
    }
}

/// Error building a [`Realization`] from explicit positions.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RealizationError {
    #[error("expected {expected} random positions, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("position {0} lies outside the segment")]
    OutOfRange(f64),
}

/// Sorted vertex positions drawn under a [`NetworkConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    positions: Vec<f64>,
    config: NetworkConfig,
}

impl Realization {
    /// Builds a realization from the `n` random positions. The access point,
    /// if configured, is inserted and everything is sorted.
    pub fn new(config: NetworkConfig, mut random: Vec<f64>) -> Result<Self, RealizationError> {
        if random.len() != config.n {
            return Err(RealizationError::WrongCount {
                expected: config.n,
                got: random.len(),
            });
        }
        if let Some(&bad) = random.iter().find(|&&p| !(0.0..=config.length).contains(&p)) {
            return Err(RealizationError::OutOfRange(bad));
        }
        random.extend(config.access_point);
        random.sort_unstable_by(f64::total_cmp);
        Ok(Realization {
            positions: random,
            config,
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Component count under the config's radius.
    pub fn component_count(&self) -> usize {
        count_components(&self.positions, self.config.radius)
    }
}

/// Number of connected components of the interval graph on sorted
/// `positions` with edge rule `|a - b| <= radius`.
///
/// Equals one plus the number of consecutive gaps strictly greater than
/// `radius`; an empty list has zero components.
///
/// # Panics
///
/// In debug builds, panics if `positions` is not sorted ascending.
pub fn count_components(positions: &[f64], radius: f64) -> usize {
    debug_assert!(
        positions.windows(2).all(|w| w[0] <= w[1]),
        "count_components: positions must be sorted ascending"
    );
    match positions {
        [] => 0,
        [first, rest @ ..] => {
            let mut prev = *first;
            let mut count = 1;
            for &p in rest {
                count += usize::from(p - prev > radius);
                prev = p;
            }
            count
        }
    }
}

/// Where a [`ComponentDistribution`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    ExactFloat,
    ExactRational,
    MonteCarlo,
    Oracle,
}

/// What a [`ComponentDistribution`] describes.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Config(NetworkConfig),
    Model { model: ModelKind, n: usize, rho: f64 },
}

impl Subject {
    /// `(model, n, rho)` when the subject has a closed form.
    pub fn model_triple(&self) -> Option<(ModelKind, usize, f64)> {
        match *self {
            Subject::Model { model, n, rho } => Some((model, n, rho)),
            Subject::Config(cfg) => Some((cfg.model_kind()?, cfg.n, cfg.length / cfg.radius)),
        }
    }
}

/// Probability of each component count `m >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDistribution {
    pub probs: BTreeMap<usize, f64>,
    /// Exact values; present only for [`Provenance::ExactRational`].
    pub exact: Option<BTreeMap<usize, BigRational>>,
    pub provenance: Provenance,
    pub subject: Subject,
}

impl ComponentDistribution {
    /// `P(m)`, zero for counts outside the stored support.
    pub fn prob(&self, m: usize) -> f64 {
        self.probs.get(&m).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        crate::summation::NeumaierSum::sum_of(self.probs.values().copied())
    }
}
