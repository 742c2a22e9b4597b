//! Component-count distributions for one-dimensional random ad hoc networks.
//!
//! `n` nodes are placed uniformly at random on a segment `[0, L]` and two
//! nodes are linked when they are at most `r` apart. Optionally a fixed
//! access point sits at a known position. This crate provides:
//!
//! * [`exact`]: closed-form probabilities `Q_m` of exactly `m` components,
//!   for the free model and for an access point at `0`, in binary64 with
//!   compensated summation or in exact rational arithmetic;
//! * [`monte_carlo`]: a seeded, worker-count-independent simulator for any
//!   access point position, with z-scores and a pooled chi-square test;
//! * [`oracle`]: brute-force grid quadrature for `n <= 3`;
//! * [`sweep`] and [`validate`]: the figure sweeps and self-check suites
//!   behind the `linenet` command-line tool.
//!
//! ```
//! use linenet::exact::{q_m, EvalMode, ModelKind, Ratio};
//!
//! let rho = Ratio::new(2.0).unwrap();
//! let q = q_m(ModelKind::Free, 2, 1, &rho, EvalMode::Rational).unwrap();
//! assert_eq!(q.float_value, 0.75);
//! ```
//!
//! The `book/` directory holds a longer guide; its code blocks are compiled
//! and run as doc-tests of this crate.

// `!(a <= b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod binomial;
pub mod exact;
pub mod graph;
pub mod monte_carlo;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod summation;
pub mod svg;
pub mod sweep;
pub mod validate;

pub use binomial::{binomial, ln_binomial};
pub use exact::{distribution, q_1, q_m, truncation_index, EvalMode, ExactValue, ModelKind, Ratio};
pub use graph::{count_components, ComponentDistribution, NetworkConfig, Provenance, Realization};
pub use monte_carlo::{compare, estimate_distribution, sample_realization, ComparisonReport, McEstimate};
pub use oracle::{quadrature_q_m, OracleModel, QuadratureResult};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/exact.md")]
    mod exact {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
