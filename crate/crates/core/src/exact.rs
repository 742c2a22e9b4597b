//! Closed-form component-count probabilities.
//!
//! For `n` uniform nodes on `[0, L]` with radius `r` and `rho = L / r`, the
//! probability of exactly `m` components is the alternating sum
//!
//! ```text
//! Q_m = sum_{i = m-1}^{k} (-1)^(i-m+1) C(i, m-1) C(N, i) (1 - i/rho)^n
//! ```
//!
//! with `N = n - 1` and `k = min(n - 1, floor(rho))` for the free model, and
//! `N = n` and `k = min(n, floor(rho))` when an access point sits at `0`.
//!
//! The summands can exceed the result by many orders of magnitude, so the
//! float path uses compensated summation and reports a cancellation ratio;
//! the rational path is exact. [`EvalMode::Auto`] runs the float path and
//! escalates to exact rationals once the ratio passes
//! [`ESCALATION_THRESHOLD`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Pow, Signed, ToPrimitive, Zero};

use crate::binomial::{binomial, ln_binomial};
use crate::graph::{ComponentDistribution, Provenance, Subject};
use crate::summation::NeumaierSum;

/// Float results whose cancellation ratio exceeds this are recomputed with
/// exact rationals in [`EvalMode::Auto`].
pub const ESCALATION_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExactError {
    #[error("the closed forms need at least one random node (n >= 1)")]
    NoRandomNodes,
    #[error("component count m must be at least 1")]
    ZeroComponents,
    #[error("ratio L/r must be positive and finite, got {0}")]
    InvalidRatio(f64),
}

/// Which closed form applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    /// No fixed node.
    Free,
    /// A fixed access point at position `0`.
    Anchored,
}

impl ModelKind {
    /// Upper argument `N` of the `C(N, i)` factor.
    pub fn binomial_top(self, n: usize) -> usize {
        match self {
            ModelKind::Free => n.saturating_sub(1),
            ModelKind::Anchored => n,
        }
    }

    /// Largest possible component count: one per vertex.
    pub fn max_components(self, n: usize) -> usize {
        match self {
            ModelKind::Free => n,
            ModelKind::Anchored => n + 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Free => "free",
            ModelKind::Anchored => "anchored",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(ModelKind::Free),
            "anchored" => Ok(ModelKind::Anchored),
            other => Err(format!("unknown model {other:?} (expected free or anchored)")),
        }
    }
}

/// The dimensionless ratio `rho = L / r`, held both as binary64 and as the
/// exact rational value of that binary64.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratio {
    value: f64,
    exact: BigRational,
}

impl Ratio {
    pub fn new(value: f64) -> Result<Self, ExactError> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(ExactError::InvalidRatio(value));
        }
        let exact = BigRational::from_float(value).ok_or(ExactError::InvalidRatio(value))?;
        Ok(Ratio { value, exact })
    }

    /// `L / r`, rounded once to binary64.
    pub fn from_length_radius(length: f64, radius: f64) -> Result<Self, ExactError> {
        Ratio::new(length / radius)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    /// `floor(rho)`, computed on the exact rational and saturated to `u64`.
    pub fn floor(&self) -> u64 {
        self.exact.floor().to_integer().to_u64().unwrap_or(u64::MAX)
    }
}

/// How to evaluate the alternating sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EvalMode {
    /// Binary64 terms with compensated summation.
    Float,
    /// Exact big-integer rationals.
    Rational,
    /// Float first, rational when the cancellation ratio is too large.
    Auto,
}

impl EvalMode {
    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Float => "float",
            EvalMode::Rational => "rational",
            EvalMode::Auto => "auto",
        }
    }
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "float" => Ok(EvalMode::Float),
            "rational" => Ok(EvalMode::Rational),
            "auto" => Ok(EvalMode::Auto),
            other => Err(format!("unknown mode {other:?} (expected float, rational or auto)")),
        }
    }
}

/// A probability with its evaluation diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactValue {
    /// Raw binary64 result. Never clamped; under cancellation it may fall
    /// slightly outside `[0, 1]`.
    pub float_value: f64,
    /// Exact value; `float_value` is its correctly rounded binary64.
    pub rational_value: Option<BigRational>,
    pub max_term_magnitude: f64,
    /// `max_term_magnitude / max(|float_value|, f64::MIN_POSITIVE)`.
    pub cancellation_ratio: f64,
    /// [`EvalMode::Float`] or [`EvalMode::Rational`], never `Auto`.
    pub mode_used: EvalMode,
}

impl ExactValue {
    fn new(float_value: f64, rational_value: Option<BigRational>, max_term: f64, mode: EvalMode) -> Self {
        ExactValue {
            float_value,
            rational_value,
            max_term_magnitude: max_term,
            cancellation_ratio: max_term / float_value.abs().max(f64::MIN_POSITIVE),
            mode_used: mode,
        }
    }

    fn needs_escalation(&self) -> bool {
        !self.float_value.is_finite() || !(self.cancellation_ratio <= ESCALATION_THRESHOLD)
    }
}

fn check_inputs(n: usize, m: usize) -> Result<(), ExactError> {
    if n == 0 {
        return Err(ExactError::NoRandomNodes);
    }
    if m == 0 {
        return Err(ExactError::ZeroComponents);
    }
    Ok(())
}

/// Upper summation limit: `min(n - 1, floor(rho))` for the free model,
/// `min(n, floor(rho))` for the anchored one.
pub fn truncation_index(model: ModelKind, n: usize, ratio: &Ratio) -> Result<usize, ExactError> {
    if n == 0 {
        return Err(ExactError::NoRandomNodes);
    }
    let top = model.binomial_top(n);
    Ok(usize::try_from(ratio.floor()).map_or(top, |f| f.min(top)))
}

fn alternating_sign(i: usize, m: usize) -> bool {
    // true when (-1)^(i - m + 1) is negative
    (i + 1 - m) % 2 == 1
}

/// Per-model precomputation for the binary64 path.
struct FloatTerms {
    n: usize,
    rho: f64,
    top: u64,
    k: usize,
    /// `C(N, i)` for `i` in `0..=k`.
    top_binomials: Vec<BigUint>,
}

impl FloatTerms {
    fn new(model: ModelKind, n: usize, ratio: &Ratio) -> Result<Self, ExactError> {
        let k = truncation_index(model, n, ratio)?;
        let top = model.binomial_top(n) as u64;
        let top_binomials = (0..=k as u64).map(|i| binomial(top, i)).collect();
        Ok(FloatTerms {
            n,
            rho: ratio.value(),
            top,
            k,
            top_binomials,
        })
    }

    /// Magnitude of the `i`-th summand given its exact binomial coefficient.
    ///
    /// Falls back to the log domain when the coefficient overflows binary64
    /// or the power leaves the normal range.
    fn magnitude(&self, i: usize, coeff: &BigUint, ln_coeff: impl FnOnce() -> f64) -> f64 {
        // Exact: rho - i is representable whenever i <= floor(rho).
        let base = (self.rho - i as f64) / self.rho;
        if base == 0.0 {
            return 0.0;
        }
        let coeff = coeff.to_f64().unwrap_or(f64::INFINITY);
        if let (true, Ok(e)) = (coeff.is_finite(), i32::try_from(self.n)) {
            let pow = base.powi(e);
            if pow >= f64::MIN_POSITIVE {
                return coeff * pow;
            }
        }
        (ln_coeff() + self.n as f64 * base.ln()).exp()
    }

    fn q_m(&self, m: usize) -> ExactValue {
        let mut acc = NeumaierSum::new();
        let mut max_term = 0.0f64;
        for i in (m - 1)..=self.k {
            let coeff = binomial(i as u64, (m - 1) as u64) * &self.top_binomials[i];
            let t = self.magnitude(i, &coeff, || {
                ln_binomial(i as u64, (m - 1) as u64) + ln_binomial(self.top, i as u64)
            });
            max_term = max_term.max(t);
            acc += if alternating_sign(i, m) { -t } else { t };
        }
        ExactValue::new(acc.value(), None, max_term, EvalMode::Float)
    }

    fn q_1(&self) -> ExactValue {
        let mut acc = NeumaierSum::new();
        let mut max_term = 0.0f64;
        for (i, coeff) in self.top_binomials.iter().enumerate() {
            let t = self.magnitude(i, coeff, || ln_binomial(self.top, i as u64));
            max_term = max_term.max(t);
            acc += if i % 2 == 1 { -t } else { t };
        }
        ExactValue::new(acc.value(), None, max_term, EvalMode::Float)
    }
}

/// Per-model precomputation for the exact path.
///
/// With `rho = p / q`, every summand is `C(i, m-1) C(N, i) (p - i q)^n / p^n`,
/// so each probability is one big-integer sum over the common denominator.
struct RationalTerms {
    k: usize,
    /// `C(N, i) (p - i q)^n` for `i` in `0..=k`.
    numerators: Vec<BigInt>,
    denominator: BigInt,
}

impl RationalTerms {
    fn new(model: ModelKind, n: usize, ratio: &Ratio) -> Result<Self, ExactError> {
        let k = truncation_index(model, n, ratio)?;
        let top = model.binomial_top(n) as u64;
        let p = ratio.exact().numer();
        let q = ratio.exact().denom();
        let n32 = u32::try_from(n).expect("node count fits in u32");
        let numerators = (0..=k)
            .map(|i| {
                let base = p - q * BigInt::from(i);
                BigInt::from(binomial(top, i as u64)) * Pow::pow(&base, n32)
            })
            .collect();
        Ok(RationalTerms {
            k,
            numerators,
            denominator: Pow::pow(p, n32),
        })
    }

    fn q_m(&self, m: usize) -> ExactValue {
        let mut numer = BigInt::zero();
        let mut max_numer = BigInt::zero();
        for i in (m - 1)..=self.k {
            let t = BigInt::from(binomial(i as u64, (m - 1) as u64)) * &self.numerators[i];
            if t > max_numer {
                max_numer = t.clone();
            }
            if alternating_sign(i, m) {
                numer -= t;
            } else {
                numer += t;
            }
        }
        self.finish(numer, max_numer)
    }

    fn q_1(&self) -> ExactValue {
        let mut numer = BigInt::zero();
        let mut max_numer = BigInt::zero();
        for (i, t) in self.numerators.iter().enumerate() {
            if *t > max_numer {
                max_numer = t.clone();
            }
            if i % 2 == 1 {
                numer -= t;
            } else {
                numer += t;
            }
        }
        self.finish(numer, max_numer)
    }

    fn finish(&self, numer: BigInt, max_numer: BigInt) -> ExactValue {
        let max_term = rational_to_f64(&BigRational::new(max_numer, self.denominator.clone()));
        let value = BigRational::new(numer, self.denominator.clone());
        ExactValue::new(rational_to_f64(&value), Some(value), max_term, EvalMode::Rational)
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    r.to_f64().unwrap_or_else(|| {
        // Only reachable for magnitudes outside binary64 range.
        if r.numer().bits() > r.denom().bits() {
            f64::INFINITY.copysign(if r.is_negative() { -1.0 } else { 1.0 })
        } else {
            0.0
        }
    })
}

/// `Q_m` for the given model: the probability of exactly `m` components.
///
/// Returns exactly zero when `m - 1` exceeds the truncation index.
pub fn q_m(model: ModelKind, n: usize, m: usize, ratio: &Ratio, mode: EvalMode) -> Result<ExactValue, ExactError> {
    check_inputs(n, m)?;
    let k = truncation_index(model, n, ratio)?;
    if m - 1 > k {
        let exact = matches!(mode, EvalMode::Rational).then(BigRational::zero);
        let used = if exact.is_some() {
            EvalMode::Rational
        } else {
            EvalMode::Float
        };
        return Ok(ExactValue::new(0.0, exact, 0.0, used));
    }
    Ok(match mode {
        EvalMode::Float => FloatTerms::new(model, n, ratio)?.q_m(m),
        EvalMode::Rational => RationalTerms::new(model, n, ratio)?.q_m(m),
        EvalMode::Auto => {
            let v = FloatTerms::new(model, n, ratio)?.q_m(m);
            if v.needs_escalation() {
                RationalTerms::new(model, n, ratio)?.q_m(m)
            } else {
                v
            }
        }
    })
}

/// `Q_1`, the probability that the network is connected.
///
/// Specialized loop without the `C(i, 0)` factor; bitwise identical to
/// `q_m(model, n, 1, ..)`.
pub fn q_1(model: ModelKind, n: usize, ratio: &Ratio, mode: EvalMode) -> Result<ExactValue, ExactError> {
    check_inputs(n, 1)?;
    Ok(match mode {
        EvalMode::Float => FloatTerms::new(model, n, ratio)?.q_1(),
        EvalMode::Rational => RationalTerms::new(model, n, ratio)?.q_1(),
        EvalMode::Auto => {
            let v = FloatTerms::new(model, n, ratio)?.q_1();
            if v.needs_escalation() {
                RationalTerms::new(model, n, ratio)?.q_1()
            } else {
                v
            }
        }
    })
}

/// `Q_m` for every `m` from 1 to the vertex count, in order.
///
/// In [`EvalMode::Auto`] the whole vector is recomputed exactly if any single
/// entry needs escalation, so all entries share one evaluation mode.
pub fn evaluate_all(model: ModelKind, n: usize, ratio: &Ratio, mode: EvalMode) -> Result<Vec<ExactValue>, ExactError> {
    check_inputs(n, 1)?;
    let ms = 1..=model.max_components(n);
    let k = truncation_index(model, n, ratio)?;
    let zero = |exact: bool| {
        let used = if exact { EvalMode::Rational } else { EvalMode::Float };
        ExactValue::new(0.0, exact.then(BigRational::zero), 0.0, used)
    };
    let float = || -> Result<Vec<ExactValue>, ExactError> {
        let terms = FloatTerms::new(model, n, ratio)?;
        Ok(ms
            .clone()
            .map(|m| if m - 1 > k { zero(false) } else { terms.q_m(m) })
            .collect())
    };
    let rational = || -> Result<Vec<ExactValue>, ExactError> {
        let terms = RationalTerms::new(model, n, ratio)?;
        Ok(ms
            .clone()
            .map(|m| if m - 1 > k { zero(true) } else { terms.q_m(m) })
            .collect())
    };
    match mode {
        EvalMode::Float => float(),
        EvalMode::Rational => rational(),
        EvalMode::Auto => {
            let values = float()?;
            if values.iter().any(ExactValue::needs_escalation) {
                rational()
            } else {
                Ok(values)
            }
        }
    }
}

/// The full component-count distribution.
pub fn distribution(
    model: ModelKind,
    n: usize,
    ratio: &Ratio,
    mode: EvalMode,
) -> Result<ComponentDistribution, ExactError> {
    let values = evaluate_all(model, n, ratio, mode)?;
    let rational = values.iter().all(|v| v.rational_value.is_some());
    let probs = values.iter().enumerate().map(|(i, v)| (i + 1, v.float_value)).collect();
    let exact = rational.then(|| {
        values
            .into_iter()
            .enumerate()
            .filter_map(|(i, v)| Some((i + 1, v.rational_value?)))
            .collect::<BTreeMap<_, _>>()
    });
    Ok(ComponentDistribution {
        probs,
        exact,
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

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use proptest::prelude::*;

    use ModelKind::{Anchored, Free};

    fn rho(v: f64) -> Ratio {
        Ratio::new(v).unwrap()
    }

    fn exact(model: ModelKind, n: usize, m: usize, r: f64) -> BigRational {
        q_m(model, n, m, &rho(r), EvalMode::Rational)
            .unwrap()
            .rational_value
            .unwrap()
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncation_index(Free, 5, &rho(10.0)), Ok(4));
        assert_eq!(truncation_index(Anchored, 5, &rho(3.7)), Ok(3));
        assert_eq!(truncation_index(Free, 20, &rho(3.0)), Ok(3));
        assert_eq!(truncation_index(Free, 0, &rho(3.0)), Err(ExactError::NoRandomNodes));
        // Just below an integer must not round up.
        assert_eq!(truncation_index(Anchored, 9, &rho(3.0f64.next_down())), Ok(2));
    }

    #[test]
    fn ratio_is_exact_binary_value() {
        let r = rho(17.3);
        assert_eq!(r.exact().to_f64(), Some(17.3));
        assert_eq!(r.exact().denom(), &BigInt::from(1u64 << 48));
        assert!(Ratio::new(0.0).is_err());
        assert!(Ratio::new(f64::INFINITY).is_err());
        assert!(Ratio::new(f64::NAN).is_err());
        assert_eq!(Ratio::from_length_radius(10.0, 4.0).unwrap().value(), 2.5);
    }

    #[test]
    fn closed_examples() {
        for mode in [EvalMode::Float, EvalMode::Rational, EvalMode::Auto] {
            let v = q_m(Anchored, 1, 1, &rho(2.0), mode).unwrap();
            assert_eq!(v.float_value, 0.5);
            let v = q_m(Free, 2, 1, &rho(2.0), mode).unwrap();
            assert_eq!(v.float_value, 0.75);
            let v = q_m(Free, 5, 1, &rho(0.5), mode).unwrap();
            assert_eq!(v.float_value, 1.0);
            let v = q_m(Anchored, 5, 7, &rho(10.0), mode).unwrap();
            assert_eq!(v.float_value, 0.0);
        }
        assert_eq!(exact(Anchored, 1, 1, 2.0), BigRational::new(1.into(), 2.into()));
        assert_eq!(exact(Free, 2, 1, 2.0), BigRational::new(3.into(), 4.into()));
        assert_eq!(exact(Anchored, 5, 7, 10.0), BigRational::zero());
    }

    #[test]
    fn domain_errors() {
        assert_eq!(
            q_m(Free, 5, 0, &rho(2.0), EvalMode::Float),
            Err(ExactError::ZeroComponents)
        );
        assert_eq!(
            q_m(Free, 0, 1, &rho(2.0), EvalMode::Float),
            Err(ExactError::NoRandomNodes)
        );
        assert!(distribution(Anchored, 0, &rho(2.0), EvalMode::Auto).is_err());
    }

    #[test]
    fn small_distributions() {
        let d = distribution(Free, 1, &rho(7.0), EvalMode::Rational).unwrap();
        assert_eq!(d.probs, BTreeMap::from([(1, 1.0)]));
        let d = distribution(Anchored, 1, &rho(2.0), EvalMode::Rational).unwrap();
        assert_eq!(d.probs, BTreeMap::from([(1, 0.5), (2, 0.5)]));
        assert_eq!(d.provenance, Provenance::ExactRational);
        let d = distribution(Free, 5, &rho(5.0), EvalMode::Rational).unwrap();
        let sum: BigRational = d.exact.unwrap().values().sum();
        assert!(sum.is_one());
        let d = distribution(Free, 5, &rho(5.0), EvalMode::Float).unwrap();
        assert_eq!(d.provenance, Provenance::ExactFloat);
        assert!(d.exact.is_none());
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    /// Q_2 for three free nodes at rho = 3, pinned by the grid quadrature
    /// oracle (`oracle::quadrature_q_m`, grid 512/1024).
    #[test]
    fn free_three_nodes_two_components_matches_quadrature() {
        let v = q_m(Free, 3, 2, &rho(3.0), EvalMode::Rational).unwrap();
        // By hand: 2 (2/3)^3 - 2 (1/3)^3 = 14/27.
        assert_eq!(v.rational_value.unwrap(), BigRational::new(14.into(), 27.into()));
        assert!((v.float_value - ORACLE_FREE_3_2_RHO3).abs() <= ORACLE_FREE_3_2_TOL);
    }

    // quadrature_q_m(Free, n=3, m=2, rho=3, grid=512): value 0.5183017160743475,
    // richardson error 6.5168e-4; tolerance is max(5 * error, 1e-4).
    const ORACLE_FREE_3_2_RHO3: f64 = 0.518_301_716_074_347_5;
    const ORACLE_FREE_3_2_TOL: f64 = 5.0 * 6.516_817_957_162_857e-4;

    /// Q_2 for five free nodes at rho = 5 against a frozen Monte Carlo band:
    /// 10^7 trials, seed 42, mean +/- 4 stderr.
    #[test]
    fn free_five_nodes_two_components_inside_monte_carlo_band() {
        let v = q_m(Free, 5, 2, &rho(5.0), EvalMode::Auto).unwrap();
        assert!(
            (v.float_value - MC_FREE_5_2_RHO5_MEAN).abs() <= 4.0 * MC_FREE_5_2_RHO5_STDERR,
            "{} vs {MC_FREE_5_2_RHO5_MEAN}",
            v.float_value
        );
    }

    const MC_FREE_5_2_RHO5_MEAN: f64 = 0.498_943_8;
    const MC_FREE_5_2_RHO5_STDERR: f64 = 1.581_135_302_374_721e-4;

    #[test]
    fn saturated_regime() {
        for model in [Free, Anchored] {
            for n in 1..=30 {
                for r in [0.05, 0.5, 0.999, 1.0] {
                    let d = distribution(model, n, &rho(r), EvalMode::Rational).unwrap();
                    let ex = d.exact.unwrap();
                    assert!(ex[&1].is_one());
                    assert!(ex.iter().skip(1).all(|(_, v)| v.is_zero()));
                }
            }
        }
    }

    #[test]
    fn empty_sum_is_exact_zero() {
        for model in [Free, Anchored] {
            for n in 1..=12 {
                for r in [0.7, 2.5, 4.0, 9.9] {
                    let ratio = rho(r);
                    let k = truncation_index(model, n, &ratio).unwrap();
                    for m in (k + 2)..(k + 5) {
                        for mode in [EvalMode::Float, EvalMode::Rational, EvalMode::Auto] {
                            let v = q_m(model, n, m, &ratio, mode).unwrap();
                            assert_eq!(v.float_value.to_bits(), 0);
                            assert_eq!(v.cancellation_ratio, 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn connected_fast_path_is_bitwise_identical() {
        for model in [Free, Anchored] {
            for n in 1..=60 {
                for r in [0.3, 1.0, 1.5, 2.5, 5.0, 10.0, 17.3, 30.0, 55.5] {
                    let ratio = rho(r);
                    for mode in [EvalMode::Float, EvalMode::Rational, EvalMode::Auto] {
                        let fast = q_1(model, n, &ratio, mode).unwrap();
                        let general = q_m(model, n, 1, &ratio, mode).unwrap();
                        assert_eq!(fast.float_value.to_bits(), general.float_value.to_bits());
                        assert_eq!(fast.rational_value, general.rational_value);
                        assert_eq!(fast.max_term_magnitude.to_bits(), general.max_term_magnitude.to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn rational_results_round_to_float_value() {
        for (model, n, m, r) in [(Free, 7, 3, 4.4), (Anchored, 12, 2, 9.1), (Free, 30, 1, 17.3)] {
            let v = q_m(model, n, m, &rho(r), EvalMode::Rational).unwrap();
            let exact = v.rational_value.unwrap();
            // Correct rounding: the neighbours of float_value are strictly farther away.
            let f = v.float_value;
            let dist = |x: f64| (BigRational::from_float(x).unwrap() - &exact).abs();
            assert!(dist(f) <= dist(f.next_up()));
            assert!(dist(f) <= dist(f.next_down()));
        }
    }

    #[test]
    fn float_and_rational_agree_when_well_conditioned() {
        let mut checked = 0;
        for model in [Free, Anchored] {
            for n in 1..=50 {
                for r in [0.3, 0.9, 1.0, 1.5, 2.5, 5.0, 10.0, 17.3, 30.0] {
                    let ratio = rho(r);
                    let float = evaluate_all(model, n, &ratio, EvalMode::Float).unwrap();
                    let rational = evaluate_all(model, n, &ratio, EvalMode::Rational).unwrap();
                    for (f, q) in float.iter().zip(&rational) {
                        if f.cancellation_ratio < 1e6 {
                            checked += 1;
                            assert!(
                                (f.float_value - q.float_value).abs() <= 1e-9,
                                "{model} n={n} rho={r}: {} vs {}",
                                f.float_value,
                                q.float_value
                            );
                        }
                    }
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn connectivity_non_increasing_in_rho() {
        for model in [Free, Anchored] {
            for n in [5, 10, 20] {
                let mut prev = f64::INFINITY;
                for step in 4..=240 {
                    let v = q_1(model, n, &rho(step as f64 * 0.25), EvalMode::Auto)
                        .unwrap()
                        .float_value;
                    assert!(v <= prev + 1e-12, "{model} n={n} rho={}", step as f64 * 0.25);
                    prev = v;
                }
            }
        }
    }

    #[test]
    fn overflowing_binomials_use_log_domain() {
        // C(1099, 549) is about 1e329, beyond binary64.
        let ratio = rho(1000.0);
        let v = q_m(Free, 1100, 1, &ratio, EvalMode::Float).unwrap();
        assert!(v.float_value.is_finite());
        assert!(v.cancellation_ratio > ESCALATION_THRESHOLD);
        let exact = q_m(Free, 1100, 1, &ratio, EvalMode::Rational).unwrap();
        let rel = (v.max_term_magnitude - exact.max_term_magnitude).abs() / exact.max_term_magnitude;
        assert!(rel < 1e-10, "{} vs {}", v.max_term_magnitude, exact.max_term_magnitude);
    }

    #[test]
    fn auto_escalates_under_heavy_cancellation() {
        let ratio = rho(150.0);
        let float = q_m(Free, 200, 1, &ratio, EvalMode::Float).unwrap();
        assert!(float.cancellation_ratio > ESCALATION_THRESHOLD);
        let auto = q_m(Free, 200, 1, &ratio, EvalMode::Auto).unwrap();
        assert_eq!(auto.mode_used, EvalMode::Rational);
        let exact = auto.rational_value.unwrap();
        assert!(!exact.is_negative() && exact <= BigRational::one());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("free".parse::<ModelKind>(), Ok(Free));
        assert_eq!(Anchored.to_string(), "anchored");
        assert!("Free".parse::<ModelKind>().is_err());
        assert_eq!("auto".parse::<EvalMode>(), Ok(EvalMode::Auto));
        assert!("exact".parse::<EvalMode>().is_err());
    }

    proptest! {
        #[test]
        fn rational_values_are_probabilities(
            anchored in any::<bool>(),
            n in 1usize..25,
            m in 1usize..27,
            r in 0.05f64..40.0,
        ) {
            let model = if anchored { Anchored } else { Free };
            let v = exact(model, n, m, r);
            prop_assert!(!v.is_negative());
            prop_assert!(v <= BigRational::one());
        }

        #[test]
        fn rational_normalization(anchored in any::<bool>(), n in 1usize..40, r in 0.05f64..60.0) {
            let model = if anchored { Anchored } else { Free };
            let d = distribution(model, n, &rho(r), EvalMode::Rational).unwrap();
            let sum: BigRational = d.exact.unwrap().values().sum();
            prop_assert!(sum.is_one());
        }
    }
}
