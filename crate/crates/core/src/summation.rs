//! Compensated summation.

use std::ops::AddAssign;

/// Kahan-Babuska-Neumaier accumulator.
///
/// Carries a running correction for the low-order bits lost by each
/// addition, so the error of the total is bounded by one rounding of the
/// result plus a second-order term in the magnitude of the inputs, instead of
/// growing with the number and size of the summands.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    pub fn sum_of(values: impl IntoIterator<Item = f64>) -> f64 {
        let mut acc = Self::new();
        values.into_iter().for_each(|x| acc.add(x));
        acc.value()
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, rhs: f64) {
        self.add(rhs);
    }
}
