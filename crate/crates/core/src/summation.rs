//! Compensated accumulation used for the long `ℓ^p` sums.

use std::ops::AddAssign;

/// Kahan–Babuška–Neumaier accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for x in iter {
            acc += x;
        }
        acc
    }
}

/// Sums nonnegative terms in descending order with compensation. Sorts in place.
pub fn descending_sum(terms: &mut [f64]) -> f64 {
    use rayon::slice::ParallelSliceMut;
    terms.par_sort_unstable_by(|a, b| b.total_cmp(a));
    terms.iter().copied().collect::<NeumaierSum>().value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_small_terms() {
        let mut acc = NeumaierSum::new();
        acc += 1.0;
        acc += 1e100;
        acc += 1.0;
        acc += -1e100;
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn descending_sum_of_many_small_terms() {
        let mut terms = vec![1e-3; 1_000_000];
        terms.push(1.0);
        let s = descending_sum(&mut terms);
        assert!((s - 1001.0).abs() < 1e-9);
        assert_eq!(terms[0], 1.0);
    }
}
