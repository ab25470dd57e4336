//! Compensated (Neumaier) summation for long alternating sums.

/// Accumulator tracking a running compensation term.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: f64,
    comp: f64,
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums an iterator with Neumaier compensation.
pub fn csum(it: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::new();
    for x in it {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancellation() {
        // Naive summation of [1e16, 1, -1e16] loses the 1.
        assert_eq!(csum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn empty_is_zero() {
        assert_eq!(csum([]), 0.0);
    }
}
