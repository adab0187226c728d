//! Small numeric helpers shared by the design engine and the metrics.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a sequence.
pub fn sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated mean of squares. Returns 0 for an empty slice.
pub fn mean_square(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    sum(values.iter().map(|v| v * v)) / values.len() as f64
}

/// Euclidean norm.
pub fn norm2(values: &[f64]) -> f64 {
    sum(values.iter().map(|v| v * v)).sqrt()
}

/// Smallest power of two that is `>= x`, for `x > 0`.
pub fn ceil_pow2(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    let mut s = 2f64.powi(x.log2().ceil() as i32);
    // log2 can be off by one ulp around exact powers
    while s < x {
        s *= 2.0;
    }
    while s / 2.0 >= x {
        s /= 2.0;
    }
    s
}
