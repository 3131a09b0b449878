use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStatistics {
    pub mean: f64,
    pub std_error: f64,
    /// Half-width of the two-sided 95% Student-t interval.
    pub ci_half_width: f64,
}

/// Mean, standard error and 95% confidence half-width of batch means.
pub fn batch_statistics(batches: &[f64]) -> BatchStatistics {
    let k = batches.len();
    let mean = batches.iter().sum::<f64>() / k as f64;
    if k < 2 {
        return BatchStatistics {
            mean,
            std_error: f64::NAN,
            ci_half_width: f64::NAN,
        };
    }
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    let std_error = (var / k as f64).sqrt();
    let t = StudentsT::new(0.0, 1.0, (k - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    BatchStatistics {
        mean,
        std_error,
        ci_half_width: t * std_error,
    }
}
