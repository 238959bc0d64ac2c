use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean with a two-sided 95% Student-t confidence half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// NaN when fewer than two samples.
    pub ci95_half_width: f64,
}

impl Summary {
    pub fn lower(&self) -> f64 {
        self.mean - self.ci95_half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.ci95_half_width
    }

    /// True when this interval lies strictly above `other`'s.
    pub fn above(&self, other: &Summary) -> bool {
        self.lower() > other.upper()
    }
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, std_dev: f64::NAN, ci95_half_width: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary { n, mean, std_dev: f64::NAN, ci95_half_width: f64::NAN };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std_dev = var.sqrt();
    let t =
        StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom are positive").inverse_cdf(0.975);
    Summary { n, mean, std_dev, ci95_half_width: t * std_dev / (n as f64).sqrt() }
}
