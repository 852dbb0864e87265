//! Evaluating an expansion as a surrogate model and sampling it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{eval_from_tables, univariate_tables};
use crate::error::UqError;
use crate::pce::PCExpansion;
use crate::space::check_point;

/// Smallest sample count accepted by [`pdf_estimate`].
pub const MIN_PDF_SAMPLES: usize = 1000;
pub const DEFAULT_BINS: usize = 50;

/// `sum_k X_k psi_k(xi)`.
pub fn surrogate_eval(pc: &PCExpansion, xi: &[f64]) -> Result<f64, UqError> {
    check_point(xi, pc.basis.dim)?;
    let tables = univariate_tables(&pc.basis.max_degree, xi);
    Ok(pc
        .basis
        .indices
        .iter()
        .zip(&pc.modes)
        .map(|(k, m)| m * eval_from_tables(k, &tables))
        .sum())
}

/// Surrogate values at `n` uniform pseudo-random points.
pub fn sample_surrogate(pc: &PCExpansion, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xi = vec![0.0; pc.basis.dim];
    (0..n)
        .map(|_| {
            xi.iter_mut().for_each(|x| *x = rng.random::<f64>());
            surrogate_eval(pc, &xi).expect("sample lies in the unit cube")
        })
        .collect()
}

/// Sample mean and variance with their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_std_error: f64,
    pub variance_std_error: f64,
}

pub fn sample_moments(values: &[f64]) -> SampleMoments {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m4 = values.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = m2 * n / (n - 1.0);
    SampleMoments {
        mean,
        variance,
        mean_std_error: (variance / n).sqrt(),
        variance_std_error: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
    }
}

/// Equal-width histogram normalised to unit integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

impl Histogram {
    pub fn bin_width(&self) -> f64 {
        (self.upper - self.lower) / self.counts.len() as f64
    }

    pub fn bin_centre(&self, i: usize) -> f64 {
        self.lower + (i as f64 + 0.5) * self.bin_width()
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

/// Histogram of surrogate samples over their observed range. Values are not
/// clamped to any physical bounds.
pub fn pdf_estimate(pc: &PCExpansion, n_samples: usize, n_bins: usize, seed: u64) -> Result<Histogram, UqError> {
    if n_samples < MIN_PDF_SAMPLES {
        return Err(UqError::InvalidInput(format!(
            "need at least {MIN_PDF_SAMPLES} samples, got {n_samples}"
        )));
    }
    if n_bins == 0 {
        return Err(UqError::InvalidInput("need at least one bin".into()));
    }
    let values = sample_surrogate(pc, n_samples, seed);
    let (mut lower, mut upper) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    // A spread at roundoff level is a degenerate distribution. Use unit range
    // with the value in the middle of one bin.
    if upper - lower <= 1e-12 * lower.abs().max(upper.abs()).max(1.0) {
        let centre = 0.5 * (lower + upper);
        lower = centre - ((n_bins / 2) as f64 + 0.5) / n_bins as f64;
        upper = lower + 1.0;
    }
    let width = (upper - lower) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for v in &values {
        let b = (((v - lower) / width) as usize).min(n_bins - 1);
        counts[b] += 1;
    }
    let density = counts.iter().map(|&c| c as f64 / (n_samples as f64 * width)).collect();
    Ok(Histogram {
        lower,
        upper,
        counts,
        density,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SparseGrid;
    use crate::pce::Projector;
    use crate::quadrature::RuleKind;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn project(dim: usize, level: usize, f: impl Fn(&[f64]) -> f64) -> PCExpansion {
        let p = Projector::new(Arc::new(SparseGrid::new(dim, RuleKind::GaussPatterson, level).unwrap()));
        let s: Vec<f64> = p.grid.nodes.iter().map(|x| f(x)).collect();
        p.project(&s).unwrap()
    }

    #[test]
    fn constant_surrogate() {
        let pc = project(2, 2, |_| 3.0);
        assert_abs_diff_eq!(surrogate_eval(&pc, &[0.1, 0.7]).unwrap(), 3.0, epsilon = 1e-12);
        let h = pdf_estimate(&pc, 2000, 20, 1).unwrap();
        assert_eq!(h.counts.iter().filter(|&&c| c > 0).count(), 1);
        assert_abs_diff_eq!(h.integral(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_surrogate_sample_mean() {
        let pc = project(2, 2, |x| x[0]);
        let m = sample_moments(&sample_surrogate(&pc, 5000, 11));
        assert!((m.mean - 0.5).abs() < 3.0 * m.mean_std_error);
        let h = pdf_estimate(&pc, 5000, DEFAULT_BINS, 11).unwrap();
        assert_abs_diff_eq!(h.integral(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn histogram_keeps_values_outside_physical_bounds() {
        let pc = project(1, 2, |x| x[0] - 0.3);
        let h = pdf_estimate(&pc, 1000, 10, 2).unwrap();
        assert!(h.lower < 0.0);
        assert!(h.counts[0] > 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let pc = project(2, 1, |x| x[0]);
        assert!(surrogate_eval(&pc, &[1.5, 0.5]).is_err());
        assert!(surrogate_eval(&pc, &[0.5]).is_err());
        assert!(pdf_estimate(&pc, 999, 10, 0).is_err());
    }

    #[test]
    fn sampling_is_reproducible() {
        let pc = project(3, 2, |x| (x[0] + x[1] * x[2]).exp());
        assert_eq!(sample_surrogate(&pc, 100, 9), sample_surrogate(&pc, 100, 9));
        assert_ne!(sample_surrogate(&pc, 100, 9), sample_surrogate(&pc, 100, 10));
    }
}
