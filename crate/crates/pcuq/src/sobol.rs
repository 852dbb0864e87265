//! Variance decomposition of a polynomial chaos expansion.

use std::collections::BTreeMap;

use crate::pce::PCExpansion;

/// Normalised indices, present only when the variance is not degenerate.
#[derive(Clone, Debug, PartialEq)]
pub struct SobolIndices {
    pub first: Vec<f64>,
    /// Symmetric, zero diagonal.
    pub second: Vec<Vec<f64>>,
    pub total: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SobolReport {
    pub variance: f64,
    pub partial_first: Vec<f64>,
    pub partial_second: Vec<Vec<f64>>,
    pub partial_total: Vec<f64>,
    /// Partial variance for every set of active coordinates, keyed by bit mask.
    pub partial_by_subset: BTreeMap<u64, f64>,
    pub indices: Option<SobolIndices>,
}

impl SobolReport {
    pub fn is_degenerate(&self) -> bool {
        self.indices.is_none()
    }
}

/// Variances below this fraction of the squared mode norm are treated as zero.
const DEGENERATE_VARIANCE: f64 = 1e-28;

pub fn sobol_indices(pc: &PCExpansion) -> SobolReport {
    let n = pc.basis.dim;
    let mut by_subset: BTreeMap<u64, f64> = BTreeMap::new();
    for (k, m) in pc.modes.iter().enumerate().skip(1) {
        *by_subset.entry(pc.basis.support(k)).or_insert(0.0) += m * m;
    }
    let variance = pc.variance();
    let mut first = vec![0.0; n];
    let mut second = vec![vec![0.0; n]; n];
    let mut total = vec![0.0; n];
    for (&mask, &v) in &by_subset {
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        match active[..] {
            [i] => first[i] += v,
            [i, j] => {
                second[i][j] += v;
                second[j][i] += v;
            }
            _ => {}
        }
        for i in active {
            total[i] += v;
        }
    }
    let norm: f64 = pc.modes.iter().map(|m| m * m).sum();
    let indices = (variance > DEGENERATE_VARIANCE * norm && variance.is_finite()).then(|| SobolIndices {
        first: first.iter().map(|v| v / variance).collect(),
        second: second
            .iter()
            .map(|r| r.iter().map(|v| v / variance).collect())
            .collect(),
        total: total.iter().map(|v| v / variance).collect(),
    });
    SobolReport {
        variance,
        partial_first: first,
        partial_second: second,
        partial_total: total,
        partial_by_subset: by_subset,
        indices,
    }
}
