//! Isotropic Smolyak sparse grids over nested 1D rules.

use std::collections::HashMap;

use crate::error::UqError;
use crate::quadrature::{quad_rule_1d, Rule1d, RuleKind};
use crate::space::ParameterSpace;

/// One full tensor grid of the combination technique.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorTerm {
    /// 1D level per coordinate.
    pub levels: Vec<usize>,
    /// Combination coefficient.
    pub coefficient: i64,
    /// Index into [`SparseGrid::nodes`] for every tensor point.
    pub node_ids: Vec<usize>,
    /// Tensor product weight for every tensor point.
    pub weights: Vec<f64>,
}

/// Sparse grid on `[0, 1]^N` with weights for the uniform probability measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseGrid {
    pub kind: RuleKind,
    pub level: usize,
    pub dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Tensor grids with a nonzero combination coefficient.
    pub terms: Vec<TensorTerm>,
}

/// All multi-indices of length `dim` with entries summing to at most `max_sum`,
/// in lexicographic order.
pub(crate) fn simplex_indices(dim: usize, max_sum: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, dim: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == dim {
            out.push(prefix.clone());
            return;
        }
        for v in 0..=left {
            prefix.push(v);
            rec(prefix, dim, left - v, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, max_sum, &mut out);
    out
}

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl SparseGrid {
    /// Smolyak grid of total level `level` in `dim` dimensions.
    ///
    /// Level 0 is the single midpoint. Tensor levels `a` with `|a| <= level`
    /// enter with coefficient `(-1)^(level - |a|) C(dim - 1, level - |a|)`.
    pub fn new(dim: usize, kind: RuleKind, level: usize) -> Result<Self, UqError> {
        if dim == 0 {
            return Err(UqError::InvalidInput(
                "a sparse grid needs at least one dimension".into(),
            ));
        }
        let rules: Vec<Rule1d> = (0..=level).map(|l| quad_rule_1d(kind, l)).collect::<Result<_, _>>()?;
        let mut ids: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut terms = Vec::new();
        for levels in simplex_indices(dim, level) {
            let sum: usize = levels.iter().sum();
            let gap = level - sum;
            if gap >= dim {
                continue;
            }
            let coefficient = if gap % 2 == 0 { 1 } else { -1 } * binomial(dim - 1, gap);
            let sizes: Vec<usize> = levels.iter().map(|&l| rules[l].nodes.len()).collect();
            let count: usize = sizes.iter().product();
            let mut node_ids = Vec::with_capacity(count);
            let mut term_weights = Vec::with_capacity(count);
            let mut digit = vec![0usize; dim];
            for _ in 0..count {
                let point: Vec<f64> = (0..dim).map(|i| rules[levels[i]].nodes[digit[i]]).collect();
                let w: f64 = (0..dim).map(|i| rules[levels[i]].weights[digit[i]]).product();
                let key: Vec<u64> = point.iter().map(|x| x.to_bits()).collect();
                let id = *ids.entry(key).or_insert_with(|| {
                    nodes.push(point);
                    weights.push(0.0);
                    nodes.len() - 1
                });
                weights[id] += coefficient as f64 * w;
                node_ids.push(id);
                term_weights.push(w);
                // Last coordinate varies fastest.
                for i in (0..dim).rev() {
                    digit[i] += 1;
                    if digit[i] < sizes[i] {
                        break;
                    }
                    digit[i] = 0;
                }
            }
            terms.push(TensorTerm {
                levels,
                coefficient,
                node_ids,
                weights: term_weights,
            });
        }
        Ok(SparseGrid {
            kind,
            level,
            dim,
            nodes,
            weights,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of `f` with the combined weights.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Sparse grid over the canonical cube of `space`.
pub fn build_sparse_grid(space: &ParameterSpace, kind: RuleKind, level: usize) -> Result<SparseGrid, UqError> {
    SparseGrid::new(space.dim(), kind, level)
}
