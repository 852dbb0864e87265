//! Nested one-dimensional quadrature rules on `[0, 1]` for the uniform measure.

use serde::{Deserialize, Serialize};

use crate::error::UqError;
use crate::gp_tables::{GP_NODES, GP_WEIGHTS};

/// Family of nested 1D rules.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RuleKind {
    /// Clenshaw-Curtis with `1, 3, 5, 9, 17, ...` nodes.
    #[serde(rename = "cc")]
    ClenshawCurtis,
    /// Gauss-Patterson with `1, 3, 7, 15, 31, 63` nodes.
    #[default]
    #[serde(rename = "gp")]
    GaussPatterson,
}

impl RuleKind {
    /// Deepest level available for this family.
    pub fn max_level(self) -> usize {
        match self {
            // 2^20 + 1 nodes is far beyond anything a tensor grid can use.
            RuleKind::ClenshawCurtis => 20,
            RuleKind::GaussPatterson => GP_NODES.len() - 1,
        }
    }

    /// Number of nodes at `level`.
    pub fn size(self, level: usize) -> usize {
        match (self, level) {
            (_, 0) => 1,
            (RuleKind::ClenshawCurtis, l) => (1 << l) + 1,
            (RuleKind::GaussPatterson, l) => (1 << (l + 1)) - 1,
        }
    }

    /// Highest polynomial degree integrated exactly at `level`.
    pub fn exactness(self, level: usize) -> usize {
        match (self, level) {
            (_, 0) => 1,
            // Symmetric rule with an odd node count.
            (RuleKind::ClenshawCurtis, l) => self.size(l),
            (RuleKind::GaussPatterson, l) => 3 * (1 << l) - 1,
        }
    }

    /// Largest univariate degree `k` with `psi_k^2` integrated exactly.
    pub fn projection_degree(self, level: usize) -> usize {
        self.exactness(level) / 2
    }

    pub fn parse(s: &str) -> Result<Self, UqError> {
        match s {
            "cc" => Ok(RuleKind::ClenshawCurtis),
            "gp" => Ok(RuleKind::GaussPatterson),
            other => Err(UqError::InvalidInput(format!(
                "unknown rule {other:?}, expected cc or gp"
            ))),
        }
    }
}

/// Nodes in increasing order with weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Quadrature rule of the given family and level on `[0, 1]`.
///
/// Nodes shared with lower levels are bitwise identical, so nested node sets
/// can be compared exactly.
pub fn quad_rule_1d(kind: RuleKind, level: usize) -> Result<Rule1d, UqError> {
    if level > kind.max_level() {
        return Err(UqError::UnsupportedLevel { kind, level });
    }
    Ok(match kind {
        RuleKind::ClenshawCurtis => clenshaw_curtis(level),
        RuleKind::GaussPatterson => {
            let nodes = GP_NODES[level].iter().map(|&x| 0.5 * (x + 1.0)).collect();
            let weights = GP_WEIGHTS[level].iter().map(|&w| 0.5 * w).collect();
            Rule1d { nodes, weights }
        }
    })
}

fn clenshaw_curtis(level: usize) -> Rule1d {
    if level == 0 {
        return Rule1d {
            nodes: vec![0.5],
            weights: vec![1.0],
        };
    }
    let n = 1usize << level;
    // Node j of level l is node 2j of level l + 1; both come out of the same
    // floating point expression because the angle only changes by a factor 2.
    let angle = |j: usize| std::f64::consts::PI * j as f64 / n as f64;
    let mut nodes: Vec<f64> = (0..=n)
        .map(|j| if 2 * j == n { 0.5 } else { 0.5 * (1.0 - angle(j).cos()) })
        .collect();
    // Exact symmetry about 1/2.
    for j in 0..n / 2 {
        nodes[n - j] = 1.0 - nodes[j];
    }
    let weights = (0..=n)
        .map(|j| {
            let c = if j == 0 || j == n { 1.0 } else { 2.0 };
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * angle(j)).cos();
            }
            // Weight on [-1, 1] divided by 2.
            0.5 * c / n as f64 * (1.0 - s)
        })
        .collect();
    Rule1d { nodes, weights }
}
