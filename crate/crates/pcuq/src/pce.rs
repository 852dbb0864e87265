//! Pseudo-spectral projection onto the orthonormal Legendre basis, and the
//! moments of the resulting expansions.

use std::collections::HashMap;
use std::sync::Arc;

use crate::basis::{eval_from_tables, univariate_tables, MultiIndex};
use crate::error::UqError;
use crate::grid::{simplex_indices, SparseGrid};

/// Multi-index set of an expansion. Index 0 is always the constant.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    pub dim: usize,
    pub indices: Vec<MultiIndex>,
    /// Largest degree per coordinate.
    pub max_degree: Vec<usize>,
}

impl IndexSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Bit mask of the coordinates with a nonzero degree.
    pub fn support(&self, k: usize) -> u64 {
        self.indices[k]
            .iter()
            .enumerate()
            .filter(|(_, &d)| d > 0)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    /// All basis values at `xi`, in index order.
    pub fn eval_all(&self, xi: &[f64]) -> Vec<f64> {
        let tables = univariate_tables(&self.max_degree, xi);
        self.indices.iter().map(|k| eval_from_tables(k, &tables)).collect()
    }
}

/// Truncated polynomial chaos expansion of one scalar output.
#[derive(Clone, Debug, PartialEq)]
pub struct PCExpansion {
    pub basis: Arc<IndexSet>,
    pub modes: Vec<f64>,
}

impl PCExpansion {
    pub fn mean(&self) -> f64 {
        self.modes[0]
    }

    pub fn variance(&self) -> f64 {
        self.modes[1..].iter().map(|x| x * x).sum()
    }

    pub fn moments(&self) -> (f64, f64) {
        (self.mean(), self.variance())
    }
}

fn check_shared(x: &PCExpansion, y: &PCExpansion) -> Result<(), UqError> {
    if Arc::ptr_eq(&x.basis, &y.basis) || x.basis == y.basis {
        Ok(())
    } else {
        Err(UqError::IndexMismatch)
    }
}

/// Covariance from the non-constant modes.
pub fn covariance(x: &PCExpansion, y: &PCExpansion) -> Result<f64, UqError> {
    check_shared(x, y)?;
    Ok(x.modes[1..].iter().zip(&y.modes[1..]).map(|(a, b)| a * b).sum())
}

/// Correlation coefficient, or `None` when either variance is zero or not
/// finite.
pub fn correlation(x: &PCExpansion, y: &PCExpansion) -> Result<Option<f64>, UqError> {
    let cov = covariance(x, y)?;
    let (vx, vy) = (x.variance(), y.variance());
    if !(vx > 0.0 && vy > 0.0 && vx.is_finite() && vy.is_finite()) {
        return Ok(None);
    }
    Ok(Some(cov / (vx * vy).sqrt()))
}

/// Linear map from node samples to modes, assembled once per grid.
///
/// Every tensor term of the combination technique projects onto the box of
/// degrees whose squares its tensor rule integrates exactly; the modes are the
/// combination of those sub-projections.
#[derive(Clone, Debug)]
pub struct Projector {
    pub grid: Arc<SparseGrid>,
    pub basis: Arc<IndexSet>,
    /// Row-major, one row per multi-index and one column per node.
    matrix: Vec<f64>,
}

impl Projector {
    pub fn new(grid: Arc<SparseGrid>) -> Self {
        let dim = grid.dim;
        let kind = grid.kind;
        let boxes: Vec<Vec<usize>> = grid
            .terms
            .iter()
            .map(|t| t.levels.iter().map(|&l| kind.projection_degree(l)).collect())
            .collect();
        let mut indices: Vec<MultiIndex> = Vec::new();
        let mut seen: HashMap<MultiIndex, usize> = HashMap::new();
        for b in &boxes {
            for_each_in_box(b, |k| {
                if !seen.contains_key(k) {
                    seen.insert(k.to_vec(), 0);
                    indices.push(k.to_vec());
                }
            });
        }
        indices.sort_by(|a, b| {
            let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
            sa.cmp(&sb).then_with(|| b.cmp(a))
        });
        for (row, k) in indices.iter().enumerate() {
            seen.insert(k.clone(), row);
        }
        let max_degree: Vec<usize> = (0..dim)
            .map(|i| indices.iter().map(|k| k[i] as usize).max().unwrap_or(0))
            .collect();
        let basis = Arc::new(IndexSet {
            dim,
            indices,
            max_degree,
        });
        let cols = grid.len();
        let mut matrix = vec![0.0; basis.len() * cols];
        let tables: Vec<Vec<Vec<f64>>> = grid
            .nodes
            .iter()
            .map(|x| univariate_tables(&basis.max_degree, x))
            .collect();
        for (term, b) in grid.terms.iter().zip(&boxes) {
            let c = term.coefficient as f64;
            for_each_in_box(b, |k| {
                let row = seen[k];
                for (&q, &w) in term.node_ids.iter().zip(&term.weights) {
                    matrix[row * cols + q] += c * w * eval_from_tables(k, &tables[q]);
                }
            });
        }
        Projector { grid, basis, matrix }
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.len()
    }

    /// Weight of node `q` in mode `k`.
    pub fn entry(&self, k: usize, q: usize) -> f64 {
        self.matrix[k * self.num_nodes() + q]
    }

    /// Projects one sample per node.
    pub fn project(&self, samples: &[f64]) -> Result<PCExpansion, UqError> {
        let cols = self.num_nodes();
        if samples.len() != cols {
            return Err(UqError::SampleCount {
                expected: cols,
                got: samples.len(),
            });
        }
        if let Some(index) = samples.iter().position(|v| !v.is_finite()) {
            return Err(UqError::NonFiniteSample { index });
        }
        let modes = self
            .matrix
            .chunks_exact(cols)
            .map(|row| row.iter().zip(samples).map(|(a, b)| a * b).sum())
            .collect();
        Ok(PCExpansion {
            basis: self.basis.clone(),
            modes,
        })
    }

    /// Projects many outputs at once; `samples[q][i]` is output `i` at node `q`.
    pub fn project_fields(&self, samples: &[Vec<f64>]) -> Result<Vec<PCExpansion>, UqError> {
        let cols = self.num_nodes();
        if samples.len() != cols {
            return Err(UqError::SampleCount {
                expected: cols,
                got: samples.len(),
            });
        }
        let width = samples.first().map_or(0, Vec::len);
        if let Some(q) = samples.iter().position(|s| s.len() != width) {
            return Err(UqError::InvalidInput(format!(
                "node {q} has {} outputs, expected {width}",
                samples[q].len()
            )));
        }
        if let Some(q) = samples.iter().position(|s| s.iter().any(|v| !v.is_finite())) {
            return Err(UqError::NonFiniteSample { index: q });
        }
        let mut modes = vec![vec![0.0; self.basis.len()]; width];
        for (k, row) in self.matrix.chunks_exact(cols).enumerate() {
            for (q, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (m, &v) in modes.iter_mut().zip(&samples[q]) {
                    m[k] += a * v;
                }
            }
        }
        Ok(modes
            .into_iter()
            .map(|modes| PCExpansion {
                basis: self.basis.clone(),
                modes,
            })
            .collect())
    }

    /// Discrete Gram matrix: entry `(k, l)` is mode `k` of the projection of
    /// `psi_l` sampled at the nodes.
    pub fn gram_matrix(&self) -> Vec<Vec<f64>> {
        let values: Vec<Vec<f64>> = self.grid.nodes.iter().map(|x| self.basis.eval_all(x)).collect();
        let cols = self.num_nodes();
        (0..self.basis.len())
            .map(|k| {
                let row = &self.matrix[k * cols..(k + 1) * cols];
                (0..self.basis.len())
                    .map(|l| row.iter().zip(&values).map(|(a, v)| a * v[l]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Projects samples taken at the nodes of `grid`.
pub fn psp_project(grid: &SparseGrid, samples: &[f64]) -> Result<PCExpansion, UqError> {
    Projector::new(Arc::new(grid.clone())).project(samples)
}

fn for_each_in_box(upper: &[usize], mut f: impl FnMut(&[u32])) {
    let mut k = vec![0u32; upper.len()];
    loop {
        f(&k);
        let mut i = upper.len();
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if (k[i] as usize) < upper[i] {
                k[i] += 1;
                break;
            }
            k[i] = 0;
        }
    }
}

/// Total-degree index set, for expansions built from known modes.
pub fn total_degree_set(dim: usize, degree: usize) -> IndexSet {
    let mut indices: Vec<MultiIndex> = simplex_indices(dim, degree)
        .into_iter()
        .map(|k| k.into_iter().map(|d| d as u32).collect())
        .collect();
    indices.sort_by(|a, b| {
        let (sa, sb): (u32, u32) = (a.iter().sum(), b.iter().sum());
        sa.cmp(&sb).then_with(|| b.cmp(a))
    });
    IndexSet {
        dim,
        indices,
        max_degree: vec![degree; dim],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::RuleKind;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn projector(dim: usize, kind: RuleKind, level: usize) -> Projector {
        Projector::new(Arc::new(SparseGrid::new(dim, kind, level).unwrap()))
    }

    fn sample(p: &Projector, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        p.grid.nodes.iter().map(|x| f(x)).collect()
    }

    #[test]
    fn constant_samples_give_a_single_mode() {
        let p = projector(3, RuleKind::GaussPatterson, 2);
        let pc = p.project(&vec![2.5; p.num_nodes()]).unwrap();
        assert_eq!(p.basis.indices[0], vec![0, 0, 0]);
        assert_abs_diff_eq!(pc.modes[0], 2.5, epsilon = 1e-12);
        assert!(pc.modes[1..].iter().all(|m| m.abs() < 1e-12));
    }

    #[test]
    fn basis_samples_give_unit_vectors() {
        for kind in [RuleKind::ClenshawCurtis, RuleKind::GaussPatterson] {
            let p = projector(3, kind, 3);
            let g = p.gram_matrix();
            for (k, row) in g.iter().enumerate() {
                for (l, v) in row.iter().enumerate() {
                    assert_abs_diff_eq!(*v, if k == l { 1.0 } else { 0.0 }, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn bilinear_function_is_reproduced() {
        let p = projector(3, RuleKind::GaussPatterson, 3);
        let pc = p.project(&sample(&p, |x| x[0] * x[1])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let xi: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let v: f64 = p.basis.eval_all(&xi).iter().zip(&pc.modes).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(v, xi[0] * xi[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn moments_of_simple_expansions() {
        let p = projector(1, RuleKind::GaussPatterson, 2);
        let x = p.project(&sample(&p, |x| x[0])).unwrap();
        assert_abs_diff_eq!(x.mean(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(x.variance(), 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(correlation(&x, &x).unwrap().unwrap(), 1.0, epsilon = 1e-14);
        let neg = p.project(&sample(&p, |x| 3.0 - 2.0 * x[0])).unwrap();
        assert_abs_diff_eq!(correlation(&x, &neg).unwrap().unwrap(), -1.0, epsilon = 1e-12);
        let c = p.project(&vec![2.0; p.num_nodes()]).unwrap();
        assert_abs_diff_eq!(c.mean(), 2.0, epsilon = 1e-14);
        assert!(c.variance() < 1e-28);
        assert_eq!(
            correlation(
                &c,
                &PCExpansion {
                    modes: vec![2.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                    ..c.clone()
                }
            )
            .unwrap(),
            None
        );
    }

    #[test]
    fn mismatched_sets_are_rejected() {
        let a = projector(2, RuleKind::GaussPatterson, 2);
        let b = projector(2, RuleKind::GaussPatterson, 3);
        let x = a.project(&vec![1.0; a.num_nodes()]).unwrap();
        let y = b.project(&vec![1.0; b.num_nodes()]).unwrap();
        assert!(matches!(covariance(&x, &y), Err(UqError::IndexMismatch)));
    }

    #[test]
    fn sample_errors() {
        let p = projector(2, RuleKind::GaussPatterson, 1);
        assert!(matches!(p.project(&[1.0]), Err(UqError::SampleCount { .. })));
        let mut s = vec![1.0; p.num_nodes()];
        s[2] = f64::NAN;
        assert!(matches!(p.project(&s), Err(UqError::NonFiniteSample { index: 2 })));
    }

    #[test]
    fn field_projection_matches_single_projection() {
        let p = projector(3, RuleKind::GaussPatterson, 2);
        let fields: Vec<Vec<f64>> = p
            .grid
            .nodes
            .iter()
            .map(|x| vec![x[0].exp(), x[1] * x[2], 1.0])
            .collect();
        let many = p.project_fields(&fields).unwrap();
        for (i, pc) in many.iter().enumerate() {
            let single = p.project(&fields.iter().map(|f| f[i]).collect::<Vec<_>>()).unwrap();
            for (a, b) in pc.modes.iter().zip(&single.modes) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-14);
            }
        }
    }
}
