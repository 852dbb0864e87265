//! Sparse linear systems assembled from triplets and solved by a direct LU.

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Conj, Mat};

use crate::error::SimError;

/// Square sparse matrix under assembly. Repeated entries are summed.
#[derive(Clone, Debug, Default)]
pub struct TripletMatrix {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletMatrix {
    pub fn new(n: usize) -> Self {
        TripletMatrix { n, entries: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n && col < self.n);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    /// Entries merged by position, sorted by (column, row).
    fn merged(&self) -> Vec<(usize, usize, f64)> {
        let mut e = self.entries.clone();
        e.sort_by_key(|&(r, c, _)| (c, r));
        let mut out: Vec<(usize, usize, f64)> = Vec::with_capacity(e.len());
        for (r, c, v) in e {
            match out.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => out.push((r, c, v)),
            }
        }
        out
    }

    /// `A x` using the summed entries.
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
        y
    }

    /// Returns true if some row has no nonzero entry.
    fn has_empty_row(&self) -> bool {
        let mut seen = vec![false; self.n];
        for &(r, _, v) in &self.entries {
            if v != 0.0 {
                seen[r] = true;
            }
        }
        seen.iter().any(|s| !s)
    }

    /// Solves `A x = b`. `stage` names the caller in error reports.
    pub fn solve(&self, b: &[f64], stage: &'static str) -> Result<Vec<f64>, SimError> {
        assert_eq!(b.len(), self.n, "right-hand side has the wrong length");
        if self.n == 0 {
            return Ok(Vec::new());
        }
        if b.iter().any(|v| !v.is_finite()) || self.entries.iter().any(|e| !e.2.is_finite()) {
            return Err(SimError::NonFinite { stage });
        }
        if self.has_empty_row() {
            return Err(SimError::Singular { stage });
        }
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .merged()
            .into_iter()
            .map(|(r, c, v)| Triplet::new(r, c, v))
            .collect();
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
            .map_err(|_| SimError::Singular { stage })?;
        let lu = a.sp_lu().map_err(|_| SimError::Singular { stage })?;
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        let x: Vec<f64> = (0..self.n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SimError::Singular { stage });
        }
        // A rank-deficient factorisation can still return finite garbage.
        let ax = self.mul(&x);
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(
            self.entries.iter().fold(0.0f64, |m, e| m.max(e.2.abs())) * x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        );
        let res = ax.iter().zip(b).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        if res > 1e-6 * scale.max(f64::MIN_POSITIVE) {
            return Err(SimError::Singular { stage });
        }
        Ok(x)
    }
}
