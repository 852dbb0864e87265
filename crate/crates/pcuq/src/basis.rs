//! Shifted Legendre polynomials, orthonormal under the uniform measure on `[0, 1]`.

/// Multi-index of univariate degrees.
pub type MultiIndex = Vec<u32>;

/// Values of `psi_0, ..., psi_max` at `x`.
pub fn legendre_all(max_degree: usize, x: f64) -> Vec<f64> {
    let t = 2.0 * x - 1.0;
    let mut p = Vec::with_capacity(max_degree + 1);
    p.push(1.0);
    if max_degree >= 1 {
        p.push(t);
    }
    for n in 1..max_degree {
        let nf = n as f64;
        p.push(((2.0 * nf + 1.0) * t * p[n] - nf * p[n - 1]) / (nf + 1.0));
    }
    for (n, v) in p.iter_mut().enumerate() {
        *v *= (2.0 * n as f64 + 1.0).sqrt();
    }
    p
}

/// Orthonormal shifted Legendre polynomial of degree `n` at `x`.
pub fn legendre(n: usize, x: f64) -> f64 {
    legendre_all(n, x)[n]
}

/// Product basis function `psi_k(xi)`.
pub fn basis_eval(k: &[u32], xi: &[f64]) -> f64 {
    k.iter().zip(xi).map(|(&d, &x)| legendre(d as usize, x)).product()
}

/// Tables of univariate values per coordinate, reused when one point is
/// evaluated against many multi-indices.
pub(crate) fn univariate_tables(max_degree: &[usize], xi: &[f64]) -> Vec<Vec<f64>> {
    max_degree.iter().zip(xi).map(|(&m, &x)| legendre_all(m, x)).collect()
}

pub(crate) fn eval_from_tables(k: &[u32], tables: &[Vec<f64>]) -> f64 {
    k.iter().zip(tables).map(|(&d, t)| t[d as usize]).product()
}
