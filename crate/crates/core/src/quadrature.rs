//! Gaussian quadrature rules.

use nalgebra::{DMatrix, SymmetricEigen};

/// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix with
/// off-diagonal `beta(k)`, `k = 1..n`, and total weight `mu0`.
fn golub_welsch(n: usize, beta: impl Fn(usize) -> f64, mu0: f64) -> Vec<(f64, f64)> {
    let jacobi = DMatrix::from_fn(n, n, |i, j| if i + 1 == j || j + 1 == i { beta(i.max(j)) } else { 0.0 });
    let eig = SymmetricEigen::new(jacobi);
    let mut out: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    golub_welsch(n, |k| k as f64 / ((4 * k * k - 1) as f64).sqrt(), 2.0)
}

/// Nodes and weights for expectations over a standard normal variable.
pub fn gauss_hermite_normal(n: usize) -> Vec<(f64, f64)> {
    golub_welsch(n, |k| (k as f64).sqrt(), 1.0)
}
