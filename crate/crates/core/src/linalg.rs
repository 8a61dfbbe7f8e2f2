//! Small dense helpers shared by the estimators and problems.

use crate::{DenseVector, Error, Result};

/// Sums vectors by pairwise (tree) reduction in index order.
///
/// The association order depends only on `terms.len()`, so the result is
/// bitwise reproducible however the terms were produced.
pub fn pairwise_sum(mut terms: Vec<DenseVector>) -> Option<DenseVector> {
    if terms.is_empty() {
        return None;
    }
    while terms.len() > 1 {
        let mut next = Vec::with_capacity(terms.len().div_ceil(2));
        let mut it = terms.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a += b;
            }
            next.push(a);
        }
        terms = next;
    }
    terms.pop()
}

/// Largest eigenvalue of a symmetric positive semi-definite operator by power
/// iteration, stopping once successive Rayleigh quotients agree to `rel_tol`.
pub fn power_iteration<F>(dim: usize, apply: F, rel_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(&DenseVector) -> DenseVector,
{
    if dim == 0 {
        return Err(Error::usage("power iteration on an empty operator"));
    }
    // Deterministic start with no exact zeros, so no eigenvector is
    // orthogonal to it for the structured matrices we build.
    let mut v = DenseVector::from_fn(dim, |i, _| 1.0 + 0.1 * ((i as f64 + 1.0) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let w = apply(&v);
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return Ok(0.0);
        }
        residual = (next - lambda).abs();
        if residual <= rel_tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
        v = w / norm;
    }
    Err(Error::Numerical {
        message: format!("power iteration did not converge in {max_iter} iterations"),
        residual,
    })
}
