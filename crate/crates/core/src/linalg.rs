//! Thin wrappers over faer's dense solvers.

use faer::linalg::solvers::DenseSolveCore;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    let mut vals = m.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::EigSolveFailure)?;
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenpairs of a symmetric matrix; columns of the returned matrix are
/// eigenvectors in ascending eigenvalue order.
pub fn sym_eigen(m: MatRef<'_, f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::EigSolveFailure)?;
    let s = evd.S().column_vector();
    let n = s.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].total_cmp(&s[b]));
    let vals = order.iter().map(|&i| s[i]).collect();
    let u = evd.U();
    let vecs = Mat::from_fn(u.nrows(), n, |r, c| u[(r, order[c])]);
    Ok((vals, vecs))
}

/// Spectral norm (largest singular value).
pub fn spectral_norm(m: MatRef<'_, f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m.singular_values().map_err(|_| Error::EigSolveFailure)?;
    Ok(sv.iter().fold(0.0f64, |a, &b| a.max(b)))
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn sym_norm(m: MatRef<'_, f64>) -> Result<f64> {
    Ok(sym_eigenvalues(m)?.iter().fold(0.0f64, |a, &b| a.max(b.abs())))
}

pub fn inverse(m: MatRef<'_, f64>) -> Mat<f64> {
    m.partial_piv_lu().inverse()
}

/// `m - z I`
pub fn shifted(m: MatRef<'_, f64>, z: f64) -> Mat<f64> {
    let mut out = m.to_owned();
    for i in 0..out.nrows().min(out.ncols()) {
        out[(i, i)] -= z;
    }
    out
}

/// `diag(d) · m · diag(d)`
pub fn sandwich(d: &[f64], m: MatRef<'_, f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] * d[j])
}

pub fn max_abs_asymmetry(m: MatRef<'_, f64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// `φᵀ M φ`
pub fn quadratic_form(m: MatRef<'_, f64>, phi: &[f64]) -> f64 {
    let n = phi.len();
    let mut acc = 0.0;
    for j in 0..n {
        let pj = phi[j];
        if pj == 0.0 {
            continue;
        }
        let col = m.col(j);
        let mut s = 0.0;
        for i in 0..n {
            s += phi[i] * col[i];
        }
        acc += s * pj;
    }
    acc
}
