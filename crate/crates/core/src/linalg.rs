//! Small dense and sparse numerical kernels shared by the modules:
//! matrix exponentials, the action of a sparse exponential on a vector,
//! and a semidefinite Cholesky factorisation.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use sprs::CsMat;

/// Induced 1-norm (max column sum) of a dense complex matrix.
pub fn norm1(a: &Array2<C64>) -> f64 {
    let mut best = 0.0_f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Dense matrix exponential by scaling and squaring with a Taylor core.
///
/// Intended for the small drift matrices (at most a few dozen rows); the
/// scaled matrix has 1-norm at most 1/4 so a degree-30 cap is never hit
/// before the terms drop below double precision.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let nrm = norm1(a);
    let squarings = if nrm > 0.25 {
        (nrm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 0.5_f64.powi(squarings as i32);
    let b = a.mapv(|z| z * scale);

    let mut sum = Array2::<C64>::eye(n);
    let mut term = Array2::<C64>::eye(n);
    for k in 1..=30 {
        term = term.dot(&b).mapv(|z| z / k as f64);
        sum += &term;
        let tn = norm1(&term);
        if tn <= 1e-18 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.dot(&sum);
    }
    sum
}

/// Sparse matrix times vector for CSR storage.
pub fn csr_mul_vec(m: &CsMat<C64>, x: &Array1<C64>) -> Array1<C64> {
    debug_assert!(m.is_csr());
    let mut out = Array1::<C64>::zeros(m.rows());
    for (i, row) in m.outer_iterator().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for (j, v) in row.iter() {
            acc += v * x[j];
        }
        out[i] = acc;
    }
    out
}

/// Row vector times sparse matrix (`x^T M`) for CSR storage.
pub fn vec_mul_csr(x: &Array1<C64>, m: &CsMat<C64>) -> Array1<C64> {
    debug_assert!(m.is_csr());
    let mut out = Array1::<C64>::zeros(m.cols());
    for (i, row) in m.outer_iterator().enumerate() {
        let xi = x[i];
        if xi == C64::new(0.0, 0.0) {
            continue;
        }
        for (j, v) in row.iter() {
            out[j] += xi * v;
        }
    }
    out
}

/// Induced 1-norm of a sparse matrix.
pub fn csr_norm1(m: &CsMat<C64>) -> f64 {
    let mut cols = vec![0.0_f64; m.cols()];
    for row in m.outer_iterator() {
        for (j, v) in row.iter() {
            cols[j] += v.norm();
        }
    }
    cols.into_iter().fold(0.0, f64::max)
}

/// Induced infinity-norm (max row sum) of a sparse matrix; an upper bound
/// on the spectral radius.
pub fn csr_norm_inf(m: &CsMat<C64>) -> f64 {
    m.outer_iterator()
        .map(|row| row.iter().map(|(_, v)| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(t M) v` for sparse `M`, by sub-stepping a truncated Taylor series so
/// that every sub-step has `|t| ||M||_1 / s <= 1/2`.
pub fn expm_multiply(m: &CsMat<C64>, t: C64, v: &Array1<C64>) -> Array1<C64> {
    let nrm = csr_norm1(m) * t.norm();
    let steps = ((nrm / 0.5).ceil() as usize).max(1);
    let h = t / steps as f64;
    let mut x = v.clone();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..=40 {
            term = csr_mul_vec(m, &term).mapv(|z| z * h / k as f64);
            acc += &term;
            let tn: f64 = term.iter().map(|z| z.norm()).sum();
            let an: f64 = acc.iter().map(|z| z.norm()).sum();
            if tn <= 1e-18 * an.max(1e-300) {
                break;
            }
        }
        x = acc;
    }
    x
}

/// Lower-triangular factor `L` with `L L^T ~= A` for a real symmetric
/// positive semidefinite matrix. Pivots below `tol` are treated as zero.
/// Returns the most negative pivot encountered as `Err` when the matrix is
/// not semidefinite.
pub fn psd_cholesky(a: &Array2<f64>, tol: f64) -> Result<Array2<f64>, f64> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut d = a[[j, j]];
        for k in 0..j {
            d -= l[[j, k]] * l[[j, k]];
        }
        if d < -tol {
            return Err(d);
        }
        if d <= tol {
            // zero pivot: the remaining column must vanish too
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                if s.abs() > tol.sqrt().max(1e-9) {
                    return Err(-s.abs());
                }
            }
            continue;
        }
        let djj = d.sqrt();
        l[[j, j]] = djj;
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / djj;
        }
    }
    Ok(l)
}
