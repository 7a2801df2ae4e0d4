//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::poly::C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Singular values, in no particular order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Count of singular values above `rel_tol · σ_max`.
pub fn numerical_rank(m: &CMat, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Smallest retained singular value over the largest, or 0.
pub fn rank_gap(m: &CMat, rank: usize) -> f64 {
    let mut sv = singular_values(m);
    sv.sort_by(|a, b| b.total_cmp(a));
    if rank == 0 || sv.is_empty() || sv[0] == 0.0 {
        return 0.0;
    }
    sv[rank - 1] / sv[0]
}

/// Orthonormal basis (as columns) of the right null space `{x : Mx = 0}`.
pub fn null_space(m: &CMat, rel_tol: f64) -> CMat {
    let cols = m.ncols();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    let rows = m.nrows().max(cols);
    let mut padded = CMat::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax == 0.0 || svd.singular_values[i] <= rel_tol * smax)
        .collect();
    let mut out = CMat::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        for k in 0..cols {
            out[(k, j)] = v_t[(i, k)].conj();
        }
    }
    out
}

/// Orthonormal basis (as columns) of the column space.
pub fn column_space(m: &CMat, rel_tol: f64) -> CMat {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("u requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    let mut out = CMat::zeros(m.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(i));
    }
    out
}

/// Gaussian elimination with complete pivoting for `steps` steps.
///
/// Returns the pivot rows and columns in selection order, or `None` if a
/// pivot of magnitude `≤ abs_tol` is met first.
pub fn complete_pivots(m: &CMat, steps: usize, abs_tol: f64) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut a = m.clone();
    let mut rows_left: Vec<usize> = (0..a.nrows()).collect();
    let mut cols_left: Vec<usize> = (0..a.ncols()).collect();
    let mut prow = Vec::with_capacity(steps);
    let mut pcol = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut best = (0usize, 0usize, -1.0f64);
        for (ri, &i) in rows_left.iter().enumerate() {
            for (ci, &j) in cols_left.iter().enumerate() {
                let v = a[(i, j)].norm();
                if v > best.2 {
                    best = (ri, ci, v);
                }
            }
        }
        if best.2 <= abs_tol {
            return None;
        }
        let pi = rows_left.remove(best.0);
        let pj = cols_left.remove(best.1);
        let piv = a[(pi, pj)];
        for &i in &rows_left {
            let f = a[(i, pj)] / piv;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for &j in &cols_left {
                let t = a[(pi, j)];
                a[(i, j)] -= f * t;
            }
            a[(i, pj)] = C64::new(0.0, 0.0);
        }
        prow.push(pi);
        pcol.push(pj);
    }
    Some((prow, pcol))
}

/// Eigen-decomposition of a Hermitian matrix (eigenvalues ascending).
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `(M + Mᴴ)/2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

/// Max absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}
