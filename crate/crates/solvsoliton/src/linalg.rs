//! Dense linear-algebra helpers used throughout the crate.
//!
//! Everything here is deterministic: nullspaces and column spaces come from
//! SVD with explicit relative rank cutoffs, eigenvalue lists are sorted before
//! they are returned, and no routine consumes randomness.

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

/// Relative cutoff applied to singular values when deciding numerical rank.
pub fn rank_cutoff(rank_tol: f64, scale: f64) -> f64 {
    rank_tol * scale.max(1.0)
}

/// Max-absolute-entry norm of a matrix.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Max-absolute-entry norm of a vector.
pub fn max_abs_vec(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Orthonormal basis of the nullspace of `a`, via SVD.
///
/// Singular values at or below `rank_cutoff(rank_tol, sigma_max)` count as
/// zero. Returns vectors of length `a.ncols()`.
pub fn nullspace(a: &DMatrix<f64>, rank_tol: f64) -> Vec<DVector<f64>> {
    let ncols = a.ncols();
    if a.nrows() == 0 || ncols == 0 {
        return (0..ncols)
            .map(|k| DVector::from_fn(ncols, |i, _| if i == k { 1.0 } else { 0.0 }))
            .collect();
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd requested v_t");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = rank_cutoff(rank_tol, sigma_max);
    let mut basis = Vec::new();
    // v_t has min(nrows, ncols) rows; directions beyond that are exact nullspace.
    for r in 0..v_t.nrows() {
        let sv = if r < svd.singular_values.len() {
            svd.singular_values[r]
        } else {
            0.0
        };
        if sv <= cut {
            basis.push(v_t.row(r).transpose());
        }
    }
    if v_t.nrows() < ncols {
        // Complete to the full nullspace when the system is wide.
        let mut stacked = DMatrix::zeros(v_t.nrows(), ncols);
        stacked.copy_from(&v_t);
        for extra in complement_of_rows(&stacked) {
            basis.push(extra);
        }
    }
    basis
}

/// Orthonormal vectors spanning the orthogonal complement of the row space.
fn complement_of_rows(rows: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let n = rows.ncols();
    let mut basis: Vec<DVector<f64>> = (0..rows.nrows())
        .map(|r| rows.row(r).transpose())
        .collect();
    let mut out = Vec::new();
    for k in 0..n {
        let mut v = DVector::from_fn(n, |i, _| if i == k { 1.0 } else { 0.0 });
        for b in &basis {
            let p = b.dot(&v);
            v -= b * p;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Orthonormal basis of the column span of the given vectors.
pub fn column_space(cols: &[DVector<f64>], rank_tol: f64) -> Vec<DVector<f64>> {
    if cols.is_empty() {
        return Vec::new();
    }
    let n = cols[0].len();
    let m = DMatrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = rank_cutoff(rank_tol, sigma_max);
    let mut basis = Vec::new();
    for r in 0..svd.singular_values.len() {
        if svd.singular_values[r] > cut {
            basis.push(u.column(r).into_owned());
        }
    }
    basis
}

/// Numerical rank of a matrix at the given relative tolerance.
pub fn rank(a: &DMatrix<f64>, rank_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = rank_cutoff(rank_tol, sigma_max);
    svd.singular_values.iter().filter(|s| **s > cut).count()
}

/// Minimum-norm least-squares solution of `a x = b` via SVD pseudoinverse.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rank_tol: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = rank_cutoff(rank_tol, sigma_max);
    let u = svd.u.as_ref().expect("svd u");
    let v_t = svd.v_t.as_ref().expect("svd v_t");
    let mut x = DVector::zeros(a.ncols());
    for r in 0..svd.singular_values.len() {
        let s = svd.singular_values[r];
        if s > cut {
            let coeff = u.column(r).dot(b) / s;
            x += v_t.row(r).transpose() * coeff;
        }
    }
    x
}

/// Residual of projecting `v` onto the span of the (orthonormal) `basis`.
pub fn projection_residual(basis: &[DVector<f64>], v: &DVector<f64>) -> f64 {
    let mut r = v.clone();
    for b in basis {
        let p = b.dot(&r);
        r -= b * p;
    }
    max_abs_vec(&r)
}

/// True when every vector of `inner` lies in the span of `outer`.
pub fn subspace_contained(
    inner: &[DVector<f64>],
    outer: &[DVector<f64>],
    rank_tol: f64,
) -> bool {
    inner.iter().all(|v| {
        let scale = max_abs_vec(v).max(1.0);
        projection_residual(outer, v) <= rank_cutoff(rank_tol, scale)
    })
}

/// Eigenvalues of a real matrix, sorted by (re, im) for determinism.
///
/// Goes through a bounded-iteration Schur decomposition of the normalized
/// matrix; the unbounded variant does not terminate on some degenerate
/// inputs (the zero matrix among them). If Schur fails to converge, the
/// diagonal is perturbed by an amount far below every tolerance in use.
pub fn complex_eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = a.nrows();
    let scale = max_abs(a);
    if n == 0 || scale == 0.0 {
        return vec![Complex::new(0.0, 0.0); n];
    }
    let normalized = a / scale;
    let mut eigs: Option<Vec<Complex<f64>>> = None;
    for perturbation in [0.0, 1e-13, 1e-11, 1e-9] {
        let mut m = normalized.clone();
        for i in 0..n {
            m[(i, i)] += perturbation * ((i % 3) as f64 + 1.0);
        }
        if let Some(schur) = nalgebra::Schur::try_new(m, f64::EPSILON, 200_000) {
            eigs = Some(schur.complex_eigenvalues().iter().cloned().collect());
            break;
        }
    }
    let mut eigs = eigs.expect("Schur converged after diagonal perturbation");
    for e in &mut eigs {
        *e *= scale;
    }
    eigs.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    eigs
}

/// Spectral radius of a real matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    complex_eigenvalues(a)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Nilpotency test that is robust against the eigenvalue perturbation of
/// near-Jordan blocks: normalize, square up to exponent >= dim, and compare
/// the remaining mass against `tol`.
///
/// Normalization turns a round-off-level matrix into pure noise, so callers
/// working inside a larger structure should gate on [`is_effectively_zero`]
/// first.
pub fn is_nilpotent(a: &DMatrix<f64>, tol: f64) -> bool {
    let n = a.nrows();
    let scale = a.norm();
    if scale == 0.0 {
        return true;
    }
    let mut p = a / scale;
    let mut covered = 1usize;
    while covered < n {
        p = &p * &p;
        covered *= 2;
    }
    p.norm() < tol
}

/// Whether a matrix is zero up to round-off relative to an ambient scale.
pub fn is_effectively_zero(a: &DMatrix<f64>, ambient_scale: f64) -> bool {
    max_abs(a) <= 1e-12 * ambient_scale.max(1.0)
}

/// Zero out entries below `rel_floor` times the largest entry. Useful for
/// matrices assembled from SVD factors, whose exact zeros come back as
/// round-off dust.
pub fn clean_dust(a: &DMatrix<f64>, rel_floor: f64) -> DMatrix<f64> {
    let scale = max_abs(a);
    if scale == 0.0 {
        return a.clone();
    }
    a.map(|x| if x.abs() < rel_floor * scale { 0.0 } else { x })
}

/// Report of the two-sided semisimplicity test for a real matrix.
#[derive(Debug, Clone)]
pub struct SemisimplicityReport {
    pub semisimple: bool,
    /// Eigenvalues, sorted by (re, im).
    pub eigenvalues: Vec<Complex<f64>>,
    /// Largest |Re lambda| over the spectrum.
    pub max_abs_re: f64,
    /// Condition number of the eigenvector matrix when it could be assembled.
    pub eigvec_condition: Option<f64>,
    /// Reconstruction residual of V diag(lambda) V^-1 against the input.
    pub reconstruction_residual: Option<f64>,
}

/// Decide whether a real matrix is semisimple (diagonalizable over C).
///
/// Two independent subtests must agree: (1) for every eigenvalue cluster the
/// geometric multiplicity (complex nullspace dimension) equals the algebraic
/// multiplicity, and (2) the assembled eigenvector matrix is well conditioned
/// and reconstructs the input.
pub fn semisimplicity(a: &DMatrix<f64>, eig_tol: f64) -> SemisimplicityReport {
    let n = a.nrows();
    let eigs = complex_eigenvalues(a);
    let max_abs_re = eigs.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    if n == 0 {
        return SemisimplicityReport {
            semisimple: true,
            eigenvalues: eigs,
            max_abs_re,
            eigvec_condition: None,
            reconstruction_residual: None,
        };
    }
    let scale = max_abs(a).max(1.0);
    let cluster_tol = eig_tol * scale.max(1.0) * 10.0;

    // Cluster eigenvalues and check geometric vs algebraic multiplicity.
    let mut clusters: Vec<(Complex<f64>, usize)> = Vec::new();
    for e in &eigs {
        match clusters.iter_mut().find(|(c, _)| (c - e).norm() <= cluster_tol) {
            Some((_, count)) => *count += 1,
            None => clusters.push((*e, 1)),
        }
    }
    let ac = a.map(|x| Complex::new(x, 0.0));
    let mut vectors: Vec<DVector<Complex<f64>>> = Vec::new();
    let mut multiplicities_match = true;
    for (lambda, alg_mult) in &clusters {
        let shifted = &ac - DMatrix::<Complex<f64>>::identity(n, n) * *lambda;
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("svd v_t");
        let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let cut = (eig_tol * sigma_max.max(1.0)).max(cluster_tol);
        let mut geo = 0usize;
        for r in 0..svd.singular_values.len() {
            if svd.singular_values[r] <= cut {
                geo += 1;
                if vectors.len() < n {
                    vectors.push(v_t.row(r).map(|z| z.conjugate()).transpose());
                }
            }
        }
        if geo != *alg_mult {
            multiplicities_match = false;
        }
    }

    let mut eigvec_condition = None;
    let mut reconstruction_residual = None;
    let mut factorization_ok = false;
    if vectors.len() == n {
        let v = DMatrix::from_fn(n, n, |i, j| vectors[j][i]);
        let svd = v.clone().svd(false, false);
        let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        eigvec_condition = Some(cond);
        if cond < 1e8 {
            if let Some(v_inv) = v.clone().try_inverse() {
                // Pair eigenvalues with the vectors in assembly order.
                let mut lambda = DMatrix::<Complex<f64>>::zeros(n, n);
                let mut idx = 0usize;
                for (l, _) in &clusters {
                    while idx < n {
                        let av = &ac * &vectors[idx];
                        let lv = &vectors[idx] * *l;
                        if (av - lv).norm() <= cluster_tol * 100.0 * scale {
                            lambda[(idx, idx)] = *l;
                            idx += 1;
                        } else {
                            break;
                        }
                    }
                }
                if idx == n {
                    let recon = &v * lambda * v_inv;
                    let resid = (recon - &ac).norm() / scale;
                    reconstruction_residual = Some(resid);
                    factorization_ok = resid < 1e-8 * (n as f64);
                }
            }
        }
    }

    SemisimplicityReport {
        semisimple: multiplicities_match && factorization_ok,
        eigenvalues: eigs,
        max_abs_re,
        eigvec_condition,
        reconstruction_residual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        let ns = nullspace(&a, 1e-10);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&a * v).norm() < 1e-10);
        }
    }

    #[test]
    fn nilpotent_jordan_block_with_noise() {
        // A 4-chain plus 1e-14 noise defeats a plain spectral-radius test but
        // not the squared-power test.
        let mut a = DMatrix::zeros(4, 4);
        for i in 0..3 {
            a[(i, i + 1)] = 1.0;
        }
        a[(3, 0)] = 1e-14;
        assert!(is_nilpotent(&a, 1e-10));
        let mut b = DMatrix::zeros(2, 2);
        b[(0, 1)] = 1.0;
        b[(1, 0)] = 0.01; // genuine eigenvalues +/- 0.1
        assert!(!is_nilpotent(&b, 1e-10));
    }

    #[test]
    fn semisimplicity_detects_jordan_block() {
        let mut jordan = DMatrix::zeros(2, 2);
        jordan[(0, 1)] = 1.0;
        assert!(!semisimplicity(&jordan, 1e-8).semisimple);

        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let rep = semisimplicity(&rot, 1e-8);
        assert!(rep.semisimple);
        assert!(rep.max_abs_re < 1e-12);

        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
        assert!(semisimplicity(&diag, 1e-8).semisimple);
    }

    #[test]
    fn min_norm_least_squares() {
        // Underdetermined: x + y = 2 has min-norm solution (1, 1).
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_row_slice(&[2.0]);
        let x = lstsq_min_norm(&a, &b, 1e-12);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
