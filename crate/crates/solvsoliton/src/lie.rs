//! Finite-dimensional real Lie algebras given by structure constants.
//!
//! An algebra is stored as a sparse bracket table over a labeled basis:
//! `[e_i, e_j] = sum_k c[i][j][k] e_k` with only `i < j` entries kept, so
//! antisymmetry holds exactly by construction. All operations are pure and
//! instances are immutable after construction.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::tolerances::Tolerances;

/// A real Lie algebra over a labeled basis, with sparse structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    dim: usize,
    basis_names: Vec<String>,
    /// Keyed by (i, j) with i < j; values are sparse coefficient lists (k, c).
    entries: BTreeMap<(usize, usize), Vec<(usize, f64)>>,
    /// ad(e_i) for each basis vector, cached at construction.
    basis_ad: Vec<DMatrix<f64>>,
}

/// A list of linearly independent coordinate vectors inside R^ambient_dim.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub ambient_dim: usize,
    pub vectors: Vec<DVector<f64>>,
}

impl SubspaceBasis {
    pub fn new(ambient_dim: usize, vectors: Vec<DVector<f64>>, rank_tol: f64) -> Result<Self> {
        for v in &vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
        }
        if !vectors.is_empty() {
            let m = DMatrix::from_fn(ambient_dim, vectors.len(), |i, j| vectors[j][i]);
            if linalg::rank(&m, rank_tol) != vectors.len() {
                return Err(Error::ContractViolation {
                    detail: "subspace basis vectors are not linearly independent".into(),
                });
            }
        }
        Ok(SubspaceBasis {
            ambient_dim,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Stack the basis vectors as columns of an `ambient_dim x dim` matrix.
    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.ambient_dim, self.vectors.len(), |i, j| {
            self.vectors[j][i]
        })
    }

    pub fn contains(&self, v: &DVector<f64>, rank_tol: f64) -> bool {
        linalg::subspace_contained(std::slice::from_ref(v), &self.vectors, rank_tol)
    }
}

/// Structural flags reported by [`LieAlgebra::validate`].
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub antisymmetry_ok: bool,
    pub jacobi_residual: f64,
    pub jacobi_ok: bool,
    pub solvable: bool,
    pub nilpotent: bool,
    pub unimodular: bool,
}

impl LieAlgebra {
    /// Build an algebra from bracket entries `(i, j, k, c)` meaning
    /// `[e_i, e_j] = ... + c e_k`.
    ///
    /// Entries may be given for either orientation of (i, j); a pair supplied
    /// in both orientations must satisfy `c[i][j][k] = -c[j][i][k]` exactly.
    pub fn new(
        dim: usize,
        basis_names: Vec<String>,
        entries: &[(usize, usize, usize, f64)],
    ) -> Result<Self> {
        assert!(dim >= 1, "algebra dimension must be at least 1");
        assert_eq!(basis_names.len(), dim, "one name per basis vector");
        let mut canonical: BTreeMap<(usize, usize), BTreeMap<usize, f64>> = BTreeMap::new();
        for &(i, j, k, c) in entries {
            if i >= dim || j >= dim || k >= dim {
                return Err(Error::SchemaError {
                    detail: format!("bracket index out of range: ({i},{j},{k}) with dim {dim}"),
                });
            }
            if c == 0.0 {
                continue;
            }
            if i == j {
                return Err(Error::AntisymmetryViolation { i, j, k, a: c, b: c });
            }
            let (key, val) = if i < j { ((i, j), c) } else { ((j, i), -c) };
            let slot = canonical.entry(key).or_default().entry(k).or_insert(val);
            if *slot != val {
                return Err(Error::AntisymmetryViolation {
                    i,
                    j,
                    k,
                    a: *slot,
                    b: val,
                });
            }
        }
        let entries = canonical
            .into_iter()
            .map(|(key, coeffs)| (key, coeffs.into_iter().collect::<Vec<_>>()))
            .collect();
        let mut alg = LieAlgebra {
            dim,
            basis_names,
            entries,
            basis_ad: Vec::new(),
        };
        alg.basis_ad = (0..dim).map(|i| alg.compute_basis_ad(i)).collect();
        Ok(alg)
    }

    /// Convenience constructor with default names e0..e{n-1}.
    pub fn from_brackets(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let names = (0..dim).map(|i| format!("e{i}")).collect();
        LieAlgebra::new(dim, names, entries)
    }

    /// The abelian algebra R^n.
    pub fn abelian(dim: usize) -> Self {
        LieAlgebra::from_brackets(dim, &[]).expect("abelian algebra is always valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis_names(&self) -> &[String] {
        &self.basis_names
    }

    /// Sparse bracket entries, keyed by (i, j) with i < j.
    pub fn bracket_entries(&self) -> &BTreeMap<(usize, usize), Vec<(usize, f64)>> {
        &self.entries
    }

    /// Structure constant c[i][j][k] for arbitrary orientation.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (key, sign) = if i < j { ((i, j), 1.0) } else { ((j, i), -1.0) };
        self.entries
            .get(&key)
            .and_then(|coeffs| coeffs.iter().find(|(kk, _)| *kk == k))
            .map(|(_, c)| sign * c)
            .unwrap_or(0.0)
    }

    fn compute_basis_ad(&self, i: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            for ((a, b), coeffs) in &self.entries {
                let sign = if (*a, *b) == (i, j) {
                    1.0
                } else if (*a, *b) == (j, i) {
                    -1.0
                } else {
                    continue;
                };
                for (k, c) in coeffs {
                    m[(*k, j)] += sign * c;
                }
            }
        }
        m
    }

    /// The bracket of two coordinate vectors. Antisymmetry is exact: the
    /// coefficients enter as `x_i y_j - x_j y_i`.
    pub fn bracket(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x)?;
        self.check_len(y)?;
        let mut out = DVector::zeros(self.dim);
        for ((i, j), coeffs) in &self.entries {
            let w = x[*i] * y[*j] - x[*j] * y[*i];
            if w != 0.0 {
                for (k, c) in coeffs {
                    out[*k] += w * c;
                }
            }
        }
        Ok(out)
    }

    /// The adjoint operator ad(x): y -> [x, y] as a matrix.
    pub fn ad(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_len(x)?;
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, ad_i) in self.basis_ad.iter().enumerate() {
            if x[i] != 0.0 {
                m += ad_i * x[i];
            }
        }
        Ok(m)
    }

    /// ad of the i-th basis vector (cached).
    pub fn ad_basis(&self, i: usize) -> &DMatrix<f64> {
        &self.basis_ad[i]
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        Ok(())
    }

    /// Max-norm of the worst Jacobi identity residual over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        let e: Vec<DVector<f64>> = (0..self.dim)
            .map(|i| DVector::from_fn(self.dim, |r, _| if r == i { 1.0 } else { 0.0 }))
            .collect();
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                for k in (j + 1)..self.dim {
                    let t1 = self
                        .bracket(&e[i], &self.bracket(&e[j], &e[k]).unwrap())
                        .unwrap();
                    let t2 = self
                        .bracket(&e[j], &self.bracket(&e[k], &e[i]).unwrap())
                        .unwrap();
                    let t3 = self
                        .bracket(&e[k], &self.bracket(&e[i], &e[j]).unwrap())
                        .unwrap();
                    worst = worst.max(linalg::max_abs_vec(&(t1 + t2 + t3)));
                }
            }
        }
        worst
    }

    /// Structural diagnostics: Jacobi residual, solvability, nilpotency and
    /// unimodularity (tr ad e_i = 0 for all i).
    pub fn validate(&self, tol: &Tolerances) -> Diagnostics {
        let jacobi_residual = self.jacobi_residual();
        let derived = self.derived_series(tol);
        let lower = self.lower_central_series(tol);
        let scale = self
            .basis_ad
            .iter()
            .map(linalg::max_abs)
            .fold(1.0_f64, f64::max);
        let unimodular = self
            .basis_ad
            .iter()
            .all(|m| m.trace().abs() <= tol.rank * scale * (self.dim as f64).max(1.0) * 10.0);
        Diagnostics {
            antisymmetry_ok: true,
            jacobi_residual,
            jacobi_ok: jacobi_residual <= tol.jacobi,
            solvable: derived.last().map(|s| s.dim() == 0).unwrap_or(false),
            nilpotent: lower.last().map(|s| s.dim() == 0).unwrap_or(false),
            unimodular,
        }
    }

    /// Brackets [U, V] of two subspaces, returned as an orthonormal basis.
    fn bracket_span(
        &self,
        u: &[DVector<f64>],
        v: &[DVector<f64>],
        rank_tol: f64,
    ) -> Vec<DVector<f64>> {
        let mut products = Vec::new();
        for a in u {
            for b in v {
                let w = self.bracket(a, b).unwrap();
                if linalg::max_abs_vec(&w) > 0.0 {
                    products.push(w);
                }
            }
        }
        linalg::column_space(&products, rank_tol)
    }

    fn full_basis(&self) -> Vec<DVector<f64>> {
        (0..self.dim)
            .map(|i| DVector::from_fn(self.dim, |r, _| if r == i { 1.0 } else { 0.0 }))
            .collect()
    }

    /// Derived series g, [g,g], [[g,g],[g,g]], ... until stabilization.
    pub fn derived_series(&self, tol: &Tolerances) -> Vec<SubspaceBasis> {
        let mut series = vec![SubspaceBasis::new(self.dim, self.full_basis(), tol.rank).unwrap()];
        loop {
            let prev = &series.last().unwrap().vectors;
            let next = self.bracket_span(prev, prev, tol.rank);
            if next.len() >= prev.len() && !series.is_empty() && series.len() > 1 {
                break;
            }
            let stabilized = next.len() == prev.len();
            series.push(SubspaceBasis {
                ambient_dim: self.dim,
                vectors: next,
            });
            if stabilized || series.last().unwrap().dim() == 0 {
                break;
            }
        }
        series
    }

    /// Lower central series g, [g,g], [g,[g,g]], ... until stabilization.
    pub fn lower_central_series(&self, tol: &Tolerances) -> Vec<SubspaceBasis> {
        let full = self.full_basis();
        let mut series = vec![SubspaceBasis::new(self.dim, full.clone(), tol.rank).unwrap()];
        loop {
            let prev = &series.last().unwrap().vectors;
            let next = self.bracket_span(&full, prev, tol.rank);
            let stabilized = next.len() == prev.len();
            series.push(SubspaceBasis {
                ambient_dim: self.dim,
                vectors: next,
            });
            if stabilized || series.last().unwrap().dim() == 0 {
                break;
            }
        }
        series
    }

    /// The commutator subalgebra [g, g].
    pub fn derived_subalgebra(&self, tol: &Tolerances) -> SubspaceBasis {
        let full = self.full_basis();
        SubspaceBasis {
            ambient_dim: self.dim,
            vectors: self.bracket_span(&full, &full, tol.rank),
        }
    }

    /// The nilradical of a solvable algebra.
    ///
    /// By Lie's theorem the operators ad(x) are simultaneously
    /// triangularizable over C, so their eigenvalue multisets consist of
    /// linear weight functionals and the nilradical is exactly the common
    /// kernel of the weights. The sum F(x) = sum_i |lambda_i(ad x)|^2 is
    /// therefore a positive semidefinite quadratic form whose kernel is the
    /// nilradical; we recover the form by polarization and read the kernel
    /// off its spectral decomposition. Per-vector spectral tests on a fixed
    /// complement basis are not enough: weights can cancel only on
    /// combinations of complement vectors.
    pub fn nilradical(&self, tol: &Tolerances) -> Result<SubspaceBasis> {
        let diag = self.validate(tol);
        if !diag.solvable {
            return Err(Error::NotSolvable);
        }
        let n = self.dim;
        let eig_sum = |x: &DVector<f64>| -> f64 {
            let ad = self.ad(x).unwrap();
            linalg::complex_eigenvalues(&ad)
                .iter()
                .map(|z| z.norm_sqr())
                .sum()
        };
        let e = self.full_basis();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            gram[(i, i)] = eig_sum(&e[i]);
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let plus = eig_sum(&(&e[i] + &e[j]));
                let minus = eig_sum(&(&e[i] - &e[j]));
                let g = 0.25 * (plus - minus);
                gram[(i, j)] = g;
                gram[(j, i)] = g;
            }
        }
        let se = nalgebra::SymmetricEigen::new(gram.clone());
        let lambda_max = se.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        // Weight-form entries of nilpotent directions carry eigenvalue noise
        // of order (machine eps)^(2/k) for k-step chains; 1e-7 relative is a
        // comfortable floor for chains of the depth seen here.
        let cut = 1e-7 * lambda_max.max(1.0);
        let mut kernel = Vec::new();
        for c in 0..n {
            if se.eigenvalues[c].abs() <= cut {
                kernel.push(se.eigenvectors.column(c).into_owned());
            }
        }
        let result = SubspaceBasis::new(self.dim, kernel, tol.rank)?;
        self.verify_nilradical(&result, tol)?;
        Ok(result)
    }

    /// Post-conditions of the nilradical computation: contains [g,g], is an
    /// ideal, every member is ad-nilpotent, no complement vector is.
    fn verify_nilradical(&self, nil: &SubspaceBasis, tol: &Tolerances) -> Result<()> {
        let fail = |detail: String| Err(Error::ContractViolation { detail });
        let derived = self.derived_subalgebra(tol);
        if !linalg::subspace_contained(&derived.vectors, &nil.vectors, tol.rank) {
            return fail("nilradical does not contain the commutator subalgebra".into());
        }
        let ad_scale = self
            .basis_ad
            .iter()
            .map(linalg::max_abs)
            .fold(0.0_f64, f64::max);
        for v in &nil.vectors {
            let ad = self.ad(v)?;
            if !linalg::is_effectively_zero(&ad, ad_scale) && !linalg::is_nilpotent(&ad, 1e-10) {
                return fail("nilradical member is not ad-nilpotent".into());
            }
            for b in &self.full_basis() {
                let w = self.bracket(b, v)?;
                if !linalg::subspace_contained(
                    std::slice::from_ref(&w),
                    &nil.vectors,
                    tol.rank * 100.0,
                ) {
                    return fail("nilradical is not an ideal".into());
                }
            }
        }
        // Maximality: a complement vector with nilpotent ad would have been
        // in the kernel of the weight form.
        let m = nil.matrix();
        let complement = linalg::nullspace(&m.transpose(), tol.rank);
        for v in &complement {
            let ad = self.ad(v)?;
            if linalg::is_nilpotent(&ad, 1e-12) {
                return fail("complement vector is ad-nilpotent; nilradical not maximal".into());
            }
        }
        Ok(())
    }

    /// Block direct sum of two algebras.
    pub fn direct_sum(a: &LieAlgebra, b: &LieAlgebra) -> LieAlgebra {
        let dim = a.dim + b.dim;
        let mut names = a.basis_names.clone();
        for n in &b.basis_names {
            let candidate = if a.basis_names.contains(n) {
                format!("{n}'")
            } else {
                n.clone()
            };
            names.push(candidate);
        }
        let mut entries = Vec::new();
        for ((i, j), coeffs) in &a.entries {
            for (k, c) in coeffs {
                entries.push((*i, *j, *k, *c));
            }
        }
        for ((i, j), coeffs) in &b.entries {
            for (k, c) in coeffs {
                entries.push((i + a.dim, j + a.dim, k + a.dim, *c));
            }
        }
        LieAlgebra::new(dim, names, &entries).expect("block sum preserves validity")
    }

    /// Semidirect product t  ⋉ b: prepends one generator per supplied matrix,
    /// acting on b by that matrix. The matrices must be derivations of b and
    /// must pairwise commute.
    pub fn semidirect(
        derivations: &[DMatrix<f64>],
        generator_names: &[String],
        b: &LieAlgebra,
        tol: &Tolerances,
    ) -> Result<LieAlgebra> {
        assert_eq!(derivations.len(), generator_names.len());
        for d in derivations {
            let r = derivation_residual(b, d)?;
            if r > tol.deriv {
                return Err(Error::NotADerivation { residual: r });
            }
        }
        for (p, d1) in derivations.iter().enumerate() {
            for d2 in derivations.iter().skip(p + 1) {
                let comm = d1 * d2 - d2 * d1;
                let r = linalg::max_abs(&comm);
                if r > tol.comm {
                    return Err(Error::NonCommutingGenerators { residual: r });
                }
            }
        }
        let p = derivations.len();
        let dim = p + b.dim;
        let mut names = generator_names.to_vec();
        names.extend(b.basis_names.iter().cloned());
        let mut entries = Vec::new();
        for (a, d) in derivations.iter().enumerate() {
            for y in 0..b.dim {
                for k in 0..b.dim {
                    let c = d[(k, y)];
                    if c != 0.0 {
                        entries.push((a, p + y, p + k, c));
                    }
                }
            }
        }
        for ((i, j), coeffs) in &b.entries {
            for (k, c) in coeffs {
                entries.push((i + p, j + p, k + p, *c));
            }
        }
        LieAlgebra::new(dim, names, &entries)
    }
}

/// Worst Leibniz-rule residual of `d` over all basis pairs of `alg`.
pub fn derivation_residual(alg: &LieAlgebra, d: &DMatrix<f64>) -> Result<f64> {
    if d.nrows() != alg.dim() || d.ncols() != alg.dim() {
        return Err(Error::DimensionMismatch {
            expected: alg.dim(),
            found: d.nrows(),
        });
    }
    let e: Vec<DVector<f64>> = (0..alg.dim())
        .map(|i| DVector::from_fn(alg.dim(), |r, _| if r == i { 1.0 } else { 0.0 }))
        .collect();
    let mut worst = 0.0_f64;
    for i in 0..alg.dim() {
        for j in (i + 1)..alg.dim() {
            let lhs = d * alg.bracket(&e[i], &e[j])?;
            let rhs = alg.bracket(&(d * &e[i]), &e[j])? + alg.bracket(&e[i], &(d * &e[j]))?;
            worst = worst.max(linalg::max_abs_vec(&(lhs - rhs)));
        }
    }
    Ok(worst)
}

/// The 3-dimensional Heisenberg algebra [X, Y] = Z.
pub fn heisenberg3() -> LieAlgebra {
    LieAlgebra::new(
        3,
        vec!["X".into(), "Y".into(), "Z".into()],
        &[(0, 1, 2, 1.0)],
    )
    .unwrap()
}

/// The 5-dimensional Heisenberg algebra [X1, Y1] = [X2, Y2] = Z.
pub fn heisenberg5() -> LieAlgebra {
    LieAlgebra::new(
        5,
        vec![
            "X1".into(),
            "Y1".into(),
            "X2".into(),
            "Y2".into(),
            "Z".into(),
        ],
        &[(0, 1, 4, 1.0), (2, 3, 4, 1.0)],
    )
    .unwrap()
}

/// sl2(R): [H, E] = 2E, [H, F] = -2F, [E, F] = H.
pub fn sl2() -> LieAlgebra {
    LieAlgebra::new(
        3,
        vec!["H".into(), "E".into(), "F".into()],
        &[(0, 1, 1, 2.0), (0, 2, 2, -2.0), (1, 2, 0, 1.0)],
    )
    .unwrap()
}

/// The non-abelian 2-dimensional algebra [A, N] = N.
pub fn hyperbolic_plane_algebra() -> LieAlgebra {
    LieAlgebra::new(2, vec!["A".into(), "N".into()], &[(0, 1, 1, 1.0)]).unwrap()
}
