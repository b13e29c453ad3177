//! Derivation algebras and Ricci soliton classification.
//!
//! A left-invariant metric is an algebraic Ricci soliton when
//! `Ric = c Id + D` for a derivation D, and semi-algebraic when
//! `Ric = c Id + (D + D^*)/2` with the adjoint taken w.r.t. the metric.
//! Classification solves nested least-squares problems over the affine
//! families {0} = flat, {c Id} = Einstein, c Id + Der = algebraic and
//! c Id + S(Der) = semi-algebraic, in a Q-orthonormal frame, and returns the
//! strongest class whose residual clears the soliton tolerance.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lie::{derivation_residual, LieAlgebra, SubspaceBasis};
use crate::linalg;
use crate::metric::MetricLieAlgebra;
use crate::tolerances::Tolerances;

/// A basis of a space of derivations of a fixed algebra.
#[derive(Debug, Clone)]
pub struct DerivationBasis {
    pub matrices: Vec<DMatrix<f64>>,
}

impl DerivationBasis {
    pub fn dim(&self) -> usize {
        self.matrices.len()
    }
}

/// Soliton classification outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonClass {
    Flat,
    Einstein,
    Algebraic,
    SemiAlgebraic,
    None,
}

impl std::fmt::Display for SolitonClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SolitonClass::Flat => "flat",
            SolitonClass::Einstein => "einstein",
            SolitonClass::Algebraic => "algebraic",
            SolitonClass::SemiAlgebraic => "semi_algebraic",
            SolitonClass::None => "none",
        };
        f.write_str(s)
    }
}

/// Residuals of every classification stage (max-abs entry in a Q-orthonormal
/// frame).
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct StageResiduals {
    pub flat: f64,
    pub einstein: f64,
    pub algebraic: f64,
    pub semi_algebraic: f64,
}

/// Classification verdict with the minimizing soliton data.
#[derive(Debug, Clone)]
pub struct SolitonVerdict {
    pub class: SolitonClass,
    /// Soliton constant of the winning stage (0 for flat).
    pub c: f64,
    /// Derivation certificate of the winning stage (zero for flat/Einstein).
    pub derivation: DMatrix<f64>,
    /// Residual of the winning stage; for class `None` the best (weakest)
    /// stage residual.
    pub residual: f64,
    pub stages: StageResiduals,
    /// Minimizer of the algebraic stage (c, D), kept for structure checks.
    pub algebraic_fit: (f64, DMatrix<f64>),
    /// Minimizer of the semi-algebraic stage (c, D with Ric ~ cId + S(D)).
    pub semi_algebraic_fit: (f64, DMatrix<f64>),
}

/// Basis of the full derivation algebra Der(g), as the nullspace of the
/// Leibniz system over all basis pairs.
pub fn derivation_algebra(alg: &LieAlgebra, tol: &Tolerances) -> DerivationBasis {
    let rows = leibniz_rows(alg);
    let matrices = nullspace_matrices(alg.dim(), &rows, tol.rank);
    DerivationBasis { matrices }
}

/// Basis of the skew-symmetric derivations k = so(Q) ∩ Der(g).
pub fn skew_derivations(m: &MetricLieAlgebra, tol: &Tolerances) -> DerivationBasis {
    let alg = m.algebra();
    let n = alg.dim();
    let mut rows = leibniz_rows(alg);
    // Q D + D^T Q = 0, one row per (i <= j).
    let q = m.gram();
    for i in 0..n {
        for j in i..n {
            let mut row = vec![0.0; n * n];
            for l in 0..n {
                row[l * n + j] += q[(i, l)];
                row[l * n + i] += q[(l, j)];
            }
            rows.push(row);
        }
    }
    let matrices = nullspace_matrices(n, &rows, tol.rank);
    DerivationBasis { matrices }
}

/// Rows of the linear system D -> D[x,y] - [Dx,y] - [x,Dy] over basis pairs,
/// with D flattened row-major (unknown index r*n + c).
fn leibniz_rows(alg: &LieAlgebra) -> Vec<Vec<f64>> {
    let n = alg.dim();
    let mut rows = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let mut row = vec![0.0; n * n];
                // D [e_i, e_j]: sum_l c[i][j][l] D[k][l]
                for l in 0..n {
                    let c = alg.structure_constant(i, j, l);
                    if c != 0.0 {
                        row[k * n + l] += c;
                    }
                }
                // -[D e_i, e_j]: -sum_l D[l][i] c[l][j][k]
                for l in 0..n {
                    let c = alg.structure_constant(l, j, k);
                    if c != 0.0 {
                        row[l * n + i] -= c;
                    }
                }
                // -[e_i, D e_j]: -sum_l D[l][j] c[i][l][k]
                for l in 0..n {
                    let c = alg.structure_constant(i, l, k);
                    if c != 0.0 {
                        row[l * n + j] -= c;
                    }
                }
                rows.push(row);
            }
        }
    }
    rows
}

fn nullspace_matrices(n: usize, rows: &[Vec<f64>], rank_tol: f64) -> Vec<DMatrix<f64>> {
    if rows.is_empty() {
        // Every matrix qualifies; return the standard basis of gl(n).
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut m = DMatrix::zeros(n, n);
                m[(r, c)] = 1.0;
                out.push(m);
            }
        }
        return out;
    }
    let a = DMatrix::from_fn(rows.len(), n * n, |r, c| rows[r][c]);
    linalg::nullspace(&a, rank_tol)
        .into_iter()
        .map(|v| DMatrix::from_fn(n, n, |r, c| v[r * n + c]))
        .collect()
}

/// Frobenius-orthogonal least squares of `target` over the span of `family`,
/// returning (coefficients, residual matrix).
fn lstsq_over_family(
    target: &DMatrix<f64>,
    family: &[DMatrix<f64>],
    rank_tol: f64,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = target.nrows();
    if family.is_empty() {
        return (DVector::zeros(0), target.clone());
    }
    let a = DMatrix::from_fn(n * n, family.len(), |r, c| family[c][(r / n, r % n)]);
    let b = DVector::from_fn(n * n, |r, _| target[(r / n, r % n)]);
    let x = linalg::lstsq_min_norm(&a, &b, rank_tol);
    let mut resid = target.clone();
    for (k, m) in family.iter().enumerate() {
        resid -= m * x[k];
    }
    (x, resid)
}

/// Classify a metric as flat / Einstein / algebraic / semi-algebraic / none.
///
/// All residuals are max-abs entries of the defect matrix in a Q-orthonormal
/// frame; minimizers are reported in the input basis. Ties inside a stage are
/// broken by the minimum-norm least-squares solution.
pub fn classify(m: &MetricLieAlgebra, tol: &Tolerances) -> SolitonVerdict {
    let n = m.dim();
    let (ric, frame) = m.ricci_frame();
    let der = derivation_algebra(m.algebra(), tol);
    let der_frame: Vec<DMatrix<f64>> = der
        .matrices
        .iter()
        .map(|d| frame.operator_to_frame(d))
        .collect();
    let id = DMatrix::identity(n, n);

    // (a) flat
    let flat_res = linalg::max_abs(&ric);

    // (b) Einstein: c = tr(Ric)/n minimizes ||Ric - c Id||.
    let c_einstein = ric.trace() / n as f64;
    let einstein_res = linalg::max_abs(&(&ric - &id * c_einstein));

    // (c) algebraic: least squares over span{Id} + Der.
    let mut family = vec![id.clone()];
    family.extend(der_frame.iter().cloned());
    let (x_alg, resid_alg) = lstsq_over_family(&ric, &family, tol.rank);
    let algebraic_res = linalg::max_abs(&resid_alg);
    let c_alg = x_alg[0];
    let mut d_alg = DMatrix::zeros(n, n);
    for (k, dm) in der.matrices.iter().enumerate() {
        d_alg += dm * x_alg[k + 1];
    }

    // (d) semi-algebraic: least squares over span{Id} + S(Der), where in the
    // frame S(E) = (E + E^T)/2.
    let mut family_s = vec![id.clone()];
    family_s.extend(
        der_frame
            .iter()
            .map(|e| (e + e.transpose()) * 0.5),
    );
    let (x_semi, resid_semi) = lstsq_over_family(&ric, &family_s, tol.rank);
    let semi_res = linalg::max_abs(&resid_semi);
    let c_semi = x_semi[0];
    let mut d_semi = DMatrix::zeros(n, n);
    for (k, dm) in der.matrices.iter().enumerate() {
        d_semi += dm * x_semi[k + 1];
    }

    let stages = StageResiduals {
        flat: flat_res,
        einstein: einstein_res,
        algebraic: algebraic_res,
        semi_algebraic: semi_res,
    };
    let algebraic_fit = (c_alg, d_alg.clone());
    let semi_algebraic_fit = (c_semi, d_semi.clone());

    let (class, c, derivation, residual) = if flat_res < tol.soliton {
        (SolitonClass::Flat, 0.0, DMatrix::zeros(n, n), flat_res)
    } else if einstein_res < tol.soliton {
        (
            SolitonClass::Einstein,
            c_einstein,
            DMatrix::zeros(n, n),
            einstein_res,
        )
    } else if algebraic_res < tol.soliton {
        (SolitonClass::Algebraic, c_alg, d_alg, algebraic_res)
    } else if semi_res < tol.soliton {
        (SolitonClass::SemiAlgebraic, c_semi, d_semi, semi_res)
    } else {
        (SolitonClass::None, c_semi, d_semi, semi_res)
    };

    SolitonVerdict {
        class,
        c,
        derivation,
        residual,
        stages,
        algebraic_fit,
        semi_algebraic_fit,
    }
}

/// Check the "semi-algebraic implies algebraic" lemma on a solvable instance:
/// the Q-symmetric part of the semi-algebraic certificate must itself be a
/// derivation.
pub fn semi_algebraic_implies_algebraic_check(
    m: &MetricLieAlgebra,
    verdict: &SolitonVerdict,
    tol: &Tolerances,
) -> Result<bool> {
    if !m.algebra().validate(tol).solvable {
        return Err(Error::NotSolvable);
    }
    if verdict.stages.semi_algebraic >= tol.soliton {
        return Err(Error::InvalidVerdict {
            detail: "semi-algebraic stage did not converge; nothing to check".into(),
        });
    }
    let s = m.q_symmetric_part(&verdict.semi_algebraic_fit.1);
    let r = derivation_residual(m.algebra(), &s)?;
    Ok(r < tol.deriv)
}

/// The pre-Einstein derivation of a nilpotent algebra: the derivation D1 with
/// tr(D1 E) = tr(E) for every derivation E.
///
/// Solved as a Gram system over a derivation basis; a singular trace form is
/// handled by the minimum-norm solution (restriction to the row space, i.e.
/// a trace-form-nondegenerate complement of the radical), and the trace
/// conditions are verified afterwards.
pub fn pre_einstein_derivation(nil: &LieAlgebra, tol: &Tolerances) -> Result<DMatrix<f64>> {
    if !nil.validate(tol).nilpotent {
        return Err(Error::NotNilpotent);
    }
    let der = derivation_algebra(nil, tol);
    let m = der.dim();
    let gram = DMatrix::from_fn(m, m, |a, b| (&der.matrices[a] * &der.matrices[b]).trace());
    let traces = DVector::from_fn(m, |a, _| der.matrices[a].trace());
    let x = linalg::lstsq_min_norm(&gram, &traces, tol.rank);
    let mut d1 = DMatrix::zeros(nil.dim(), nil.dim());
    for (k, e) in der.matrices.iter().enumerate() {
        d1 += e * x[k];
    }
    // Verify the trace equations on the full basis.
    let mut worst = 0.0_f64;
    for e in &der.matrices {
        worst = worst.max(((&d1 * e).trace() - e.trace()).abs());
    }
    if worst > 1e-7 * (1.0 + linalg::max_abs(&d1)) {
        return Err(Error::SingularSystem { residual: worst });
    }
    Ok(d1)
}

/// Per-condition outcome of the solvsoliton structure theorem checks.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct StructureReport {
    /// Dimension of the nilradical.
    pub nilradical_dim: usize,
    /// (a) the orthogonal complement of the nilradical is abelian.
    pub complement_abelian: bool,
    pub complement_abelian_residual: f64,
    /// (b) each ad A restricted to the nilradical is Q-symmetric.
    pub ad_complement_symmetric: bool,
    pub ad_complement_symmetry_residual: f64,
    /// (c) the soliton derivation vanishes on the complement and restricts
    /// on the nilradical to -c D1 - ad H (which reads D1 - ad H once the
    /// metric is scaled to c = -1).
    pub derivation_matches: bool,
    pub derivation_residual: f64,
    /// (d) Ker D is contained in complement + Im(ad H).
    pub kernel_contained: bool,
    pub all_pass: bool,
}

/// Verify the structural constraints satisfied by every solvsoliton: abelian
/// orthogonal complement of the nilradical, Q-symmetric ad on it, the
/// derivation identity on the nilradical, and the kernel containment. For
/// non-soliton inputs the report lists which checks fail.
pub fn solvsoliton_structure_check(
    m: &MetricLieAlgebra,
    verdict: &SolitonVerdict,
    tol: &Tolerances,
) -> Result<StructureReport> {
    let alg = m.algebra();
    if !alg.validate(tol).solvable {
        return Err(Error::NotSolvable);
    }
    let n = alg.dim();
    let nil = alg.nilradical(tol)?;
    let complement = m.orthogonal_complement(&nil.vectors, tol.rank);

    // (a) complement abelian
    let mut abelian_res = 0.0_f64;
    for (i, a) in complement.iter().enumerate() {
        for b in complement.iter().skip(i + 1) {
            abelian_res = abelian_res.max(linalg::max_abs_vec(&alg.bracket(a, b)?));
        }
    }
    let complement_abelian = abelian_res < tol.comm.max(1e-9);

    // (b) ad A: n -> n symmetric w.r.t. the restricted metric. Expressed in
    // an ambient Q-orthonormal basis of the nilradical, the restricted
    // operator must be a symmetric matrix.
    let nil_on = q_orthonormalize(m, &nil.vectors);
    let mut sym_res = 0.0_f64;
    for a in &complement {
        let ad_a = alg.ad(a)?;
        let k = nil_on.len();
        let mut restricted = DMatrix::zeros(k, k);
        for (j, v) in nil_on.iter().enumerate() {
            let w = &ad_a * v;
            for (i, u) in nil_on.iter().enumerate() {
                restricted[(i, j)] = m.inner(u, &w);
            }
        }
        sym_res = sym_res.max(linalg::max_abs(&(&restricted - restricted.transpose())));
    }
    let ad_complement_symmetric = sym_res < tol.sym.max(1e-8);

    // (c) D|_a = 0 and D|_n = -c D1 - ad H. At the c = -1 normalization
    // this is D|_n = D1 - ad H; scaling the metric by 1/|c| scales D, ad H
    // and c alike, which yields the -c-scaled form checked here.
    let (c, d) = match verdict.class {
        SolitonClass::Flat | SolitonClass::Einstein => (verdict.c, DMatrix::zeros(n, n)),
        _ => (verdict.algebraic_fit.0, verdict.algebraic_fit.1.clone()),
    };
    let nil_alg = induced_subalgebra(alg, &nil, tol)?;
    let d1_small = pre_einstein_derivation(&nil_alg, tol)?;
    // Lift D1 to the ambient space through the nilradical basis.
    let nil_mat = nil.matrix();
    let h = m.mean_curvature_vector();
    let ad_h = alg.ad(&h)?;
    let mut deriv_res = 0.0_f64;
    for a in &complement {
        deriv_res = deriv_res.max(linalg::max_abs_vec(&(&d * a)));
    }
    let expected_on_nil = &nil_mat * &d1_small * (-c); // columns: -c * D1 applied to nil basis
    for (j, v) in nil.vectors.iter().enumerate() {
        let got = &d * v;
        let want = expected_on_nil.column(j) - &ad_h * v;
        deriv_res = deriv_res.max(linalg::max_abs_vec(&(got - want)));
    }
    let derivation_matches = deriv_res < 1e-7;

    // (d) Ker D ⊆ complement + Im(ad H)
    let kernel = linalg::nullspace(&d, tol.rank);
    let mut span = complement.clone();
    let im_cols: Vec<DVector<f64>> = (0..n).map(|j| ad_h.column(j).into_owned()).collect();
    span.extend(linalg::column_space(&im_cols, tol.rank));
    let span = linalg::column_space(&span, tol.rank);
    let kernel_contained = linalg::subspace_contained(&kernel, &span, tol.rank * 1e3);

    let all_pass =
        complement_abelian && ad_complement_symmetric && derivation_matches && kernel_contained;
    Ok(StructureReport {
        nilradical_dim: nil.dim(),
        complement_abelian,
        complement_abelian_residual: abelian_res,
        ad_complement_symmetric,
        ad_complement_symmetry_residual: sym_res,
        derivation_matches,
        derivation_residual: deriv_res,
        kernel_contained,
        all_pass,
    })
}

/// Q-orthonormalize a list of vectors by Gram-Schmidt in the Q inner product.
fn q_orthonormalize(m: &MetricLieAlgebra, vectors: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for u in &out {
            let p = m.inner(u, &w);
            w -= u * p;
        }
        let norm = m.inner(&w, &w).sqrt();
        if norm > 1e-12 {
            out.push(w / norm);
        }
    }
    out
}

/// Express the bracket of a bracket-closed subspace in its own basis.
pub fn induced_subalgebra(
    alg: &LieAlgebra,
    sub: &SubspaceBasis,
    tol: &Tolerances,
) -> Result<LieAlgebra> {
    let k = sub.dim();
    if k == 0 {
        return Err(Error::ContractViolation {
            detail: "cannot induce a 0-dimensional algebra".into(),
        });
    }
    let mat = sub.matrix();
    let mut entries = Vec::new();
    for i in 0..k {
        for j in (i + 1)..k {
            let w = alg.bracket(&sub.vectors[i], &sub.vectors[j])?;
            let coeffs = linalg::lstsq_min_norm(&mat, &w, tol.rank);
            let recon = &mat * &coeffs;
            if linalg::max_abs_vec(&(recon - &w)) > 1e-8 {
                return Err(Error::ContractViolation {
                    detail: "subspace is not closed under the bracket".into(),
                });
            }
            for l in 0..k {
                if coeffs[l].abs() > 1e-13 {
                    entries.push((i, j, l, coeffs[l]));
                }
            }
        }
    }
    LieAlgebra::new(k, (0..k).map(|i| format!("n{i}")).collect(), &entries)
}

/// Outcome of the projected descent over SPD Gram matrices.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_gram: DMatrix<f64>,
    pub best_residual: f64,
    pub best_restart: usize,
}

/// Minimize the semi-algebraic classification residual over Gram matrices by
/// descent from random starts.
///
/// Gram matrices are parameterized by log-Cholesky coordinates and projected
/// to determinant one after every step (the residual scales like 1/lambda
/// under Q -> lambda Q, so the unnormalized infimum is always zero). The
/// gradient comes from central finite differences with a backtracking line
/// search, 500 iterations per restart. Deterministic for a fixed seed;
/// restarts are independent and merged by best residual with index
/// tie-break. A large best residual is evidence, not proof, of nonexistence.
pub fn soliton_residual_search(
    alg: &LieAlgebra,
    restarts: usize,
    seed: u64,
    tol: &Tolerances,
) -> SearchOutcome {
    let n = alg.dim();
    let n_params = n * (n + 1) / 2;

    let objective = |params: &DVector<f64>| -> f64 {
        let gram = log_cholesky_to_gram(params, n);
        match MetricLieAlgebra::new(alg.clone(), gram, tol) {
            Ok(m) => classify(m_normalized(&m, tol).as_ref().unwrap_or(&m), tol)
                .stages
                .semi_algebraic,
            Err(_) => f64::INFINITY,
        }
    };

    let run_restart = |r: usize| -> (usize, f64, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let mut params = DVector::from_fn(n_params, |_, _| rng.gen_range(-0.5..0.5));
        let mut value = objective(&params);
        let fd = 1e-6;
        for _ in 0..500 {
            let mut grad = DVector::zeros(n_params);
            for k in 0..n_params {
                let mut plus = params.clone();
                plus[k] += fd;
                let mut minus = params.clone();
                minus[k] -= fd;
                grad[k] = (objective(&plus) - objective(&minus)) / (2.0 * fd);
            }
            let gnorm = grad.norm();
            if gnorm < 1e-14 || value < 1e-13 {
                break;
            }
            let mut step = 0.5 / gnorm.max(1.0);
            let mut improved = false;
            for _ in 0..30 {
                let candidate = &params - &grad * step;
                let cval = objective(&candidate);
                if cval < value {
                    params = candidate;
                    value = cval;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (r, value, params)
    };

    let results: Vec<(usize, f64, DVector<f64>)> =
        (0..restarts).into_par_iter().map(run_restart).collect();
    let best = results
        .into_iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .expect("at least one restart");
    let gram = log_cholesky_to_gram(&best.2, n);
    let det = gram.determinant();
    let gram = gram / det.powf(1.0 / n as f64);
    SearchOutcome {
        best_gram: gram,
        best_residual: best.1,
        best_restart: best.0,
    }
}

fn m_normalized(m: &MetricLieAlgebra, tol: &Tolerances) -> Result<MetricLieAlgebra> {
    let det = m.gram().determinant();
    m.with_gram(m.gram() / det.powf(1.0 / m.dim() as f64), tol)
}

/// Build the SPD matrix L L^T from log-Cholesky parameters (diagonal entries
/// of L are exponentials of the parameters).
fn log_cholesky_to_gram(params: &DVector<f64>, n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let mut idx = 0;
    for i in 0..n {
        for j in 0..=i {
            if i == j {
                l[(i, j)] = params[idx].clamp(-12.0, 12.0).exp();
            } else {
                l[(i, j)] = params[idx];
            }
            idx += 1;
        }
    }
    let g = &l * l.transpose();
    // exact symmetry for the constructor
    let mut sym = g.clone();
    for i in 0..n {
        for j in 0..i {
            sym[(j, i)] = sym[(i, j)];
        }
    }
    sym
}
