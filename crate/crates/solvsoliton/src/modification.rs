//! Modifications of solvsolitons.
//!
//! A modification map sends a metric solvable algebra s into its skew
//! derivations k = so(Q) ∩ Der(s). When phi kills the commutator subalgebra
//! and has abelian image, the graph r = (id + phi)s is again a solvable Lie
//! algebra, with bracket
//!
//! ```text
//! [x + phi(x), y + phi(y)] = [x, y] + phi(x) y - phi(y) x
//! ```
//!
//! and the transported inner product <(id+phi)x, (id+phi)y>' = <x, y> makes
//! the two groups isometric. The solvsoliton criterion decides when the
//! result is itself a solvsoliton, in three independent ways that must agree.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::linalg;
use crate::metric::MetricLieAlgebra;
use crate::soliton::{classify, skew_derivations, DerivationBasis, SolitonClass};
use crate::tolerances::Tolerances;

/// A linear map phi: s -> k from a metric solvable algebra into its skew
/// derivations, one image matrix per basis vector.
#[derive(Debug, Clone)]
pub struct ModificationMap {
    pub source: MetricLieAlgebra,
    /// Image matrix phi(e_i) for each basis vector of the source.
    pub images: Vec<DMatrix<f64>>,
}

/// Residual report for the modification conditions.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ConditionReport {
    /// (i) phi vanishes on the commutator subalgebra.
    pub kills_commutator: bool,
    pub kills_commutator_residual: f64,
    /// (ii) the image of phi is abelian.
    pub image_abelian: bool,
    pub image_abelian_residual: f64,
    /// Every image matrix lies in the span of the skew derivations.
    pub image_in_skew_derivations: bool,
    pub image_projection_residual: f64,
    /// Closure of the graph: phi(phi(x) y - phi(y) x) = 0 on basis pairs.
    /// This is what makes (id + phi)s a subalgebra; it does not follow from
    /// (i) and (ii) alone (an image rotation whose planes leave Ker phi can
    /// push a bracket out of the graph).
    pub image_action_in_kernel: bool,
    pub image_action_residual: f64,
    pub all_pass: bool,
}

/// The result of building r = (id + phi)s with the transported metric.
#[derive(Debug, Clone)]
pub struct ModifiedAlgebra {
    /// The modified algebra on the basis {e_i + phi(e_i)}.
    pub modified: MetricLieAlgebra,
    /// The source solvsoliton and map it came from.
    pub provenance: ModificationMap,
}

impl ModificationMap {
    pub fn new(source: MetricLieAlgebra, images: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = source.dim();
        if images.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: images.len(),
            });
        }
        for m in &images {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        Ok(ModificationMap { source, images })
    }

    /// The trivial modification phi = 0.
    pub fn zero(source: MetricLieAlgebra) -> Self {
        let n = source.dim();
        ModificationMap {
            source,
            images: vec![DMatrix::zeros(n, n); n],
        }
    }

    /// phi applied to a coordinate vector.
    pub fn apply(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let n = self.source.dim();
        let mut out = DMatrix::zeros(n, n);
        for (i, img) in self.images.iter().enumerate() {
            if x[i] != 0.0 {
                out += img * x[i];
            }
        }
        out
    }
}

/// Check conditions (i), (ii) and image containment for a modification map.
///
/// The source must classify as a solvsoliton (flat, Einstein or algebraic);
/// when every condition passes, `build_modification` is guaranteed to produce
/// a valid solvable Lie algebra.
pub fn validate_modification(phi: &ModificationMap, tol: &Tolerances) -> Result<ConditionReport> {
    let source_class = classify(&phi.source, tol).class;
    if !matches!(
        source_class,
        SolitonClass::Flat | SolitonClass::Einstein | SolitonClass::Algebraic
    ) {
        return Err(Error::SourceNotSolvsoliton {
            class: source_class.to_string(),
        });
    }
    Ok(condition_report(phi, tol))
}

/// The raw condition residuals, without the solvsoliton gate on the source.
pub fn condition_report(phi: &ModificationMap, tol: &Tolerances) -> ConditionReport {
    let alg = phi.source.algebra();

    // (i) phi([s, s]) = 0
    let derived = alg.derived_subalgebra(tol);
    let mut kc_res = 0.0_f64;
    for v in &derived.vectors {
        kc_res = kc_res.max(linalg::max_abs(&phi.apply(v)));
    }

    // (ii) pairwise commutators of images vanish
    let mut ab_res = 0.0_f64;
    for (i, a) in phi.images.iter().enumerate() {
        for b in phi.images.iter().skip(i + 1) {
            ab_res = ab_res.max(linalg::max_abs(&(a * b - b * a)));
        }
    }

    // each image lies in span(k)
    let kbasis = skew_derivations(&phi.source, tol);
    let mut proj_res = 0.0_f64;
    for img in &phi.images {
        proj_res = proj_res.max(projection_residual_matrix(img, &kbasis, tol.rank));
    }

    // closure: phi(phi(e_i) e_j - phi(e_j) e_i) = 0
    let n = alg.dim();
    let mut act_res = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let w = phi.images[i].column(j) - phi.images[j].column(i);
            act_res = act_res.max(linalg::max_abs(&phi.apply(&w.into_owned())));
        }
    }

    let kills_commutator = kc_res < tol.rank.max(1e-9) * 10.0;
    let image_abelian = ab_res < tol.comm;
    let image_in_skew_derivations = proj_res < tol.rank.max(1e-9) * 10.0;
    let image_action_in_kernel = act_res < tol.rank.max(1e-9) * 10.0;
    ConditionReport {
        kills_commutator,
        kills_commutator_residual: kc_res,
        image_abelian,
        image_abelian_residual: ab_res,
        image_in_skew_derivations,
        image_projection_residual: proj_res,
        image_action_in_kernel,
        image_action_residual: act_res,
        all_pass: kills_commutator
            && image_abelian
            && image_in_skew_derivations
            && image_action_in_kernel,
    }
}

fn projection_residual_matrix(
    m: &DMatrix<f64>,
    basis: &DerivationBasis,
    rank_tol: f64,
) -> f64 {
    if linalg::max_abs(m) == 0.0 {
        return 0.0;
    }
    if basis.matrices.is_empty() {
        return linalg::max_abs(m);
    }
    let n = m.nrows();
    let a = DMatrix::from_fn(n * n, basis.matrices.len(), |r, c| {
        basis.matrices[c][(r / n, r % n)]
    });
    let b = DVector::from_fn(n * n, |r, _| m[(r / n, r % n)]);
    let x = linalg::lstsq_min_norm(&a, &b, rank_tol);
    let recon = &a * x;
    linalg::max_abs_vec(&(recon - b))
}

/// Build r = (id + phi)s with the transported metric.
///
/// In the modified basis {e_i + phi(e_i)} the Gram matrix is the source Gram
/// matrix, and the structure constants come from the quoted bracket. Bracket
/// results must land in Ker phi; a violation signals an internal
/// inconsistency and is unreachable when the conditions hold.
pub fn build_modification(phi: &ModificationMap, tol: &Tolerances) -> Result<ModifiedAlgebra> {
    let report = validate_modification(phi, tol)?;
    if !report.all_pass {
        return Err(Error::ConditionsViolated {
            detail: format!(
                "kills_commutator: {}, image_abelian: {}, image_in_k: {}",
                report.kills_commutator, report.image_abelian, report.image_in_skew_derivations
            ),
        });
    }
    let alg = phi.source.algebra();
    let n = alg.dim();
    let e: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
        .collect();
    let mut entries = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = alg.bracket(&e[i], &e[j])?
                + phi.images[i].column(j).into_owned()
                - phi.images[j].column(i).into_owned();
            let kick = phi.apply(&w);
            if linalg::max_abs(&kick) > 1e-8 {
                return Err(Error::JacobiFailure {
                    detail: format!(
                        "bracket image escapes Ker phi at pair ({i},{j}): residual {:.3e}",
                        linalg::max_abs(&kick)
                    ),
                });
            }
            for k in 0..n {
                if w[k] != 0.0 {
                    entries.push((i, j, k, w[k]));
                }
            }
        }
    }
    let names = alg
        .basis_names()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            if linalg::max_abs(&phi.images[i]) > 0.0 {
                format!("{name}~")
            } else {
                name.clone()
            }
        })
        .collect();
    let modified_alg = LieAlgebra::new(n, names, &entries)?;
    let diag = modified_alg.validate(tol);
    if !diag.jacobi_ok {
        return Err(Error::JacobiFailure {
            detail: format!("Jacobi residual {:.3e} on the modified bracket", diag.jacobi_residual),
        });
    }
    if !diag.solvable {
        return Err(Error::JacobiFailure {
            detail: "modified algebra is not solvable".into(),
        });
    }
    let modified = MetricLieAlgebra::new(modified_alg, phi.source.gram().clone(), tol)?;
    // Isometry witness: the two groups present the same geometry, so the
    // Ricci spectra must agree.
    let spec = |m: &MetricLieAlgebra| -> Vec<f64> {
        let (ric, _) = m.ricci_frame();
        let mut s: Vec<f64> = nalgebra::SymmetricEigen::new(ric)
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s
    };
    let deviation = spec(&phi.source)
        .iter()
        .zip(spec(&modified).iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    if deviation > 1e-9 {
        return Err(Error::ContractViolation {
            detail: format!("modified Ricci spectrum deviates from the source by {deviation:.3e}"),
        });
    }
    Ok(ModifiedAlgebra {
        modified,
        provenance: phi.clone(),
    })
}

/// Per-condition verdicts of the solvsoliton criterion on a modification.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CriterionVerdict {
    /// (ii) the nilradical of the source lies in Ker phi.
    pub nilradical_in_kernel: bool,
    /// (iii) ad of every element of the orthogonal complement of the
    /// nilradical of r is semisimple with not-all-imaginary spectrum
    /// (checked on a basis and on random unit combinations).
    pub complement_ad_reductive: bool,
    /// (iv) that complement is an abelian subalgebra whose basis elements act
    /// reductively with not-all-imaginary spectrum.
    pub complement_abelian_reductive: bool,
    /// The three verdicts above must agree; this is their common value when
    /// they do.
    pub is_solvsoliton: bool,
    /// Whether (ii)-(iv) agreed pairwise.
    pub verdicts_consistent: bool,
    /// Per-basis-vector semisimplicity of ad on the complement.
    pub complement_reports: Vec<ComplementVectorReport>,
}

/// Reductivity data for one complement basis vector.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ComplementVectorReport {
    pub semisimple: bool,
    pub max_abs_real_part: f64,
}

/// Evaluate the solvsoliton criterion on a modified algebra.
///
/// Conditions (iii) and (iv) are intrinsic to the modified metric algebra;
/// condition (ii) uses the provenance. The three must agree (their
/// equivalence is the content of the criterion); sampling on (iii) covers
/// combinations of basis vectors but is not a proof.
pub fn solvsoliton_criterion(
    mod_alg: &ModifiedAlgebra,
    tol: &Tolerances,
) -> Result<CriterionVerdict> {
    let m = &mod_alg.modified;
    let alg = m.algebra();
    if !alg.validate(tol).solvable {
        return Err(Error::NotSolvable);
    }

    // (ii): n(source) ⊆ Ker phi.
    let phi = &mod_alg.provenance;
    let source_nil = phi.source.algebra().nilradical(tol)?;
    let mut nil_res = 0.0_f64;
    for v in &source_nil.vectors {
        nil_res = nil_res.max(linalg::max_abs(&phi.apply(v)));
    }
    let nilradical_in_kernel = nil_res < 1e-9;

    // complement of the nilradical of r, w.r.t. the transported metric.
    let nil_r = alg.nilradical(tol)?;
    let complement = m.orthogonal_complement(&nil_r.vectors, tol.rank);

    // (iii): each ad v semisimple, spectrum not all purely imaginary, on the
    // basis and on 25 seeded random unit combinations.
    let mut complement_reports = Vec::new();
    let mut reductive = true;
    for v in &complement {
        let rep = linalg::semisimplicity(&alg.ad(v)?, tol.eig);
        if !rep.semisimple || rep.max_abs_re <= tol.eig {
            reductive = false;
        }
        complement_reports.push(ComplementVectorReport {
            semisimple: rep.semisimple,
            max_abs_real_part: rep.max_abs_re,
        });
    }
    if complement.is_empty() {
        reductive = true; // vacuous
    } else if reductive {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..25 {
            let mut v = DVector::zeros(alg.dim());
            for b in &complement {
                v += b * rng.gen_range(-1.0..1.0);
            }
            let norm = v.norm();
            if norm < 1e-9 {
                continue;
            }
            v /= norm;
            let rep = linalg::semisimplicity(&alg.ad(&v)?, tol.eig);
            if !rep.semisimple || rep.max_abs_re <= tol.eig {
                reductive = false;
                break;
            }
        }
    }
    let complement_ad_reductive = reductive;

    // (iv): complement abelian + basis elements reductive with
    // not-all-imaginary spectrum (basis check suffices per the criterion).
    let mut abelian = true;
    for (i, a) in complement.iter().enumerate() {
        for b in complement.iter().skip(i + 1) {
            if linalg::max_abs_vec(&alg.bracket(a, b)?) > tol.comm.max(1e-9) * 10.0 {
                abelian = false;
            }
        }
    }
    let basis_reductive = complement_reports
        .iter()
        .all(|r| r.semisimple && r.max_abs_real_part > tol.eig);
    let complement_abelian_reductive = abelian && (complement.is_empty() || basis_reductive);

    let verdicts_consistent = nilradical_in_kernel == complement_ad_reductive
        && complement_ad_reductive == complement_abelian_reductive;
    Ok(CriterionVerdict {
        nilradical_in_kernel,
        complement_ad_reductive,
        complement_abelian_reductive,
        is_solvsoliton: nilradical_in_kernel && complement_ad_reductive,
        verdicts_consistent,
        complement_reports,
    })
}

/// Structural facts that hold for every modification of a solvsoliton.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ModificationStructureReport {
    /// (a) phi kills the commutator subalgebra.
    pub normal_modification: bool,
    /// (b) Ker(ad H~) ∩ [s,s] ⊆ Ker(ad H) ∩ [s,s].
    pub mean_curvature_kernel_contained: bool,
    /// (c) skew derivations annihilate the complement of the nilradical and
    /// commute with its ad.
    pub skew_derivations_annihilate_complement: bool,
    /// (d) Im(ad H) and complement + (n ∩ Ker ad H) are stable under k.
    pub skew_stable_splitting: bool,
    pub all_pass: bool,
}

/// Check the structural lemmas about modifications on a concrete instance.
pub fn modification_structure_tests(
    mod_alg: &ModifiedAlgebra,
    tol: &Tolerances,
) -> Result<ModificationStructureReport> {
    let phi = &mod_alg.provenance;
    let source = &phi.source;
    let alg = source.algebra();
    if !alg.validate(tol).solvable {
        return Err(Error::NotSolvable);
    }

    // (a) phi([s,s]) = 0
    let derived = alg.derived_subalgebra(tol);
    let mut res_a = 0.0_f64;
    for v in &derived.vectors {
        res_a = res_a.max(linalg::max_abs(&phi.apply(v)));
    }
    let normal_modification = res_a < 1e-9;

    // (b) with H~ = (id+phi)H, whose coordinates in the modified basis equal
    // those of H: Ker(ad_r H~) ∩ [s,s] ⊆ Ker(ad_s H) ∩ [s,s].
    let h = source.mean_curvature_vector();
    let ad_h = alg.ad(&h)?;
    let mod_alg_r = mod_alg.modified.algebra();
    let ad_h_tilde = mod_alg_r.ad(&h)?;
    let contained = if derived.dim() == 0 {
        true
    } else {
        let w = derived.matrix();
        let ker_tilde_in_w = linalg::nullspace(&(&ad_h_tilde * &w), tol.rank)
            .into_iter()
            .map(|alpha| &w * alpha)
            .collect::<Vec<_>>();
        ker_tilde_in_w.iter().all(|v| {
            let image = &ad_h * v;
            linalg::max_abs_vec(&image) < 1e-8 * v.norm().max(1.0)
        })
    };
    let mean_curvature_kernel_contained = contained;

    // (c) every skew derivation annihilates the complement of the source
    // nilradical and commutes with ad A there.
    let kbasis = skew_derivations(source, tol);
    let nil = alg.nilradical(tol)?;
    let complement = source.orthogonal_complement(&nil.vectors, tol.rank);
    let mut res_c = 0.0_f64;
    for e in &kbasis.matrices {
        for a in &complement {
            res_c = res_c.max(linalg::max_abs_vec(&(e * a)));
            let ad_a = alg.ad(a)?;
            res_c = res_c.max(linalg::max_abs(&(e * &ad_a - &ad_a * e)));
        }
    }
    let skew_derivations_annihilate_complement = res_c < 1e-8;

    // (d) Im(ad H) and complement + (n ∩ Ker ad H) are k-stable.
    let im_cols: Vec<DVector<f64>> = (0..alg.dim())
        .map(|j| ad_h.column(j).into_owned())
        .collect();
    let n1 = linalg::column_space(&im_cols, tol.rank);
    let nil_mat = nil.matrix();
    let n0: Vec<DVector<f64>> = linalg::nullspace(&(&ad_h * &nil_mat), tol.rank)
        .into_iter()
        .map(|alpha| &nil_mat * alpha)
        .collect();
    let n0 = linalg::column_space(&n0, tol.rank);
    let mut a_plus_n0 = complement.clone();
    a_plus_n0.extend(n0);
    let a_plus_n0 = linalg::column_space(&a_plus_n0, tol.rank);
    let mut stable = true;
    for e in &kbasis.matrices {
        for v in &n1 {
            if !linalg::subspace_contained(std::slice::from_ref(&(e * v)), &n1, tol.rank * 1e3) {
                stable = false;
            }
        }
        for v in &a_plus_n0 {
            if !linalg::subspace_contained(
                std::slice::from_ref(&(e * v)),
                &a_plus_n0,
                tol.rank * 1e3,
            ) {
                stable = false;
            }
        }
    }
    let skew_stable_splitting = stable;

    let all_pass = normal_modification
        && mean_curvature_kernel_contained
        && skew_derivations_annihilate_complement
        && skew_stable_splitting;
    Ok(ModificationStructureReport {
        normal_modification,
        mean_curvature_kernel_contained,
        skew_derivations_annihilate_complement,
        skew_stable_splitting,
        all_pass,
    })
}

/// Draw a random modification map of `source` with every validity condition
/// enforced by construction.
///
/// Generators are rotations in single invariant planes of a maximal abelian
/// subalgebra of k; each generator t_a is attached to a direction v_a drawn
/// Q-orthogonal to the commutator subalgebra and to every generator plane.
/// That orthogonality gives t_a(v_b) = 0, which is exactly what keeps the
/// modified bracket inside Ker phi (conditions (i) and (ii) alone do not).
/// Roughly a quarter of the draws are the zero map, the criterion-true case
/// on nilpotent sources.
pub fn random_modification(
    source: &MetricLieAlgebra,
    seed: u64,
    tol: &Tolerances,
) -> ModificationMap {
    let alg = source.algebra();
    let n = alg.dim();
    let kbasis = skew_derivations(source, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if kbasis.dim() == 0 || rng.gen_bool(0.25) {
        return ModificationMap::zero(source.clone());
    }
    let torus = maximal_abelian_in(&kbasis, &mut rng, tol);
    let planes = torus_plane_rotations(&torus, &mut rng, tol);
    if planes.is_empty() {
        return ModificationMap::zero(source.clone());
    }

    let n_gens = if planes.len() >= 2 && rng.gen_bool(0.4) { 2 } else { 1 };
    let mut chosen: Vec<usize> = Vec::new();
    while chosen.len() < n_gens {
        let k = rng.gen_range(0..planes.len());
        if !chosen.contains(&k) {
            chosen.push(k);
        }
    }
    let generators: Vec<DMatrix<f64>> = chosen
        .iter()
        .map(|&k| {
            let scale = loop {
                let s = rng.gen_range(-1.5_f64..1.5);
                if s.abs() > 0.2 {
                    break s;
                }
            };
            &planes[k] * scale
        })
        .collect();

    // Blocked directions: the commutator subalgebra plus every generator
    // plane (as the image of the plane rotation).
    let derived = alg.derived_subalgebra(tol);
    let mut blocked = derived.vectors.clone();
    for g in &generators {
        for j in 0..n {
            let col = g.column(j).into_owned();
            if linalg::max_abs_vec(&col) > 1e-12 {
                blocked.push(col);
            }
        }
    }
    let blocked = linalg::column_space(&blocked, tol.rank);
    let admissible = source.orthogonal_complement(&blocked, tol.rank);
    if admissible.len() < generators.len() {
        return ModificationMap::zero(source.clone());
    }

    // Q-orthonormal random directions inside the admissible space.
    let mut directions: Vec<DVector<f64>> = Vec::new();
    for _ in 0..generators.len() {
        let mut v = DVector::zeros(n);
        for b in &admissible {
            v += b * rng.gen_range(-1.0_f64..1.0);
        }
        for u in &directions {
            let p = source.inner(u, &v);
            v -= u * p;
        }
        let norm = source.inner(&v, &v).sqrt();
        if norm < 1e-6 {
            return ModificationMap::zero(source.clone());
        }
        directions.push(v / norm);
    }

    // phi(x) = sum_a <x, v_a> t_a; SVD dust in the directions and rotations
    // would otherwise seed round-off brackets in the modified algebra.
    let mut images = vec![DMatrix::zeros(n, n); n];
    for (t, v) in generators.iter().zip(directions.iter()) {
        let qv = source.gram() * v;
        for i in 0..n {
            if qv[i].abs() > 1e-12 {
                images[i] += t * qv[i];
            }
        }
    }
    let images = images
        .iter()
        .map(|m| linalg::clean_dust(m, 1e-12))
        .collect();
    let phi = ModificationMap {
        source: source.clone(),
        images,
    };
    if condition_report(&phi, tol).all_pass {
        phi
    } else {
        ModificationMap::zero(source.clone())
    }
}

/// Split a commuting family of skew operators into rotations of its joint
/// invariant 2-planes. A generic element g of the family decomposes the
/// space through the eigenspaces of g^2; each 2-dimensional eigenspace with
/// negative eigenvalue carries the rank-2 rotation obtained by restricting
/// g there. Only rotations that still lie in the span of the family are
/// returned.
fn torus_plane_rotations(
    torus: &[DMatrix<f64>],
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<DMatrix<f64>> {
    if torus.is_empty() {
        return Vec::new();
    }
    let n = torus[0].nrows();
    let mut generic = DMatrix::zeros(n, n);
    for t in torus {
        generic += t * rng.gen_range(0.5_f64..1.5);
    }
    if linalg::max_abs(&generic) < 1e-12 {
        return Vec::new();
    }
    let g2 = &generic * &generic;
    let se = nalgebra::SymmetricEigen::new(g2.clone());
    let scale = linalg::max_abs(&g2).max(1e-12);
    // cluster negative eigenvalues
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let ev = se.eigenvalues[i];
        if ev < -1e-8 * scale {
            match clusters
                .iter_mut()
                .find(|(c, _)| (c - ev).abs() <= 1e-6 * scale)
            {
                Some((_, idx)) => idx.push(i),
                None => clusters.push((ev, vec![i])),
            }
        }
    }
    let mut rotations = Vec::new();
    for (ev, idx) in clusters {
        if idx.len() != 2 {
            continue; // degenerate angle; skip rather than mix planes
        }
        let theta = (-ev).sqrt();
        let u1 = se.eigenvectors.column(idx[0]).into_owned();
        let u2 = se.eigenvectors.column(idx[1]).into_owned();
        // restriction of g to the plane, extended by zero
        let proj = &u1 * u1.transpose() + &u2 * u2.transpose();
        let j = linalg::clean_dust(&((&proj * &generic * &proj) / theta), 1e-12);
        // keep only rotations inside the torus span
        let basis = DerivationBasis {
            matrices: torus.to_vec(),
        };
        if projection_residual_matrix(&j, &basis, tol.rank) < 1e-8 {
            rotations.push(j);
        }
    }
    rotations
}

/// A maximal abelian subalgebra of the compact algebra spanned by `basis`:
/// the centralizer of a generic element.
fn maximal_abelian_in(
    basis: &DerivationBasis,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Vec<DMatrix<f64>> {
    let k = basis.dim();
    if k == 0 {
        return Vec::new();
    }
    let n = basis.matrices[0].nrows();
    for _ in 0..20 {
        let mut generic = DMatrix::zeros(n, n);
        for m in &basis.matrices {
            generic += m * rng.gen_range(-1.0_f64..1.0);
        }
        // centralizer inside span(basis): coefficients x with
        // [sum x_i E_i, generic] = 0.
        let a = DMatrix::from_fn(n * n, k, |r, c| {
            let comm = &basis.matrices[c] * &generic - &generic * &basis.matrices[c];
            comm[(r / n, r % n)]
        });
        let coeffs = linalg::nullspace(&a, tol.rank);
        let candidates: Vec<DMatrix<f64>> = coeffs
            .iter()
            .map(|x| {
                let mut m = DMatrix::zeros(n, n);
                for (i, e) in basis.matrices.iter().enumerate() {
                    m += e * x[i];
                }
                m
            })
            .collect();
        let mut abelian = true;
        for (i, a) in candidates.iter().enumerate() {
            for b in candidates.iter().skip(i + 1) {
                if linalg::max_abs(&(a * b - b * a)) > tol.comm {
                    abelian = false;
                }
            }
        }
        if abelian && !candidates.is_empty() {
            return candidates;
        }
    }
    // Fall back to a single generator, which is always abelian.
    vec![basis.matrices[0].clone()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{heisenberg3, heisenberg5};
    use crate::soliton::classify;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn h5_metric() -> MetricLieAlgebra {
        MetricLieAlgebra::orthonormal(heisenberg5())
    }

    /// The rotation phi(X1): X2 -> Y2, Y2 -> -X2, zero elsewhere.
    pub(crate) fn example_6_2_map() -> ModificationMap {
        let source = h5_metric();
        let mut img = DMatrix::zeros(5, 5);
        img[(3, 2)] = 1.0; // X2 -> Y2
        img[(2, 3)] = -1.0; // Y2 -> -X2
        let mut images = vec![DMatrix::zeros(5, 5); 5];
        images[0] = img;
        ModificationMap::new(source, images).unwrap()
    }

    #[test]
    fn zero_map_passes_and_rebuilds_source() {
        let t = tol();
        let phi = ModificationMap::zero(MetricLieAlgebra::orthonormal(heisenberg3()));
        let report = validate_modification(&phi, &t).unwrap();
        assert!(report.all_pass);
        let built = build_modification(&phi, &t).unwrap();
        // identical brackets and metric
        assert_eq!(
            built.modified.algebra().bracket_entries(),
            phi.source.algebra().bracket_entries()
        );
        assert_eq!(built.modified.gram(), phi.source.gram());
    }

    #[test]
    fn example_6_2_conditions_pass() {
        let t = tol();
        let phi = example_6_2_map();
        let report = validate_modification(&phi, &t).unwrap();
        assert!(report.all_pass, "{report:?}");
    }

    #[test]
    fn non_soliton_source_is_rejected() {
        let t = tol();
        let phi = ModificationMap::zero(MetricLieAlgebra::orthonormal(crate::lie::sl2()));
        assert!(matches!(
            validate_modification(&phi, &t),
            Err(Error::SourceNotSolvsoliton { .. })
        ));
    }

    #[test]
    fn phi_on_commutator_fails_condition_i() {
        let t = tol();
        let source = h5_metric();
        let mut img = DMatrix::zeros(5, 5);
        img[(3, 2)] = 1.0;
        img[(2, 3)] = -1.0;
        let mut images = vec![DMatrix::zeros(5, 5); 5];
        images[4] = img; // phi(Z) != 0 but Z lies in [s, s]
        let phi = ModificationMap::new(source, images).unwrap();
        let report = validate_modification(&phi, &t).unwrap();
        assert!(!report.kills_commutator);
        assert!(!report.all_pass);
        assert!(matches!(
            build_modification(&phi, &t),
            Err(Error::ConditionsViolated { .. })
        ));
    }

    #[test]
    fn example_6_2_build_and_structure() {
        let t = tol();
        let built = build_modification(&example_6_2_map(), &t).unwrap();
        let diag = built.modified.algebra().validate(&t);
        assert!(diag.jacobi_ok && diag.solvable && !diag.nilpotent);
        let nil = built.modified.algebra().nilradical(&t).unwrap();
        assert_eq!(nil.dim(), 4);

        // Ricci spectra of source and modification agree (isometry witness).
        let (ric_src, _) = built.provenance.source.ricci_frame();
        let (ric_mod, _) = built.modified.ricci_frame();
        let mut s1: Vec<f64> = nalgebra::SymmetricEigen::new(ric_src)
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        let mut s2: Vec<f64> = nalgebra::SymmetricEigen::new(ric_mod)
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        s1.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s2.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in s1.iter().zip(s2.iter()) {
            assert!((a - b).abs() < 1e-9);
        }

        // Not algebraic relative to the new Lie structure.
        let v = classify(&built.modified, &t);
        assert_eq!(v.class, SolitonClass::None);
        assert!(v.stages.algebraic > 0.01);
    }

    #[test]
    fn example_6_2_criterion_all_false_and_consistent() {
        let t = tol();
        let built = build_modification(&example_6_2_map(), &t).unwrap();
        let verdict = solvsoliton_criterion(&built, &t).unwrap();
        assert!(!verdict.nilradical_in_kernel);
        assert!(!verdict.complement_ad_reductive);
        assert!(!verdict.complement_abelian_reductive);
        assert!(verdict.verdicts_consistent, "{verdict:?}");
        assert!(!verdict.is_solvsoliton);
        // the single complement generator is not semisimple
        assert!(verdict.complement_reports.iter().any(|r| !r.semisimple));
    }

    #[test]
    fn zero_modification_criterion_true() {
        let t = tol();
        let built =
            build_modification(&ModificationMap::zero(h5_metric()), &t).unwrap();
        let verdict = solvsoliton_criterion(&built, &t).unwrap();
        assert!(verdict.is_solvsoliton);
        assert!(verdict.verdicts_consistent);
    }

    #[test]
    fn structure_tests_on_example_6_2() {
        let t = tol();
        let built = build_modification(&example_6_2_map(), &t).unwrap();
        let rep = modification_structure_tests(&built, &t).unwrap();
        assert!(rep.all_pass, "{rep:?}");
    }

    #[test]
    fn example_6_2_structure_check_fails_symmetry() {
        // The complement generator rotates one plane and shifts Y1 to Z:
        // its restriction to the nilradical cannot be symmetric.
        let t = tol();
        let built = build_modification(&example_6_2_map(), &t).unwrap();
        let v = classify(&built.modified, &t);
        let rep =
            crate::soliton::solvsoliton_structure_check(&built.modified, &v, &t).unwrap();
        assert!(!rep.ad_complement_symmetric);
        assert!(!rep.all_pass);
    }

    #[test]
    fn hyperbolic_plane_zero_modification_structure() {
        // [A, N] = N with phi = 0: H = A, Im(ad H) = span{N}, and the
        // kernel containment holds with room to spare.
        let t = tol();
        let source =
            MetricLieAlgebra::orthonormal(crate::lie::hyperbolic_plane_algebra());
        let built = build_modification(&ModificationMap::zero(source), &t).unwrap();
        let rep = modification_structure_tests(&built, &t).unwrap();
        assert!(rep.all_pass, "{rep:?}");
    }

    #[test]
    fn random_modifications_satisfy_conditions() {
        let t = tol();
        let source = h5_metric();
        let mut nontrivial = 0;
        for seed in 0..20 {
            let phi = random_modification(&source, seed, &t);
            let rep = condition_report(&phi, &t);
            assert!(rep.all_pass, "seed {seed}: {rep:?}");
            build_modification(&phi, &t).unwrap();
            if phi.images.iter().any(|m| linalg::max_abs(m) > 0.0) {
                nontrivial += 1;
            }
        }
        assert!(nontrivial >= 5, "only {nontrivial} nontrivial maps drawn");
    }
}
