//! Property tests for the structural and curvature invariants.

use nalgebra::DMatrix;
use proptest::prelude::*;

use solvsoliton::fixtures::heisenberg3_product;
use solvsoliton::lie::{derivation_residual, LieAlgebra};
use solvsoliton::soliton::{classify, derivation_algebra, skew_derivations};
use solvsoliton::{heisenberg3, heisenberg5, hyperbolic_plane_algebra, linalg, sl2};
use solvsoliton::{MetricLieAlgebra, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn catalog_algebra(idx: usize) -> LieAlgebra {
    match idx % 6 {
        0 => LieAlgebra::abelian(3),
        1 => heisenberg3(),
        2 => heisenberg5(),
        3 => heisenberg3_product(2),
        4 => hyperbolic_plane_algebra(),
        _ => sl2(),
    }
}

/// Strategy: a symmetric positive definite matrix of the given size.
fn spd_strategy(n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0_f64..1.0, n * n).prop_map(move |vals| {
        let a = DMatrix::from_fn(n, n, |i, j| vals[i * n + j]);
        let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.75;
        let mut sym = g.clone();
        for i in 0..n {
            for j in 0..i {
                sym[(j, i)] = sym[(i, j)];
            }
        }
        sym
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    /// The bracket is bilinear and exactly antisymmetric on every catalog
    /// algebra.
    #[test]
    fn bracket_bilinear_antisymmetric(
        idx in 0usize..6,
        x in proptest::collection::vec(-2.0_f64..2.0, 6),
        y in proptest::collection::vec(-2.0_f64..2.0, 6),
        a in -2.0_f64..2.0,
    ) {
        let alg = catalog_algebra(idx);
        let n = alg.dim();
        let xv = nalgebra::DVector::from_fn(n, |i, _| x[i]);
        let yv = nalgebra::DVector::from_fn(n, |i, _| y[i]);
        let xy = alg.bracket(&xv, &yv).unwrap();
        let yx = alg.bracket(&yv, &xv).unwrap();
        prop_assert_eq!(&xy, &(-&yx));
        let scaled = alg.bracket(&(&xv * a), &yv).unwrap();
        prop_assert!(linalg::max_abs_vec(&(&scaled - &xy * a)) < 1e-12);
        let ad_xy = alg.ad(&xv).unwrap() * &yv;
        prop_assert!(linalg::max_abs_vec(&(ad_xy - xy)) < 1e-12);
    }

    /// Moment-map and Koszul Ricci agree for random metrics on random
    /// catalog algebras.
    #[test]
    fn ricci_oracle_agreement(idx in 0usize..6, seed in 0u64..1000) {
        let alg = catalog_algebra(idx);
        let n = alg.dim();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let g = &a * a.transpose() + DMatrix::identity(n, n) * 0.75;
        let mut q = g.clone();
        for i in 0..n { for j in 0..i { q[(j, i)] = q[(i, j)]; } }
        let m = MetricLieAlgebra::new(alg, q, &tol()).unwrap();
        let dev = linalg::max_abs(&(m.ricci_operator().ricci - m.ricci_via_koszul()));
        prop_assert!(dev < 1e-9, "oracle deviation {}", dev);
    }

    /// Homothety: Ric(lambda Q) = Ric(Q)/lambda and sc scales likewise.
    #[test]
    fn homothety_scaling(idx in 0usize..6, lambda in prop::sample::select(vec![2.0_f64, 10.0])) {
        let alg = catalog_algebra(idx);
        let m = MetricLieAlgebra::orthonormal(alg);
        let base = m.ricci_operator();
        let scaled = m.with_gram(m.gram() * lambda, &tol()).unwrap();
        let rep = scaled.ricci_operator();
        prop_assert!(linalg::max_abs(&(rep.ricci * lambda - &base.ricci)) < 1e-11);
        prop_assert!((rep.scalar * lambda - base.scalar).abs() < 1e-11);
    }

    /// Spectra of the Ricci operator are invariant under pulling the metric
    /// back along an automorphism (h3: rotations in the X,Y plane and
    /// diagonal rescalings are automorphisms).
    #[test]
    fn automorphism_isospectrality(theta in 0.0_f64..6.2, s in 0.5_f64..2.0, q in spd_strategy(3)) {
        let alg = heisenberg3();
        let (sin, cos) = theta.sin_cos();
        // rotation in (X, Y) followed by the scaling diag(s, s, s^2)
        let rot = DMatrix::from_row_slice(3, 3, &[cos, -sin, 0.0, sin, cos, 0.0, 0.0, 0.0, 1.0]);
        let scale = DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&[s, s, s * s]));
        let auto = &rot * &scale;
        let pulled = auto.transpose() * &q * &auto;
        let mut pulled_sym = pulled.clone();
        for i in 0..3 { for j in 0..i { pulled_sym[(j, i)] = pulled_sym[(i, j)]; } }

        let m1 = MetricLieAlgebra::new(alg.clone(), q, &tol()).unwrap();
        let m2 = MetricLieAlgebra::new(alg, pulled_sym, &tol()).unwrap();
        let spec = |m: &MetricLieAlgebra| {
            let (r, _) = m.ricci_frame();
            let mut s: Vec<f64> = nalgebra::SymmetricEigen::new(r).eigenvalues.iter().cloned().collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s
        };
        for (a, b) in spec(&m1).iter().zip(spec(&m2).iter()) {
            prop_assert!((a - b).abs() < 1e-9, "spectra differ: {} vs {}", a, b);
        }
    }

    /// Classification is scale-equivariant: same class, c/lambda, residual
    /// scaled by 1/lambda.
    #[test]
    fn classify_scale_equivariance(idx in 0usize..6) {
        let lambda = 4.0;
        let alg = catalog_algebra(idx);
        let m = MetricLieAlgebra::orthonormal(alg);
        let base = classify(&m, &tol());
        let scaled = m.with_gram(m.gram() * lambda, &tol()).unwrap();
        let v = classify(&scaled, &tol());
        prop_assert_eq!(v.class, base.class);
        prop_assert!((v.c - base.c / lambda).abs() < 1e-10);
        prop_assert!((v.residual - base.residual / lambda).abs() < 1e-9);
    }

    /// Every derivation-basis matrix satisfies Leibniz; every skew one is
    /// skew w.r.t. the metric.
    #[test]
    fn derivation_bases_are_derivations(idx in 0usize..6, q in spd_strategy(6)) {
        let alg = catalog_algebra(idx);
        let n = alg.dim();
        let qn = q.view((0, 0), (n, n)).into_owned();
        let mut qs = qn.clone();
        for i in 0..n { for j in 0..i { qs[(j, i)] = qs[(i, j)]; } }
        let m = MetricLieAlgebra::new(alg.clone(), qs, &tol()).unwrap();
        for d in derivation_algebra(&alg, &tol()).matrices {
            prop_assert!(derivation_residual(&alg, &d).unwrap() < 1e-9);
        }
        for d in skew_derivations(&m, &tol()).matrices {
            prop_assert!(derivation_residual(&alg, &d).unwrap() < 1e-9);
            let skew = m.gram() * &d + d.transpose() * m.gram();
            prop_assert!(linalg::max_abs(&skew) < 1e-9);
        }
    }

    /// Constructors keep the Jacobi identity: direct sums and semidirect
    /// products of valid pieces validate.
    #[test]
    fn constructors_preserve_jacobi(
        ia in 0usize..6,
        ib in 0usize..6,
        angle in 0.1_f64..2.0,
    ) {
        let t = tol();
        let a = catalog_algebra(ia);
        let b = catalog_algebra(ib);
        let sum = LieAlgebra::direct_sum(&a, &b);
        let diag = sum.validate(&t);
        prop_assert!(diag.jacobi_ok);

        // t ⋉ R^2 by a scaled rotation is always a valid semidirect product.
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -angle, angle, 0.0]);
        let sd = LieAlgebra::semidirect(&[rot], &["T".to_string()], &LieAlgebra::abelian(2), &t).unwrap();
        prop_assert!(sd.validate(&t).jacobi_ok);
        prop_assert!(sd.validate(&t).solvable);
    }

    /// The derived series is nested and every term closes under brackets
    /// with the previous one.
    #[test]
    fn derived_series_nested(idx in 0usize..6) {
        let t = tol();
        let alg = catalog_algebra(idx);
        let series = alg.derived_series(&t);
        for w in series.windows(2) {
            prop_assert!(linalg::subspace_contained(&w[1].vectors, &w[0].vectors, t.rank * 100.0));
            for u in &w[0].vectors {
                for v in &w[1].vectors {
                    let b = alg.bracket(u, v).unwrap();
                    prop_assert!(linalg::subspace_contained(
                        std::slice::from_ref(&b), &w[1].vectors, t.rank * 100.0,
                    ));
                }
            }
        }
    }

    /// Nilradical post-conditions: ideal, nilpotent series terminates,
    /// contains the commutator subalgebra.
    #[test]
    fn nilradical_invariants(idx in prop::sample::select(vec![0usize, 1, 2, 3, 4])) {
        let t = tol();
        let alg = catalog_algebra(idx);
        let nil = alg.nilradical(&t).unwrap();
        let derived = alg.derived_subalgebra(&t);
        prop_assert!(linalg::subspace_contained(&derived.vectors, &nil.vectors, t.rank));
        // [alg, N] ⊆ N
        for i in 0..alg.dim() {
            let e = nalgebra::DVector::from_fn(alg.dim(), |r, _| if r == i { 1.0 } else { 0.0 });
            for v in &nil.vectors {
                let w = alg.bracket(&e, v).unwrap();
                prop_assert!(linalg::subspace_contained(std::slice::from_ref(&w), &nil.vectors, t.rank * 100.0));
            }
        }
    }
}
