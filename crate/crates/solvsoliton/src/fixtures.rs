//! The fixture catalog: metric Lie algebras and modification maps used
//! throughout the tests, the CLI and the book.
//!
//! Every fixture uses exactly representable structure constants. The three
//! worked examples mirror the non-algebraic soliton constructions on
//! solvable groups: a product of an Einstein solvable factor with a flat
//! rotation factor, the five-dimensional Heisenberg algebra twisted by a
//! rotation of one symplectic plane, and a three-factor Heisenberg product
//! twisted by two commuting rotations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie::{heisenberg3, heisenberg5, hyperbolic_plane_algebra, sl2, LieAlgebra};
use crate::metric::MetricLieAlgebra;
use crate::modification::ModificationMap;
use crate::tolerances::Tolerances;

/// A catalog entry: either a metric algebra or a modification map carrying
/// its source metric algebra.
#[derive(Debug, Clone)]
pub enum Fixture {
    Metric(MetricLieAlgebra),
    Modification(ModificationMap),
}

impl Fixture {
    /// The metric algebra to run curvature on: the metric itself, or the
    /// modification's source.
    pub fn metric(&self) -> &MetricLieAlgebra {
        match self {
            Fixture::Metric(m) => m,
            Fixture::Modification(phi) => &phi.source,
        }
    }

    pub fn modification(&self) -> Option<&ModificationMap> {
        match self {
            Fixture::Metric(_) => None,
            Fixture::Modification(phi) => Some(phi),
        }
    }
}

/// Names of the catalog fixtures. `abelian_n` stands for any `abelian_<n>`.
pub const FIXTURE_NAMES: [&str; 9] = [
    "abelian_n",
    "h3",
    "h5",
    "h3xh3",
    "hyperbolic_plane",
    "sl2",
    "example_6_1",
    "example_6_2",
    "example_6_3",
];

/// Look up a fixture by name. `abelian_<n>` is parsed for any n >= 1.
pub fn fixture(name: &str) -> Result<Fixture> {
    if let Some(rest) = name.strip_prefix("abelian_") {
        if rest != "n" {
            let n: usize = rest.parse().map_err(|_| Error::UnknownFixture {
                name: name.to_string(),
            })?;
            if n == 0 {
                return Err(Error::UnknownFixture {
                    name: name.to_string(),
                });
            }
            return Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(
                LieAlgebra::abelian(n),
            )));
        }
    }
    match name {
        "abelian_n" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(
            LieAlgebra::abelian(3),
        ))),
        "h3" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(heisenberg3()))),
        "h5" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(heisenberg5()))),
        "h3xh3" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(
            heisenberg3_product(2),
        ))),
        "hyperbolic_plane" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(
            hyperbolic_plane_algebra(),
        ))),
        "sl2" => Ok(Fixture::Metric(MetricLieAlgebra::orthonormal(sl2()))),
        "example_6_1" => Ok(Fixture::Metric(example_6_1())),
        "example_6_2" => Ok(Fixture::Modification(example_6_2())),
        "example_6_3" => Ok(Fixture::Modification(example_6_3())),
        _ => Err(Error::UnknownFixture {
            name: name.to_string(),
        }),
    }
}

/// Direct sum of `copies` Heisenberg h3 factors, with per-factor names.
pub fn heisenberg3_product(copies: usize) -> LieAlgebra {
    let mut names = Vec::new();
    let mut entries = Vec::new();
    for f in 0..copies {
        let base = 3 * f;
        let idx = f + 1;
        names.push(format!("X{idx}"));
        names.push(format!("Y{idx}"));
        names.push(format!("Z{idx}"));
        entries.push((base, base + 1, base + 2, 1.0));
    }
    LieAlgebra::new(3 * copies, names, &entries).unwrap()
}

/// The rank-one Einstein extension of the h3 nilsoliton: ad A acts on
/// (X, Y, Z) by diag(1/2, 1/2, 1) and the basis is orthonormal. The Ricci
/// operator is -3/2 times the identity.
pub fn h3_soliton_extension() -> MetricLieAlgebra {
    let alg = LieAlgebra::new(
        4,
        vec!["A".into(), "X".into(), "Y".into(), "Z".into()],
        &[
            (0, 1, 1, 0.5),
            (0, 2, 2, 0.5),
            (0, 3, 3, 1.0),
            (1, 2, 3, 1.0),
        ],
    )
    .unwrap();
    MetricLieAlgebra::orthonormal(alg)
}

/// A solvable group carrying a Ricci soliton metric that is not algebraic
/// relative to its own Lie structure: the product of the Einstein extension
/// of h3 with the flat Euclidean motion factor t ⋉ R^2.
pub fn example_6_1() -> MetricLieAlgebra {
    let einstein = h3_soliton_extension();
    let tol = Tolerances::default();
    let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let motions = LieAlgebra::semidirect(
        &[rot],
        &["T".to_string()],
        &LieAlgebra::abelian(2),
        &tol,
    )
    .unwrap();
    let alg = LieAlgebra::direct_sum(einstein.algebra(), &motions);
    MetricLieAlgebra::orthonormal(alg)
}

/// The modification of the h5 nilsoliton by the rotation
/// phi(X1): X2 -> Y2, Y2 -> -X2, zero on X1, Y1, Z and on the other basis
/// vectors. The modified algebra is solvable with 4-dimensional nilradical.
pub fn example_6_2() -> ModificationMap {
    let source = MetricLieAlgebra::orthonormal(heisenberg5());
    let mut rot = DMatrix::zeros(5, 5);
    rot[(3, 2)] = 1.0; // X2 -> Y2
    rot[(2, 3)] = -1.0; // Y2 -> -X2
    let mut images = vec![DMatrix::zeros(5, 5); 5];
    images[0] = rot;
    ModificationMap::new(source, images).unwrap()
}

/// The modification of h3 x (h3 x h3) by two commuting rotations: the first
/// factor's X rotates the (X2, Y2) plane, its Y rotates the (X3, Y3) plane.
/// No complement of the nilradical of the result is abelian.
pub fn example_6_3() -> ModificationMap {
    let alg = heisenberg3_product(3);
    let source = MetricLieAlgebra::orthonormal(alg);
    let n = 9;
    // basis order: X1 Y1 Z1 | X2 Y2 Z2 | X3 Y3 Z3
    let mut rot2 = DMatrix::zeros(n, n);
    rot2[(4, 3)] = 1.0; // X2 -> Y2
    rot2[(3, 4)] = -1.0; // Y2 -> -X2
    let mut rot3 = DMatrix::zeros(n, n);
    rot3[(7, 6)] = 1.0; // X3 -> Y3
    rot3[(6, 7)] = -1.0; // Y3 -> -X3
    let mut images = vec![DMatrix::zeros(n, n); n];
    images[0] = rot2; // phi(X1)
    images[1] = rot3; // phi(Y1)
    ModificationMap::new(source, images).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::modification::{build_modification, solvsoliton_criterion, validate_modification};
    use crate::soliton::{classify, SolitonClass};
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn every_fixture_validates() {
        for name in FIXTURE_NAMES {
            let fx = fixture(name).unwrap();
            let diag = fx.metric().algebra().validate(&tol());
            assert!(diag.jacobi_ok, "{name}: Jacobi fails");
            if let Some(phi) = fx.modification() {
                let rep = validate_modification(phi, &tol()).unwrap();
                assert!(rep.all_pass, "{name}: modification conditions fail");
            }
        }
        assert!(fixture("abelian_5").is_ok());
        assert!(matches!(
            fixture("abelian_0"),
            Err(Error::UnknownFixture { .. })
        ));
        assert!(matches!(
            fixture("nonsense"),
            Err(Error::UnknownFixture { .. })
        ));
    }

    #[test]
    fn h3_soliton_extension_is_einstein() {
        let m = h3_soliton_extension();
        let rep = m.ricci_operator();
        let expected = DMatrix::identity(4, 4) * -1.5;
        assert!(
            linalg::max_abs(&(&rep.ricci - &expected)) < 1e-12,
            "Ric = {}",
            rep.ricci
        );
        let v = classify(&m, &tol());
        assert_eq!(v.class, SolitonClass::Einstein);
        assert_abs_diff_eq!(v.c, -1.5, epsilon = 1e-12);
    }

    #[test]
    fn example_6_1_is_a_nonalgebraic_soliton_story() {
        let t = tol();
        let m = example_6_1();
        let diag = m.algebra().validate(&t);
        assert!(diag.solvable && !diag.nilpotent);
        // Ricci splits: -3/2 on the Einstein factor, 0 on the flat factor.
        let (ric, _) = m.ricci_frame();
        let mut spec: Vec<f64> = nalgebra::SymmetricEigen::new(ric)
            .eigenvalues
            .iter()
            .cloned()
            .collect();
        spec.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in spec.iter().zip([-1.5, -1.5, -1.5, -1.5, 0.0, 0.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-10);
        }
        // soliton as a manifold, but not algebraically w.r.t. this group
        let v = classify(&m, &t);
        assert_eq!(v.class, SolitonClass::None);
        assert!(v.stages.algebraic > 0.01);
    }

    #[test]
    fn example_6_3_builds_with_nonabelian_complement() {
        let t = tol();
        let phi = example_6_3();
        let built = build_modification(&phi, &t).unwrap();
        let crit = solvsoliton_criterion(&built, &t).unwrap();
        assert!(!crit.nilradical_in_kernel);
        assert!(!crit.complement_abelian_reductive);
        assert!(crit.verdicts_consistent, "{crit:?}");

        // every complement pair brackets back into Z1 + nilpotent junk
        let alg = built.modified.algebra();
        let nil = alg.nilradical(&t).unwrap();
        assert_eq!(nil.dim(), 7);
        let complement = built.modified.orthogonal_complement(&nil.vectors, t.rank);
        assert_eq!(complement.len(), 2);
        let w = alg.bracket(&complement[0], &complement[1]).unwrap();
        assert!(
            w[2].abs() > 1e-9,
            "complement bracket should hit the Z1 direction: {w}"
        );
    }
}
