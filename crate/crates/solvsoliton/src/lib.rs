//! Curvature and Ricci soliton detection for left-invariant metrics on Lie
//! groups given by structure constants.
//!
//! The crate computes the Ricci operator of a left-invariant metric, decides
//! whether the metric is flat, Einstein, an algebraic or a semi-algebraic
//! Ricci soliton, builds solvable Lie algebras admitting soliton metrics by
//! modifying solvsolitons, and integrates the homogeneous Ricci flow to
//! verify soliton self-similarity quantitatively.
//!
//! A guided tour with runnable examples lives in the `book/` directory of the
//! repository (`mdbook serve book`); its code snippets double as doc-tests.
//!
//! ```
//! use solvsoliton::{heisenberg3, MetricLieAlgebra};
//!
//! let h3 = MetricLieAlgebra::orthonormal(heisenberg3());
//! let report = h3.ricci_operator();
//! assert!((report.scalar - (-0.5)).abs() < 1e-12);
//! ```

pub mod curvature;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod io;
pub mod lie;
pub mod linalg;
pub mod metric;
pub mod modification;
pub mod soliton;
pub mod tolerances;

pub use curvature::{CurvatureReport, GradientCheck};
pub use error::{Error, Result};
pub use fixtures::{fixture, Fixture, FIXTURE_NAMES};
pub use flow::{
    ricci_flow, ricci_flow_sampled, soliton_selfsimilarity_check, FlowTermination, FlowTrace,
    SelfSimilarityReport, StepStats,
};
pub use io::{trace_to_csv, AlgebraDocument, PhiBlock, VerdictDocument};
pub use lie::{
    derivation_residual, heisenberg3, heisenberg5, hyperbolic_plane_algebra, sl2, Diagnostics,
    LieAlgebra, SubspaceBasis,
};
pub use metric::{Frame, MetricLieAlgebra};
pub use modification::{
    build_modification, modification_structure_tests, solvsoliton_criterion,
    validate_modification, ConditionReport, CriterionVerdict, ModificationMap, ModifiedAlgebra,
};
pub use soliton::{
    classify, derivation_algebra, pre_einstein_derivation, semi_algebraic_implies_algebraic_check,
    skew_derivations, soliton_residual_search, solvsoliton_structure_check, DerivationBasis,
    SolitonClass, SolitonVerdict, StageResiduals, StructureReport,
};
pub use tolerances::Tolerances;

// The book chapters double as doc-tests, so every snippet in the guide
// compiles and runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lie-algebras.md")]
    mod lie_algebras {}
    #[doc = include_str!("../../../book/src/curvature.md")]
    mod curvature {}
    #[doc = include_str!("../../../book/src/solitons.md")]
    mod solitons {}
    #[doc = include_str!("../../../book/src/modifications.md")]
    mod modifications {}
    #[doc = include_str!("../../../book/src/ricci-flow.md")]
    mod ricci_flow {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
