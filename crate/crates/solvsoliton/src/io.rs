//! JSON document formats: algebra files in, verdict reports out.
//!
//! An algebra document carries the dimension, basis names, the sparse
//! bracket list (only i < j entries; antisymmetry is implied), an optional
//! metric (identity when absent) and an optional modification block. The
//! modification block serializes its skew-derivation basis alongside the
//! per-basis-vector coefficient lists so files are self-contained.
//!
//! Verdict documents embed the input digest, all residuals and the
//! tolerances used, so stored verdicts are reproducible artifacts.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::metric::MetricLieAlgebra;
use crate::modification::ModificationMap;
use crate::soliton::{skew_derivations, SolitonVerdict, StageResiduals};
use crate::tolerances::Tolerances;

pub const FORMAT_VERSION: u32 = 1;

/// One bracket relation [e_i, e_j] = sum_k coeffs[k] e_k with i < j.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    /// Keys are basis indices rendered as strings (JSON object keys).
    pub coeffs: BTreeMap<String, f64>,
}

/// Serialized modification map over a serialized skew-derivation basis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhiBlock {
    /// Basis of the skew derivations, row-major dim x dim matrices. The
    /// ordering is part of the record: `images` refers to it by position.
    pub kbasis: Vec<Vec<f64>>,
    /// One coefficient list per basis vector of the algebra.
    pub images: Vec<Vec<f64>>,
}

/// The on-disk algebra format.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AlgebraDocument {
    pub format_version: u32,
    pub dim: usize,
    pub basis: Vec<String>,
    pub brackets: Vec<BracketEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiBlock>,
}

impl AlgebraDocument {
    /// Parse a document from JSON text.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: AlgebraDocument = serde_json::from_str(text).map_err(|e| Error::ParseError {
            detail: format!("{e}"),
        })?;
        doc.check_schema()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }

    fn check_schema(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::SchemaError {
                detail: format!(
                    "format_version {} unsupported (expected {FORMAT_VERSION})",
                    self.format_version
                ),
            });
        }
        if self.dim == 0 {
            return Err(Error::SchemaError {
                detail: "dim must be positive".into(),
            });
        }
        if self.basis.len() != self.dim {
            return Err(Error::SchemaError {
                detail: format!(
                    "basis has {} names for dimension {}",
                    self.basis.len(),
                    self.dim
                ),
            });
        }
        for b in &self.brackets {
            if b.i >= b.j {
                return Err(Error::SchemaError {
                    detail: format!("bracket entry must have i < j, got ({}, {})", b.i, b.j),
                });
            }
            if b.j >= self.dim {
                return Err(Error::SchemaError {
                    detail: format!("bracket index {} out of range", b.j),
                });
            }
            for k in b.coeffs.keys() {
                let idx: usize = k.parse().map_err(|_| Error::SchemaError {
                    detail: format!("bracket coefficient key '{k}' is not an index"),
                })?;
                if idx >= self.dim {
                    return Err(Error::SchemaError {
                        detail: format!("bracket coefficient index {idx} out of range"),
                    });
                }
            }
        }
        if let Some(metric) = &self.metric {
            if metric.len() != self.dim || metric.iter().any(|row| row.len() != self.dim) {
                return Err(Error::SchemaError {
                    detail: "metric must be a dim x dim array".into(),
                });
            }
            for (i, row) in metric.iter().enumerate() {
                for (j, value) in row.iter().enumerate().skip(i + 1) {
                    if *value != metric[j][i] {
                        return Err(Error::SchemaError {
                            detail: format!("metric not symmetric at ({i},{j})"),
                        });
                    }
                }
            }
        }
        if let Some(phi) = &self.phi {
            if phi.images.len() != self.dim {
                return Err(Error::SchemaError {
                    detail: "phi.images must have one entry per basis vector".into(),
                });
            }
            for m in &phi.kbasis {
                if m.len() != self.dim * self.dim {
                    return Err(Error::SchemaError {
                        detail: "phi.kbasis matrices must be dim*dim row-major".into(),
                    });
                }
            }
            for img in &phi.images {
                if img.len() != phi.kbasis.len() {
                    return Err(Error::SchemaError {
                        detail: "phi.images coefficient lists must match kbasis length".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Instantiate the metric Lie algebra this document describes.
    pub fn to_metric_algebra(&self, tol: &Tolerances) -> Result<MetricLieAlgebra> {
        let mut entries = Vec::new();
        for b in &self.brackets {
            for (k, c) in &b.coeffs {
                let idx: usize = k.parse().expect("checked by schema");
                entries.push((b.i, b.j, idx, *c));
            }
        }
        let alg = LieAlgebra::new(self.dim, self.basis.clone(), &entries)?;
        let gram = match &self.metric {
            Some(rows) => DMatrix::from_fn(self.dim, self.dim, |i, j| rows[i][j]),
            None => DMatrix::identity(self.dim, self.dim),
        };
        MetricLieAlgebra::new(alg, gram, tol)
    }

    /// Instantiate the embedded modification map, if any.
    pub fn to_modification(&self, tol: &Tolerances) -> Result<Option<ModificationMap>> {
        let phi = match &self.phi {
            Some(p) => p,
            None => return Ok(None),
        };
        let source = self.to_metric_algebra(tol)?;
        let n = self.dim;
        let kmats: Vec<DMatrix<f64>> = phi
            .kbasis
            .iter()
            .map(|flat| DMatrix::from_fn(n, n, |r, c| flat[r * n + c]))
            .collect();
        let images = phi
            .images
            .iter()
            .map(|coeffs| {
                let mut m = DMatrix::zeros(n, n);
                for (k, c) in coeffs.iter().enumerate() {
                    m += &kmats[k] * *c;
                }
                m
            })
            .collect();
        Ok(Some(ModificationMap::new(source, images)?))
    }

    /// Build the document describing a metric algebra.
    pub fn from_metric_algebra(m: &MetricLieAlgebra) -> Self {
        let alg = m.algebra();
        let n = alg.dim();
        let brackets = alg
            .bracket_entries()
            .iter()
            .map(|((i, j), coeffs)| BracketEntry {
                i: *i,
                j: *j,
                coeffs: coeffs
                    .iter()
                    .map(|(k, c)| (k.to_string(), *c))
                    .collect(),
            })
            .collect();
        let identity = m.gram() == &DMatrix::identity(n, n);
        AlgebraDocument {
            format_version: FORMAT_VERSION,
            dim: n,
            basis: alg.basis_names().to_vec(),
            brackets,
            metric: if identity {
                None
            } else {
                Some(
                    (0..n)
                        .map(|i| (0..n).map(|j| m.gram()[(i, j)]).collect())
                        .collect(),
                )
            },
            phi: None,
        }
    }

    /// Build the document for a modification map: the source algebra plus the
    /// phi block over a freshly computed skew-derivation basis.
    pub fn from_modification(phi: &ModificationMap, tol: &Tolerances) -> Result<Self> {
        let mut doc = AlgebraDocument::from_metric_algebra(&phi.source);
        let kbasis = skew_derivations(&phi.source, tol);
        let n = phi.source.dim();
        let flat_basis: Vec<Vec<f64>> = kbasis
            .matrices
            .iter()
            .map(|m| {
                (0..n * n)
                    .map(|idx| m[(idx / n, idx % n)])
                    .collect::<Vec<f64>>()
            })
            .collect();
        // express each image in the basis by least squares; reject residuals
        let mut images = Vec::with_capacity(n);
        for img in &phi.images {
            let a = DMatrix::from_fn(n * n, kbasis.matrices.len(), |r, c| {
                kbasis.matrices[c][(r / n, r % n)]
            });
            let b = DVector::from_fn(n * n, |r, _| img[(r / n, r % n)]);
            let x = crate::linalg::lstsq_min_norm(&a, &b, tol.rank);
            let recon = &a * &x;
            if crate::linalg::max_abs_vec(&(recon - &b)) > 1e-9 {
                return Err(Error::ConditionsViolated {
                    detail: "phi image does not lie in the skew-derivation span".into(),
                });
            }
            images.push(x.iter().cloned().collect());
        }
        doc.phi = Some(PhiBlock {
            kbasis: flat_basis,
            images,
        });
        Ok(doc)
    }

    /// SHA-256 digest of the canonical (compact) JSON encoding.
    pub fn digest(&self) -> String {
        let compact = serde_json::to_string(self).expect("document serializes");
        let mut hasher = Sha256::new();
        hasher.update(compact.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Machine-readable soliton verdict, embedding everything needed to
/// reproduce it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerdictDocument {
    pub format_version: u32,
    pub tool_version: String,
    pub input_digest: String,
    pub class: String,
    pub c: f64,
    /// Winning derivation, row-major.
    pub derivation: Vec<f64>,
    pub residual: f64,
    pub residuals: StageResidualsDoc,
    /// Sorted Ricci spectrum of the input metric.
    pub ricci_spectrum: Vec<f64>,
    pub scalar_curvature: f64,
    /// Solvsoliton structure report, present when the algebra is solvable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure: Option<crate::soliton::StructureReport>,
    /// Solvsoliton criterion verdicts, present when the document carries a
    /// modification block.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub criterion: Option<crate::modification::CriterionVerdict>,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageResidualsDoc {
    pub flat: f64,
    pub einstein: f64,
    pub algebraic: f64,
    pub semi_algebraic: f64,
}

impl From<StageResiduals> for StageResidualsDoc {
    fn from(s: StageResiduals) -> Self {
        StageResidualsDoc {
            flat: s.flat,
            einstein: s.einstein,
            algebraic: s.algebraic,
            semi_algebraic: s.semi_algebraic,
        }
    }
}

impl VerdictDocument {
    pub fn new(
        doc: &AlgebraDocument,
        m: &MetricLieAlgebra,
        verdict: &SolitonVerdict,
        tol: &Tolerances,
    ) -> Self {
        let n = m.dim();
        let (ric_frame, _) = m.ricci_frame();
        let eig = nalgebra::SymmetricEigen::new(ric_frame);
        let mut spectrum: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        spectrum.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let structure = crate::soliton::solvsoliton_structure_check(m, verdict, tol).ok();
        let criterion = doc
            .to_modification(tol)
            .ok()
            .flatten()
            .and_then(|phi| crate::modification::build_modification(&phi, tol).ok())
            .and_then(|built| crate::modification::solvsoliton_criterion(&built, tol).ok());
        VerdictDocument {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            input_digest: doc.digest(),
            class: verdict.class.to_string(),
            c: verdict.c,
            derivation: (0..n * n)
                .map(|idx| verdict.derivation[(idx / n, idx % n)])
                .collect(),
            residual: verdict.residual,
            residuals: verdict.stages.into(),
            ricci_spectrum: spectrum,
            scalar_curvature: m.scalar_curvature(),
            structure,
            criterion,
            tolerances: *tol,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Write a flow trace as CSV: t, sc, eig_1..eig_n, q_00..q_nn (row-major).
pub fn trace_to_csv(trace: &crate::flow::FlowTrace) -> String {
    let n = trace.grams.first().map(|g| g.nrows()).unwrap_or(0);
    let mut out = String::new();
    out.push_str("t,sc");
    for i in 1..=n {
        out.push_str(&format!(",eig_{i}"));
    }
    for i in 0..n {
        for j in 0..n {
            out.push_str(&format!(",q_{i}{j}"));
        }
    }
    out.push('\n');
    for (idx, &t) in trace.times.iter().enumerate() {
        out.push_str(&format!("{t}"));
        out.push_str(&format!(",{}", trace.sc_values[idx]));
        for lam in &trace.ric_spectra[idx] {
            out.push_str(&format!(",{lam}"));
        }
        let g = &trace.grams[idx];
        for i in 0..n {
            for j in 0..n {
                out.push_str(&format!(",{}", g[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn round_trip_is_identity_on_documents() {
        for name in ["h3", "h5", "example_6_2", "example_6_3", "sl2"] {
            let fx = fixtures::fixture(name).unwrap();
            let doc = match fx.modification() {
                Some(phi) => AlgebraDocument::from_modification(phi, &tol()).unwrap(),
                None => AlgebraDocument::from_metric_algebra(fx.metric()),
            };
            let text = doc.to_json();
            let parsed = AlgebraDocument::from_json(&text).unwrap();
            assert_eq!(parsed, doc, "{name} does not round-trip");
            assert_eq!(parsed.digest(), doc.digest());
        }
    }

    #[test]
    fn parse_h3_document() {
        let text = r#"{
            "format_version": 1,
            "dim": 3,
            "basis": ["X", "Y", "Z"],
            "brackets": [{"i": 0, "j": 1, "coeffs": {"2": 1.0}}]
        }"#;
        let doc = AlgebraDocument::from_json(text).unwrap();
        let m = doc.to_metric_algebra(&tol()).unwrap();
        assert_eq!(m.dim(), 3);
        // metric omitted -> identity
        assert_eq!(m.gram(), &DMatrix::identity(3, 3));
    }

    #[test]
    fn schema_rejects_bad_orientation() {
        let text = r#"{
            "format_version": 1,
            "dim": 3,
            "basis": ["X", "Y", "Z"],
            "brackets": [{"i": 1, "j": 0, "coeffs": {"2": 1.0}}]
        }"#;
        assert!(matches!(
            AlgebraDocument::from_json(text),
            Err(Error::SchemaError { .. })
        ));
    }

    #[test]
    fn modification_round_trip_reproduces_images() {
        let phi = fixtures::example_6_2();
        let doc = AlgebraDocument::from_modification(&phi, &tol()).unwrap();
        let parsed = AlgebraDocument::from_json(&doc.to_json()).unwrap();
        let phi2 = parsed.to_modification(&tol()).unwrap().unwrap();
        for (a, b) in phi.images.iter().zip(phi2.images.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn verdict_document_round_trips() {
        let t = tol();
        let phi = fixtures::example_6_2();
        let doc = AlgebraDocument::from_modification(&phi, &t).unwrap();
        let m = doc.to_metric_algebra(&t).unwrap();
        let verdict = crate::soliton::classify(&m, &t);
        let vd = VerdictDocument::new(&doc, &m, &verdict, &t);
        assert!(vd.structure.is_some());
        assert!(vd.criterion.is_some());
        let text = vd.to_json();
        let parsed: VerdictDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::to_string(&parsed).unwrap(), serde_json::to_string(&vd).unwrap());
        assert_eq!(parsed.input_digest, vd.input_digest);
    }

    #[test]
    fn csv_has_expected_columns() {
        let m = fixtures::fixture("h3").unwrap().metric().clone();
        let trace = crate::flow::ricci_flow_sampled(&m, 0.1, 1e-8, 5, &tol()).unwrap();
        let csv = trace_to_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,sc,eig_1,eig_2,eig_3,q_00,q_01,q_02,q_10,q_11,q_12,q_20,q_21,q_22"
        );
        assert_eq!(lines.count(), 5);
    }
}
