//! Left-invariant metrics: a Lie algebra paired with an inner product.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::LieAlgebra;
use crate::tolerances::Tolerances;

/// A Lie algebra together with a symmetric positive-definite Gram matrix,
/// i.e. the value of a left-invariant metric at the identity.
#[derive(Debug, Clone)]
pub struct MetricLieAlgebra {
    algebra: LieAlgebra,
    gram: DMatrix<f64>,
}

impl MetricLieAlgebra {
    pub fn new(algebra: LieAlgebra, gram: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let n = algebra.dim();
        if gram.nrows() != n || gram.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gram.nrows(),
            });
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if gram[(i, j)] != gram[(j, i)] {
                    return Err(Error::MetricNotSymmetric);
                }
            }
        }
        let eigen = nalgebra::SymmetricEigen::new(gram.clone());
        let min_eig = eigen.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig <= tol.pd {
            return Err(Error::MetricNotPositiveDefinite { min_eig });
        }
        Ok(MetricLieAlgebra { algebra, gram })
    }

    /// The algebra with the identity Gram matrix.
    pub fn orthonormal(algebra: LieAlgebra) -> Self {
        let n = algebra.dim();
        MetricLieAlgebra {
            algebra,
            gram: DMatrix::identity(n, n),
        }
    }

    pub fn algebra(&self) -> &LieAlgebra {
        &self.algebra
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.gram * y)[(0, 0)]
    }

    /// Replace the Gram matrix, keeping the algebra.
    pub fn with_gram(&self, gram: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        MetricLieAlgebra::new(self.algebra.clone(), gram, tol)
    }

    /// The Q-adjoint of an operator: A^* = Q^-1 A^T Q.
    pub fn q_adjoint(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let q = &self.gram;
        let q_inv = q.clone().try_inverse().expect("Gram matrix is PD");
        q_inv * a.transpose() * q
    }

    /// Q-symmetric part S(A) = (A + A^*)/2.
    pub fn q_symmetric_part(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        (a + self.q_adjoint(a)) * 0.5
    }

    /// Q-orthogonal complement of the span of the given vectors.
    pub fn orthogonal_complement(
        &self,
        vectors: &[DVector<f64>],
        rank_tol: f64,
    ) -> Vec<DVector<f64>> {
        let n = self.dim();
        if vectors.is_empty() {
            return (0..n)
                .map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 }))
                .collect();
        }
        let m = DMatrix::from_fn(vectors.len(), n, |r, c| {
            (vectors[r].transpose() * &self.gram)[(0, c)]
        });
        crate::linalg::nullspace(&m, rank_tol)
    }

    /// Orthonormal frame data for this metric; see [`Frame`].
    pub fn frame(&self) -> Frame {
        let chol = nalgebra::Cholesky::new(self.gram.clone()).expect("Gram matrix is PD");
        let l = chol.l();
        let p_inv = l.transpose();
        let p = p_inv
            .clone()
            .try_inverse()
            .expect("triangular factor invertible");
        let n = self.dim();
        let frame_vectors: Vec<DVector<f64>> = (0..n).map(|j| p.column(j).into_owned()).collect();
        let mut entries = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = self
                    .algebra
                    .bracket(&frame_vectors[i], &frame_vectors[j])
                    .unwrap();
                let coeffs = &p_inv * w;
                for k in 0..n {
                    if coeffs[k] != 0.0 {
                        entries.push((i, j, k, coeffs[k]));
                    }
                }
            }
        }
        let frame_algebra = LieAlgebra::new(
            n,
            (0..n).map(|i| format!("f{i}")).collect(),
            &entries,
        )
        .expect("frame transform preserves antisymmetry");
        Frame {
            p,
            p_inv,
            algebra: frame_algebra,
        }
    }
}

/// A Q-orthonormal frame obtained from the Cholesky factorization Q = L L^T.
///
/// Columns of `p = L^-T` are the frame vectors in input coordinates. The
/// structure constants rewritten in the frame make every frame-dependent sum
/// a literal sum over basis indices; operators move back to the input basis
/// by conjugation with `p`.
#[derive(Debug, Clone)]
pub struct Frame {
    /// Frame vectors as columns (input coordinates).
    pub p: DMatrix<f64>,
    /// Inverse of `p`, equals L^T.
    pub p_inv: DMatrix<f64>,
    /// The same algebra expressed in the frame (where the metric is the
    /// identity).
    pub algebra: LieAlgebra,
}

impl Frame {
    /// Conjugate a frame operator back to the input basis.
    pub fn operator_to_input(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.p * a * &self.p_inv
    }

    /// Conjugate an input-basis operator into the frame.
    pub fn operator_to_frame(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        &self.p_inv * a * &self.p
    }

    /// Express an input-basis bilinear form in frame coordinates.
    pub fn bilinear_to_frame(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.p.transpose() * b * &self.p
    }

    pub fn vector_to_input(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.p * v
    }

    pub fn vector_to_frame(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.p_inv * v
    }
}
