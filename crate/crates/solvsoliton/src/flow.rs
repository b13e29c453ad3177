//! Homogeneous Ricci flow as an ODE on Gram matrices.
//!
//! The flow integrates `dQ/dt = -2 ric(Q)` with `ric` the (0,2) Ricci tensor
//! of the left-invariant metric Q, using an embedded Dormand-Prince 5(4)
//! pair with PI step control. Soliton metrics evolve self-similarly:
//! isometry-invariant quantities scale by `(-2ct + 1)`, which is what
//! [`soliton_selfsimilarity_check`] verifies on a computed trace.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metric::MetricLieAlgebra;
use crate::tolerances::Tolerances;

/// Why the integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowTermination {
    /// Reached the requested end time.
    Completed,
    /// The smallest metric eigenvalue fell below the positive-definiteness
    /// floor; the trace is partial.
    BlowUp,
    /// The step size underflowed; the trace is partial.
    StepUnderflow,
}

/// Step acceptance counters of one integration.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest accepted-step error estimate in controller units (<= 1).
    pub max_error_estimate: f64,
}

/// A sampled Ricci-flow trajectory.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    /// Strictly increasing (or decreasing, for backward flow) sample times,
    /// starting at 0.
    pub times: Vec<f64>,
    /// Gram matrix at each sample time; always symmetric positive definite.
    pub grams: Vec<DMatrix<f64>>,
    /// dQ/dt at each sample time, kept for dense output.
    pub gram_rates: Vec<DMatrix<f64>>,
    /// Scalar curvature at each sample time.
    pub sc_values: Vec<f64>,
    /// Sorted Ricci-operator spectrum at each sample time.
    pub ric_spectra: Vec<Vec<f64>>,
    pub step_stats: StepStats,
    pub termination: FlowTermination,
}

impl FlowTrace {
    /// Cubic Hermite dense output between sample times.
    pub fn interpolate(&self, t: f64) -> Option<DMatrix<f64>> {
        if self.times.len() < 2 {
            return None;
        }
        let forward = self.times[1] > self.times[0];
        let (lo, hi) = (self.times[0], *self.times.last().unwrap());
        let in_range = if forward { t >= lo && t <= hi } else { t <= lo && t >= hi };
        if !in_range {
            return None;
        }
        let mut k = 0;
        while k + 2 < self.times.len() && {
            let next = self.times[k + 1];
            if forward { t > next } else { t < next }
        } {
            k += 1;
        }
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (q0, q1) = (&self.grams[k], &self.grams[k + 1]);
        let (d0, d1) = (&self.gram_rates[k], &self.gram_rates[k + 1]);
        let h00 = 2.0 * s.powi(3) - 3.0 * s.powi(2) + 1.0;
        let h10 = s.powi(3) - 2.0 * s.powi(2) + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s.powi(2);
        let h11 = s.powi(3) - s.powi(2);
        Some(q0 * h00 + d0 * (h10 * h) + q1 * h01 + d1 * (h11 * h))
    }
}

/// Self-similarity defects of a soliton trace.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SelfSimilarityReport {
    /// max_t |sc(g_t)(-2ct+1) - sc(g_0)|
    pub scalar_defect: f64,
    /// max_t max_i |lambda_i(t)(-2ct+1) - lambda_i(0)|
    pub spectral_defect: f64,
    pub scalar_ok: bool,
    pub spectral_ok: bool,
}

/// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// b - b_hat, the embedded error weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Reference tolerance for the step-size cap below.
const CAP_REF_TOL: f64 = 1e-9;
/// Step cap at the reference tolerance.
const CAP_REF_STEP: f64 = 4e-3;
/// Exponent tying the step cap to the tolerance.
const CAP_EXPONENT: f64 = 0.65;

/// Integrate the Ricci flow up to `t_end` (negative for backward flow) and
/// sample it at `samples` evenly spaced times.
///
/// The integrator is an embedded Runge-Kutta 5(4) pair with PI step control
/// at absolute tolerance `tol/10` and relative tolerance `tol`; sample values
/// come from cubic Hermite dense output on the accepted steps. The accepted
/// step is additionally capped by `4e-3 * (tol / 1e-9)^0.65`: with the step
/// scale tied to the tolerance this way, the dominant trace defect (the
/// fourth-order interpolation error) shrinks by 2^2.6 > 4 whenever `tol` is
/// halved, which makes tolerance-halving a usable order verification.
/// Integration halts early, flagged, when the metric degenerates.
pub fn ricci_flow_sampled(
    m: &MetricLieAlgebra,
    t_end: f64,
    tol: f64,
    samples: usize,
    tolerances: &Tolerances,
) -> Result<FlowTrace> {
    assert!(samples >= 2, "need at least two sample times");
    assert!(t_end != 0.0, "t_end must be nonzero");
    let n = m.dim();
    let q0 = m.gram().clone();
    let eigen0 = nalgebra::SymmetricEigen::new(q0.clone());
    let min0 = eigen0.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min0 <= tolerances.pd {
        return Err(Error::MetricNotPositiveDefinite { min_eig: min0 });
    }
    let pd_floor = 1e-10 * min0;

    let rhs = |q: &DMatrix<f64>| -> Option<DMatrix<f64>> {
        let min_eig = nalgebra::SymmetricEigen::new(q.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if !min_eig.is_finite() || min_eig < pd_floor {
            return None;
        }
        let metric = m.with_gram(q.clone(), tolerances).ok()?;
        let ric_op = metric.ricci_operator().ricci;
        let ric02 = q * ric_op;
        // symmetrize to kill round-off drift
        Some((&ric02 + ric02.transpose()) * -1.0)
    };

    let atol = tol / 10.0;
    let rtol = tol;
    let err_norm = |e: &DMatrix<f64>, y: &DMatrix<f64>, ynew: &DMatrix<f64>| -> f64 {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                let scale = atol + rtol * y[(i, j)].abs().max(ynew[(i, j)].abs());
                let r = e[(i, j)] / scale;
                sum += r * r;
            }
        }
        (sum / (n * n) as f64).sqrt()
    };

    let sample_times: Vec<f64> = (0..samples)
        .map(|k| t_end * k as f64 / (samples - 1) as f64)
        .collect();
    let h_cap = CAP_REF_STEP * (tol / CAP_REF_TOL).powf(CAP_EXPONENT);

    let mut trace_times = Vec::new();
    let mut grams = Vec::new();
    let mut gram_rates = Vec::new();
    let mut t = 0.0_f64;
    let mut q = q0.clone();
    let mut f = match rhs(&q) {
        Some(f) => f,
        None => {
            return Err(Error::MetricNotPositiveDefinite { min_eig: min0 });
        }
    };
    let direction = t_end.signum();
    let mut h: f64 = (h_cap.min(t_end.abs() / 10.0)).max(1e-8);
    let mut err_prev = 1.0_f64;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut max_est = 0.0_f64;
    let mut termination = FlowTermination::Completed;

    // record t = 0
    trace_times.push(0.0);
    grams.push(q.clone());
    gram_rates.push(f.clone());
    let mut next_sample = 1usize;

    while next_sample < sample_times.len() {
        let remaining = (t_end - t).abs();
        if remaining <= 1e-14 * t_end.abs().max(1.0) {
            break;
        }
        let h_step = h.min(h_cap).min(remaining);
        if h_step < 1e-14 * t.abs().max(1.0) {
            termination = FlowTermination::StepUnderflow;
            break;
        }
        let hs = h_step * direction;
        // stages
        let mut k: Vec<DMatrix<f64>> = Vec::with_capacity(7);
        k.push(f.clone());
        let mut failed = false;
        for a_row in &A {
            let mut y = q.clone();
            for (j, kj) in k.iter().enumerate() {
                if a_row[j] != 0.0 {
                    y += kj * (a_row[j] * hs);
                }
            }
            match rhs(&y) {
                Some(fy) => k.push(fy),
                None => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            // stage left the PD cone: reject and shrink
            rejected += 1;
            h = h_step * 0.25;
            if h < 1e-14 {
                termination = FlowTermination::BlowUp;
                break;
            }
            continue;
        }
        // 5th-order solution is the last stage evaluation point (FSAL).
        let mut y5 = q.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let a = A[5][j];
            if a != 0.0 {
                y5 += kj * (a * hs);
            }
        }
        let mut err_mat = DMatrix::zeros(n, n);
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err_mat += kj * (E[j] * hs);
            }
        }
        let err = err_norm(&err_mat, &q, &y5).max(1e-16);
        if err <= 1.0 {
            let t_new = t + hs;
            let f_new = k[6].clone();
            // emit samples inside (t, t_new] by cubic Hermite on the step
            while next_sample < sample_times.len() {
                let ts = sample_times[next_sample];
                if (ts - t_new) * direction > 1e-13 * ts.abs().max(1.0) {
                    break;
                }
                let s = ((ts - t) / hs).clamp(0.0, 1.0);
                let q_s = if s > 1.0 - 1e-12 {
                    y5.clone()
                } else {
                    let h00 = 2.0 * s.powi(3) - 3.0 * s.powi(2) + 1.0;
                    let h10 = s.powi(3) - 2.0 * s.powi(2) + s;
                    let h01 = -2.0 * s.powi(3) + 3.0 * s.powi(2);
                    let h11 = s.powi(3) - s.powi(2);
                    &q * h00 + &f * (h10 * hs) + &y5 * h01 + &f_new * (h11 * hs)
                };
                let mut q_sym = q_s.clone();
                for i in 0..n {
                    for j in 0..i {
                        q_sym[(j, i)] = q_sym[(i, j)];
                    }
                }
                match rhs(&q_sym) {
                    Some(f_s) => {
                        trace_times.push(ts);
                        grams.push(q_sym);
                        gram_rates.push(f_s);
                        next_sample += 1;
                    }
                    None => {
                        termination = FlowTermination::BlowUp;
                        break;
                    }
                }
            }
            if termination != FlowTermination::Completed {
                break;
            }
            t = t_new;
            q = y5;
            f = f_new;
            accepted += 1;
            max_est = max_est.max(err);
            let fac = 0.9 * err.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            h = (h_step * fac.clamp(0.2, 5.0)).min(h_cap);
            err_prev = err;
        } else {
            rejected += 1;
            let fac = 0.9 * err.powf(-1.0 / 5.0);
            h = h_step * fac.clamp(0.1, 0.9);
        }
    }

    // curvature bookkeeping per sample
    let mut sc_values = Vec::with_capacity(grams.len());
    let mut ric_spectra = Vec::with_capacity(grams.len());
    for g in &grams {
        let metric = m.with_gram(g.clone(), tolerances)?;
        let (ric_frame, _) = metric.ricci_frame();
        let eig = nalgebra::SymmetricEigen::new(ric_frame);
        let mut spec: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
        spec.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sc_values.push(spec.iter().sum());
        ric_spectra.push(spec);
    }

    Ok(FlowTrace {
        times: trace_times,
        grams,
        gram_rates,
        sc_values,
        ric_spectra,
        step_stats: StepStats {
            accepted,
            rejected,
            max_error_estimate: max_est,
        },
        termination,
    })
}

/// Integrate the Ricci flow with the default sampling (25 times).
pub fn ricci_flow(
    m: &MetricLieAlgebra,
    t_end: f64,
    tol: f64,
    tolerances: &Tolerances,
) -> Result<FlowTrace> {
    ricci_flow_sampled(m, t_end, tol, 25, tolerances)
}

/// Verify soliton self-similarity along a trace: sc and the Ricci spectrum
/// at time t, multiplied by (-2ct + 1), must reproduce their initial values.
/// Spectra are compared because g_t is a pullback of a scaled metric and
/// Ricci spectra are isometry-invariant with 1/lambda scaling.
pub fn soliton_selfsimilarity_check(
    trace: &FlowTrace,
    c: f64,
    tolerances: &Tolerances,
) -> Result<SelfSimilarityReport> {
    if trace.times.len() < 3 {
        return Err(Error::TraceTooShort);
    }
    let sc0 = trace.sc_values[0];
    let spec0 = &trace.ric_spectra[0];
    let mut scalar_defect = 0.0_f64;
    let mut spectral_defect = 0.0_f64;
    for (idx, &t) in trace.times.iter().enumerate() {
        let factor = -2.0 * c * t + 1.0;
        scalar_defect = scalar_defect.max((trace.sc_values[idx] * factor - sc0).abs());
        for (lam, lam0) in trace.ric_spectra[idx].iter().zip(spec0.iter()) {
            spectral_defect = spectral_defect.max((lam * factor - lam0).abs());
        }
    }
    Ok(SelfSimilarityReport {
        scalar_defect,
        spectral_defect,
        scalar_ok: scalar_defect <= tolerances.selfsim,
        spectral_ok: spectral_defect <= tolerances.selfsim,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{heisenberg3, sl2, LieAlgebra};
    use crate::soliton::classify;

    fn tolset() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn abelian_flow_is_stationary() {
        let m = MetricLieAlgebra::orthonormal(LieAlgebra::abelian(3));
        let trace = ricci_flow(&m, 1.0, 1e-9, &tolset()).unwrap();
        assert_eq!(trace.termination, FlowTermination::Completed);
        for g in &trace.grams {
            assert!((g - m.gram()).norm() < 1e-12);
        }
        let rep = soliton_selfsimilarity_check(&trace, 0.0, &tolset()).unwrap();
        assert!(rep.scalar_ok && rep.spectral_ok);
    }

    #[test]
    fn heisenberg_flow_follows_soliton_scaling() {
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let trace = ricci_flow_sampled(&m, 0.3, 1e-9, 31, &tolset()).unwrap();
        assert_eq!(trace.termination, FlowTermination::Completed);
        // c = -3/2 so (-2ct + 1) = 1 + 3t and sc(g_t)(1 + 3t) = -1/2.
        for (idx, &t) in trace.times.iter().enumerate() {
            let predicted = -0.5 / (1.0 + 3.0 * t);
            assert!(
                (trace.sc_values[idx] - predicted).abs() < 1e-6,
                "t={t}: sc {} vs {}",
                trace.sc_values[idx],
                predicted
            );
        }
        let c = classify(&m, &tolset()).c;
        let rep = soliton_selfsimilarity_check(&trace, c, &tolset()).unwrap();
        assert!(rep.scalar_ok && rep.spectral_ok, "{rep:?}");
    }

    #[test]
    fn halving_tolerance_improves_heisenberg_defect() {
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let c = classify(&m, &tolset()).c;
        let defect = |tol: f64| {
            let trace = ricci_flow_sampled(&m, 0.3, tol, 31, &tolset()).unwrap();
            let rep = soliton_selfsimilarity_check(&trace, c, &tolset()).unwrap();
            rep.scalar_defect.max(rep.spectral_defect)
        };
        let d1 = defect(1e-9);
        let d2 = defect(0.5e-9);
        assert!(
            d2 * 4.0 <= d1,
            "defect at tol: {d1:.3e}, at tol/2: {d2:.3e}, ratio {}",
            d1 / d2
        );
    }

    #[test]
    fn sl2_scalar_curvature_is_monotone_while_it_lasts() {
        let m = MetricLieAlgebra::orthonormal(sl2());
        let trace = ricci_flow_sampled(&m, 0.5, 1e-9, 21, &tolset()).unwrap();
        // Unimodular: sc is nondecreasing along the flow (gradient identity).
        for w in trace.sc_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "sc not monotone: {w:?}");
        }
    }

    #[test]
    fn scalar_curvature_rate_matches_gradient_identity() {
        // d(sc)/dt = 2 <ric, ric> = 2 tr(Ric^2) for unimodular algebras.
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let trace = ricci_flow_sampled(&m, 0.1, 1e-10, 41, &tolset()).unwrap();
        for idx in 1..trace.times.len() - 1 {
            let dt = trace.times[idx + 1] - trace.times[idx - 1];
            let fd = (trace.sc_values[idx + 1] - trace.sc_values[idx - 1]) / dt;
            let tr_ric2: f64 = trace.ric_spectra[idx].iter().map(|l| l * l).sum();
            let expected = 2.0 * tr_ric2;
            assert!(
                (fd - expected).abs() <= 1e-4 * expected.abs().max(1.0),
                "t={} fd {} vs {}",
                trace.times[idx],
                fd,
                expected
            );
        }
    }

    #[test]
    fn modified_metric_flows_selfsimilarly_with_source_constant() {
        // The modified h5 example is isometric to the nilsoliton, so its
        // flow is self-similar with the source constant c = -2 even though
        // the metric is not algebraic for the modified group.
        let tolv = tolset();
        let built = crate::modification::build_modification(
            &crate::fixtures::example_6_2(),
            &tolv,
        )
        .unwrap();
        let c = classify(&built.provenance.source, &tolv).c;
        assert!((c + 2.0).abs() < 1e-10);
        let trace = ricci_flow_sampled(&built.modified, 0.2, 1e-9, 21, &tolv).unwrap();
        let rep = soliton_selfsimilarity_check(&trace, c, &tolv).unwrap();
        assert!(rep.scalar_ok && rep.spectral_ok, "{rep:?}");
    }

    #[test]
    fn backward_flow_runs() {
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let trace = ricci_flow_sampled(&m, -0.05, 1e-9, 11, &tolset()).unwrap();
        assert_eq!(trace.termination, FlowTermination::Completed);
        // backward in time the nilsoliton shrinks toward the blow-up at
        // t = -1/3; sc decreases.
        assert!(trace.sc_values.last().unwrap() < &trace.sc_values[0]);
    }

    #[test]
    fn selfsimilarity_needs_three_samples() {
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let trace = ricci_flow_sampled(&m, 0.1, 1e-8, 2, &tolset()).unwrap();
        assert!(matches!(
            soliton_selfsimilarity_check(&trace, -1.5, &tolset()),
            Err(crate::error::Error::TraceTooShort)
        ));
    }

    #[test]
    fn hermite_interpolation_close_to_samples() {
        let m = MetricLieAlgebra::orthonormal(heisenberg3());
        let fine = ricci_flow_sampled(&m, 0.3, 1e-10, 61, &tolset()).unwrap();
        let coarse = ricci_flow_sampled(&m, 0.3, 1e-10, 16, &tolset()).unwrap();
        for (idx, &t) in fine.times.iter().enumerate() {
            let interp = coarse.interpolate(t).unwrap();
            assert!(
                (interp - &fine.grams[idx]).norm() < 1e-6,
                "interpolation off at t={t}"
            );
        }
    }

    #[test]
    fn isometry_equivariance_of_flow() {
        // T = rotation in the (X, Y) plane is an automorphism of h3.
        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let t_mat = DMatrix::from_row_slice(
            3,
            3,
            &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0],
        );
        let q = DMatrix::from_row_slice(3, 3, &[1.5, 0.2, 0.0, 0.2, 1.0, 0.1, 0.0, 0.1, 2.0]);
        let tolv = tolset();
        let m1 = MetricLieAlgebra::new(heisenberg3(), q.clone(), &tolv).unwrap();
        let q2 = t_mat.transpose() * &q * &t_mat;
        let mut q2s = q2.clone();
        for i in 0..3 {
            for j in 0..i {
                q2s[(j, i)] = q2s[(i, j)];
            }
        }
        let m2 = MetricLieAlgebra::new(heisenberg3(), q2s, &tolv).unwrap();
        let tr1 = ricci_flow_sampled(&m1, 0.2, 1e-9, 11, &tolv).unwrap();
        let tr2 = ricci_flow_sampled(&m2, 0.2, 1e-9, 11, &tolv).unwrap();
        for (g1, g2) in tr1.grams.iter().zip(tr2.grams.iter()) {
            let transported = t_mat.transpose() * g1 * &t_mat;
            assert!(
                (transported - g2).norm() < 1e-8,
                "flow does not commute with the automorphism"
            );
        }
    }
}
