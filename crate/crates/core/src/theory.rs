//! Numerical checks of the convergence lemma, the learning-rate/iteration
//! prescriptions, and the parameter-divergence bound.
//!
//! The statements bound expectations over sample randomness; they are
//! checked against multi-seed averages, and single-seed violations are
//! reported rather than asserted.

use serde::Serialize;

use crate::algorithms::SimTrace;
use crate::error::{Error, Result};
use crate::models::Task;

/// Constants feeding the bound evaluations.
#[derive(Clone, Copy, Debug)]
pub struct TheoryParams {
    /// Smoothness constant.
    pub l: f64,
    /// Gradient norm bound.
    pub m: f64,
    /// Success parameter.
    pub epsilon: f64,
    /// Global minimum (analytic, or best-observed surrogate).
    pub f_star: f64,
    pub n: usize,
    pub k: usize,
    pub eta: f64,
}

impl TheoryParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0) || !(self.m > 0.0) || !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(
                "L, M and epsilon must be positive".into(),
            ));
        }
        if self.k >= self.n {
            return Err(Error::GroupCountTooLarge {
                n: self.n,
                k: self.k,
            });
        }
        Ok(())
    }
}

/// Evaluates the three-term bound
/// 2(f(x̄_0) - f*)/(ηT) + 4η²L²M²(nk-k)²/(n-k)² + ηLM².
pub fn lemma_rhs(params: &TheoryParams, iterations: u64, f_x0: f64) -> Result<f64> {
    params.validate()?;
    if iterations < 1 {
        return Err(Error::InvalidConfig("iteration count must be >= 1".into()));
    }
    let (a, b1, b2) = lemma_rhs_terms(params, iterations, f_x0)?;
    Ok(a + b1 + b2)
}

/// The bound's individual terms (a, b1, b2).
pub fn lemma_rhs_terms(
    params: &TheoryParams,
    iterations: u64,
    f_x0: f64,
) -> Result<(f64, f64, f64)> {
    params.validate()?;
    let n = params.n as f64;
    let k = params.k as f64;
    let a = 2.0 * (f_x0 - params.f_star) / (params.eta * iterations as f64);
    let ratio = (n * k - k) / (n - k);
    let b1 = 4.0 * params.eta.powi(2) * params.l.powi(2) * params.m.powi(2) * ratio.powi(2);
    let b2 = params.eta * params.l * params.m.powi(2);
    Ok((a, b1, b2))
}

/// Theorem learning rate: min{ ε/(4LM²), √ε (n-k) / (4(nk-k)LM) }.
pub fn theorem_eta(epsilon: f64, l: f64, m: f64, n: usize, k: usize) -> Result<f64> {
    if !(epsilon > 0.0) || !(l > 0.0) || !(m > 0.0) {
        return Err(Error::InvalidConfig(
            "epsilon, L and M must be positive".into(),
        ));
    }
    if k >= n {
        return Err(Error::GroupCountTooLarge { n, k });
    }
    let n = n as f64;
    let k = k as f64;
    let arm1 = epsilon / (4.0 * l * m * m);
    let arm2 = epsilon.sqrt() * (n - k) / (4.0 * (n * k - k) * l * m);
    Ok(arm1.min(arm2))
}

/// Theorem iteration count: ceil(4 (f(x̄_0) - f*) / (η ε)).
pub fn theorem_min_iters(epsilon: f64, eta: f64, f_x0: f64, f_star: f64) -> Result<u64> {
    if !(epsilon > 0.0) || !(eta > 0.0) {
        return Err(Error::InvalidConfig("epsilon and eta must be positive".into()));
    }
    if f_x0 < f_star {
        return Err(Error::LossBelowOptimum { f_x0, f_star });
    }
    Ok((4.0 * (f_x0 - f_star) / (eta * epsilon)).ceil() as u64)
}

/// Parameter divergence bound from the proof: 2η(nk-k)M/(n-k).
pub fn divergence_bound(eta: f64, n: usize, k: usize, m: f64) -> Result<f64> {
    if k >= n {
        return Err(Error::GroupCountTooLarge { n, k });
    }
    let n = n as f64;
    let k = k as f64;
    Ok(2.0 * eta * (n * k - k) * m / (n - k))
}

/// Single-trace lemma evaluation.
#[derive(Clone, Debug, Serialize)]
pub struct LemmaReport {
    /// (1/T) Σ ||∇f(x̄_t)||² over the trace's iteration-start means.
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Seeds averaged into `lhs`. 1 means a single-run realization of an
    /// expectation; re-check with multi-seed averaging before concluding
    /// a violation.
    pub seeds: u32,
}

/// Evaluates both sides of the lemma for one recorded run.
pub fn check_lemma(
    trace: &SimTrace,
    task: &dyn Task,
    params: &TheoryParams,
) -> Result<LemmaReport> {
    params.validate()?;
    if trace.records.is_empty() {
        return Err(Error::InvalidConfig(
            "trace has no records; mean-parameter snapshots required".into(),
        ));
    }
    let iterations = trace.records.len() as u64;
    let lhs = trace
        .records
        .iter()
        .map(|r| {
            let g = task.full_grad(&r.mean_params);
            let n = g.norm();
            n * n
        })
        .sum::<f64>()
        / iterations as f64;
    let f_x0 = trace.records[0].loss;
    let rhs = lemma_rhs(params, iterations, f_x0)?;
    Ok(LemmaReport {
        lhs,
        rhs,
        holds: lhs <= rhs,
        seeds: 1,
    })
}

/// JSON theory report emitted by the CLI.
#[derive(Clone, Debug, Serialize)]
pub struct TheoryReport {
    pub lhs: f64,
    pub rhs_terms: [f64; 3],
    pub eta: f64,
    #[serde(rename = "T")]
    pub iterations: u64,
    pub holds: bool,
    pub seeds: u32,
    pub epsilon: f64,
    pub l_hat: f64,
    pub m_hat: f64,
    pub mean_divergence: f64,
    pub divergence_bound: f64,
    pub divergence_holds: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng64;

    fn params(n: usize, k: usize, eta: f64) -> TheoryParams {
        TheoryParams {
            l: 1.0,
            m: 2.0,
            epsilon: 0.05,
            f_star: 0.0,
            n,
            k,
            eta,
        }
    }

    #[test]
    fn rhs_blows_up_as_eta_vanishes() {
        let mut p = params(4, 2, 1e-2);
        let r1 = lemma_rhs(&p, 100, 1.0).unwrap();
        p.eta = 1e-6;
        let r2 = lemma_rhs(&p, 100, 1.0).unwrap();
        assert!(r2 > r1 * 100.0);
    }

    #[test]
    fn rhs_middle_term_at_k1() {
        // (nk-k)²/(n-k)² = 1 at k = 1, so b1 = 4η²L²M².
        let p = params(8, 1, 0.01);
        let (_, b1, _) = lemma_rhs_terms(&p, 10, 1.0).unwrap();
        let want = 4.0 * p.eta * p.eta * p.l * p.l * p.m * p.m;
        assert!((b1 - want).abs() <= 1e-15 * want);
    }

    #[test]
    fn k_at_or_above_n_rejected() {
        assert!(lemma_rhs(&params(4, 4, 0.01), 10, 1.0).is_err());
        assert!(theorem_eta(0.05, 1.0, 1.0, 4, 4).is_err());
        assert!(divergence_bound(0.01, 4, 5, 1.0).is_err());
    }

    #[test]
    fn formula_evaluators_match_hand_evaluation() {
        // Five random tuples against independently written expressions.
        let mut rng = Rng64::new(99);
        for _ in 0..5 {
            let l = 0.5 + rng.next_f64() * 2.0;
            let m = 0.5 + rng.next_f64() * 5.0;
            let eps = 0.01 + rng.next_f64() * 0.2;
            let eta = 1e-4 + rng.next_f64() * 0.05;
            let n = 2 + rng.next_bounded(30).unwrap() as usize;
            let k = 1 + rng.next_bounded(n as u64 - 1).unwrap() as usize;
            let t = 1 + rng.next_bounded(10_000).unwrap();
            let f0 = rng.next_f64() * 10.0;
            let fs = -rng.next_f64();
            let p = TheoryParams {
                l,
                m,
                epsilon: eps,
                f_star: fs,
                n,
                k,
                eta,
            };
            let (nf, kf) = (n as f64, k as f64);
            let want_rhs = 2.0 * (f0 - fs) / (eta * t as f64)
                + 4.0 * eta * eta * l * l * m * m * (nf * kf - kf) * (nf * kf - kf)
                    / ((nf - kf) * (nf - kf))
                + eta * l * m * m;
            let got = lemma_rhs(&p, t, f0).unwrap();
            assert!((got - want_rhs).abs() <= 1e-12 * want_rhs.abs());

            let want_eta =
                (eps / (4.0 * l * m * m)).min(eps.sqrt() * (nf - kf) / (4.0 * (nf * kf - kf) * l * m));
            assert!((theorem_eta(eps, l, m, n, k).unwrap() - want_eta).abs() <= 1e-12 * want_eta);

            let want_div = 2.0 * eta * (nf * kf - kf) * m / (nf - kf);
            assert!(
                (divergence_bound(eta, n, k, m).unwrap() - want_div).abs() <= 1e-12 * want_div
            );
        }
    }

    #[test]
    fn theorem_eta_large_m_picks_first_arm() {
        // eps = 0.01, L = 1, M = 100, n = 16, k = 4: both arms evaluated
        // directly; the min never exceeds either arm.
        let (eps, l, m, n, k) = (0.01, 1.0, 100.0, 16usize, 4usize);
        let eta = theorem_eta(eps, l, m, n, k).unwrap();
        let arm1 = eps / (4.0 * l * m * m);
        let arm2 = eps.sqrt() * (n as f64 - k as f64) / (4.0 * (n * k - k) as f64 * l * m);
        assert!(eta <= arm1 && eta <= arm2);
        assert_eq!(eta, arm1.min(arm2));
        assert!(arm1 < arm2, "first arm should win for large M");
    }

    #[test]
    fn theorem_eta_k1_simplifies() {
        let (eps, l, m) = (0.04, 2.0, 3.0);
        let eta = theorem_eta(eps, l, m, 8, 1).unwrap();
        let arm2 = eps.sqrt() / (4.0 * l * m);
        assert!((eta - (eps / (4.0 * l * m * m)).min(arm2)).abs() < 1e-18);
    }

    #[test]
    fn min_iters_edge_cases() {
        assert_eq!(theorem_min_iters(0.1, 0.01, 1.0, 1.0).unwrap(), 0);
        assert!(theorem_min_iters(0.1, 0.01, 0.5, 1.0).is_err());
        // Doubling epsilon halves the pre-ceiling prescription.
        let t1: f64 = 4.0 * (2.0 - 0.0) / (0.01 * 0.05);
        assert_eq!(
            theorem_min_iters(0.05, 0.01, 2.0, 0.0).unwrap(),
            t1.ceil() as u64
        );
        assert_eq!(
            theorem_min_iters(0.10, 0.01, 2.0, 0.0).unwrap(),
            (t1 / 2.0).ceil() as u64
        );
    }

    #[test]
    fn divergence_bound_edges() {
        // k = 1: 2η(n-1)M/(n-1) = 2ηM.
        let b = divergence_bound(0.01, 8, 1, 3.0).unwrap();
        assert!((b - 2.0 * 0.01 * 3.0).abs() < 1e-15);
        assert_eq!(divergence_bound(0.0, 8, 2, 3.0).unwrap(), 0.0);
    }
}
