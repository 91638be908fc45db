//! Douglas-Rachford splitting applied to `LCP(M, q, C)` without the embedding.
//!
//! Infeasibility shows up as divergence of `w^k`; the averaged successive
//! difference is normalized and handed to the certificate verifier.

use std::time::Instant;

use crate::engine::{
    kkt_satisfied, preflight, try_dual_certificate, try_primal_certificate, ResolventSolver,
    STALL_THRESHOLD,
};
use crate::error::{check_len, Result};
use crate::problem::{Certificate, KktCheck, LcpView, QcpProblem, Residuals, SolveResult, Status};
use crate::settings::{DeltaRule, Settings};
use crate::trace::{Engine, TraceRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct DirectState {
    pub w: Vec<f64>,
    pub u: Vec<f64>,
    pub u_tilde: Vec<f64>,
    /// `u − (2ũ − w)`; its `y` block is the slack `s`.
    pub v: Vec<f64>,
    /// Averaged `w^{k+1} − w^k`.
    pub delta_w: Vec<f64>,
    pub w0: Vec<f64>,
    pub iter: usize,
    pub fp_residual: f64,
}

pub struct DirectSolver<'a> {
    problem: &'a QcpProblem,
    lcp: LcpView<'a>,
    settings: Settings,
    linsys: ResolventSolver,
    state: DirectState,
    rhs: Vec<f64>,
}

impl<'a> DirectSolver<'a> {
    /// Starts from `w⁰ = 0`.
    pub fn new(problem: &'a QcpProblem, settings: &Settings) -> Result<Self> {
        let d = problem.n() + problem.m();
        Self::with_start(problem, settings, vec![0.0; d])
    }

    pub fn with_start(problem: &'a QcpProblem, settings: &Settings, w: Vec<f64>) -> Result<Self> {
        preflight(problem, settings)?;
        let lcp = problem.to_lcp();
        let d = lcp.dim();
        check_len("initial w", d, w.len())?;
        let linsys = ResolventSolver::new(problem, settings)?;
        Ok(Self {
            problem,
            lcp,
            settings: settings.clone(),
            linsys,
            state: DirectState {
                u: vec![0.0; d],
                u_tilde: vec![0.0; d],
                v: vec![0.0; d],
                delta_w: vec![0.0; d],
                w0: w.clone(),
                w,
                iter: 0,
                fp_residual: f64::INFINITY,
            },
            rhs: vec![0.0; d],
        })
    }

    pub fn state(&self) -> &DirectState {
        &self.state
    }

    /// `ũ = (I + M)⁻¹(w − q)`, `u = Π_C(2ũ − w)`, `w ← w + u − ũ`.
    pub fn step(&mut self) -> Result<()> {
        let k = self.state.iter + 1;
        let st = &mut self.state;
        for ((r, w), q) in self.rhs.iter_mut().zip(&st.w).zip(self.lcp.q()) {
            *r = w - q;
        }
        self.linsys.solve(&self.rhs, &mut st.u_tilde, k)?;
        for ((u, ut), w) in st.u.iter_mut().zip(&st.u_tilde).zip(&st.w) {
            *u = 2.0 * ut - w;
        }
        st.v.copy_from_slice(&st.u);
        self.lcp.project_c(&mut st.u);
        let mut fp = 0.0;
        let kf = k as f64;
        for i in 0..st.w.len() {
            st.v[i] = st.u[i] - st.v[i];
            let delta = st.u[i] - st.u_tilde[i];
            st.w[i] += delta;
            fp += delta * delta;
            st.delta_w[i] = match self.settings.delta_rule {
                DeltaRule::Smoothed => 0.5 * st.delta_w[i] + 0.5 * delta,
                DeltaRule::Cesaro => (st.w[i] - st.w0[i]) / kf,
            };
        }
        st.fp_residual = fp.sqrt();
        st.iter = k;
        Ok(())
    }

    /// KKT residuals of `(x, y, s) = (u_x, u_y, v_y)`.
    pub fn kkt_check(&self) -> KktCheck {
        let n = self.problem.n();
        let st = &self.state;
        KktCheck::evaluate(self.problem, &st.u[..n], &st.u[n..], &st.v[n..])
    }

    /// Certificate candidate from the averaged difference, if one verifies.
    pub fn detect_infeasibility(&self) -> Option<Certificate> {
        if self.state.iter < 2 {
            return None;
        }
        let n = self.problem.n();
        let eps = self.settings.eps_infeas;
        let delta = &self.state.delta_w;
        let mut y = delta[n..].to_vec();
        self.problem.cones.project_dual_in_place(&mut y);
        try_primal_certificate(self.problem, &y, eps)
            .or_else(|| try_dual_certificate(self.problem, &delta[..n], eps))
    }

    pub fn check_termination(&self) -> Option<(Status, KktCheck, Option<Certificate>)> {
        let check = self.kkt_check();
        if kkt_satisfied(&check, &self.settings) {
            return Some((Status::Solved, check, None));
        }
        let cert = self.detect_infeasibility()?;
        let status = match cert.kind {
            crate::problem::CertificateKind::PrimalInfeasible => Status::PrimalInfeasible,
            crate::problem::CertificateKind::DualInfeasible => Status::DualInfeasible,
        };
        Some((status, check, Some(cert)))
    }

    pub fn run(&mut self) -> Result<SolveResult> {
        let start = Instant::now();
        let interval = self.settings.check_interval;
        let mut trace = Vec::new();
        let mut status = Status::MaxIterations;
        let mut certificate = None;
        while self.state.iter < self.settings.max_iters {
            self.step()?;
            let last = self.state.iter == self.settings.max_iters;
            if self.state.iter.is_multiple_of(interval) || last {
                let verdict = self.check_termination();
                if self.settings.trace {
                    let res = verdict
                        .as_ref()
                        .map_or_else(|| self.kkt_check().residuals, |v| v.1.residuals);
                    trace.push(TraceRecord {
                        engine: Engine::Direct,
                        iteration: self.state.iter,
                        primal: res.primal,
                        dual: res.dual,
                        gap: res.gap,
                        tau: 1.0,
                        kappa: 0.0,
                        fp_residual: self.state.fp_residual,
                    });
                }
                if let Some((st, _, cert)) = verdict {
                    status = st;
                    certificate = cert;
                    break;
                }
            }
            if start.elapsed().as_secs_f64() > self.settings.time_limit_s {
                status = Status::TimeLimit;
                break;
            }
        }

        let n = self.problem.n();
        let st = &self.state;
        let stalled = !status.is_success() && st.fp_residual < STALL_THRESHOLD;
        let (x, y, s, residuals) = if certificate.is_some() {
            (None, None, None, Residuals::INFINITE)
        } else {
            (
                Some(st.u[..n].to_vec()),
                Some(st.u[n..].to_vec()),
                Some(st.v[n..].to_vec()),
                self.kkt_check().residuals,
            )
        };
        Ok(SolveResult {
            status,
            x,
            y,
            s,
            certificate,
            iterations: st.iter,
            residuals,
            solve_time_s: start.elapsed().as_secs_f64(),
            stalled,
            trace,
        })
    }
}

/// Solves a QCP with the direct engine from `w⁰ = 0`.
pub fn solve_direct(problem: &QcpProblem, settings: &Settings) -> Result<SolveResult> {
    DirectSolver::new(problem, settings)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{Cone, ConeSpec};
    use crate::engine::homogeneous::{self, HomogeneousSolver};
    use crate::linalg::SparseMatrix;
    use crate::problem::tests::hand_qp;
    use crate::problem::verify_certificate;

    #[test]
    fn hand_qp_matches_homogeneous_engine() {
        let p = hand_qp();
        let settings = Settings::absolute(1e-8);
        let a = solve_direct(&p, &settings).unwrap();
        let b = homogeneous::solve(&p, &settings).unwrap();
        assert_eq!(a.status, Status::Solved);
        for (u, v) in [(&a.x, &b.x), (&a.y, &b.y)] {
            assert!((u.as_ref().unwrap()[0] - v.as_ref().unwrap()[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn fixed_point_from_known_solution_is_stationary() {
        // At the hand QP optimum (x, y, s) = (0, −1, 0), w = u − v = (0, −1).
        let p = hand_qp();
        let mut solver = DirectSolver::with_start(&p, &Settings::default(), vec![0.0, -1.0]).unwrap();
        for _ in 0..10 {
            solver.step().unwrap();
            assert!((solver.state().w[0]).abs() < 1e-12);
            assert!((solver.state().w[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pinned_homogeneous_step_matches() {
        let p = hand_qp();
        let settings = Settings::default();
        let mut direct = DirectSolver::new(&p, &settings).unwrap();
        let mut pinned = HomogeneousSolver::new(&p, &settings).unwrap();
        for _ in 0..50 {
            direct.step().unwrap();
            pinned.step_pinned().unwrap();
            for (a, b) in direct.state().w.iter().zip(&pinned.state().mu) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn certifies_tiny_infeasible_and_unbounded_problems() {
        let infeasible = QcpProblem::new(
            SparseMatrix::zeros(1, 1),
            SparseMatrix::from_dense(&[vec![-1.0], vec![1.0]]).unwrap(),
            vec![0.0],
            vec![-1.0, -1.0],
            ConeSpec::new(vec![Cone::NonNegative(2)]).unwrap(),
        )
        .unwrap();
        let settings = Settings::absolute(1e-6);
        let res = solve_direct(&infeasible, &settings).unwrap();
        assert_eq!(res.status, Status::PrimalInfeasible);
        verify_certificate(&infeasible, res.certificate.as_ref().unwrap(), 1e-6).unwrap();

        let unbounded = QcpProblem::new(
            SparseMatrix::zeros(1, 1),
            SparseMatrix::from_dense(&[vec![-1.0]]).unwrap(),
            vec![-1.0],
            vec![0.0],
            ConeSpec::new(vec![Cone::NonNegative(1)]).unwrap(),
        )
        .unwrap();
        let res = solve_direct(&unbounded, &settings).unwrap();
        assert_eq!(res.status, Status::DualInfeasible);
        verify_certificate(&unbounded, res.certificate.as_ref().unwrap(), 1e-6).unwrap();
    }
}
