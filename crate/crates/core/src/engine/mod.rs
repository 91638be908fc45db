//! The two Douglas-Rachford engines and the pieces they share.

pub mod direct;
pub mod homogeneous;

use crate::error::{Error, Result};
use crate::linalg::{
    assemble_kkt, cg_tolerance_schedule, factor_kkt, IndirectKktSolver, KktFactorization,
};
use crate::problem::{
    dual_certificate, primal_certificate, verify_certificate, Certificate, KktCheck, QcpProblem,
};
use crate::settings::{LinSys, Settings};

/// Fixed-point residual below which a run without a verdict is flagged as stalled.
pub const STALL_THRESHOLD: f64 = 1e-10;

/// Solves `(I + M) z = rhs` through the quasidefinite KKT matrix.
///
/// With `M = [[P, Aᵀ], [−A, 0]]` the second block row reads `y − Ax = rhs_y`,
/// which is the KKT row `Ax − y = −rhs_y`.
pub(crate) struct ResolventSolver {
    n: usize,
    backend: Backend,
    kkt_rhs: Vec<f64>,
    cg_floor: f64,
    cg_r_tol: f64,
}

enum Backend {
    Direct {
        fac: KktFactorization,
        work: Vec<f64>,
    },
    Indirect {
        cg: IndirectKktSolver,
        warm: Vec<f64>,
        cold: Vec<f64>,
    },
}

impl ResolventSolver {
    pub(crate) fn new(problem: &QcpProblem, settings: &Settings) -> Result<Self> {
        let (n, m) = (problem.n(), problem.m());
        let backend = match settings.linsys {
            LinSys::Direct => {
                let sys = assemble_kkt(&problem.p, &problem.a)?;
                Backend::Direct {
                    fac: factor_kkt(&sys, &settings.ordering)?,
                    work: vec![0.0; n + m],
                }
            }
            LinSys::Indirect => Backend::Indirect {
                cg: IndirectKktSolver::new(&problem.p, &problem.a)?,
                warm: vec![0.0; n],
                cold: vec![0.0; n],
            },
        };
        Ok(Self {
            n,
            backend,
            kkt_rhs: vec![0.0; n + m],
            cg_floor: settings.cg.tolerance_floor,
            cg_r_tol: settings.cg.r_tolerance,
        })
    }

    fn load_rhs(&mut self, rhs: &[f64]) {
        let n = self.n;
        self.kkt_rhs[..n].copy_from_slice(&rhs[..n]);
        for (k, r) in self.kkt_rhs[n..].iter_mut().zip(&rhs[n..]) {
            *k = -r;
        }
    }

    /// Solve for the `k`-th outer iteration (1-based). The indirect backend
    /// warm-starts from its previous answer and tightens with `k`.
    pub(crate) fn solve(&mut self, rhs: &[f64], out: &mut [f64], k: usize) -> Result<()> {
        self.load_rhs(rhs);
        match &mut self.backend {
            Backend::Direct { fac, work } => {
                out.copy_from_slice(&self.kkt_rhs);
                fac.solve_in_place(out, work);
                Ok(())
            }
            Backend::Indirect { cg, warm, .. } => {
                let tol = cg_tolerance_schedule(k).max(self.cg_floor);
                cg_solve(cg, &self.kkt_rhs, tol, warm, out)
            }
        }
    }

    /// One-off tight solve from a cold start, used for `r = (I + M)⁻¹ q`.
    pub(crate) fn solve_tight(&mut self, rhs: &[f64], out: &mut [f64]) -> Result<()> {
        self.load_rhs(rhs);
        match &mut self.backend {
            Backend::Direct { fac, work } => {
                out.copy_from_slice(&self.kkt_rhs);
                fac.solve_in_place(out, work);
                Ok(())
            }
            Backend::Indirect { cg, cold, .. } => {
                cold.fill(0.0);
                cg_solve(cg, &self.kkt_rhs, self.cg_r_tol, cold, out)
            }
        }
    }
}

/// CG solve that accepts the best iterate when the iteration cap is hit.
fn cg_solve(
    cg: &mut IndirectKktSolver,
    rhs: &[f64],
    tol: f64,
    warm: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    match cg.solve(rhs, tol, warm, out) {
        Ok(_) => Ok(()),
        Err(Error::CgNotConverged {
            iterations,
            residual,
            best,
        }) => {
            log::warn!(
                "CG stopped after {iterations} iterations at relative residual {residual:.3e}"
            );
            let n = cg.n();
            warm.copy_from_slice(&best);
            // Re-running from the best iterate with an infinite tolerance just
            // forms y = Ax − r_y.
            cg.solve(rhs, f64::MAX, warm, out)?;
            debug_assert_eq!(out.len(), n + cg.m());
            Ok(())
        }
        Err(e) => Err(e),
    }
}

/// Runs the advisory or strict PSD check and validates settings.
pub(crate) fn preflight(problem: &QcpProblem, settings: &Settings) -> Result<()> {
    settings.validate()?;
    if settings.strict_psd {
        problem.validate_strict()?;
    } else if problem.p.nnz() > 0 && !problem.p_is_psd() {
        log::warn!("P does not look positive semidefinite");
    }
    Ok(())
}

/// Normalizes and verifies a primal-infeasibility candidate `y ∈ K*`.
pub(crate) fn try_primal_certificate(
    problem: &QcpProblem,
    y: &[f64],
    eps_infeas: f64,
) -> Option<Certificate> {
    let cert = primal_certificate(problem, y)?;
    verify_certificate(problem, &cert, eps_infeas).ok()?;
    Some(cert)
}

/// Normalizes and verifies a dual-infeasibility candidate direction `x`.
pub(crate) fn try_dual_certificate(
    problem: &QcpProblem,
    x: &[f64],
    eps_infeas: f64,
) -> Option<Certificate> {
    let cert = dual_certificate(problem, x)?;
    verify_certificate(problem, &cert, eps_infeas).ok()?;
    Some(cert)
}

pub(crate) fn kkt_satisfied(check: &KktCheck, settings: &Settings) -> bool {
    check.satisfied(settings.eps_abs, settings.eps_rel)
}
