//! Douglas-Rachford splitting on the homogeneous embedding of `LCP(M, q, C)`.
//!
//! The embedded operator `Q(z, τ) = (Mz + qτ, −zᵀq − zᵀMz/τ)` lives on
//! `C+ = C × ℝ₊`. Its resolvent costs one `(I + M)` solve plus the root of a
//! scalar quadratic, so the whole method needs a single factorization.

use std::time::Instant;

use crate::engine::{
    kkt_satisfied, preflight, try_dual_certificate, try_primal_certificate, ResolventSolver,
    STALL_THRESHOLD,
};
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2};
use crate::problem::{
    Certificate, KktCheck, LcpView, QcpProblem, Residuals, SolveResult, Status,
};
use crate::settings::Settings;
use crate::trace::{Engine, TraceRecord};

/// Below this `τ` no solution candidate is formed.
pub const TAU_MIN: f64 = 1e-12;

/// Nonnegative root of `aτ² + bτ + c` with `a = 1 + rᵀr`,
/// `b = rᵀμ − 2rᵀp − η` and `c = pᵀ(p − μ)`.
pub fn root_plus(mu: &[f64], eta: f64, p: &[f64], r: &[f64]) -> Result<f64> {
    check_len("root_plus p", mu.len(), p.len())?;
    check_len("root_plus r", mu.len(), r.len())?;
    let a = 1.0 + dot(r, r);
    let b = dot(r, mu) - 2.0 * dot(r, p) - eta;
    let c: f64 = p.iter().zip(mu).map(|(pi, mi)| pi * (pi - mi)).sum();
    quadratic_root(a, b, c)
}

fn quadratic_root(a: f64, b: f64, c: f64) -> Result<f64> {
    let mut disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        if disc < -1e-12 && disc < -1e-9 * (b * b).max((4.0 * a * c).abs()) {
            return Err(Error::Numerical(format!(
                "negative discriminant {disc:e} in root_plus (a = {a}, b = {b}, c = {c})"
            )));
        }
        disc = 0.0;
    }
    if !disc.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite discriminant in root_plus (a = {a}, b = {b}, c = {c})"
        )));
    }
    let sq = disc.sqrt();
    // The larger root, written so that no cancellation occurs.
    let tau = if b <= 0.0 {
        (-b + sq) / (2.0 * a)
    } else if b + sq > 0.0 {
        -2.0 * c / (b + sq)
    } else {
        0.0
    };
    Ok(tau.max(0.0))
}

/// Iterates of one run. `w = (mu, eta)`, `u = (z, tau)`, `ũ = (z_tilde, tau_tilde)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousState {
    pub mu: Vec<f64>,
    pub eta: f64,
    pub z: Vec<f64>,
    pub tau: f64,
    pub z_tilde: Vec<f64>,
    pub tau_tilde: f64,
    /// `(I + M)⁻¹ μ` from the last resolvent.
    pub p: Vec<f64>,
    /// `(I + M)⁻¹ q`, fixed for the run.
    pub r: Vec<f64>,
    /// `u − (2ũ − w)`, of length `d + 1`; lies in `C+*` and is orthogonal to `u`.
    pub v: Vec<f64>,
    pub iter: usize,
    /// `‖w^{k+1} − w^k‖₂` of the last step.
    pub fp_residual: f64,
}

impl HomogeneousState {
    /// `κ`, read as the last entry of `v`.
    pub fn kappa(&self) -> f64 {
        self.v[self.v.len() - 1]
    }

    /// `w` as one vector of length `d + 1`.
    pub fn w(&self) -> Vec<f64> {
        let mut w = self.mu.clone();
        w.push(self.eta);
        w
    }

    /// `u` as one vector of length `d + 1`.
    pub fn u(&self) -> Vec<f64> {
        let mut u = self.z.clone();
        u.push(self.tau);
        u
    }
}

/// Candidate `(x, y, s) = (z_x, z_y, v_y)/τ` with its KKT residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    pub check: KktCheck,
}

pub struct HomogeneousSolver<'a> {
    problem: &'a QcpProblem,
    lcp: LcpView<'a>,
    settings: Settings,
    linsys: ResolventSolver,
    state: HomogeneousState,
    scratch: Vec<f64>,
}

impl<'a> HomogeneousSolver<'a> {
    /// Starts from `w⁰ = (0, 1)`.
    pub fn new(problem: &'a QcpProblem, settings: &Settings) -> Result<Self> {
        let d = problem.n() + problem.m();
        Self::with_start(problem, settings, vec![0.0; d], 1.0)
    }

    /// Starts from a given `w⁰ = (mu, eta)`.
    pub fn with_start(
        problem: &'a QcpProblem,
        settings: &Settings,
        mu: Vec<f64>,
        eta: f64,
    ) -> Result<Self> {
        preflight(problem, settings)?;
        let lcp = problem.to_lcp();
        let d = lcp.dim();
        check_len("initial mu", d, mu.len())?;
        let mut linsys = ResolventSolver::new(problem, settings)?;
        let mut r = vec![0.0; d];
        linsys.solve_tight(lcp.q(), &mut r)?;
        let state = HomogeneousState {
            z: vec![0.0; d],
            tau: 0.0,
            z_tilde: vec![0.0; d],
            tau_tilde: 0.0,
            p: vec![0.0; d],
            r,
            v: vec![0.0; d + 1],
            iter: 0,
            fp_residual: f64::INFINITY,
            mu,
            eta,
        };
        Ok(Self {
            problem,
            lcp,
            settings: settings.clone(),
            linsys,
            state,
            scratch: vec![0.0; d],
        })
    }

    pub fn state(&self) -> &HomogeneousState {
        &self.state
    }

    pub fn problem(&self) -> &QcpProblem {
        self.problem
    }

    /// Resolvent of `Q` at `(mu, eta)`: returns `(z̃, τ̃)` and leaves `p` in the state.
    pub fn resolvent(&mut self, mu: &[f64], eta: f64) -> Result<(Vec<f64>, f64)> {
        check_len("resolvent mu", self.lcp.dim(), mu.len())?;
        let k = self.state.iter + 1;
        self.linsys.solve(mu, &mut self.state.p, k)?;
        let st = &self.state;
        let tau = root_plus(mu, eta, &st.p, &st.r)?;
        let z = st.p.iter().zip(&st.r).map(|(p, r)| p - r * tau).collect();
        Ok((z, tau))
    }

    /// One full step: resolvent, projection onto `C+`, averaging.
    pub fn step(&mut self) -> Result<()> {
        self.step_impl(false)
    }

    /// One step with `τ = τ̃ = η = 1` held fixed, which reduces to the
    /// direct iteration on `LCP(M, q, C)`.
    pub fn step_pinned(&mut self) -> Result<()> {
        self.step_impl(true)
    }

    fn step_impl(&mut self, pinned: bool) -> Result<()> {
        let k = self.state.iter + 1;
        let st = &mut self.state;
        self.linsys.solve(&st.mu, &mut st.p, k)?;
        let tau_tilde = if pinned {
            1.0
        } else {
            root_plus(&st.mu, st.eta, &st.p, &st.r)?
        };
        for ((zt, p), r) in st.z_tilde.iter_mut().zip(&st.p).zip(&st.r) {
            *zt = p - r * tau_tilde;
        }
        st.tau_tilde = tau_tilde;

        // u = Π_{C+}(2ũ − w), v = u − (2ũ − w)
        let pre = &mut self.scratch;
        for ((o, zt), mu) in pre.iter_mut().zip(&st.z_tilde).zip(&st.mu) {
            *o = 2.0 * zt - mu;
        }
        st.z.copy_from_slice(pre);
        self.lcp.project_c(&mut st.z);
        let (tau, tau_pre) = if pinned {
            (1.0, 1.0)
        } else {
            let t = 2.0 * tau_tilde - st.eta;
            (t.max(0.0), t)
        };
        st.tau = tau;
        let d = st.z.len();
        for i in 0..d {
            st.v[i] = st.z[i] - pre[i];
        }
        st.v[d] = tau - tau_pre;

        // w ← w + u − ũ
        let mut fp = 0.0;
        for i in 0..d {
            let delta = st.z[i] - st.z_tilde[i];
            st.mu[i] += delta;
            fp += delta * delta;
        }
        if !pinned {
            let delta = tau - tau_tilde;
            st.eta += delta;
            fp += delta * delta;
        }
        st.fp_residual = fp.sqrt();
        st.iter = k;
        Ok(())
    }

    /// Solution candidate at the current iterate, `None` when `τ ≤ τ_min`.
    pub fn candidate(&self) -> Option<Candidate> {
        let st = &self.state;
        if !(st.tau > TAU_MIN) {
            return None;
        }
        let n = self.problem.n();
        let d = st.z.len();
        let x: Vec<f64> = st.z[..n].iter().map(|v| v / st.tau).collect();
        let y: Vec<f64> = st.z[n..].iter().map(|v| v / st.tau).collect();
        let s: Vec<f64> = st.v[n..d].iter().map(|v| v / st.tau).collect();
        let check = KktCheck::evaluate(self.problem, &x, &y, &s);
        Some(Candidate { x, y, s, check })
    }

    /// Primal residual, dual residual and gap of the current candidate.
    pub fn residuals(&self) -> Residuals {
        self.candidate()
            .map_or(Residuals::INFINITE, |c| c.check.residuals)
    }

    /// Verdict at the current iterate, if any. Limits are handled by [`Self::run`].
    pub fn check_termination(&self) -> Option<(Status, Option<Candidate>, Option<Certificate>)> {
        let candidate = self.candidate();
        if let Some(c) = &candidate {
            if kkt_satisfied(&c.check, &self.settings) {
                return Some((Status::Solved, candidate, None));
            }
        }
        let n = self.problem.n();
        let eps = self.settings.eps_infeas;
        let st = &self.state;
        if let Some(cert) = try_primal_certificate(self.problem, &st.z[n..], eps) {
            return Some((Status::PrimalInfeasible, None, Some(cert)));
        }
        if let Some(cert) = try_dual_certificate(self.problem, &st.z[..n], eps) {
            return Some((Status::DualInfeasible, None, Some(cert)));
        }
        None
    }

    fn trace_record(&self, residuals: Residuals) -> TraceRecord {
        TraceRecord {
            engine: Engine::Homogeneous,
            iteration: self.state.iter,
            primal: residuals.primal,
            dual: residuals.dual,
            gap: residuals.gap,
            tau: self.state.tau,
            kappa: self.state.kappa(),
            fp_residual: self.state.fp_residual,
        }
    }

    /// Iterates until a verdict or a limit.
    pub fn run(&mut self) -> Result<SolveResult> {
        let start = Instant::now();
        let interval = self.settings.check_interval;
        let mut trace = Vec::new();
        let mut limit = Status::MaxIterations;
        while self.state.iter < self.settings.max_iters {
            self.step()?;
            let last = self.state.iter == self.settings.max_iters;
            if self.state.iter.is_multiple_of(interval) || last {
                let verdict = self.check_termination();
                if self.settings.trace {
                    let res = verdict
                        .as_ref()
                        .and_then(|v| v.1.as_ref())
                        .map_or_else(|| self.residuals(), |c| c.check.residuals);
                    trace.push(self.trace_record(res));
                }
                if let Some((status, cand, cert)) = verdict {
                    return Ok(self.finish(status, cand, cert, start, trace));
                }
            }
            if start.elapsed().as_secs_f64() > self.settings.time_limit_s {
                limit = Status::TimeLimit;
                break;
            }
        }
        let cand = self.candidate();
        Ok(self.finish(limit, cand, None, start, trace))
    }

    fn finish(
        &self,
        status: Status,
        candidate: Option<Candidate>,
        certificate: Option<Certificate>,
        start: Instant,
        trace: Vec<TraceRecord>,
    ) -> SolveResult {
        let residuals = candidate
            .as_ref()
            .map_or(Residuals::INFINITE, |c| c.check.residuals);
        let stalled = !status.is_success() && self.state.fp_residual < STALL_THRESHOLD;
        if stalled {
            log::warn!(
                "fixed-point residual {:.3e} with no verdict: possibly pathological (tau = kappa = 0)",
                self.state.fp_residual
            );
        }
        let (x, y, s) = match candidate {
            Some(c) => (Some(c.x), Some(c.y), Some(c.s)),
            None => (None, None, None),
        };
        SolveResult {
            status,
            x,
            y,
            s,
            certificate,
            iterations: self.state.iter,
            residuals,
            solve_time_s: start.elapsed().as_secs_f64(),
            stalled,
            trace,
        }
    }
}

/// Solves a QCP with the homogeneous engine from `w⁰ = (0, 1)`.
pub fn solve(problem: &QcpProblem, settings: &Settings) -> Result<SolveResult> {
    HomogeneousSolver::new(problem, settings)?.run()
}

/// Shorthand for the `norm2` of `w`, used in tests and diagnostics.
pub fn w_norm(state: &HomogeneousState) -> f64 {
    (norm2(&state.mu).powi(2) + state.eta * state.eta).sqrt()
}
