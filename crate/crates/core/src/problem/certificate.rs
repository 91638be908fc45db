use serde::{Deserialize, Serialize};

use super::QcpProblem;
use crate::linalg::{dot, norm_inf};

/// Cone-membership and normalization slack accepted by [`verify_certificate`].
pub const CERTIFICATE_CONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    /// `Aᵀy = 0, y ∈ K*, bᵀy < 0`
    PrimalInfeasible,
    /// `Px = 0, −Ax ∈ K, cᵀx < 0`
    DualInfeasible,
}

/// Normalized infeasibility certificate (`bᵀy = −1` or `cᵀx = −1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub y: Option<Vec<f64>>,
    pub x: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    /// `‖Aᵀy‖∞` for primal certificates, `max(‖Px‖∞, ‖Ax + s‖∞)` for dual ones.
    pub residual: f64,
}

/// Normalizes a candidate `y ∈ K*` to `bᵀy = −1`; `None` unless `bᵀy < 0`.
pub fn primal_certificate(problem: &QcpProblem, y: &[f64]) -> Option<Certificate> {
    let by = dot(&problem.b, y);
    if !(by < 0.0) {
        return None;
    }
    let y: Vec<f64> = y.iter().map(|v| v / -by).collect();
    let mut aty = vec![0.0; problem.n()];
    problem.a.tmul_vec_into(&y, &mut aty);
    Some(Certificate {
        kind: CertificateKind::PrimalInfeasible,
        residual: norm_inf(&aty),
        y: Some(y),
        x: None,
        s: None,
    })
}

/// Normalizes a candidate `x` to `cᵀx = −1` and pairs it with `s = Π_K(−Ax)`;
/// `None` unless `cᵀx < 0`.
pub fn dual_certificate(problem: &QcpProblem, x: &[f64]) -> Option<Certificate> {
    let cx = dot(&problem.c, x);
    if !(cx < 0.0) {
        return None;
    }
    let x: Vec<f64> = x.iter().map(|v| v / -cx).collect();
    let mut ax = vec![0.0; problem.m()];
    problem.a.mul_vec_into(&x, &mut ax);
    let mut s: Vec<f64> = ax.iter().map(|v| -v).collect();
    problem.cones.project_in_place(&mut s);
    let gap: Vec<f64> = ax.iter().zip(&s).map(|(a, b)| a + b).collect();
    let mut px = vec![0.0; problem.n()];
    problem.p_mul(&x, &mut px);
    Some(Certificate {
        kind: CertificateKind::DualInfeasible,
        residual: norm_inf(&px).max(norm_inf(&gap)),
        x: Some(x),
        s: Some(s),
        y: None,
    })
}

/// Recomputes every certificate condition from scratch and returns the
/// residual, or a description of the first failed condition.
pub fn verify_certificate(
    problem: &QcpProblem,
    cert: &Certificate,
    eps_infeas: f64,
) -> Result<f64, String> {
    let residual = match cert.kind {
        CertificateKind::PrimalInfeasible => {
            let y = cert.y.as_deref().ok_or("primal certificate without y")?;
            if y.len() != problem.m() {
                return Err(format!("y has length {}, expected {}", y.len(), problem.m()));
            }
            let by = dot(&problem.b, y);
            if (by + 1.0).abs() > CERTIFICATE_CONE_TOL {
                return Err(format!("bᵀy = {by}, expected -1"));
            }
            let dist = problem.cones.dual_distance(y);
            if dist > CERTIFICATE_CONE_TOL {
                return Err(format!("y is {dist:e} away from K*"));
            }
            let mut aty = vec![0.0; problem.n()];
            problem.a.tmul_vec_into(y, &mut aty);
            norm_inf(&aty)
        }
        CertificateKind::DualInfeasible => {
            let x = cert.x.as_deref().ok_or("dual certificate without x")?;
            let s = cert.s.as_deref().ok_or("dual certificate without s")?;
            if x.len() != problem.n() || s.len() != problem.m() {
                return Err("certificate x/s have the wrong length".into());
            }
            let cx = dot(&problem.c, x);
            if (cx + 1.0).abs() > CERTIFICATE_CONE_TOL {
                return Err(format!("cᵀx = {cx}, expected -1"));
            }
            let dist = problem.cones.distance(s);
            if dist > CERTIFICATE_CONE_TOL {
                return Err(format!("s is {dist:e} away from K"));
            }
            let mut px = vec![0.0; problem.n()];
            problem.p_mul(x, &mut px);
            let mut ax = vec![0.0; problem.m()];
            problem.a.mul_vec_into(x, &mut ax);
            let axs: Vec<f64> = ax.iter().zip(s).map(|(a, b)| a + b).collect();
            norm_inf(&px).max(norm_inf(&axs))
        }
    };
    if residual < eps_infeas {
        Ok(residual)
    } else {
        Err(format!("certificate residual {residual:e} is not below {eps_infeas:e}"))
    }
}
