use serde::{Deserialize, Serialize};

use super::{Certificate, QcpProblem};
use crate::linalg::{dot, norm_inf};
use crate::trace::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Solved,
    PrimalInfeasible,
    DualInfeasible,
    MaxIterations,
    TimeLimit,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Solved => "solved",
            Status::PrimalInfeasible => "primal_infeasible",
            Status::DualInfeasible => "dual_infeasible",
            Status::MaxIterations => "max_iterations",
            Status::TimeLimit => "time_limit",
        }
    }

    /// Solved or certified infeasible.
    pub fn is_success(self) -> bool {
        !matches!(self, Status::MaxIterations | Status::TimeLimit)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            Status::Solved,
            Status::PrimalInfeasible,
            Status::DualInfeasible,
            Status::MaxIterations,
            Status::TimeLimit,
        ]
        .into_iter()
        .find(|st| st.as_str() == s)
        .ok_or_else(|| format!("unknown status {s:?}"))
    }
}

/// ℓ∞ KKT residuals; infinite when no candidate could be formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    #[serde(with = "finite_or_null")]
    pub primal: f64,
    #[serde(with = "finite_or_null")]
    pub dual: f64,
    #[serde(with = "finite_or_null")]
    pub gap: f64,
}

impl Residuals {
    pub const INFINITE: Residuals = Residuals {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    };

    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Primal residual, dual residual and duality gap of a candidate `(x, y, s)`
/// with the scales used by the relative part of the stopping test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktCheck {
    pub residuals: Residuals,
    pub primal_scale: f64,
    pub dual_scale: f64,
    pub gap_scale: f64,
}

impl KktCheck {
    pub fn evaluate(problem: &QcpProblem, x: &[f64], y: &[f64], s: &[f64]) -> Self {
        let (n, m) = (problem.n(), problem.m());
        let mut ax = vec![0.0; m];
        problem.a.mul_vec_into(x, &mut ax);
        let mut px = vec![0.0; n];
        problem.p_mul(x, &mut px);
        let mut aty = vec![0.0; n];
        problem.a.tmul_vec_into(y, &mut aty);

        let pres: Vec<f64> = (0..m).map(|i| ax[i] + s[i] - problem.b[i]).collect();
        let dres: Vec<f64> = (0..n).map(|j| px[j] + aty[j] + problem.c[j]).collect();
        let xpx = dot(x, &px);
        let cx = dot(&problem.c, x);
        let by = dot(&problem.b, y);
        Self {
            residuals: Residuals {
                primal: norm_inf(&pres),
                dual: norm_inf(&dres),
                gap: (xpx + cx + by).abs(),
            },
            primal_scale: norm_inf(&ax).max(norm_inf(s)).max(norm_inf(&problem.b)),
            dual_scale: norm_inf(&px).max(norm_inf(&aty)).max(norm_inf(&problem.c)),
            gap_scale: xpx.abs().max(cx.abs()).max(by.abs()),
        }
    }

    /// All three inequalities `r ≤ eps_abs + eps_rel·scale` hold.
    pub fn satisfied(&self, eps_abs: f64, eps_rel: f64) -> bool {
        let r = &self.residuals;
        r.primal <= eps_abs + eps_rel * self.primal_scale
            && r.dual <= eps_abs + eps_rel * self.dual_scale
            && r.gap <= eps_abs + eps_rel * self.gap_scale
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub status: Status,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    pub s: Option<Vec<f64>>,
    pub certificate: Option<Certificate>,
    pub iterations: usize,
    pub residuals: Residuals,
    pub solve_time_s: f64,
    /// Set when the run ended without a verdict while the fixed-point
    /// residual had collapsed, the signature of `τ* = κ* = 0`.
    #[serde(default)]
    pub stalled: bool,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
}

impl SolveResult {
    /// Primal objective at the returned `x`, if any.
    pub fn objective(&self, problem: &QcpProblem) -> Option<f64> {
        self.x.as_deref().map(|x| problem.objective(x))
    }
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::tests::hand_qp;

    #[test]
    fn hand_qp_optimum_has_zero_residuals() {
        let check = KktCheck::evaluate(&hand_qp(), &[0.0], &[-1.0], &[0.0]);
        assert_eq!(check.residuals, Residuals { primal: 0.0, dual: 0.0, gap: 0.0 });
        assert!(check.satisfied(1e-12, 0.0));
        let off = KktCheck::evaluate(&hand_qp(), &[0.1], &[-1.0], &[0.0]);
        assert!(!off.satisfied(1e-3, 0.0));
        assert!(off.satisfied(1.0, 0.0));
    }

    #[test]
    fn status_strings_round_trip() {
        for st in [
            Status::Solved,
            Status::PrimalInfeasible,
            Status::DualInfeasible,
            Status::MaxIterations,
            Status::TimeLimit,
        ] {
            assert_eq!(st.as_str().parse::<Status>().unwrap(), st);
            assert_eq!(serde_json::to_string(&st).unwrap(), format!("\"{}\"", st.as_str()));
        }
        assert!("done".parse::<Status>().is_err());
    }
}
