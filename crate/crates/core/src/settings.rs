use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Ordering;

/// Backend for the `(I + M)` solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinSys {
    /// Cached sparse LDLᵀ of the quasidefinite KKT matrix.
    #[default]
    Direct,
    /// Warm-started conjugate gradient on the reduced system.
    Indirect,
}

/// How the direct engine averages successive differences `w^{k+1} − w^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaRule {
    /// `δ̄ ← ½δ̄ + ½δ`
    #[default]
    Smoothed,
    /// `δ̄ = (w^k − w^0)/k`
    Cesaro,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgSettings {
    /// Relative tolerance for the one-off solve of `(I + M) r = q`.
    pub r_tolerance: f64,
    /// Lower bound on the per-iteration tolerance `min(0.1, k^-1.5)`.
    pub tolerance_floor: f64,
}

impl Default for CgSettings {
    fn default() -> Self {
        Self {
            r_tolerance: 1e-12,
            tolerance_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub eps_abs: f64,
    /// May be zero, which turns the stopping test into a pure absolute one.
    pub eps_rel: f64,
    pub eps_infeas: f64,
    pub max_iters: usize,
    pub time_limit_s: f64,
    pub check_interval: usize,
    pub linsys: LinSys,
    pub cg: CgSettings,
    pub ordering: Ordering,
    pub delta_rule: DeltaRule,
    /// Run the PSD check on `P` and fail instead of warning.
    pub strict_psd: bool,
    /// Collect a [`crate::trace::TraceRecord`] at every termination check.
    pub trace: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-3,
            eps_rel: 1e-4,
            eps_infeas: 1e-4,
            max_iters: 100_000,
            time_limit_s: 1e3,
            check_interval: 25,
            linsys: LinSys::Direct,
            cg: CgSettings::default(),
            ordering: Ordering::Amd,
            delta_rule: DeltaRule::Smoothed,
            strict_psd: false,
            trace: false,
        }
    }
}

impl Settings {
    /// Absolute tolerance `eps` on every criterion, `eps_rel = 0`.
    pub fn absolute(eps: f64) -> Self {
        Self {
            eps_abs: eps,
            eps_rel: 0.0,
            eps_infeas: eps,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eps_abs", self.eps_abs),
            ("eps_infeas", self.eps_infeas),
            ("time_limit_s", self.time_limit_s),
            ("cg.r_tolerance", self.cg.r_tolerance),
            ("cg.tolerance_floor", self.cg.tolerance_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.eps_rel >= 0.0) || !self.eps_rel.is_finite() {
            return Err(Error::Argument(format!(
                "eps_rel must be nonnegative, got {}",
                self.eps_rel
            )));
        }
        if self.check_interval == 0 {
            return Err(Error::Argument("check_interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let s = Settings::default();
        assert_eq!((s.eps_abs, s.eps_rel, s.eps_infeas), (1e-3, 1e-4, 1e-4));
        assert_eq!((s.max_iters, s.check_interval), (100_000, 25));
        assert_eq!(s.time_limit_s, 1e3);
        s.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        for bad in [
            Settings { eps_abs: 0.0, ..Settings::default() },
            Settings { eps_infeas: -1.0, ..Settings::default() },
            Settings { eps_rel: f64::NAN, ..Settings::default() },
            Settings { check_interval: 0, ..Settings::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        Settings::absolute(1e-6).validate().unwrap();
    }
}
