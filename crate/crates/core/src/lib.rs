//! Douglas-Rachford splitting for quadratic cone programs.
//!
//! A QCP is posed as a monotone linear complementarity problem and solved
//! either directly or through its homogeneous embedding, which needs one
//! factorization and detects infeasibility from the iterates themselves.
//!
//! ```
//! use drqcp::{homogeneous, Cone, ConeSpec, QcpProblem, Settings, SparseMatrix, Status};
//!
//! // minimize ½x² + x subject to x = 0
//! let problem = QcpProblem::new(
//!     SparseMatrix::from_dense(&[vec![1.0]]).unwrap(),
//!     SparseMatrix::from_dense(&[vec![1.0]]).unwrap(),
//!     vec![1.0],
//!     vec![0.0],
//!     ConeSpec::new(vec![Cone::Zero(1)]).unwrap(),
//! )
//! .unwrap();
//! let result = homogeneous::solve(&problem, &Settings::absolute(1e-8)).unwrap();
//! assert_eq!(result.status, Status::Solved);
//! ```

pub mod bench;
pub mod cones;
pub mod engine;
pub mod error;
pub mod linalg;
pub mod probgen;
pub mod problem;
pub mod settings;
pub mod trace;

pub use cones::{Cone, ConeSpec};
pub use engine::{direct, homogeneous};
pub use error::{Error, Result, ValidationIssue};
pub use linalg::SparseMatrix;
pub use problem::{Certificate, CertificateKind, QcpProblem, Residuals, SolveResult, Status};
pub use settings::{LinSys, Settings};
pub use trace::{Engine, TraceRecord};

/// Runs the chosen engine.
pub fn solve_with(engine: Engine, problem: &QcpProblem, settings: &Settings) -> Result<SolveResult> {
    match engine {
        Engine::Homogeneous => homogeneous::solve(problem, settings),
        Engine::Direct => direct::solve_direct(problem, settings),
    }
}
