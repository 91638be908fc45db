//! JSON problem and result files.
//!
//! Problem files carry `n`, `m`, `P` (upper triangle) and `A` in CSC form,
//! `c`, `b`, and an ordered `cones` list. Infinite box bounds are written as
//! `null`. Floats use the shortest representation that parses back to the
//! identical `f64`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{QcpProblem, SolveResult};
use crate::cones::{Cone, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CscJson {
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    values: Vec<f64>,
}

impl CscJson {
    fn from_matrix(a: &SparseMatrix) -> Self {
        Self {
            ncols: a.ncols(),
            colptr: a.colptr().to_vec(),
            rowidx: a.rowidx().to_vec(),
            values: a.values().to_vec(),
        }
    }

    fn into_matrix(self, name: &str, nrows: usize, ncols: usize) -> Result<SparseMatrix> {
        if self.ncols != ncols {
            return Err(Error::Schema(format!(
                "{name}.ncols is {}, expected {ncols}",
                self.ncols
            )));
        }
        SparseMatrix::new(nrows, ncols, self.colptr, self.rowidx, self.values)
            .map_err(|e| Error::Format(format!("{name}: {e}")))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum ConeJson {
    Zero { dim: usize },
    Nonneg { dim: usize },
    Box { l: Vec<Option<f64>>, u: Vec<Option<f64>> },
    Soc { dim: usize },
}

impl ConeJson {
    fn from_cone(cone: &Cone) -> Result<Self> {
        let bound = |v: &f64| v.is_finite().then_some(*v);
        Ok(match cone {
            Cone::Zero(dim) => ConeJson::Zero { dim: *dim },
            Cone::NonNegative(dim) => ConeJson::Nonneg { dim: *dim },
            Cone::SecondOrder(dim) => ConeJson::Soc { dim: *dim },
            Cone::Box { lower, upper } => ConeJson::Box {
                l: lower.iter().map(bound).collect(),
                u: upper.iter().map(bound).collect(),
            },
            Cone::Free(_) => {
                return Err(Error::Schema("free cones have no problem-file encoding".into()))
            }
        })
    }

    fn into_cone(self) -> Cone {
        match self {
            ConeJson::Zero { dim } => Cone::Zero(dim),
            ConeJson::Nonneg { dim } => Cone::NonNegative(dim),
            ConeJson::Soc { dim } => Cone::SecondOrder(dim),
            ConeJson::Box { l, u } => Cone::Box {
                lower: l.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect(),
                upper: u.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect(),
            },
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemJson {
    n: usize,
    m: usize,
    #[serde(rename = "P")]
    p: CscJson,
    #[serde(rename = "A")]
    a: CscJson,
    c: Vec<f64>,
    b: Vec<f64>,
    cones: Vec<ConeJson>,
}

fn classify(err: serde_json::Error) -> Error {
    match err.classify() {
        serde_json::error::Category::Data => Error::Schema(err.to_string()),
        _ => Error::Json(err),
    }
}

pub fn problem_to_json(problem: &QcpProblem) -> Result<String> {
    let doc = ProblemJson {
        n: problem.n(),
        m: problem.m(),
        p: CscJson::from_matrix(&problem.p),
        a: CscJson::from_matrix(&problem.a),
        c: problem.c.clone(),
        b: problem.b.clone(),
        cones: problem
            .cones
            .cones()
            .iter()
            .map(ConeJson::from_cone)
            .collect::<Result<_>>()?,
    };
    Ok(serde_json::to_string(&doc)?)
}

/// Parses and validates a problem document.
pub fn problem_from_json(text: &str) -> Result<QcpProblem> {
    let doc: ProblemJson = serde_json::from_str(text).map_err(classify)?;
    let p = doc.p.into_matrix("P", doc.n, doc.n)?;
    let a = doc.a.into_matrix("A", doc.m, doc.n)?;
    if doc.c.len() != doc.n || doc.b.len() != doc.m {
        return Err(Error::Schema(format!(
            "c has length {} and b has length {}, expected n = {} and m = {}",
            doc.c.len(),
            doc.b.len(),
            doc.n,
            doc.m
        )));
    }
    let cones = ConeSpec::new(doc.cones.into_iter().map(ConeJson::into_cone).collect())?;
    QcpProblem::new(p, a, doc.c, doc.b, cones)
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<QcpProblem> {
    problem_from_json(&fs::read_to_string(path)?)
}

pub fn write_problem(problem: &QcpProblem, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, problem_to_json(problem)?)?;
    Ok(())
}

pub fn result_to_json(result: &SolveResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)?)
}

pub fn write_result(result: &SolveResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, result_to_json(result)?)?;
    Ok(())
}

pub fn read_result(path: impl AsRef<Path>) -> Result<SolveResult> {
    serde_json::from_str(&fs::read_to_string(path)?).map_err(classify)
}
