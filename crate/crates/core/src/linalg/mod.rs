//! Sparse storage, products, and the two KKT backends.

mod cg;
mod kkt;
mod ldl;
mod sparse;

pub use cg::{cg_tolerance_schedule, solve_kkt_indirect, CgStats, IndirectKktSolver};
pub use kkt::{assemble_kkt, factor_kkt, solve_kkt_direct, KktFactorization, KktSystem};
pub use ldl::{LdlFactorization, Ordering};
pub use sparse::{spmv, SparseMatrix};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}
