//! Seeded random QCPs over the nonnegative orthant with planted ground truth.
//!
//! Every instance is drawn from `ChaCha8Rng::seed_from_u64(seed)` with the
//! stream set to the kind (0 feasible, 1 infeasible, 2 unbounded), so a
//! `(kind, seed)` pair names one instance on every platform. Each generator
//! checks its own plant before returning and panics if the check fails.
//!
//! `density` controls the sparsity of `G` for every kind and of `A` for
//! feasible instances. Infeasible and unbounded instances start from a dense
//! Gaussian `A` that is then corrected to carry the planted certificate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cones::{Cone, ConeSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm_inf, SparseMatrix};
use crate::problem::{KktCheck, QcpProblem};

/// Relative slack allowed when a generator checks its own plant.
const PLANT_TOL: f64 = 1e-12;

/// Expected fraction of rows on which the planted `y*` is nonzero.
const CERT_SUPPORT: f64 = 0.5;

/// `P = GGᵀ` with `G` of shape `n × GRAM_WIDTH·n`; a wide `G` keeps `P` well
/// conditioned on its range.
const GRAM_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Feasible,
    Infeasible,
    Unbounded,
}

impl Kind {
    pub const ALL: [Kind; 3] = [Kind::Feasible, Kind::Infeasible, Kind::Unbounded];

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Feasible => "feasible",
            Kind::Infeasible => "infeasible",
            Kind::Unbounded => "unbounded",
        }
    }

    fn stream(self) -> u64 {
        match self {
            Kind::Feasible => 0,
            Kind::Infeasible => 1,
            Kind::Unbounded => 2,
        }
    }
}

impl std::fmt::Display for Kind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Kind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown kind {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub kind: Kind,
    pub density: f64,
}

impl GenSpec {
    pub const DEFAULT_DENSITY: f64 = 0.1;

    pub fn new(kind: Kind, n: usize, m: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            seed,
            kind,
            density: Self::DEFAULT_DENSITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::Argument(format!(
                "n and m must be positive, got n = {}, m = {}",
                self.n, self.m
            )));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Argument(format!(
                "density must lie in (0, 1], got {}",
                self.density
            )));
        }
        if self.density * ((self.m * self.n) as f64) < 1.0 {
            return Err(Error::Argument(format!(
                "density·m·n = {} is below 1",
                self.density * (self.m * self.n) as f64
            )));
        }
        if self.kind == Kind::Infeasible && self.m <= self.n {
            return Err(Error::Argument(format!(
                "infeasible instances need m > n, got m = {}, n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// File name used by the `gen` command.
    pub fn file_name(&self) -> String {
        format!("{}_{}x{}_{}.json", self.kind, self.n, self.m, self.seed)
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.kind.stream());
        rng
    }
}

/// The ground truth built into an instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Plant {
    /// An optimal primal-dual triple.
    Solution { x: Vec<f64>, y: Vec<f64>, s: Vec<f64> },
    /// `y ≥ 0` with `Aᵀy = 0` and `bᵀy < 0`.
    PrimalCertificate { y: Vec<f64> },
    /// `x` with `Px = 0`, `Ax ≤ 0` and `cᵀx < 0`.
    DualCertificate { x: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub problem: QcpProblem,
    pub plant: Plant,
}

pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    let generated = match spec.kind {
        Kind::Feasible => build_feasible(spec),
        Kind::Infeasible => build_infeasible(spec),
        Kind::Unbounded => build_unbounded(spec),
    }?;
    check_plant(&generated);
    Ok(generated)
}

pub fn gen_feasible(spec: &GenSpec) -> Result<QcpProblem> {
    expect_kind(spec, Kind::Feasible)?;
    Ok(generate(spec)?.problem)
}

pub fn gen_infeasible(spec: &GenSpec) -> Result<QcpProblem> {
    expect_kind(spec, Kind::Infeasible)?;
    Ok(generate(spec)?.problem)
}

pub fn gen_unbounded(spec: &GenSpec) -> Result<QcpProblem> {
    expect_kind(spec, Kind::Unbounded)?;
    Ok(generate(spec)?.problem)
}

fn expect_kind(spec: &GenSpec, kind: Kind) -> Result<()> {
    if spec.kind == kind {
        Ok(())
    } else {
        Err(Error::Argument(format!("expected kind {kind}, got {}", spec.kind)))
    }
}

/// Dense row-major matrix with `N(0, 1)` entries kept with probability `density`.
fn sparse_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize, density: f64) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    if rng.random::<f64>() < density {
                        rng.sample(StandardNormal)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

fn dense_gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| gaussian(rng, cols)).collect()
}

fn gaussian(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Vector that is `N(0, 1)` on a random support of size about `frac·len` (at least one).
fn sparse_vector(rng: &mut ChaCha8Rng, len: usize, frac: f64) -> Vec<f64> {
    let mut v = vec![0.0; len];
    for vi in v.iter_mut() {
        if rng.random::<f64>() < frac {
            *vi = rng.sample(StandardNormal);
        }
    }
    if v.iter().all(|&x| x == 0.0) {
        let i = rng.random_range(0..len);
        v[i] = rng.sample(StandardNormal);
    }
    v
}

fn from_rows(rows: &[Vec<f64>], ncols: usize) -> SparseMatrix {
    let mut triplets = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 {
                triplets.push((i, j, v));
            }
        }
    }
    SparseMatrix::from_triplets(rows.len(), ncols, &triplets).expect("indices in range")
}

/// Upper triangle of `GGᵀ` for a row-major `G` with `n` rows.
fn gram_upper(g: &[Vec<f64>]) -> SparseMatrix {
    let n = g.len();
    let k = g.first().map_or(0, Vec::len);
    let mut triplets = Vec::new();
    for col in 0..k {
        let nz: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| (g[i][col] != 0.0).then_some((i, g[i][col])))
            .collect();
        for (a, &(i, gi)) in nz.iter().enumerate() {
            for &(j, gj) in &nz[a..] {
                triplets.push((i, j, gi * gj));
            }
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).expect("indices in range")
}

fn orthant(m: usize) -> ConeSpec {
    ConeSpec::new(vec![Cone::NonNegative(m)]).expect("valid cone")
}

fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}

fn mat_tvec(rows: &[Vec<f64>], y: &[f64], ncols: usize) -> Vec<f64> {
    let mut out = vec![0.0; ncols];
    for (row, &yi) in rows.iter().zip(y) {
        if yi != 0.0 {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
    out
}

/// `c = −Px − Aᵀy` for the given `P` (upper storage) and row-major `A`.
fn dual_feasible_c(p: &SparseMatrix, a: &[Vec<f64>], x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut px = vec![0.0; n];
    p.sym_upper_mul_vec_into(x, &mut px);
    let aty = mat_tvec(a, y, n);
    px.iter().zip(&aty).map(|(u, v)| -u - v).collect()
}

/// Complementary pair `s = max(z, 0)`, `y = max(−z, 0)` from `z ~ N(0, 1)`.
fn complementary_pair(rng: &mut ChaCha8Rng, m: usize) -> (Vec<f64>, Vec<f64>) {
    let z = gaussian(rng, m);
    let s = z.iter().map(|v| v.max(0.0)).collect();
    let y = z.iter().map(|v| (-v).max(0.0)).collect();
    (s, y)
}

fn build_feasible(spec: &GenSpec) -> Result<Generated> {
    let (n, m) = (spec.n, spec.m);
    let mut rng = spec.rng();
    let a = sparse_gaussian(&mut rng, m, n, spec.density);
    let g = sparse_gaussian(&mut rng, n, GRAM_WIDTH * n, spec.density);
    let p = gram_upper(&g);
    let x = gaussian(&mut rng, n);
    let (s, y) = complementary_pair(&mut rng, m);
    let b: Vec<f64> = mat_vec(&a, &x).iter().zip(&s).map(|(u, v)| u + v).collect();
    let c = dual_feasible_c(&p, &a, &x, &y);
    let problem = QcpProblem::new(p, from_rows(&a, n), c, b, orthant(m))?;
    Ok(Generated {
        problem,
        plant: Plant::Solution { x, y, s },
    })
}

fn build_infeasible(spec: &GenSpec) -> Result<Generated> {
    let (n, m) = (spec.n, spec.m);
    let mut rng = spec.rng();
    let mut a = dense_gaussian(&mut rng, m, n);
    let cert: Vec<f64> = sparse_vector(&mut rng, m, CERT_SUPPORT)
        .into_iter()
        .map(f64::abs)
        .collect();
    // Remove the component of every column of A along y*, so that Aᵀy* = 0.
    let yy = dot(&cert, &cert);
    let aty = mat_tvec(&a, &cert, n);
    for (row, &yi) in a.iter_mut().zip(&cert) {
        if yi != 0.0 {
            for (aij, t) in row.iter_mut().zip(&aty) {
                *aij -= yi * t / yy;
            }
        }
    }
    let mut b = gaussian(&mut rng, m);
    let margin = rng.random_range(0.5..1.5) * yy.sqrt();
    let shift = (dot(&b, &cert) + margin) / yy;
    for (bi, yi) in b.iter_mut().zip(&cert) {
        *bi -= shift * yi;
    }
    // Keep the dual feasible so the verdict is unambiguous.
    let g = sparse_gaussian(&mut rng, n, GRAM_WIDTH * n, spec.density);
    let p = gram_upper(&g);
    let x0 = gaussian(&mut rng, n);
    let (_, y0) = complementary_pair(&mut rng, m);
    let c = dual_feasible_c(&p, &a, &x0, &y0);
    let problem = QcpProblem::new(p, from_rows(&a, n), c, b, orthant(m))?;
    Ok(Generated {
        problem,
        plant: Plant::PrimalCertificate { y: cert },
    })
}

fn build_unbounded(spec: &GenSpec) -> Result<Generated> {
    let (n, m) = (spec.n, spec.m);
    let mut rng = spec.rng();
    let cert = gaussian(&mut rng, n);
    let xx = dot(&cert, &cert);

    // Columns of G orthogonal to x*, so P = GGᵀ has x* in its null space.
    let gk = GRAM_WIDTH * n;
    let mut g = sparse_gaussian(&mut rng, n, gk, spec.density);
    for col in 0..gk {
        let proj: f64 = (0..n).map(|i| g[i][col] * cert[i]).sum::<f64>() / xx;
        if proj != 0.0 {
            for i in 0..n {
                g[i][col] -= proj * cert[i];
            }
        }
    }
    let p = gram_upper(&g);

    // Rows of A corrected so that −Ax* = t ≥ 0.
    let mut a = dense_gaussian(&mut rng, m, n);
    for row in a.iter_mut() {
        let t = rng.sample::<f64, _>(StandardNormal).max(0.0);
        let shift = (dot(row, &cert) + t) / xx;
        for (aij, xj) in row.iter_mut().zip(&cert) {
            *aij -= shift * xj;
        }
    }

    let mut c = gaussian(&mut rng, n);
    let margin = rng.random_range(0.5..1.5) * xx.sqrt();
    let shift = (dot(&c, &cert) + margin) / xx;
    for (ci, xi) in c.iter_mut().zip(&cert) {
        *ci -= shift * xi;
    }
    // Keep the primal feasible so the verdict is unambiguous.
    let x0 = gaussian(&mut rng, n);
    let (s0, _) = complementary_pair(&mut rng, m);
    let b: Vec<f64> = mat_vec(&a, &x0).iter().zip(&s0).map(|(u, v)| u + v).collect();
    let problem = QcpProblem::new(p, from_rows(&a, n), c, b, orthant(m))?;
    Ok(Generated {
        problem,
        plant: Plant::DualCertificate { x: cert },
    })
}

/// Relative violation of the planted ground truth; zero up to rounding.
pub fn plant_violation(generated: &Generated) -> f64 {
    let problem = &generated.problem;
    match &generated.plant {
        Plant::Solution { x, y, s } => {
            let check = KktCheck::evaluate(problem, x, y, s);
            let r = check.residuals;
            let comp = dot(s, y).abs();
            let neg = s.iter().chain(y).fold(0.0f64, |acc, v| acc.max(-v));
            (r.primal / (1.0 + check.primal_scale))
                .max(r.dual / (1.0 + check.dual_scale))
                .max(r.gap / (1.0 + check.gap_scale))
                .max(comp)
                .max(neg)
        }
        Plant::PrimalCertificate { y } => {
            let mut aty = vec![0.0; problem.n()];
            problem.a.tmul_vec_into(y, &mut aty);
            let by = dot(&problem.b, y);
            let neg = y.iter().fold(0.0f64, |acc, v| acc.max(-v));
            let sign = if by < 0.0 { 0.0 } else { f64::INFINITY };
            (norm_inf(&aty) / (1.0 + norm2(y) * max_abs(problem.a.values()))).max(neg).max(sign)
        }
        Plant::DualCertificate { x } => {
            let mut px = vec![0.0; problem.n()];
            problem.p_mul(x, &mut px);
            let mut ax = vec![0.0; problem.m()];
            problem.a.mul_vec_into(x, &mut ax);
            let cx = dot(&problem.c, x);
            let pos = ax.iter().fold(0.0f64, |acc, &v| acc.max(v));
            let sign = if cx < 0.0 { 0.0 } else { f64::INFINITY };
            let scale = 1.0 + norm2(x) * max_abs(problem.a.values()).max(max_abs(problem.p.values()));
            (norm_inf(&px) / scale).max(pos / scale).max(sign)
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    norm_inf(v)
}

fn check_plant(generated: &Generated) {
    let v = plant_violation(generated);
    assert!(
        v <= PLANT_TOL,
        "generator produced an instance that violates its own plant by {v:e}"
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::io::problem_to_json;

    #[test]
    fn same_seed_same_instance() {
        for kind in Kind::ALL {
            let spec = GenSpec::new(kind, 12, 18, 99);
            let a = generate(&spec).unwrap();
            let b = generate(&spec).unwrap();
            assert_eq!(problem_to_json(&a.problem).unwrap(), problem_to_json(&b.problem).unwrap());
            let other = generate(&GenSpec { seed: 100, ..spec }).unwrap();
            assert_ne!(a.problem, other.problem);
        }
    }

    #[test]
    fn kinds_use_distinct_streams() {
        let f = generate(&GenSpec::new(Kind::Feasible, 8, 12, 1)).unwrap();
        let u = generate(&GenSpec::new(Kind::Unbounded, 8, 12, 1)).unwrap();
        assert_ne!(f.problem.a, u.problem.a);
    }

    #[test]
    fn plants_verify_exactly() {
        for seed in 0..20 {
            for kind in Kind::ALL {
                let g = generate(&GenSpec::new(kind, 10, 15, seed)).unwrap();
                assert!(plant_violation(&g) <= 1e-12, "{kind} {seed}");
            }
        }
    }

    #[test]
    fn feasible_plant_is_complementary() {
        let g = generate(&GenSpec::new(Kind::Feasible, 6, 9, 4)).unwrap();
        let Plant::Solution { x, y, s } = &g.plant else { panic!() };
        assert_eq!(dot(s, y), 0.0);
        let check = KktCheck::evaluate(&g.problem, x, y, s);
        assert!(check.residuals.max() <= 1e-12 * (1.0 + check.primal_scale + check.dual_scale + check.gap_scale));
    }

    #[test]
    fn unbounded_objective_decreases_linearly() {
        let g = generate(&GenSpec::new(Kind::Unbounded, 10, 15, 3)).unwrap();
        let Plant::DualCertificate { x } = &g.plant else { panic!() };
        let f = |t: f64| g.problem.objective(&x.iter().map(|v| t * v).collect::<Vec<_>>());
        let (f1, f10, f100) = (f(1.0), f(10.0), f(100.0));
        assert!(f10 < f1 && f100 < f10);
        assert!((f100 - 100.0 * f1).abs() <= 1e-9 * f100.abs());
    }

    #[test]
    fn spec_validation() {
        assert!(GenSpec::new(Kind::Infeasible, 10, 10, 0).validate().is_err());
        assert!(GenSpec::new(Kind::Feasible, 10, 10, 0).validate().is_ok());
        assert!(GenSpec { density: 0.0, ..GenSpec::new(Kind::Feasible, 3, 3, 0) }.validate().is_err());
        assert!(GenSpec { density: 0.01, ..GenSpec::new(Kind::Feasible, 3, 3, 0) }.validate().is_err());
        assert!(gen_feasible(&GenSpec::new(Kind::Unbounded, 3, 3, 0)).is_err());
        assert_eq!(GenSpec::new(Kind::Feasible, 10, 15, 7).file_name(), "feasible_10x15_7.json");
    }
}

