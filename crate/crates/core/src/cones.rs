//! Primitive cones, Euclidean projections onto them and onto their duals,
//! and membership tests.

use std::ops::Range;

use crate::error::{check_len, Error, Result};
use crate::linalg::norm_inf;

/// Scalar residual at which the box-cone Newton iteration stops.
const BOX_NEWTON_TOL: f64 = 1e-12;
const BOX_NEWTON_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum Cone {
    /// All of ℝᵏ.
    Free(usize),
    /// The origin of ℝᵏ.
    Zero(usize),
    /// ℝᵏ₊.
    NonNegative(usize),
    /// `{(t, s) | t·lower ≤ s ≤ t·upper, t ≥ 0}`; infinite bounds are dropped.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `{(t, v) | ‖v‖₂ ≤ t}` of total dimension k.
    SecondOrder(usize),
}

impl Cone {
    pub fn dim(&self) -> usize {
        match self {
            Cone::Free(k) | Cone::Zero(k) | Cone::NonNegative(k) | Cone::SecondOrder(k) => *k,
            Cone::Box { lower, .. } => 1 + lower.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Cone::Box { lower, upper } => {
                if lower.is_empty() {
                    return Err(Error::Argument("box cone needs at least one bound pair".into()));
                }
                check_len("box cone upper bounds", lower.len(), upper.len())?;
                for (i, (&l, &u)) in lower.iter().zip(upper).enumerate() {
                    if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                        return Err(Error::Argument(format!("box cone bound {i} is invalid")));
                    }
                    if l > u || ((l.is_infinite() || u.is_infinite()) && l >= u) {
                        return Err(Error::Argument(format!(
                            "box cone bound {i}: lower {l} exceeds upper {u}"
                        )));
                    }
                }
                Ok(())
            }
            other if other.dim() == 0 => {
                Err(Error::Argument(format!("cone {other:?} has zero dimension")))
            }
            _ => Ok(()),
        }
    }

    /// Projects `x` onto this cone in place.
    pub fn project(&self, x: &mut [f64]) {
        match self {
            Cone::Free(_) => {}
            Cone::Zero(_) => x.fill(0.0),
            Cone::NonNegative(_) => x.iter_mut().for_each(|v| *v = v.max(0.0)),
            Cone::SecondOrder(_) => project_soc(x),
            Cone::Box { lower, upper } => {
                let (t, s) = x.split_first_mut().expect("box cone has positive dimension");
                *t = project_box_in_place(lower, upper, *t, s);
            }
        }
    }

    /// Projects `x` onto the dual cone in place.
    pub fn project_dual(&self, x: &mut [f64]) {
        match self {
            Cone::Free(_) => x.fill(0.0),
            Cone::Zero(_) => {}
            Cone::NonNegative(_) | Cone::SecondOrder(_) => self.project(x),
            Cone::Box { .. } => {
                // Moreau: Π_{K*}(x) = x + Π_K(−x)
                let mut neg: Vec<f64> = x.iter().map(|v| -v).collect();
                self.project(&mut neg);
                for (xi, ni) in x.iter_mut().zip(&neg) {
                    *xi += ni;
                }
            }
        }
    }
}

fn project_soc(x: &mut [f64]) {
    let Some((t, v)) = x.split_first_mut() else {
        return;
    };
    let norm_v = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm_v <= *t {
        return;
    }
    if norm_v <= -*t {
        *t = 0.0;
        v.fill(0.0);
        return;
    }
    let scale = 0.5 * (norm_v + *t);
    let ratio = scale / norm_v;
    v.iter_mut().for_each(|a| *a *= ratio);
    *t = scale;
}

/// Derivative (halved) of `t ↦ (t − t0)² + dist(s0, [t·l, t·u])²` and its slope.
fn box_gradient(lower: &[f64], upper: &[f64], t0: f64, s0: &[f64], t: f64) -> (f64, f64) {
    let mut g = t - t0;
    let mut h = 1.0;
    for ((&l, &u), &s) in lower.iter().zip(upper).zip(s0) {
        if l.is_finite() && s < t * l {
            g += (t * l - s) * l;
            h += l * l;
        } else if u.is_finite() && s > t * u {
            g += (t * u - s) * u;
            h += u * u;
        }
    }
    (g, h)
}

fn clamp_to_box(lower: &[f64], upper: &[f64], t: f64, s: &mut [f64]) {
    for ((v, &l), &u) in s.iter_mut().zip(lower).zip(upper) {
        if l.is_finite() && *v < t * l {
            *v = t * l;
        } else if u.is_finite() && *v > t * u {
            *v = t * u;
        }
    }
}

/// Projects `(t0, s)` onto the box cone; `s` is overwritten and the new `t` returned.
///
/// The optimal `s` for a fixed `t` is a clamp, which leaves a convex piecewise
/// quadratic in `t`. Its derivative is minimized by safeguarded Newton steps
/// inside a bracketing interval, falling back to bisection.
fn project_box_in_place(lower: &[f64], upper: &[f64], t0: f64, s: &mut [f64]) -> f64 {
    let scale = 1.0_f64.max(t0.abs()).max(
        s.iter()
            .zip(lower.iter().zip(upper))
            .map(|(v, (l, u))| {
                let b = if l.is_finite() { l.abs() } else { 0.0 };
                let c = if u.is_finite() { u.abs() } else { 0.0 };
                v.abs() * b.max(c)
            })
            .fold(0.0, f64::max),
    );
    let tol = BOX_NEWTON_TOL * scale;

    let (g0, _) = box_gradient(lower, upper, t0, s, 0.0);
    if g0 >= 0.0 {
        clamp_to_box(lower, upper, 0.0, s);
        return 0.0;
    }
    let mut lo = 0.0;
    let mut hi = 1.0_f64.max(t0);
    while box_gradient(lower, upper, t0, s, hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    let mut t = t0.max(0.0);
    if t < lo || t > hi {
        t = 0.5 * (lo + hi);
    }
    let mut converged = false;
    for _ in 0..BOX_NEWTON_MAX_ITERS {
        let (g, h) = box_gradient(lower, upper, t0, s, t);
        if g.abs() <= tol {
            converged = true;
            break;
        }
        if g < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let mut next = t - g / h;
        if next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if next == t {
            converged = true;
            break;
        }
        t = next;
    }
    if !converged {
        while hi - lo > f64::EPSILON * hi.max(1.0) {
            let mid = 0.5 * (lo + hi);
            let (g, _) = box_gradient(lower, upper, t0, s, mid);
            if g.abs() <= tol {
                lo = mid;
                hi = mid;
                break;
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        t = 0.5 * (lo + hi);
    }
    // The objective is quadratic on the final piece, so one more Newton
    // step lands on its minimizer exactly.
    let (g, h) = box_gradient(lower, upper, t0, s, t);
    if g != 0.0 {
        let polished = (t - g / h).max(0.0);
        if box_gradient(lower, upper, t0, s, polished).0.abs() <= g.abs() {
            t = polished;
        }
    }
    clamp_to_box(lower, upper, t, s);
    t
}

/// Euclidean projection of `(t, s)` onto `{(t, s) | t·l ≤ s ≤ t·u, t ≥ 0}`.
pub fn project_box_cone(lower: &[f64], upper: &[f64], t: f64, s: &[f64]) -> Result<(f64, Vec<f64>)> {
    let cone = Cone::Box {
        lower: lower.to_vec(),
        upper: upper.to_vec(),
    };
    cone.validate()?;
    check_len("box cone point", lower.len(), s.len())?;
    let mut s = s.to_vec();
    let t = project_box_in_place(lower, upper, t, &mut s);
    Ok((t, s))
}

/// Ordered Cartesian product of primitive cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    cones: Vec<Cone>,
    total_dim: usize,
}

impl ConeSpec {
    pub fn new(cones: Vec<Cone>) -> Result<Self> {
        for cone in &cones {
            cone.validate()?;
        }
        let total_dim = cones.iter().map(Cone::dim).sum();
        Ok(Self { cones, total_dim })
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Each primitive with the coordinate range it acts on.
    pub fn blocks(&self) -> impl Iterator<Item = (Range<usize>, &Cone)> {
        let mut start = 0;
        self.cones.iter().map(move |c| {
            let range = start..start + c.dim();
            start = range.end;
            (range, c)
        })
    }

    /// Blockwise projection; `x.len()` must equal `total_dim`.
    pub fn project_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.total_dim);
        for (range, cone) in self.blocks() {
            cone.project(&mut x[range]);
        }
    }

    /// Blockwise dual-cone projection; `x.len()` must equal `total_dim`.
    pub fn project_dual_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.total_dim);
        for (range, cone) in self.blocks() {
            cone.project_dual(&mut x[range]);
        }
    }

    /// `‖x − Π(x)‖∞` onto the cone.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let mut proj = x.to_vec();
        self.project_in_place(&mut proj);
        distance_inf(x, &proj)
    }

    /// `‖x − Π*(x)‖∞` onto the dual cone.
    pub fn dual_distance(&self, x: &[f64]) -> f64 {
        let mut proj = x.to_vec();
        self.project_dual_in_place(&mut proj);
        distance_inf(x, &proj)
    }
}

fn distance_inf(x: &[f64], proj: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(proj).map(|(a, b)| a - b).collect();
    norm_inf(&diff)
}

pub fn project_cone(spec: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_len("cone projection input", spec.total_dim, x.len())?;
    let mut out = x.to_vec();
    spec.project_in_place(&mut out);
    Ok(out)
}

pub fn project_dual_cone(spec: &ConeSpec, x: &[f64]) -> Result<Vec<f64>> {
    check_len("dual cone projection input", spec.total_dim, x.len())?;
    let mut out = x.to_vec();
    spec.project_dual_in_place(&mut out);
    Ok(out)
}

/// True iff `‖x − Π_C(x)‖∞ ≤ tol`; false on a dimension mismatch.
pub fn in_cone(spec: &ConeSpec, x: &[f64], tol: f64) -> bool {
    x.len() == spec.total_dim && spec.distance(x) <= tol
}

pub fn in_dual_cone(spec: &ConeSpec, x: &[f64], tol: f64) -> bool {
    x.len() == spec.total_dim && spec.dual_distance(x) <= tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, norm2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(cones: Vec<Cone>) -> ConeSpec {
        ConeSpec::new(cones).unwrap()
    }

    fn mixed_spec() -> ConeSpec {
        spec(vec![
            Cone::Zero(2),
            Cone::NonNegative(3),
            Cone::Box {
                lower: vec![-1.0, 0.0, f64::NEG_INFINITY],
                upper: vec![2.0, 0.5, 1.0],
            },
            Cone::SecondOrder(4),
            Cone::Free(1),
        ])
    }

    fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
    }

    #[test]
    fn orthant_and_free() {
        assert_eq!(project_cone(&spec(vec![Cone::NonNegative(2)]), &[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        let x = [1.0, -2.0, 3.5];
        assert_eq!(project_cone(&spec(vec![Cone::Free(3)]), &x).unwrap(), x.to_vec());
    }

    #[test]
    fn second_order_outside_case() {
        let p = project_cone(&spec(vec![Cone::SecondOrder(3)]), &[0.0, 3.0, 4.0]).unwrap();
        let expect = [2.5, 1.5, 2.0];
        for (a, b) in p.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // optimality: residual is in the polar cone and orthogonal to the result
        let res: Vec<f64> = [0.0, 3.0, 4.0].iter().zip(&p).map(|(a, b)| a - b).collect();
        assert!(dot(&res, &p).abs() < 1e-12);
        assert!(in_cone(&spec(vec![Cone::SecondOrder(3)]), &res.iter().map(|v| -v).collect::<Vec<_>>(), 1e-12));
    }

    #[test]
    fn second_order_matches_projected_gradient_oracle() {
        let cone = spec(vec![Cone::SecondOrder(3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = random_vec(&mut rng, 3);
            let p = project_cone(&cone, &x).unwrap();
            // Brute force: minimize ‖z − x‖ over a fine polar grid of the cone boundary and interior.
            let mut best = f64::INFINITY;
            for it in 0..=400 {
                let t = 6.0 * it as f64 / 400.0;
                for ir in 0..=40 {
                    let r = t * ir as f64 / 40.0;
                    for ia in 0..72 {
                        let a = std::f64::consts::TAU * ia as f64 / 72.0;
                        let z = [t, r * a.cos(), r * a.sin()];
                        let d: f64 = z.iter().zip(&x).map(|(u, v)| (u - v) * (u - v)).sum();
                        best = best.min(d.sqrt());
                    }
                }
            }
            let dist = norm2(&x.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>());
            assert!(dist <= best + 1e-12, "closed form {dist} worse than grid {best}");
            assert!(best - dist < 0.1);
        }
    }

    #[test]
    fn dual_of_zero_is_free_and_orthant_self_dual() {
        assert_eq!(project_dual_cone(&spec(vec![Cone::Zero(2)]), &[5.0, -3.0]).unwrap(), vec![5.0, -3.0]);
        assert_eq!(
            project_dual_cone(&spec(vec![Cone::NonNegative(2)]), &[-1.0, 2.0]).unwrap(),
            vec![0.0, 2.0]
        );
        assert_eq!(project_dual_cone(&spec(vec![Cone::Free(2)]), &[5.0, -3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn box_cone_cases() {
        // already inside
        let (t, s) = project_box_cone(&[0.0], &[1.0], 1.0, &[0.5]).unwrap();
        assert_eq!((t, s), (1.0, vec![0.5]));
        // hand-solved stationary point of (t+1)² + (s−2)² with s = t
        let (t, s) = project_box_cone(&[0.0], &[1.0], -1.0, &[2.0]).unwrap();
        assert!((t - 0.5).abs() < 1e-12 && (s[0] - 0.5).abs() < 1e-12);
        // input in the polar cone projects to the origin
        let (t, s) = project_box_cone(&[0.0, 0.0], &[1.0, 1.0], -5.0, &[-1.0, -0.5]).unwrap();
        assert_eq!(t, 0.0);
        assert_eq!(s, vec![0.0, 0.0]);
    }

    #[test]
    fn box_cone_projection_is_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let k = rng.random_range(1..6);
            let lower: Vec<f64> = (0..k)
                .map(|_| if rng.random_bool(0.15) { f64::NEG_INFINITY } else { rng.random_range(-2.0..1.0) })
                .collect();
            let upper: Vec<f64> = lower
                .iter()
                .map(|&l| {
                    if rng.random_bool(0.15) {
                        f64::INFINITY
                    } else {
                        l.max(-2.0) + rng.random_range(0.0..2.0)
                    }
                })
                .collect();
            let t0 = rng.random_range(-3.0..3.0);
            let s0 = random_vec(&mut rng, k);
            let (t, s) = project_box_cone(&lower, &upper, t0, &s0).unwrap();
            let cone = Cone::Box { lower: lower.clone(), upper: upper.clone() };
            let spec = spec(vec![cone]);
            let mut point = vec![t];
            point.extend_from_slice(&s);
            assert!(in_cone(&spec, &point, 1e-9));
            let mut res = vec![t0 - t];
            res.extend(s0.iter().zip(&s).map(|(a, b)| a - b));
            assert!(dot(&res, &point).abs() <= 1e-9 * (1.0 + norm2(&point) * norm2(&res)));
            let neg: Vec<f64> = res.iter().map(|v| -v).collect();
            // the residual lies in the polar cone: its negation is in K*
            assert!(in_dual_cone(&spec, &neg, 1e-9));
        }
    }

    #[test]
    fn membership() {
        assert!(in_cone(&spec(vec![Cone::NonNegative(2)]), &[0.0, 0.0], 0.0));
        assert!(!in_cone(&spec(vec![Cone::SecondOrder(3)]), &[1.0, 1.0, 1.0], 1e-9));
        assert!(!in_cone(&spec(vec![Cone::SecondOrder(3)]), &[1.0, 1.0], 1e-9));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ConeSpec::new(vec![Cone::NonNegative(0)]).is_err());
        assert!(ConeSpec::new(vec![Cone::Box { lower: vec![1.0], upper: vec![0.0] }]).is_err());
        assert!(ConeSpec::new(vec![Cone::Box { lower: vec![], upper: vec![] }]).is_err());
        assert!(ConeSpec::new(vec![Cone::Box { lower: vec![f64::INFINITY], upper: vec![f64::INFINITY] }]).is_err());
        assert!(project_cone(&spec(vec![Cone::Zero(2)]), &[1.0]).is_err());
        assert_eq!(mixed_spec().total_dim(), 2 + 3 + 4 + 4 + 1);
    }

    #[test]
    fn moreau_identity_on_random_draws() {
        let spec = mixed_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let x = random_vec(&mut rng, spec.total_dim());
            let p = project_cone(&spec, &x).unwrap();
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            let q = project_dual_cone(&spec, &neg).unwrap();
            for i in 0..x.len() {
                assert!((p[i] - q[i] - x[i]).abs() <= 1e-12);
            }
            assert!(dot(&p, &q).abs() <= 1e-12 * (1.0 + norm2(&p) * norm2(&q)));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn point() -> impl Strategy<Value = Vec<f64>> {
            proptest::collection::vec(-10.0f64..10.0, 14)
        }

        proptest! {
            #[test]
            fn idempotent(x in point()) {
                let spec = mixed_spec();
                let p = project_cone(&spec, &x).unwrap();
                let pp = project_cone(&spec, &p).unwrap();
                for (a, b) in p.iter().zip(&pp) {
                    prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
                }
            }

            #[test]
            fn nonexpansive(x in point(), y in point()) {
                let spec = mixed_spec();
                let px = project_cone(&spec, &x).unwrap();
                let py = project_cone(&spec, &y).unwrap();
                let dp: Vec<f64> = px.iter().zip(&py).map(|(a, b)| a - b).collect();
                let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                prop_assert!(norm2(&dp) <= norm2(&d) + 1e-12);
            }

            #[test]
            fn positively_homogeneous(x in point(), alpha in 0.01f64..50.0) {
                let spec = mixed_spec();
                let px = project_cone(&spec, &x).unwrap();
                let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
                let ps = project_cone(&spec, &scaled).unwrap();
                for (a, b) in ps.iter().zip(&px) {
                    prop_assert!((a - alpha * b).abs() <= 1e-12 * (1.0 + alpha) * (1.0 + b.abs()));
                }
            }

            #[test]
            fn self_dual_cones(x in proptest::collection::vec(-10.0f64..10.0, 7)) {
                let spec = spec(vec![Cone::NonNegative(3), Cone::SecondOrder(4)]);
                prop_assert_eq!(project_cone(&spec, &x).unwrap(), project_dual_cone(&spec, &x).unwrap());
            }

            #[test]
            fn projection_lands_in_cone(x in point()) {
                let spec = mixed_spec();
                prop_assert!(in_cone(&spec, &project_cone(&spec, &x).unwrap(), 1e-9));
            }
        }
    }
}
