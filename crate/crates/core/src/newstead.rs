//! The moduli space of stable rank-2 bundles with fixed odd determinant on a
//! genus-2 curve as the intersection of `sum x_i^2` and `sum lambda_i x_i^2`
//! in `P^5`, its candidate real forms, and sampling of their real points.
//!
//! A real form is the antiholomorphic involution `x -> eps * conj(x o sigma)`
//! with `sigma` the permutation induced by complex conjugation on the
//! `lambda_i` and `eps` a sign vector constant on each `sigma`-orbit. Its
//! fixed locus is parametrized by `x = T u` with `u` real, and the two
//! quadrics pull back to real symmetric forms `A_0`, `A_1`.

use nalgebra::{DMatrix, Matrix6, Vector6};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::curve::RealHyperellipticCurve;
use crate::error::{LabError, Result};
use crate::poly;

/// Normalized quadric residual accepted for a sampled point.
pub const RESIDUAL_TOL: f64 = 1e-9;
/// Second singular value of the derivative required for smoothness.
pub const RANK_TOL: f64 = 1e-6;
/// Planes solved per parallel batch.
const PLANE_BATCH: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadricPencil {
    /// Weierstrass x-coordinates: real ones ascending, then conjugate pairs
    /// adjacent with the upper member first.
    pub lambda: [Complex64; 6],
    /// `sigma[i]` is the index of `conj(lambda_i)`.
    pub sigma: [usize; 6],
    pub q0: [Complex64; 6],
    pub q1: [Complex64; 6],
}

impl QuadricPencil {
    pub fn from_lambdas(lambda: [Complex64; 6], tol: f64) -> Result<Self> {
        let close =
            |a: Complex64, b: Complex64| (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()));
        for i in 0..6 {
            for j in i + 1..6 {
                if close(lambda[i], lambda[j]) {
                    return Err(LabError::CoincidentLambda(i, j));
                }
            }
        }
        let mut sigma = [0; 6];
        for i in 0..6 {
            sigma[i] = (0..6)
                .find(|&j| close(lambda[j], lambda[i].conj()))
                .ok_or_else(|| {
                    LabError::Invalid(format!("lambda_{i} has no conjugate in the set"))
                })?;
        }
        Ok(QuadricPencil {
            lambda,
            sigma,
            q0: [Complex64::new(1.0, 0.0); 6],
            q1: lambda,
        })
    }

    pub fn is_real_index(&self, i: usize) -> bool {
        self.sigma[i] == i
    }
}

pub fn build_pencil(curve: &RealHyperellipticCurve) -> Result<QuadricPencil> {
    let w = curve.weierstrass();
    let lambda: [Complex64; 6] = std::array::from_fn(|i| w[i].x);
    let mut pencil = QuadricPencil::from_lambdas(lambda, curve.tolerance())?;
    pencil.sigma = std::array::from_fn(|i| w[i].partner);
    Ok(pencil)
}

#[derive(Clone, Debug)]
pub struct RealForm {
    pub epsilon: [i8; 6],
    pub sigma: [usize; 6],
    /// `x = T u` for real `u`.
    pub t: Matrix6<Complex64>,
    /// Pulled-back quadrics, each scaled so its largest entry is 1.
    pub a0: Matrix6<f64>,
    pub a1: Matrix6<f64>,
}

impl RealForm {
    fn new(pencil: &QuadricPencil, epsilon: [i8; 6]) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let i_unit = Complex64::new(0.0, 1.0);
        let mut t = Matrix6::<Complex64>::zeros();
        for i in 0..6 {
            let j = pencil.sigma[i];
            let e = f64::from(epsilon[i]);
            if j == i {
                t[(i, i)] = if e > 0.0 { one } else { i_unit };
            } else if i < j {
                t[(i, i)] = one;
                t[(i, j)] = i_unit;
                t[(j, i)] = one * e;
                t[(j, j)] = -i_unit * e;
            }
        }
        let pull = |d: &[Complex64; 6]| {
            let dm = Matrix6::from_diagonal(&Vector6::from_column_slice(d));
            let a = (t.transpose() * dm * t).map(|z| z.re);
            let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            a / scale
        };
        RealForm {
            epsilon,
            sigma: pencil.sigma,
            a0: pull(&pencil.q0),
            a1: pull(&pencil.q1),
            t,
        }
    }

    /// `x -> eps * conj(x o sigma)`.
    pub fn involution(&self, x: &[Complex64; 6]) -> [Complex64; 6] {
        std::array::from_fn(|i| x[self.sigma[i]].conj() * f64::from(self.epsilon[i]))
    }

    pub fn to_complex(&self, u: &[f64; 6]) -> [Complex64; 6] {
        let x = self.t * Vector6::from_column_slice(u).map(|v| Complex64::new(v, 0.0));
        std::array::from_fn(|i| x[i])
    }

    pub fn residuals(&self, u: &[f64; 6]) -> [f64; 2] {
        let v = Vector6::from_column_slice(u);
        let n2 = v.norm_squared();
        [
            (v.transpose() * self.a0 * v)[0].abs() / n2,
            (v.transpose() * self.a1 * v)[0].abs() / n2,
        ]
    }

    /// Gradients `2 A_k u` of the two real quadrics.
    pub fn gradients(&self, u: &[f64; 6]) -> [[f64; 6]; 2] {
        let v = Vector6::from_column_slice(u);
        let g0 = self.a0 * v * 2.0;
        let g1 = self.a1 * v * 2.0;
        [
            std::array::from_fn(|i| g0[i]),
            std::array::from_fn(|i| g1[i]),
        ]
    }

    /// `u^T A_k u`.
    pub fn value(&self, k: usize, u: &[f64; 6]) -> f64 {
        let v = Vector6::from_column_slice(u);
        let a = if k == 0 { &self.a0 } else { &self.a1 };
        (v.transpose() * a * v)[0]
    }

    pub fn epsilon_string(&self) -> String {
        self.epsilon
            .iter()
            .map(|&e| if e > 0 { '+' } else { '-' })
            .collect()
    }
}

/// Sign vectors with `eps_0 = +1`, constant on `sigma`-orbits, whose
/// involution maps the pencil to its conjugate.
pub fn enumerate_real_forms(pencil: &QuadricPencil) -> Vec<RealForm> {
    let mut forms = Vec::new();
    for mask in 0u32..32 {
        let mut eps = [1i8; 6];
        for (i, e) in eps.iter_mut().enumerate().skip(1) {
            if mask >> (i - 1) & 1 == 1 {
                *e = -1;
            }
        }
        let compatible = (0..6).all(|i| eps[i] == eps[pencil.sigma[i]]);
        let preserves = (0..6).all(|i| {
            let (a, b) = (pencil.lambda[pencil.sigma[i]].conj(), pencil.lambda[i]);
            (a - b).norm() <= 1e-9 * (1.0 + b.norm())
        });
        if compatible && preserves {
            forms.push(RealForm::new(pencil, eps));
        }
    }
    forms
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledPoint {
    /// Unit vector in the real coordinates of the form.
    pub u: [f64; 6],
    pub residuals: [f64; 2],
}

fn gaussian_vector(rng: &mut ChaCha8Rng) -> Vector6<f64> {
    Vector6::from_fn(|_, _| StandardNormal.sample(rng))
}

fn scale(p: &[f64], c: f64) -> Vec<f64> {
    p.iter().map(|v| v * c).collect()
}

/// Real points of the form on the plane spanned by `p, q, r`: the point
/// `s p + t q + r` lies on both quadrics when `t` is a root of the
/// resultant in `s` of the two restricted conics.
fn solve_plane(form: &RealForm, basis: [Vector6<f64>; 3]) -> Vec<SampledPoint> {
    let conic = |a: &Matrix6<f64>| {
        let mut m = [[0.0; 3]; 3];
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate() {
                m[i][j] = (bi.transpose() * a * bj)[0];
            }
        }
        m
    };
    let (m1, m2) = (conic(&form.a0), conic(&form.a1));
    // alpha s^2 + beta(t) s + gamma(t)
    let parts = |m: &[[f64; 3]; 3]| {
        (
            m[0][0],
            vec![2.0 * m[0][2], 2.0 * m[0][1]],
            vec![m[2][2], 2.0 * m[1][2], m[1][1]],
        )
    };
    let (a1, b1, g1) = parts(&m1);
    let (a2, b2, g2) = parts(&m2);
    let ag = poly::sub(&scale(&g2, a1), &scale(&g1, a2));
    let ab = poly::sub(&scale(&b2, a1), &scale(&b1, a2));
    let bg = poly::sub(&poly::mul(&b1, &g2), &poly::mul(&b2, &g1));
    let resultant = poly::sub(&poly::mul(&ag, &ag), &poly::mul(&ab, &bg));

    let eval = |k: usize, s: f64, t: f64| {
        let u = basis[0] * s + basis[1] * t + basis[2];
        let a = if k == 0 { &form.a0 } else { &form.a1 };
        ((u.transpose() * a * u)[0], a * u * 2.0)
    };
    let mut out = Vec::new();
    for root in poly::roots(&resultant) {
        if root.im.abs() > 1e-6 * (1.0 + root.re.abs()) {
            continue;
        }
        let t = root.re;
        let (c2, c1, c0) = (a1, poly::eval_real(&b1, t), poly::eval_real(&g1, t));
        let candidates: Vec<f64> = poly::roots(&[c0, c1, c2])
            .into_iter()
            .filter(|s| s.im.abs() <= 1e-6 * (1.0 + s.re.abs()))
            .map(|s| s.re)
            .collect();
        let Some(mut s) = candidates
            .into_iter()
            .min_by(|x, y| eval(1, *x, t).0.abs().total_cmp(&eval(1, *y, t).0.abs()))
        else {
            continue;
        };
        let mut t = t;
        let size = |s: f64, t: f64| eval(0, s, t).0.abs() + eval(1, s, t).0.abs();
        for _ in 0..8 {
            let (f0, g0) = eval(0, s, t);
            let (f1, g1) = eval(1, s, t);
            let j = [
                [g0.dot(&basis[0]), g0.dot(&basis[1])],
                [g1.dot(&basis[0]), g1.dot(&basis[1])],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 {
                break;
            }
            let ds = (f0 * j[1][1] - f1 * j[0][1]) / det;
            let dt = (j[0][0] * f1 - j[1][0] * f0) / det;
            if size(s - ds, t - dt).partial_cmp(&size(s, t)) != Some(std::cmp::Ordering::Less) {
                break;
            }
            s -= ds;
            t -= dt;
        }
        let u = (basis[0] * s + basis[1] * t + basis[2]).normalize();
        let u: [f64; 6] = std::array::from_fn(|i| u[i]);
        let residuals = form.residuals(&u);
        if residuals[0] <= RESIDUAL_TOL && residuals[1] <= RESIDUAL_TOL {
            out.push(SampledPoint { u, residuals });
        }
    }
    out
}

/// Intersect the form with random real planes until `count` real points
/// are found or `plane_budget` planes have been tried. Plane `j` is drawn
/// from stream `j` of a generator keyed by `seed`, so the output does not
/// depend on scheduling.
pub fn sample_real_points(
    form: &RealForm,
    count: usize,
    plane_budget: usize,
    seed: u64,
) -> Result<Vec<SampledPoint>> {
    let mut points = Vec::new();
    let mut next = 0;
    while points.len() < count && next < plane_budget {
        let end = (next + PLANE_BATCH).min(plane_budget);
        let batch: Vec<Vec<SampledPoint>> = (next..end)
            .into_par_iter()
            .map(|j| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(j as u64);
                let basis = [0; 3].map(|_| gaussian_vector(&mut rng));
                solve_plane(form, basis)
            })
            .collect();
        points.extend(batch.into_iter().flatten());
        next = end;
    }
    if points.is_empty() {
        return Err(LabError::NoRealPointsFound(plane_budget));
    }
    points.truncate(count);
    Ok(points)
}

/// Second singular value of the derivative of `(Q_0, Q_1)` at `u`; must
/// exceed [`RANK_TOL`] for the real locus to be a 3-manifold near `u`.
pub fn smoothness_check(form: &RealForm, u: &[f64; 6]) -> Result<f64> {
    let r = form.residuals(u);
    if r[0].max(r[1]) > RESIDUAL_TOL * 1e3 {
        return Err(LabError::NotOnVariety(r[0].max(r[1])));
    }
    let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit: [f64; 6] = std::array::from_fn(|i| u[i] / n);
    let [g0, g1] = form.gradients(&unit);
    let j = DMatrix::from_row_slice(2, 6, &[g0, g1].concat());
    let sv = j.svd(false, false).singular_values;
    let second = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if second <= RANK_TOL {
        return Err(LabError::SingularPoint(second));
    }
    Ok(second)
}

fn projective_distance(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    let minus: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    let plus: f64 = a.iter().zip(b).map(|(x, y)| (x + y) * (x + y)).sum();
    minus.min(plus).sqrt()
}

/// Component count of a point cloud: one plus the number of minimum
/// spanning tree edges longer than five times the median edge. Weak
/// evidence only.
pub fn components_estimate(points: &[SampledPoint]) -> usize {
    let n = points.len();
    if n < 2 {
        return n;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut edges = Vec::with_capacity(n - 1);
    best[0] = 0.0;
    for _ in 0..n {
        let (v, _) = (0..n)
            .filter(|&i| !in_tree[i])
            .map(|i| (i, best[i]))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("vertices remain");
        in_tree[v] = true;
        if v != 0 {
            edges.push(best[v]);
        }
        for w in 0..n {
            if !in_tree[w] {
                best[w] = best[w].min(projective_distance(&points[v].u, &points[w].u));
            }
        }
    }
    edges.sort_by(f64::total_cmp);
    let median = edges[edges.len() / 2];
    1 + edges.iter().filter(|&&e| e > 5.0 * median).count()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FormReport {
    pub epsilon: String,
    pub points_found: usize,
    pub residual_max: Option<f64>,
    /// Smallest second singular value of the derivative over the sample.
    pub min_rank_margin: Option<f64>,
    pub singular_points: usize,
    pub components_estimate: Option<usize>,
    pub planes_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NewsteadReport {
    pub lambda: Vec<[f64; 2]>,
    pub forms: Vec<FormReport>,
    pub note: &'static str,
}

pub fn form_report(
    form: &RealForm,
    count: usize,
    plane_budget: usize,
    seed: u64,
) -> Result<FormReport> {
    let points = match sample_real_points(form, count, plane_budget, seed) {
        Ok(p) => p,
        Err(LabError::NoRealPointsFound(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let mut margin: Option<f64> = None;
    let mut singular = 0;
    for p in &points {
        match smoothness_check(form, &p.u) {
            Ok(s) => margin = Some(margin.map_or(s, |m| m.min(s))),
            Err(LabError::SingularPoint(_)) => singular += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(FormReport {
        epsilon: form.epsilon_string(),
        points_found: points.len(),
        residual_max: points
            .iter()
            .map(|p| p.residuals[0].max(p.residuals[1]))
            .reduce(f64::max),
        min_rank_margin: margin,
        singular_points: singular,
        components_estimate: (!points.is_empty()).then(|| components_estimate(&points)),
        planes_budget: plane_budget,
    })
}

pub fn newstead_report(
    curve: &RealHyperellipticCurve,
    count: usize,
    plane_budget: usize,
    seed: u64,
) -> Result<NewsteadReport> {
    let pencil = build_pencil(curve)?;
    let forms = enumerate_real_forms(&pencil)
        .iter()
        .map(|f| form_report(f, count, plane_budget, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(NewsteadReport {
        lambda: pencil.lambda.iter().map(|z| [z.re, z.im]).collect(),
        forms,
        note:
            "components_estimate is a nearest-neighbour heuristic on a finite sample, not a proof",
    })
}
