//! Linear equivalence of effective divisors of degree at most 4, decided by
//! interpolation in the complete linear systems `|kH|`, and the sixteen
//! two-torsion classes `O(w_i - w_j)`.
//!
//! `L(kH)` is spanned by `1, x, ..., x^k` and `y, x y, ..., x^(k-3) y`, so it
//! has dimension `2k - 1` for `k >= 2`. Since `D' + iota(D') ~ dH` for any
//! effective `D'` of degree `d`, two degree-`d` divisors are equivalent
//! exactly when `D + iota(D')` is cut out by a function in `L(dH)`, i.e. when
//! the evaluation matrix at those `2d` points has a nontrivial kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::curve::{iota, CurvePoint, RealHyperellipticCurve};
use crate::divisors::{Divisor, DivisorTransform};
use crate::error::{LabError, Result};

/// Kernel declared when `sigma_min < KERNEL_THRESHOLD * sigma_max`.
pub const KERNEL_THRESHOLD: f64 = 1e-8;
/// Decisions closer than this factor to the threshold are inconclusive.
pub const MIN_DECISION_GAP: f64 = 1e2;
/// Relative step used to separate repeated points.
pub const JITTER: f64 = 1e-6;
pub const MAX_DEGREE: i64 = 4;

/// `dim L(kH)`.
pub fn basis_dim(k: usize) -> usize {
    match k {
        0 => 1,
        1 => 2,
        k => 2 * k - 1,
    }
}

/// Vanishing conditions of `L(kH)` at a list of points.
///
/// A point of multiplicity `m` away from the branch points contributes the
/// Taylor coefficients of order `< m` in the local parameter `x - x_0`. A
/// repeated Weierstrass point or point at infinity `q` whose `iota`-partner
/// is also present (a Weierstrass point is its own partner) is handled by
/// replacing `q + iota(q)` with `p + iota(p)` for a nearby `p`; both lie in
/// `|H|` so the class is unchanged. Any other such repetition is resolved by
/// moving one copy along the curve, which perturbs the class and is flagged.
#[derive(Clone, Debug)]
pub struct InterpolationSystem {
    k: usize,
    matrix: DMatrix<Complex64>,
    column_scale: Vec<f64>,
    pub jittered: bool,
    pub class_perturbed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    /// `sigma_min / sigma_max` of the evaluation matrix.
    pub sigma_ratio: f64,
    /// Distance of the decision from the threshold (always `>= 1e2`).
    pub gap: f64,
    pub jittered: bool,
    pub class_perturbed: bool,
}

impl InterpolationSystem {
    pub fn new(curve: &RealHyperellipticCurve, points: &[CurvePoint], k: usize) -> Result<Self> {
        let (conditions, jittered, class_perturbed) = resolve_conditions(curve, points)?;
        let cols = basis_dim(k);
        let mut rows = Vec::with_capacity(points.len());
        for (p, mult) in &conditions {
            match (*p, *mult) {
                (p, 1) => rows.push(evaluation_row(curve, &p, k)),
                (CurvePoint::Affine { x, y }, m) => rows.extend(osculating_rows(curve, x, y, k, m)),
                (CurvePoint::Infinity(_), _) => unreachable!("repeats at infinity are separated"),
            }
        }
        let mut matrix = DMatrix::<Complex64>::zeros(rows.len(), cols);
        for (r, row) in rows.into_iter().enumerate() {
            let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (c, z) in row.into_iter().enumerate() {
                matrix[(r, c)] = z / norm;
            }
        }
        let mut column_scale = vec![1.0; cols];
        for (c, scale) in column_scale.iter_mut().enumerate() {
            let m = matrix.column(c).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            if m > 0.0 {
                *scale = m;
                matrix.column_mut(c).iter_mut().for_each(|z| *z /= m);
            }
        }
        Ok(InterpolationSystem {
            k,
            matrix,
            column_scale,
            jittered,
            class_perturbed,
        })
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Singular values, ascending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self
            .matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        sv.sort_by(f64::total_cmp);
        sv
    }

    /// Numerical rank at the kernel threshold.
    pub fn rank(&self) -> usize {
        let sv = self.singular_values();
        let max = sv.last().copied().unwrap_or(0.0);
        sv.iter().filter(|&&s| s > KERNEL_THRESHOLD * max).count()
    }

    pub fn decide(&self) -> Result<EquivalenceVerdict> {
        let sv = self.singular_values();
        let max = *sv.last().expect("at least one column");
        let min = sv[0];
        let ratio = min / max;
        let (equivalent, gap) = if ratio < KERNEL_THRESHOLD {
            let next = sv.get(1).copied().unwrap_or(max);
            (
                true,
                if min == 0.0 {
                    f64::INFINITY
                } else {
                    next / min
                },
            )
        } else {
            (false, ratio / KERNEL_THRESHOLD)
        };
        if gap < MIN_DECISION_GAP {
            return Err(LabError::IllConditioned { gap });
        }
        Ok(EquivalenceVerdict {
            equivalent,
            sigma_ratio: ratio,
            gap,
            jittered: self.jittered,
            class_perturbed: self.class_perturbed,
        })
    }

    /// Coefficients, in the monomial basis `1..x^k, y..x^(k-3) y`, of the
    /// function spanning the numerical kernel, normalized so its largest
    /// coefficient is 1.
    pub fn kernel_function(&self) -> Vec<Complex64> {
        let n = self.cols();
        // pad to a square system so the right singular vectors are complete
        let rows = self.rows().max(n);
        let mut m = DMatrix::<Complex64>::zeros(rows, n);
        m.view_mut((0, 0), (self.rows(), n)).copy_from(&self.matrix);
        let svd = m.svd(false, true);
        let v_t = svd.v_t.expect("requested");
        let (idx, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let mut coeffs: Vec<Complex64> = (0..n)
            .map(|c| v_t[(idx, c)].conj() / self.column_scale[c])
            .collect();
        let pivot = *coeffs
            .iter()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("nonempty");
        coeffs.iter_mut().for_each(|z| *z /= pivot);
        coeffs
    }

    pub fn degree_k(&self) -> usize {
        self.k
    }
}

/// Basis values at `p`, scaled by `max(1, |x|)^-k`; at infinity this is the
/// limit of that scaling.
fn evaluation_row(curve: &RealHyperellipticCurve, p: &CurvePoint, k: usize) -> Vec<Complex64> {
    let mut row = vec![Complex64::new(0.0, 0.0); basis_dim(k)];
    match *p {
        CurvePoint::Affine { x, y } => {
            let m = x.norm().max(1.0);
            let u = x / m;
            let y_scaled = y / (m * m * m);
            for (j, entry) in row.iter_mut().enumerate().take(k + 1) {
                *entry = u.powu(j as u32) * m.powi(j as i32 - k as i32);
            }
            if k >= 3 {
                for j in 0..=k - 3 {
                    row[k + 1 + j] = u.powu(j as u32) * y_scaled * m.powi(j as i32 + 3 - k as i32);
                }
            }
        }
        CurvePoint::Infinity(b) => {
            row[k] = Complex64::new(1.0, 0.0);
            if k >= 3 {
                row[k + 1 + (k - 3)] = curve.infinity_slope() * b.value();
            }
        }
    }
    if k == 0 {
        row[0] = Complex64::new(1.0, 0.0);
    }
    row
}

/// Move `q` along the curve by a relative step `delta` in `x`.
fn nudge(curve: &RealHyperellipticCurve, q: &CurvePoint, delta: f64) -> CurvePoint {
    match *q {
        CurvePoint::Affine { x, y } => {
            let x2 = x + delta * (1.0 + x.norm());
            let y2 = curve.f(x2).sqrt();
            let y2 = if (y2 - y).norm() <= (-y2 - y).norm() {
                y2
            } else {
                -y2
            };
            CurvePoint::affine(x2, y2)
        }
        CurvePoint::Infinity(b) => {
            let x2 = Complex64::new(1.0 / delta, 0.0);
            let y2 = curve.f(x2).sqrt();
            let target = curve.infinity_slope() * b.value();
            let y2 = if (y2 / (x2 * x2 * x2) - target).norm()
                <= (-y2 / (x2 * x2 * x2) - target).norm()
            {
                y2
            } else {
                -y2
            };
            CurvePoint::affine(x2, y2)
        }
    }
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Taylor coefficients of orders `0..m` of the basis of `L(kH)` at the
/// affine point `(x0, y0)`, `y0 != 0`, in the parameter `t = x - x0`.
fn osculating_rows(
    curve: &RealHyperellipticCurve,
    x0: Complex64,
    y0: Complex64,
    k: usize,
    m: usize,
) -> Vec<Vec<Complex64>> {
    let a = curve.coeffs();
    let x_pow = |j: usize, r: usize| {
        if r > j {
            Complex64::new(0.0, 0.0)
        } else {
            x0.powu((j - r) as u32) * binomial(j, r)
        }
    };
    let f_series: Vec<Complex64> = (0..m)
        .map(|n| (n..7).map(|i| x_pow(i, n) * a[i]).sum())
        .collect();
    // y^2 = f order by order
    let mut y_series = vec![y0];
    for n in 1..m {
        let cross: Complex64 = (1..n).map(|i| y_series[i] * y_series[n - i]).sum();
        y_series.push((f_series[n] - cross) / (y0 * 2.0));
    }
    (0..m)
        .map(|r| {
            let mut row = vec![Complex64::new(0.0, 0.0); basis_dim(k)];
            for (j, entry) in row.iter_mut().enumerate().take(k + 1) {
                *entry = x_pow(j, r);
            }
            if k >= 3 {
                for j in 0..=k - 3 {
                    row[k + 1 + j] = (0..=r).map(|s| x_pow(j, s) * y_series[r - s]).sum();
                }
            }
            row
        })
        .collect()
}

type Conditions = (Vec<(CurvePoint, usize)>, bool, bool);

/// Group points into (point, multiplicity), first separating repeats that
/// sit on a branch point or at infinity.
fn resolve_conditions(curve: &RealHyperellipticCurve, points: &[CurvePoint]) -> Result<Conditions> {
    for p in points {
        curve.check_on_curve(p)?;
    }
    let mut pts = points.to_vec();
    let (mut jittered, mut perturbed) = (false, false);
    let mut step = 0u32;
    let limit = pts.len() * pts.len() + 1;
    loop {
        let needs_split = |p: &CurvePoint| p.is_infinite() || curve.near_weierstrass(p).is_some();
        let repeat = (0..pts.len())
            .flat_map(|i| (i + 1..pts.len()).map(move |j| (i, j)))
            .find(|&(i, j)| needs_split(&pts[i]) && curve.same_point(&pts[i], &pts[j]));
        let Some((i, j)) = repeat else { break };
        step += 1;
        if step as usize > limit {
            return Err(LabError::Invalid(
                "could not separate repeated points".into(),
            ));
        }
        jittered = true;
        let q = pts[i];
        let delta = JITTER * step as f64;
        let partner = if curve.same_point(&iota(&q), &q) {
            Some(j)
        } else {
            (0..pts.len()).find(|&l| l != i && l != j && curve.same_point(&pts[l], &iota(&q)))
        };
        let p = nudge(curve, &q, delta);
        match partner {
            Some(l) => {
                pts[i] = p;
                pts[l] = iota(&p);
            }
            None => {
                pts[j] = p;
                perturbed = true;
            }
        }
    }
    let mut groups: Vec<(CurvePoint, usize)> = Vec::new();
    for p in pts {
        match groups.iter_mut().find(|(q, _)| curve.same_point(q, &p)) {
            Some(g) => g.1 += 1,
            None => groups.push((p, 1)),
        }
    }
    Ok((groups, jittered, perturbed))
}

/// Is the effective divisor `points` (degree `2k`) a member of `|kH|`?
pub fn in_linear_system(
    curve: &RealHyperellipticCurve,
    points: &[CurvePoint],
    k: usize,
) -> Result<EquivalenceVerdict> {
    if points.len() != 2 * k {
        return Err(LabError::DegreeMismatch(points.len() as i64, 2 * k as i64));
    }
    if k == 0 {
        return Ok(EquivalenceVerdict {
            equivalent: true,
            sigma_ratio: 0.0,
            gap: f64::INFINITY,
            jittered: false,
            class_perturbed: false,
        });
    }
    InterpolationSystem::new(curve, points, k)?.decide()
}

pub fn is_linearly_equivalent(
    curve: &RealHyperellipticCurve,
    d: &Divisor,
    d_prime: &Divisor,
) -> Result<EquivalenceVerdict> {
    let deg = d.degree();
    if deg != d_prime.degree() {
        return Err(LabError::DegreeMismatch(deg, d_prime.degree()));
    }
    if deg > MAX_DEGREE {
        return Err(LabError::DegreeTooLarge(deg));
    }
    let mut pts = d.points();
    pts.extend(d_prime.transform(curve, &DivisorTransform::Iota)?.points());
    in_linear_system(curve, &pts, deg as usize)
}

/// A square root of the trivial bundle: `O(w_i - w_j)` for `i < j`, or the
/// identity when `pair` is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TwoTorsionClass {
    pub pair: Option<(usize, usize)>,
    pub is_real: bool,
}

impl TwoTorsionClass {
    /// Degree-2 representative: `w_i + w_j`, or `2 w_0` for the identity
    /// (both lie in the class of `T + H`).
    pub fn representative(&self, curve: &RealHyperellipticCurve) -> Divisor {
        let entries = match self.pair {
            Some((i, j)) => vec![
                (curve.weierstrass_point(i), 1),
                (curve.weierstrass_point(j), 1),
            ],
            None => vec![(curve.weierstrass_point(0), 2)],
        };
        Divisor::from_entries(curve, entries).expect("Weierstrass points lie on the curve")
    }

    pub fn tau_image(&self, curve: &RealHyperellipticCurve) -> TwoTorsionClass {
        let w = curve.weierstrass();
        let pair = self.pair.map(|(i, j)| {
            let (a, b) = (w[i].partner, w[j].partner);
            (a.min(b), a.max(b))
        });
        TwoTorsionClass {
            pair,
            is_real: self.is_real,
        }
    }

    /// `2 (T + H)` lies in `|2H|`.
    pub fn doubling(&self, curve: &RealHyperellipticCurve) -> Result<EquivalenceVerdict> {
        let rep = self.representative(curve);
        let mut pts = rep.points();
        pts.extend(rep.points());
        in_linear_system(curve, &pts, 2)
    }
}

/// All sixteen classes, identity first, then pairs in lexicographic order.
/// Consecutive nontrivial classes are checked to be inequivalent.
pub fn two_torsion(curve: &RealHyperellipticCurve) -> Result<Vec<TwoTorsionClass>> {
    let w = curve.weierstrass();
    let mut classes = vec![TwoTorsionClass {
        pair: None,
        is_real: true,
    }];
    for i in 0..w.len() {
        for j in i + 1..w.len() {
            let is_real = (w[i].partner == i && w[j].partner == j) || w[i].partner == j;
            classes.push(TwoTorsionClass {
                pair: Some((i, j)),
                is_real,
            });
        }
    }
    for pair in classes[1..].windows(2) {
        let v = is_linearly_equivalent(
            curve,
            &pair[0].representative(curve),
            &pair[1].representative(curve),
        )?;
        if v.equivalent {
            return Err(LabError::Invalid(format!(
                "two-torsion classes {:?} and {:?} coincide",
                pair[0].pair, pair[1].pair
            )));
        }
    }
    Ok(classes)
}

pub fn real_two_torsion_count(curve: &RealHyperellipticCurve) -> Result<usize> {
    Ok(two_torsion(curve)?.iter().filter(|c| c.is_real).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Region;
    use crate::fixtures;
    use crate::poly;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Zeros of `P(x) + Q(x) y` with real polynomial coefficients, found
    /// from `P^2 - Q^2 f = 0` and `y = -P / Q`. Independent of the
    /// interpolation code: it is the divisor of a known member of `L(kH)`.
    fn zeros_of_function(curve: &RealHyperellipticCurve, p: &[f64], q: &[f64]) -> Vec<CurvePoint> {
        let f = curve.coeffs();
        let res = poly::sub(&poly::mul(p, p), &poly::mul(&poly::mul(q, q), f));
        poly::roots(&res)
            .into_iter()
            .map(|x| {
                let y = -poly::eval(p, x) / poly::eval(q, x);
                CurvePoint::affine(x, y)
            })
            .collect()
    }

    fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> Vec<f64> {
        (0..=deg).map(|_| rng.random_range(-2.0..2.0)).collect()
    }

    #[test]
    fn dimensions() {
        assert_eq!([0, 1, 2, 3, 4].map(basis_dim), [1, 2, 3, 5, 7]);
    }

    #[test]
    fn generic_rank_is_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for curve in fixtures::all() {
            for k in 2..=4 {
                for _ in 0..20 {
                    let pts: Vec<_> = (0..2 * k + 2)
                        .map(|_| curve.sample(Region::Generic, &mut rng).unwrap())
                        .collect();
                    let sys = InterpolationSystem::new(&curve, &pts, k).unwrap();
                    assert_eq!(sys.rank(), 2 * k - 1);
                }
            }
        }
    }

    #[test]
    fn zero_sets_of_functions_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for curve in fixtures::all() {
            for k in 3..=4 {
                for _ in 0..20 {
                    let p = random_poly(&mut rng, k);
                    let q = random_poly(&mut rng, k - 3);
                    let zeros = zeros_of_function(&curve, &p, &q);
                    assert_eq!(zeros.len(), 2 * k);
                    let v = in_linear_system(&curve, &zeros, k).unwrap();
                    assert!(v.equivalent && v.gap >= MIN_DECISION_GAP);
                    let sys = InterpolationSystem::new(&curve, &zeros, k).unwrap();
                    assert_eq!(sys.rank(), 2 * k - 2);
                    // the kernel is the function itself
                    let got = sys.kernel_function();
                    let mut want: Vec<Complex64> = p
                        .iter()
                        .chain(&q)
                        .map(|&c| Complex64::new(c, 0.0))
                        .collect();
                    let piv = *want
                        .iter()
                        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                        .unwrap();
                    want.iter_mut().for_each(|z| *z /= piv);
                    let scale = got
                        .iter()
                        .zip(&want)
                        .find(|(_, w)| w.norm() > 0.5)
                        .map(|(g, w)| g / w)
                        .unwrap();
                    for (g, w) in got.iter().zip(&want) {
                        assert!((g - w * scale).norm() < 1e-6, "{got:?} vs {want:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn reflexive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for curve in fixtures::all() {
            for _ in 0..50 {
                let pts: Vec<_> = (0..3)
                    .map(|_| curve.sample(Region::Generic, &mut rng).unwrap())
                    .collect();
                let d = Divisor::from_points(&curve, &pts).unwrap();
                assert!(is_linearly_equivalent(&curve, &d, &d).unwrap().equivalent);
            }
        }
    }

    #[test]
    fn moving_a_fibre_is_an_equivalence() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for curve in fixtures::all() {
            for _ in 0..50 {
                let [p, q, r] = [0; 3].map(|_| curve.sample(Region::Generic, &mut rng).unwrap());
                let d = Divisor::from_points(&curve, &[p, iota(&p), q]).unwrap();
                let d2 = Divisor::from_points(&curve, &[r, iota(&r), q]).unwrap();
                let v = is_linearly_equivalent(&curve, &d, &d2).unwrap();
                assert!(v.equivalent);
                // witness: D + iota(D') is cut out by (x - x_p)(x - x_q)(x - x_r)
                let mut pts = d.points();
                pts.extend(
                    d2.transform(&curve, &DivisorTransform::Iota)
                        .unwrap()
                        .points(),
                );
                let got = InterpolationSystem::new(&curve, &pts, 3)
                    .unwrap()
                    .kernel_function();
                let xs: Vec<Complex64> = [p, q, r]
                    .iter()
                    .map(|z| match z {
                        CurvePoint::Affine { x, .. } => *x,
                        CurvePoint::Infinity(_) => unreachable!(),
                    })
                    .collect();
                let one = Complex64::new(1.0, 0.0);
                let mut want = vec![one];
                for x in &xs {
                    let mut next = vec![Complex64::new(0.0, 0.0); want.len() + 1];
                    for (i, c) in want.iter().enumerate() {
                        next[i] -= c * x;
                        next[i + 1] += c;
                    }
                    want = next;
                }
                want.push(Complex64::new(0.0, 0.0));
                let piv = *want
                    .iter()
                    .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                    .unwrap();
                let scale = got
                    .iter()
                    .zip(&want)
                    .map(|(g, w)| (g, w / piv))
                    .find(|(_, w)| w.norm() > 0.5)
                    .map(|(g, w)| g / w)
                    .unwrap();
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w / piv * scale).norm() < 1e-6);
                }
            }
        }
    }

    /// Residual zeros of a real `F = P + q y` in `L(3H)` vanishing on the real
    /// points `g`; `P` has free `x^2, x^3` coefficients and `p0, p1` solved.
    fn residual_zeros(
        curve: &RealHyperellipticCurve,
        g: [CurvePoint; 2],
        rng: &mut ChaCha8Rng,
    ) -> Vec<CurvePoint> {
        let [(x1, y1), (x2, y2)] = g.map(|p| match p {
            CurvePoint::Affine { x, y } => (x.re, y.re),
            CurvePoint::Infinity(_) => unreachable!(),
        });
        let (p2, p3, q) = (
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(0.5..2.0),
        );
        let rhs1 = -(p2 * x1 * x1 + p3 * x1 * x1 * x1 + q * y1);
        let rhs2 = -(p2 * x2 * x2 + p3 * x2 * x2 * x2 + q * y2);
        let p1 = (rhs1 - rhs2) / (x1 - x2);
        let p0 = rhs1 - p1 * x1;
        let mut zeros = zeros_of_function(curve, &[p0, p1, p2, p3], &[q]);
        for gp in g {
            let (idx, _) = zeros
                .iter()
                .enumerate()
                .min_by(|a, b| {
                    curve
                        .distance(a.1, &gp)
                        .total_cmp(&curve.distance(b.1, &gp))
                })
                .unwrap();
            zeros.remove(idx);
        }
        zeros
    }

    #[test]
    fn signature_is_an_equivalence_invariant() {
        use crate::divisors::{is_real, signature};
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for curve in fixtures::all() {
            let n = curve.fixed_circles().len();
            let mut checked = 0;
            while checked < 100 {
                let g = [0; 2].map(|_| {
                    let c = rng.random_range(0..n);
                    curve.sample(Region::FixedCircle(c), &mut rng).unwrap()
                });
                let d = residual_zeros(&curve, g, &mut rng);
                let d2 = residual_zeros(&curve, g, &mut rng);
                let (Ok(d), Ok(d2)) = (
                    Divisor::from_points(&curve, &d),
                    Divisor::from_points(&curve, &d2),
                ) else {
                    continue;
                };
                let (Ok(true), Ok(true)) = (is_real(&curve, &d), is_real(&curve, &d2)) else {
                    continue;
                };
                let Ok(v) = is_linearly_equivalent(&curve, &d, &d2) else {
                    continue;
                };
                assert!(v.equivalent);
                assert_eq!(
                    signature(&curve, &d).unwrap(),
                    signature(&curve, &d2).unwrap()
                );
                checked += 1;
            }
        }
    }

    #[test]
    fn distinct_weierstrass_points_inequivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for curve in fixtures::all() {
            for i in 0..6 {
                for j in 0..6 {
                    if i == j {
                        continue;
                    }
                    let q = curve.sample(Region::Generic, &mut rng).unwrap();
                    let q2 = curve.sample(Region::Generic, &mut rng).unwrap();
                    let d =
                        Divisor::from_points(&curve, &[curve.weierstrass_point(i), q, q2]).unwrap();
                    let d2 =
                        Divisor::from_points(&curve, &[curve.weierstrass_point(j), q, q2]).unwrap();
                    assert!(!is_linearly_equivalent(&curve, &d, &d2).unwrap().equivalent);
                }
            }
        }
    }

    #[test]
    fn degree_errors() {
        let curve = fixtures::c1();
        let w = curve.weierstrass_point(0);
        let d2 = Divisor::from_entries(&curve, [(w, 2)]).unwrap();
        let d3 = Divisor::from_entries(&curve, [(w, 3)]).unwrap();
        let d5 = Divisor::from_entries(&curve, [(w, 5)]).unwrap();
        assert_eq!(
            is_linearly_equivalent(&curve, &d2, &d3).unwrap_err(),
            LabError::DegreeMismatch(2, 3)
        );
        assert_eq!(
            is_linearly_equivalent(&curve, &d5, &d5).unwrap_err(),
            LabError::DegreeTooLarge(5)
        );
        assert!(
            is_linearly_equivalent(&curve, &Divisor::zero(), &Divisor::zero())
                .unwrap()
                .equivalent
        );
    }

    #[test]
    fn repeated_generic_point_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let curve = fixtures::c2();
        for _ in 0..20 {
            let p = curve.sample(Region::Generic, &mut rng).unwrap();
            let q = curve.sample(Region::Generic, &mut rng).unwrap();
            // 2p ~ H only when p is a Weierstrass point
            let d = Divisor::from_entries(&curve, [(p, 2)]).unwrap();
            let d2 = Divisor::from_points(&curve, &[q, iota(&q)]).unwrap();
            let v = is_linearly_equivalent(&curve, &d, &d2).unwrap();
            assert!(!v.equivalent && !v.jittered && !v.class_perturbed);
            // A + 2B is equivalent to itself; the system carries double points
            let a = curve.sample(Region::Generic, &mut rng).unwrap();
            let d = Divisor::from_entries(&curve, [(a, 1), (p, 2)]).unwrap();
            let v = is_linearly_equivalent(&curve, &d, &d).unwrap();
            assert!(v.equivalent && !v.jittered);
        }
    }

    #[test]
    fn double_zero_of_a_function_is_a_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for curve in fixtures::all() {
            for _ in 0..20 {
                // F = P + y with F(p) = F'(p) = 0 along the curve
                let p = curve.sample(Region::Generic, &mut rng).unwrap();
                let CurvePoint::Affine { x: x0, y: y0 } = p else {
                    unreachable!()
                };
                let dy = poly::eval(&poly::derivative(curve.coeffs()), x0) / (y0 * 2.0);
                let (p2, p3) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
                // P(x0) = -y0 and P'(x0) = -y'(x0) fix p0 and p1
                let p1 = -(x0 * 2.0 * p2 + x0 * x0 * 3.0 * p3 + dy);
                let p0 = -(x0 * x0 * p2 + x0 * x0 * x0 * p3 + y0) - p1 * x0;
                let coeffs = [p0, p1, Complex64::new(p2, 0.0), Complex64::new(p3, 0.0)];
                let eval_p = |x: Complex64| {
                    coeffs
                        .iter()
                        .rev()
                        .fold(Complex64::new(0.0, 0.0), |acc, c| acc * x + c)
                };
                // remaining zeros: roots of (P^2 - f) / (x - x0)^2
                let mut others: Vec<CurvePoint> = Vec::new();
                let sq: Vec<Complex64> = {
                    let mut out = [Complex64::new(0.0, 0.0); 7];
                    for (i, a) in coeffs.iter().enumerate() {
                        for (j, b) in coeffs.iter().enumerate() {
                            out[i + j] += a * b;
                        }
                    }
                    out.iter().zip(curve.coeffs()).map(|(s, f)| s - f).collect()
                };
                // deflate the double root twice
                let mut q = sq.clone();
                for _ in 0..2 {
                    let n = q.len() - 1;
                    let mut quot = vec![Complex64::new(0.0, 0.0); n];
                    let mut carry = Complex64::new(0.0, 0.0);
                    for i in (0..n).rev() {
                        carry = q[i + 1] + carry * x0;
                        quot[i] = carry;
                    }
                    q = quot;
                }
                for x in complex_roots(&q) {
                    others.push(CurvePoint::affine(x, -eval_p(x)));
                }
                let mut pts = vec![p, p];
                pts.extend(others);
                let v = in_linear_system(&curve, &pts, 3).unwrap();
                assert!(v.equivalent, "{v:?}");
                assert!(!v.jittered);
                pts[1] = curve.sample(Region::Generic, &mut rng).unwrap();
                assert!(!in_linear_system(&curve, &pts, 3).unwrap().equivalent);
            }
        }
    }

    /// Roots of a complex polynomial through the companion matrix.
    fn complex_roots(c: &[Complex64]) -> Vec<Complex64> {
        let n = c.len() - 1;
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..n {
            m[(i, n - 1)] = -c[i] / c[n];
        }
        m.eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|| {
                m.schur()
                    .eigenvalues()
                    .expect("complex Schur form")
                    .iter()
                    .copied()
                    .collect()
            })
    }

    #[test]
    fn infinity_rows() {
        let curve = fixtures::c3();
        use crate::curve::Branch;
        let fibre = [
            CurvePoint::Infinity(Branch::Plus),
            CurvePoint::Infinity(Branch::Minus),
        ];
        assert!(in_linear_system(&curve, &fibre, 1).unwrap().equivalent);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = curve.sample(Region::Generic, &mut rng).unwrap();
        let pts = [fibre[0], fibre[1], p, iota(&p)];
        assert!(in_linear_system(&curve, &pts, 2).unwrap().equivalent);
        let pts = [
            fibre[0],
            p,
            iota(&p),
            curve.sample(Region::Generic, &mut rng).unwrap(),
        ];
        assert!(!in_linear_system(&curve, &pts, 2).unwrap().equivalent);
    }

    #[test]
    fn torsion_counts() {
        let expect = [4, 4, 8, 16];
        for (curve, want) in fixtures::all().iter().zip(expect) {
            let classes = two_torsion(curve).unwrap();
            assert_eq!(classes.len(), 16);
            assert_eq!(real_two_torsion_count(curve).unwrap(), want);
            for c in &classes {
                let image = c.tau_image(curve);
                assert_eq!(image == *c, c.is_real);
                assert_eq!(image.tau_image(curve), *c);
            }
        }
    }

    #[test]
    fn doubling_and_distinctness() {
        for curve in fixtures::all() {
            let classes = two_torsion(&curve).unwrap();
            for c in &classes {
                let v = c.doubling(&curve).unwrap();
                assert!(v.equivalent && v.gap >= MIN_DECISION_GAP);
            }
            let nontrivial = &classes[1..];
            for (a, ca) in nontrivial.iter().enumerate() {
                for cb in &nontrivial[a + 1..] {
                    let v = is_linearly_equivalent(
                        &curve,
                        &ca.representative(&curve),
                        &cb.representative(&curve),
                    )
                    .unwrap();
                    assert!(!v.equivalent && v.gap >= MIN_DECISION_GAP);
                }
            }
        }
    }
}
