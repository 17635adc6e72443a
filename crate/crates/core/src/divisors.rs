//! Effective divisors, their reality, and the odd-circle signature that fixes
//! the topological type of the corresponding real line bundle.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::curve::{iota, Branch, CurvePoint, Involution, RealHyperellipticCurve, Region};
use crate::error::{LabError, Result};

/// A bit per fixed circle; serialized as an array of 0/1 and displayed as a
/// digit string such as `101`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CircleBits(pub Vec<bool>);

impl CircleBits {
    pub fn zeros(n: usize) -> Self {
        CircleBits(vec![false; n])
    }

    pub fn unit(n: usize, c: usize) -> Self {
        let mut b = Self::zeros(n);
        b.0[c] = true;
        b
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn parity(&self) -> u8 {
        (self.weight() % 2) as u8
    }

    pub fn xor(&self, other: &CircleBits) -> CircleBits {
        CircleBits(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }

    /// Indices of the set bits.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i)
    }
}

impl fmt::Display for CircleBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for CircleBits {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(LabError::Invalid(format!("bad bit {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(CircleBits)
    }
}

impl Serialize for CircleBits {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<u8> = self.0.iter().map(|&b| b as u8).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleBits {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<u8>::deserialize(d)?;
        v.into_iter()
            .map(|b| match b {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(serde::de::Error::custom("bits must be 0 or 1")),
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(CircleBits)
    }
}

/// Degree plus odd circles of a real line bundle.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LineBundleTopType {
    pub degree: i64,
    pub odd_circles: CircleBits,
}

impl LineBundleTopType {
    /// Degree and odd-circle count agree mod 2.
    pub fn is_consistent(&self) -> bool {
        self.degree.rem_euclid(2) as u8 == self.odd_circles.parity()
    }
}

/// All `2^(n-1)` topological types of real line bundles of degree `d` on a
/// curve with `n >= 1` fixed circles.
pub fn enumerate_line_bundle_types(n: usize, d: i64) -> Vec<LineBundleTopType> {
    let want = d.rem_euclid(2) as u8;
    (0..1u32 << n)
        .map(|mask| CircleBits((0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect()))
        .filter(|b| b.parity() == want)
        .map(|odd_circles| LineBundleTopType {
            degree: d,
            odd_circles,
        })
        .collect()
}

/// Effective divisor: points with positive multiplicities, merged up to the
/// curve's equality tolerance and kept in canonical order.
#[derive(Clone, Debug, PartialEq)]
pub struct Divisor {
    entries: Vec<(CurvePoint, u32)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DivisorTransform {
    Tau,
    Iota,
    /// Apply `iota` to the listed positions of [`Divisor::points`] only.
    IotaOnSubset(Vec<usize>),
}

impl Divisor {
    pub fn zero() -> Self {
        Divisor {
            entries: Vec::new(),
        }
    }

    pub fn from_points(curve: &RealHyperellipticCurve, points: &[CurvePoint]) -> Result<Self> {
        Self::from_entries(curve, points.iter().map(|&p| (p, 1)))
    }

    pub fn from_entries(
        curve: &RealHyperellipticCurve,
        entries: impl IntoIterator<Item = (CurvePoint, u32)>,
    ) -> Result<Self> {
        let mut merged: Vec<(CurvePoint, u32)> = Vec::new();
        for (p, k) in entries {
            if k == 0 {
                continue;
            }
            curve.check_on_curve(&p)?;
            match merged.iter_mut().find(|(q, _)| curve.same_point(q, &p)) {
                Some(e) => e.1 += k,
                None => merged.push((p, k)),
            }
        }
        merged.sort_by(|a, b| cmp_points(&a.0, &b.0));
        Ok(Divisor { entries: merged })
    }

    pub fn entries(&self) -> &[(CurvePoint, u32)] {
        &self.entries
    }

    /// Points repeated according to multiplicity, in canonical order.
    pub fn points(&self) -> Vec<CurvePoint> {
        self.entries
            .iter()
            .flat_map(|&(p, k)| std::iter::repeat_n(p, k as usize))
            .collect()
    }

    pub fn degree(&self) -> i64 {
        self.entries.iter().map(|&(_, k)| k as i64).sum()
    }

    pub fn plus(&self, curve: &RealHyperellipticCurve, other: &Divisor) -> Result<Divisor> {
        Self::from_entries(curve, self.entries.iter().chain(other.entries()).copied())
    }

    pub fn transform(
        &self,
        curve: &RealHyperellipticCurve,
        which: &DivisorTransform,
    ) -> Result<Divisor> {
        let pts = self.points();
        let mapped: Vec<CurvePoint> = match which {
            DivisorTransform::Tau => pts
                .iter()
                .map(|p| curve.involute(p, Involution::Tau))
                .collect::<Result<_>>()?,
            DivisorTransform::Iota => pts
                .iter()
                .map(|p| curve.involute(p, Involution::Iota))
                .collect::<Result<_>>()?,
            DivisorTransform::IotaOnSubset(idx) => {
                if let Some(&bad) = idx.iter().find(|&&i| i >= pts.len()) {
                    return Err(LabError::Invalid(format!(
                        "subset index {bad} out of range"
                    )));
                }
                pts.iter()
                    .enumerate()
                    .map(|(i, p)| {
                        curve.check_on_curve(p)?;
                        Ok(if idx.contains(&i) { iota(p) } else { *p })
                    })
                    .collect::<Result<_>>()?
            }
        };
        Self::from_points(curve, &mapped)
    }

    /// Multiset equality up to tolerance.
    pub fn same_as(&self, curve: &RealHyperellipticCurve, other: &Divisor) -> Result<bool> {
        if self.degree() != other.degree() {
            return Ok(false);
        }
        multiset_eq(curve, &self.points(), &other.points())
    }

    /// Some entry sits within the gate tolerance of a Weierstrass point.
    pub fn near_branch_point(&self, curve: &RealHyperellipticCurve) -> bool {
        self.entries
            .iter()
            .any(|(p, _)| curve.near_weierstrass(p).is_some())
    }

    pub fn to_literal(&self) -> Vec<PointLiteral> {
        self.entries
            .iter()
            .map(|&(p, mult)| match p {
                CurvePoint::Affine { x, y } => PointLiteral::Affine(AffineLiteral {
                    x: [x.re, x.im],
                    y: [y.re, y.im],
                    mult,
                }),
                CurvePoint::Infinity(inf) => PointLiteral::Infinity(InfinityLiteral { inf, mult }),
            })
            .collect()
    }

    pub fn from_literal(curve: &RealHyperellipticCurve, lits: &[PointLiteral]) -> Result<Divisor> {
        Self::from_entries(
            curve,
            lits.iter().map(|l| match *l {
                PointLiteral::Affine(AffineLiteral { x, y, mult }) => (
                    CurvePoint::affine(Complex64::new(x[0], x[1]), Complex64::new(y[0], y[1])),
                    mult,
                ),
                PointLiteral::Infinity(InfinityLiteral { inf, mult }) => {
                    (CurvePoint::Infinity(inf), mult)
                }
            }),
        )
    }
}

fn cmp_points(a: &CurvePoint, b: &CurvePoint) -> std::cmp::Ordering {
    let (ka, kb) = (a.sort_key(), b.sort_key());
    ka.iter()
        .zip(kb.iter())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Greedy nearest-neighbour matching of two point lists.
///
/// A match is rejected as ambiguous when a second, distinct candidate lies
/// within `10 * max(nearest, tol)` of the point being matched.
pub fn multiset_eq(
    curve: &RealHyperellipticCurve,
    a: &[CurvePoint],
    b: &[CurvePoint],
) -> Result<bool> {
    if a.len() != b.len() {
        return Ok(false);
    }
    let tol = curve.tolerance();
    let mut used = vec![false; b.len()];
    for p in a {
        let mut best: Option<(usize, f64)> = None;
        for (j, q) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = curve.distance(p, q);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        let Some((k, d1)) = best else {
            return Ok(false);
        };
        if d1 > tol {
            return Ok(false);
        }
        let d2 = b
            .iter()
            .enumerate()
            .filter(|&(j, q)| !used[j] && j != k && !curve.same_point(q, &b[k]))
            .map(|(_, q)| curve.distance(p, q))
            .fold(f64::INFINITY, f64::min);
        if d2 <= 10.0 * d1.max(tol) {
            return Err(LabError::AmbiguousMatch);
        }
        used[k] = true;
    }
    Ok(true)
}

pub fn is_real(curve: &RealHyperellipticCurve, d: &Divisor) -> Result<bool> {
    let image = d.transform(curve, &DivisorTransform::Tau)?;
    multiset_eq(curve, &image.points(), &d.points())
}

/// Odd-circle signature of a real divisor: bit `c` is the parity of the
/// number of points (with multiplicity) on fixed circle `c`.
pub fn signature(curve: &RealHyperellipticCurve, d: &Divisor) -> Result<LineBundleTopType> {
    if !is_real(curve, d)? {
        return Err(LabError::NotReal);
    }
    let mut counts = vec![0u32; curve.fixed_circles().len()];
    for (p, k) in d.entries() {
        if let Region::FixedCircle(c) = curve.locate(p)? {
            counts[c] += k;
        }
    }
    Ok(LineBundleTopType {
        degree: d.degree(),
        odd_circles: CircleBits(counts.iter().map(|c| c % 2 == 1).collect()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineLiteral {
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default = "one")]
    pub mult: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfinityLiteral {
    pub inf: Branch,
    #[serde(default = "one")]
    pub mult: u32,
}

/// JSON form of a divisor entry: `{"x":[re,im],"y":[re,im],"mult":k}` or
/// `{"inf":"+","mult":k}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointLiteral {
    Affine(AffineLiteral),
    Infinity(InfinityLiteral),
}

fn one() -> u32 {
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::Region;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reality_examples() {
        let curve = fixtures::c3();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let a = curve.sample(Region::FixedCircle(0), &mut rng).unwrap();
            let b = curve.sample(Region::Generic, &mut rng).unwrap();
            let tb = curve.involute(&b, Involution::Tau).unwrap();
            let d = Divisor::from_points(&curve, &[a, b, tb]).unwrap();
            assert!(is_real(&curve, &d).unwrap());

            // brute force: tau(D) = {a, tau b, iota b} differs from D = {a, b, iota tau b}
            let itb = iota(&tb);
            let d = Divisor::from_points(&curve, &[a, b, itb]).unwrap();
            let image: Vec<CurvePoint> = d.points().iter().map(|p| curve.tau(p)).collect();
            let brute = d
                .points()
                .iter()
                .all(|p| image.iter().any(|q| curve.same_point(p, q)));
            assert!(!brute);
            assert!(!is_real(&curve, &d).unwrap());
        }
        let w = curve.weierstrass_point(0);
        let d = Divisor::from_entries(&curve, [(w, 2)]).unwrap();
        assert_eq!(d.degree(), 2);
        assert!(is_real(&curve, &d).unwrap());
    }

    #[test]
    fn signature_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let curve = fixtures::c4();
        let pts: Vec<_> = (0..3)
            .map(|i| curve.sample(Region::FixedCircle(i), &mut rng).unwrap())
            .collect();
        let d = Divisor::from_points(&curve, &pts).unwrap();
        let s = signature(&curve, &d).unwrap();
        assert_eq!(s.degree, 3);
        assert_eq!(s.odd_circles.to_string(), "111");

        let curve = fixtures::c1();
        let a = curve.sample(Region::FixedCircle(0), &mut rng).unwrap();
        let b = curve.sample(Region::Generic, &mut rng).unwrap();
        let d = Divisor::from_points(&curve, &[a, b, curve.tau(&b)]).unwrap();
        let s = signature(&curve, &d).unwrap();
        assert_eq!((s.degree, s.odd_circles.to_string()), (3, "1".to_string()));

        let d = Divisor::from_points(&curve, &[a, b]).unwrap();
        assert_eq!(signature(&curve, &d).unwrap_err(), LabError::NotReal);
    }

    #[test]
    fn antireal_pairs_contribute_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let curve = fixtures::c4();
        let a = curve.sample(Region::FixedCircle(2), &mut rng).unwrap();
        let b = curve.sample(Region::AntiReal(1), &mut rng).unwrap();
        let d = Divisor::from_points(&curve, &[a, b, iota(&b)]).unwrap();
        assert_eq!(
            signature(&curve, &d).unwrap().odd_circles.to_string(),
            "001"
        );
    }

    #[test]
    fn enumerate_types() {
        let set = |n, d| {
            let mut v: Vec<String> = enumerate_line_bundle_types(n, d)
                .iter()
                .map(|t| t.odd_circles.to_string())
                .collect();
            v.sort();
            v
        };
        assert_eq!(set(3, 1), vec!["001", "010", "100", "111"]);
        assert_eq!(set(1, 0), vec!["0"]);
        assert_eq!(set(2, 1), vec!["01", "10"]);
        for n in 1..=3 {
            for d in -2..=3 {
                let all = enumerate_line_bundle_types(n, d);
                assert_eq!(all.len(), 1 << (n - 1));
                assert!(all.iter().all(LineBundleTopType::is_consistent));
            }
        }
    }

    #[test]
    fn transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let curve = fixtures::c2();
        let pts: Vec<_> = (0..3)
            .map(|_| curve.sample(Region::Generic, &mut rng).unwrap())
            .collect();
        let d = Divisor::from_points(&curve, &pts).unwrap();
        let tt = d
            .transform(&curve, &DivisorTransform::Tau)
            .unwrap()
            .transform(&curve, &DivisorTransform::Tau)
            .unwrap();
        assert!(tt.same_as(&curve, &d).unwrap());
        let i = d.transform(&curve, &DivisorTransform::Iota).unwrap();
        assert_eq!(i.degree(), d.degree());
        let partial = d
            .transform(&curve, &DivisorTransform::IotaOnSubset(vec![1, 2]))
            .unwrap();
        let back = partial.points();
        assert_eq!(back.len(), 3);
        assert!(matches!(
            d.transform(&curve, &DivisorTransform::IotaOnSubset(vec![7])),
            Err(LabError::Invalid(_))
        ));
    }

    #[test]
    fn iota_preserves_signature_of_real_divisors() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for curve in fixtures::all() {
            let n = curve.fixed_circles().len();
            for _ in 0..250 {
                let a = curve.sample(Region::FixedCircle(0), &mut rng).unwrap();
                let b = curve.sample(Region::FixedCircle(n - 1), &mut rng).unwrap();
                let g = curve.sample(Region::Generic, &mut rng).unwrap();
                let d = Divisor::from_points(&curve, &[a, b, g, curve.tau(&g)]).unwrap();
                let id = d.transform(&curve, &DivisorTransform::Iota).unwrap();
                assert_eq!(
                    signature(&curve, &d).unwrap(),
                    signature(&curve, &id).unwrap()
                );
                for p in [a, b] {
                    assert_eq!(curve.locate(&p).unwrap(), curve.locate(&iota(&p)).unwrap());
                }
            }
        }
    }

    #[test]
    fn ambiguous_match_detected() {
        let curve = fixtures::c4();
        let p = curve.point_at(c(0.5, 0.3), 1.0);
        let q = curve.point_at(c(0.5 + 3e-9, 0.3), 1.0);
        // q is a distinct point at a few tolerances from p
        assert!(!curve.same_point(&p, &q));
        let r = curve.point_at(c(2.5, 0.1), 1.0);
        let err = multiset_eq(&curve, &[p, r], &[q, p]).unwrap_err();
        assert_eq!(err, LabError::AmbiguousMatch);
        // repeated copies of one point are not ambiguous
        assert!(multiset_eq(&curve, &[p, p], &[p, p]).unwrap());
    }

    #[test]
    fn literal_roundtrip() {
        let curve = fixtures::c1();
        let json = r#"[{"x":[0,0],"y":[2.449489742783178,0],"mult":2},{"inf":"+"}]"#;
        let lits: Vec<PointLiteral> = serde_json::from_str(json).unwrap();
        let d = Divisor::from_literal(&curve, &lits).unwrap();
        assert_eq!(d.degree(), 3);
        let again = Divisor::from_literal(&curve, &d.to_literal()).unwrap();
        assert!(again.same_as(&curve, &d).unwrap());
        assert!(serde_json::from_str::<Vec<PointLiteral>>(r#"[{"inf":"+","bogus":1}]"#).is_err());
        let off = r#"[{"x":[0,0],"y":[1,0]}]"#;
        let lits: Vec<PointLiteral> = serde_json::from_str(off).unwrap();
        assert!(matches!(
            Divisor::from_literal(&curve, &lits),
            Err(LabError::OffCurve { .. })
        ));
    }

    #[test]
    fn bits_parse_and_print() {
        let b: CircleBits = "101".parse().unwrap();
        assert_eq!(b.weight(), 2);
        assert_eq!(b.xor(&CircleBits::unit(3, 0)).to_string(), "001");
        assert_eq!(serde_json::to_string(&b).unwrap(), "[1,0,1]");
        assert!("12".parse::<CircleBits>().is_err());
    }
}
