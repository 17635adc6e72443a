//! Real genus-2 hyperelliptic curves `y^2 = f(x)` with `deg f = 6`.
//!
//! The real structure is `tau(x, y) = (conj x, s * conj y)` for a lift sign
//! `s`, and the hyperelliptic involution is `iota(x, y) = (x, -y)`. The two
//! points at infinity are labelled by the limit of `y / x^3`, which is
//! `+sqrt(a6)` on the `+` branch (principal complex square root).

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::poly;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Multiplier applied to the equality tolerance for separation and
/// degeneracy gates.
pub const GATE_FACTOR: f64 = 1e3;
/// Default radius of the complex disk used for generic sampling.
pub const GENERIC_RADIUS: f64 = 5.0;
pub const GENUS: u32 = 2;

/// Sign of the antiholomorphic lift `y -> s * conj(y)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum LiftSign {
    Plus,
    Minus,
}

impl LiftSign {
    pub fn value(self) -> f64 {
        match self {
            LiftSign::Plus => 1.0,
            LiftSign::Minus => -1.0,
        }
    }
}

impl TryFrom<i8> for LiftSign {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(LiftSign::Plus),
            -1 => Ok(LiftSign::Minus),
            other => Err(format!("lift_sign must be 1 or -1, got {other}")),
        }
    }
}

impl From<LiftSign> for i8 {
    fn from(s: LiftSign) -> i8 {
        match s {
            LiftSign::Plus => 1,
            LiftSign::Minus => -1,
        }
    }
}

/// Label of a point at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn flip(self) -> Branch {
        match self {
            Branch::Plus => Branch::Minus,
            Branch::Minus => Branch::Plus,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CurvePoint {
    Affine { x: Complex64, y: Complex64 },
    Infinity(Branch),
}

impl CurvePoint {
    pub fn affine(x: Complex64, y: Complex64) -> Self {
        CurvePoint::Affine { x, y }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, CurvePoint::Infinity(_))
    }

    /// Sort key `(Re x, Im x, Re y, Im y)`; infinity sorts last, `+` first.
    pub fn sort_key(&self) -> [f64; 4] {
        match *self {
            CurvePoint::Affine { x, y } => [x.re, x.im, y.re, y.im],
            CurvePoint::Infinity(b) => [f64::INFINITY, 0.0, -b.value(), 0.0],
        }
    }
}

impl fmt::Display for CurvePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurvePoint::Affine { x, y } => write!(f, "({x}, {y})"),
            CurvePoint::Infinity(Branch::Plus) => write!(f, "inf+"),
            CurvePoint::Infinity(Branch::Minus) => write!(f, "inf-"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Involution {
    Tau,
    Iota,
    TauIota,
}

/// A branch point `(x, 0)` together with the index of its `tau`-image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeierstrassPoint {
    pub x: Complex64,
    pub partner: usize,
}

impl WeierstrassPoint {
    pub fn is_real(&self, index: usize) -> bool {
        self.partner == index
    }
}

/// An x-support on the real projective line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Support {
    /// `lo <= x <= hi`.
    Bounded {
        lo: f64,
        hi: f64,
    },
    /// `x >= lo` or `x <= hi`, closed up through both points at infinity.
    ThroughInfinity {
        lo: f64,
        hi: f64,
    },
    WholeLine,
}

impl Support {
    pub fn contains(&self, x: f64, slack: f64) -> bool {
        match *self {
            Support::Bounded { lo, hi } => x >= lo - slack && x <= hi + slack,
            Support::ThroughInfinity { lo, hi } => x >= lo - slack || x <= hi + slack,
            Support::WholeLine => true,
        }
    }

    pub fn contains_infinity(&self) -> bool {
        !matches!(self, Support::Bounded { .. })
    }

    /// Uniform in `x` on bounded supports, uniform in `atan x` otherwise.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Support::Bounded { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Support::ThroughInfinity { lo, hi } => {
                let a = lo.atan();
                let b = hi.atan() + PI;
                (a + (b - a) * rng.random::<f64>()).tan()
            }
            Support::WholeLine => (PI * (rng.random::<f64>() - 0.5)).tan(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedCircle {
    pub index: usize,
    pub support: Support,
}

/// Locus where `tau = iota`: real `x` over which the fibre is swapped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntiRealComponent {
    pub index: usize,
    pub support: Support,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "region", content = "index", rename_all = "snake_case")]
pub enum Region {
    FixedCircle(usize),
    AntiReal(usize),
    Generic,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::FixedCircle(i) => write!(f, "fixed_circle({i})"),
            Region::AntiReal(i) => write!(f, "anti_real({i})"),
            Region::Generic => write!(f, "generic"),
        }
    }
}

/// Topological type `(n, a)` of the real curve plus `m`, half the number of
/// real Weierstrass points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TopologicalType {
    pub n: u32,
    pub a: u32,
    pub m: u32,
}

impl TopologicalType {
    /// Constraints every real curve of genus `g` satisfies.
    pub fn satisfies_constraints(&self, g: u32) -> bool {
        let (n, a) = (self.n, self.a);
        let range = n <= g + 1;
        let extremes = (n != 0 || a == 1) && (n != g + 1 || a == 0);
        let parity = a != 0 || n % 2 == (g + 1) % 2;
        range && extremes && parity
    }
}

impl fmt::Display for TopologicalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.a)
    }
}

/// On-disk curve record: `{"coeffs":[a0..a6], "lift_sign":1, "tol":1e-9}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub coeffs: Vec<f64>,
    #[serde(default = "default_lift")]
    pub lift_sign: LiftSign,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_lift() -> LiftSign {
    LiftSign::Plus
}

fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}

impl CurveSpec {
    /// SHA-256 of the canonical JSON serialization.
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("curve spec serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn build(&self) -> Result<RealHyperellipticCurve> {
        if self.coeffs.len() != 7 {
            return Err(LabError::Invalid(format!(
                "expected 7 coefficients, got {}",
                self.coeffs.len()
            )));
        }
        let mut c = [0.0; 7];
        c.copy_from_slice(&self.coeffs);
        build_curve(c, self.lift_sign, self.tol)
    }
}

#[derive(Clone, Debug)]
pub struct RealHyperellipticCurve {
    coeffs: [f64; 7],
    lift: LiftSign,
    tol: f64,
    weierstrass: Vec<WeierstrassPoint>,
    real_roots: Vec<f64>,
    circles: Vec<FixedCircle>,
    antireal: Vec<AntiRealComponent>,
}

/// Validate the sextic, find and pair its roots, and decompose the real
/// line into fixed circles and anti-real components.
pub fn build_curve(coeffs: [f64; 7], lift: LiftSign, tol: f64) -> Result<RealHyperellipticCurve> {
    for (i, c) in coeffs.iter().enumerate() {
        if !c.is_finite() {
            return Err(LabError::NonRealCoefficient { index: i });
        }
    }
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(LabError::InvalidTolerance(tol));
    }
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if coeffs[6] == 0.0 || coeffs[6].abs() <= 1e-14 * scale {
        return Err(LabError::DegreeError);
    }
    let roots = poly::roots(&coeffs);
    if roots.len() != 6 {
        return Err(LabError::DegreeError);
    }
    let gate = GATE_FACTOR * tol;
    for i in 0..6 {
        for j in i + 1..6 {
            let (a, b) = (roots[i], roots[j]);
            if (a - b).norm() <= gate * (1.0 + a.norm().max(b.norm())) {
                return Err(LabError::NotSquarefree(a.to_string(), b.to_string()));
            }
        }
    }

    let mut real_roots = Vec::new();
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for z in roots {
        if z.im.abs() <= gate * (1.0 + z.norm()) {
            real_roots.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    if upper.len() != lower.len() {
        return Err(LabError::Invalid(
            "roots are not closed under conjugation".into(),
        ));
    }
    real_roots.sort_by(f64::total_cmp);
    upper.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let mut weierstrass: Vec<WeierstrassPoint> = real_roots
        .iter()
        .enumerate()
        .map(|(i, &r)| WeierstrassPoint {
            x: Complex64::new(r, 0.0),
            partner: i,
        })
        .collect();
    for z in upper {
        let (k, best) = lower
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (w - z.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if best > gate * (1.0 + z.norm()) {
            return Err(LabError::Invalid(
                "roots are not closed under conjugation".into(),
            ));
        }
        lower.remove(k);
        let i = weierstrass.len();
        // Store the exact conjugate so the pairing is bitwise symmetric.
        weierstrass.push(WeierstrassPoint {
            x: z,
            partner: i + 1,
        });
        weierstrass.push(WeierstrassPoint {
            x: z.conj(),
            partner: i,
        });
    }

    let sigma = lift.value();
    let lead_sign = coeffs[6].signum();
    let mut supports: Vec<(Support, f64)> = Vec::new();
    if real_roots.is_empty() {
        supports.push((Support::WholeLine, sigma * lead_sign));
    } else {
        for w in real_roots.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let s = sigma * poly::eval_real(&coeffs, mid).signum();
            supports.push((Support::Bounded { lo: w[0], hi: w[1] }, s));
        }
        let lo = *real_roots.last().unwrap();
        let hi = real_roots[0];
        supports.push((Support::ThroughInfinity { lo, hi }, sigma * lead_sign));
    }
    let mut circles = Vec::new();
    let mut antireal = Vec::new();
    for (support, s) in supports {
        if s > 0.0 {
            circles.push(FixedCircle {
                index: circles.len(),
                support,
            });
        } else {
            antireal.push(AntiRealComponent {
                index: antireal.len(),
                support,
            });
        }
    }

    Ok(RealHyperellipticCurve {
        coeffs,
        lift,
        tol,
        weierstrass,
        real_roots,
        circles,
        antireal,
    })
}

impl RealHyperellipticCurve {
    pub fn coeffs(&self) -> &[f64; 7] {
        &self.coeffs
    }

    pub fn lift_sign(&self) -> LiftSign {
        self.lift
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    /// Gate used for separation and degeneracy decisions (`1e3 * tol`).
    pub fn gate_tolerance(&self) -> f64 {
        GATE_FACTOR * self.tol
    }

    pub fn spec(&self) -> CurveSpec {
        CurveSpec {
            coeffs: self.coeffs.to_vec(),
            lift_sign: self.lift,
            tol: self.tol,
        }
    }

    /// Weierstrass points: real roots ascending, then conjugate pairs
    /// (upper half-plane member first) adjacent.
    pub fn weierstrass(&self) -> &[WeierstrassPoint] {
        &self.weierstrass
    }

    pub fn weierstrass_point(&self, i: usize) -> CurvePoint {
        CurvePoint::affine(self.weierstrass[i].x, Complex64::new(0.0, 0.0))
    }

    pub fn real_roots(&self) -> &[f64] {
        &self.real_roots
    }

    pub fn fixed_circles(&self) -> &[FixedCircle] {
        &self.circles
    }

    pub fn antireal_components(&self) -> &[AntiRealComponent] {
        &self.antireal
    }

    pub fn fixed_and_antireal_components(&self) -> (Vec<FixedCircle>, Vec<AntiRealComponent>) {
        (self.circles.clone(), self.antireal.clone())
    }

    pub fn f(&self, x: Complex64) -> Complex64 {
        poly::eval(&self.coeffs, x)
    }

    /// `sqrt(a6)`, the asymptotic value of `y / x^3` on the `+` branch.
    pub fn infinity_slope(&self) -> Complex64 {
        Complex64::new(self.coeffs[6], 0.0).sqrt()
    }

    pub fn classify(&self) -> Result<TopologicalType> {
        let m = (self.real_roots.len() / 2) as u32;
        let n = if m > 0 {
            m
        } else if self.circles.is_empty() {
            return Err(LabError::EmptyRealLocus);
        } else {
            1
        };
        debug_assert_eq!(n as usize, self.circles.len());
        let a = match (m, n) {
            (0, _) => 0,
            (_, 3) => 0,
            _ => 1,
        };
        Ok(TopologicalType { n, a, m })
    }

    /// Residual `|y^2 - f(x)| / (1 + |f(x)|)`; zero at infinity.
    pub fn residual(&self, p: &CurvePoint) -> f64 {
        match *p {
            CurvePoint::Affine { x, y } => {
                let fx = self.f(x);
                (y * y - fx).norm() / (1.0 + fx.norm())
            }
            CurvePoint::Infinity(_) => 0.0,
        }
    }

    pub fn check_on_curve(&self, p: &CurvePoint) -> Result<()> {
        let residual = self.residual(p);
        if residual.is_finite() && residual <= self.gate_tolerance() {
            Ok(())
        } else {
            Err(LabError::OffCurve { residual })
        }
    }

    /// The point over `x` whose `y` is `sign * sqrt(f(x))` (principal root).
    pub fn point_at(&self, x: Complex64, sign: f64) -> CurvePoint {
        CurvePoint::affine(x, self.f(x).sqrt() * sign)
    }

    pub fn involute(&self, p: &CurvePoint, which: Involution) -> Result<CurvePoint> {
        self.check_on_curve(p)?;
        Ok(self.apply(p, which))
    }

    /// Involution without the on-curve check.
    pub(crate) fn apply(&self, p: &CurvePoint, which: Involution) -> CurvePoint {
        match which {
            Involution::Tau => self.tau(p),
            Involution::Iota => iota(p),
            Involution::TauIota => self.tau(&iota(p)),
        }
    }

    pub(crate) fn tau(&self, p: &CurvePoint) -> CurvePoint {
        let sigma = self.lift.value();
        match *p {
            CurvePoint::Affine { x, y } => CurvePoint::affine(x.conj(), y.conj() * sigma),
            CurvePoint::Infinity(b) => {
                // conj(b * sqrt(a6)) = b * sqrt(a6) when a6 > 0, its negative otherwise
                let keep = (self.coeffs[6] > 0.0) == (self.lift == LiftSign::Plus);
                CurvePoint::Infinity(if keep { b } else { b.flip() })
            }
        }
    }

    /// Relative componentwise distance; infinite between an affine point
    /// and a point at infinity or between the two infinite points.
    pub fn distance(&self, p: &CurvePoint, q: &CurvePoint) -> f64 {
        match (*p, *q) {
            (CurvePoint::Affine { x: x1, y: y1 }, CurvePoint::Affine { x: x2, y: y2 }) => {
                let dx = (x1 - x2).norm() / (1.0 + x1.norm().max(x2.norm()));
                let dy = (y1 - y2).norm() / (1.0 + y1.norm().max(y2.norm()));
                dx.max(dy)
            }
            (CurvePoint::Infinity(a), CurvePoint::Infinity(b)) if a == b => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn same_point(&self, p: &CurvePoint, q: &CurvePoint) -> bool {
        self.distance(p, q) <= self.tol
    }

    /// Index of a Weierstrass point within the gate tolerance of `p`.
    pub fn near_weierstrass(&self, p: &CurvePoint) -> Option<usize> {
        let gate = self.gate_tolerance();
        (0..self.weierstrass.len()).find(|&i| self.distance(p, &self.weierstrass_point(i)) <= gate)
    }

    pub fn locate(&self, p: &CurvePoint) -> Result<Region> {
        self.check_on_curve(p)?;
        let fixed = self.same_point(&self.tau(p), p);
        let anti = self.same_point(&self.tau(p), &iota(p));
        let (xr, slack) = match *p {
            CurvePoint::Affine { x, .. } => {
                if x.im.abs() > self.tol * (1.0 + x.norm()) {
                    return Ok(Region::Generic);
                }
                (Some(x.re), self.gate_tolerance() * (1.0 + x.norm()))
            }
            CurvePoint::Infinity(_) => (None, 0.0),
        };
        let hit = |s: &Support| match xr {
            Some(x) => s.contains(x, slack),
            None => s.contains_infinity(),
        };
        if fixed {
            if let Some(c) = self.circles.iter().find(|c| hit(&c.support)) {
                return Ok(Region::FixedCircle(c.index));
            }
        }
        if anti {
            if let Some(c) = self.antireal.iter().find(|c| hit(&c.support)) {
                return Ok(Region::AntiReal(c.index));
            }
        }
        Ok(Region::Generic)
    }

    /// Random point in a region, avoiding Weierstrass fibres. Generic points
    /// are drawn with `x` uniform in the disk of radius [`GENERIC_RADIUS`].
    pub fn sample<R: Rng + ?Sized>(&self, region: Region, rng: &mut R) -> Result<CurvePoint> {
        self.sample_with_radius(region, rng, GENERIC_RADIUS)
    }

    pub fn sample_with_radius<R: Rng + ?Sized>(
        &self,
        region: Region,
        rng: &mut R,
        radius: f64,
    ) -> Result<CurvePoint> {
        let support = match region {
            Region::FixedCircle(i) => Some(
                self.circles
                    .get(i)
                    .ok_or_else(|| LabError::EmptyRegion(region.to_string()))?
                    .support,
            ),
            Region::AntiReal(i) => Some(
                self.antireal
                    .get(i)
                    .ok_or_else(|| LabError::EmptyRegion(region.to_string()))?
                    .support,
            ),
            Region::Generic => None,
        };
        loop {
            let x = match support {
                Some(s) => Complex64::new(s.draw(rng), 0.0),
                None => {
                    let r = radius * rng.random::<f64>().sqrt();
                    let t = 2.0 * PI * rng.random::<f64>();
                    Complex64::from_polar(r, t)
                }
            };
            if !x.re.is_finite() || self.too_close_to_branch(x) {
                continue;
            }
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            return Ok(self.point_at(x, sign));
        }
    }

    fn too_close_to_branch(&self, x: Complex64) -> bool {
        let gate = self.gate_tolerance();
        self.weierstrass
            .iter()
            .any(|w| (w.x - x).norm() <= gate * (1.0 + x.norm()))
    }
}

/// The hyperelliptic involution.
pub fn iota(p: &CurvePoint) -> CurvePoint {
    match *p {
        CurvePoint::Affine { x, y } => CurvePoint::affine(x, -y),
        CurvePoint::Infinity(b) => CurvePoint::Infinity(b.flip()),
    }
}
