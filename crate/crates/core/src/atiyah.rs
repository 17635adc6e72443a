//! The four-member orbit of a degree-3 divisor `A + B + C` under even
//! `iota`-flips, and the count of its real members.
//!
//! Extension classes of a rank-2 degree-1 bundle by a degree-0 subbundle
//! correspond to degree-3 divisors; the four members of one orbit define
//! projectively equivalent bundles, and the real members count the real
//! degree-0 line subbundles of the generic bundle of the orbit.

use serde::Serialize;

use crate::curve::{iota, CurvePoint, RealHyperellipticCurve};
use crate::divisors::{
    is_real, signature, CircleBits, Divisor, DivisorTransform, LineBundleTopType,
};
use crate::error::{LabError, Result};

/// Flip sets producing the members from `A + B + C`, in order.
const FLIPS: [&[usize]; 4] = [&[], &[1, 2], &[0, 2], &[0, 1]];

#[derive(Clone, Debug)]
pub struct AtiyahOrbit {
    pub base: Divisor,
    /// `A+B+C, A+iB+iC, iA+B+iC, iA+iB+C`.
    pub members: [Divisor; 4],
    pub members_distinct: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitCase {
    /// `tau(D) = D`.
    RealBase,
    /// `tau` fixes one of `A, B, C` and carries the other two to the
    /// `iota`-images of each other's partners: `tau(D)` is member 1, 2 or 3.
    TauFixesOneSwapsRest,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyFlag {
    CoincidentMembers,
    WeierstrassPoint,
    IotaPairedPoints,
    NearTolerance,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitReport {
    pub projectively_real: bool,
    #[serde(rename = "case")]
    pub case_label: OrbitCase,
    /// Member equal to `tau(D)`, when there is one.
    pub matched_member: Option<usize>,
    #[serde(rename = "count")]
    pub real_member_count: usize,
    /// Which members are real.
    pub real_members: [bool; 4],
    #[serde(rename = "signature", serialize_with = "serialize_signature")]
    pub common_signature: Option<LineBundleTopType>,
    #[serde(rename = "flags")]
    pub degeneracy_flags: Vec<DegeneracyFlag>,
}

fn serialize_signature<S: serde::Serializer>(
    sig: &Option<LineBundleTopType>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match sig {
        Some(t) => t.odd_circles.serialize(s),
        None => s.serialize_none(),
    }
}

impl OrbitReport {
    pub fn is_degenerate(&self) -> bool {
        !self.degeneracy_flags.is_empty()
    }

    pub fn signature_bits(&self) -> Option<&CircleBits> {
        self.common_signature.as_ref().map(|t| &t.odd_circles)
    }
}

fn check_degree(d: &Divisor) -> Result<()> {
    if d.degree() != 3 {
        return Err(LabError::DegreeMismatch(d.degree(), 3));
    }
    Ok(())
}

pub fn orbit(curve: &RealHyperellipticCurve, d: &Divisor) -> Result<AtiyahOrbit> {
    check_degree(d)?;
    let members =
        FLIPS.map(|flip| d.transform(curve, &DivisorTransform::IotaOnSubset(flip.to_vec())));
    let [m0, m1, m2, m3] = members;
    let members = [m0?, m1?, m2?, m3?];
    let mut members_distinct = true;
    'outer: for i in 0..4 {
        for j in i + 1..4 {
            // an ambiguous comparison is as degenerate as a coincidence
            if members[i].same_as(curve, &members[j]).unwrap_or(true) {
                members_distinct = false;
                break 'outer;
            }
        }
    }
    Ok(AtiyahOrbit {
        base: d.clone(),
        members,
        members_distinct,
    })
}

fn flags(curve: &RealHyperellipticCurve, d: &Divisor, orbit: &AtiyahOrbit) -> Vec<DegeneracyFlag> {
    let mut out = Vec::new();
    if !orbit.members_distinct {
        out.push(DegeneracyFlag::CoincidentMembers);
    }
    if d.near_branch_point(curve) {
        out.push(DegeneracyFlag::WeierstrassPoint);
    }
    let pts = d.points();
    let gate = curve.gate_tolerance();
    let paired = (0..pts.len())
        .any(|i| (0..pts.len()).any(|j| i != j && curve.distance(&pts[j], &iota(&pts[i])) <= gate));
    if paired {
        out.push(DegeneracyFlag::IotaPairedPoints);
    }
    let tol = curve.tolerance();
    let mut all: Vec<CurvePoint> = pts.clone();
    all.extend(pts.iter().map(|p| curve.tau(p)));
    let near = (0..all.len()).any(|i| {
        (i + 1..all.len()).any(|j| {
            let dist = curve.distance(&all[i], &all[j]);
            dist > tol && dist <= gate
        })
    });
    if near {
        out.push(DegeneracyFlag::NearTolerance);
    }
    out
}

pub fn analyze(curve: &RealHyperellipticCurve, d: &Divisor) -> Result<OrbitReport> {
    let orb = orbit(curve, d)?;
    let image = d.transform(curve, &DivisorTransform::Tau)?;
    let mut matched_member = None;
    for (i, m) in orb.members.iter().enumerate() {
        if image.same_as(curve, m)? {
            matched_member = Some(i);
            break;
        }
    }
    let case_label = match matched_member {
        Some(0) => OrbitCase::RealBase,
        Some(_) => OrbitCase::TauFixesOneSwapsRest,
        None => OrbitCase::None,
    };
    let mut real_members = [false; 4];
    for (flag, m) in real_members.iter_mut().zip(&orb.members) {
        *flag = is_real(curve, m)?;
    }
    let mut common_signature: Option<LineBundleTopType> = None;
    for (m, _) in orb.members.iter().zip(real_members).filter(|(_, r)| *r) {
        let sig = signature(curve, m)?;
        match &common_signature {
            Some(s) if *s != sig => return Err(LabError::SignatureDisagreement),
            Some(_) => {}
            None => common_signature = Some(sig),
        }
    }
    Ok(OrbitReport {
        projectively_real: matched_member.is_some(),
        case_label,
        matched_member,
        real_member_count: real_members.iter().filter(|&&r| r).count(),
        real_members,
        common_signature,
        degeneracy_flags: flags(curve, d, &orb),
    })
}

/// A real degree-3 divisor is compatible with a degree-1 determinant type
/// exactly when their odd circles agree (the canonical class is even on
/// every circle).
pub fn matches_determinant(
    curve: &RealHyperellipticCurve,
    d: &Divisor,
    lambda_type: &LineBundleTopType,
) -> Result<bool> {
    Ok(signature(curve, d)?.odd_circles == lambda_type.odd_circles)
}

/// True when the curve has no anti-real locus.
pub fn antireal_obstruction(curve: &RealHyperellipticCurve) -> bool {
    curve.antireal_components().is_empty()
}
