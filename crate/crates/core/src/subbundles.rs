//! Parity bookkeeping for the real maximal subbundles of a real rank-2
//! bundle with determinant `Lambda` of degree 1.
//!
//! A real divisor of the degree-3 system has `r_c` real points on circle `c`
//! with `r_c` congruent to `Lambda`'s bit on `c`; the subbundle through a real
//! point `p` on circle `c` differs from the base one by `odd(Lambda) + e_c`.

use serde::Serialize;

use crate::divisors::CircleBits;
use crate::error::{LabError, Result};

/// Real points per circle of a real degree-3 divisor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct CircleAssignment {
    pub counts: Vec<u32>,
    pub conjugate_pairs: u32,
}

impl CircleAssignment {
    /// Circle index of each real point, with repetition.
    pub fn circles(&self) -> Vec<usize> {
        self.counts
            .iter()
            .enumerate()
            .flat_map(|(c, &k)| std::iter::repeat_n(c, k as usize))
            .collect()
    }

    pub fn real_points(&self) -> u32 {
        self.counts.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubbundleTypeReport {
    pub assignment: CircleAssignment,
    /// The base type `0` followed by one type per real point.
    pub relative_types: Vec<CircleBits>,
    pub distinct_count: usize,
}

fn check_signature(n: usize, sig: &CircleBits) -> Result<()> {
    if n == 0 {
        return Err(LabError::Invalid(
            "at least one fixed circle is required".into(),
        ));
    }
    if sig.len() != n {
        return Err(LabError::SignatureLength {
            expected: n,
            got: sig.len(),
        });
    }
    if sig.parity() != 1 {
        return Err(LabError::BadParity);
    }
    Ok(())
}

/// Every per-circle count vector with total 1 or 3 whose parities match
/// `sig`; ordered by total, then lexicographically descending.
pub fn real_fiber_configs(n: usize, sig: &CircleBits) -> Result<Vec<CircleAssignment>> {
    check_signature(n, sig)?;
    let mut out = Vec::new();
    for total in [1u32, 3] {
        let mut found = Vec::new();
        let mut counts = vec![0u32; n];
        fill(&mut counts, 0, total, sig, &mut found);
        found.sort_by(|a: &Vec<u32>, b| b.cmp(a));
        out.extend(found.into_iter().map(|counts| CircleAssignment {
            counts,
            conjugate_pairs: (3 - total) / 2,
        }));
    }
    Ok(out)
}

fn fill(counts: &mut Vec<u32>, i: usize, left: u32, sig: &CircleBits, found: &mut Vec<Vec<u32>>) {
    if i == counts.len() {
        if left == 0 {
            found.push(counts.clone());
        }
        return;
    }
    let start = u32::from(sig.0[i]);
    for r in (start..=left).step_by(2) {
        counts[i] = r;
        fill(counts, i + 1, left - r, sig, found);
    }
    counts[i] = 0;
}

pub fn relative_types(
    n: usize,
    sig: &CircleBits,
    assignment: &CircleAssignment,
) -> Result<SubbundleTypeReport> {
    if !real_fiber_configs(n, sig)?.contains(assignment) {
        return Err(LabError::InvalidAssignment);
    }
    let mut types = vec![CircleBits::zeros(n)];
    types.extend(
        assignment
            .circles()
            .into_iter()
            .map(|c| sig.xor(&CircleBits::unit(n, c))),
    );
    let mut distinct = types.clone();
    distinct.sort_by_key(|b| b.to_string());
    distinct.dedup();
    Ok(SubbundleTypeReport {
        assignment: assignment.clone(),
        relative_types: types,
        distinct_count: distinct.len(),
    })
}

pub fn max_distinct_over_configs(n: usize, sig: &CircleBits) -> Result<usize> {
    real_fiber_configs(n, sig)?
        .iter()
        .map(|a| relative_types(n, sig, a).map(|r| r.distinct_count))
        .try_fold(0, |m, k| k.map(|k| m.max(k)))
}
